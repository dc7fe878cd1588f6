"""Commands for the independent oracles and Monte Carlo estimation"""
from typing import Optional

import click

from paritylang import oracles, ui
from paritylang.cli.base import ParityLangContext, paritylang_command, start_option
from paritylang.cli.click_parameter_types import (
    AutomatonFileParameterType,
    PartialParameterType,
    TreeFileParameterType,
)
from paritylang.logs import get_module_logger
from paritylang.model import Automaton, NodeGraph, PartialTree

logger = get_module_logger("cli.oracle")


@paritylang_command(name="oracle-bscc", short_help="Word acceptance via Markov chain")
@click.argument("automaton", type=AutomatonFileParameterType())
def cli_oracle_bscc(context: ParityLangContext, automaton: Automaton):
    """Acceptance probability of a word automaton from its bottom SCCs"""
    report = oracles.bscc_report(automaton)
    for component, accepting in zip(report.components, report.accepting):
        verdict = "accepting" if accepting else "rejecting"
        click.echo(f"bscc {','.join(component)} {verdict}")
    for line in ui.vector_lines(report.acceptance):
        click.echo(line)


@paritylang_command(name="oracle-member", short_help="Membership by brute force")
@click.argument("automaton", type=AutomatonFileParameterType())
@click.argument("tree", type=TreeFileParameterType())
def cli_oracle_member(
    context: ParityLangContext, automaton: Automaton, tree: NodeGraph
):
    """Membership by searching all positional runs. Small instances only"""
    verdict = oracles.positional_member(automaton, tree)
    click.echo(f"member {ui.format_bool(verdict)}")


@paritylang_command(name="mc", short_help="Monte Carlo estimate of a prefix")
@click.argument("automaton", type=AutomatonFileParameterType())
@click.argument("partial", type=PartialParameterType(PartialTree))
@click.option("--samples", type=click.IntRange(min=1), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--depth-cap", "depth_cap", type=click.IntRange(min=0), default=None)
@start_option
def cli_mc(
    context: ParityLangContext,
    automaton: Automaton,
    partial: PartialTree,
    samples: Optional[int],
    seed: Optional[int],
    depth_cap: Optional[int],
    start: Optional[str],
):
    """Estimate the probability of generating PARTIAL without diverging

    Acceptance is not sampled. Compare with cyl-tree only for automata whose
    acceptance probability equals the non-divergence probability.
    """
    settings = context.load_settings().monte_carlo
    estimate = oracles.monte_carlo_cylinder(
        automaton,
        partial,
        samples=settings.samples if samples is None else samples,
        seed=settings.seed if seed is None else seed,
        depth_cap=settings.depth_cap if depth_cap is None else depth_cap,
        start=start,
    )
    for line in ui.estimate_lines(estimate):
        click.echo(line)
