"""Commands for the nondeterministic and probabilistic queries"""
from typing import Optional

import click

from paritylang import nondet, prob, ui
from paritylang.cli.base import (
    ParityLangContext,
    max_iterations_option,
    paritylang_command,
    solver_policy,
    start_option,
    tolerance_option,
)
from paritylang.cli.click_parameter_types import (
    AutomatonFileParameterType,
    PartialParameterType,
    TreeFileParameterType,
)
from paritylang.exceptions import AutomatonValidationError
from paritylang.logs import get_module_logger
from paritylang.model import (
    Automaton,
    NodeGraph,
    PartialRun,
    PartialTree,
    complete_partition,
    require_valid,
    validate,
)

logger = get_module_logger("cli.queries")


@paritylang_command(name="check", short_help="Validate an automaton file")
@click.argument("automaton", type=AutomatonFileParameterType())
def cli_check(context: ParityLangContext, automaton: Automaton):
    """Check all automaton invariants. Violations are listed on stderr"""
    violations = validate(automaton)
    click.echo(f"valid {ui.format_bool(not violations)}")
    if violations:
        raise AutomatonValidationError(
            f"'{automaton.name}' has {len(violations)} violations",
            violations=violations,
        )
    logger.info(f"'{automaton.name}' is a valid {automaton.kind.value} automaton")


@paritylang_command(name="empty", short_help="Emptiness of a nondet automaton")
@click.argument("automaton", type=AutomatonFileParameterType())
@max_iterations_option
def cli_empty(
    context: ParityLangContext, automaton: Automaton, max_iterations: Optional[int]
):
    """Print whether the automaton accepts at least one tree"""
    policy = solver_policy(
        context.load_settings(), max_iterations=max_iterations, exact=True
    )
    click.echo(f"nonempty {ui.format_bool(nondet.nonempty(automaton, policy))}")


@paritylang_command(name="member", short_help="Membership of a regular tree")
@click.argument("automaton", type=AutomatonFileParameterType())
@click.argument("tree", type=TreeFileParameterType())
@max_iterations_option
def cli_member(
    context: ParityLangContext,
    automaton: Automaton,
    tree: NodeGraph,
    max_iterations: Optional[int],
):
    """Print whether a nondet automaton accepts the unfolding of a tree file"""
    policy = solver_policy(
        context.load_settings(), max_iterations=max_iterations, exact=True
    )
    click.echo(f"member {ui.format_bool(nondet.member(automaton, tree, policy))}")


@paritylang_command(name="accept-states", short_help="States with an accepting run")
@click.argument("automaton", type=AutomatonFileParameterType())
@max_iterations_option
def cli_accept_states(
    context: ParityLangContext, automaton: Automaton, max_iterations: Optional[int]
):
    """For each state, whether some accepting run starts there"""
    policy = solver_policy(
        context.load_settings(), max_iterations=max_iterations, exact=True
    )
    accepting = nondet.accepting_states(automaton, policy)
    for state in automaton.state_names:
        click.echo(f"{state} {ui.format_bool(state in accepting)}")


@paritylang_command(name="accprob", short_help="Acceptance probability per state")
@click.argument("automaton", type=AutomatonFileParameterType())
@tolerance_option
@max_iterations_option
def cli_accprob(
    context: ParityLangContext,
    automaton: Automaton,
    tolerance: Optional[float],
    max_iterations: Optional[int],
):
    """Probability of generating an accepting run, from each state"""
    policy = solver_policy(context.load_settings(), tolerance, max_iterations)
    for line in ui.vector_lines(prob.accprob(automaton, policy)):
        click.echo(line)


@paritylang_command(name="nodiv", short_help="Non-divergence probability per state")
@click.argument("automaton", type=AutomatonFileParameterType())
@click.option(
    "--steps",
    type=click.IntRange(min=0),
    default=None,
    help="Only look this many steps ahead instead of forever",
)
@tolerance_option
@max_iterations_option
def cli_nodiv(
    context: ParityLangContext,
    automaton: Automaton,
    steps: Optional[int],
    tolerance: Optional[float],
    max_iterations: Optional[int],
):
    """Probability of never diverging, from each state"""
    policy = solver_policy(context.load_settings(), tolerance, max_iterations)
    if steps is None:
        vector = prob.nodiv(automaton, policy)
    else:
        vector = prob.nodiv_k(automaton, steps)
    for line in ui.vector_lines(vector):
        click.echo(line)


@paritylang_command(name="cyl-tree", short_help="Probability of a tree cylinder")
@click.argument("automaton", type=AutomatonFileParameterType())
@click.argument("partial", type=PartialParameterType(PartialTree))
@start_option
@tolerance_option
@max_iterations_option
def cli_cyl_tree(
    context: ParityLangContext,
    automaton: Automaton,
    partial: PartialTree,
    start: Optional[str],
    tolerance: Optional[float],
    max_iterations: Optional[int],
):
    """Probability of generating an accepted tree that extends PARTIAL"""
    policy = solver_policy(context.load_settings(), tolerance, max_iterations)
    value = prob.tree_cylinder_prob(
        automaton, prob.MeasureQuery(partial, start=start), policy
    )
    click.echo(f"probability {ui.format_probability(value)}")


@paritylang_command(name="cyl-run", short_help="Probability of a run cylinder")
@click.argument("automaton", type=AutomatonFileParameterType())
@click.argument("partial", type=PartialParameterType(PartialRun))
@start_option
@tolerance_option
@max_iterations_option
def cli_cyl_run(
    context: ParityLangContext,
    automaton: Automaton,
    partial: PartialRun,
    start: Optional[str],
    tolerance: Optional[float],
    max_iterations: Optional[int],
):
    """Probability of the runs that extend PARTIAL"""
    policy = solver_policy(context.load_settings(), tolerance, max_iterations)
    value = prob.run_cylinder_prob(
        automaton, prob.MeasureQuery(partial, start=start), policy
    )
    click.echo(f"probability {ui.format_probability(value)}")


@paritylang_command(name="total", short_help="Probability of acceptance overall")
@click.argument("automaton", type=AutomatonFileParameterType())
@tolerance_option
@max_iterations_option
def cli_total(
    context: ParityLangContext,
    automaton: Automaton,
    tolerance: Optional[float],
    max_iterations: Optional[int],
):
    """Acceptance probability weighted by the initial distribution"""
    policy = solver_policy(context.load_settings(), tolerance, max_iterations)
    click.echo(f"total {ui.format_probability(prob.total_mass(automaton, policy))}")


@paritylang_command(name="partition", short_help="Sum cylinders of a partition")
@click.argument("automaton", type=AutomatonFileParameterType())
@click.option(
    "--depth",
    type=click.IntRange(min=0),
    default=2,
    show_default=True,
    help="Depth of the '*' leaves in the partition",
)
@tolerance_option
@max_iterations_option
def cli_partition(
    context: ParityLangContext,
    automaton: Automaton,
    depth: int,
    tolerance: Optional[float],
    max_iterations: Optional[int],
):
    """Sum of the tree cylinder probabilities over all partial trees of the given
    depth, next to the total acceptance probability. The two should agree
    """
    require_valid(automaton)
    policy = solver_policy(context.load_settings(), tolerance, max_iterations)
    cells = complete_partition(automaton.alphabet, depth)
    logger.debug(f"Partition of depth {depth} has {len(cells)} cells")
    summed = sum(
        prob.tree_cylinder_prob(automaton, prob.MeasureQuery(x), policy)
        for x in cells
    )
    click.echo(f"cells {len(cells)}")
    click.echo(f"sum {ui.format_probability(summed)}")
    click.echo(f"total {ui.format_probability(prob.total_mass(automaton, policy))}")
