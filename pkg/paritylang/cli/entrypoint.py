"""Entrypoint for paritylang CLI command. All subcommands are connected here."""
import sys
from typing import Optional, Sequence

import click

from paritylang.cli.base import configure_logging, get_context
from paritylang.cli.oracle import cli_mc, cli_oracle_bscc, cli_oracle_member
from paritylang.cli.queries import (
    cli_accept_states,
    cli_accprob,
    cli_check,
    cli_cyl_run,
    cli_cyl_tree,
    cli_empty,
    cli_member,
    cli_nodiv,
    cli_partition,
    cli_total,
)
from paritylang.cli.settings import settings
from paritylang.exceptions import ParityLangError, PolicyError, UnconvergedError
from paritylang.logs import get_module_logger

logger = get_module_logger("entrypoint")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_UNCONVERGED = 3


@click.group()
@click.option("-v", "--verbose", count=True)
@click.pass_context
def cli(ctx, verbose):
    r"""Paritylang - Languages of parity tree automata

    Use the commands below with -h for more info
    """
    configure_logging(verbose)
    if ctx.obj is None:
        ctx.obj = get_context()


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run the cli on argv and map the outcome to an exit status

    0 on success, boolean answers included. 1 for usage errors, 2 for invalid
    input and 3 if a fixpoint did not converge.
    """
    try:
        cli.main(
            args=list(argv) if argv is not None else None,
            prog_name="paritylang",
            standalone_mode=False,
        )
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_USAGE
    except PolicyError as e:
        logger.error(e)
        return EXIT_USAGE
    except UnconvergedError as e:
        logger.error(e)
        return EXIT_UNCONVERGED
    except ParityLangError as e:
        # invalid models, oracle budgets, broken monotonicity
        logger.error(e)
        return EXIT_INVALID
    return EXIT_OK


def main():
    sys.exit(run())


cli.add_command(cli_check)
cli.add_command(cli_empty)
cli.add_command(cli_member)
cli.add_command(cli_accept_states)
cli.add_command(cli_accprob)
cli.add_command(cli_nodiv)
cli.add_command(cli_cyl_tree)
cli.add_command(cli_cyl_run)
cli.add_command(cli_total)
cli.add_command(cli_partition)
cli.add_command(cli_oracle_bscc)
cli.add_command(cli_oracle_member)
cli.add_command(cli_mc)
cli.add_command(settings)
