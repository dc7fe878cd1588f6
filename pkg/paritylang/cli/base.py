"""Shared objects for CLI and basic CLI commands"""
import logging
import os
from dataclasses import dataclass
from functools import wraps
from pathlib import Path
from typing import Optional

import click
from click import UsageError
from pydantic import ValidationError

from paritylang import ui
from paritylang.exceptions import (
    AutomatonValidationError,
    NoSettingsFoundError,
    PolicyError,
    UnconvergedError,
)
from paritylang.fixpoint import SolverMode, SolverPolicy
from paritylang.logs import get_module_logger, install_colouredlogs
from paritylang.persistence import ParityLangSettings, ParityLangSettingsFromFile

logger = get_module_logger("paritylang")


def configure_logging(verbose):
    loglevel = logging.INFO
    if verbose == 0:
        loglevel = logging.INFO
    if verbose >= 1:
        loglevel = logging.DEBUG

    install_colouredlogs(level=loglevel)
    logging.debug(
        f"Set loglevel "
        f"to {logging.getLevelName(logging.getLogger().getEffectiveLevel())}"
    )


@dataclass
class ParityLangContext:
    current_dir: Path

    def load_settings(self) -> ParityLangSettings:
        """Load settings from current dir, or defaults if there is no settings file

        Raises
        ------
        click.UsageError
            If the settings file cannot be read
        """
        return load_settings(folder=self.current_dir)


def get_context() -> ParityLangContext:
    return ParityLangContext(current_dir=Path(os.getcwd()))


def load_settings(folder) -> ParityLangSettings:
    """Load settings from given folder

    Returns
    -------
    ParityLangSettings
        ParityLangSettingsFromFile if there is a settings file, default settings
        otherwise

    Raises
    ------
    click.UsageError
    """
    settings_path = ParityLangSettingsFromFile.get_default_file(folder)
    logger.debug(f"Reading settings from {settings_path}")
    try:
        return ParityLangSettingsFromFile.init_from_file(settings_path)
    except NoSettingsFoundError as e:
        logger.debug(f"{e}. Using default settings")
        return ParityLangSettings()
    except ValidationError as e:
        raise UsageError(f"Invalid settings in '{settings_path}': {e}") from e


def solver_policy(
    settings: ParityLangSettings,
    tolerance: Optional[float] = None,
    max_iterations: Optional[int] = None,
    exact: bool = False,
) -> SolverPolicy:
    """Policy from settings, with command line values taking precedence

    Raises
    ------
    PolicyError
        If the resulting policy is invalid
    """
    values = settings.solver.model_dump()
    if exact:
        values.update(mode=SolverMode.exact_finite, tolerance=0.0)
    elif tolerance is not None:
        values["tolerance"] = tolerance
    if max_iterations is not None:
        values["max_iterations"] = max_iterations
    try:
        return SolverPolicy(**values)
    except ValidationError as e:
        raise PolicyError(f"Invalid solver options: {e}") from e


def handle_paritylang_exceptions(func):
    """Decorator for handling paritylang exceptions more usefully than just raising

    Policy problems become usage errors. For non-convergence the last iterate is
    printed before the error is passed on.
    """

    @wraps(func)
    def with_handling(*args, **kwargs):
        try:
            func(*args, **kwargs)
        except PolicyError as e:
            logger.error(e)
            raise click.UsageError(str(e)) from e
        except UnconvergedError as e:
            for line in ui.unconverged_lines(e.last_iterate):
                click.echo(line)
            raise
        except AutomatonValidationError as e:
            click.echo(ui.violation_table(e.violations), err=True)
            raise

    return with_handling


def paritylang_command(**kwargs):
    """Combines decorators used for all click functions inside a ClickCommandGroup
    Identical to

    @click.command(**kwargs)
    @click.pass_obj
    @handle_paritylang_exceptions

    Just to prevent duplicated code
    """

    def decorated(func):
        return click.command(**kwargs)(
            click.pass_obj(handle_paritylang_exceptions(func))
        )

    return decorated


def tolerance_option(func):
    return click.option(
        "--tol",
        "tolerance",
        type=float,
        default=None,
        help="Stop interval-vector iteration once a step is smaller than this",
    )(func)


def max_iterations_option(func):
    return click.option(
        "--max-iters",
        "max_iterations",
        type=int,
        default=None,
        help="Give up on a fixpoint after this many Kleene steps",
    )(func)


def start_option(func):
    return click.option(
        "--start",
        type=str,
        default=None,
        help="Start in this state instead of the initial distribution",
    )(func)
