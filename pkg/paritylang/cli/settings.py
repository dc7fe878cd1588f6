import click

from paritylang import ui
from paritylang.cli.base import ParityLangContext
from paritylang.logs import get_module_logger
from paritylang.persistence import ParityLangSettingsFromFile

logger = get_module_logger("cli.settings")


@click.group()
@click.pass_obj
def settings(context: ParityLangContext):
    """Manage solver and Monte Carlo settings in the current dir"""


@click.command(short_help="Write default settings file", name="init")
@click.pass_obj
def cli_init(context: ParityLangContext):
    """Write default settings file in current dir"""
    settings_path = ParityLangSettingsFromFile.get_default_file(context.current_dir)
    if settings_path.exists():
        raise click.UsageError(f"'{settings_path}' already exists")
    logger.debug(f'Writing default settings to "{settings_path}"')
    click.echo("Writing default settings file to current dir")
    ParityLangSettingsFromFile(path=settings_path).save()


@click.command(short_help="Show effective settings", name="show")
@click.pass_obj
def cli_show(context: ParityLangContext):
    """Show the settings used by all commands run from current dir"""
    loaded = context.load_settings()
    if hasattr(loaded, "path"):
        click.echo(f"Reading settings from '{loaded.path}'")
    else:
        click.echo("No settings file, using defaults")
    click.echo(ui.settings_table(loaded))


settings.add_command(cli_init)
settings.add_command(cli_show)
