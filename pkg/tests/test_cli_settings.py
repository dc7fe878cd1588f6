from pathlib import Path

from paritylang.cli.entrypoint import cli
from paritylang.persistence import (
    DEFAULT_SETTINGS_FILE_NAME,
    ParityLangSettings,
    ParityLangSettingsFromFile,
)
from tests.conftest import fixture_path


def test_settings_init(a_runner):
    response = a_runner.invoke(cli, args=["settings", "init"])
    assert response.exit_code == 0
    settings_path = a_runner.mock_context.current_dir / DEFAULT_SETTINGS_FILE_NAME
    assert settings_path.exists()

    # second init should not overwrite
    response = a_runner.invoke(cli, args=["settings", "init"])
    assert response.exit_code != 0
    assert "already exists" in response.output


def test_settings_show(a_runner):
    response = a_runner.invoke(cli, args=["settings", "show"])
    assert response.exit_code == 0
    assert "No settings file" in response.output
    assert "solver.tolerance" in response.output

    a_runner.invoke(cli, args=["settings", "init"])
    response = a_runner.invoke(cli, args=["settings", "show"])
    assert response.exit_code == 0
    assert "Reading settings from" in response.output
    assert "monte_carlo.samples" in response.output


def test_settings_file_is_used(a_runner):
    """A tiny iteration budget in the settings file makes accprob give up"""
    settings = ParityLangSettings()
    settings.solver = settings.solver.model_copy(update={"max_iterations": 3})
    ParityLangSettingsFromFile.init_from_settings(
        settings=settings,
        path=Path(a_runner.mock_context.current_dir) / DEFAULT_SETTINGS_FILE_NAME,
    ).save()

    response = a_runner.invoke(cli, args=["accprob", fixture_path("halfloop.aut")])
    assert response.exit_code != 0
    assert "UNCONVERGED x 0.125000000000" in response.output

    # command line wins
    response = a_runner.invoke(
        cli, args=["accprob", fixture_path("coin.aut"), "--max-iters", "100"]
    )
    assert response.exit_code == 0


def test_invalid_settings_file(a_runner):
    path = Path(a_runner.mock_context.current_dir) / DEFAULT_SETTINGS_FILE_NAME
    path.write_text('{"solver": {"tolerance": "lots"}}')
    response = a_runner.invoke(cli, args=["accprob", fixture_path("coin.aut")])
    assert response.exit_code == 2
    assert "Invalid settings" in response.output


def test_mock_settings(mock_settings, a_runner):
    mock_settings.settings = ParityLangSettings()
    mock_settings.settings.monte_carlo = mock_settings.settings.monte_carlo.model_copy(
        update={"samples": 10, "seed": 3}
    )
    response = a_runner.invoke(cli, args=["mc", fixture_path("coin.aut"), "*"])
    assert response.exit_code == 0
    assert "samples 10" in response.output
    assert "seed 3" in response.output
