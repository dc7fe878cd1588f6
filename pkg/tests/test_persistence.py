from pathlib import Path

import pytest

from paritylang.exceptions import NoSettingsFoundError
from paritylang.fixpoint import SolverMode
from paritylang.persistence import (
    DEFAULT_SETTINGS_FILE_NAME,
    ParityLangSettings,
    ParityLangSettingsFromFile,
)


def test_save_load_settings(tmpdir):
    settings = ParityLangSettings()
    settings.solver = settings.solver.model_copy(
        update={"tolerance": 1e-6, "mode": SolverMode.exact_finite}
    )
    path = ParityLangSettingsFromFile.get_default_file(Path(tmpdir))
    assert path.name == DEFAULT_SETTINGS_FILE_NAME
    ParityLangSettingsFromFile.init_from_settings(settings=settings, path=path).save()

    loaded = ParityLangSettingsFromFile.init_from_file(path)
    assert loaded.path == path
    assert loaded.solver == settings.solver
    assert loaded.monte_carlo == settings.monte_carlo


def test_load_missing_file(tmpdir):
    with pytest.raises(NoSettingsFoundError):
        ParityLangSettingsFromFile.init_from_file(Path(tmpdir) / "nothing.json")


def test_defaults():
    settings = ParityLangSettings()
    assert settings.solver.tolerance == 1e-9
    assert settings.solver.mode == SolverMode.tolerant_omega
    assert settings.monte_carlo.samples == 100_000
    assert settings.monte_carlo.depth_cap == 30
    settings.save()  # no file, nothing happens


def test_unknown_keys_are_refused():
    with pytest.raises(ValueError):
        ParityLangSettings.model_validate_json('{"solver": {"speed": "fast"}}')
