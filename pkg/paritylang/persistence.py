"""Settings that can be kept in a file in the working directory"""
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field

from paritylang.exceptions import NoSettingsFoundError
from paritylang.fixpoint import SolverPolicy
from paritylang.logs import get_module_logger

logger = get_module_logger("persistence")

DEFAULT_SETTINGS_FILE_NAME = "paritylang.json"


class MonteCarloSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    samples: int = Field(default=100_000, ge=1)
    seed: int = 0
    depth_cap: int = Field(default=30, ge=0)


class ParityLangSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    solver: SolverPolicy = SolverPolicy()
    monte_carlo: MonteCarloSettings = MonteCarloSettings()

    def save(self):
        """Dummy save to be able to call save on any settings"""
        logger.debug("Save() called on non-file settings. Ignoring")


class ParityLangSettingsFromFile(ParityLangSettings):
    """Loaded from a path and can be saved to that same path"""

    path: Path

    @classmethod
    def init_from_settings(cls, settings: ParityLangSettings, path: Path):
        """Convert regular settings into settings from file by adding a path"""
        return cls(**dict(settings), path=path)

    @classmethod
    def init_from_file(cls, file: Path):
        """Load settings from file

        Raises
        ------
        NoSettingsFoundError
            If file does not exist
        """
        try:
            with open(file) as f:
                settings = ParityLangSettings.model_validate_json(f.read())
        except FileNotFoundError as e:
            raise NoSettingsFoundError(f"No settings file found at '{file}'") from e
        return cls.init_from_settings(settings=settings, path=file)

    @staticmethod
    def get_default_file(folder: Path):
        """Get default full path to file given a folder"""
        return folder / DEFAULT_SETTINGS_FILE_NAME

    def save(self):
        with open(self.path, "w") as f:
            f.write(self.model_dump_json(indent=2, exclude={"path"}))
