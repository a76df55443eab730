"""
Toolkit configuration using pydantic-settings.

Reads defaults from environment variables (prefix ``ENTROPY_``) and a .env file.
Every numeric knob used by a computation lives here so that it can be
recorded in the artifacts it produces.
"""

from contextlib import contextmanager
from typing import Any, Iterator, List

from pydantic import BaseModel, ConfigDict, Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class RunConfig(BaseModel):
    """The knobs of one run, embedded verbatim in certificates."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    resolutions: List[int] = Field(default_factory=lambda: [2, 3, 4])
    n_max: int = 24
    lambda_tol: float = 1e-6
    measure_slack: float = 1e-9
    power_tol: float = 1e-12
    estimate_tol: float = 0.05
    seed: int = 0
    max_points: int = 20000
    max_stages: int = 8
    max_horizon: int = 10000


class Settings(BaseSettings):
    """Toolkit settings loaded from environment variables."""

    model_config = SettingsConfigDict(env_prefix="ENTROPY_", env_file=".env", extra="ignore")

    RESOLUTIONS: List[int] = [2, 3, 4]
    N_MAX: int = 24

    # Tolerances
    LAMBDA_TOL: float = 1e-6
    MEASURE_SLACK: float = 1e-9
    POWER_TOL: float = 1e-12
    ESTIMATE_TOL: float = 0.05

    # Sampling is always seeded
    SEED: int = 0

    # Construction budgets
    MAX_POINTS: int = 20000
    MAX_STAGES: int = 8
    MAX_HORIZON: int = 10000

    OUTPUT_DIR: str = "out"
    LOG_LEVEL: str = "INFO"

    @contextmanager
    def scoped(self) -> Iterator["Settings"]:
        """Restore every field on exit, so command-line overrides end with their command."""
        saved = self.model_dump()
        try:
            yield self
        finally:
            for key, value in saved.items():
                setattr(self, key, value)

    def run_config(self, **overrides: Any) -> RunConfig:
        """
        Build the RunConfig for one invocation.

        Args:
            **overrides: Values given on the command line; ``None`` means "use the default".

        Returns:
            A frozen RunConfig.
        """
        values = {
            "resolutions": list(self.RESOLUTIONS),
            "n_max": self.N_MAX,
            "lambda_tol": self.LAMBDA_TOL,
            "measure_slack": self.MEASURE_SLACK,
            "power_tol": self.POWER_TOL,
            "estimate_tol": self.ESTIMATE_TOL,
            "seed": self.SEED,
            "max_points": self.MAX_POINTS,
            "max_stages": self.MAX_STAGES,
            "max_horizon": self.MAX_HORIZON,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig(**values)


settings = Settings()
