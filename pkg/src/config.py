"""Read configurations from environment variables."""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime defaults for the solvers and the sweep harness.

    Every value can be overridden with a `TUNNELSPLIT_`-prefixed environment
    variable or a `.env` file.
    """

    guard_digits: int = Field(20, ge=1)
    bw_max_iterations: int = Field(10_000, ge=1)
    bw_damping: float = Field(1.0, gt=0.0, le=1.0)
    sweep_workers: int = Field(4, ge=1)
    log_level: str = "INFO"
    model_config = SettingsConfigDict(
        env_prefix="TUNNELSPLIT_", env_file=".env", env_file_encoding="utf-8"
    )


settings = Settings()
