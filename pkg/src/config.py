"""Application configuration using pydantic-settings."""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime settings with OPINION_LAB_* environment variable support."""

    model_config = SettingsConfigDict(
        env_prefix="OPINION_LAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Worker cap for engine-internal parallelism (speed only, never results)
    threads: int = 1

    # Defaults filled in by scenario validation
    default_dt: float = 0.05
    default_save_every: int = 1
    default_n_cells: int = 256
    default_histogram_bins: int = 40

    # Output
    output_format: str = "csv"
    log_level: str = "INFO"

    # Mean-field solver
    cfl_limit: float = 0.9
    mass_tolerance: float = 1e-12
    psi_tolerance: float = 1e-14

    @property
    def worker_count(self) -> int:
        """Get the effective number of workers (at least one)."""
        return max(1, self.threads)


settings = Settings()
