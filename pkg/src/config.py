from pydantic_settings import BaseSettings
from typing import Optional

class Settings(BaseSettings):
    # Output
    output_root: str = "runs"

    # Logging
    log_level: str = "INFO"

    # Sample sweeps
    workers: int = 4
    seed: int = 20240517

    # Eigenpair cache (disabled when unset)
    basis_cache_dir: Optional[str] = None

    class Config:
        env_file = ".env"
        env_prefix = "RADIALWAVE_"
        case_sensitive = False

settings = Settings()
