import os
from dataclasses import dataclass
from typing import Optional


@dataclass
class Settings:
    # Tolerances
    TOL: float = float(os.getenv("NT_TOL", "1e-9"))
    FD_TOL: float = float(os.getenv("NT_FD_TOL", "1e-6"))
    FD_STEP: float = float(os.getenv("NT_FD_STEP", "1e-5"))

    # Sampling
    SEED: int = int(os.getenv("NT_SEED", "0"))
    SAMPLES: int = int(os.getenv("NT_SAMPLES", "100"))
    BOX: str = os.getenv("NT_BOX", "-1,1")
    VALIDATION_SAMPLES: int = int(os.getenv("NT_VALIDATION_SAMPLES", "1000"))

    # Frame integration
    MAX_STEP: float = float(os.getenv("NT_MAX_STEP", "1e-2"))

    # Runs
    WORKERS: int = int(os.getenv("NT_WORKERS", "4"))
    RESULTS_CSV: Optional[str] = os.getenv("NT_RESULTS_CSV")


settings = Settings()
