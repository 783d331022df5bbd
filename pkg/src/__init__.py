"""NeutralTwistor package."""

from dotenv import load_dotenv

load_dotenv()

from src.domain.models import FlatFamilySpec, PairSpec, RunConfig, VerificationReport
from src.cli import run

__all__ = [
    "FlatFamilySpec",
    "PairSpec",
    "RunConfig",
    "VerificationReport",
    "run",
]
