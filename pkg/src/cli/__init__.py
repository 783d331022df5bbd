# CLI commands module
from src.cli.algebra import run_group_sample, run_so_check
from src.cli.connection import run_factorize, run_norm, run_walker_check
from src.cli.gauss import run_gauss_verify
from src.cli.generators import run_classify, run_flat_gen, run_pair_gen
from src.cli.run import run
from src.cli.structures import run_structure_check

__all__ = [
    "run",
    "run_so_check",
    "run_group_sample",
    "run_structure_check",
    "run_factorize",
    "run_walker_check",
    "run_norm",
    "run_flat_gen",
    "run_pair_gen",
    "run_classify",
    "run_gauss_verify",
]
