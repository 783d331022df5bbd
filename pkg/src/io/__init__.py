# IO module - config loading and report storage
from src.io.config_loader import load_config
from src.io.storage import ResultsStore, write_report

__all__ = ["load_config", "ResultsStore", "write_report"]
