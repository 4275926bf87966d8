from .config import SCHEMA, ExperimentConfig, load_config, validate_config
from .main import main

__all__ = ["SCHEMA", "ExperimentConfig", "load_config", "main", "validate_config"]
