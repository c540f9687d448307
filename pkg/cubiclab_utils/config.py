"""
Configuration for CubicLab commands

Defaults are merged with an optional YAML or JSON file. Values given on the
command line override both.
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from cubiclab_api.errors import ConfigError
from cubiclab_utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_SEED = 20190418

DEFAULT_CONFIG: Dict[str, Any] = {
    "seed": DEFAULT_SEED,
    # idempotent engine
    "n_starts": 64,
    "newton_tol": 1e-12,
    "max_iter": 100,
    "ascent_tol": 1e-7,
    "genericity_tol": 1e-8,
    # Peirce lab
    "cluster_rtol": 1e-6,
    "idempotent_tol": 1e-8,
    "fusion_samples": 100,
    "fusion_tol": 1e-9,
    "residual_samples": 1000,
    "residual_tol": 1e-9,
    "munzner_tol": 1e-8,
    # hessian / hyperbolicity
    "alpha": 1.0,
    "pairs": 100000,
    "chunk_size": 4096,
    "dirs": 1000,
    "delta": 0.1,
    "f5_points": 100,
    "f5_tol": 1e-6,
    "charpoly_points": 20,
    "gap_zero_tol": 1e-12,
    "gap_tol": 1e-8,
    "refine_starts": 16,
    "refine_sweeps": 200,
    "refine_step": 5e-2,
    # runtime
    "workers": 1,
    "log_level": "WARNING",
    "log_dir": None,
}


class ConfigManager:
    """Effective configuration of a run"""

    def __init__(self, config_file: Optional[str] = None):
        self.config_file = config_file
        self.config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """Load configuration from file"""
        config = dict(DEFAULT_CONFIG)
        if not self.config_file:
            return config

        path = Path(self.config_file)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")

        try:
            with open(path, "r", encoding="utf-8") as f:
                if path.suffix in (".yaml", ".yml"):
                    loaded = yaml.safe_load(f)
                else:
                    loaded = json.load(f)
        except (yaml.YAMLError, json.JSONDecodeError, OSError) as e:
            raise ConfigError(f"failed to load config file {path}: {e}")

        if loaded is None:
            return config
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a mapping")

        for key, value in loaded.items():
            if key not in DEFAULT_CONFIG:
                logger.warning(f"Ignoring unknown config key '{key}'")
                continue
            config[key] = value
        return config

    def get(self, key: str, default: Any = None) -> Any:
        return self.config.get(key, default)

    def override(self, **values) -> "ConfigManager":
        """Apply explicit values; None means 'not given'"""
        for key, value in values.items():
            if value is not None:
                self.config[key] = value
        return self

    def __getitem__(self, key: str) -> Any:
        return self.config[key]

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.config)
