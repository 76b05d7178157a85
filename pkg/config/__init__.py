"""
Experiment configuration package.
"""

from .settings import (
    ExperimentSettings,
    HYPERPARAMETER_KEYS,
    STANDALONE_MODES,
    build_settings,
    default_settings,
    load_settings,
    read_config_file,
)

__all__ = [
    "ExperimentSettings",
    "HYPERPARAMETER_KEYS",
    "STANDALONE_MODES",
    "build_settings",
    "default_settings",
    "load_settings",
    "read_config_file",
]
