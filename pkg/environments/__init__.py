"""
Bandit environments: synthetic feedback, click-log replay and cascading clicks.
"""

from .base import BanditEnvironment
from .synthetic import (
    FeedbackForm,
    SyntheticFeedbackSpec,
    SyntheticEnvironment,
    generate_synthetic_spec,
    spec_from_click_log,
    expected_reward,
    synthetic_feedback,
)
from .replay import ReplayLog, ReplayEnvironment, click_window, replay_feedback
from .cascade import (
    CascadeSpec,
    CascadeEnvironment,
    generate_cascade_spec,
    cascade_step,
    cascade_expected_reward,
)
from .ingest import IngestError, ingest_features, ingest_log

__all__ = [
    "BanditEnvironment",
    "FeedbackForm",
    "SyntheticFeedbackSpec",
    "SyntheticEnvironment",
    "generate_synthetic_spec",
    "spec_from_click_log",
    "expected_reward",
    "synthetic_feedback",
    "ReplayLog",
    "ReplayEnvironment",
    "click_window",
    "replay_feedback",
    "CascadeSpec",
    "CascadeEnvironment",
    "generate_cascade_spec",
    "cascade_step",
    "cascade_expected_reward",
    "IngestError",
    "ingest_features",
    "ingest_log",
]
