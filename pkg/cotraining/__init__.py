from cotraining.buffers import BuffersSnapshot, RecommendedEntry, SharedBuffers
from cotraining.demonstration import CoTrainer, DemonstrationStore, demonstration_loss, trigger_and_apply

__all__ = [
    "BuffersSnapshot",
    "RecommendedEntry",
    "SharedBuffers",
    "CoTrainer",
    "DemonstrationStore",
    "demonstration_loss",
    "trigger_and_apply",
]
