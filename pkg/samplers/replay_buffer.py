"""
Clustered replay buffer for the actor-critic sampler.

Transitions are grouped with k-means (Euclidean, 10 iterations) on their
action bit-vectors. A batch mixes three tiers: a third drawn inside the
clusters in proportion to their sizes, a sixth from entries with extreme
surrogate or violation values, and uniform draws for the rest. Without
prioritization every draw is uniform.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass

import numpy as np
from sklearn.cluster import KMeans

logger = logging.getLogger(__name__)

EXTREME_SIGMAS = 2.0
KMEANS_ITERATIONS = 10


@dataclass(frozen=True)
class ReplayEntry:
    state: np.ndarray
    action: np.ndarray
    composite: float
    next_state: np.ndarray | None
    surrogate: float
    violation: float


def tier_targets(batch_size: int) -> tuple[int, int, int]:
    """(cluster, extreme, uniform) counts for a batch."""
    cluster = batch_size // 3
    extreme = batch_size // 6
    return cluster, extreme, batch_size - cluster - extreme


def proportional_allocation(sizes: np.ndarray, total: int) -> np.ndarray:
    """Split ``total`` draws over clusters by size, largest remainder first (ties to the lower cluster)."""
    sizes = np.asarray(sizes, dtype=np.float64)
    if total <= 0 or sizes.sum() <= 0:
        return np.zeros(sizes.size, dtype=np.int64)
    shares = total * sizes / sizes.sum()
    counts = np.floor(shares).astype(np.int64)
    order = np.argsort(-(shares - counts), kind="stable")
    counts[order[: total - int(counts.sum())]] += 1
    return counts


class ClusteredReplayBuffer:
    def __init__(self, capacity: int, n_clusters: int, rng: np.random.Generator, prioritized: bool = True):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.n_clusters = n_clusters
        self.rng = rng
        self.prioritized = prioritized
        self.entries: deque[ReplayEntry] = deque(maxlen=capacity)
        self.labels: np.ndarray | None = None
        self.last_tier_counts: tuple[int, int, int] = (0, 0, 0)

    def __len__(self) -> int:
        return len(self.entries)

    def push(self, entry: ReplayEntry) -> None:
        self.entries.append(entry)
        self.labels = None

    def recluster(self) -> None:
        if not self.entries:
            self.labels = None
            return
        actions = np.stack([np.asarray(e.action, dtype=np.float64) for e in self.entries])
        # more clusters than distinct points leaves empty clusters
        k = min(self.n_clusters, np.unique(actions, axis=0).shape[0])
        if k == 1:
            self.labels = np.zeros(len(self.entries), dtype=np.int64)
            return
        seed = int(self.rng.integers(0, 2**31 - 1))
        model = KMeans(n_clusters=k, n_init=1, max_iter=KMEANS_ITERATIONS, random_state=seed)
        self.labels = model.fit_predict(actions)

    def _extreme_indices(self) -> np.ndarray:
        u = np.array([e.surrogate for e in self.entries])
        c = np.array([e.violation for e in self.entries])
        mask = np.zeros(u.size, dtype=bool)
        for values in (u, c):
            sigma = values.std()
            if sigma > 0:
                mask |= np.abs(values - values.mean()) > EXTREME_SIGMAS * sigma
        return np.flatnonzero(mask)

    def _cluster_draws(self, count: int) -> list[int]:
        clusters, sizes = np.unique(self.labels, return_counts=True)
        picks: list[int] = []
        for label, quota in zip(clusters, proportional_allocation(sizes, count)):
            if quota:
                members = np.flatnonzero(self.labels == label)
                picks.extend(int(i) for i in self.rng.choice(members, size=int(quota)))
        return picks

    def sample_batch(self, batch_size: int) -> list[ReplayEntry]:
        n = len(self.entries)
        if n == 0 or batch_size <= 0:
            self.last_tier_counts = (0, 0, 0)
            return []
        if not self.prioritized:
            picks = self.rng.integers(0, n, size=batch_size)
            self.last_tier_counts = (0, 0, batch_size)
            return [self.entries[i] for i in picks]

        n_cluster, n_extreme, _ = tier_targets(batch_size)
        if self.labels is None or self.labels.size != n:
            self.recluster()

        picks = self._cluster_draws(n_cluster)
        got_cluster = len(picks)

        extremes = self._extreme_indices()
        if extremes.size and n_extreme:
            picks.extend(int(i) for i in self.rng.choice(extremes, size=n_extreme))
        got_extreme = len(picks) - got_cluster

        uniform = batch_size - len(picks)
        picks.extend(int(i) for i in self.rng.integers(0, n, size=uniform))
        self.last_tier_counts = (got_cluster, got_extreme, uniform)
        return [self.entries[i] for i in picks]
