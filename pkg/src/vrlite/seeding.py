"""Named random streams derived from one user-facing seed.

Every run owns a single integer seed; each consumer of randomness gets
its own generator derived from (seed, stream kind, index) so streams
never collide. Worker 0's optimizer stream is by construction the same
stream a sequential run uses, which is what makes a one-worker
synchronous run reproduce the sequential trajectory exactly.
"""

from __future__ import annotations

import numpy as np

_OPTIMIZER = 0
_SHARD = 1
_SCHEDULER = 2


def optimizer_rng(seed: int, worker: int = 0) -> np.random.Generator:
    """Stream for an optimizer loop; one per worker in distributed runs."""
    return np.random.default_rng([seed, _OPTIMIZER, worker])


def shard_rng(seed: int) -> np.random.Generator:
    """Stream used only to permute the dataset before sharding."""
    return np.random.default_rng([seed, _SHARD, 0])


def scheduler_rng(seed: int) -> np.random.Generator:
    """Stream driving the simulated transport's message interleaving."""
    return np.random.default_rng([seed, _SCHEDULER, 0])
