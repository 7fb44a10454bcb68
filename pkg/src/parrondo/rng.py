"""Seeded random streams for reproducible replicas."""
from __future__ import annotations

import numpy as np

MAX_SEED = 2**64 - 1


class ReplicaStream:
    """
    Philox stream for one replica. The stream depends only on (seed, replica),
    so replicas can run in any order or in parallel.
    """

    def __init__(self, seed: int, replica: int = 0):
        if not 0 <= seed <= MAX_SEED:
            raise ValueError(f"Seed must be a 64-bit unsigned integer, got {seed}")
        if replica < 0:
            raise ValueError(f"Replica index must be nonnegative, got {replica}")
        self._seed = seed
        self._replica = replica
        sequence = np.random.SeedSequence(seed, spawn_key=(replica,))
        self._gen = np.random.Generator(np.random.Philox(sequence))

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def replica(self) -> int:
        return self._replica

    def players(self, size: int, N: int) -> np.ndarray:
        """0-based indices of the players chosen on `size` consecutive turns."""
        return self._gen.integers(0, N, size=size, dtype=np.int64)

    def uniforms(self, size: int) -> np.ndarray:
        return self._gen.random(size)

    def bits(self, size: int) -> np.ndarray:
        """Fair 0/1 draws, used for random initial configurations."""
        return self._gen.integers(0, 2, size=size, dtype=np.int8)
