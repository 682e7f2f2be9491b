"""Coordinate samplings with equal marginals and seeded random streams."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Iterator

import numpy as np


@dataclass(frozen=True)
class Sampling:
    """tau-nice sampling: a uniformly random subset of exactly tau of the n coordinates.

    Coordinates are 0-based. SingleUniform is the tau = 1 case.
    """

    n: int
    tau: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be positive, got {self.n}")
        if not 1 <= self.tau <= self.n:
            raise ValueError(f"tau must lie in [1, {self.n}], got {self.tau}")

    @classmethod
    def tau_nice(cls, n: int, tau: int) -> "Sampling":
        return cls(n, tau)

    @classmethod
    def single_uniform(cls, n: int) -> "Sampling":
        return cls(n, 1)

    @property
    def p0(self) -> float:
        return self.tau / self.n

    @property
    def is_serial(self) -> bool:
        return self.tau == 1

    @property
    def support_size(self) -> int:
        return comb(self.n, self.tau)

    @property
    def label(self) -> str:
        return "single_uniform" if self.tau == 1 else f"tau_nice({self.tau})"


def draw(s: Sampling, rng: np.random.Generator) -> np.ndarray:
    """Draw tau distinct coordinates, returned sorted."""
    if s.tau == s.n:
        return np.arange(s.n)
    return np.sort(rng.choice(s.n, size=s.tau, replace=False))


def probability_vector(s: Sampling) -> np.ndarray:
    return np.full(s.n, s.p0)


def enumerate_subsets(s: Sampling) -> Iterator[np.ndarray]:
    """Every size-tau subset, each with probability 1 / C(n, tau)."""
    for subset in itertools.combinations(range(s.n), s.tau):
        yield np.array(subset, dtype=int)


# ============================================================================
# Random streams
# ============================================================================


def make_rng(seed: int | np.random.SeedSequence | None) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    """Independent child seed sequences, one per replicate."""
    return np.random.SeedSequence(seed).spawn(count)


def spawn_streams(seed: int, count: int) -> list[np.random.Generator]:
    return [make_rng(child) for child in spawn_seeds(seed, count)]


def stream_provenance(seed: np.random.SeedSequence) -> str:
    """Reproducible text form of a seed sequence: entropy and spawn key."""
    key = ".".join(str(k) for k in seed.spawn_key) or "root"
    return f"{seed.entropy}:{key}"
