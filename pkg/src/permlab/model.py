"""Sampling the row-constrained 0-1 matrix X, the weight matrix Z, and their
termwise product Y, plus exhaustive enumeration of the constraint class.

Reproducibility contract: every trial's generator is
``PCG64(SeedSequence(master_seed, spawn_key=(trial_index,)))``, a pure
function of the (master_seed, trial_index) pair. Within a trial the draw
order is fixed: row supports for rows 0..n-1 first (partial Fisher-Yates,
one ``integers`` call per swap), then the weight matrix W as a single
(n, n) block. Reproducibility is across runs on the same build; changing
generator or draw order is a breaking change.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import DenseMatrix, ModelSpec, SizeLimitError

__all__ = [
    "TrialSeed",
    "trial_rng",
    "sample_row_support",
    "sample_constrained_matrix",
    "enumerate_constraint_matrices",
    "constraint_class_size",
    "ENUMERATION_MAX_CLASS",
]

ENUMERATION_MAX_CLASS = 10**7


@dataclass(frozen=True)
class TrialSeed:
    """Addressing for one trial's random stream.

    Distinct (master_seed, trial_index) pairs yield independent-quality
    streams via the counter-style spawn-key derivation below.
    """

    master_seed: int
    trial_index: int

    def __post_init__(self) -> None:
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit nonnegative integer")
        if self.trial_index < 0:
            raise ValueError("trial_index must be nonnegative")


def trial_rng(seed: TrialSeed) -> np.random.Generator:
    """The documented per-trial generator, a pure function of the seed pair."""
    ss = np.random.SeedSequence(seed.master_seed, spawn_key=(seed.trial_index,))
    return np.random.Generator(np.random.PCG64(ss))


def sample_row_support(n: int, r: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Uniform r-subset of columns 0..n-1.

    Partial Fisher-Yates: swap a uniform pick from position i..n-1 into
    position i, for i < r; the first r entries are then a uniform subset.
    Returned sorted.
    """
    if not 1 <= r <= n:
        raise ValueError(f"r must be in 1..{n}, got {r}")
    arr = list(range(n))
    for i in range(r):
        j = int(rng.integers(i, n))
        arr[i], arr[j] = arr[j], arr[i]
    return tuple(sorted(arr[:r]))


def _sample_standard_realization(
    spec: ModelSpec, seed: TrialSeed
) -> tuple[np.ndarray, np.ndarray]:
    """Draw (X, W): the 0-1 support matrix and the unit-scale weight matrix."""
    rng = trial_rng(seed)
    n = spec.n
    x = np.zeros((n, n))
    for i in range(n):
        x[i, list(sample_row_support(n, spec.r[i], rng))] = 1.0
    w = spec.dist.sample_standard(rng, (n, n))
    return x, w


def sample_constrained_matrix(
    spec: ModelSpec, seed: TrialSeed
) -> tuple[DenseMatrix, DenseMatrix]:
    """One realization (X, Y): row i of X has exactly r_i ones, Z is i.i.d.
    from the entry law, and Y = X * Z termwise. Deterministic given seed."""
    x, w = _sample_standard_realization(spec, seed)
    y = x * (spec.dist.scale * w)
    return DenseMatrix(x), DenseMatrix(y)


def constraint_class_size(spec: ModelSpec) -> int:
    """Number of matrices in the constraint class, prod_i C(n, r_i)."""
    size = 1
    for ri in spec.r:
        size *= math.comb(spec.n, ri)
    return size


def enumerate_constraint_matrices(spec: ModelSpec):
    """Yield every 0-1 matrix with the given row counts exactly once.

    Lexicographic product of per-row support combinations. Guarded by the
    total class size.
    """
    size = constraint_class_size(spec)
    if size > ENUMERATION_MAX_CLASS:
        raise SizeLimitError(
            f"constraint class has {size} matrices, over the "
            f"{ENUMERATION_MAX_CLASS} enumeration guard"
        )
    n = spec.n
    per_row = [itertools.combinations(range(n), ri) for ri in spec.r]
    for supports in itertools.product(*per_row):
        x = np.zeros((n, n))
        for i, supp in enumerate(supports):
            x[i, list(supp)] = 1.0
        yield DenseMatrix(x)
