"""Shared domain types: weight-entry distributions, model specification,
dense matrices with text I/O, and a sign/log-magnitude scalar for values
that overflow plain floats."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PermlabError",
    "ParseError",
    "ShapeError",
    "SizeLimitError",
    "DomainError",
    "ScaledValue",
    "DistributionSpec",
    "ModelSpec",
    "DenseMatrix",
    "parse_matrix",
    "write_matrix",
    "distribution_moments",
]


class PermlabError(Exception):
    """Base class for errors raised by this package."""


class ParseError(PermlabError, ValueError):
    """Malformed text input (matrix files, distribution strings, config)."""


class ShapeError(PermlabError, ValueError):
    """Input has inconsistent or non-square dimensions."""


class SizeLimitError(PermlabError, ValueError):
    """Problem size exceeds an algorithm's hard guard."""


class DomainError(PermlabError, ValueError):
    """A formula's hypothesis is not satisfied by the given parameters."""


@dataclass(frozen=True)
class ScaledValue:
    """Scalar stored as a sign and the natural log of its magnitude.

    Represents exactly zero when ``is_zero`` is set, otherwise
    ``sign * exp(log_mag)``. Zero is a distinct flag rather than
    ``log_mag = -inf`` so that products and ratios of nonzero values never
    produce NaNs. Multiplication adds log magnitudes; division subtracts
    them, which keeps ratios of astronomically large values exact.
    """

    is_zero: bool
    log_mag: float
    sign: int

    def __post_init__(self) -> None:
        if self.is_zero:
            if self.log_mag != 0.0 or self.sign != 1:
                raise ValueError("zero ScaledValue must have log_mag=0.0, sign=1")
        else:
            if self.sign not in (-1, 1):
                raise ValueError(f"sign must be -1 or +1, got {self.sign}")
            if not math.isfinite(self.log_mag):
                raise ValueError(f"log_mag must be finite, got {self.log_mag}")

    @staticmethod
    def zero() -> "ScaledValue":
        return ScaledValue(True, 0.0, 1)

    @staticmethod
    def from_float(x: float) -> "ScaledValue":
        x = float(x)
        if x == 0.0:
            return ScaledValue.zero()
        if not math.isfinite(x):
            raise ValueError(f"cannot represent non-finite value {x}")
        return ScaledValue(False, math.log(abs(x)), 1 if x > 0 else -1)

    @staticmethod
    def from_log(log_mag: float, sign: int = 1) -> "ScaledValue":
        return ScaledValue(False, float(log_mag), sign)

    def to_float(self) -> float:
        """Decimal value; overflows to +-inf outside float range."""
        if self.is_zero:
            return 0.0
        try:
            mag = math.exp(self.log_mag)
        except OverflowError:
            mag = math.inf
        return self.sign * mag

    def scaled_by_log(self, log_factor: float) -> "ScaledValue":
        """Multiply by exp(log_factor), staying in log space."""
        if self.is_zero:
            return self
        return ScaledValue(False, self.log_mag + log_factor, self.sign)

    def __mul__(self, other: "ScaledValue") -> "ScaledValue":
        if not isinstance(other, ScaledValue):
            return NotImplemented
        if self.is_zero or other.is_zero:
            return ScaledValue.zero()
        return ScaledValue(False, self.log_mag + other.log_mag, self.sign * other.sign)

    def __truediv__(self, other: "ScaledValue") -> "ScaledValue":
        if not isinstance(other, ScaledValue):
            return NotImplemented
        if other.is_zero:
            raise ZeroDivisionError("division by zero ScaledValue")
        if self.is_zero:
            return ScaledValue.zero()
        return ScaledValue(False, self.log_mag - other.log_mag, self.sign * other.sign)

    def __repr__(self) -> str:
        if self.is_zero:
            return "ScaledValue(0)"
        s = "-" if self.sign < 0 else ""
        return f"ScaledValue({s}exp({self.log_mag!r}))"


_DIST_KINDS = ("constant", "uniform", "exponential", "lognormal")

# CLI/file spelling of each family.
_DIST_TAGS = {
    "constant": "const",
    "uniform": "uniform",
    "exponential": "exp",
    "lognormal": "lognormal",
}
_TAG_TO_KIND = {v: k for k, v in _DIST_TAGS.items()}


@dataclass(frozen=True)
class DistributionSpec:
    """Law of a single weight entry Z.

    Restricted to four families that are positive almost surely and have
    closed-form mean ``nu = E Z`` and second moment ``delta = E Z^2``:

        constant c        (c > 0)      nu = c            delta = c^2
        uniform a,b       (0 < a < b)  nu = (a+b)/2      delta = (a^2+ab+b^2)/3
        exponential lam   (lam > 0)    nu = 1/lam        delta = 2/lam^2
        lognormal m,s     (s > 0)      nu = e^{m+s^2/2}  delta = e^{2m+2s^2}

    Sampling is factored as ``Z = scale * W`` where the law of W does not
    depend on the family's scale parameter (constant: W = 1 with scale c;
    exponential: W ~ Exp(1) by inverse CDF with scale 1/lam; lognormal:
    W = exp(s*N(0,1)) with scale e^m; uniform: scale 1, W the a..b draw
    itself). Trial ratios are computed from W alone, so they are
    bit-identical across pure rescalings of the entry law.
    """

    kind: str
    params: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind not in _DIST_KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        p = self.params
        if self.kind == "constant":
            if len(p) != 1 or not p[0] > 0:
                raise ValueError("constant distribution requires c > 0")
        elif self.kind == "uniform":
            if len(p) != 2 or not (0 < p[0] < p[1]):
                raise ValueError("uniform distribution requires 0 < a < b")
        elif self.kind == "exponential":
            if len(p) != 1 or not p[0] > 0:
                raise ValueError("exponential distribution requires rate > 0")
        else:  # lognormal
            if len(p) != 2 or not p[1] > 0:
                raise ValueError("lognormal distribution requires scale s > 0")
        for v in p:
            if not math.isfinite(v):
                raise ValueError(f"non-finite distribution parameter {v}")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def constant(c: float) -> "DistributionSpec":
        return DistributionSpec("constant", (c,))

    @staticmethod
    def uniform(a: float, b: float) -> "DistributionSpec":
        return DistributionSpec("uniform", (a, b))

    @staticmethod
    def exponential(rate: float) -> "DistributionSpec":
        return DistributionSpec("exponential", (rate,))

    @staticmethod
    def lognormal(m: float, s: float) -> "DistributionSpec":
        return DistributionSpec("lognormal", (m, s))

    @staticmethod
    def from_string(text: str) -> "DistributionSpec":
        """Parse ``const:c``, ``uniform:a,b``, ``exp:lambda``, ``lognormal:m,s``."""
        head, sep, tail = text.strip().partition(":")
        kind = _TAG_TO_KIND.get(head.strip())
        if not sep or kind is None:
            raise ParseError(f"bad distribution string {text!r}")
        try:
            params = tuple(float(tok) for tok in tail.split(","))
        except ValueError as exc:
            raise ParseError(f"bad distribution parameters in {text!r}") from exc
        try:
            return DistributionSpec(kind, params)
        except ValueError as exc:
            raise ParseError(str(exc)) from exc

    def spec_string(self) -> str:
        """Canonical ``kind:params`` form, inverse of ``from_string``."""
        params = ",".join(f"{p:.17g}" for p in self.params)
        return f"{_DIST_TAGS[self.kind]}:{params}"

    # -- moments -----------------------------------------------------------

    @property
    def nu(self) -> float:
        """Mean of a single entry."""
        p = self.params
        if self.kind == "constant":
            return p[0]
        if self.kind == "uniform":
            return (p[0] + p[1]) / 2.0
        if self.kind == "exponential":
            return 1.0 / p[0]
        return math.exp(p[0] + p[1] ** 2 / 2.0)

    @property
    def delta(self) -> float:
        """Second moment of a single entry."""
        p = self.params
        if self.kind == "constant":
            return p[0] ** 2
        if self.kind == "uniform":
            return (p[0] ** 2 + p[0] * p[1] + p[1] ** 2) / 3.0
        if self.kind == "exponential":
            return 2.0 / p[0] ** 2
        return math.exp(2.0 * p[0] + 2.0 * p[1] ** 2)

    @property
    def delta_over_nu2(self) -> float:
        """delta / nu^2, the shape factor entering all second-moment formulas.

        Closed form per family so that pure rescalings (constant c,
        exponential rate, lognormal location) give bit-identical values.
        """
        p = self.params
        if self.kind == "constant":
            return 1.0
        if self.kind == "uniform":
            return self.delta / self.nu ** 2
        if self.kind == "exponential":
            return 2.0
        return math.exp(p[1] ** 2)

    # -- scale/standard factorization ---------------------------------------

    @property
    def scale(self) -> float:
        """Scale factor in the Z = scale * W factorization."""
        p = self.params
        if self.kind == "constant":
            return p[0]
        if self.kind == "uniform":
            return 1.0
        if self.kind == "exponential":
            return 1.0 / p[0]
        return math.exp(p[0])

    @property
    def standard_mean(self) -> float:
        """Mean of W, i.e. nu / scale in exact closed form."""
        p = self.params
        if self.kind == "constant":
            return 1.0
        if self.kind == "uniform":
            return (p[0] + p[1]) / 2.0
        if self.kind == "exponential":
            return 1.0
        return math.exp(p[1] ** 2 / 2.0)

    def sample_standard(self, rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
        """Draw W with the documented, fixed method per family.

        constant: ones, no generator consumption. uniform: a + (b-a)*U with
        U from ``rng.random``. exponential: ``standard_exponential`` with
        ``method='inv'`` (inverse CDF). lognormal: exp(s * standard normal).
        """
        p = self.params
        if self.kind == "constant":
            return np.ones(shape)
        if self.kind == "uniform":
            return p[0] + (p[1] - p[0]) * rng.random(shape)
        if self.kind == "exponential":
            return rng.standard_exponential(shape, method="inv")
        return np.exp(p[1] * rng.standard_normal(shape))

    def sample(self, rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
        """Draw Z = scale * W."""
        return self.scale * self.sample_standard(rng, shape)


@dataclass(frozen=True)
class ModelSpec:
    """Dimension n, per-row nonzero counts r_1..r_n, and the entry law.

    Row i of the sampled 0-1 matrix carries exactly ``r[i]`` ones at
    uniformly random positions; rows are independent.
    """

    n: int
    r: tuple[int, ...]
    dist: DistributionSpec

    def __post_init__(self) -> None:
        object.__setattr__(self, "r", tuple(int(v) for v in self.r))
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if len(self.r) != self.n:
            raise ValueError(f"need {self.n} row counts, got {len(self.r)}")
        for v in self.r:
            if not 1 <= v <= self.n:
                raise ValueError(f"row count {v} outside 1..{self.n}")

    @staticmethod
    def homogeneous(n: int, r: int, dist: DistributionSpec) -> "ModelSpec":
        return ModelSpec(n, (r,) * n, dist)

    @property
    def r_low(self) -> int:
        return min(self.r)

    @property
    def r_up(self) -> int:
        return max(self.r)

    @property
    def is_homogeneous(self) -> bool:
        return self.r_low == self.r_up


class DenseMatrix:
    """Immutable n x n matrix of finite nonnegative reals."""

    __slots__ = ("_a",)

    def __init__(self, entries) -> None:
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ShapeError(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        if np.any(a < 0):
            raise ValueError("matrix entries must be nonnegative")
        a.setflags(write=False)
        self._a = a

    @property
    def n(self) -> int:
        return self._a.shape[0]

    @property
    def entries(self) -> np.ndarray:
        """Read-only float array view."""
        return self._a

    def __eq__(self, other) -> bool:
        if not isinstance(other, DenseMatrix):
            return NotImplemented
        return self._a.shape == other._a.shape and bool(np.array_equal(self._a, other._a))

    def __hash__(self) -> int:
        return hash((self._a.shape, self._a.tobytes()))

    def __repr__(self) -> str:
        return f"DenseMatrix(n={self.n})"


def parse_matrix(text: str) -> DenseMatrix:
    """Parse whitespace-separated decimal rows, one matrix row per line.

    Raises ShapeError for ragged or non-square input and ParseError for
    negative or non-numeric tokens.
    """
    rows: list[list[float]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        row = []
        for tok in line.split():
            try:
                v = float(tok)
            except ValueError as exc:
                raise ParseError(f"line {lineno}: bad token {tok!r}") from exc
            if not math.isfinite(v):
                raise ParseError(f"line {lineno}: non-finite entry {tok!r}")
            if v < 0:
                raise ParseError(f"line {lineno}: negative entry {tok!r}")
            row.append(v)
        rows.append(row)
    if not rows:
        raise ShapeError("empty matrix text")
    width = len(rows[0])
    for i, row in enumerate(rows, start=1):
        if len(row) != width:
            raise ShapeError(f"ragged input: row {i} has {len(row)} entries, expected {width}")
    if width != len(rows):
        raise ShapeError(f"non-square input: {len(rows)} rows of length {width}")
    return DenseMatrix(rows)


def write_matrix(m: DenseMatrix) -> str:
    """Text form of a matrix, 17 significant digits, round-trips exactly."""
    return "\n".join(" ".join(f"{v:.17g}" for v in row) for row in m.entries) + "\n"


def distribution_moments(dist: DistributionSpec) -> tuple[float, float]:
    """Closed-form (nu, delta) of the entry law."""
    return dist.nu, dist.delta
