"""Closed-form moments of the scaled permanent under the row-constrained
model, together with the exact small-n oracles that validate them.

Notation used throughout: nu and delta are the mean and second moment of a
single weight entry, r_low/r_up the extreme row counts, and the "ratio"
always means E T^2 / mu^2 where T is the permanent of the sampled matrix
and mu its expectation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from .core import DistributionSpec, DomainError, ModelSpec, ScaledValue, SizeLimitError
from .model import constraint_class_size, ENUMERATION_MAX_CLASS

__all__ = [
    "subfactorial_b",
    "second_moment_series",
    "mu_n",
    "vdw_bound",
    "AlphaBeta",
    "alpha_beta",
    "second_moment_bounds",
    "exact_second_moment_homogeneous",
    "pair_moment",
    "brute_second_moment_pairs",
    "exact_moments_enumerate",
    "ConditionCheck",
    "condition_check",
    "MomentReport",
    "moment_report",
    "PAIRS_MAX_N",
    "ENUMERATE_MAX_N",
]

PAIRS_MAX_N = 7
ENUMERATE_MAX_N = 6


@lru_cache(maxsize=None)
def subfactorial_b(j: int) -> Fraction:
    """Exact truncated alternating exponential sum, sum_{l<=j} (-1)^l / l!.

    j! * b_j is the number of derangements of j elements.
    """
    if j < 0:
        raise ValueError(f"j must be nonnegative, got {j}")
    if j == 0:
        return Fraction(1)
    return subfactorial_b(j - 1) + Fraction((-1) ** j, math.factorial(j))


def second_moment_series(n: int, beta: float) -> float:
    """sum_{k=0}^{n} beta^k / k! * b_{n-k} for beta > 0.

    Every term is nonnegative (b_j >= 0), so the sum is accumulated from
    log-space terms with exact summation; the rational b factors are
    converted to float only at the final multiply.
    """
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    log_beta = math.log(beta)
    terms = []
    for k in range(n + 1):
        b = subfactorial_b(n - k)
        if b == 0:
            continue
        terms.append(math.exp(k * log_beta - math.lgamma(k + 1)) * float(b))
    return math.fsum(terms)


def mu_n(spec: ModelSpec) -> ScaledValue:
    """Expected permanent: prod_i r_i * nu^n * n! / n^n, in log space."""
    n = spec.n
    log_mu = math.fsum(
        [math.fsum(math.log(ri) for ri in spec.r),
         n * math.log(spec.dist.nu),
         math.lgamma(n + 1),
         -n * math.log(n)]
    )
    return ScaledValue.from_log(log_mu)


def vdw_bound(n: int, r: int) -> ScaledValue:
    """r^n * n! / n^n: the permanent lower bound for 0-1 matrices with r
    ones in every row and column. Equals mu_n for the homogeneous 0-1 spec.

    The sampled model constrains rows only, so this is a reference line,
    not a guaranteed bound for sampled matrices.
    """
    if not 1 <= r <= n:
        raise ValueError(f"r must be in 1..{n}, got {r}")
    return ScaledValue.from_log(n * math.log(r) + math.lgamma(n + 1) - n * math.log(n))


class AlphaBeta(NamedTuple):
    alpha_up: float
    beta_up: float
    alpha_low: float
    beta_low: float


def alpha_beta(spec: ModelSpec) -> AlphaBeta:
    """The four geometric factors entering the second-moment sandwich:

        alpha_up  = (n (r_up - 1) / (r_up (n - 1)))^n
        beta_up   = delta r_up (n - 1) / (nu^2 r_low (r_up - 1))
        alpha_low = (n (r_low - 1) / (r_low (n - 1)))^n
        beta_low  = delta r_low (n - 1) / (nu^2 r_up (r_low - 1))

    The alpha powers are evaluated as exp(n * log(.)). Requires n >= 2 and
    r_low >= 2; the formulas divide by r - 1.
    """
    n, rl, ru = spec.n, spec.r_low, spec.r_up
    if n < 2:
        raise DomainError(f"alpha/beta need n >= 2, got n={n}")
    if rl < 2:
        raise DomainError(f"alpha/beta need r_low >= 2, got r_low={rl}")
    q = spec.dist.delta_over_nu2
    alpha_up = math.exp(n * math.log(n * (ru - 1) / (ru * (n - 1))))
    beta_up = q * ru * (n - 1) / (rl * (ru - 1))
    alpha_low = math.exp(n * math.log(n * (rl - 1) / (rl * (n - 1))))
    beta_low = q * rl * (n - 1) / (ru * (rl - 1))
    return AlphaBeta(alpha_up, beta_up, alpha_low, beta_low)


def second_moment_bounds(spec: ModelSpec) -> tuple[float, float]:
    """Sandwich for E T^2 / mu^2:

        alpha_low e^{beta_low - 1} (1 - 2e/n^2)
            <= E T^2 / mu^2 <=
        alpha_up e^{beta_up - 1} (1 + 2e/n^2)

    Valid for all n large under the hypothesis r_low >= 6 delta / nu^2;
    small n may fall outside. Raises DomainError naming the failed
    hypothesis when it does not hold.
    """
    q = spec.dist.delta_over_nu2
    threshold = 6.0 * q
    if spec.r_low < threshold:
        raise DomainError(
            f"r_low >= 6*delta/nu^2 not met: r_low={spec.r_low} < {threshold:.17g}"
        )
    if spec.n < 2:
        raise DomainError(f"bounds need n >= 2, got n={spec.n}")
    ab = alpha_beta(spec)
    slack = 2.0 * math.e / spec.n**2
    lower = math.exp(math.log(ab.alpha_low) + ab.beta_low - 1.0) * (1.0 - slack)
    upper = math.exp(math.log(ab.alpha_up) + ab.beta_up - 1.0) * (1.0 + slack)
    return lower, upper


def exact_second_moment_homogeneous(n: int, r: int, dist: DistributionSpec) -> float:
    """Exact ratio E T^2 / mu^2 for equal row counts:

        alpha * sum_{k=0}^{n} beta^k / k! * b_{n-k}

    with alpha, beta from ``alpha_beta`` on the homogeneous spec (the upper
    and lower factors coincide there, and the per-pair bound they come from
    is an equality). Heterogeneous row counts have no closed form here; use
    the pair or enumeration oracles.
    """
    if r < 2:
        raise DomainError(f"closed-form ratio needs r >= 2, got r={r}")
    if n < 2:
        raise DomainError(f"closed-form ratio needs n >= 2, got n={n}")
    ab = alpha_beta(ModelSpec.homogeneous(n, r, dist))
    return ab.alpha_up * second_moment_series(n, ab.beta_up)


def _check_permutation(sigma, n: int) -> tuple[int, ...]:
    sig = tuple(int(v) for v in sigma)
    if len(sig) != n or sorted(sig) != list(range(n)):
        raise ValueError(f"not a permutation of 0..{n - 1}: {sigma!r}")
    return sig


def pair_moment(sigma1, sigma2, spec: ModelSpec) -> float:
    """E[R_s1 * R_s2] where R_s is the product of matrix entries along
    permutation s: with S the set of rows where the permutations agree,

        prod_{j in S} delta p_j
        * prod_{i not in S} (nu p_i)^2 (1 - 1/r_i) n/(n-1)

    with p_i = r_i / n. Rows outside S with r_i = 1 force the value to zero
    (two distinct columns cannot both lie in a single-column support).
    """
    n = spec.n
    s1 = _check_permutation(sigma1, n)
    s2 = _check_permutation(sigma2, n)
    nu = spec.dist.nu
    delta = spec.dist.delta
    factors = []
    for i in range(n):
        p = spec.r[i] / n
        if s1[i] == s2[i]:
            factors.append(delta * p)
        else:
            factors.append((nu * p) ** 2 * (1.0 - 1.0 / spec.r[i]) * n / (n - 1.0))
    return math.prod(factors)


def brute_second_moment_pairs(spec: ModelSpec) -> tuple[float, float]:
    """E T^2 as the sum of pair_moment over all permutation pairs.

    Returns (second_moment, ratio to mu^2). The pair moment depends only on
    the agreement set, and relabeling by any fixed permutation is a
    bijection of the pair space, so the (n!)^2 pair sum collapses exactly to
    n! times the sum over the second permutation with the first held at the
    identity. Guarded at n <= 7.
    """
    n = spec.n
    if n > PAIRS_MAX_N:
        raise SizeLimitError(f"pair sum limited to n <= {PAIRS_MAX_N}, got {n}")
    ident = tuple(range(n))
    total = math.fsum(
        pair_moment(ident, tau, spec) for tau in itertools.permutations(range(n))
    )
    second = math.factorial(n) * total
    mu = mu_n(spec)
    ratio = math.exp(math.log(second) - 2.0 * mu.log_mag) if second > 0 else 0.0
    return second, ratio


@lru_cache(maxsize=None)
def _enumeration_invariants(n: int, r: tuple[int, ...]) -> tuple[int, int, tuple[int, ...]]:
    """Exact integer aggregates over the whole constraint class:

    returns (class size, sum over X of per(X), hist) where hist[k] counts
    triples (X, s1, s2) with both permutations compatible with X and
    agreeing on exactly k rows. Everything downstream (any entry law) is a
    weighted sum of these integers.

    Each permutation is one bit in a mask; a depth-first walk over per-row
    support choices ANDs row masks, so the compatible-permutation set is
    known exactly at each leaf.
    """
    perms = list(itertools.permutations(range(n)))
    nf = len(perms)
    agree_rows = [
        [sum(pa[i] == pb[i] for i in range(n)) for pb in perms] for pa in perms
    ]
    agree_np = np.array(agree_rows, dtype=np.int64)

    row_masks: list[list[int]] = []
    for i in range(n):
        masks = []
        for supp in itertools.combinations(range(n), r[i]):
            s = set(supp)
            mask = 0
            for bit, p in enumerate(perms):
                if p[i] in s:
                    mask |= 1 << bit
            masks.append(mask)
        row_masks.append(masks)

    class_size = 1
    for ri in r:
        class_size *= math.comb(n, ri)

    per_sum = 0
    hist = [0] * (n + 1)
    full = (1 << nf) - 1

    # Iterative DFS over rows; prefixes with empty masks still count as
    # per(X) = 0 for every completion, contributing nothing.
    stack = [(0, full)]
    while stack:
        depth, mask = stack.pop()
        if depth == n:
            c = mask.bit_count()
            per_sum += c
            idx = []
            m = mask
            while m:
                low = m & -m
                idx.append(low.bit_length() - 1)
                m ^= low
            if c > 16:
                sub = agree_np[np.ix_(idx, idx)]
                counts = np.bincount(sub.ravel(), minlength=n + 1)
                for k in range(n + 1):
                    hist[k] += int(counts[k])
            else:
                for a in idx:
                    row = agree_rows[a]
                    for b in idx:
                        hist[row[b]] += 1
            continue
        for m in row_masks[depth]:
            nm = mask & m
            if nm:
                stack.append((depth + 1, nm))
    return class_size, per_sum, tuple(hist)


def exact_moments_enumerate(spec: ModelSpec) -> tuple[float, float]:
    """(E T, E T^2) by full enumeration of the constraint class, with the
    weight average taken analytically through (nu, delta).

    For a fixed 0-1 matrix X the weight expectation of per(Y) is
    nu^n per(X), and of per(Y)^2 is the sum over compatible permutation
    pairs of delta^k nu^{2(n-k)} with k the number of agreeing rows. Both
    reduce to integer aggregates of the class, computed exactly.

    Guarded at n <= 6 and class size <= the enumeration limit.
    """
    n = spec.n
    if n > ENUMERATE_MAX_N:
        raise SizeLimitError(f"enumeration oracle limited to n <= {ENUMERATE_MAX_N}, got {n}")
    size = constraint_class_size(spec)
    if size > ENUMERATION_MAX_CLASS:
        raise SizeLimitError(
            f"constraint class has {size} matrices, over the "
            f"{ENUMERATION_MAX_CLASS} enumeration guard"
        )
    class_size, per_sum, hist = _enumeration_invariants(n, tuple(sorted(spec.r)))
    nu = spec.dist.nu
    q = spec.dist.delta_over_nu2
    mean = nu**n * per_sum / class_size
    second = (
        math.fsum(hist[k] * q**k for k in range(n + 1)) * nu ** (2 * n) / class_size
    )
    return mean, second


class ConditionCheck(NamedTuple):
    a_n: float
    c_n: float
    theta: Optional[float]


def condition_check(spec: ModelSpec) -> ConditionCheck:
    """Finite-n diagnostics of the concentration conditions:

        a_n = sqrt(n) * delta / (nu^2 r_low)
        c_n = n * (delta / (nu^2 r_low) - 1/r_up)

    Concentration of T/mu holds along a spec sequence iff both tend to
    zero; this reports the finite-n values only. c_n is reported signed
    rather than in absolute value; since delta >= nu^2 and r_low <= r_up it
    is in fact always nonnegative. For homogeneous specs with r >= 2, theta is
    (1 - 1/r) e^{1/(r-1)}, the per-dimension growth factor of the exact
    second-moment ratio; theta > 1 for fixed r means the ratio grows
    exponentially in n.
    """
    q = spec.dist.delta_over_nu2
    a_n = math.sqrt(spec.n) * q / spec.r_low
    c_n = spec.n * (q / spec.r_low - 1.0 / spec.r_up)
    theta = None
    if spec.is_homogeneous and spec.r_low >= 2:
        r = spec.r_low
        theta = (1.0 - 1.0 / r) * math.exp(1.0 / (r - 1.0))
    return ConditionCheck(a_n, c_n, theta)


@dataclass(frozen=True)
class MomentReport:
    """All closed-form quantities for one spec, with unavailable pieces set
    to None and the failed hypothesis recorded when bounds do not apply."""

    mu: ScaledValue
    alpha_up: Optional[float]
    beta_up: Optional[float]
    alpha_low: Optional[float]
    beta_low: Optional[float]
    second_moment_lower: Optional[float]
    second_moment_upper: Optional[float]
    bounds_failure: Optional[str]
    vdw: Optional[ScaledValue]
    a_n: float
    c_n: float
    theta: Optional[float]
    exact_ratio: Optional[float]


def moment_report(spec: ModelSpec) -> MomentReport:
    """Assemble every closed form that applies to the spec.

    alpha/beta need r_low >= 2; the sandwich additionally needs
    r_low >= 6 delta/nu^2; vdw, theta, and the exact ratio are homogeneous
    only. The exact ratio is reported whenever homogeneous with r >= 2 and
    n >= 2 (the closed form is exact there regardless of the sandwich
    hypothesis).
    """
    mu = mu_n(spec)
    cond = condition_check(spec)
    alpha_up = beta_up = alpha_low = beta_low = None
    lower = upper = None
    failure = None
    try:
        ab = alpha_beta(spec)
        alpha_up, beta_up, alpha_low, beta_low = ab
    except DomainError as exc:
        failure = str(exc)
    if failure is None:
        try:
            lower, upper = second_moment_bounds(spec)
        except DomainError as exc:
            failure = str(exc)
    vdw = None
    exact_ratio = None
    if spec.is_homogeneous:
        vdw = vdw_bound(spec.n, spec.r_low)
        if spec.r_low >= 2 and spec.n >= 2:
            exact_ratio = exact_second_moment_homogeneous(spec.n, spec.r_low, spec.dist)
    return MomentReport(
        mu=mu,
        alpha_up=alpha_up,
        beta_up=beta_up,
        alpha_low=alpha_low,
        beta_low=beta_low,
        second_moment_lower=lower,
        second_moment_upper=upper,
        bounds_failure=failure,
        vdw=vdw,
        a_n=cond.a_n,
        c_n=cond.c_n,
        theta=cond.theta,
        exact_ratio=exact_ratio,
    )
