"""Seeded Monte Carlo harness for the scaled permanent T/mu: single trials,
trial batches with summary statistics, sweeps over the dimension, and CSV
emission.

Trials are embarrassingly parallel: each ratio is a pure function of
(master_seed, trial_index), and batches assemble results in trial-index
order, so output is identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import DenseMatrix, DistributionSpec, DomainError, ModelSpec
from .model import TrialSeed, _sample_standard_realization
from .moments import condition_check, exact_second_moment_homogeneous, second_moment_bounds
from .permanent import per_scaled

__all__ = [
    "DEFAULT_EPSILON",
    "CSV_HEADER",
    "TrialBatch",
    "SweepPlan",
    "SweepRow",
    "resolve_r_rule",
    "jackknife_se_of_variance",
    "run_trial",
    "estimate_moments",
    "summary_row",
    "concentration_sweep",
    "csv_line",
    "write_csv",
]

DEFAULT_EPSILON = 0.1

CSV_HEADER = (
    "n,r_low,r_up,dist,trials,seed,mean_ratio,se_mean,var_ratio,se_var,"
    "p_dev,epsilon,a_n,c_n,exact_ratio,bound_low,bound_up"
)


def jackknife_se_of_variance(values: np.ndarray) -> float:
    """Nonparametric jackknife standard error of the sample variance.

    Leave-one-out variances are formed in closed form from the first two
    power sums, so the whole estimate is O(len(values)).
    """
    x = np.asarray(values, dtype=float)
    m = x.size
    if m < 3:
        return float("nan")
    s1 = x.sum()
    s2 = (x * x).sum()
    loo_mean = (s1 - x) / (m - 1)
    loo_var = (s2 - x * x - (m - 1) * loo_mean * loo_mean) / (m - 2)
    centered = loo_var - loo_var.mean()
    return math.sqrt((m - 1) / m * float(centered @ centered))


def run_trial(spec: ModelSpec, seed: TrialSeed) -> float:
    """One realization of T/mu.

    Samples (X, W) with W the unit-scale weight matrix, evaluates the
    permanent of X*W through the row-rescaled kernel with row scales
    r_i * E[W], and divides by the expected permanent in log space. The
    family's scale factor multiplies T and mu by the same scale^n, so it is
    cancelled algebraically rather than numerically; ratios are therefore
    bit-identical across pure rescalings of the entry law. A tiny negative
    residual from the alternating sum (possible only when the true permanent
    is zero) is clamped to zero.
    """
    x, w = _sample_standard_realization(spec, seed)
    nu0 = spec.dist.standard_mean
    scales = [ri * nu0 for ri in spec.r]
    sv = per_scaled(DenseMatrix(x * w), scales)
    if sv.is_zero or sv.sign < 0:
        return 0.0
    n = spec.n
    log_mu0 = math.fsum(math.log(s) for s in scales) + (
        math.log(math.factorial(n)) - n * math.log(n)
    )
    return math.exp(sv.log_mag - log_mu0)


def _run_range(spec: ModelSpec, master_seed: int, start: int, stop: int) -> list[float]:
    return [run_trial(spec, TrialSeed(master_seed, i)) for i in range(start, stop)]


@dataclass(frozen=True)
class TrialBatch:
    """Monte Carlo batch: per-trial ratios T/mu plus summary statistics.

    Ratios are stored per trial (index order), so every summary is
    recomputable from the batch contents alone.
    """

    spec: ModelSpec
    master_seed: int
    trials: int
    epsilon: float
    ratios: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.ratios, dtype=float)  # copy; the batch owns it
        if arr.shape != (self.trials,):
            raise ValueError(f"expected {self.trials} ratios, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("ratios must be finite and nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "ratios", arr)
        if self.trials < 2:
            raise ValueError("need at least 2 trials for variance estimates")

    @property
    def mean_ratio(self) -> float:
        return float(np.mean(self.ratios))

    @property
    def var_ratio(self) -> float:
        # Identical samples have zero sample variance by definition; the
        # short-circuit avoids reporting rounding dust for deterministic specs.
        if np.all(self.ratios == self.ratios[0]):
            return 0.0
        return float(np.var(self.ratios, ddof=1))

    @property
    def se_mean(self) -> float:
        return math.sqrt(self.var_ratio / self.trials)

    @property
    def se_var(self) -> float:
        """Jackknife standard error of the sample variance (nan if trials < 3)."""
        if self.trials < 3:
            return float("nan")
        if np.all(self.ratios == self.ratios[0]):
            return 0.0
        return jackknife_se_of_variance(self.ratios)

    def p_dev(self, epsilon: float | None = None) -> float:
        """Empirical P(|T/mu - 1| > epsilon)."""
        eps = self.epsilon if epsilon is None else epsilon
        return float(np.mean(np.abs(self.ratios - 1.0) > eps))


def _resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("PERMLAB_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"bad PERMLAB_WORKERS value {env!r}") from None
    return 1


def estimate_moments(
    spec: ModelSpec,
    trials: int,
    master_seed: int,
    *,
    workers: int | None = None,
    epsilon: float = DEFAULT_EPSILON,
) -> TrialBatch:
    """Run trials 0..trials-1 and summarize.

    Ratios land in trial-index order regardless of worker count, so the
    batch (and everything derived from it) is independent of scheduling.
    """
    if trials < 2:
        raise ValueError(f"need at least 2 trials, got {trials}")
    nworkers = _resolve_workers(workers)
    if nworkers == 1:
        ratios = _run_range(spec, master_seed, 0, trials)
    else:
        bounds = np.linspace(0, trials, 4 * nworkers + 1, dtype=int)
        spans = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if a < b]
        ratios = []
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            futures = [pool.submit(_run_range, spec, master_seed, a, b) for a, b in spans]
            for fut in futures:
                ratios.extend(fut.result())
    return TrialBatch(
        spec=spec,
        master_seed=master_seed,
        trials=trials,
        epsilon=epsilon,
        ratios=np.array(ratios),
    )


@dataclass(frozen=True)
class SweepPlan:
    """Grid of dimensions with an r-rule, entry law, and trial budget.

    r rules: ``const:k`` (same count every row), ``sqrt-log``
    (ceil(sqrt(n) ln n)), ``power:p`` (ceil(n^p)), or ``fixed:a,b,...``
    (explicit vector, single-n plans only).
    """

    ns: tuple[int, ...]
    r_rule: str
    dist: DistributionSpec
    trials: int
    master_seed: int
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        object.__setattr__(self, "ns", tuple(int(v) for v in self.ns))
        if self.trials < 2:
            raise ValueError("need at least 2 trials per sweep row")
        for n in self.ns:
            # raises if the induced counts fall outside 1..n
            self.spec_for(n)

    def spec_for(self, n: int) -> ModelSpec:
        return ModelSpec(n, resolve_r_rule(self.r_rule, n), self.dist)


def resolve_r_rule(rule: str, n: int) -> tuple[int, ...]:
    """Row counts induced by an r-rule string at dimension n."""
    head, _, tail = rule.strip().partition(":")
    head = head.strip()
    if head == "const":
        return (int(tail),) * n
    if head == "sqrt-log":
        return (math.ceil(math.sqrt(n) * math.log(n)),) * n
    if head == "power":
        return (math.ceil(n ** float(tail)),) * n
    if head == "fixed":
        return tuple(int(tok) for tok in tail.split(","))
    raise ValueError(f"unknown r-rule {rule!r}")


@dataclass(frozen=True)
class SweepRow:
    """One CSV row: model identity, batch summary, diagnostics, and the
    homogeneous reference values where they apply."""

    n: int
    r_low: int
    r_up: int
    dist: str
    trials: int
    seed: int
    mean_ratio: float
    se_mean: float
    var_ratio: float
    se_var: float
    p_dev: float
    epsilon: float
    a_n: float
    c_n: float
    exact_ratio: float | None
    bound_low: float | None
    bound_up: float | None


def summary_row(batch: TrialBatch) -> SweepRow:
    """Collapse a batch to its CSV row.

    The exact second-moment ratio is included for homogeneous specs with
    r >= 2 (the closed form is exact there); the sandwich bounds only when
    the hypothesis r_low >= 6 delta/nu^2 also holds.
    """
    spec = batch.spec
    cond = condition_check(spec)
    exact_ratio = None
    bound_low = bound_up = None
    if spec.is_homogeneous and spec.r_low >= 2 and spec.n >= 2:
        exact_ratio = exact_second_moment_homogeneous(spec.n, spec.r_low, spec.dist)
        try:
            bound_low, bound_up = second_moment_bounds(spec)
        except DomainError:
            pass
    return SweepRow(
        n=spec.n,
        r_low=spec.r_low,
        r_up=spec.r_up,
        dist=spec.dist.spec_string(),
        trials=batch.trials,
        seed=batch.master_seed,
        mean_ratio=batch.mean_ratio,
        se_mean=batch.se_mean,
        var_ratio=batch.var_ratio,
        se_var=batch.se_var,
        p_dev=batch.p_dev(),
        epsilon=batch.epsilon,
        a_n=cond.a_n,
        c_n=cond.c_n,
        exact_ratio=exact_ratio,
        bound_low=bound_low,
        bound_up=bound_up,
    )


def _row_master_seed(master_seed: int, n: int) -> int:
    """Independent per-dimension master seed, derived (not consumed) from the
    plan seed so every row has its own documented stream."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(n,))
    return int(ss.generate_state(1, np.uint64)[0])


def concentration_sweep(plan: SweepPlan, *, workers: int | None = None) -> list[SweepRow]:
    """One batch per dimension in the plan, each from its own derived stream."""
    rows = []
    for n in plan.ns:
        spec = plan.spec_for(n)
        batch = estimate_moments(
            spec,
            plan.trials,
            _row_master_seed(plan.master_seed, n),
            workers=workers,
            epsilon=plan.epsilon,
        )
        rows.append(summary_row(batch))
    return rows


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def csv_line(row: SweepRow) -> str:
    """One CSV data line, column order matching CSV_HEADER."""
    return ",".join(
        _csv_cell(v)
        for v in (
            row.n, row.r_low, row.r_up, row.dist, row.trials, row.seed,
            row.mean_ratio, row.se_mean, row.var_ratio, row.se_var,
            row.p_dev, row.epsilon, row.a_n, row.c_n,
            row.exact_ratio, row.bound_low, row.bound_up,
        )
    )


def write_csv(rows, path: str) -> None:
    """Write sweep rows (or a single TrialBatch) as CSV.

    Fixed header, 17 significant digits, one data row per dimension, LF
    newlines; identical input produces byte-identical files.
    """
    if isinstance(rows, TrialBatch):
        rows = [summary_row(rows)]
    text = "\n".join([CSV_HEADER] + [csv_line(row) for row in rows]) + "\n"
    with open(path, "w", newline="") as fh:
        fh.write(text)
