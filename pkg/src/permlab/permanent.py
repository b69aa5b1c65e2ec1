"""Exact permanent computation.

Two kernels: a direct sum over permutations (the correctness oracle, n <= 10)
and an inclusion-exclusion evaluation over column subsets walked in Gray-code
order (the fast path, n <= 30). Both are deterministic: the accumulation
order is fixed, so repeated calls on the same matrix are bit-identical.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .core import DenseMatrix, ScaledValue, SizeLimitError

__all__ = ["per_naive", "per_ryser", "per_scaled", "NAIVE_MAX_N", "RYSER_MAX_N"]

NAIVE_MAX_N = 10
RYSER_MAX_N = 30

# Column subsets are split into a low block (vectorized, table-driven) and the
# remaining high columns (walked one Gray-code flip per step). 2^12 rows keeps
# the table in L2 while amortizing numpy call overhead.
_BLOCK_BITS = 12

_PERM_CHUNK = 65536


def per_naive(m: DenseMatrix) -> ScaledValue:
    """Sum of products over all permutations, in double precision.

    Factorial cost; guarded at n <= 10. Permutations are consumed in
    lexicographic order and partial sums combined with exact summation.
    """
    n = m.n
    if n > NAIVE_MAX_N:
        raise SizeLimitError(f"per_naive limited to n <= {NAIVE_MAX_N}, got {n}")
    a = m.entries
    rows = np.arange(n)
    parts = []
    perms = itertools.permutations(range(n))
    while True:
        chunk = list(itertools.islice(perms, _PERM_CHUNK))
        if not chunk:
            break
        idx = np.array(chunk, dtype=np.intp)
        parts.append(float(np.prod(a[rows, idx], axis=1).sum()))
    return ScaledValue.from_float(math.fsum(parts))


# When the alternating sum cancels more than ~6 digits, redo the pass in
# 80-bit extended precision; the n <= 10 oracle comparisons never get near
# this, but near-uniform matrices around n = 20 cancel ~n log10(e) digits.
_ESCALATE_CANCELLATION = 1e-6


def _ryser_pass(a: np.ndarray, dtype) -> tuple[float, float]:
    """One inclusion-exclusion pass in the given dtype.

    The subsets of the low ``b`` columns are tabulated once as running
    row sums (block doubling, one column added per level); the remaining
    columns are walked in Gray-code order, one column added or subtracted
    from the base row sums per step. Each step contributes
    (-1)^{n-|S|} prod_i rowsum_i(S) for all subsets S covered by the table.

    Returns (signed total, total of unsigned terms); the entries are
    nonnegative, so the second value measures how much cancellation the
    signed sum suffered.
    """
    n = a.shape[0]
    a = np.asarray(a, dtype=dtype)
    b = min(n, _BLOCK_BITS)
    nlow = 1 << b

    # low_t[i, t] = sum over columns j in subset t (binary index) of a[i, j]
    low_t = np.zeros((n, nlow), dtype=dtype)
    parity = np.zeros(nlow, dtype=np.int64)
    size = 1
    for j in range(b):
        low_t[:, size:2 * size] = low_t[:, :size] + a[:, j][:, None]
        parity[size:2 * size] = parity[:size] ^ 1
        size *= 2
    sign_low = np.where(parity == 1, -1.0, 1.0).astype(dtype)

    base = np.zeros(n, dtype=dtype)
    prods = np.empty(nlow, dtype=dtype)
    tmp = np.empty(nlow, dtype=dtype)
    total = dtype(0)
    unsigned = dtype(0)
    gray_prev = 0
    pc_hi = 0
    for h in range(1 << (n - b)):
        g = h ^ (h >> 1)
        diff = g ^ gray_prev
        if diff:
            j = b + diff.bit_length() - 1
            if g & diff:
                base = base + a[:, j]
                pc_hi += 1
            else:
                base = base - a[:, j]
                pc_hi -= 1
            gray_prev = g
        np.add(low_t[0], base[0], out=prods)
        for i in range(1, n):
            np.add(low_t[i], base[i], out=tmp)
            prods *= tmp
        s = sign_low @ prods
        unsigned = unsigned + prods.sum()
        total = total + (-s if pc_hi & 1 else s)
    # accumulated sign is (-1)^{|S|}; the formula wants (-1)^{n-|S|}
    if n & 1:
        total = -total
    return total, unsigned


def _ryser_value(a: np.ndarray) -> float:
    """Inclusion-exclusion permanent of a nonnegative float array.

    Runs in double precision, then repeats in extended precision when the
    signed total is small against the unsigned term total (severe
    cancellation, including the exact-zero case). Both passes and the
    escalation test are deterministic.
    """
    total, unsigned = _ryser_pass(a, np.float64)
    if float(unsigned) == 0.0:
        return 0.0
    if abs(float(total)) < _ESCALATE_CANCELLATION * float(unsigned):
        total, _ = _ryser_pass(a, np.longdouble)
    return float(total)


def per_ryser(m: DenseMatrix) -> ScaledValue:
    """Permanent via inclusion-exclusion over column subsets, O(2^n * n).

    Guarded at n <= 30. Agrees with per_naive to a relative error below
    1e-10 for n <= 10 on nonnegative input.
    """
    n = m.n
    if n > RYSER_MAX_N:
        raise SizeLimitError(f"per_ryser limited to n <= {RYSER_MAX_N}, got {n}")
    return ScaledValue.from_float(_ryser_value(m.entries))


def per_scaled(m: DenseMatrix, row_scales) -> ScaledValue:
    """Permanent computed on a row-rescaled copy, magnitude restored in logs.

    Row i is divided by ``row_scales[i]`` before the inclusion-exclusion
    kernel runs, and the result is multiplied by exp(sum log row_scales) in
    log space. With scales near each row's expected sum the kernel arithmetic
    stays near magnitude one, which keeps the relative error bounded up to
    the n <= 30 guard where the raw permanent overflows doubles.
    """
    n = m.n
    scales = np.asarray(row_scales, dtype=float)
    if scales.shape != (n,):
        raise ValueError(f"need {n} row scales, got shape {scales.shape}")
    if not np.all(np.isfinite(scales)) or np.any(scales <= 0):
        raise ValueError("row scales must be finite and positive")
    if n > RYSER_MAX_N:
        raise SizeLimitError(f"per_scaled limited to n <= {RYSER_MAX_N}, got {n}")
    v = _ryser_value(m.entries / scales[:, None])
    log_restore = math.fsum(math.log(s) for s in scales)
    return ScaledValue.from_float(v).scaled_by_log(log_restore)
