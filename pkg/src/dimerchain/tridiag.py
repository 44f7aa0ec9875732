"""Symmetric tridiagonal eigensolver.

Eigenvalues come from bisection on Sturm counts (the inertia of ``T - x I``
read off an LDL^T factorisation), eigenvectors from inverse iteration with a
partially pivoted tridiagonal LU. ``dense_oracle`` is an independent cyclic
Jacobi solver on a dense copy, meant for tests on small matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .capacitance import SymTridiagonal
from .errors import OracleSizeError, SolverFailureError

__all__ = [
    "EigenPair",
    "Spectrum",
    "count_below",
    "eigenvalues",
    "batch_eigenvalues",
    "eigenvector",
    "solve",
    "dense_oracle",
    "normalize_sign",
]

EPS = np.finfo(float).eps
ATOL_REL = 1e-12
RESIDUAL_RTOL = 1e-11
CLUSTER_RTOL = 1e-3
ORACLE_MAX_N = 64
_MAX_BISECT = 160
_MAX_INVIT = 6
_RESTARTS = 3


@dataclass(frozen=True, eq=False)
class EigenPair:
    value: float
    vector: np.ndarray
    residual: float


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending eigenvalues with unit eigenvectors stored as the columns of ``vectors``."""

    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    matrix_fingerprint: str

    def __len__(self) -> int:
        return self.values.size

    def pair(self, i: int) -> EigenPair:
        return EigenPair(float(self.values[i]), self.vectors[:, i], float(self.residuals[i]))

    @property
    def pairs(self) -> list[EigenPair]:
        return [self.pair(i) for i in range(len(self))]


def normalize_sign(v: np.ndarray, rtol: float = 1e-8) -> np.ndarray:
    """Flip ``v`` so its largest-magnitude entry is positive.

    Entries within ``rtol`` of the maximum magnitude count as ties; the
    lowest index among them decides.
    """
    mag = np.abs(v)
    top = mag.max()
    if top == 0:
        return v
    k = int(np.argmax(mag >= top * (1.0 - rtol)))
    return -v if v[k] < 0 else v


def _pivmin(offdiag: np.ndarray) -> float:
    off2 = float(np.max(offdiag * offdiag)) if offdiag.size else 0.0
    return math.sqrt(np.finfo(float).tiny) * max(1.0, off2)


def _sturm_counts(diag: np.ndarray, off2: np.ndarray, shifts: np.ndarray, pivmin: float) -> np.ndarray:
    """Number of eigenvalues below each shift.

    ``diag`` has shape ``(..., n)``, ``off2`` (squared off-diagonal) ``(..., n-1)``
    and ``shifts`` ``(..., k)``; leading dimensions broadcast.
    """
    dcols = np.moveaxis(diag, -1, 0)[..., None]
    ecols = np.moveaxis(off2, -1, 0)[..., None]
    d = dcols[0] - shifts
    d = np.where(np.abs(d) < pivmin, pivmin, d)
    count = (d < 0).astype(np.int64)
    for i in range(1, dcols.shape[0]):
        d = (dcols[i] - shifts) - ecols[i - 1] / d
        d = np.where(np.abs(d) < pivmin, pivmin, d)
        count += d < 0
    return count


def count_below(matrix: SymTridiagonal, x: float) -> int:
    """Number of eigenvalues of ``matrix`` strictly below ``x``.

    A vanishing pivot is replaced by a tiny positive number, i.e. ``x`` is
    nudged down by an amount far below working precision, so an eigenvalue
    equal to ``x`` is not counted.
    """
    off2 = matrix.offdiag * matrix.offdiag
    counts = _sturm_counts(matrix.diag, off2, np.array([float(x)]), _pivmin(matrix.offdiag))
    return int(counts[0])


def _bisect(
    diag: np.ndarray,
    off2: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    index: np.ndarray,
    pivmin: float,
    abs_floor: np.ndarray,
) -> np.ndarray:
    """Bisect for the eigenvalues with the given 0-based ``index``.

    Brackets shrink until they are a couple of ulps wide (or ``abs_floor``
    near zero), which is finer than the ``ATOL_REL`` contract.
    """
    lo = np.array(lower, dtype=float)
    hi = np.array(upper, dtype=float)
    for _ in range(_MAX_BISECT):
        tol = np.maximum(2.0 * EPS * np.maximum(np.abs(lo), np.abs(hi)), abs_floor)
        active = (hi - lo) > tol
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        left = _sturm_counts(diag, off2, mid, pivmin) > index
        hi = np.where(active & left, mid, hi)
        lo = np.where(active & ~left, mid, lo)
    return 0.5 * (lo + hi)


def eigenvalues(matrix: SymTridiagonal, interval: tuple[float, float] | None = None) -> np.ndarray:
    """Sorted eigenvalues, optionally only those in ``[interval[0], interval[1])``."""
    off2 = matrix.offdiag * matrix.offdiag
    pivmin = _pivmin(matrix.offdiag)
    scale = matrix.norm_bound()
    g_lo, g_hi = matrix.gershgorin()
    pad = 4.0 * EPS * scale + pivmin
    g_lo -= pad
    g_hi += pad
    if interval is None:
        first, last, lo, hi = 0, matrix.n, g_lo, g_hi
    else:
        lo, hi = float(interval[0]), float(interval[1])
        if hi <= lo:
            return np.empty(0)
        first = count_below(matrix, lo)
        last = count_below(matrix, hi)
        lo, hi = max(lo, g_lo), min(hi, g_hi)
    index = np.arange(first, last)
    if index.size == 0:
        return np.empty(0)
    if matrix.n == 1:
        return matrix.diag.copy()
    lower = np.full(index.size, lo)
    upper = np.full(index.size, hi)
    return _bisect(matrix.diag, off2, lower, upper, index, pivmin, np.full(index.size, EPS * scale))


def batch_eigenvalues(diags: np.ndarray, offdiags: np.ndarray) -> np.ndarray:
    """All eigenvalues of a stack of equal-size tridiagonals, shape ``(batch, n)``.

    Each row is bisected exactly as ``eigenvalues`` would, so results agree
    bitwise with the one-matrix path.
    """
    diags = np.asarray(diags, dtype=float)
    offdiags = np.asarray(offdiags, dtype=float)
    batch, n = diags.shape
    if n == 1:
        return diags.copy()
    off2 = offdiags * offdiags
    pivmin = _pivmin(offdiags)
    radius = np.zeros_like(diags)
    radius[:, :-1] += np.abs(offdiags)
    radius[:, 1:] += np.abs(offdiags)
    g_lo = np.min(diags - radius, axis=1)
    g_hi = np.max(diags + radius, axis=1)
    scale = np.maximum.reduce([np.abs(g_lo), np.abs(g_hi), np.max(np.abs(diags), axis=1)])
    pad = 4.0 * EPS * scale + pivmin
    lower = np.repeat((g_lo - pad)[:, None], n, axis=1)
    upper = np.repeat((g_hi + pad)[:, None], n, axis=1)
    index = np.broadcast_to(np.arange(n), (batch, n))
    floor = np.repeat((EPS * scale)[:, None], n, axis=1)
    return _bisect(diags, off2, lower, upper, index, pivmin, floor)


def _gt_factor(diag: Sequence[float], off: Sequence[float], shift: float, pivfloor: float):
    """LU with partial pivoting of ``T - shift I`` (row interchanges recorded in ``swap``)."""
    n = len(diag)
    d = [x - shift for x in diag]
    dl = list(off)
    du = list(off)
    du2 = [0.0] * max(n - 2, 0)
    swap = [False] * max(n - 1, 0)
    for i in range(n - 1):
        if abs(d[i]) >= abs(dl[i]):
            if d[i] == 0.0:
                d[i] = pivfloor
            fact = dl[i] / d[i]
            dl[i] = fact
            d[i + 1] -= fact * du[i]
        else:
            fact = d[i] / dl[i]
            d[i] = dl[i]
            dl[i] = fact
            temp = du[i]
            du[i] = d[i + 1]
            d[i + 1] = temp - fact * d[i + 1]
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -fact * du[i + 1]
            swap[i] = True
    if d[n - 1] == 0.0:
        d[n - 1] = pivfloor
    return d, dl, du, du2, swap


def _gt_solve(factors, rhs: Sequence[float]) -> list[float]:
    d, dl, du, du2, swap = factors
    n = len(d)
    b = list(rhs)
    for i in range(n - 1):
        if swap[i]:
            b[i], b[i + 1] = b[i + 1], b[i] - dl[i] * b[i + 1]
        else:
            b[i + 1] -= dl[i] * b[i]
    x = [0.0] * n
    x[n - 1] = b[n - 1] / d[n - 1]
    if n > 1:
        x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i]
    return x


def _residual(matrix: SymTridiagonal, lam: float, v: np.ndarray) -> float:
    return float(np.linalg.norm(matrix.matvec(v) - lam * v))


def eigenvector(
    matrix: SymTridiagonal,
    lam: float,
    orthogonal_to: Iterable[np.ndarray] = (),
) -> EigenPair:
    """Unit eigenvector for the computed eigenvalue ``lam`` by inverse iteration.

    ``orthogonal_to`` holds already computed vectors of nearby eigenvalues; the
    iterate is kept orthogonal to them (modified Gram-Schmidt).
    """
    n = matrix.n
    lam = float(lam)
    if n == 1:
        return EigenPair(lam, np.ones(1), abs(float(matrix.diag[0]) - lam))
    scale = matrix.norm_bound()
    basis = [np.asarray(q, dtype=float) for q in orthogonal_to]
    factors = _gt_factor(matrix.diag.tolist(), matrix.offdiag.tolist(), lam, EPS * scale)
    accept = 1e-2 * RESIDUAL_RTOL * scale
    best_v, best_res = None, math.inf
    for attempt in range(_RESTARTS + 1):
        if attempt == 0:
            x = np.full(n, 1.0 / math.sqrt(n))
        else:
            x = np.random.default_rng(attempt).standard_normal(n)
        for it in range(_MAX_INVIT):
            y = np.asarray(_gt_solve(factors, x.tolist()))
            for q in basis:
                y -= (q @ y) * q
            norm = np.linalg.norm(y)
            if not np.isfinite(norm) or norm == 0.0:
                break
            x = y / norm
            if it == 0:
                continue
            res = _residual(matrix, lam, x)
            if res < best_res:
                best_v, best_res = x, res
            if res <= accept:
                break
        if best_res <= accept:
            break
    if best_v is None or best_res > RESIDUAL_RTOL * scale:
        raise SolverFailureError(
            f"inverse iteration did not converge for eigenvalue {lam!r} "
            f"(n={n}, best residual {best_res:.3e}, required {RESIDUAL_RTOL * scale:.3e})"
        )
    v = normalize_sign(best_v)
    return EigenPair(lam, v, best_res)


def solve(matrix: SymTridiagonal) -> Spectrum:
    """Full eigendecomposition: bisection for values, inverse iteration for vectors."""
    values = eigenvalues(matrix)
    scale = matrix.norm_bound()
    n = matrix.n
    vectors = np.empty((n, n))
    residuals = np.empty(n)
    cluster: list[np.ndarray] = []
    for j, lam in enumerate(values):
        if j == 0 or values[j] - values[j - 1] >= CLUSTER_RTOL * scale:
            cluster = []
        pair = eigenvector(matrix, lam, orthogonal_to=cluster)
        vectors[:, j] = pair.vector
        residuals[j] = pair.residual
        cluster.append(pair.vector)
    return Spectrum(values, vectors, residuals, matrix.fingerprint())


def dense_oracle(matrix: SymTridiagonal, max_sweeps: int = 60) -> Spectrum:
    """Reference eigendecomposition by cyclic Jacobi rotations on a dense copy."""
    n = matrix.n
    if n > ORACLE_MAX_N:
        raise OracleSizeError(f"dense oracle is limited to n <= {ORACLE_MAX_N}, got {n}")
    a = matrix.to_dense()
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.triu(a, 1) ** 2)))
        if off <= 1e-17 * max(np.linalg.norm(a), np.finfo(float).tiny):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise SolverFailureError("Jacobi sweeps did not converge")
    order = np.argsort(np.diag(a), kind="stable")
    values = np.diag(a)[order].copy()
    vectors = np.column_stack([normalize_sign(v[:, k] / np.linalg.norm(v[:, k])) for k in order])
    residuals = np.array([_residual(matrix, values[j], vectors[:, j]) for j in range(n)])
    return Spectrum(values, vectors, residuals, matrix.fingerprint())
