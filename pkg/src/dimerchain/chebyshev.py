"""Chebyshev-polynomial description of corner-perturbed tridiagonal 2-Toeplitz matrices.

A 2-Toeplitz matrix here has constant diagonal ``alpha`` (plus ``a`` and ``b``
on the first and last entry) and off-diagonals alternating ``beta1, beta2,
beta1, ...``. Its characteristic polynomial and eigenvectors are expressed
through Chebyshev polynomials of the second kind evaluated at the quadratic
map ``y(z) = (z**2 - beta1**2 - beta2**2) / (2 beta1 beta2)`` of the shifted
variable ``z = x - alpha``.

Everything is evaluated by forward three-term recurrences. For ``|y| > 1`` and
large degree the raw values overflow, so callers that only need ratios use
:func:`chebyshev_ratio`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .capacitance import SymTridiagonal, coefficients
from .errors import DomainError, NotAnEigenvalueError
from .geometry import DimerSpec

__all__ = [
    "ToeplitzParams",
    "RecurrenceSeeds",
    "chebU",
    "chebT",
    "chebyshev_ratio",
    "y_map",
    "p_star",
    "p_star_closed",
    "char_poly_odd",
    "char_poly_even",
    "phat_qhat",
    "analytic_eigenvector_odd",
    "analytic_eigenvector_even",
    "defect_eigenvector",
]


@dataclass(frozen=True)
class ToeplitzParams:
    alpha: float
    beta1: float
    beta2: float
    a: float = 0.0
    b: float = 0.0

    def matrix(self, size: int) -> SymTridiagonal:
        """The ``size x size`` matrix these parameters describe."""
        if size < 1:
            raise DomainError(f"size must be >= 1, got {size}")
        diag = np.full(size, float(self.alpha))
        diag[0] += self.a
        diag[-1] += self.b
        if size == 1:
            diag[0] = self.alpha + self.a + self.b
        off = np.where(np.arange(size - 1) % 2 == 0, self.beta1, self.beta2)
        return SymTridiagonal(diag, off)

    @property
    def couplings(self) -> float:
        return self.beta1 * self.beta2


@dataclass(frozen=True)
class RecurrenceSeeds:
    xi_p: float
    xi_q: float
    beta: float

    def __post_init__(self) -> None:
        if self.beta == 0:
            raise DomainError("recurrence parameter beta must be nonzero")


def _step(factor, cur, prev):
    """``factor * cur - prev``; once ``cur`` has overflowed the result keeps a signed infinity."""
    with np.errstate(over="ignore", invalid="ignore"):
        nxt = factor * cur - prev
    return np.where(np.isinf(cur), np.sign(factor) * cur, nxt)


def chebU(k: int, x):
    """Chebyshev polynomial of the second kind, ``U_{-1} = 0``, ``U_0 = 1``.

    Values past the floating range come back as infinities of the right sign.
    """
    if k < -1:
        raise DomainError(f"degree must be >= -1, got {k}")
    x = np.asarray(x, dtype=float)
    prev, cur = np.zeros_like(x), np.ones_like(x)
    if k == -1:
        return prev[()]
    for _ in range(k):
        prev, cur = cur, _step(2.0 * x, cur, prev)
    return cur[()]


def chebT(k: int, x):
    """Chebyshev polynomial of the first kind."""
    if k < 0:
        raise DomainError(f"degree must be >= 0, got {k}")
    x = np.asarray(x, dtype=float)
    prev, cur = np.ones_like(x), x.copy()
    if k == 0:
        return prev[()]
    for _ in range(k - 1):
        prev, cur = cur, _step(2.0 * x, cur, prev)
    return cur[()]


def chebyshev_ratio(k: int, y):
    """``U_{k-1}(y) / U_k(y)`` through the recurrence ``R_k = 1 / (2y - R_{k-1})``.

    Never forms ``U_k`` itself, so it stays finite for large ``k`` when
    ``|y| > 1``.
    """
    if k < 0:
        raise DomainError(f"degree must be >= 0, got {k}")
    y = np.asarray(y, dtype=float)
    ratio = np.zeros_like(y)
    for _ in range(k):
        ratio = 1.0 / (2.0 * y - ratio)
    return ratio[()]


def y_map(z, beta1: float, beta2: float):
    if beta1 * beta2 == 0:
        raise DomainError("y_map needs beta1 * beta2 != 0")
    return (np.asarray(z, dtype=float) ** 2 - beta1**2 - beta2**2) / (2.0 * beta1 * beta2)


def p_star(k: int, x, params: ToeplitzParams):
    """``P*_k(x) = (beta1 beta2)^k U_k(y(x - alpha))`` by its own scaled recurrence."""
    if k < -1:
        raise DomainError(f"degree must be >= -1, got {k}")
    x = np.asarray(x, dtype=float)
    z = x - params.alpha
    c = params.couplings
    lin = z * z - params.beta1**2 - params.beta2**2
    prev, cur = np.zeros_like(x), np.ones_like(x)
    if k == -1:
        return prev[()]
    for _ in range(k):
        prev, cur = cur, _step(lin, cur, c * c * prev)
    return cur[()]


def p_star_closed(k: int, x, params: ToeplitzParams):
    """Same polynomial as :func:`p_star`, composed from ``chebU`` and ``y_map``."""
    y = y_map(np.asarray(x, dtype=float) - params.alpha, params.beta1, params.beta2)
    return params.couplings**k * chebU(k, y)


def char_poly_odd(k: int, x, params: ToeplitzParams):
    """Characteristic polynomial ``det(x I - A)`` of the ``(2k+1)``-sized matrix."""
    al, a, b = params.alpha, params.a, params.b
    x = np.asarray(x, dtype=float)
    return (x - al - a - b) * p_star(k, x, params) + (
        a * b * (x - al) - a * params.beta1**2 - b * params.beta2**2
    ) * p_star(k - 1, x, params)


def char_poly_even(k: int, x, params: ToeplitzParams):
    """Characteristic polynomial ``det(x I - A)`` of the ``2k``-sized matrix."""
    if k < 1:
        raise DomainError(f"even size needs k >= 1, got {k}")
    al, a, b = params.alpha, params.a, params.b
    x = np.asarray(x, dtype=float)
    pk2 = p_star(k - 2, x, params) if k >= 2 else 0.0
    return (
        p_star(k, x, params)
        + ((a + b) * (al - x) + a * b + params.beta2**2) * p_star(k - 1, x, params)
        + a * b * params.beta1**2 * pk2
    )


def phat_qhat(seeds: RecurrenceSeeds, mu: float, k_max: int) -> tuple[np.ndarray, np.ndarray]:
    """The two seeded Chebyshev-type sequences ``p_0..p_kmax`` and ``q_0..q_kmax``.

    Both obey ``s_{k+1} = 2 mu s_k - s_{k-1}``; only their first two terms
    differ.
    """
    if k_max < 0:
        raise DomainError(f"k_max must be >= 0, got {k_max}")
    xp, xq, beta = seeds.xi_p, seeds.xi_q, seeds.beta
    p = np.empty(k_max + 1)
    q = np.empty(k_max + 1)
    p[0], q[0] = xp, xq
    if k_max >= 1:
        shift = (xp - xq) / beta
        p[1] = 2.0 * mu * xp + shift
        q[1] = (2.0 * mu + beta) * xp + shift
    for k in range(1, k_max):
        p[k + 1] = 2.0 * mu * p[k] - p[k - 1]
        q[k + 1] = 2.0 * mu * q[k] - q[k - 1]
    return p, q


def _interleaved(params: ToeplitzParams, k: int, lam: float, size: int) -> np.ndarray:
    z = params.alpha - lam
    seeds = RecurrenceSeeds(xi_p=params.alpha + params.a - lam, xi_q=z, beta=params.beta2 / params.beta1)
    mu = float(y_map(lam - params.alpha, params.beta1, params.beta2))
    p, q = phat_qhat(seeds, mu, k)
    v = np.empty(size)
    v[0::2] = q[: (size + 1) // 2]
    v[1::2] = -z * p[: size // 2] / params.beta1
    if not np.any(v):
        raise NotAnEigenvalueError(f"closed-form eigenvector vanishes at lambda={lam!r}")
    return v


def analytic_eigenvector_odd(params: ToeplitzParams, k: int, lam: float) -> np.ndarray:
    """Unnormalised eigenvector of the ``(2k+1)``-sized matrix for eigenvalue ``lam``.

    Entries alternate ``q_j`` and ``-(alpha - lam) p_j / beta1``; ``b`` does not
    enter the vector, only the eigenvalue condition.
    """
    return _interleaved(params, k, lam, 2 * k + 1)


def analytic_eigenvector_even(params: ToeplitzParams, k: int, lam: float) -> np.ndarray:
    """Unnormalised eigenvector of the ``2k``-sized matrix for eigenvalue ``lam``."""
    if k < 1:
        raise DomainError(f"even size needs k >= 1, got {k}")
    return _interleaved(params, k, lam, 2 * k)


def defect_eigenvector(spec: DimerSpec, lam: float, rtol: float = 1e-8) -> np.ndarray:
    """Closed-form eigenvector of the ``(4m+1)``-sized defect capacitance matrix.

    The left half comes from the odd-size formula with corner ``a = beta2``; the
    right half is its mirror image, with the sign that gives the smaller
    residual. An antisymmetric vector gets an exact zero at the centre.
    """
    from .capacitance import assemble
    from .geometry import build_defect_chain

    coef = coefficients(spec)
    params = ToeplitzParams(coef.alpha, coef.beta1, coef.beta2, a=coef.beta2)
    m = spec.m
    half = analytic_eigenvector_odd(params, m, lam)
    matrix = assemble(build_defect_chain(spec))
    best, best_res = None, np.inf
    for sign in (1.0, -1.0):
        centre = half[-1] if sign > 0 else 0.0
        v = np.concatenate([half[:-1], [centre], sign * half[-2::-1]])
        norm = np.linalg.norm(v)
        if norm == 0:
            continue
        res = np.linalg.norm(matrix.matvec(v) - lam * v) / norm
        if res < best_res:
            best, best_res = v, res
    if best is None or best_res > rtol * matrix.norm_bound():
        raise NotAnEigenvalueError(
            f"lambda={lam!r} is not an eigenvalue of the defect matrix (relative residual {best_res:.3e})"
        )
    return best
