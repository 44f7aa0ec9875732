"""Band gap, interface-mode detection and the behaviour of the gap eigenvalue.

Conventions: ``alpha, beta1, beta2`` are the defect-chain matrix entries from
:func:`dimerchain.capacitance.coefficients`; ``z = lambda - alpha`` and
``y = y_map(z)``. Inside the gap ``(2/s2, 2/s1)`` one has ``y < -1``.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, NamedTuple, Sequence

import numpy as np

from .capacitance import PhysicalConstants, assemble, coefficients, eigenvalue_to_frequency
from .chebyshev import chebyshev_ratio, y_map
from .errors import DomainError, InsufficientDataError, TheoryViolationError
from .geometry import DimerSpec, build_defect_chain
from .tridiag import eigenvalues, eigenvector

__all__ = [
    "BOUNDARY_TOL",
    "BulkGap",
    "ModeClassification",
    "DecayFit",
    "GapReport",
    "ConvergenceRow",
    "LogLinearFit",
    "PseudoResidual",
    "bulk_gap",
    "dimer_closed_form",
    "classify",
    "find_gap_eigenvalue",
    "limit_eigenvalue",
    "limit_ratio_L",
    "existence_coefficients",
    "f_m",
    "f_infinity",
    "f_m_root",
    "decay_fit",
    "convergence_study",
    "log_linear_fit",
    "pseudo_residual",
]

BOUNDARY_TOL = 1e-9
DECAY_R2_MIN = 0.99

Interval = tuple


@dataclass(frozen=True)
class BulkGap:
    """Limiting spectrum of the dimer lattice: two bands and the interface gap.

    ``gap`` is ``(2/s2, 2/s1)`` when ``s1 < s2`` and ``None`` otherwise. The
    bands are always ``[0, 2/max(s1, s2)]`` and ``[2/min(s1, s2), 2/s1 + 2/s2]``.
    """

    bulk: tuple[Interval, Interval]
    gap: Interval | None

    @property
    def has_gap(self) -> bool:
        return self.gap is not None

    def in_gap(self, x: float) -> bool:
        return self.gap is not None and self.gap[0] < x < self.gap[1]

    def in_bulk(self, x: float, tol: float = 0.0) -> bool:
        return any(lo - tol <= x <= hi + tol for lo, hi in self.bulk)


def _reciprocal(s):
    if isinstance(s, numbers.Rational):
        return Fraction(1) / Fraction(s)
    return 1.0 / s


def bulk_gap(spec: DimerSpec) -> BulkGap:
    """Bands and gap; exact ``Fraction`` arithmetic when ``s1`` and ``s2`` are rational types."""
    inv1, inv2 = _reciprocal(spec.s1), _reciprocal(spec.s2)
    low, high = min(inv1, inv2), max(inv1, inv2)
    bulk = ((0 * inv1, 2 * low), (2 * high, 2 * inv1 + 2 * inv2))
    gap = (2 * inv2, 2 * inv1) if spec.s1 < spec.s2 else None
    return BulkGap(bulk, gap)


def dimer_closed_form(spec: DimerSpec, m: int) -> np.ndarray:
    """Sorted eigenvalues of the defectless chain with ``2m`` resonators, in closed form.

    They are ``alpha + beta1 + beta2`` (the zero mode), ``alpha + beta2 - beta1``
    and ``alpha +- sqrt(beta1**2 + 2 beta1 beta2 cos(k pi / m) + beta2**2)`` for
    ``k = 1 .. m-1``.
    """
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    coef = coefficients(spec)
    al, b1, b2 = coef.alpha, coef.beta1, coef.beta2
    k = np.arange(1, m)
    root = np.sqrt(b1 * b1 + 2.0 * b1 * b2 * np.cos(k * np.pi / m) + b2 * b2)
    values = np.concatenate([[al + b1 + b2, al + b2 - b1], al - root, al + root])
    return np.sort(values)


@dataclass(frozen=True)
class ModeClassification:
    """Position of an eigenvalue relative to the bands and the induced cell-to-cell behaviour.

    ``decay_root`` is the root of ``X**2 - 2 y X + 1`` with modulus >= 1: real for
    ``gap`` and ``boundary``, ``exp(i theta)`` for ``bulk``.
    """

    kind: Literal["bulk", "boundary", "gap"]
    y_value: float
    decay_root: float | complex
    theta: float | None = None

    @property
    def decay_ratio(self) -> float:
        """Per-unit-cell amplitude factor ``1/|r|`` (1 for non-decaying modes)."""
        return 1.0 / abs(self.decay_root)


def classify(lam: float, spec: DimerSpec) -> ModeClassification:
    coef = coefficients(spec)
    y = float(y_map(lam - coef.alpha, coef.beta1, coef.beta2))
    if abs(y * y - 1.0) <= BOUNDARY_TOL:
        return ModeClassification("boundary", y, math.copysign(1.0, y), 0.0 if y > 0 else math.pi)
    if y * y > 1.0:
        return ModeClassification("gap", y, y + math.copysign(math.sqrt(y * y - 1.0), y))
    theta = math.acos(y)
    return ModeClassification("bulk", y, complex(math.cos(theta), math.sin(theta)), theta)


def limit_eigenvalue(spec: DimerSpec, form: Literal["coupling", "spacing"] = "coupling") -> float:
    """Large-chain limit of the interface eigenvalue.

    ``form`` selects between the expression in the couplings ``beta1, beta2``
    and the algebraically identical one in the spacings ``s1, s2``.
    """
    spec.require_gap()
    if form == "coupling":
        coef = coefficients(spec)
        b1, b2 = coef.beta1, coef.beta2
        z0 = 0.5 * (-math.sqrt(9 * b1 * b1 - 14 * b1 * b2 + 9 * b2 * b2) - b1 - b2)
        lam0 = coef.alpha + z0
    elif form == "spacing":
        s1, s2 = float(spec.s1), float(spec.s2)
        lam0 = 0.5 * (-math.sqrt(9 / s1**2 - 14 / (s1 * s2) + 9 / s2**2) + 3 / s1 + 3 / s2)
    else:
        raise DomainError(f"unknown form {form!r}")
    if not bulk_gap(spec).in_gap(lam0):
        raise TheoryViolationError(f"limit eigenvalue {lam0} is outside the gap")
    return lam0


def _gap_y(lam, spec: DimerSpec):
    spec.require_gap()
    coef = coefficients(spec)
    lam = np.asarray(lam, dtype=float)
    lo, hi = 2.0 / spec.s2, 2.0 / spec.s1
    if np.any((lam <= lo) | (lam >= hi)):
        raise DomainError(f"lambda must lie in the gap ({lo}, {hi})")
    return coef, lam - coef.alpha, y_map(lam - coef.alpha, coef.beta1, coef.beta2)


def limit_ratio_L(lam, spec: DimerSpec):
    """``lim_{m->inf} P*_{m-1}(lam) / P*_m(lam)`` for ``lam`` in the gap.

    Equals ``(y - sign(y) sqrt(y**2 - 1)) / (beta1 beta2)``: the reciprocal of
    the dominant Chebyshev root, which for ``y < -1`` is ``y + sqrt(y**2 - 1)``.
    """
    coef, _, y = _gap_y(lam, spec)
    if np.any(y * y <= 1.0):
        raise DomainError("limit ratio needs y**2 > 1")
    root = y - np.sign(y) * np.sqrt(y * y - 1.0)
    return (root / (coef.beta1 * coef.beta2))[()]


class ExistenceCoefficients(NamedTuple):
    A: np.ndarray
    B: np.ndarray
    E: np.ndarray
    F: float


def existence_coefficients(lam, spec: DimerSpec) -> ExistenceCoefficients:
    """Coefficients of the symmetric-mode factor of the defect characteristic polynomial.

    That factor is ``A P*_m + B P*_{m-1} - beta2**2 (E P*_{m-1} + F P*_{m-2})``,
    with ``A, B, E, F`` independent of ``m``.
    """
    coef = coefficients(spec)
    b1, b2 = coef.beta1, coef.beta2
    z = np.asarray(lam, dtype=float) - coef.alpha
    a, b = b2, b1 - b2  # corner offsets of the upper block: alpha_tilde - alpha and eta - alpha
    return ExistenceCoefficients(
        A=z - a - b,
        B=a * b * z - a * b1 * b1 - b * b2 * b2,
        E=z - b2,
        F=-b2 * b1 * b1,
    )


def f_m(lam, spec: DimerSpec, m: int | None = None):
    """Existence function whose zeros in the gap are the interface eigenvalues of size ``4m+1``.

    Evaluated through Chebyshev ratios only, so it is finite for any ``m``.
    """
    m = spec.m if m is None else m
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    coef, _, y = _gap_y(lam, spec)
    c = coef.beta1 * coef.beta2
    rho_m = chebyshev_ratio(m, y) / c
    rho_m1 = chebyshev_ratio(m - 1, y) / c
    A, B, E, F = existence_coefficients(lam, spec)
    return (A + B * rho_m - coef.beta2**2 * rho_m * (E + F * rho_m1))[()]


def f_infinity(lam, spec: DimerSpec):
    """Pointwise limit of :func:`f_m` as ``m -> inf``."""
    L = limit_ratio_L(lam, spec)
    A, B, E, F = existence_coefficients(lam, spec)
    return (A + B * L - coefficients(spec).beta2 ** 2 * L * (E + F * L))[()]


def f_m_root(spec: DimerSpec, m: int | None = None) -> float | None:
    """Root of :func:`f_m` in the gap by bisection, or ``None`` without a sign change."""
    spec.require_gap()
    lo, hi = 2.0 / spec.s2, 2.0 / spec.s1
    lo, hi = math.nextafter(lo, hi), math.nextafter(hi, lo)
    f_lo, f_hi = f_m(lo, spec, m), f_m(hi, spec, m)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if f_lo * f_hi > 0:
        return None
    while True:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            return mid
        f_mid = f_m(mid, spec, m)
        if f_mid == 0:
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of ``log|v|`` against unit-cell distance from the interface."""

    fitted_ratio: float
    predicted_ratio: float
    r_squared: float
    left_ratio: float
    right_ratio: float
    eigenvalue: float

    @property
    def localized(self) -> bool:
        return self.r_squared >= DECAY_R2_MIN and self.fitted_ratio < 1.0


def _line_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - pred) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def decay_fit(vector: Sequence[float], spec: DimerSpec) -> DecayFit:
    """Fitted and predicted per-cell decay factor of a defect-chain eigenvector.

    Uses entries at even offsets ``2j`` from the central resonator, for cells
    ``j`` in the middle half between interface and edge (rounded outwards);
    the outer quarters carry the growing branch and edge effects.
    """
    v = np.asarray(vector, dtype=float)
    if v.size % 4 != 1:
        raise DomainError(f"defect-chain vectors have length 4m+1, got {v.size}")
    m = (v.size - 1) // 4
    if m < 5:
        raise InsufficientDataError(f"decay fit needs m >= 5, got m={m}")
    matrix = assemble(build_defect_chain(spec.with_m(m)))
    lam = float(v @ matrix.matvec(v) / (v @ v))
    cells = np.arange(m // 4, -(-3 * m // 4) + 1)
    centre = 2 * m
    fits = []
    for side in (-1, 1):
        amp = np.abs(v[centre + side * 2 * cells])
        keep = amp > 1e-300
        if keep.sum() < 4:
            raise InsufficientDataError("fewer than 4 usable entries in the fit window")
        fits.append(_line_fit(cells[keep].astype(float), np.log(amp[keep])))
    left, right = math.exp(fits[0][0]), math.exp(fits[1][0])
    return DecayFit(
        fitted_ratio=math.exp(0.5 * (fits[0][0] + fits[1][0])),
        predicted_ratio=classify(lam, spec).decay_ratio,
        r_squared=min(fits[0][2], fits[1][2]),
        left_ratio=left,
        right_ratio=right,
        eigenvalue=lam,
    )


@dataclass(frozen=True, eq=False)
class GapReport:
    """Interface eigenpair of one defect chain compared with its large-chain limit."""

    spec: DimerSpec
    n: int
    count_in_gap: int
    interface_eigenvalue: float | None
    limit_eigenvalue: float
    abs_error: float | None
    eigenvector: np.ndarray | None
    decay: DecayFit | None

    @property
    def decay_fit(self) -> tuple[float, float] | None:
        if self.decay is None:
            return None
        return self.decay.fitted_ratio, self.decay.predicted_ratio

    def csv_row(self) -> dict:
        return {
            "N": self.n,
            "lambda_gap": self.interface_eigenvalue,
            "lambda_limit": self.limit_eigenvalue,
            "abs_error": self.abs_error,
            "fitted_ratio": None if self.decay is None else self.decay.fitted_ratio,
            "predicted_ratio": None if self.decay is None else self.decay.predicted_ratio,
        }


def find_gap_eigenvalue(spec: DimerSpec, with_vector: bool = True) -> GapReport:
    """Count the eigenvalues of the defect chain inside the gap and extract the interface one.

    The count comes from Sturm inertia at both gap endpoints; eigenvalues that
    sit on a band edge up to rounding (``classify`` says ``boundary``) are not
    counted. More than one eigenvalue in the gap contradicts uniqueness
    and raises.
    """
    spec.require_gap()
    matrix = assemble(build_defect_chain(spec))
    lo, hi = 2.0 / spec.s2, 2.0 / spec.s1
    vals = [v for v in eigenvalues(matrix, interval=(lo, hi)) if v > lo and classify(v, spec).kind == "gap"]
    vals = np.asarray(vals)
    lam0 = limit_eigenvalue(spec)
    if vals.size > 1:
        raise TheoryViolationError(f"{vals.size} eigenvalues in the gap for {spec}")
    if vals.size == 0:
        return GapReport(spec, matrix.n, 0, None, lam0, None, None, None)
    lam = float(vals[0])
    vec = decay = None
    if with_vector:
        vec = eigenvector(matrix, lam).vector
        if spec.m >= 5:
            decay = decay_fit(vec, spec)
    return GapReport(spec, matrix.n, 1, lam, lam0, abs(lam - lam0), vec, decay)


@dataclass(frozen=True)
class ConvergenceRow:
    m: int
    n: int
    lambda_gap: float
    lambda_limit: float
    abs_error: float
    omega_gap: float
    omega_limit: float
    omega_error: float
    fitted_ratio: float | None
    predicted_ratio: float | None

    def csv_row(self) -> dict:
        return {
            "N": self.n,
            "lambda_gap": self.lambda_gap,
            "lambda_limit": self.lambda_limit,
            "abs_error": self.abs_error,
            "fitted_ratio": self.fitted_ratio,
            "predicted_ratio": self.predicted_ratio,
        }


def convergence_study(
    spec: DimerSpec,
    m_list: Sequence[int],
    consts: PhysicalConstants | None = None,
) -> list[ConvergenceRow]:
    """Interface eigenvalue and frequency errors against the limit, one row per ``m``."""
    consts = consts or PhysicalConstants()
    rows = []
    for m in m_list:
        if m < 2:
            raise DomainError(f"convergence study needs m >= 2, got {m}")
        report = find_gap_eigenvalue(spec.with_m(m), with_vector=m >= 5)
        if report.interface_eigenvalue is None:
            raise TheoryViolationError(f"no eigenvalue in the gap at m={m}")
        w_gap = eigenvalue_to_frequency(report.interface_eigenvalue, spec.ell, consts)
        w_lim = eigenvalue_to_frequency(report.limit_eigenvalue, spec.ell, consts)
        fit = report.decay_fit
        rows.append(
            ConvergenceRow(
                m=m,
                n=report.n,
                lambda_gap=report.interface_eigenvalue,
                lambda_limit=report.limit_eigenvalue,
                abs_error=report.abs_error,
                omega_gap=w_gap,
                omega_limit=w_lim,
                omega_error=abs(w_gap - w_lim),
                fitted_ratio=None if fit is None else fit[0],
                predicted_ratio=None if fit is None else fit[1],
            )
        )
    return rows


class LogLinearFit(NamedTuple):
    slope: float
    intercept: float
    r_squared: float


def log_linear_fit(x: Sequence[float], values: Sequence[float]) -> LogLinearFit:
    """Fit ``log(values) = slope * x + intercept``."""
    x = np.asarray(x, dtype=float)
    values = np.asarray(values, dtype=float)
    if x.size < 2 or np.any(values <= 0):
        raise InsufficientDataError("log-linear fit needs >= 2 positive values")
    return LogLinearFit(*_line_fit(x, np.log(values)))


@dataclass(frozen=True, eq=False)
class PseudoResidual:
    """Gap eigenpair of size ``N`` tested as an approximate eigenpair of size ``N + 4k``.

    ``seam_residual`` is the part of the residual created by the embedding
    (four entries next to the zero padding); ``residual_norm`` is the full
    residual norm including the solver's own residual.
    """

    m: int
    k: int
    eigenvalue: float
    residual_norm: float
    spectral_distance: float
    seam_residual: np.ndarray
    edge_amplitude: float
    predicted_norm: float

    @property
    def holds(self) -> bool:
        return self.spectral_distance <= self.residual_norm


def pseudo_residual(spec: DimerSpec, k: int) -> PseudoResidual:
    """Embed the interface mode of the ``4m+1`` chain into the ``4(m+k)+1`` chain."""
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    report = find_gap_eigenvalue(spec)
    if report.interface_eigenvalue is None:
        raise TheoryViolationError(f"no interface eigenvalue for m={spec.m}")
    lam, v = report.interface_eigenvalue, report.eigenvector
    small = assemble(build_defect_chain(spec))
    big = assemble(build_defect_chain(spec.with_m(spec.m + k)))
    n = small.n
    padded = np.zeros(big.n)
    padded[2 * k : 2 * k + n] = v
    inner = np.zeros(big.n)
    inner[2 * k : 2 * k + n] = small.matvec(v)
    seam = big.matvec(padded) - inner
    residual = big.matvec(padded) - lam * padded
    distance = float(np.min(np.abs(eigenvalues(big) - lam)))
    beta2 = coefficients(spec).beta2
    return PseudoResidual(
        m=spec.m,
        k=k,
        eigenvalue=lam,
        residual_norm=float(np.linalg.norm(residual)),
        spectral_distance=distance,
        seam_residual=seam,
        edge_amplitude=float(abs(v[0])),
        predicted_norm=2.0 * abs(beta2 * v[0]),
    )
