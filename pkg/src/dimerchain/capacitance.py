"""Capacitance matrices of resonator chains and the eigenvalue-to-frequency map."""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DomainError, NegativeEigenvalueError
from .geometry import DimerSpec, ResonatorChain

__all__ = [
    "SymTridiagonal",
    "PhysicalConstants",
    "DimerCoefficients",
    "assemble",
    "coefficients",
    "eigenvalue_to_frequency",
]


@dataclass(frozen=True, eq=False)
class SymTridiagonal:
    """Symmetric tridiagonal matrix stored as its diagonal and one off-diagonal."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self) -> None:
        diag = np.array(self.diag, dtype=float).ravel()
        offdiag = np.array(self.offdiag, dtype=float).ravel()
        if diag.size == 0:
            raise DomainError("matrix must have at least one row")
        if offdiag.size != diag.size - 1:
            raise DomainError(f"{diag.size} diagonal entries need {diag.size - 1} off-diagonal entries")
        if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(offdiag))):
            raise DomainError("matrix entries must be finite")
        diag.flags.writeable = False
        offdiag.flags.writeable = False
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "offdiag", offdiag)

    @property
    def n(self) -> int:
        return self.diag.size

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def gershgorin(self) -> tuple[float, float]:
        """Interval containing the whole spectrum."""
        radius = np.zeros(self.n)
        radius[:-1] += np.abs(self.offdiag)
        radius[1:] += np.abs(self.offdiag)
        return float(np.min(self.diag - radius)), float(np.max(self.diag + radius))

    def norm_bound(self) -> float:
        """Infinity norm; an upper bound on the spectral norm."""
        lo, hi = self.gershgorin()
        return max(abs(lo), abs(hi), float(np.max(np.abs(self.diag))), np.finfo(float).tiny)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.diag.tobytes())
        h.update(self.offdiag.tobytes())
        return h.hexdigest()

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymTridiagonal):
            return NotImplemented
        return np.array_equal(self.diag, other.diag) and np.array_equal(self.offdiag, other.offdiag)

    def __hash__(self) -> int:
        return hash(self.fingerprint())

    def write_csv(self, path: str | Path) -> None:
        """Write ``index, diag, offdiag`` rows; the last off-diagonal cell is blank."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["index", "diag", "offdiag"])
            for i, d in enumerate(self.diag):
                off = repr(float(self.offdiag[i])) if i < self.n - 1 else ""
                writer.writerow([i, repr(float(d)), off])


@dataclass(frozen=True)
class PhysicalConstants:
    v_b: float = 1.0
    delta: float = 1e-3

    def __post_init__(self) -> None:
        if not (math.isfinite(self.v_b) and self.v_b > 0):
            raise DomainError(f"v_b must be > 0, got {self.v_b!r}")
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise DomainError(f"delta must be > 0, got {self.delta!r}")


class DimerCoefficients(NamedTuple):
    alpha: float
    beta1: float
    beta2: float
    eta: float
    alpha_tilde: float


def assemble(chain: ResonatorChain) -> SymTridiagonal:
    """Capacitance matrix of ``chain``: a weighted graph Laplacian with weights ``1/s_i``."""
    inv = 1.0 / chain.spacings_array()
    diag = np.zeros(chain.n)
    diag[:-1] += inv
    diag[1:] += inv
    return SymTridiagonal(diag, -inv)


def coefficients(spec: DimerSpec) -> DimerCoefficients:
    """Entries of the defect-chain capacitance matrix in terms of ``s1``, ``s2``.

    Returns interior diagonal ``alpha``, the two couplings, the interface diagonal
    ``eta`` and the corner diagonal ``alpha_tilde``.
    """
    inv1 = 1.0 / spec.s1
    inv2 = 1.0 / spec.s2
    return DimerCoefficients(
        alpha=inv1 + inv2,
        beta1=-inv1,
        beta2=-inv2,
        eta=2.0 * inv2,
        alpha_tilde=inv1,
    )


def eigenvalue_to_frequency(mu: float, ell: float, consts: PhysicalConstants, tol: float = 1e-10) -> float:
    """Leading-order resonant frequency ``v_b * sqrt(delta * mu / ell)``.

    Eigenvalues in ``[-tol, 0)`` are rounding noise around the zero mode and
    are clamped to zero.
    """
    if ell <= 0:
        raise DomainError(f"ell must be > 0, got {ell!r}")
    if mu < -tol:
        raise NegativeEigenvalueError(f"capacitance eigenvalue {mu!r} is negative beyond tolerance {tol}")
    return consts.v_b * math.sqrt(consts.delta * max(mu, 0.0) / ell)
