"""Pairwise mirror operator and the discrete topological indicator on dimer chains."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .capacitance import assemble
from .errors import DomainError
from .geometry import DimerSpec, build_uniform_dimer
from .tridiag import solve

__all__ = ["IndicatorSweep", "mirror_pairs", "indicator", "indicator_sweep"]

EDGE_TOL = 1e-12


def mirror_pairs(v) -> np.ndarray:
    """Swap the entries inside every consecutive pair: ``(v1, v2, v3, v4) -> (v2, v1, v4, v3)``."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size % 2:
        raise DomainError(f"mirror_pairs needs a vector of even length, got shape {v.shape}")
    return v.reshape(-1, 2)[:, ::-1].ravel()


def indicator(v) -> float:
    """``<v, P v> / |v|^2`` with ``P`` the pairwise mirror; lies in ``[-1, 1]``."""
    v = np.asarray(v, dtype=float)
    top = np.max(np.abs(v), initial=0.0)
    if top == 0:
        raise DomainError("indicator is undefined for the zero vector")
    u = v / top
    return float(u @ mirror_pairs(u)) / float(u @ u)


@dataclass(frozen=True)
class IndicatorSweep:
    spec: DimerSpec
    dimers: int
    entries: tuple[tuple[float, float], ...]
    band_edge_index: int
    band_edge_eigenvalue: float
    band_edge_value: float

    def to_dict(self) -> dict:
        return {
            "s1": float(self.spec.s1),
            "s2": float(self.spec.s2),
            "dimers": self.dimers,
            "band_edge_index": self.band_edge_index,
            "band_edge_eigenvalue": self.band_edge_eigenvalue,
            "band_edge_value": self.band_edge_value,
        }


def indicator_sweep(spec: DimerSpec, dimers: int, at: float | None = None) -> IndicatorSweep:
    """Indicator of every eigenvector of the defectless chain with ``dimers`` unit cells.

    The reported mode is the top of the first band, the largest eigenvalue not
    above ``2 / max(s1, s2)``. Passing ``at`` selects the eigenvalue closest to
    that value instead.
    """
    if dimers < 2:
        raise DomainError(f"dimers must be >= 2, got {dimers}")
    spectrum = solve(assemble(build_uniform_dimer(spec, 2 * dimers)))
    values = spectrum.values
    js = [indicator(spectrum.vectors[:, k]) for k in range(values.size)]
    if at is None:
        edge = 2.0 / max(float(spec.s1), float(spec.s2))
        idx = int(np.flatnonzero(values <= edge + EDGE_TOL * edge)[-1])
    else:
        idx = int(np.argmin(np.abs(values - at)))
    entries = tuple((float(lam), j) for lam, j in zip(values, js))
    return IndicatorSweep(spec, dimers, entries, idx, float(values[idx]), js[idx])
