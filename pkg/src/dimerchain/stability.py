"""Random spacing perturbations of the defect chain and the eigenvalue/eigenvector bounds.

Each trial perturbs every spacing by uniform noise, measures how far the
spectrum and the interface mode move, and checks the Weyl bound ``2 eps`` on
eigenvalue shifts and the Davis-Kahan bound ``2 sqrt(2) eps / delta`` on the
interface eigenvector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .capacitance import SymTridiagonal, assemble
from .errors import DomainError
from .geometry import DimerSpec, PerturbationSpec, ResonatorChain, build_defect_chain, perturbation_offsets
from .tridiag import batch_eigenvalues, eigenvalues, eigenvector

__all__ = [
    "BOUND_ATOL",
    "EpsilonBudget",
    "WeylCheck",
    "DavisKahanCheck",
    "TrialOutcome",
    "MonteCarloReport",
    "epsilon_budget",
    "eta_bound",
    "weyl_check",
    "canonical_angles",
    "davis_kahan_check",
    "run_trial",
    "monte_carlo",
]

BOUND_ATOL = 1e-10


@dataclass(frozen=True, eq=False)
class EpsilonBudget:
    """Per-spacing changes ``eps_i = 1/s_hat_i - 1/s_i`` and their worst adjacent pair sum."""

    eps_i: np.ndarray
    eps: float


def _budget_from_spacings(base: np.ndarray, perturbed: np.ndarray) -> EpsilonBudget:
    offsets = perturbed - base
    eps_i = -offsets / (base * (base + offsets))
    mag = np.abs(eps_i)
    eps = float(np.max(mag[:-1] + mag[1:])) if mag.size > 1 else float(mag.max(initial=0.0))
    return EpsilonBudget(eps_i, eps)


def epsilon_budget(base: DimerSpec, perturbed: ResonatorChain) -> EpsilonBudget:
    reference = build_defect_chain(base).spacings_array()
    spacings = perturbed.spacings_array()
    if spacings.size != reference.size:
        raise DomainError(
            f"perturbed chain has {perturbed.n} resonators, the base defect chain has {reference.size + 1}"
        )
    return _budget_from_spacings(reference, spacings)


def eta_bound(spec: DimerSpec, eta: float) -> float:
    """Supremum of ``eps`` over offsets in ``(-eta, eta)``.

    Each ``|eps_i|`` is largest when the spacing shrinks by ``eta``; the worst
    adjacent pair is ``(s1, s2)`` or the ``(s2, s2)`` interface.
    """
    s = build_defect_chain(spec.with_m(max(spec.m, 1))).spacings_array()
    if eta >= s.min():
        raise DomainError(f"eta={eta} must be smaller than the smallest spacing {s.min()}")
    worst = eta / (s * (s - eta))
    return float(np.max(worst[:-1] + worst[1:]))


@dataclass(frozen=True)
class WeylCheck:
    max_shift: float
    ok: bool
    empirical_ratio: float


def weyl_check(
    base_values: Sequence[float],
    pert_values: Sequence[float],
    budget: EpsilonBudget,
    atol: float = BOUND_ATOL,
) -> WeylCheck:
    """Compare sorted spectra against ``|lambda_hat_k - lambda_k| <= 2 eps``."""
    base_values = np.asarray(base_values, dtype=float)
    pert_values = np.asarray(pert_values, dtype=float)
    if base_values.shape != pert_values.shape:
        raise DomainError("spectra must have equal sizes")
    shift = float(np.max(np.abs(pert_values - base_values))) if base_values.size else 0.0
    ratio = shift / budget.eps if budget.eps > 0 else 0.0
    return WeylCheck(shift, shift <= 2.0 * budget.eps + atol, ratio)


def canonical_angles(E: np.ndarray, F: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Principal angles between the column spans of ``E`` and ``F``, ascending."""
    E = np.asarray(E, dtype=float)
    F = np.asarray(F, dtype=float)
    if E.ndim == 1:
        E = E[:, None]
    if F.ndim == 1:
        F = F[:, None]
    if E.shape != F.shape:
        raise DomainError(f"column sets must have equal shapes, got {E.shape} and {F.shape}")
    r = E.shape[1]
    for name, X in (("E", E), ("F", F)):
        if np.max(np.abs(X.T @ X - np.eye(r))) > tol:
            raise DomainError(f"columns of {name} are not orthonormal")
    sigma = np.clip(np.linalg.svd(E.T @ F, compute_uv=False), 0.0, 1.0)
    return np.sort(np.arccos(sigma))


@dataclass(frozen=True)
class DavisKahanCheck:
    eligible: bool
    dislocation: float
    delta: float
    delta0: float
    bound: float | None
    apriori_bound: float | None
    ok: bool | None
    apriori_ok: bool | None


def _neighbour_gap(lam: float, values: np.ndarray, i: int) -> float:
    gaps = [abs(lam - values[j]) for j in (i - 1, i + 1) if 0 <= j < values.size]
    return min(gaps) if gaps else math.inf


def davis_kahan_check(
    base_values: np.ndarray,
    base_vector: np.ndarray,
    pert_values: np.ndarray,
    pert_vector: np.ndarray,
    gap_index: int,
    budget: EpsilonBudget,
    spec: DimerSpec,
    atol: float = BOUND_ATOL,
) -> DavisKahanCheck:
    """Interface-eigenvector dislocation against the a posteriori and a priori bounds.

    Both vectors are unit length; ``pert_vector`` is sign-aligned with
    ``base_vector`` before the distance is taken. Trials with
    ``eps >= (1/s1 - 1/s2) / 2`` violate the gap hypothesis of the bound and are marked ineligible.
    """
    v = np.asarray(base_vector, dtype=float)
    w = np.asarray(pert_vector, dtype=float)
    if v @ w < 0:
        w = -w
    dislocation = float(np.linalg.norm(v - w))
    lam = float(base_values[gap_index])
    delta = _neighbour_gap(lam, np.asarray(pert_values), gap_index)
    delta0 = _neighbour_gap(lam, np.asarray(base_values), gap_index)
    eps = budget.eps
    eligible = eps < 0.5 * (1.0 / spec.s1 - 1.0 / spec.s2)
    if not eligible:
        return DavisKahanCheck(False, dislocation, delta, delta0, None, None, None, None)
    bound = 2.0 * math.sqrt(2.0) * eps / delta if delta > 0 else math.inf
    apriori = apriori_ok = None
    if delta0 > 2.0 * eps:
        apriori = 2.0 * math.sqrt(2.0) * eps / (delta0 - 2.0 * eps)
        apriori_ok = dislocation <= apriori + atol
    return DavisKahanCheck(True, dislocation, delta, delta0, bound, apriori, dislocation <= bound + atol, apriori_ok)


@dataclass(frozen=True)
class TrialOutcome:
    trial_index: int
    eps: float
    max_eigval_shift: float
    weyl_ok: bool
    weyl_ratio: float
    interface_eigenvalue: float
    interface_in_gap: bool
    shrunk_gap_count: int
    interface_vec_dislocation: float
    dk_eligible: bool
    dk_bound: float | None
    dk_apriori_bound: float | None
    dk_ok: bool | None
    dk_apriori_ok: bool | None

    def csv_row(self) -> dict:
        return {
            "trial": self.trial_index,
            "eps": self.eps,
            "max_shift": self.max_eigval_shift,
            "weyl_ok": int(self.weyl_ok),
            "weyl_ratio": self.weyl_ratio,
            "interface_eigenvalue": self.interface_eigenvalue,
            "in_gap": int(self.interface_in_gap),
            "dislocation": self.interface_vec_dislocation,
            "dk_eligible": int(self.dk_eligible),
            "dk_bound": self.dk_bound,
            "dk_apriori_bound": self.dk_apriori_bound,
            "dk_ok": None if self.dk_ok is None else int(self.dk_ok),
        }


@dataclass(frozen=True, eq=False)
class _Baseline:
    spec: DimerSpec
    spacings: np.ndarray
    values: np.ndarray
    gap_index: int
    vector: np.ndarray


def _baseline(spec: DimerSpec) -> _Baseline:
    spec.require_gap()
    matrix = assemble(build_defect_chain(spec))
    values = eigenvalues(matrix)
    lo, hi = 2.0 / spec.s2, 2.0 / spec.s1
    inside = np.flatnonzero((values > lo) & (values < hi))
    if inside.size != 1:
        raise DomainError(f"expected one interface eigenvalue, found {inside.size} (is m too small?)")
    i = int(inside[0])
    vec = eigenvector(matrix, values[i]).vector
    return _Baseline(spec, build_defect_chain(spec).spacings_array(), values, i, vec)


def _trial_from_values(
    base: _Baseline,
    trial_index: int,
    spacings: np.ndarray,
    diag: np.ndarray,
    offdiag: np.ndarray,
    values: np.ndarray,
) -> TrialOutcome:
    spec = base.spec
    budget = _budget_from_spacings(base.spacings, spacings)
    weyl = weyl_check(base.values, values, budget)
    i = base.gap_index
    matrix = SymTridiagonal(diag, offdiag)
    vec = eigenvector(matrix, values[i]).vector
    dk = davis_kahan_check(base.values, base.vector, values, vec, i, budget, spec)
    lo, hi = 2.0 / spec.s2, 2.0 / spec.s1
    shrunk = int(np.count_nonzero((values > lo + 2 * budget.eps) & (values < hi - 2 * budget.eps)))
    return TrialOutcome(
        trial_index=trial_index,
        eps=budget.eps,
        max_eigval_shift=weyl.max_shift,
        weyl_ok=weyl.ok,
        weyl_ratio=weyl.empirical_ratio,
        interface_eigenvalue=float(values[i]),
        interface_in_gap=bool(lo < values[i] < hi),
        shrunk_gap_count=shrunk,
        interface_vec_dislocation=dk.dislocation,
        dk_eligible=dk.eligible,
        dk_bound=dk.bound,
        dk_apriori_bound=dk.apriori_bound,
        dk_ok=dk.ok,
        dk_apriori_ok=dk.apriori_ok,
    )


def _perturbed_batch(base: _Baseline, pert: PerturbationSpec, trials: Sequence[int]):
    if pert.eta >= base.spacings.min():
        raise DomainError(f"eta={pert.eta} must be smaller than the smallest spacing {base.spacings.min()}")
    spacings = np.stack([base.spacings + perturbation_offsets(pert, t, base.spacings.size) for t in trials])
    inv = 1.0 / spacings
    diag = np.zeros((len(trials), base.spacings.size + 1))
    diag[:, :-1] += inv
    diag[:, 1:] += inv
    return spacings, diag, -inv


def run_trial(spec: DimerSpec, pert: PerturbationSpec, trial_index: int) -> TrialOutcome:
    """One perturbation trial, reproducible on its own from ``(pert.seed, trial_index)``."""
    base = _baseline(spec)
    spacings, diag, off = _perturbed_batch(base, pert, [trial_index])
    values = batch_eigenvalues(diag, off)
    return _trial_from_values(base, trial_index, spacings[0], diag[0], off[0], values[0])


@dataclass(frozen=True, eq=False)
class MonteCarloReport:
    spec: DimerSpec
    eta: float
    seed: int
    outcomes: list[TrialOutcome] = field(repr=False)

    @property
    def runs(self) -> int:
        return len(self.outcomes)

    @property
    def violations_weyl(self) -> int:
        return sum(not o.weyl_ok for o in self.outcomes)

    @property
    def violations_dk(self) -> int:
        return sum(o.dk_ok is False for o in self.outcomes)

    @property
    def violations_dk_apriori(self) -> int:
        return sum(o.dk_apriori_ok is False for o in self.outcomes)

    @property
    def ineligible(self) -> int:
        return sum(not o.dk_eligible for o in self.outcomes)

    @property
    def left_gap(self) -> int:
        return sum(not o.interface_in_gap for o in self.outcomes)

    @property
    def ratio_max(self) -> float:
        return max(o.weyl_ratio for o in self.outcomes)

    def dislocation_stats(self) -> dict:
        d = np.array([o.interface_vec_dislocation for o in self.outcomes])
        return {"mean": float(d.mean()), "min": float(d.min()), "max": float(d.max())}

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "eta": self.eta,
            "seed": self.seed,
            "violations_weyl": self.violations_weyl,
            "violations_dk": self.violations_dk,
            "violations_dk_apriori": self.violations_dk_apriori,
            "dk_ineligible": self.ineligible,
            "interface_left_gap": self.left_gap,
            "dislocation": self.dislocation_stats(),
            "ratio_max": self.ratio_max,
            "max_shift": max(o.max_eigval_shift for o in self.outcomes),
        }


def monte_carlo(
    spec: DimerSpec,
    pert: PerturbationSpec,
    runs: int,
    batch_size: int = 1000,
) -> MonteCarloReport:
    """Trials ``0 .. runs-1``; eigenvalues are bisected for a whole batch of matrices at once."""
    if runs < 1:
        raise DomainError(f"runs must be >= 1, got {runs}")
    base = _baseline(spec)
    outcomes: list[TrialOutcome] = []
    for start in range(0, runs, batch_size):
        trials = list(range(start, min(start + batch_size, runs)))
        spacings, diag, off = _perturbed_batch(base, pert, trials)
        values = batch_eigenvalues(diag, off)
        for row, t in enumerate(trials):
            outcomes.append(_trial_from_values(base, t, spacings[row], diag[row], off[row], values[row]))
    return MonteCarloReport(spec, pert.eta, pert.seed, outcomes)
