"""Resonator chain geometries: uniform dimers, defect chains and perturbed copies."""

from __future__ import annotations

import json
import math
import numbers
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import EmptyGapError, InvalidGeometryError

__all__ = [
    "ResonatorChain",
    "DimerSpec",
    "PerturbationSpec",
    "build_uniform_dimer",
    "build_defect_chain",
    "perturbation_offsets",
    "perturb_chain",
]


def _positive(name: str, value) -> None:
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise InvalidGeometryError(f"{name} must be a real number, got {value!r}")
    if not math.isfinite(float(value)) or value <= 0:
        raise InvalidGeometryError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class ResonatorChain:
    """Chain of identical resonators of length ``ell`` separated by ``spacings``.

    ``lengths`` has one entry per resonator; ``spacings[i]`` is the gap between
    resonators ``i`` and ``i + 1``.
    """

    lengths: tuple[float, ...]
    spacings: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "lengths", tuple(float(x) for x in self.lengths))
        object.__setattr__(self, "spacings", tuple(float(x) for x in self.spacings))
        if not self.lengths:
            raise InvalidGeometryError("a chain needs at least one resonator")
        for x in self.lengths:
            _positive("resonator length", x)
        if any(x != self.lengths[0] for x in self.lengths):
            raise InvalidGeometryError("all resonators must have the same length")
        if len(self.spacings) != len(self.lengths) - 1:
            raise InvalidGeometryError(
                f"{len(self.lengths)} resonators need {len(self.lengths) - 1} spacings, "
                f"got {len(self.spacings)}"
            )
        for s in self.spacings:
            _positive("spacing", s)

    @classmethod
    def from_spacings(cls, spacings: Sequence[float], ell: float = 1.0) -> "ResonatorChain":
        return cls(lengths=(ell,) * (len(spacings) + 1), spacings=tuple(spacings))

    @property
    def n(self) -> int:
        return len(self.lengths)

    @property
    def ell(self) -> float:
        return self.lengths[0]

    def spacings_array(self) -> np.ndarray:
        return np.asarray(self.spacings, dtype=float)

    def to_dict(self) -> dict:
        return {"ell": self.ell, "spacings": list(self.spacings)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "ResonatorChain":
        try:
            return cls.from_spacings(data["spacings"], ell=data["ell"])
        except (KeyError, TypeError) as exc:
            raise InvalidGeometryError(f"malformed chain description: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "ResonatorChain":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DimerSpec:
    """Dimer parameters: alternating spacings ``s1``, ``s2``.

    The defect chain built from it has ``4 m + 1`` resonators.
    """

    s1: float
    s2: float
    m: int = 1
    ell: float = 1.0

    def __post_init__(self) -> None:
        _positive("s1", self.s1)
        _positive("s2", self.s2)
        _positive("ell", self.ell)
        if not isinstance(self.m, numbers.Integral) or self.m < 1:
            raise InvalidGeometryError(f"m must be an integer >= 1, got {self.m!r}")

    @property
    def n_defect(self) -> int:
        return 4 * self.m + 1

    @property
    def has_gap(self) -> bool:
        return self.s1 < self.s2

    def require_gap(self) -> None:
        if not self.has_gap:
            raise EmptyGapError(
                f"the band gap (2/s2, 2/s1) is empty for s1={self.s1}, s2={self.s2}; need s1 < s2"
            )

    def with_m(self, m: int) -> "DimerSpec":
        return DimerSpec(self.s1, self.s2, m, self.ell)


@dataclass(frozen=True)
class PerturbationSpec:
    """Uniform i.i.d. spacing noise on ``(-eta, eta)``, reproducible from ``seed``."""

    eta: float
    seed: int = 0
    distribution: Literal["uniform"] = "uniform"

    def __post_init__(self) -> None:
        if not math.isfinite(self.eta) or self.eta < 0:
            raise InvalidGeometryError(f"eta must be finite and >= 0, got {self.eta!r}")
        if not isinstance(self.seed, numbers.Integral) or not 0 <= self.seed < 2**64:
            raise InvalidGeometryError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.distribution != "uniform":
            raise InvalidGeometryError(f"unsupported distribution {self.distribution!r}")


def _alternating(first: float, second: float, count: int) -> list[float]:
    return [first if i % 2 == 0 else second for i in range(count)]


def build_uniform_dimer(spec: DimerSpec, n: int) -> ResonatorChain:
    """Defect-free chain of ``n`` resonators with spacings ``s1, s2, s1, ...``."""
    if not isinstance(n, numbers.Integral) or n < 2:
        raise InvalidGeometryError(f"a dimer chain needs n >= 2 resonators, got {n!r}")
    return ResonatorChain.from_spacings(_alternating(spec.s1, spec.s2, n - 1), ell=spec.ell)


def build_defect_chain(spec: DimerSpec) -> ResonatorChain:
    """Mirror-symmetric chain of ``4m + 1`` resonators with an ``s2, s2`` interface.

    The left half alternates starting with ``s1``, the right half is its mirror
    image, so spacings ``2m`` and ``2m + 1`` (1-based) are both ``s2``.
    """
    left = _alternating(spec.s1, spec.s2, 2 * spec.m)
    return ResonatorChain.from_spacings(left + left[::-1], ell=spec.ell)


def perturbation_offsets(pert: PerturbationSpec, trial_index: int, size: int) -> np.ndarray:
    """Offsets for one trial, drawn from a Philox stream keyed by ``(seed, trial_index)``.

    Offset ``i`` is the ``i``-th draw of that stream, so any trial can be
    regenerated on its own regardless of how trials are scheduled.
    """
    if not isinstance(trial_index, numbers.Integral) or not 0 <= trial_index < 2**64:
        raise InvalidGeometryError(f"trial_index must be a nonnegative integer, got {trial_index!r}")
    if pert.eta == 0:
        return np.zeros(size)
    key = np.array([pert.seed, trial_index], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    return rng.uniform(-pert.eta, pert.eta, size)


def perturb_chain(chain: ResonatorChain, pert: PerturbationSpec, trial_index: int) -> ResonatorChain:
    """Add seeded uniform noise to every spacing of ``chain``; lengths are untouched."""
    spacings = chain.spacings_array()
    if pert.eta >= spacings.min():
        raise InvalidGeometryError(
            f"eta={pert.eta} must be smaller than the smallest spacing {spacings.min()}"
        )
    offsets = perturbation_offsets(pert, trial_index, spacings.size)
    return ResonatorChain(lengths=chain.lengths, spacings=tuple(spacings + offsets))
