"""Interface modes of finite dimer chains of subwavelength resonators at the capacitance-matrix level."""

__version__ = "0.1.0"

from .capacitance import PhysicalConstants, SymTridiagonal, assemble, coefficients, eigenvalue_to_frequency
from .errors import (
    DimerChainError,
    DomainError,
    EmptyGapError,
    InvalidGeometryError,
    OutputError,
    SolverFailureError,
)
from .gap import (
    bulk_gap,
    classify,
    convergence_study,
    decay_fit,
    dimer_closed_form,
    find_gap_eigenvalue,
    limit_eigenvalue,
    pseudo_residual,
)
from .geometry import (
    DimerSpec,
    PerturbationSpec,
    ResonatorChain,
    build_defect_chain,
    build_uniform_dimer,
    perturb_chain,
)
from .stability import monte_carlo
from .topology import indicator, indicator_sweep, mirror_pairs
from .tridiag import Spectrum, dense_oracle, eigenvalues, eigenvector, solve

__all__ = [
    "__version__",
    "PhysicalConstants",
    "SymTridiagonal",
    "assemble",
    "coefficients",
    "eigenvalue_to_frequency",
    "DimerChainError",
    "DomainError",
    "EmptyGapError",
    "InvalidGeometryError",
    "OutputError",
    "SolverFailureError",
    "bulk_gap",
    "classify",
    "convergence_study",
    "decay_fit",
    "dimer_closed_form",
    "find_gap_eigenvalue",
    "limit_eigenvalue",
    "pseudo_residual",
    "DimerSpec",
    "PerturbationSpec",
    "ResonatorChain",
    "build_defect_chain",
    "build_uniform_dimer",
    "perturb_chain",
    "monte_carlo",
    "indicator",
    "indicator_sweep",
    "mirror_pairs",
    "Spectrum",
    "dense_oracle",
    "eigenvalues",
    "eigenvector",
    "solve",
]
