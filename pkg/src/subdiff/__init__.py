"""Numerical laboratory for sub-diffusion limits of age-structured jump models.

The package provides four cross-validating routes to the same physics:

* deterministic solvers for the age-structured renewal equation, with and
  without spatial jumps (:mod:`subdiff.age_solver`),
* a particle-level continuous-time random walk simulator (:mod:`subdiff.ctrw`),
* macroscopic diffusion / sub-diffusion PDE solvers with a fractional memory
  operator (:mod:`subdiff.fracpde`),
* numerical Laplace transforms and the transform identities the scaling
  analysis rests on (:mod:`subdiff.laplace`),

plus an experiment harness and command line front end (:mod:`subdiff.harness`,
:mod:`subdiff.cli`).
"""

from subdiff.hazards import ConstantHazard, HazardModel, PowerLawHazard
from subdiff.kernels import (
    DiracKernel,
    JumpKernel,
    TriangularKernel,
    TruncatedGaussianKernel,
)
from subdiff.initial_data import (
    CosineProfile,
    ExponentialAgeProfile,
    GaussianProfile,
    InitialAgeData,
)
from subdiff.laplace import (
    SampledFunction,
    fractional_convolution_residual,
    gamma_complement,
    laplace_transform,
    shifted_convolution_residual,
    tail_integral_bounds,
)
from subdiff.age_solver import (
    AgeGrid,
    AgeSpaceResult,
    RenewalTrace,
    decay_weighted_integrals,
    renewal_integral_identity,
    solve_age_homogeneous,
    solve_age_space,
)
from subdiff.ctrw import ParticleSnapshots, empirical_density, msd, simulate_particles
from subdiff.fracpde import (
    DensityHistory,
    MemoryWeights,
    chain_rule_residual,
    energy_balance,
    memory_operator,
    mittag_leffler,
    solve_diffusion,
    solve_subdiffusion,
)
from subdiff.config import ConfigError, ExperimentConfig
from subdiff.errors import NumericalFailure

__version__ = "0.1.0"

__all__ = [
    "AgeGrid",
    "AgeSpaceResult",
    "ConfigError",
    "ConstantHazard",
    "CosineProfile",
    "DensityHistory",
    "DiracKernel",
    "ExperimentConfig",
    "ExponentialAgeProfile",
    "GaussianProfile",
    "HazardModel",
    "InitialAgeData",
    "JumpKernel",
    "MemoryWeights",
    "NumericalFailure",
    "ParticleSnapshots",
    "PowerLawHazard",
    "RenewalTrace",
    "SampledFunction",
    "TriangularKernel",
    "TruncatedGaussianKernel",
    "chain_rule_residual",
    "decay_weighted_integrals",
    "empirical_density",
    "energy_balance",
    "fractional_convolution_residual",
    "gamma_complement",
    "laplace_transform",
    "memory_operator",
    "mittag_leffler",
    "msd",
    "renewal_integral_identity",
    "shifted_convolution_residual",
    "simulate_particles",
    "solve_age_homogeneous",
    "solve_age_space",
    "solve_diffusion",
    "solve_subdiffusion",
    "tail_integral_bounds",
]
