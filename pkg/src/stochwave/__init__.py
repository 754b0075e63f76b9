"""Stochastic semilinear wave equation in 1D: P1 finite elements, the
(alpha_hat, beta) two-step integrator and Monte-Carlo experiment drivers."""

from stochwave.fem1d import (
    FactoredTriDiag,
    Grid1D,
    TriDiag,
    assemble_mass,
    assemble_stiffness,
    h1_seminorm,
    interpolate,
    l2_norm,
    solve_tridiag,
)
from stochwave.model import PRESETS, Problem, check_derivative, preset
from stochwave.noise import (
    IncrementSet,
    NoiseConfig,
    WienerPath,
    coarse_increments,
    eval_noise_field,
    sample_increments,
    sample_path,
    stream_seed,
)
from stochwave.scheme import (
    BlowUpError,
    EnergyReport,
    SchemeParams,
    SchemeState,
    Discretization,
    conserved_two_step_energy,
    energy,
    init_state,
    solve,
    step,
)

__all__ = [
    "BlowUpError",
    "EnergyReport",
    "FactoredTriDiag",
    "Grid1D",
    "IncrementSet",
    "NoiseConfig",
    "PRESETS",
    "Problem",
    "SchemeParams",
    "SchemeState",
    "Discretization",
    "TriDiag",
    "WienerPath",
    "assemble_mass",
    "assemble_stiffness",
    "check_derivative",
    "coarse_increments",
    "conserved_two_step_energy",
    "energy",
    "eval_noise_field",
    "h1_seminorm",
    "init_state",
    "interpolate",
    "l2_norm",
    "preset",
    "sample_increments",
    "sample_path",
    "solve",
    "solve_tridiag",
    "step",
    "stream_seed",
]
