"""The (alpha_hat, beta) two-step integrator with P1 finite elements.

For n >= 1 one step solves

    (M + g+ k^2 K) v^{n+1} = M v^n - k K (g+ u^n + g- u^{n-1})
                             + M I_h[ sigma(u^n, v^{n-1/2}) dW_n
                                      + alpha_hat Du_sigma(u^n, v^{n-1/2}) v^n dW_hat_n
                                      + k/2 (3 F(u^n, v^n) - F(u^{n-1}, v^{n-1})) ]

with g+- = (1 +- beta k^beta) / 2, and sets u^{n+1} = u^n + k v^{n+1}.
The matrix on the left is fixed for a run and factored once.

Every nodal array may carry leading batch axes, so a whole block of
Monte-Carlo samples advances in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from stochwave.fem1d import (
    FactoredTriDiag,
    Grid1D,
    TriDiag,
    assemble_mass,
    assemble_stiffness,
    discrete_laplacian,
    interpolate,
)
from stochwave.model import Problem
from stochwave.noise import IncrementSet, dyadic_level, eval_noise_field

BLOWUP_THRESHOLD = 1e12

FIRST_VELOCITY = ("consistent", "literal")


class BlowUpError(FloatingPointError):
    def __init__(self, step: int, max_norm: float):
        self.step = step
        self.max_norm = max_norm
        super().__init__(f"blow-up at step {step}: max nodal |value| = {max_norm:.6g}")


@dataclass(frozen=True)
class SchemeParams:
    alpha_hat: int = 1
    beta: float = 0.0
    k: float = 2.0**-6
    T: float = 1.0
    # how v^1 is formed, see init_state
    first_velocity: str = "consistent"

    def __post_init__(self):
        if self.alpha_hat not in (0, 1):
            raise ValueError(f"alpha_hat must be 0 or 1, got {self.alpha_hat!r}")
        if not 0.0 <= self.beta < 0.5:
            raise ValueError(f"beta must lie in [0, 1/2), got {self.beta!r}")
        dyadic_level(self.k, "time step k")
        n = self.T / self.k
        if n != int(n) or n < 1:
            raise ValueError(f"T={self.T} is not a whole number of steps k={self.k}")
        if self.first_velocity not in FIRST_VELOCITY:
            raise ValueError(f"first_velocity must be one of {FIRST_VELOCITY}")

    @property
    def n_steps(self) -> int:
        return int(self.T / self.k)

    @property
    def gamma_plus(self) -> float:
        return 0.5 * (1.0 + self.beta * self.k**self.beta)

    @property
    def gamma_minus(self) -> float:
        return 0.5 * (1.0 - self.beta * self.k**self.beta)

    def stability_warning(self, problem: Problem) -> str | None:
        if self.beta == 0.0 and problem.v_dependent:
            return (
                f"beta = 0 with v-dependent sigma/F ({problem.label}) is outside the "
                "stability guarantee; use 0 < beta < 1/2"
            )
        return None


@dataclass(frozen=True, eq=False)
class SchemeState:
    n: int
    u_prev: np.ndarray
    u_curr: np.ndarray
    v_prev: np.ndarray
    v_curr: np.ndarray

    def __post_init__(self):
        for name in ("u_prev", "u_curr", "v_prev", "v_curr"):
            getattr(self, name).setflags(write=False)


@dataclass(frozen=True)
class EnergyReport:
    e_kin: np.ndarray | float
    e_ela: np.ndarray | float
    e_total: np.ndarray | float


@dataclass(frozen=True, eq=False)
class Discretization:
    """Matrices shared by every path of a run."""

    grid: Grid1D
    params: SchemeParams
    M: TriDiag
    K: TriDiag
    system: FactoredTriDiag
    mass: FactoredTriDiag

    @classmethod
    def build(cls, grid: Grid1D, params: SchemeParams) -> Discretization:
        M, K = assemble_mass(grid), assemble_stiffness(grid)
        system = (M + params.gamma_plus * params.k**2 * K).factor()
        return cls(grid, params, M, K, system, M.factor())


def _check(n: int, *fields: np.ndarray) -> None:
    for f in fields:
        worst = float(np.max(np.abs(f))) if f.size else 0.0
        if not math.isfinite(worst) or worst > BLOWUP_THRESHOLD:
            raise BlowUpError(n, worst)


def _check_increments(inc: IncrementSet, n: int, params: SchemeParams) -> None:
    if inc.n_steps <= n:
        raise ValueError(f"increments cover {inc.n_steps} steps, step {n} requested")
    if inc.k != params.k:
        raise ValueError(f"increments are for k={inc.k}, scheme uses k={params.k}")


def init_state(
    p: Problem,
    grid: Grid1D | Discretization,
    params: SchemeParams,
    inc: IncrementSet,
    check: bool = True,
) -> SchemeState:
    """Start values u^0, v^0 (interpolated data) and u^1, v^1.

    u^1 = u0 + k v0 + k^2/2 Lap u0 + k^2 F(u0, v0) + (k + k^2) sigma(u0, v0) dW_0.

    ``first_velocity="consistent"`` takes v^1 = (u^1 - u^0) / k, which keeps
    the first velocity in line with u^{n+1} = u^n + k v^{n+1};
    ``"literal"`` takes v^1 = v0 + k sigma(u0, v0) W(t_1).
    """
    disc = grid if isinstance(grid, Discretization) else None
    g = disc.grid if disc else grid
    _check_increments(inc, 0, params)
    k = params.k
    u0 = interpolate(p.u0, g)
    v0 = interpolate(p.v0, g)
    if p.laplace_u0 is not None:
        lap = interpolate(p.laplace_u0, g)
    else:
        mass = disc.mass if disc else assemble_mass(g).factor()
        lap = discrete_laplacian(u0, mass, assemble_stiffness(g))
    dW0 = eval_noise_field(inc.dW[..., 0, :], g)
    sig = p.sigma(u0, v0) * dW0
    u1 = u0 + k * v0 + 0.5 * k * k * lap + k * k * p.F(u0, v0) + (k + k * k) * sig
    if params.first_velocity == "consistent":
        v1 = (u1 - u0) / k
    else:
        v1 = v0 + k * sig  # W(t_1) = dW_0
    shape = np.broadcast(u1, v1).shape
    if check:
        _check(1, u1, v1)
    return SchemeState(
        1,
        np.broadcast_to(u0, shape).copy(),
        np.broadcast_to(u1, shape).copy(),
        np.broadcast_to(v0, shape).copy(),
        np.broadcast_to(v1, shape).copy(),
    )


def step(
    state: SchemeState,
    p: Problem,
    params: SchemeParams,
    inc: IncrementSet,
    fem: Discretization,
    check: bool = True,
) -> SchemeState:
    n = state.n
    if n < 1:
        raise ValueError("step needs a state with n >= 1; call init_state first")
    _check_increments(inc, n, params)
    k = params.k
    g = fem.grid
    u, u_old, v, v_old = state.u_curr, state.u_prev, state.v_curr, state.v_prev
    v_half = 0.5 * (v + v_old)

    forcing = p.sigma(u, v_half) * eval_noise_field(inc.dW[..., n, :], g)
    if params.alpha_hat:
        forcing = forcing + p.d_sigma_du(u, v_half) * v * eval_noise_field(
            inc.dW_hat[..., n, :], g
        )
    forcing = forcing + 0.5 * k * (3.0 * p.F(u, v) - p.F(u_old, v_old))

    rhs = fem.M.matvec(v + forcing) - k * fem.K.matvec(
        params.gamma_plus * u + params.gamma_minus * u_old
    )
    v_new = fem.system.solve(rhs)
    u_new = u + k * v_new
    if check:
        _check(n + 1, u_new, v_new)
    return SchemeState(n + 1, u, u_new, v, v_new)


def energy(state: SchemeState, M: TriDiag, K: TriDiag) -> EnergyReport:
    e_kin = 0.5 * M.quad(state.v_curr)
    e_ela = 0.5 * K.quad(state.u_curr)
    return EnergyReport(e_kin, e_ela, e_kin + e_ela)


def conserved_two_step_energy(state: SchemeState, M: TriDiag, K: TriDiag):
    """1/2 |v^n|^2 + 1/4 (|grad u^n|^2 + |grad u^{n-1}|^2), exactly conserved
    when sigma = F = 0 and beta = 0."""
    return 0.5 * M.quad(state.v_curr) + 0.25 * (K.quad(state.u_curr) + K.quad(state.u_prev))


@dataclass(frozen=True, eq=False)
class SolveResult:
    state: SchemeState
    blown: np.ndarray  # bool over the batch shape; True for discarded samples


def solve(
    p: Problem,
    fem: Discretization,
    inc: IncrementSet,
    observer: Callable[[SchemeState], None] | None = None,
    mask_blowups: bool = False,
) -> SolveResult:
    """Run from t_0 to T. ``observer`` sees the state at n = 1, ..., N.

    With ``mask_blowups`` a diverging sample is zeroed and flagged instead of
    aborting the whole batch.
    """
    params = fem.params
    with np.errstate(over="ignore", invalid="ignore"):
        state = init_state(p, fem, params, inc, check=not mask_blowups)
    blown = np.zeros(state.u_curr.shape[:-1], dtype=bool)
    if mask_blowups:
        state, blown = _mask(state, blown)
    if observer is not None:
        observer(state)
    for _ in range(1, params.n_steps):
        with np.errstate(over="ignore", invalid="ignore"):
            state = step(state, p, params, inc, fem, check=not mask_blowups)
        if mask_blowups:
            state, blown = _mask(state, blown)
        if observer is not None:
            observer(state)
    return SolveResult(state, blown)


def _mask(state: SchemeState, blown: np.ndarray):
    fields = (state.u_prev, state.u_curr, state.v_prev, state.v_curr)
    bad = np.zeros_like(blown)
    for f in fields:
        with np.errstate(invalid="ignore"):
            bad |= ~np.all(np.abs(f) <= BLOWUP_THRESHOLD, axis=-1)
    if not bad.any():
        return state, blown
    # a flagged sample restarts from zero each step and may diverge again
    blown = blown | bad
    clean = [np.where(blown[..., None], 0.0, f) for f in fields]
    return SchemeState(state.n, *clean), blown
