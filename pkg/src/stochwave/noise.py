"""Finite-dimensional Wiener noise W(t, x) = sum_j beta_j(t) e_j(x).

A :class:`WienerPath` holds the mode trajectories on a fine dyadic time grid.
Coarse runs and the reference run draw their increments from the same path
via :func:`coarse_increments`, which is what couples their errors.

Fine increments are rounded to multiples of 2**-40 before being summed, so
every partial sum of the path is exact in float64. Consequently the coarse
increment ``beta(t_{n+1}) - beta(t_n)`` equals the sum of the fine increments
in the window bit for bit, whatever the summation order.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from stochwave.fem1d import Grid1D

_QUANTUM = 2.0**-40
_SEED_MULT = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1

MODE_SHAPES = ("sine",)


class ResolutionError(ValueError):
    """The fine path is too coarse for the requested increments."""


def dyadic_level(x: float, what: str = "step") -> int:
    """Return j with x == 2**-j, or raise ValueError."""
    if not (x > 0 and math.isfinite(x)):
        raise ValueError(f"{what} must be a positive dyadic number 2^-j, got {x!r}")
    mant, exp = math.frexp(x)
    if mant != 0.5:
        raise ValueError(f"{what} must be a dyadic number 2^-j, got {x!r}")
    return 1 - exp


def stream_seed(base_seed: int, sample: int) -> int:
    """Seed of Monte-Carlo sample ``sample``: base XOR (sample * odd constant) mod 2**64."""
    return (int(base_seed) ^ (int(sample) * _SEED_MULT)) & _MASK64


@dataclass(frozen=True)
class NoiseConfig:
    n_modes: int = 3
    fine_level: int = 12
    T: float = 1.0
    mode_shape: str = "sine"

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError(f"n_modes must be >= 1, got {self.n_modes}")
        if self.fine_level < 0:
            raise ValueError(f"fine_level must be >= 0, got {self.fine_level}")
        if self.mode_shape not in MODE_SHAPES:
            raise ValueError(f"unknown mode_shape {self.mode_shape!r}; known: {MODE_SHAPES}")
        if not self.T > 0:
            raise ValueError(f"horizon T must be positive, got {self.T}")
        n = self.T * 2.0**self.fine_level
        if n != int(n):
            raise ValueError(
                f"T={self.T} is not a whole number of fine steps 2^-{self.fine_level}"
            )
        if n > 2**31:
            raise ValueError(f"path length {int(n)} overflows the supported size")

    @property
    def k_fine(self) -> float:
        return 2.0**-self.fine_level

    @property
    def n_fine(self) -> int:
        return int(self.T * 2**self.fine_level)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_fine + 1) * self.k_fine


@dataclass(frozen=True, eq=False)
class WienerPath:
    beta: np.ndarray  # (n_modes, n_fine + 1)
    seed: int
    config: NoiseConfig

    def __post_init__(self):
        self.beta.setflags(write=False)

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.beta, axis=-1)


@dataclass(frozen=True, eq=False)
class IncrementSet:
    """Per coarse step n and mode j: plain, hat and tilde increments.

    Arrays have shape (..., n_steps, n_modes); a leading axis appears when
    several sets are stacked for a batched run.
    """

    k: float
    dW: np.ndarray
    dW_hat: np.ndarray
    dW_tilde: np.ndarray

    def __post_init__(self):
        for arr in (self.dW, self.dW_hat, self.dW_tilde):
            arr.setflags(write=False)

    @property
    def n_steps(self) -> int:
        return self.dW.shape[-2]

    @property
    def n_modes(self) -> int:
        return self.dW.shape[-1]

    def scaled(self, c: float) -> IncrementSet:
        return IncrementSet(self.k, c * self.dW, c * self.dW_hat, c * self.dW_tilde)

    def __getitem__(self, idx) -> IncrementSet:
        """Select along the batch axis."""
        return IncrementSet(self.k, self.dW[idx], self.dW_hat[idx], self.dW_tilde[idx])


def stack_increments(sets: list[IncrementSet]) -> IncrementSet:
    ks = {s.k for s in sets}
    if len(ks) != 1:
        raise ValueError(f"cannot stack increments with different steps {sorted(ks)}")
    return IncrementSet(
        ks.pop(),
        np.stack([s.dW for s in sets]),
        np.stack([s.dW_hat for s in sets]),
        np.stack([s.dW_tilde for s in sets]),
    )


def sample_path(config: NoiseConfig, seed: int) -> WienerPath:
    rng = np.random.default_rng(int(seed) & _MASK64)
    xi = rng.standard_normal((config.n_modes, config.n_fine))
    inc = np.round(xi * (math.sqrt(config.k_fine) / _QUANTUM)) * _QUANTUM
    beta = np.zeros((config.n_modes, config.n_fine + 1))
    np.cumsum(inc, axis=1, out=beta[:, 1:])
    return WienerPath(beta, int(seed), config)


def _stride(config: NoiseConfig, step: float, what: str) -> int:
    level = dyadic_level(step, what)
    if level > config.fine_level:
        raise ResolutionError(
            f"{what} 2^-{level} is finer than the path resolution 2^-{config.fine_level}; "
            f"sample the path with fine_level >= {level}"
        )
    return 2 ** (config.fine_level - level)


def coarse_increments(path: WienerPath, k: float, substep: float | None = None) -> IncrementSet:
    """Increments of ``path`` on the coarse grid of step ``k``.

    ``dW_hat`` uses the piecewise Riemann sum of W at substeps of size
    ``substep`` (default ``k**2``); ``dW_tilde`` uses the same sum at the
    finest resolution of the path.
    """
    cfg = path.config
    s = _stride(cfg, k, "time step k")
    n_steps = cfg.n_fine // s
    if n_steps * s != cfg.n_fine:
        raise ValueError(f"time step k={k} does not divide the horizon T={cfg.T}")
    if substep is None:
        substep = k * k
    q = _stride(cfg, substep, "Ito substep k^2" if substep == k * k else "Ito substep")
    if q > s:
        raise ValueError(f"substep {substep} exceeds the time step {k}")

    beta = path.beta
    at_nodes = beta[:, ::s]  # (M, n_steps + 1)
    dW = at_nodes[:, 1:] - at_nodes[:, :-1]
    kW_next = k * at_nodes[:, 1:]

    # W at the substep nodes t_n + l*q, l = 1..s/q, grouped per coarse step
    sub = beta[:, q::q].reshape(cfg.n_modes, n_steps, s // q)
    dW_hat = kW_next - substep * sub.sum(axis=-1)
    fine = beta[:, 1:].reshape(cfg.n_modes, n_steps, s)
    dW_tilde = kW_next - cfg.k_fine * fine.sum(axis=-1)
    return IncrementSet(k, dW.T.copy(), dW_hat.T.copy(), dW_tilde.T.copy())


def _increment_covariance(k: float) -> np.ndarray:
    """Covariance of (dW, dW_hat, dW_tilde) over one step, one mode.

    dW_hat is taken at substeps q = k^2 (m = 1/k of them) and dW_tilde is the
    exact Ito integral of (s - t_n) dW(s).
    """
    q = k * k
    m = round(1.0 / k)
    j = np.arange(1, m + 1)
    var_w = k
    var_hat = q**3 * np.sum((j - 1.0) ** 2)
    var_tilde = k**3 / 3.0
    cov_w_hat = q**2 * np.sum(j - 1.0)
    cov_w_tilde = k**2 / 2.0
    cov_hat_tilde = q**3 * np.sum((j - 1.0) * (j - 0.5))
    return np.array(
        [
            [var_w, cov_w_hat, cov_w_tilde],
            [cov_w_hat, var_hat, cov_hat_tilde],
            [cov_w_tilde, cov_hat_tilde, var_tilde],
        ]
    )


def sample_increments(
    k: float, n_modes: int, seed: int, T: float = 1.0, batch: int | None = None
) -> IncrementSet:
    """Draw (dW, dW_hat, dW_tilde) directly from their joint Gaussian law.

    Equivalent in distribution to ``coarse_increments`` on a path fine
    enough to resolve k^2, without materialising that path. Only for runs
    that need a single resolution (no coupling to a reference).
    """
    level = dyadic_level(k, "time step k")
    n_steps = T * 2**level
    if n_steps != int(n_steps):
        raise ValueError(f"time step k={k} does not divide the horizon T={T}")
    n_steps = int(n_steps)
    chol = np.linalg.cholesky(_increment_covariance(k))
    rng = np.random.default_rng(int(seed) & _MASK64)
    shape = (n_steps, n_modes, 3) if batch is None else (batch, n_steps, n_modes, 3)
    z = rng.standard_normal(shape) @ chol.T
    return IncrementSet(k, z[..., 0].copy(), z[..., 1].copy(), z[..., 2].copy())


@lru_cache(maxsize=32)
def _mode_matrix(n_cells: int, n_modes: int) -> np.ndarray:
    x = Grid1D(n_cells).nodes
    j = np.arange(1, n_modes + 1)[:, None]
    E = math.sqrt(2.0) * np.sin(j * np.pi * x[None, :])
    E.setflags(write=False)
    return E


def eval_noise_field(coeffs: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Nodal values of sum_j c_j sqrt(2) sin(j pi x); ``coeffs`` is (..., M)."""
    coeffs = np.asarray(coeffs, dtype=float)
    return coeffs @ _mode_matrix(grid.n_cells, coeffs.shape[-1])


def path_to_csv(path: WienerPath) -> str:
    """``t,beta_1,...,beta_M`` header, then one row per fine time, 17 significant digits."""
    cfg = path.config
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + [f"beta_{j}" for j in range(1, cfg.n_modes + 1)])
    for t, row in zip(cfg.times, path.beta.T):
        writer.writerow([f"{t:.17g}"] + [f"{b:.17g}" for b in row])
    return buf.getvalue()


def write_path_csv(path: WienerPath, out: str | Path) -> None:
    Path(out).write_text(path_to_csv(path))
