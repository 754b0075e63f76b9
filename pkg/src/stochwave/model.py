"""Problem definitions: drift F(u, v), diffusion sigma(u, v), its u-derivative
and the initial data, plus the named presets used by the experiments.

All maps act pointwise on numpy arrays (Nemytskii operators) and must be
vectorised; they are evaluated at nodal values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

Pointwise = Callable[[np.ndarray, np.ndarray], np.ndarray]
Initial = Callable[[np.ndarray], np.ndarray]


def _zero(u, v):
    return np.zeros(np.broadcast(u, v).shape)


def _u0(x):
    return np.sin(2 * np.pi * x)


def _v0(x):
    return np.sin(3 * np.pi * x)


def _lap_u0(x):
    return -4 * np.pi**2 * np.sin(2 * np.pi * x)


@dataclass(frozen=True)
class Problem:
    F: Pointwise
    sigma: Pointwise
    d_sigma_du: Pointwise
    u0: Initial = _u0
    v0: Initial = _v0
    laplace_u0: Initial | None = _lap_u0
    label: str = "custom"
    # sigma or F depend on v; beta = 0 is then outside the stability theory
    v_dependent: bool = False
    # sigma is not differentiable somewhere in the sampling box
    nonsmooth_sigma: bool = False
    description: str = ""


def _sqrt_sigma(u, v):
    return np.sqrt(np.abs(u)) + 0.0 * v


def _sqrt_sigma_du(u, v):
    a = np.abs(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(a > 0, np.sign(u) * 0.5 / np.sqrt(a), 0.0)
    return d + 0.0 * v


def _sqrt_drift(u, v):
    return np.sqrt(np.maximum(u, 0.0)) + np.sqrt(np.maximum(v + 2.0, 0.0))


def _cos_drift(u, v):
    return np.cos(u) + 2.0 * v


def _mixed_sigma(u, v):
    return u / (1 + u * u) + v


def _mixed_sigma_du(u, v):
    return (1 - u * u) / (1 + u * u) ** 2 + 0.0 * v


PRESETS: dict[str, Problem] = {
    p.label: p
    for p in [
        Problem(_zero, _zero, _zero, label="zero-noise", description="sigma = 0, F = 0"),
        Problem(
            _zero,
            lambda u, v: 0.5 * u + 0.0 * v,
            lambda u, v: 0.5 + 0.0 * (u + v),
            label="sigma-u-half",
            description="sigma = u/2, F = 0",
        ),
        Problem(
            _zero,
            lambda u, v: 0.5 * v + 0.0 * u,
            _zero,
            label="sigma-v-half",
            v_dependent=True,
            description="sigma = v/2, F = 0",
        ),
        Problem(
            _zero,
            lambda u, v: 2.0 * np.sin(u) + 0.0 * v,
            lambda u, v: 2.0 * np.cos(u) + 0.0 * v,
            label="sin-sigma",
            description="sigma = 2 sin(u), F = 0",
        ),
        Problem(
            _zero,
            lambda u, v: 1.5 * v + 0.0 * u,
            _zero,
            label="sigma-v",
            v_dependent=True,
            description="sigma = 3v/2, F = 0",
        ),
        Problem(
            _cos_drift,
            lambda u, v: u + 0.0 * v,
            lambda u, v: 1.0 + 0.0 * (u + v),
            label="lip-drift",
            v_dependent=True,
            description="sigma = u, F = cos(u) + 2v",
        ),
        Problem(
            _sqrt_drift,
            lambda u, v: u + 0.0 * v,
            lambda u, v: 1.0 + 0.0 * (u + v),
            label="sqrt-drift",
            v_dependent=True,
            description="sigma = u, F = sqrt(u+) + sqrt((v+2)+)",
        ),
        Problem(
            _cos_drift,
            _mixed_sigma,
            _mixed_sigma_du,
            label="mixed-lip-drift",
            v_dependent=True,
            description="sigma = u/(1+u^2) + v, F = cos(u) + 2v",
        ),
        Problem(
            _sqrt_drift,
            _mixed_sigma,
            _mixed_sigma_du,
            label="mixed-sqrt-drift",
            v_dependent=True,
            description="sigma = u/(1+u^2) + v, F = sqrt(u+) + sqrt((v+2)+)",
        ),
        Problem(
            _zero,
            lambda u, v: 1.0 / (1.0 + u * u) + 0.0 * v,
            lambda u, v: -2.0 * u / (1.0 + u * u) ** 2 + 0.0 * v,
            label="inv-sigma",
            description="sigma = 1/(1+u^2), F = 0",
        ),
        Problem(
            _zero,
            _sqrt_sigma,
            _sqrt_sigma_du,
            label="sqrt-sigma",
            nonsmooth_sigma=True,
            description="sigma = sqrt(|u|), F = 0",
        ),
        Problem(
            _zero,
            lambda u, v: 5.0 * v + 0.0 * u,
            _zero,
            label="sigma-5v",
            v_dependent=True,
            description="sigma = 5v, F = 0",
        ),
    ]
}


def preset(name: str) -> Problem:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None


def preset_table() -> str:
    width = max(map(len, PRESETS))
    return "\n".join(f"  {name:<{width}}  {p.description}" for name, p in PRESETS.items())


@dataclass(frozen=True)
class DerivativeReport:
    max_rel_deviation: float
    samples: int
    exempt: bool


def check_derivative(p: Problem, samples: int = 100, seed: int = 0, step: float = 1e-5) -> DerivativeReport:
    """Compare d_sigma_du with central differences of sigma on [-2, 2]^2.

    The deviation is |d - fd| / max(1, |fd|).
    """
    rng = np.random.default_rng(seed)
    u, v = rng.uniform(-2.0, 2.0, (2, samples))
    fd = (p.sigma(u + step, v) - p.sigma(u - step, v)) / (2 * step)
    d = p.d_sigma_du(u, v)
    dev = np.abs(d - fd) / np.maximum(1.0, np.abs(fd))
    return DerivativeReport(float(np.max(dev)), samples, p.nonsmooth_sigma)
