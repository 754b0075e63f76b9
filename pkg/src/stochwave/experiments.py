"""Monte-Carlo drivers: strong convergence tables against a coupled
reference, energy trajectories and the beta / sample-count sweep.

Samples are processed in blocks; each block is one batched solve. Blocks may
run on a thread pool, but results are always reduced in sample order with
compensated summation, so the output does not depend on the schedule.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from stochwave.fem1d import Grid1D
from stochwave.model import Problem, preset
from stochwave.noise import (
    NoiseConfig,
    coarse_increments,
    dyadic_level,
    sample_increments,
    sample_path,
    stack_increments,
    stream_seed,
)
from stochwave.scheme import (
    Discretization,
    SchemeParams,
    conserved_two_step_energy,
    solve,
)

log = logging.getLogger(__name__)

MAX_EXCLUDED_FRACTION = 0.05
ERROR_TIMES = ("final", "max")


class BlowUpBudgetExceeded(RuntimeError):
    """More than 5% of the Monte-Carlo samples diverged."""

    def __init__(self, excluded: int, mc: int, result=None):
        self.excluded = excluded
        self.mc = mc
        self.result = result
        super().__init__(f"excluded={excluded} of {mc} samples diverged (budget 5%)")


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("STOCHWAVE_THREADS")
    if env:
        return max(1, int(env))
    return 1


def _blocks(mc: int, block: int) -> list[range]:
    return [range(s, min(s + block, mc)) for s in range(0, mc, block)]


def _run_blocks(fn, mc: int, block: int, workers: int | None) -> list:
    blocks = _blocks(mc, block)
    n = worker_count(workers)
    if n == 1 or len(blocks) == 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, blocks))


def _mean(values: np.ndarray) -> float:
    return math.fsum(values) / len(values) if len(values) else float("nan")


def _check_budget(excluded: int, mc: int, result) -> None:
    if excluded > MAX_EXCLUDED_FRACTION * mc:
        raise BlowUpBudgetExceeded(excluded, mc, result)
    if excluded:
        log.warning("excluded %d of %d diverging samples", excluded, mc)


# ---------------------------------------------------------------------------
# rate fitting


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residual: float


def fit_rate(ks, errs) -> RateFit:
    """Least-squares line through (log2 k, log2 err)."""
    ks = np.asarray(ks, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if ks.shape != errs.shape or ks.size < 3:
        raise ValueError(f"need at least 3 (k, err) rows, got {ks.size}")
    if np.any(errs <= 0) or not np.all(np.isfinite(errs)):
        raise ValueError(
            "errors must be finite and > 0 for a log-log fit; "
            "an exact zero error calls for an equality check instead"
        )
    x, y = np.log2(ks), np.log2(errs)
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    residual = math.sqrt(float(res[0])) if res.size else 0.0
    return RateFit(float(slope), float(intercept), residual)


# ---------------------------------------------------------------------------
# convergence


@dataclass(frozen=True)
class ConvergenceSpec:
    preset: str = "sin-sigma"
    alpha_hat: int = 1
    beta: float = 0.0
    k_list: tuple[float, ...] = (2.0**-3, 2.0**-4, 2.0**-5, 2.0**-6)
    n_cells: int = 64
    k_ref: float = 2.0**-9
    mc: int = 500
    base_seed: int = 42
    error_time: str = "final"
    n_modes: int = 3
    T: float = 1.0
    first_velocity: str = "consistent"
    block: int = 50
    workers: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "k_list", tuple(sorted(map(float, self.k_list), reverse=True)))
        if len(self.k_list) < 1:
            raise ValueError("k_list is empty")
        ref_level = dyadic_level(self.k_ref, "k_ref")
        for k in self.k_list:
            dyadic_level(k, "k in k_list")
            if k < self.k_ref:
                raise ValueError(f"every k must be >= k_ref={self.k_ref}, got {k}")
        if ref_level > self.fine_level:  # pragma: no cover - guarded by fine_level
            raise ValueError("k_ref finer than the noise path")
        if self.mc < 1:
            raise ValueError(f"mc must be >= 1, got {self.mc}")
        if self.error_time not in ERROR_TIMES:
            raise ValueError(f"error_time must be one of {ERROR_TIMES}, got {self.error_time!r}")
        Grid1D(self.n_cells)
        # validates alpha_hat, beta and the step/horizon divisibility
        self.scheme_params(self.k_ref)
        for k in self.k_list:
            self.scheme_params(k)

    @property
    def fine_level(self) -> int:
        """Path resolution: k_ref itself and k^2 for every coarse k."""
        return max(dyadic_level(self.k_ref), 2 * dyadic_level(min(self.k_list)))

    @property
    def ref_substep(self) -> float:
        # the reference uses the finest substep the path offers when k_ref^2 is not resolved
        return max(self.k_ref**2, 2.0**-self.fine_level)

    def scheme_params(self, k: float) -> SchemeParams:
        return SchemeParams(self.alpha_hat, self.beta, k, self.T, self.first_velocity)


@dataclass
class RateTable:
    ks: np.ndarray
    err_u_l2: np.ndarray
    err_u_h1: np.ndarray
    err_v_l2: np.ndarray
    excluded: int = 0
    mc: int = 0
    fits: dict[str, RateFit] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.ks) >= 3:
            for name in ("u_l2", "u_h1", "v_l2"):
                errs = getattr(self, f"err_{name}")
                if np.all(errs > 0):
                    self.fits[name] = fit_rate(self.ks, errs)

    def slope(self, name: str) -> float:
        fit = self.fits.get(name)
        return fit.slope if fit else float("nan")

    @property
    def slope_u_l2(self) -> float:
        return self.slope("u_l2")

    @property
    def slope_u_h1(self) -> float:
        return self.slope("u_h1")

    @property
    def slope_v_l2(self) -> float:
        return self.slope("v_l2")

    def rows(self):
        return zip(self.ks, self.err_u_l2, self.err_u_h1, self.err_v_l2)

    def summary(self) -> str:
        return (
            f"slope_u_l2={self.slope_u_l2:.4f} slope_u_h1={self.slope_u_h1:.4f} "
            f"slope_v_l2={self.slope_v_l2:.4f} excluded={self.excluded}"
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "err_u_l2", "err_u_h1", "err_v_l2"])
        for row in self.rows():
            w.writerow([f"{x:.17g}" for x in row])
        buf.write(f"# {self.summary()}\n")
        return buf.getvalue()


def _convergence_block(spec: ConvergenceSpec, problem: Problem, discs, ref_disc, samples: range):
    cfg = NoiseConfig(spec.n_modes, spec.fine_level, spec.T)
    paths = [sample_path(cfg, stream_seed(spec.base_seed, m)) for m in samples]
    k_min = min(spec.k_list)
    ref_stride = round(k_min / spec.k_ref)
    snap_ref = []

    def keep_ref(state):
        if state.n % ref_stride == 0:
            snap_ref.append((state.u_curr, state.v_curr))

    ref_inc = stack_increments([coarse_increments(p, spec.k_ref, spec.ref_substep) for p in paths])
    ref = solve(problem, ref_disc, ref_inc, observer=keep_ref, mask_blowups=True)
    blown = ref.blown.copy()
    M, K = ref_disc.M, ref_disc.K

    errors = []
    for k, disc in zip(spec.k_list, discs):
        inc = stack_increments([coarse_increments(p, k) for p in paths])
        every = round(k / k_min)
        sq = []

        def keep(state):
            if spec.error_time == "max" or state.n == disc.params.n_steps:
                # snapshot j of the reference sits at time (j + 1) * k_min
                u_r, v_r = snap_ref[state.n * every - 1]
                du = u_r - state.u_curr
                dv = v_r - state.v_curr
                sq.append(np.stack([M.quad(du), K.quad(du), M.quad(dv)]))

        res = solve(problem, disc, inc, observer=keep, mask_blowups=True)
        blown |= res.blown
        errors.append(np.max(np.stack(sq), axis=0))  # (3, batch)
    return np.stack(errors), blown  # (n_k, 3, batch), (batch,)


def run_convergence(spec: ConvergenceSpec) -> RateTable:
    """Strong errors of the coarse runs against a fine-step reference driven by
    the same Wiener path, one sample at a time, and their log-log slopes."""
    problem = preset(spec.preset)
    grid = Grid1D(spec.n_cells)
    ref_disc = Discretization.build(grid, spec.scheme_params(spec.k_ref))
    discs = [Discretization.build(grid, spec.scheme_params(k)) for k in spec.k_list]
    warning = spec.scheme_params(spec.k_ref).stability_warning(problem)
    if warning:
        log.warning(warning)

    parts = _run_blocks(
        lambda b: _convergence_block(spec, problem, discs, ref_disc, b),
        spec.mc,
        spec.block,
        spec.workers,
    )
    sq = np.concatenate([p[0] for p in parts], axis=-1)
    blown = np.concatenate([p[1] for p in parts])
    keep = ~blown
    errs = np.array(
        [[math.sqrt(_mean(sq[i, c, keep])) for c in range(3)] for i in range(len(spec.k_list))]
    )
    table = RateTable(
        np.array(spec.k_list), errs[:, 0], errs[:, 1], errs[:, 2], int(blown.sum()), spec.mc
    )
    _check_budget(table.excluded, spec.mc, table)
    return table


# ---------------------------------------------------------------------------
# energy


@dataclass
class EnergySeries:
    t: np.ndarray
    e_kin_mean: np.ndarray
    e_ela_mean: np.ndarray
    e_total_mean: np.ndarray
    e_kin_path: np.ndarray
    e_ela_path: np.ndarray
    e_total_path: np.ndarray
    two_step_mean: np.ndarray
    excluded: int = 0
    mc: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["t", "e_kin_mean", "e_ela_mean", "e_total_mean", "e_kin_path", "e_ela_path", "e_total_path"]
        w.writerow(cols)
        for row in zip(*(getattr(self, c) for c in cols)):
            w.writerow([f"{x:.17g}" for x in row])
        return buf.getvalue()

    def relative_drift(self, series: str = "e_total_mean") -> float:
        """max_n |E^n - E^1| / E^1 over t_1 .. T."""
        e = getattr(self, series)
        return float(np.max(np.abs(e[1:] - e[1])) / e[1])


def _energy_trajectories(problem, disc, n_modes, base_seed, samples: range):
    k, T = disc.params.k, disc.params.T
    inc = stack_increments(
        [sample_increments(k, n_modes, stream_seed(base_seed, m), T) for m in samples]
    )
    M, K = disc.M, disc.K
    kin, ela, two = [], [], []

    def record(state):
        if state.n == 1:
            kin.append(0.5 * M.quad(state.v_prev))
            ela.append(0.5 * K.quad(state.u_prev))
            two.append(np.full(len(samples), np.nan))
        kin.append(0.5 * M.quad(state.v_curr))
        ela.append(0.5 * K.quad(state.u_curr))
        two.append(conserved_two_step_energy(state, M, K))

    res = solve(problem, disc, inc, observer=record, mask_blowups=True)
    return np.array(kin), np.array(ela), np.array(two), res.blown


def _energy_run(problem, alpha_hat, beta, k, n_cells, mc, base_seed, T, n_modes, block, workers):
    params = SchemeParams(alpha_hat, beta, k, T)
    disc = Discretization.build(Grid1D(n_cells), params)
    warning = params.stability_warning(problem)
    if warning:
        log.warning(warning)
    parts = _run_blocks(
        lambda b: _energy_trajectories(problem, disc, n_modes, base_seed, b), mc, block, workers
    )
    kin = np.concatenate([p[0] for p in parts], axis=1)
    ela = np.concatenate([p[1] for p in parts], axis=1)
    two = np.concatenate([p[2] for p in parts], axis=1)
    blown = np.concatenate([p[3] for p in parts])
    t = np.arange(params.n_steps + 1) * k
    return t, kin, ela, two, blown


def _column_means(a: np.ndarray) -> np.ndarray:
    return np.array([_mean(row) for row in a])


def run_energy_study(
    preset_name: str,
    alpha_hat: int = 1,
    beta: float = 0.0,
    k: float = 2.0**-10,
    n_cells: int = 128,
    mc: int = 1000,
    base_seed: int = 0,
    T: float = 1.0,
    n_modes: int = 3,
    block: int = 250,
    workers: int | None = None,
) -> EnergySeries:
    """Monte-Carlo means of the energy parts at every t_n, plus the path of
    sample 0 (seeded with ``base_seed`` itself)."""
    problem = preset(preset_name)
    t, kin, ela, two, blown = _energy_run(
        problem, alpha_hat, beta, k, n_cells, mc, base_seed, T, n_modes, block, workers
    )
    keep = ~blown
    tot = kin + ela
    series = EnergySeries(
        t,
        _column_means(kin[:, keep]),
        _column_means(ela[:, keep]),
        _column_means(tot[:, keep]),
        kin[:, 0],
        ela[:, 0],
        tot[:, 0],
        _column_means(two[:, keep]),
        int(blown.sum()),
        mc,
    )
    _check_budget(series.excluded, mc, series)
    return series


# ---------------------------------------------------------------------------
# beta sweep


def roughness(curve: np.ndarray) -> float:
    """max |E^{n+1} - E^n| / E^n over the second half of the time grid."""
    curve = np.asarray(curve, dtype=float)
    tail = curve[len(curve) // 2 :]
    return float(np.max(np.abs(np.diff(tail)) / tail[:-1]))


@dataclass
class BetaSweep:
    rows: list[tuple[float, int, float]]
    excluded: dict[float, int]

    def min_mc(self, beta: float, threshold: float) -> int | None:
        for b, mc, r in self.rows:
            if b == beta and r < threshold:
                return mc
        return None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["beta", "mc", "roughness"])
        for b, mc, r in self.rows:
            w.writerow([f"{b:.17g}", mc, f"{r:.17g}"])
        return buf.getvalue()


def run_beta_sweep(
    preset_name: str = "sigma-5v",
    beta_list=(0.0, 0.25, 0.49),
    k: float = 2.0**-8,
    n_cells: int = 64,
    mc_list=(400, 600, 800, 1000, 1400),
    base_seed: int = 0,
    T: float = 0.5,
    alpha_hat: int = 1,
    n_modes: int = 3,
    block: int = 200,
    workers: int | None = None,
) -> BetaSweep:
    """Roughness of the Monte-Carlo mean of the two-step energy for every
    (beta, mc). Smaller sample counts reuse a prefix of the largest run."""
    for b in beta_list:
        if not 0.0 <= b < 0.5:
            raise ValueError(f"beta must lie in [0, 1/2), got {b!r}")
    mc_list = sorted(int(m) for m in mc_list)
    problem = preset(preset_name)
    rows, excluded = [], {}
    for b in beta_list:
        _, _, _, two, blown = _energy_run(
            problem, alpha_hat, b, k, n_cells, mc_list[-1], base_seed, T, n_modes, block, workers
        )
        excluded[b] = int(blown.sum())
        _check_budget(excluded[b], mc_list[-1], None)
        for mc in mc_list:
            keep = ~blown[:mc]
            curve = _column_means(two[1:, :mc][:, keep])
            rows.append((float(b), mc, roughness(curve)))
    return BetaSweep(rows, excluded)


# ---------------------------------------------------------------------------
# time regularity


def time_regularity(
    preset_name: str = "sin-sigma",
    k: float = 2.0**-9,
    n_cells: int = 64,
    mc: int = 100,
    base_seed: int = 0,
    lags=(2**-7, 2**-6, 2**-5, 2**-4),
    alpha_hat: int = 1,
    beta: float = 0.0,
) -> RateFit:
    """Fit E |u(t + lag) - u(t)|^2 in L2 against the lag on a fine run."""
    problem = preset(preset_name)
    params = SchemeParams(alpha_hat, beta, k)
    disc = Discretization.build(Grid1D(n_cells), params)
    cfg = NoiseConfig(3, 2 * dyadic_level(k))
    inc = stack_increments(
        [
            coarse_increments(sample_path(cfg, stream_seed(base_seed, m)), k)
            for m in range(mc)
        ]
    )
    us = []
    solve(problem, disc, inc, observer=lambda s: us.append(s.u_curr), mask_blowups=False)
    us = np.array(us)  # (N, mc, nodes), us[j] at t_{j+1}
    means = []
    for lag in lags:
        s = round(lag / k)
        diff = us[s:] - us[:-s]
        means.append(float(np.mean(disc.M.quad(diff))))
    return fit_rate(lags, means)


# ---------------------------------------------------------------------------
# output


def write_atomic(path: str | Path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
