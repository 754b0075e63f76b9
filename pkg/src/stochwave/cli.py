"""Command-line front end.

    stochwave convergence --preset sin-sigma --alpha-hat 1 --beta 0 \\
        --k-list 2^-3,2^-4,2^-5,2^-6 --h 2^-6 --k-ref 2^-9 --mc 500 --seed 42 --out rates.csv

Time and mesh steps are given as exact dyadic literals ``2^-j``. A flat
``key = value`` config file (``#`` starts a comment) may supply any option;
flags on the command line win.

Exit codes: 0 success, 2 usage error, 3 numerical failure (blow-up budget),
4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from stochwave import experiments as ex
from stochwave.fem1d import Grid1D
from stochwave.model import PRESETS, preset, preset_table
from stochwave.noise import NoiseConfig, coarse_increments, path_to_csv, sample_path
from stochwave.scheme import BlowUpError, Discretization, SchemeParams, energy, solve

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

SUBCOMMANDS = ("convergence", "energy", "beta-sweep", "single-path")

_DYADIC = re.compile(r"^\s*2\^-(\d+)\s*$")


class UsageError(ValueError):
    pass


def parse_dyadic(token: str) -> float:
    m = _DYADIC.match(token)
    if not m:
        raise UsageError(f"expected a dyadic literal 2^-j, got {token!r}")
    return 2.0 ** -int(m.group(1))


def format_dyadic(x: float) -> str:
    j = -int(np.log2(x))
    if 2.0**-j != x:
        raise ValueError(f"{x!r} is not dyadic")
    return f"2^-{j}"


def _csv(token: str, conv) -> tuple:
    parts = [p for p in token.split(",") if p.strip()]
    if not parts:
        raise UsageError(f"empty list {token!r}")
    return tuple(conv(p.strip()) for p in parts)


def _float(token: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise UsageError(f"expected a number, got {token!r}") from None


def _int(token: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise UsageError(f"expected an integer, got {token!r}") from None


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    preset: str
    alpha_hat: int
    beta: float
    k: float
    k_list: tuple[float, ...]
    n_cells: int
    k_ref: float
    mc: int
    mc_list: tuple[int, ...]
    beta_list: tuple[float, ...]
    T: float
    seed: int
    out: str
    error_time: str
    first_velocity: str

    def to_config_text(self) -> str:
        lines = ["# stochwave run configuration"]
        for key, value in _serialise(self).items():
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


# option name -> (RunConfig field, parser, serialiser)
_OPTIONS = {
    "subcommand": ("subcommand", str, str),
    "preset": ("preset", str, str),
    "alpha-hat": ("alpha_hat", _int, str),
    "beta": ("beta", _float, repr),
    "k": ("k", parse_dyadic, format_dyadic),
    "k-list": ("k_list", lambda s: _csv(s, parse_dyadic), lambda v: ",".join(map(format_dyadic, v))),
    "h": ("n_cells", lambda s: round(1 / parse_dyadic(s)), lambda n: format_dyadic(1.0 / n)),
    "k-ref": ("k_ref", parse_dyadic, format_dyadic),
    "mc": ("mc", _int, str),
    "mc-list": ("mc_list", lambda s: _csv(s, _int), lambda v: ",".join(map(str, v))),
    "beta-list": ("beta_list", lambda s: _csv(s, _float), lambda v: ",".join(map(repr, v))),
    "T": ("T", _float, repr),
    "seed": ("seed", _int, str),
    "out": ("out", str, str),
    "error-time": ("error_time", str, str),
    "first-velocity": ("first_velocity", str, str),
}

_DEFAULTS = {
    "convergence": dict(
        preset="sin-sigma", k="2^-6", **{"k-list": "2^-3,2^-4,2^-5,2^-6", "k-ref": "2^-9"},
        h="2^-6", mc="500", T="1.0", out="rates.csv",
    ),
    "energy": dict(preset="sigma-u-half", k="2^-10", h="2^-7", mc="1000", T="1.0", out="energy.csv"),
    "beta-sweep": dict(
        preset="sigma-5v", k="2^-8", h="2^-6", T="0.5", out="beta_sweep.csv",
        **{"beta-list": "0,0.25,0.49", "mc-list": "400,600,800,1000,1400"},
    ),
    "single-path": dict(preset="sin-sigma", k="2^-10", h="2^-7", mc="1", T="1.0", out="path.csv"),
}
_COMMON = {
    "alpha-hat": "1", "beta": "0.0", "k-list": "2^-3,2^-4,2^-5,2^-6", "k-ref": "2^-9",
    "mc-list": "400,600,800,1000,1400", "beta-list": "0,0.25,0.49", "seed": "42",
    "error-time": "final", "first-velocity": "consistent", "mc": "500",
}


def _serialise(cfg: RunConfig) -> dict[str, str]:
    return {name: ser(getattr(cfg, field)) for name, (field, _, ser) in _OPTIONS.items()}


def read_config_file(path: str | Path) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key == "n-cells":
            key, value = "h", format_dyadic(1.0 / int(value))
        if key not in _OPTIONS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="stochwave",
        description="Stochastic wave equation experiments: strong convergence, energy, beta sweep.",
        epilog="presets:\n" + preset_table(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("subcommand", nargs="?", choices=SUBCOMMANDS)
    p.add_argument("--config", help="flat key = value file; flags override it")
    for name in _OPTIONS:
        if name != "subcommand":
            p.add_argument(f"--{name}", dest=name.replace("-", "_"), default=None)
    return p


def parse_args(argv: list[str] | None = None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    given = read_config_file(ns.config) if ns.config else {}
    for name in _OPTIONS:
        value = getattr(ns, name.replace("-", "_"), None)
        if value is not None:
            given[name] = value
    sub = given.get("subcommand")
    if sub not in SUBCOMMANDS:
        raise UsageError(f"missing or unknown subcommand {sub!r}; choose from {SUBCOMMANDS}")
    raw = {**_COMMON, **_DEFAULTS[sub], **given}
    fields = {}
    for name, (field, conv, _) in _OPTIONS.items():
        fields[field] = conv(raw[name])
    cfg = RunConfig(**fields)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.preset not in PRESETS:
        raise UsageError(f"unknown preset {cfg.preset!r}; available: {', '.join(PRESETS)}")
    if cfg.alpha_hat not in (0, 1):
        raise UsageError(f"--alpha-hat must be 0 or 1, got {cfg.alpha_hat}")
    for b in (cfg.beta, *cfg.beta_list):
        if not 0.0 <= b < 0.5:
            raise UsageError(f"beta must lie in [0, 1/2), got {b!r}")
    if cfg.mc < 1 or any(m < 1 for m in cfg.mc_list):
        raise UsageError("sample counts must be positive")
    if cfg.error_time not in ex.ERROR_TIMES:
        raise UsageError(f"--error-time must be one of {ex.ERROR_TIMES}")
    try:
        Grid1D(cfg.n_cells)
        if cfg.subcommand == "convergence":
            convergence_spec(cfg)
        else:
            SchemeParams(cfg.alpha_hat, cfg.beta, cfg.k, cfg.T, cfg.first_velocity)
    except ValueError as err:
        raise UsageError(str(err)) from None


def convergence_spec(cfg: RunConfig) -> ex.ConvergenceSpec:
    return ex.ConvergenceSpec(
        preset=cfg.preset,
        alpha_hat=cfg.alpha_hat,
        beta=cfg.beta,
        k_list=cfg.k_list,
        n_cells=cfg.n_cells,
        k_ref=cfg.k_ref,
        mc=cfg.mc,
        base_seed=cfg.seed,
        error_time=cfg.error_time,
        T=cfg.T,
        first_velocity=cfg.first_velocity,
    )


def _run_convergence(cfg: RunConfig) -> tuple[str, str]:
    table = ex.run_convergence(convergence_spec(cfg))
    return table.to_csv(), f"convergence {cfg.preset}: {table.summary()}"


def _run_energy(cfg: RunConfig) -> tuple[str, str]:
    s = ex.run_energy_study(
        cfg.preset, cfg.alpha_hat, cfg.beta, cfg.k, cfg.n_cells, cfg.mc, cfg.seed, cfg.T
    )
    drift = s.relative_drift("two_step_mean")
    conserved = "energy_drift<1e-10" if drift < 1e-10 else f"energy_drift={drift:.3e}"
    return s.to_csv(), (
        f"energy {cfg.preset}: {conserved} total_drift={s.relative_drift():.3e} "
        f"e_total(t1)={s.e_total_mean[1]:.6g} e_total(T)={s.e_total_mean[-1]:.6g} "
        f"excluded={s.excluded}"
    )


def _run_beta_sweep(cfg: RunConfig) -> tuple[str, str]:
    sw = ex.run_beta_sweep(
        cfg.preset, cfg.beta_list, cfg.k, cfg.n_cells, cfg.mc_list, cfg.seed, cfg.T, cfg.alpha_hat
    )
    mins = " ".join(f"min_mc(beta={b:g})={sw.min_mc(b, 0.05)}" for b in cfg.beta_list)
    return sw.to_csv(), f"beta-sweep {cfg.preset}: {mins}"


def _run_single_path(cfg: RunConfig) -> tuple[str, str]:
    params = SchemeParams(cfg.alpha_hat, cfg.beta, cfg.k, cfg.T, cfg.first_velocity)
    level = -int(np.log2(cfg.k))
    path = sample_path(NoiseConfig(3, 2 * level, cfg.T), cfg.seed)
    disc = Discretization.build(Grid1D(cfg.n_cells), params)
    res = solve(preset(cfg.preset), disc, coarse_increments(path, cfg.k))
    e = energy(res.state, disc.M, disc.K)
    return path_to_csv(path), (
        f"single-path {cfg.preset}: e_kin(T)={e.e_kin:.6g} e_ela(T)={e.e_ela:.6g} "
        f"e_total(T)={e.e_total:.6g}"
    )


_RUNNERS = {
    "convergence": _run_convergence,
    "energy": _run_energy,
    "beta-sweep": _run_beta_sweep,
    "single-path": _run_single_path,
}


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_args(argv)
    except UsageError as err:
        print(f"stochwave: usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as err:  # argparse
        return EXIT_USAGE if err.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        text, summary = _RUNNERS[cfg.subcommand](cfg)
    except ex.BlowUpBudgetExceeded as err:
        res = err.result
        detail = res.summary() if hasattr(res, "summary") else ""
        print(f"{cfg.subcommand} {cfg.preset}: FAILED {err} {detail}".rstrip())
        return EXIT_NUMERIC
    except BlowUpError as err:
        print(f"{cfg.subcommand} {cfg.preset}: FAILED {err}")
        return EXIT_NUMERIC
    except OSError as err:
        print(f"stochwave: I/O error: {err}", file=sys.stderr)
        return EXIT_IO
    try:
        ex.write_atomic(cfg.out, text)
    except OSError as err:
        print(f"stochwave: cannot write {cfg.out}: {err}", file=sys.stderr)
        return EXIT_IO
    print(f"{summary} -> {cfg.out}")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
