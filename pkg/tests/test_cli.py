import subprocess
import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from stochwave import cli
from stochwave.model import PRESETS, Problem, preset

HAPPY = (
    "convergence --preset sin-sigma --alpha-hat 1 --beta 0 --k-list 2^-3,2^-4,2^-5,2^-6 "
    "--h 2^-6 --k-ref 2^-9 --mc 500 --seed 42 --out rates.csv"
).split()

TINY = "--k-list 2^-2,2^-3,2^-4 --h 2^-3 --k-ref 2^-5 --mc 4".split()


def test_happy_path_parses():
    cfg = cli.parse_args(HAPPY)
    assert cfg.subcommand == "convergence" and cfg.preset == "sin-sigma"
    assert cfg.k_list == (0.125, 0.0625, 0.03125, 0.015625)
    assert cfg.n_cells == 64 and cfg.k_ref == 2.0**-9
    assert (cfg.alpha_hat, cfg.beta, cfg.mc, cfg.seed, cfg.out) == (1, 0.0, 500, 42, "rates.csv")


@pytest.mark.parametrize(
    "args, token",
    [
        (["--beta", "0.75"], "0.75"),
        (["--k-list", "0.1"], "0.1"),
        (["--alpha-hat", "2"], "2"),
        (["--h", "1/64"], "1/64"),
        (["--preset", "nope"], "nope"),
    ],
)
def test_bad_values_are_usage_errors(args, token, capsys):
    assert cli.main(["convergence", *args]) == cli.EXIT_USAGE
    assert token in capsys.readouterr().err


def test_unknown_flag_is_usage_error():
    assert cli.main(["convergence", "--nonsense", "1"]) == cli.EXIT_USAGE


def test_missing_subcommand():
    with pytest.raises(cli.UsageError):
        cli.parse_args(["--mc", "3"])


def test_dyadic_literals():
    assert cli.parse_dyadic("2^-7") == 2.0**-7
    assert cli.format_dyadic(2.0**-7) == "2^-7"
    for bad in ("0.5", "2^7", "2^-", "1/2"):
        with pytest.raises(cli.UsageError):
            cli.parse_dyadic(bad)


def test_config_file_and_flag_precedence(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("subcommand = energy\npreset = sigma-v-half  # comment\nbeta = 0.25\nn_cells = 32\nmc = 7\n")
    cfg = cli.parse_args(["--config", str(conf), "--mc", "9"])
    assert (cfg.subcommand, cfg.preset, cfg.beta, cfg.n_cells, cfg.mc) == ("energy", "sigma-v-half", 0.25, 32, 9)


def test_config_file_errors(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("subcommand energy\n")
    with pytest.raises(cli.UsageError, match="bad.conf:1"):
        cli.parse_args(["--config", str(conf)])
    conf.write_text("colour = red\n")
    with pytest.raises(cli.UsageError, match="colour"):
        cli.parse_args(["--config", str(conf)])


@given(
    sub=st.sampled_from(cli.SUBCOMMANDS),
    name=st.sampled_from(sorted(PRESETS)),
    alpha=st.sampled_from([0, 1]),
    beta=st.floats(0.0, 0.4999, allow_nan=False),
    levels=st.lists(st.integers(1, 8), min_size=1, max_size=5, unique=True),
    h=st.integers(1, 10),
    mc=st.integers(1, 10_000),
    seed=st.integers(0, 2**63),
    error_time=st.sampled_from(["final", "max"]),
    first=st.sampled_from(["consistent", "literal"]),
)
def test_config_round_trip(tmp_path_factory, sub, name, alpha, beta, levels, h, mc, seed, error_time, first):
    argv = [
        sub, "--preset", name, "--alpha-hat", str(alpha), "--beta", repr(beta),
        "--k-list", ",".join(f"2^-{j}" for j in levels), "--k-ref", "2^-9", "--h", f"2^-{h}",
        "--mc", str(mc), "--seed", str(seed), "--error-time", error_time, "--first-velocity", first,
        "--k", "2^-4", "--beta-list", f"0,{beta!r}", "--mc-list", "3,5", "--T", "0.5",
    ]
    cfg = cli.parse_args(argv)
    path = tmp_path_factory.mktemp("rt") / "cfg.conf"
    path.write_text(cfg.to_config_text())
    assert cli.parse_args(["--config", str(path)]) == cfg


def test_zero_noise_energy_run(tmp_path, capsys):
    out = tmp_path / "e.csv"
    code = cli.main(["energy", "--preset", "zero-noise", "--k", "2^-8", "--h", "2^-6", "--mc", "2", "--out", str(out)])
    assert code == cli.EXIT_OK
    assert "energy_drift<1e-10" in capsys.readouterr().out
    assert out.read_text().startswith("t,e_kin_mean,")


def test_repeat_invocation_identical_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert cli.main(["convergence", *TINY, "--seed", "5", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "k,err_u_l2,err_u_h1,err_v_l2"


def test_budget_breach_exit_code(tmp_path, monkeypatch, capsys):
    zero = preset("zero-noise")
    monkeypatch.setitem(
        PRESETS, "wild", Problem(zero.F, lambda u, v: 1e9 * (1 + u * u) + 0 * v, zero.d_sigma_du, label="wild")
    )
    out = tmp_path / "r.csv"
    code = cli.main(["convergence", *TINY, "--preset", "wild", "--out", str(out)])
    assert code == cli.EXIT_NUMERIC
    assert "excluded=" in capsys.readouterr().out
    assert not out.exists()


def test_unwritable_output(tmp_path):
    out = tmp_path / "missing-dir" / "r.csv"
    assert cli.main(["convergence", *TINY, "--out", str(out)]) == cli.EXIT_IO


def test_beta_sweep_and_single_path(tmp_path, capsys):
    sweep = tmp_path / "s.csv"
    argv = ["beta-sweep", "--preset", "sigma-v-half", "--k", "2^-5", "--h", "2^-4", "--mc-list", "3,6", "--out", str(sweep)]
    assert cli.main(argv) == 0
    assert sweep.read_text().splitlines()[0] == "beta,mc,roughness"
    path = tmp_path / "p.csv"
    assert cli.main(["single-path", "--k", "2^-3", "--h", "2^-4", "--out", str(path)]) == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "t,beta_1,beta_2,beta_3" and len(lines) == 2 + 2**6
    assert "single-path" in capsys.readouterr().out


def test_console_entry_point(tmp_path):
    out = tmp_path / "e.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "stochwave.cli", "energy", "--preset", "zero-noise", "--k", "2^-6",
         "--h", "2^-4", "--mc", "1", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "energy_drift<1e-10" in proc.stdout
    bad = subprocess.run([sys.executable, "-m", "stochwave.cli", "convergence", "--beta", "0.75"],
                         capture_output=True, text=True)
    assert bad.returncode == 2
