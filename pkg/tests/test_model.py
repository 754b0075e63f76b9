import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from stochwave.fem1d import Grid1D, assemble_mass, assemble_stiffness, discrete_laplacian, interpolate, l2_norm
from stochwave.model import PRESETS, Problem, check_derivative, preset, preset_table


def test_sin_sigma_values():
    p = preset("sin-sigma")
    for v in (-3.0, 0.0, 7.5):
        assert p.sigma(np.array(1.0), np.array(v)) == pytest.approx(2 * math.sin(1.0), rel=1e-15)
        assert p.d_sigma_du(np.array(1.0), np.array(v)) == pytest.approx(2 * math.cos(1.0), rel=1e-15)


def test_zero_noise_is_zero():
    p = preset("zero-noise")
    u, v = np.linspace(-2, 2, 9), np.linspace(3, -1, 9)
    assert np.all(p.sigma(u, v) == 0) and np.all(p.F(u, v) == 0)


def test_sigma_v_value():
    assert preset("sigma-v").sigma(np.array(0.3), np.array(2.0)) == 3.0


def test_unknown_preset_lists_names():
    with pytest.raises(KeyError, match="sin-sigma"):
        preset("no-such-thing")


def test_preset_table_mentions_every_preset():
    table = preset_table()
    assert all(name in table for name in PRESETS)


def test_sqrt_drift_is_real_valued():
    F = preset("sqrt-drift").F
    out = F(np.array([-1.0, 4.0]), np.array([-5.0, 2.0]))
    assert_allclose(out, [0.0, 4.0])


@pytest.mark.parametrize("name", sorted(n for n, p in PRESETS.items() if not p.nonsmooth_sigma))
def test_derivative_matches_central_differences(name):
    rep = check_derivative(preset(name), samples=100)
    assert not rep.exempt
    assert rep.max_rel_deviation < 1e-6


def test_affine_sigma_derivative_is_exact():
    p = Problem(lambda u, v: 0 * u, lambda u, v: 3.0 * u - 1.0 + 0 * v, lambda u, v: 3.0 + 0 * u)
    assert check_derivative(p).max_rel_deviation < 1e-9


def test_sqrt_sigma_is_exempt():
    rep = check_derivative(preset("sqrt-sigma"))
    assert rep.exempt
    d = preset("sqrt-sigma").d_sigma_du(np.array([0.0, 4.0, -4.0]), np.zeros(3))
    assert_allclose(d, [0.0, 0.25, -0.25])


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_initial_data_vanish_at_boundary(name):
    p = preset(name)
    ends = np.array([0.0, 1.0])
    assert_allclose(p.u0(ends), 0.0, atol=1e-14)
    assert_allclose(p.v0(ends), 0.0, atol=1e-14)


def test_discrete_laplacian_second_order():
    p = preset("sin-sigma")
    errs = []
    for n in (16, 32, 64, 128):
        g = Grid1D(n)
        M, K = assemble_mass(g), assemble_stiffness(g)
        lap = discrete_laplacian(interpolate(p.u0, g), M.factor(), K)
        errs.append(l2_norm(lap - interpolate(p.laplace_u0, g), M))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates > 1.8), rates
