import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vorwave.dispersion import (
    WavePhysics,
    asymptotic_remainder,
    big_omega_j,
    big_omega_kappa_derivative,
    dispersion_table,
    g0_symbol,
    lambda_j,
    mj_coeff,
    omega_j,
    omega_kappa_derivative,
    omega_tilde,
    pj_coeff,
    tilde_c,
)

mp.mp.dps = 40

physics = st.builds(
    WavePhysics,
    g=st.floats(0.1, 10.0),
    kappa=st.floats(0.05, 5.0),
    gamma=st.floats(-3.0, 3.0),
    depth=st.one_of(st.just(math.inf), st.floats(0.2, 10.0)),
)
modes = st.integers(-200, 200).filter(lambda j: j != 0)


def mp_symbols(p: WavePhysics, j: int):
    """High-precision reference values of G, E, omega, Omega, M, lambda."""
    jm = mp.mpf(j)
    G = abs(jm) if p.infinite_depth else jm * mp.tanh(mp.mpf(p.depth) * jm)
    E = mp.mpf(p.kappa) * jm**2 + p.g + mp.mpf(p.gamma) ** 2 * G / (4 * jm**2)
    om = mp.sqrt(G * E)
    return {
        "G": G,
        "omega": om,
        "Omega": om + mp.mpf(p.gamma) * G / (2 * jm),
        "M": (G / E) ** mp.mpf(0.25),
        # d log(omega) / d kappa, computed symbolically in kappa
        "lambda": mp.diff(lambda k: mp.log(mp.sqrt(G * (k * jm**2 + p.g + mp.mpf(p.gamma) ** 2 * G / (4 * jm**2)))), p.kappa),
    }


@settings(max_examples=60, deadline=None)
@given(physics, modes)
def test_symbols_match_high_precision(p, j):
    ref = mp_symbols(p, j)
    assert g0_symbol(p, j) == pytest.approx(float(ref["G"]), rel=1e-13)
    assert omega_j(p, j) == pytest.approx(float(ref["omega"]), rel=1e-13)
    assert big_omega_j(p, j) == pytest.approx(float(ref["Omega"]), rel=1e-12, abs=1e-12)
    assert mj_coeff(p, j) == pytest.approx(float(ref["M"]), rel=1e-13)
    assert lambda_j(p, j) == pytest.approx(float(ref["lambda"]), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(physics, st.integers(1, 256))
def test_symmetries(p, n):
    assert big_omega_j(p, n) - big_omega_j(p, -n) == pytest.approx(p.gamma * g0_symbol(p, n) / n, rel=1e-12, abs=1e-12)
    assert mj_coeff(p, -n) == mj_coeff(p, n)
    assert lambda_j(p, -n) == lambda_j(p, n)
    assert lambda_j(p, n) < 0.5 / p.kappa


@settings(max_examples=40, deadline=None)
@given(physics)
def test_lambda_strictly_increasing(p):
    lam = lambda_j(p, np.arange(1, 257))
    assert np.all(np.diff(lam) > 0)


def test_tilde_c_values():
    assert [tilde_c(n) for n in range(5)] == [1.0, 1.0, -1.0, 3.0, -15.0]
    with pytest.raises(ValueError):
        tilde_c(-1)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("j", [0, 1, -3, 17])
def test_kappa_derivatives_against_mpmath(n, j):
    p = WavePhysics(g=1.3, kappa=0.7, gamma=0.9, depth=2.0)

    def om(k):
        if j == 0:
            return mp.sqrt(k)
        jm = mp.mpf(j)
        G = jm * mp.tanh(2 * jm)
        return mp.sqrt(G * (k * jm**2 + mp.mpf(1.3) + mp.mpf(0.9) ** 2 * G / (4 * jm**2)))

    ref = float(mp.diff(om, mp.mpf(0.7), n))
    assert omega_kappa_derivative(p, j, n) == pytest.approx(ref, rel=1e-12)
    if j:
        assert big_omega_kappa_derivative(p, j, n) == pytest.approx(ref, rel=1e-12)


def test_omega_tilde_at_zero():
    p = WavePhysics(kappa=2.25)
    assert omega_tilde(p, 0) == 1.5
    assert omega_tilde(p, 3) == omega_j(p, 3)
    assert lambda_j(p, 0, include_zero=True) == pytest.approx(1 / 4.5)


def test_pj_coefficient():
    p = WavePhysics(gamma=0.6)
    m = mj_coeff(p, 2)
    assert pj_coeff(p, 2, 1) == pytest.approx(0.3 * m / 2 + 1 / m)
    assert pj_coeff(p, 2, -1) == pytest.approx(0.3 * m / 2 - 1 / m)


@pytest.mark.parametrize("depth", [math.inf, 1.5])
def test_asymptotic_remainder_matches_difference(depth):
    p = WavePhysics(g=1.0, kappa=0.8, gamma=0.4, depth=depth)
    for j in (1, 5, 40, 500):
        ref = (mp_symbols(p, j)["omega"] - mp.sqrt(p.kappa) * mp.mpf(j) ** 1.5) * mp.sqrt(p.kappa) * mp.sqrt(j)
        assert asymptotic_remainder(p, j) == pytest.approx(float(ref), rel=1e-10)


def test_deep_water_limit():
    p = WavePhysics(kappa=0.5, gamma=0.2, depth=50.0)
    q = WavePhysics(kappa=0.5, gamma=0.2)
    j = np.arange(1, 40)
    np.testing.assert_allclose(omega_j(p, j), omega_j(q, j), rtol=1e-14)


def test_table_layout():
    tab = dispersion_table(WavePhysics(), 16)
    assert list(tab) == ["j", "G_j", "M_j", "omega_j", "Omega_j", "lambda_j", "c_j"]
    assert np.sum(tab["j"] > 0) == 16 and np.sum(tab["j"] < 0) == 16
    with pytest.raises(ValueError):
        dispersion_table(WavePhysics(), 0)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        WavePhysics(kappa=0.0)
    with pytest.raises(ValueError):
        WavePhysics(depth=-1.0)
    with pytest.raises(ValueError):
        omega_j(WavePhysics(), 0)
    with pytest.raises(ValueError):
        pj_coeff(WavePhysics(), 0, 1)
