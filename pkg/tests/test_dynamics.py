import math

import numpy as np
import pytest

from vorwave.dispersion import WavePhysics, big_omega_j
from vorwave.dno import DnoConfig
from vorwave.dynamics import (
    IntegrationError,
    State,
    WahlenState,
    cfl_limit,
    hamiltonian,
    integrate,
    involution,
    linear_flat_apply,
    linear_flat_evolve,
    momentum,
    unit_mode_state,
    vector_field,
    wahlen_backward,
    wahlen_forward,
)
from vorwave.fields import RealField, dx, to_complex

N = 12
CFG = DnoConfig(taylor_order=4, n_modes=N)
PHYS = [WavePhysics(kappa=0.8, gamma=0.0), WavePhysics(kappa=1.1, gamma=0.7, depth=1.5)]


def smooth(n, amp, seed, zero_mean=True):
    rng = np.random.default_rng(seed)
    j = np.arange(-n, n + 1)
    c = (rng.normal(size=j.size) + 1j * rng.normal(size=j.size)) * np.exp(-0.8 * np.abs(j))
    c = 0.5 * (c + np.conj(c[::-1]))
    if zero_mean:
        c[n] = 0.0
    return RealField(n, c * amp)


def inner(f: RealField, g: RealField) -> float:
    return float(2 * np.pi * np.real(np.vdot(g.coeffs, f.coeffs)))


@pytest.mark.parametrize("p", PHYS)
def test_field_is_hamiltonian_in_wahlen_coordinates(p):
    """eta_t = dH/dzeta and zeta_t = -dH/deta, checked by directional differences of H."""
    w = WahlenState(smooth(N, 0.02, 1), smooth(N, 0.05, 2))
    s = wahlen_backward(p, w)
    de, dp = vector_field(p, s, CFG)
    # zeta_t = psi_t - (gamma/2) dx^{-1} eta_t
    dzeta = dp + (wahlen_forward(p, State(de, RealField.zeros(N))).zeta)

    def h_of(eta, zeta):
        return hamiltonian(p, wahlen_backward(p, WahlenState(eta, zeta)), CFG)

    d_eta, d_zeta = smooth(N, 1.0, 3), smooth(N, 1.0, 4)
    t = 1e-6
    dh_dzeta = (h_of(w.eta, w.zeta + t * d_zeta) - h_of(w.eta, w.zeta - t * d_zeta)) / (2 * t)
    dh_deta = (h_of(w.eta + t * d_eta, w.zeta) - h_of(w.eta - t * d_eta, w.zeta)) / (2 * t)
    assert dh_dzeta == pytest.approx(inner(de, d_zeta), rel=1e-6, abs=1e-9)
    assert dh_deta == pytest.approx(-inner(dzeta, d_eta), rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("p", PHYS)
def test_reversibility_of_the_field(p):
    s = State(smooth(N, 0.03, 5), smooth(N, 0.05, 6))
    de, dp = vector_field(p, s, CFG)
    de_r, dp_r = vector_field(p, involution(s), CFG)
    # X(S u) = -S X(u): eta_t flips sign under reflection, psi_t does not
    np.testing.assert_allclose(de_r.coeffs, -de.coeffs[::-1], atol=1e-13)
    np.testing.assert_allclose(dp_r.coeffs, dp.coeffs[::-1], atol=1e-13)


@pytest.mark.parametrize("p", PHYS)
def test_small_amplitude_field_is_linear(p):
    w = WahlenState(smooth(N, 1.0, 7), smooth(N, 1.0, 8))
    lin = linear_flat_apply(p, w)
    eps = 1e-7
    s = wahlen_backward(p, WahlenState(w.eta * eps, w.zeta * eps))
    de, dp = vector_field(p, s, CFG)
    dz = wahlen_forward(p, State(de, dp)).zeta  # linear map, so it transports the rate
    assert (de * (1 / eps) - lin.eta).norm() < 1e-5 * lin.eta.norm()
    assert (dz * (1 / eps) - lin.zeta).norm() < 1e-5 * lin.zeta.norm()


@pytest.mark.parametrize("p", PHYS)
def test_exact_linear_flow_derivative(p):
    w = WahlenState(smooth(N, 1.0, 9), smooth(N, 1.0, 10))
    t = 1e-6
    plus, minus = linear_flat_evolve(p, w, t), linear_flat_evolve(p, w, -t)
    lin = linear_flat_apply(p, w)
    assert ((plus.eta - minus.eta) * (0.5 / t) - lin.eta).norm() < 1e-7 * lin.eta.norm()
    back = linear_flat_evolve(p, linear_flat_evolve(p, w, 2.3), -2.3)
    np.testing.assert_allclose(back.eta.coeffs, w.eta.coeffs, atol=1e-13)


def test_unit_mode_state_is_cosine():
    p = WavePhysics(kappa=0.9, gamma=0.4)
    s = unit_mode_state(p, 8, 2, 1e-3)
    x = np.linspace(0, 2 * np.pi, 9)
    np.testing.assert_allclose(s.eta(x), 1e-3 * np.cos(2 * x), atol=1e-16)


@pytest.mark.parametrize("method,energy_tol", [("ifrk4", 1e-7), ("split-midpoint", 1e-6)])
def test_short_run_conserves_invariants(method, energy_tol):
    p = WavePhysics(kappa=1.0, gamma=0.5)
    # reversible data: even elevation (real coefficients), odd potential (imaginary coefficients)
    eta, psi = smooth(16, 2e-3, 11), smooth(16, 2e-3, 12)
    s0 = State(eta.with_coeffs(eta.coeffs.real), psi.with_coeffs(1j * psi.coeffs.imag))
    assert (involution(s0).eta - s0.eta).norm() == 0.0
    period = 2 * np.pi / big_omega_j(p, 1)
    dt = period / 200
    traj, rep = integrate(p, s0, dt, 200 * dt, DnoConfig(n_modes=16), method=method, check_reversibility=True)
    assert rep.hamiltonian_drift_quadratic < energy_tol
    assert rep.momentum_drift < 1e-10
    assert rep.mean_eta_drift == 0.0
    assert rep.reversibility_defect < 1e-8
    assert traj.times[-1] == pytest.approx(200 * dt)


def test_linear_phases_at_tiny_amplitude():
    p = WavePhysics(kappa=1.0, gamma=0.3)
    s0 = unit_mode_state(p, 8, 1, 1e-7)
    period = 2 * np.pi / big_omega_j(p, 1)
    traj, _ = integrate(p, s0, period / 64, period, DnoConfig(n_modes=8))
    ref = linear_flat_evolve(p, wahlen_forward(p, s0), period)
    z_ref = to_complex(p, ref.eta, ref.zeta)[8 + 1]
    w = wahlen_forward(p, traj.states[-1])
    z_got = to_complex(p, w.eta, w.zeta)[8 + 1]
    assert abs(z_got - z_ref) < 1e-8 * abs(z_ref)


def test_integration_errors():
    p = WavePhysics(kappa=1.0)
    s0 = unit_mode_state(p, 16, 1, 1e-3)
    with pytest.raises(IntegrationError):
        integrate(p, s0, 10 * cfl_limit(p, 16), 10 * cfl_limit(p, 16), DnoConfig(n_modes=16), method="rk4")
    with pytest.raises(ValueError):
        integrate(p, s0, 0.3, 1.0, DnoConfig(n_modes=16))
    with pytest.raises(ValueError):
        integrate(p, s0, 0.1, 1.0, DnoConfig(n_modes=16), method="euler")
    with pytest.raises(ValueError):
        State(RealField(2, np.array([0, 0, 1.0, 0, 0])), RealField.zeros(2))


def test_momentum_matches_quadrature():
    p = WavePhysics(kappa=1.0, gamma=0.0)
    s = unit_mode_state(p, 8, 3, 1e-2)
    w = wahlen_forward(p, s)
    direct = 2 * np.pi * np.mean(w.zeta.grid(33) * dx(w.eta).grid(33))
    assert momentum(p, s) == pytest.approx(direct, rel=1e-12)
    assert abs(direct) > 1e-6
    assert math.isfinite(hamiltonian(p, s, DnoConfig(n_modes=8)))
