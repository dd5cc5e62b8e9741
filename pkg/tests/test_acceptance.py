"""End-to-end acceptance checks at fixed tolerances.

Each test records one PASS/FAIL line, printed in the terminal summary.
"""

import itertools
import math
import time

import numpy as np
import pytest

from vorwave.dispersion import (
    WavePhysics,
    big_omega_j,
    g0_symbol,
    lambda_j,
    mj_coeff,
    omega_kappa_derivative,
    omega_tilde,
    tilde_c,
)
from vorwave.dno import DnoConfig, g_eta_apply, shape_derivative_check
from vorwave.dynamics import WahlenState, integrate, unit_mode_state, wahlen_backward, wahlen_forward
from vorwave.fields import RealField, to_complex, translate
from vorwave.nonres import (
    FAMILIES,
    FrequencyModel,
    NonresConfig,
    SiteSelection,
    measure_estimate,
    melnikov_margin,
    momentum_triples,
    resonant_example,
    tangential_frequencies,
    transversality_scan,
)
from vorwave.normalform import frequency_model, reduce_torus
from vorwave.solver import (
    SolverConfig,
    action_angle_map,
    correction_norm,
    linear_seed,
    moving_frame_wave,
    newton_solve,
    residual_F,
    validate_solution,
)

P = WavePhysics(kappa=1.0, gamma=0.5)
TWO = SiteSelection((1, 2), (1, 1))


def smooth_field(n, amp, seed):
    rng = np.random.default_rng(seed)
    j = np.arange(-n, n + 1)
    c = (rng.normal(size=j.size) + 1j * rng.normal(size=j.size)) * np.exp(-np.abs(j))
    c = 0.5 * (c + np.conj(c[::-1]))
    c[n] = 0.0
    f = RealField(n, c)
    return f * (amp / np.max(np.abs(f.grid(4 * n + 1))))


def test_1_dispersion_identities(acceptance):
    start = time.perf_counter()
    j = np.arange(1, 257)
    worst = 0.0
    ok = True
    grid = itertools.product(np.linspace(0.1, 4.0, 5), (-2.0, -1.0, 0.0, 1.0, 2.0), (0.5, 1.0, 2.0, 5.0, math.inf))
    for kappa, gamma, depth in grid:
        p = WavePhysics(kappa=kappa, gamma=gamma, depth=depth)
        shift = big_omega_j(p, j) - big_omega_j(p, -j)
        expect = gamma * g0_symbol(p, j) / j
        worst = max(worst, float(np.max(np.abs(shift - expect) / np.maximum(np.abs(expect), 1e-300))) if gamma else 0.0)
        ok &= bool(np.all(shift == 0.0)) if gamma == 0 else True
        lam = lambda_j(p, j)
        ok &= np.array_equal(mj_coeff(p, -j), mj_coeff(p, j))
        ok &= np.array_equal(lambda_j(p, -j), lam)
        ok &= bool(np.all(np.diff(lam) > 0)) and bool(np.all(lam < 0.5 / kappa))
    elapsed = time.perf_counter() - start
    ok = ok and worst < 1e-12 and elapsed < 1.0
    acceptance("1 dispersion identities", ok, f"max rel err {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_2_closed_form_kappa_derivatives(acceptance):
    start = time.perf_counter()
    # fourth-order central stencils: at j = 0 and small kappa, lambda is near 1/(2 kappa)
    # and second-order stencils leave a truncation error of the size of the tolerance
    steps = {1: 1e-3, 2: 1e-3, 3: 2e-3}
    stencils = {
        1: [1 / 12, -2 / 3, 0, 2 / 3, -1 / 12],
        2: [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12],
        3: [1 / 8, -1, 13 / 8, 0, -13 / 8, 1, -1 / 8],
    }
    worst = 0.0
    for p in (WavePhysics(kappa=1.0, gamma=0.7), WavePhysics(g=2.0, kappa=0.4, gamma=-1.1, depth=1.3)):
        j = np.arange(-64, 65)
        for n, h in steps.items():
            w = np.array(stencils[n])
            offs = np.arange(w.size) - w.size // 2
            fd = sum(c * omega_tilde(p.with_kappa(p.kappa + o * h), j) for c, o in zip(w, offs)) / h**n
            closed = tilde_c(n) * lambda_j(p, j, include_zero=True) ** n * omega_tilde(p, j)
            np.testing.assert_allclose(omega_kappa_derivative(p, j, n), closed, rtol=1e-14)
            worst = max(worst, float(np.max(np.abs(fd - closed) / np.abs(closed))))
        h = 1e-5
        lam = lambda k: lambda_j(p.with_kappa(k), j, include_zero=True)  # noqa: E731
        dlam = (lam(p.kappa + h) - lam(p.kappa - h)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(dlam + 2 * lam(p.kappa) ** 2) / (2 * lam(p.kappa) ** 2))))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-5 and elapsed < 1.0
    acceptance("2 kappa derivatives", ok, f"max rel err {worst:.2e}, {elapsed:.2f}s")
    assert ok


@pytest.mark.parametrize("depth", [math.inf, 1.3])
def test_3_dirichlet_neumann(acceptance, depth):
    start = time.perf_counter()
    p = WavePhysics(depth=depth)
    cfg = DnoConfig(taylor_order=4, n_modes=16)
    eta, etahat, psi = smooth_field(16, 1e-2, 1), smooth_field(16, 1.0, 2), smooth_field(16, 1.0, 3)
    _, _, shape_err = shape_derivative_check(p, eta, etahat, psi, cfg)
    one = RealField(16, np.eye(1, 33, 16)[0].astype(complex))
    kernel = g_eta_apply(p, eta, one, cfg).norm()
    f, g = smooth_field(16, 1.0, 4), smooth_field(16, 1.0, 5)
    lhs = np.vdot(g.coeffs, g_eta_apply(p, eta, f, cfg).coeffs).real
    rhs = np.vdot(g_eta_apply(p, eta, g, cfg).coeffs, f.coeffs).real
    adjoint = abs(lhs - rhs)
    base = g_eta_apply(p, eta, psi, cfg)
    trans = (g_eta_apply(p, translate(eta, 0.41), translate(psi, 0.41), cfg) - translate(base, 0.41)).norm()
    rev = RealField(16, g_eta_apply(p, RealField(16, eta.coeffs[::-1]), RealField(16, psi.coeffs[::-1]), cfg).coeffs[::-1])
    reversal = (rev - base).norm()
    elapsed = time.perf_counter() - start
    ok = shape_err < 1e-6 and kernel < 1e-9 and adjoint < 1e-9 and trans < 1e-10 and reversal < 1e-10 and elapsed < 5.0
    detail = f"depth={depth} shape {shape_err:.1e}, G[1] {kernel:.1e}, adjoint {adjoint:.1e}, covariance {max(trans, reversal):.1e}"
    acceptance("3 Dirichlet-Neumann", ok, detail)
    assert ok


def test_4_conservation_laws(acceptance):
    start = time.perf_counter()
    s0 = unit_mode_state(P, 64, 1, 1e-3)
    period = 2 * math.pi / big_omega_j(P, 1)
    _, inv = integrate(P, s0, period / 64, 10 * period, DnoConfig(n_modes=64), check_reversibility=True)
    elapsed = time.perf_counter() - start
    ok = (
        inv.hamiltonian_drift_rel < 1e-8
        and inv.momentum_drift < 1e-10
        and inv.mean_eta_drift == 0.0
        and inv.reversibility_defect < 1e-8
        and elapsed < 30.0
    )
    detail = (
        f"dH/H {inv.hamiltonian_drift_rel:.1e}, dP {inv.momentum_drift:.1e}, "
        f"mean {inv.mean_eta_drift}, rev {inv.reversibility_defect:.1e}, {elapsed:.1f}s"
    )
    acceptance("4 conservation laws", ok, detail)
    assert ok


def test_5_linear_solutions(acceptance):
    # sites whose pairwise sums avoid every tangential mode, so the quadratic part of the
    # field cannot force them and the deviation from linear phases is of second order
    sites = SiteSelection((1, 3), (1, 1))
    amp, n = 1e-6, 16
    seed = linear_seed(P, sites, n_phi=2, n_modes=n, epsilon=amp)
    w = action_angle_map(seed, [0.0, 0.0], n)
    w = WahlenState(w.eta * amp, w.zeta * amp)
    om = big_omega_j(P, np.array(sites.sites))
    period = 2 * math.pi / om[0]
    traj, _ = integrate(P, wahlen_backward(P, w), period / 128, period, DnoConfig(n_modes=n))
    z0 = to_complex(P, w.eta, w.zeta)
    end = wahlen_forward(P, traj.states[-1])
    z1 = to_complex(P, end.eta, end.zeta)
    errs = [abs(z1[n + j] - np.exp(-1j * o * period) * z0[n + j]) / abs(z0[n + j]) for j, o in zip(sites.sites, om)]
    ok = max(errs) < 1e-8
    acceptance("5 linear phases", ok, f"max rel err {max(errs):.1e}")
    assert ok


def test_6_transversality_and_resonant_example(acceptance):
    start = time.perf_counter()
    p = WavePhysics()
    cfg = NonresConfig(m0=4, ell_max=6, kappa_range=(0.5, 2.0))
    bounds = {f: transversality_scan(p, TWO, cfg, f).bound for f in FAMILIES}
    q = WavePhysics(kappa=0.9, gamma=0.5)
    sites, ell = resonant_example()
    om = tangential_frequencies(q, sites)
    margin = melnikov_margin(FrequencyModel(physics=q), sites, om, "0th", ell, cfg)
    elapsed = time.perf_counter() - start
    ok = all(b > 0 for b in bounds.values()) and margin < 1e-12 and elapsed < 60.0
    detail = ", ".join(f"{f} {b:.3f}" for f, b in bounds.items()) + f"; resonant margin {margin:.1e}, {elapsed:.1f}s"
    acceptance("6 transversality", ok, detail)
    assert ok


def test_7_measure_estimates(acceptance):
    start = time.perf_counter()
    p = WavePhysics()
    ups = [1e-2, 1e-3, 1e-4]
    totals = [measure_estimate(TWO, NonresConfig(upsilon=u, m0=4, ell_max=6), p).total for u in ups]
    slope = float(np.polyfit(np.log(ups), np.log(totals), 1)[0])
    elapsed = time.perf_counter() - start
    ok = totals[0] > totals[1] > totals[2] and 1 / 4 - 0.3 <= slope <= 1.3 and elapsed < 300.0
    acceptance("7 measure estimates", ok, f"totals {[f'{t:.3g}' for t in totals]}, slope {slope:.3f}, {elapsed:.1f}s")
    assert ok


@pytest.fixture(scope="module")
def reduction_ladder():
    start = time.perf_counter()
    cfg = SolverConfig(n_phi=4, n_modes=16)
    emb = linear_seed(P, TWO, n_phi=4, n_modes=16)
    out = []
    for eps in (1e-2, 5e-3, 2.5e-3):
        emb, _ = newton_solve(emb.copy(epsilon=eps), cfg)
        out.append((eps, reduce_torus(emb)))
    return out, time.perf_counter() - start


def _slope(ladder, value):
    eps = np.log([e for e, _ in ladder])
    return float(np.polyfit(eps, np.log([abs(value(r.constants)) for _, r in ladder]), 1)[0])


def test_8_normal_form_residuals_and_scaling(acceptance, reduction_ladder):
    ladder, elapsed = reduction_ladder
    res = ladder[0][1]
    worst = max(res.residuals.values())
    s32 = _slope(ladder, lambda c: c.m32 - 1)
    s12 = _slope(ladder, lambda c: c.m12)
    ok = worst < 1e-8 and abs(s32 - 2) <= 0.15 and abs(s12 - 2) <= 0.15 and elapsed < 120.0
    acceptance("8 normal form (residuals, m32, m12)", ok, f"max residual {worst:.1e}, slopes m32-1 {s32:.3f}, m12 {s12:.3f}")
    assert ok


@pytest.mark.xfail(strict=True, reason="m1 is even in the amplitude for reversible traveling tori; its slope is 2")
def test_8_first_order_constant_scales_linearly(acceptance, reduction_ladder):
    ladder, _ = reduction_ladder
    s1 = _slope(ladder, lambda c: c.m1)
    ok = abs(s1 - 1) <= 0.15
    acceptance("8 normal form (m1 ~ eps)", ok, f"slope {s1:.3f} (expected failure, see decisions ledger)")
    assert ok


def test_9_solver(acceptance):
    start = time.perf_counter()
    cfg = SolverConfig(n_phi=6, n_modes=24, tol=1e-13)
    seed = linear_seed(P, TWO, n_phi=6, n_modes=24)
    f0 = float(np.linalg.norm(residual_F(seed, cfg)))

    ladder = []
    emb = seed
    for eps in (4e-3, 2e-3, 1e-3):
        emb, rep = newton_solve(emb.copy(epsilon=eps), cfg)
        ladder.append((emb, rep))
    hist = ladder[0][1].residual_history
    floor = 1e-13
    quadratic = len(hist) >= 4 and all(b <= max(a**2, floor) for a, b in zip(hist, hist[1:]))

    one = SiteSelection((1,), (1,))
    cfg1 = SolverConfig(n_phi=8, n_modes=16)
    emb1, _ = newton_solve(linear_seed(P, one, n_phi=8, n_modes=16, epsilon=1e-2), cfg1)
    z = 1e-2 * math.sqrt(emb1.xi[0] / math.pi) / math.sqrt(2.0)
    wave = moving_frame_wave(P, 1, z, 16, cfg1.dno)
    profile_err = float(np.max(np.abs(1e-2 * action_angle_map(emb1, [0.0], 16).eta.coeffs - wave.eta.coeffs)))

    dev = validate_solution(ladder[-1][0], cfg, periods=5.0).max_deviation
    ratios = [correction_norm(e, cfg) / (e.epsilon * math.sqrt(np.linalg.norm(e.xi))) for e, _ in ladder]
    decreasing = all(b < a for a, b in zip(ratios, ratios[1:]))
    elapsed = time.perf_counter() - start
    ok = f0 < 1e-12 and quadratic and profile_err < 1e-8 and dev < 1e-5 and decreasing and elapsed < 600.0
    detail = (
        f"(a) {f0:.1e} (b) {[f'{h:.1e}' for h in hist]} (c) {profile_err:.1e} "
        f"(d) {dev:.1e} (e) {[f'{r:.2e}' for r in ratios]}, {elapsed:.0f}s"
    )
    acceptance("9 solver", ok, detail)
    assert ok


def test_10_cross_module_margins(acceptance):
    cfg = SolverConfig(n_phi=4, n_modes=16)
    emb, _ = newton_solve(linear_seed(P, TWO, n_phi=4, n_modes=16, epsilon=1e-5), cfg)
    model = frequency_model(reduce_torus(emb).constants, P)
    flat = FrequencyModel(physics=P)
    om0 = big_omega_j(P, np.array(TWO.sites))
    ncfg = NonresConfig()
    triples = momentum_triples(TWO, 4, 16)
    worst = 0.0
    for fam in FAMILIES:
        for t in triples[fam]:
            got = melnikov_margin(model, TWO, emb.omega, fam, t, ncfg)
            ref = melnikov_margin(flat, TWO, om0, fam, t, ncfg)
            worst = max(worst, abs(got - ref) / ref)
    ok = worst < 1e-6
    acceptance("10 cross-module margins", ok, f"max rel deviation {worst:.1e}")
    assert ok
