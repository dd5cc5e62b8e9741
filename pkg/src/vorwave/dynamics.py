"""Water-wave vector field with constant vorticity, Hamiltonian, Wahlen map and time integration.

Grid-level functions act on values of a :class:`~vorwave.spectral.Basis` so the
same vector field drives the spatial integrator and the traveling-profile
solver.  The velocity potential is kept with zero spatial mean: the equations
only see ``psi`` through ``psi_x`` and ``G(eta) psi``, and the mean of
``psi_t`` is discarded after every evaluation.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .dispersion import WavePhysics, big_omega_j, mj_coeff
from .dno import DnoConfig, dno_grid, padded_size
from .fields import RealField, from_complex, to_complex
from .spectral import Basis, x_basis

__all__ = [
    "State",
    "WahlenState",
    "IntegrationError",
    "InvariantReport",
    "Trajectory",
    "vector_field_grid",
    "wahlen_field_grid",
    "linear_wahlen_grid",
    "vector_field",
    "hamiltonian",
    "momentum",
    "wahlen_forward",
    "wahlen_backward",
    "linear_flat_apply",
    "linear_flat_evolve",
    "involution",
    "integrate",
    "quadratic_energy",
    "unit_mode_state",
    "cfl_limit",
]


class IntegrationError(RuntimeError):
    """Time step outside the stability bound or non-finite solution."""


@dataclass(frozen=True)
class State:
    """Surface elevation and (zero-mean) velocity potential trace."""

    eta: RealField
    psi: RealField

    def __post_init__(self) -> None:
        if self.eta.n_modes != self.psi.n_modes:
            raise ValueError("eta and psi must share the spatial cutoff")
        if abs(self.eta.coeff(0)) > 1e-13 * max(1.0, self.eta.norm()):
            raise ValueError("eta must have zero mean")
        object.__setattr__(self, "psi", _drop_mean(self.psi))

    @property
    def n_modes(self) -> int:
        return self.eta.n_modes


@dataclass(frozen=True)
class WahlenState:
    """Surface elevation and the canonical variable ``zeta = psi - (gamma/2) dx^{-1} eta``."""

    eta: RealField
    zeta: RealField

    @property
    def n_modes(self) -> int:
        return self.eta.n_modes


def _drop_mean(f: RealField) -> RealField:
    c = np.array(f.coeffs)
    c[f.n_modes] = 0.0
    return f.with_coeffs(c)


def _dx_inv(f: RealField) -> RealField:
    j = f.modes
    safe = np.where(j == 0, 1, j)
    return f.with_coeffs(np.where(j == 0, 0.0, -1j / safe) * f.coeffs)


# -- grid-level fields ----------------------------------------------------------


def _drop_x_mean(basis: Basis, v: np.ndarray) -> np.ndarray:
    return basis.apply((~basis.x_mean_mask).astype(float), v)


def vector_field_grid(basis: Basis, p: WavePhysics, eta: np.ndarray, psi: np.ndarray, cfg: DnoConfig, guard: bool = True):
    """Right-hand side ``(eta_t, psi_t)`` of the water-wave system on grid values."""
    g_psi = dno_grid(basis, p, eta, psi, cfg, guard=guard)
    ex = basis.dx(eta)
    px = basis.dx(psi)
    slope = np.sqrt(1.0 + ex**2)
    deta = g_psi + p.gamma * eta * ex
    dpsi = (
        -p.g * eta
        - 0.5 * px**2
        + (ex * px + g_psi) ** 2 / (2.0 * slope**2)
        + p.kappa * basis.dx(ex / slope)
        + p.gamma * eta * px
        + p.gamma * basis.dx_inv(g_psi)
    )
    return deta, _drop_x_mean(basis, dpsi)


def wahlen_field_grid(basis: Basis, p: WavePhysics, eta: np.ndarray, zeta: np.ndarray, cfg: DnoConfig, guard: bool = True):
    """Right-hand side ``(eta_t, zeta_t)`` in Wahlen coordinates."""
    psi = zeta + 0.5 * p.gamma * basis.dx_inv(eta)
    deta, dpsi = vector_field_grid(basis, p, eta, psi, cfg, guard=guard)
    dzeta = dpsi - 0.5 * p.gamma * basis.dx_inv(deta)
    return deta, _drop_x_mean(basis, dzeta)


def linear_wahlen_grid(basis: Basis, p: WavePhysics, eta: np.ndarray, zeta: np.ndarray):
    """Linearization at the flat equilibrium in Wahlen coordinates."""
    k = basis.wavenumber.astype(float)
    g0 = basis.g0_symbol(p)
    dinv = basis.dx_inv_symbol
    half = 0.5 * p.gamma
    e_hat, z_hat = basis.forward(eta), basis.forward(zeta)
    # -d/dx^{-1} G(0) d/dx^{-1} has symbol G(0)/k^2
    stiff = p.kappa * k**2 + p.g + half**2 * np.where(k == 0, 0.0, g0 / np.where(k == 0, 1.0, k) ** 2)
    de = half * g0 * dinv * e_hat + g0 * z_hat
    dz = -stiff * e_hat + half * dinv * g0 * z_hat
    mask = (~basis.x_mean_mask).astype(float)
    return basis.backward(de * mask), basis.backward(dz * mask)


# -- RealField interface -----------------------------------------------------------


def _basis_for(n_modes: int, cfg: DnoConfig, degree: int | None = None) -> Basis:
    return x_basis(padded_size(n_modes, cfg.taylor_order + 3 if degree is None else degree))


def vector_field(p: WavePhysics, s: State, cfg: DnoConfig) -> tuple[RealField, RealField]:
    """Water-wave vector field truncated to the state cutoff."""
    basis = _basis_for(s.n_modes, cfg)
    de, dp = vector_field_grid(basis, p, s.eta.grid(basis.m), s.psi.grid(basis.m), cfg)
    return RealField.from_grid(de, s.n_modes), RealField.from_grid(dp, s.n_modes)


def hamiltonian(p: WavePhysics, s: State, cfg: DnoConfig) -> float:
    """Kinetic, potential, capillary and vorticity energy, relative to the flat surface."""
    basis = _basis_for(s.n_modes, cfg)
    eta, psi = s.eta.grid(basis.m), s.psi.grid(basis.m)
    g_psi = dno_grid(basis, p, eta, psi, cfg)
    ex, px = basis.dx(eta), basis.dx(psi)
    density = (
        0.5 * (psi * g_psi + p.g * eta**2)
        + p.kappa * ex**2 / (1.0 + np.sqrt(1.0 + ex**2))
        + 0.5 * p.gamma * (-px * eta**2 + p.gamma * eta**3 / 3.0)
    )
    return float(2.0 * np.pi * np.mean(density))


def quadratic_energy(p: WavePhysics, s: State) -> float:
    """Quadratic part of the Hamiltonian, the natural scale of energy drift."""
    w = wahlen_forward(p, s)
    z = to_complex(p, w.eta, w.zeta)
    j = w.eta.modes
    nz = j != 0
    return float(2.0 * np.pi * np.sum(big_omega_j(p, j[nz]) * np.abs(z[nz]) ** 2))


def momentum(p: WavePhysics, s: State) -> float:
    """Horizontal momentum ``int zeta eta_x dx`` in Wahlen coordinates."""
    w = wahlen_forward(p, s)
    j = w.eta.modes
    # Parseval: int f g dx = 2 pi sum f_j conj(g_j)
    return float(2.0 * np.pi * np.real(np.sum(w.zeta.coeffs * np.conj(1j * j * w.eta.coeffs))))


def wahlen_forward(p: WavePhysics, s: State) -> WahlenState:
    return WahlenState(s.eta, s.psi - 0.5 * p.gamma * _dx_inv(s.eta))


def wahlen_backward(p: WavePhysics, w: WahlenState) -> State:
    return State(w.eta, w.zeta + 0.5 * p.gamma * _dx_inv(w.eta))


def linear_flat_apply(p: WavePhysics, w: WahlenState) -> WahlenState:
    """Linear Hamiltonian vector field at the flat surface in Wahlen coordinates."""
    j = w.eta.modes.astype(float)
    nz = j != 0
    safe = np.where(nz, j, 1.0)
    g0 = np.where(nz, np.abs(j) if p.infinite_depth else j * np.tanh(np.clip(p.depth * j, -40, 40)), 0.0)
    dinv = np.where(nz, -1j / safe, 0.0)
    half = 0.5 * p.gamma
    stiff = p.kappa * j**2 + p.g + half**2 * np.where(nz, g0 / safe**2, 0.0)
    e, z = w.eta.coeffs, w.zeta.coeffs
    de = half * g0 * dinv * e + g0 * z
    dz = np.where(nz, -stiff * e + half * dinv * g0 * z, 0.0)
    return WahlenState(w.eta.with_coeffs(de), w.zeta.with_coeffs(dz))


def _omega_vector(p: WavePhysics, n_modes: int) -> np.ndarray:
    j = np.arange(-n_modes, n_modes + 1)
    out = np.zeros(j.shape)
    out[j != 0] = big_omega_j(p, j[j != 0])
    return out


def linear_flat_evolve(p: WavePhysics, w: WahlenState, t: float) -> WahlenState:
    """Exact linear flow: ``z_j(t) = exp(-i Omega_j t) z_j(0)``."""
    z = to_complex(p, w.eta, w.zeta) * np.exp(-1j * _omega_vector(p, w.n_modes) * t)
    eta, zeta = from_complex(p, z, w.eta)
    return WahlenState(eta, zeta)


def involution(s: State) -> State:
    """Reversibility involution ``(eta, psi)(x) -> (eta, -psi)(-x)``."""
    return State(s.eta.with_coeffs(s.eta.coeffs[::-1]), s.psi.with_coeffs(-s.psi.coeffs[::-1]))


# -- time integration ------------------------------------------------------------------


@dataclass
class InvariantReport:
    """Conservation and symmetry monitors collected along a trajectory."""

    steps: int
    dt: float
    t_end: float
    method: str
    hamiltonian0: float
    hamiltonian_drift: float
    hamiltonian_drift_rel: float
    hamiltonian_drift_quadratic: float
    momentum0: float
    momentum_drift: float
    mean_eta_drift: float
    reversibility_defect: float | None = None
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[State] = field(repr=False)


class _ComplexSystem:
    """Evolution ``z' = -i Omega z + N(z)`` of the complex coordinates of a spatial state."""

    def __init__(self, p: WavePhysics, n_modes: int, cfg: DnoConfig, degree: int | None = None):
        self.p = p
        self.n = n_modes
        self.cfg = cfg
        self.basis = _basis_for(n_modes, cfg, degree)
        self.omega = _omega_vector(p, n_modes)
        self.template = RealField.zeros(n_modes)
        self.evals = 0

    def to_state(self, z: np.ndarray) -> State:
        eta, zeta = from_complex(self.p, z, self.template)
        return wahlen_backward(self.p, WahlenState(eta, zeta))

    def from_state(self, s: State) -> np.ndarray:
        w = wahlen_forward(self.p, s)
        return to_complex(self.p, w.eta, w.zeta)

    def nonlinear(self, z: np.ndarray) -> np.ndarray:
        self.evals += 1
        eta, zeta = from_complex(self.p, z, self.template)
        m = self.basis.m
        eg, zg = eta.grid(m), zeta.grid(m)
        de, dz = wahlen_field_grid(self.basis, self.p, eg, zg, self.cfg, guard=False)
        le, lz = linear_wahlen_grid(self.basis, self.p, eg, zg)
        fe = RealField.from_grid(de - le, self.n)
        fz = RealField.from_grid(dz - lz, self.n)
        out = to_complex(self.p, fe, fz)
        if not np.all(np.isfinite(out)):
            raise IntegrationError("non-finite vector field; the solution blew up")
        return out


def _ifrk4_step(sys: _ComplexSystem, z: np.ndarray, dt: float) -> np.ndarray:
    e_half = np.exp(-0.5j * sys.omega * dt)
    e_full = e_half**2
    k1 = sys.nonlinear(z)
    k2 = sys.nonlinear(e_half * (z + 0.5 * dt * k1))
    k3 = sys.nonlinear(e_half * z + 0.5 * dt * k2)
    k4 = sys.nonlinear(e_full * z + dt * e_half * k3)
    return e_full * z + dt / 6.0 * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)


def _rk4_step(sys: _ComplexSystem, z: np.ndarray, dt: float) -> np.ndarray:
    def f(v):
        return -1j * sys.omega * v + sys.nonlinear(v)

    k1 = f(z)
    k2 = f(z + 0.5 * dt * k1)
    k3 = f(z + 0.5 * dt * k2)
    k4 = f(z + dt * k3)
    return z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _split_midpoint_step(sys: _ComplexSystem, z: np.ndarray, dt: float, tol: float = 1e-15, max_iter: int = 50) -> np.ndarray:
    # exact linear half steps around an implicit midpoint step of the nonlinear part
    e_half = np.exp(-0.5j * sys.omega * dt)
    z0 = e_half * z
    z1 = z0 + dt * sys.nonlinear(z0)
    for _ in range(max_iter):
        nxt = z0 + dt * sys.nonlinear(0.5 * (z0 + z1))
        delta = np.max(np.abs(nxt - z1))
        z1 = nxt
        if delta <= tol * max(1.0, np.max(np.abs(z1))):
            break
    return e_half * z1


_STEPPERS = {"ifrk4": _ifrk4_step, "rk4": _rk4_step, "split-midpoint": _split_midpoint_step}


def cfl_limit(p: WavePhysics, n_modes: int, safety: float = 2.5) -> float:
    """Largest stable explicit RK4 step for the capillary frequency at the cutoff."""
    return safety / float(big_omega_j(p, n_modes) + abs(p.gamma))


def integrate(
    p: WavePhysics,
    s0: State,
    dt: float,
    t_end: float,
    cfg: DnoConfig,
    method: str = "ifrk4",
    save_every: int = 0,
    check_reversibility: bool = False,
    degree: int | None = None,
    max_amplitude: float = 1e3,
) -> tuple[Trajectory, InvariantReport]:
    """Fixed-step integration in complex coordinates with invariant monitoring.

    ``method`` is ``"ifrk4"`` (integrating-factor RK4, default), ``"rk4"``
    (plain RK4, subject to the capillary step bound) or ``"split-midpoint"``
    (exact linear flow composed with an implicit midpoint step, symplectic).
    A negative ``t_end`` integrates backwards.  ``check_reversibility``
    additionally integrates to ``-t_end`` and reports
    ``max |u(-t) - S u(t)|`` on the grid.
    """
    if method not in _STEPPERS:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(_STEPPERS)}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    n_steps = int(round(abs(t_end) / dt))
    if n_steps == 0 or not math.isclose(n_steps * dt, abs(t_end), rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError("t_end must be a positive multiple of dt")
    if method == "rk4" and dt > cfl_limit(p, s0.n_modes):
        raise IntegrationError(f"dt = {dt:.3g} exceeds the capillary step bound {cfl_limit(p, s0.n_modes):.3g}")
    start = time.perf_counter()
    sys = _ComplexSystem(p, s0.n_modes, cfg, degree)
    step = _STEPPERS[method]
    h_dt = math.copysign(dt, t_end)

    def run(z0: np.ndarray, signed_dt: float, keep: bool):
        z = z0
        times, states = [0.0], [sys.to_state(z0)] if keep else []
        for k in range(1, n_steps + 1):
            z = step(sys, z, signed_dt)
            if not np.all(np.isfinite(z)) or np.max(np.abs(z)) > max_amplitude:
                raise IntegrationError(f"coefficient overflow at step {k}")
            if keep and save_every and k % save_every == 0:
                times.append(k * signed_dt)
                states.append(sys.to_state(z))
        if keep and (not save_every or n_steps % save_every):
            times.append(n_steps * signed_dt)
            states.append(sys.to_state(z))
        return z, times, states

    z0 = sys.from_state(s0)
    z_end, times, states = run(z0, h_dt, True)
    s_end = sys.to_state(z_end)
    h0 = hamiltonian(p, s0, cfg)
    h1 = hamiltonian(p, s_end, cfg)
    q0 = quadratic_energy(p, s0)
    m0, m1 = momentum(p, s0), momentum(p, s_end)
    rev = None
    if check_reversibility:
        z_back, _, _ = run(z0, -h_dt, False)
        s_back = sys.to_state(z_back)
        s_ref = involution(s_end)
        m = 2 * s0.n_modes + 1
        rev = float(
            max(
                np.max(np.abs(s_back.eta.grid(m) - s_ref.eta.grid(m))),
                np.max(np.abs(s_back.psi.grid(m) - s_ref.psi.grid(m))),
            )
        )
    report = InvariantReport(
        steps=n_steps,
        dt=dt,
        t_end=float(t_end),
        method=method,
        hamiltonian0=h0,
        hamiltonian_drift=abs(h1 - h0),
        hamiltonian_drift_rel=abs(h1 - h0) / abs(h0) if h0 else abs(h1 - h0),
        hamiltonian_drift_quadratic=abs(h1 - h0) / q0 if q0 else abs(h1 - h0),
        momentum0=m0,
        momentum_drift=abs(m1 - m0),
        mean_eta_drift=float(max(abs(s.eta.coeff(0)) for s in states)),
        reversibility_defect=rev,
        wall_time=time.perf_counter() - start,
    )
    return Trajectory(np.asarray(times), states), report


def mode_frequency(p: WavePhysics, j: int) -> float:
    """``Omega_j``, re-exported for period computations."""
    return float(big_omega_j(p, j))


def unit_mode_state(p: WavePhysics, n_modes: int, j: int, amplitude: float) -> State:
    """Linear traveling mode ``eta = amplitude cos(j x)`` carried by the single coordinate ``z_j``."""
    m = float(mj_coeff(p, j))
    z = np.zeros(2 * n_modes + 1, dtype=complex)
    z[n_modes + j] = amplitude / (m * math.sqrt(2.0))
    eta, zeta = from_complex(p, z, RealField.zeros(n_modes))
    return wahlen_backward(p, WahlenState(eta, zeta))
