"""Scalar by-products of the reduction of the linearized operator at a torus.

All fields are quasi-periodic traveling waves ``f(phi, x) = F(phi - jvec x)``
and are stored as profile values ``F`` on a ``T^nu`` grid.  Compositions
with the time reparametrization and with the straightening diffeomorphism
are evaluated off-grid by summing the Fourier series of the profile:

* ``f(phi + omega s(phi), x)`` has profile ``sum_ell F_ell e^{i ell.(Psi + omega s)}``;
* ``f(phi, x + t(phi, x))`` has profile ``sum_ell F_ell e^{i ell.(Psi - jvec t)}``.

Parities refer to ``(phi, x) -> (-phi, -x)``, which acts on profiles as
``Psi -> -Psi``; an even real profile has real coefficients, an odd one
imaginary coefficients.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dispersion import WavePhysics
from .dno import DnoConfig, bv_grid, padded_size
from .nonres import FrequencyModel, bracket
from .solver import TorusEmbedding, _profile_fields
from .spectral import Basis, profile_basis, smooth_cutoff

__all__ = [
    "NormalFormConfig",
    "ReductionConstants",
    "AuxProfiles",
    "NormalFormResult",
    "SmallDivisorOverflow",
    "DiffeomorphismError",
    "ProfileGrid",
    "profile_c",
    "solve_beta",
    "reparametrize_time",
    "coefficient_a1",
    "coefficient_chain_m1",
    "coefficient_chain_m12",
    "coefficient_b3",
    "frequency_model",
    "reduce_torus",
    "parity_defect",
]


class SmallDivisorOverflow(ValueError):
    """The extended inverse of ``omega.d_phi`` cut off a non-negligible coefficient."""


class DiffeomorphismError(ValueError):
    """The straightening diffeomorphism is not small enough to invert."""


@dataclass(frozen=True)
class NormalFormConfig:
    """Cutoff of the extended inverse of ``omega.d_phi`` and numerical tolerances."""

    upsilon: float = 1e-6
    tau: float | None = None
    coefficient_floor: float = 1e-13
    newton_tol: float = 1e-14
    newton_max_iter: int = 50
    max_beta_slope: float = 0.5
    taylor_order: int = 4


@dataclass(frozen=True)
class ReductionConstants:
    """Constant coefficients of the reduced operator at orders 3/2, 1 and 1/2."""

    m32: float
    m1: float
    m12: float
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


class ProfileGrid:
    """Profile grid with the frequency vector used by ``omega.d_phi`` and its inverse."""

    def __init__(self, basis: Basis, omega: np.ndarray, cfg: NormalFormConfig):
        self.basis = basis
        self.omega = np.asarray(omega, dtype=float)
        self.cfg = cfg
        self.jvec = basis.jvec
        self.nu = basis.ndim
        ells = np.stack([m.ravel() for m in basis.modes], axis=1)
        self.ells = ells
        self.points = np.stack([pt.ravel() for pt in basis.points], axis=1)

    # -- calculus ----------------------------------------------------------------
    def dx(self, f: np.ndarray) -> np.ndarray:
        return self.basis.dx(f)

    def dx_inv(self, f: np.ndarray) -> np.ndarray:
        return self.basis.dx_inv(f)

    def x_mean(self, f: np.ndarray) -> np.ndarray:
        return self.basis.x_mean(f)

    def mean(self, f: np.ndarray) -> float:
        return float(np.mean(f))

    def omega_dphi(self, f: np.ndarray) -> np.ndarray:
        return self.basis.omega_dphi(self.omega, f)

    def omega_dphi_inv(self, f: np.ndarray) -> np.ndarray:
        """Extended inverse of ``omega.d_phi`` with the smooth small-divisor cutoff.

        The angle average is dropped.  A cut-off coefficient above the
        configured floor raises :class:`SmallDivisorOverflow`.
        """
        tau = self.cfg.tau if self.cfg.tau is not None else float(self.nu)
        sym = self.basis.angle_derivative_symbol(self.omega)  # i omega.ell
        div = sym.imag
        ell = np.stack(self.basis.modes, axis=-1)
        weight = self.cfg.upsilon * bracket(ell) ** (-tau)
        chi = smooth_cutoff(div / weight)
        hat = self.basis.forward(f)
        scale = max(float(np.max(np.abs(hat))), 1e-300)
        zero = np.all(ell == 0, axis=-1)
        lost = (chi < 1.0) & ~zero & (np.abs(hat) > self.cfg.coefficient_floor * scale)
        if np.any(lost):
            k = np.unravel_index(int(np.argmax(np.where(lost, np.abs(hat), 0.0))), hat.shape)
            bad = [int(m[k]) for m in self.basis.modes]
            raise SmallDivisorOverflow(f"small divisor omega.ell = {div[k]:.3g} at ell = {bad}")
        safe = np.where(zero | (chi == 0), 1.0, sym)
        out = np.where(zero | (chi == 0), 0.0, chi * hat / safe)
        return self.basis.backward(out)

    # -- off-grid composition ----------------------------------------------------
    def _significant(self, f: np.ndarray):
        hat = self.basis.forward(f).ravel()
        keep = np.abs(hat) > 1e-17 * max(float(np.max(np.abs(hat))), 1e-300)
        return hat[keep], self.ells[keep]

    def compose(self, f: np.ndarray, direction: np.ndarray, shift: np.ndarray, derivative: bool = False):
        """Profile values ``F(Psi + direction * shift(Psi))`` (and the gradient along ``direction``)."""
        coef, ells = self._significant(f)
        d = np.asarray(direction, dtype=float)
        phase = self.points @ ells.T + np.outer(shift.ravel(), ells @ d)
        waves = np.exp(1j * phase)
        val = (waves @ coef).real.reshape(f.shape)
        if not derivative:
            return val
        grad = (waves @ (1j * (ells @ d) * coef)).real.reshape(f.shape)
        return val, grad

    def solve_shift(self, f: np.ndarray, direction: np.ndarray) -> tuple[np.ndarray, float]:
        """Pointwise Newton for ``s = -F(Psi + direction s)``; returns ``s`` and the final residual."""
        s = -f.copy()
        res = math.inf
        for _ in range(self.cfg.newton_max_iter):
            val, grad = self.compose(f, direction, s, derivative=True)
            g = s + val
            res = float(np.max(np.abs(g)))
            if res <= self.cfg.newton_tol:
                break
            s = s - g / (1.0 + grad)
        else:
            raise DiffeomorphismError(f"inverse shift did not converge (residual {res:.3g})")
        return s, res


# -- individual steps -------------------------------------------------------------------------


def profile_c(grid: ProfileGrid, eta: np.ndarray) -> np.ndarray:
    """``(1 + eta_x^2)^{-3/2}`` pointwise."""
    return (1.0 + grid.dx(eta) ** 2) ** -1.5


def solve_beta(grid: ProfileGrid, c: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """``m(phi)`` and ``beta`` with ``(1 + beta_x)^3 c = m(phi)``; returns ``(m, beta, residual)``."""
    if np.any(c <= 0):
        raise ValueError("c must be positive")
    m = grid.x_mean(c ** (-1.0 / 3.0)) ** -3
    beta = grid.dx_inv((m / c) ** (1.0 / 3.0) - 1.0)
    res = float(np.max(np.abs((1.0 + grid.dx(beta)) ** 3 * c - m)))
    return m, beta, res


@dataclass
class TimeReparametrization:
    m32: float
    p: np.ndarray
    p_inverse: np.ndarray
    rho: np.ndarray
    m32_of_phi: np.ndarray
    residual: float
    inverse_residual: float


def reparametrize_time(grid: ProfileGrid, eta: np.ndarray) -> TimeReparametrization:
    """Constant ``m32``, the reparametrization ``p`` with its inverse, and ``rho``.

    The residual is ``max |m32(theta)/rho(theta) - m32|`` on the grid.
    """
    avg = grid.x_mean(np.sqrt(1.0 + grid.dx(eta) ** 2)) ** -1.5
    m32 = grid.mean(avg)
    p = grid.omega_dphi_inv(avg / m32 - 1.0)
    p_inv, inv_res = grid.solve_shift(p, grid.omega)
    rho = grid.compose(1.0 + grid.omega_dphi(p), grid.omega, p_inv)
    m32_phi = grid.compose(avg, grid.omega, p_inv)
    res = float(np.max(np.abs(m32_phi / rho - m32)))
    return TimeReparametrization(m32, p, p_inv, rho, m32_phi, res, inv_res)


def reparametrize(grid: ProfileGrid, f: np.ndarray, tr: TimeReparametrization) -> np.ndarray:
    """``f(theta + omega p_inverse(theta), x)``."""
    return grid.compose(f, grid.omega, tr.p_inverse)


@dataclass
class Straightening:
    m: np.ndarray
    beta: np.ndarray
    beta_inverse: np.ndarray
    residual: float
    inverse_residual: float


def straighten(grid: ProfileGrid, eta_p: np.ndarray, cfg: NormalFormConfig) -> Straightening:
    c = profile_c(grid, eta_p)
    m, beta, res = solve_beta(grid, c)
    slope = float(np.max(np.abs(grid.dx(beta))))
    if slope >= cfg.max_beta_slope:
        raise DiffeomorphismError(f"max |beta_x| = {slope:.3g} exceeds {cfg.max_beta_slope}")
    # x = y + breve(y) with breve(y) = -beta(y + breve(y)); on profiles the x shift moves Psi by -jvec
    inv, inv_res = grid.solve_shift(beta, -grid.jvec.astype(float))
    return Straightening(m, beta, inv, res, inv_res)


def compose_diffeo(grid: ProfileGrid, f: np.ndarray, st: Straightening) -> np.ndarray:
    """``f(phi, y + breve_beta(phi, y))``."""
    return grid.compose(f, -grid.jvec.astype(float), st.beta_inverse)


def coefficient_a1(
    grid: ProfileGrid, v_tilde_p: np.ndarray, st: Straightening, tr: TimeReparametrization
) -> tuple[np.ndarray, np.ndarray]:
    """First-order coefficient after straightening and its normalization by ``rho``."""
    inner = (1.0 + grid.dx(st.beta)) * v_tilde_p + grid.omega_dphi(st.beta)
    a1 = compose_diffeo(grid, inner, st)
    return a1, a1 / tr.rho


def coefficient_chain_m1(grid: ProfileGrid, a1d: np.ndarray) -> tuple[float, np.ndarray, float]:
    """``m1`` (space-time average) and the shift ``varrho(phi)``; returns the residual too."""
    avg_x = grid.x_mean(a1d)
    m1 = grid.mean(a1d)
    varrho = -grid.omega_dphi_inv(avg_x - m1)
    res = float(np.max(np.abs(grid.omega_dphi(varrho) + avg_x - m1)))
    return m1, varrho, res


@dataclass
class HalfOrderChain:
    m12: float
    b1: np.ndarray
    b2: np.ndarray
    a2d: np.ndarray
    flattening_residual: float
    average_residual: float
    removed_mean: float


def coefficient_chain_m12(grid: ProfileGrid, a1d: np.ndarray, m32: float, kappa: float) -> HalfOrderChain:
    """``b1``, ``m12``, ``b2`` and the order-1/2 coefficient ``a2d``."""
    sk = math.sqrt(kappa)
    avg_x = grid.x_mean(a1d)
    b1 = -(2.0 / (3.0 * m32 * sk)) * grid.dx_inv(a1d - avg_x)
    b1x = grid.dx(b1)
    b1xx = grid.dx(b1x)
    a1x = grid.dx(a1d)
    flat_res = float(np.max(np.abs(a1d + 1.5 * m32 * sk * b1x - avg_x)))
    core = -0.5 * a1x * b1 + a1d * b1x + 0.75 * sk * m32 * (b1x**2 - 0.5 * b1xx * b1)
    m12 = grid.mean(core)
    forcing = grid.x_mean(core + grid.omega_dphi(b1)) - m12
    removed = float(np.mean(forcing))
    b2 = -grid.omega_dphi_inv(forcing - removed)
    a2d = core + grid.omega_dphi(b1) - (0.5 * a1x + 0.375 * sk * m32 * b1xx) * b2 + grid.omega_dphi(b2)
    avg_res = float(np.max(np.abs(grid.x_mean(a2d) - m12)))
    return HalfOrderChain(m12, b1, b2, a2d, flat_res, avg_res, removed)


def coefficient_b3(grid: ProfileGrid, a3d: np.ndarray, m32: float, kappa: float, m12: float, tol: float = 1e-8) -> tuple[np.ndarray, float]:
    """``b3`` with ``a3d - (3/2) m32 sqrt(kappa) (b3)_x = m12``; returns ``(b3, residual)``."""
    avg_x = grid.x_mean(a3d)
    if float(np.max(np.abs(avg_x - m12))) > tol:
        raise ValueError("space average of a3d is not constant")
    sk = math.sqrt(kappa)
    b3 = (2.0 / (3.0 * m32 * sk)) * grid.dx_inv(a3d - avg_x)
    res = float(np.max(np.abs(a3d - 1.5 * m32 * sk * grid.dx(b3) - m12)))
    return b3, res


def frequency_model(constants: ReductionConstants, p: WavePhysics) -> FrequencyModel:
    """First Melnikov approximation ``mu_j = m32 Omega_j + m1 j + m12 |j|^{1/2}`` (remainder zero)."""
    return FrequencyModel(m32=constants.m32, m1=constants.m1, m12=constants.m12, physics=p)


# -- parity -----------------------------------------------------------------------------------


def parity_defect(grid: ProfileGrid, f: np.ndarray, parity: str) -> float:
    """Size of the wrong-parity part of a profile, relative to its norm."""
    hat = grid.basis.forward(f)
    scale = max(float(np.max(np.abs(hat))), 1e-300)
    wrong = hat.imag if parity == "even" else hat.real
    return float(np.max(np.abs(wrong)) / scale)


def traveling_defect(grid: ProfileGrid, f: np.ndarray) -> float:
    """Weight of ``phi``-only profiles outside the lattice ``jvec.ell = 0``."""
    hat = grid.basis.forward(f)
    scale = max(float(np.max(np.abs(hat))), 1e-300)
    off = grid.basis.wavenumber != 0
    return float(np.max(np.abs(np.where(off, hat, 0.0))) / scale)


# -- full chain -------------------------------------------------------------------------------


@dataclass
class AuxProfiles:
    """Profiles of the reduction (values on the profile grid)."""

    beta: np.ndarray
    p: np.ndarray
    rho: np.ndarray
    q: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    varrho: np.ndarray
    b3: np.ndarray
    a1d: np.ndarray
    a2d: np.ndarray
    a3d: np.ndarray


@dataclass
class NormalFormResult:
    constants: ReductionConstants
    residuals: dict[str, float]
    parities: dict[str, float]
    profiles: AuxProfiles = field(repr=False)
    grid: ProfileGrid = field(repr=False)

    def to_dict(self) -> dict:
        return {"m32": self.constants.m32, "m1": self.constants.m1, "m12": self.constants.m12,
                "residuals": self.residuals, "parities": self.parities, "provenance": self.constants.provenance}


def physical_profiles(emb: TorusEmbedding, basis: Basis) -> tuple[np.ndarray, np.ndarray]:
    """``(eta, psi)`` of the physical torus ``eps A(i)`` on a profile grid."""
    eta, zeta, _, _ = _profile_fields(emb, basis)
    eps = emb.epsilon
    psi = zeta + 0.5 * emb.physics.gamma * basis.dx_inv(eta)
    return eps * eta, eps * psi


def reduce_torus(emb: TorusEmbedding, cfg: NormalFormConfig | None = None, grid_size: int | None = None) -> NormalFormResult:
    """Run the reduction chain on a torus and collect constants, residuals and parity checks."""
    cfg = cfg or NormalFormConfig()
    p = emb.physics
    lay = emb.layout
    m = grid_size or padded_size(lay.n_phi, cfg.taylor_order + 3)
    basis = profile_basis(lay.jvec, m)
    grid = ProfileGrid(basis, emb.omega, cfg)
    eta, psi = physical_profiles(emb, basis)

    tr = reparametrize_time(grid, eta)
    eta_p = reparametrize(grid, eta, tr)
    psi_p = reparametrize(grid, psi, tr)
    st = straighten(grid, eta_p, cfg)
    _, _, v_tilde = bv_grid(basis, p, eta_p, psi_p, DnoConfig(taylor_order=cfg.taylor_order, n_modes=lay.n_modes))
    _, a1d = coefficient_a1(grid, v_tilde, st, tr)
    m1, varrho, m1_res = coefficient_chain_m1(grid, a1d)
    half = coefficient_chain_m12(grid, a1d, tr.m32, p.kappa)
    a3d = grid.compose(half.a2d, grid.jvec.astype(float), varrho)
    b3, b3_res = coefficient_b3(grid, a3d, tr.m32, p.kappa, half.m12)
    c_p = profile_c(grid, eta_p)
    a3 = compose_diffeo(grid, c_p * (1.0 + grid.dx(st.beta)), st)
    q = a3**-0.25
    inv_check = float(np.max(np.abs(grid.compose(st.beta, -grid.jvec.astype(float), st.beta_inverse) + st.beta_inverse)))

    residuals = {
        "straightening": st.residual,
        "inverse_diffeomorphism": inv_check,
        "time_reparametrization": tr.residual,
        "inverse_reparametrization": tr.inverse_residual,
        "first_order_flattening": half.flattening_residual,
        "first_order_average": m1_res,
        "half_order_average": half.average_residual,
        "half_order_flattening": b3_res,
        "half_order_removed_mean": abs(half.removed_mean),
    }
    parities = {
        "p_odd": parity_defect(grid, tr.p, "odd"),
        "beta_odd": parity_defect(grid, st.beta, "odd"),
        "b1_odd": parity_defect(grid, half.b1, "odd"),
        "b3_odd": parity_defect(grid, b3, "odd"),
        "b2_odd": parity_defect(grid, half.b2, "odd"),
        "varrho_odd": parity_defect(grid, varrho, "odd"),
        "q_even": parity_defect(grid, q, "even"),
        "a1d_even": parity_defect(grid, a1d, "even"),
        "a3d_even": parity_defect(grid, a3d, "even"),
        "rho_even": parity_defect(grid, tr.rho, "even"),
        "p_traveling": traveling_defect(grid, tr.p),
        "varrho_traveling": traveling_defect(grid, varrho),
        "b2_traveling": traveling_defect(grid, half.b2),
    }
    const = ReductionConstants(
        m32=tr.m32,
        m1=m1,
        m12=half.m12,
        provenance={
            "epsilon": emb.epsilon,
            "sites": list(emb.sites.sites),
            "n_phi": emb.n_phi,
            "n_modes": emb.n_modes,
            "grid": m,
            "upsilon": cfg.upsilon,
        },
    )
    prof = AuxProfiles(st.beta, tr.p, tr.rho, q, half.b1, half.b2, varrho, b3, a1d, half.a2d, a3d)
    return NormalFormResult(const, residuals, parities, prof, grid)
