"""Reversible traveling quasi-periodic tori: linear seed, embedding residual and Newton solver.

A torus embedding ``phi -> (theta(phi), I(phi), w(phi))`` in action-angle and
normal coordinates is stored through its independent Fourier coefficients:

* ``Theta = theta - phi`` is a sine series and ``I`` a cosine series over the
  lattice ``L0 = {ell : jvec.ell = 0}``, one term per +- pair; ``I`` has zero
  mean (the mean is absorbed in the amplitudes ``xi``);
* the normal part is given through its complex coordinates
  ``z_k(phi) = sum_ell Z_ell exp(i ell.phi)`` with ``k = -jvec.ell`` a normal
  site and ``Z_ell`` real.

Sine/cosine parity and real ``Z`` encode reversibility, the lattice
restrictions encode the traveling property, so every iterate satisfies
both exactly.  Fields are evaluated through the profile ``U`` with
``u(phi, x) = U(phi - jvec x)``.

The residual is ``omega.d_phi i - X(i) - (alpha - Omega, 0, 0)`` for the
rescaled vector field ``X(u) = X_ww(eps u)/eps`` pulled back to action-angle
coordinates.  Either ``omega`` (solution formulation, ``alpha = Omega``) or
``alpha`` (conjugation formulation, ``omega`` fixed) is solved for.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import fsolve

from .dispersion import WavePhysics, big_omega_j, mj_coeff
from .dno import DnoConfig, padded_size
from .dynamics import (
    WahlenState,
    integrate,
    linear_wahlen_grid,
    vector_field_grid,
    wahlen_backward,
    wahlen_field_grid,
    wahlen_forward,
)
from .fields import RealField, TorusField, from_complex
from .nonres import SiteSelection, diophantine_margin
from .spectral import Basis, profile_basis, x_basis

__all__ = [
    "SolverConfig",
    "TorusLayout",
    "TorusEmbedding",
    "SolveReport",
    "ValidationReport",
    "SmallDivisorError",
    "ConvergenceError",
    "xi_for_amplitude",
    "linear_seed",
    "action_angle_point",
    "action_angle_map",
    "residual_F",
    "residual_parts",
    "newton_solve",
    "continue_amplitude",
    "validate_solution",
    "small_divisor_check",
    "moving_frame_wave",
]


class SmallDivisorError(ValueError):
    """The linearized torus equation has a (nearly) vanishing divisor in the Galerkin box."""


class ConvergenceError(RuntimeError):
    """Newton did not reach the requested tolerance."""


@dataclass(frozen=True)
class SolverConfig:
    """Truncation and Newton controls."""

    n_phi: int = 6
    n_modes: int = 24
    taylor_order: int = 4
    tol: float = 1e-11
    max_iter: int = 12
    damping: float = 1.0
    fd_step: float = 1e-6
    unknown: str = "omega"
    min_divisor: float = 1e-6
    max_slope: float = 0.3

    def __post_init__(self) -> None:
        if self.n_phi < 1 or self.n_modes < 1:
            raise ValueError("n_phi and n_modes must be positive")
        if self.unknown not in ("omega", "alpha"):
            raise ValueError("unknown must be 'omega' or 'alpha'")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")

    @property
    def dno(self) -> DnoConfig:
        return DnoConfig(taylor_order=self.taylor_order, n_modes=self.n_modes, max_slope=self.max_slope)

    def to_dict(self) -> dict:
        return asdict(self)


class TorusLayout:
    """Index sets of the reduced unknowns inside the centered lattice box ``|ell|_inf <= n_phi``."""

    def __init__(self, sites: SiteSelection, n_phi: int, n_modes: int):
        self.sites = sites
        self.jvec = sites.jvec
        self.nu = sites.nu
        self.n_phi = int(n_phi)
        self.n_modes = int(n_modes)
        rng = np.arange(-self.n_phi, self.n_phi + 1)
        self.ells = np.array(list(itertools.product(rng, repeat=self.nu)), dtype=int)
        self.box_shape = (2 * self.n_phi + 1,) * self.nu
        self.k = -self.ells @ self.jvec
        first = np.array([row[np.nonzero(row)[0][0]] if np.any(row) else 0 for row in self.ells])
        self.zero = int(np.nonzero(~np.any(self.ells, axis=1))[0][0])
        self.l0p = np.nonzero((self.k == 0) & (first > 0))[0]
        normal = np.array([sites.is_normal(int(k)) for k in self.k])
        self.w_idx = np.nonzero(normal & (np.abs(self.k) <= self.n_modes))[0]
        self.tan_masks = [self.k == j for j in sites.sites]
        self.size = self.ells.shape[0]

    @property
    def n_l0(self) -> int:
        return self.l0p.size

    @property
    def n_unknowns(self) -> int:
        return self.nu + 2 * self.nu * self.n_l0 + self.w_idx.size

    def neg(self, idx: np.ndarray) -> np.ndarray:
        """Flat index of ``-ell``."""
        return self.size - 1 - idx

    def eval_grid_size(self, degree: int) -> int:
        return padded_size(self.n_phi, degree)


@dataclass
class TorusEmbedding:
    """Reduced coefficients of a reversible traveling torus embedding and its parameters.

    ``theta_sin`` and ``i_cos`` have shape ``(nu, n_l0)``; ``z_normal`` holds
    the real ``Z_ell`` over ``layout.w_idx``.  The physical state on the torus
    is ``epsilon * A(theta, I, w)``.
    """

    physics: WavePhysics
    sites: SiteSelection
    xi: np.ndarray
    epsilon: float
    omega: np.ndarray
    alpha: np.ndarray
    n_phi: int
    n_modes: int
    theta_sin: np.ndarray
    i_cos: np.ndarray
    z_normal: np.ndarray

    def __post_init__(self) -> None:
        self.xi = np.asarray(self.xi, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)
        self.alpha = np.asarray(self.alpha, dtype=float)
        if np.any(self.xi <= 0):
            raise ValueError("amplitudes xi must be positive")
        lay = self.layout
        self.theta_sin = np.asarray(self.theta_sin, dtype=float).reshape(lay.nu, lay.n_l0)
        self.i_cos = np.asarray(self.i_cos, dtype=float).reshape(lay.nu, lay.n_l0)
        self.z_normal = np.asarray(self.z_normal, dtype=float).reshape(lay.w_idx.size)

    @property
    def layout(self) -> TorusLayout:
        lay = getattr(self, "_layout", None)
        if lay is None or lay.n_phi != self.n_phi or lay.n_modes != self.n_modes or lay.sites != self.sites:
            lay = TorusLayout(self.sites, self.n_phi, self.n_modes)
            object.__setattr__(self, "_layout", lay)
        return lay

    @property
    def nu(self) -> int:
        return self.sites.nu

    def copy(self, **changes) -> "TorusEmbedding":
        base = dict(
            physics=self.physics,
            sites=self.sites,
            xi=self.xi.copy(),
            epsilon=self.epsilon,
            omega=self.omega.copy(),
            alpha=self.alpha.copy(),
            n_phi=self.n_phi,
            n_modes=self.n_modes,
            theta_sin=self.theta_sin.copy(),
            i_cos=self.i_cos.copy(),
            z_normal=self.z_normal.copy(),
        )
        base.update(changes)
        return TorusEmbedding(**base)

    def resized(self, n_phi: int, n_modes: int) -> "TorusEmbedding":
        """The same embedding in another truncation (coefficients matched by lattice index)."""
        old = self.layout
        new = TorusLayout(self.sites, n_phi, n_modes)

        def move(values: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
            lookup = {tuple(old.ells[i]): k for k, i in enumerate(src)}
            out = np.zeros(values.shape[:-1] + (dst.size,))
            for k, i in enumerate(dst):
                hit = lookup.get(tuple(new.ells[i]))
                if hit is not None:
                    out[..., k] = values[..., hit]
            return out

        return self.copy(
            n_phi=n_phi,
            n_modes=n_modes,
            theta_sin=move(self.theta_sin, old.l0p, new.l0p),
            i_cos=move(self.i_cos, old.l0p, new.l0p),
            z_normal=move(self.z_normal, old.w_idx, new.w_idx),
        )

    # -- coefficient boxes ------------------------------------------------------
    def theta_box(self) -> np.ndarray:
        """Centered coefficients of ``Theta`` (shape ``(nu, size)``)."""
        lay = self.layout
        out = np.zeros((lay.nu, lay.size), dtype=complex)
        out[:, lay.l0p] = self.theta_sin / 2j
        out[:, lay.neg(lay.l0p)] = -self.theta_sin / 2j
        return out

    def action_box(self) -> np.ndarray:
        lay = self.layout
        out = np.zeros((lay.nu, lay.size), dtype=complex)
        out[:, lay.l0p] = self.i_cos / 2
        out[:, lay.neg(lay.l0p)] = self.i_cos / 2
        return out

    def z_box(self) -> np.ndarray:
        out = np.zeros(self.layout.size, dtype=complex)
        out[self.layout.w_idx] = self.z_normal
        return out

    def profile_grids(self, m: int | None = None, include_normal: bool = True):
        """Profile values ``(eta, zeta)`` of ``A(i)`` on the ``T^nu`` grid, plus angles and radii."""
        lay = self.layout
        m = lay.eval_grid_size(_degree()) if m is None else m
        basis = profile_basis(lay.jvec, m)
        return _profile_fields(self, basis, include_normal)

    def torus_fields(self, n_modes: int | None = None) -> tuple[TorusField, TorusField]:
        """``A(i)(phi, x)`` (unscaled) as traveling torus fields in ``(phi, x)``."""
        lay = self.layout
        nm = max(lay.n_modes, int(np.max(np.abs(lay.k)))) if n_modes is None else n_modes
        basis = profile_basis(lay.jvec, lay.eval_grid_size(_degree()))
        eta, zeta, _, _ = _profile_fields(self, basis, True)
        eb = basis.coeff_box(eta, lay.n_phi).ravel()
        zb = basis.coeff_box(zeta, lay.n_phi).ravel()
        shape = lay.box_shape + (2 * nm + 1,)
        ce = np.zeros(shape, dtype=complex)
        cz = np.zeros(shape, dtype=complex)
        keep = np.abs(lay.k) <= nm
        idx = tuple(lay.ells[keep].T + lay.n_phi) + (lay.k[keep] + nm,)
        ce[idx] = eb[keep]
        cz[idx] = zb[keep]
        jv = tuple(int(v) for v in lay.jvec)
        return (
            TorusField(lay.nu, lay.n_phi, nm, ce, jv),
            TorusField(lay.nu, lay.n_phi, nm, cz, jv),
        )

    def to_dict(self) -> dict:
        return {
            "physics": self.physics.to_dict(),
            "sites": self.sites.to_dict(),
            "xi": self.xi.tolist(),
            "epsilon": self.epsilon,
            "omega": self.omega.tolist(),
            "alpha": self.alpha.tolist(),
            "n_phi": self.n_phi,
            "n_modes": self.n_modes,
            "theta_sin": self.theta_sin.tolist(),
            "i_cos": self.i_cos.tolist(),
        }


def _degree(taylor_order: int = 4) -> int:
    # products of this many factors are resolved exactly on the profile grid
    return taylor_order + 3


def xi_for_amplitude(p: WavePhysics, sites: SiteSelection, amplitude: float = 1.0) -> np.ndarray:
    """Amplitudes ``xi`` for which every tangential mode has elevation amplitude ``amplitude``."""
    m = np.asarray(mj_coeff(p, np.array(sites.sites)), dtype=float)
    return math.pi * amplitude**2 / m**2


def linear_seed(
    p: WavePhysics,
    sites: SiteSelection,
    xi: Sequence[float] | None = None,
    kappa: float | None = None,
    n_phi: int = 6,
    n_modes: int = 24,
    epsilon: float = 0.0,
) -> TorusEmbedding:
    """Flat embedding ``Theta = I = w = 0`` with ``omega = alpha = Omega(kappa)``."""
    if kappa is not None:
        p = p.with_kappa(kappa)
    if sites.strict is False:
        raise ValueError("the solver requires distinct tangential moduli")
    xi = xi_for_amplitude(p, sites) if xi is None else np.asarray(xi, dtype=float)
    if xi.shape != (sites.nu,) or np.any(xi <= 0):
        raise ValueError("xi must hold one positive amplitude per tangential site")
    om = np.asarray(big_omega_j(p, np.array(sites.sites)), dtype=float)
    lay = TorusLayout(sites, n_phi, n_modes)
    return TorusEmbedding(
        physics=p,
        sites=sites,
        xi=xi,
        epsilon=float(epsilon),
        omega=om.copy(),
        alpha=om.copy(),
        n_phi=n_phi,
        n_modes=n_modes,
        theta_sin=np.zeros((sites.nu, lay.n_l0)),
        i_cos=np.zeros((sites.nu, lay.n_l0)),
        z_normal=np.zeros(lay.w_idx.size),
    )


# -- action-angle map -------------------------------------------------------------------


def action_angle_point(
    p: WavePhysics,
    sites: SiteSelection,
    xi: Sequence[float],
    theta: Sequence[float],
    actions: Sequence[float],
    w: WahlenState | None,
    n_modes: int,
) -> WahlenState:
    """``v(theta, I) + w`` as spatial fields: tangential cosines and sines plus the normal part."""
    xi = np.asarray(xi, dtype=float)
    act = np.asarray(actions, dtype=float)
    if np.any(np.abs(act) >= xi):
        raise ValueError("actions must satisfy |I_j| < xi_j")
    r = np.sqrt((act + xi) / math.pi)
    z = np.zeros(2 * n_modes + 1, dtype=complex)
    for j, ra, th in zip(sites.sites, r, np.asarray(theta, dtype=float)):
        if abs(j) > n_modes:
            raise ValueError("tangential site beyond the spatial cutoff")
        z[n_modes + j] = ra * np.exp(-1j * th) / math.sqrt(2.0)
    eta, zeta = from_complex(p, z, RealField.zeros(n_modes))
    if w is not None:
        if w.eta.n_modes != n_modes:
            raise ValueError("normal part must share the spatial cutoff")
        eta, zeta = eta + w.eta, zeta + w.zeta
    return WahlenState(eta, zeta)


def _m_box(p: WavePhysics, k: np.ndarray) -> np.ndarray:
    out = np.ones(k.shape)
    nz = k != 0
    out[nz] = mj_coeff(p, k[nz])
    return out


def _profile_fields(emb: TorusEmbedding, basis: Basis, include_normal: bool = True):
    lay = emb.layout
    p = emb.physics
    theta_off = basis.from_coeff_box(emb.theta_box().reshape((lay.nu,) + lay.box_shape), basis.m)
    act = basis.from_coeff_box(emb.action_box().reshape((lay.nu,) + lay.box_shape), basis.m)
    if np.any(act + emb.xi.reshape((-1,) + (1,) * lay.nu) <= 0):
        raise ValueError("actions leave the domain |I_j| < xi_j")
    r = np.sqrt((act + emb.xi.reshape((-1,) + (1,) * lay.nu)) / math.pi)
    angles = np.stack(basis.points) + theta_off
    m_tan = np.asarray(mj_coeff(p, np.array(emb.sites.sites)), dtype=float).reshape((-1,) + (1,) * lay.nu)
    eta = np.sum(m_tan * r * np.cos(angles), axis=0)
    zeta = -np.sum(r * np.sin(angles) / m_tan, axis=0)
    if include_normal and emb.z_normal.size:
        zb = emb.z_box()
        zr = np.conj(zb[::-1])
        mk = _m_box(p, lay.k)
        eb = mk * (zb + zr) / math.sqrt(2.0)
        cb = -1j * (zb - zr) / (mk * math.sqrt(2.0))
        eta = eta + basis.from_coeff_box(eb.reshape(lay.box_shape), basis.m)
        zeta = zeta + basis.from_coeff_box(cb.reshape(lay.box_shape), basis.m)
    return eta, zeta, angles, r


def action_angle_map(emb: TorusEmbedding, phi: Sequence[float], n_modes: int | None = None) -> WahlenState:
    """``A(i(phi))``: the unscaled spatial state of the embedding at the angle ``phi``."""
    lay = emb.layout
    nm = max(lay.n_modes, int(np.max(np.abs(lay.k)))) if n_modes is None else n_modes
    ph = np.asarray(phi, dtype=float)
    waves = np.exp(1j * (lay.ells @ ph))
    theta = ph + np.real(emb.theta_box() @ waves)
    act = np.real(emb.action_box() @ waves)
    z = np.zeros(2 * nm + 1, dtype=complex)
    zb = emb.z_box() * waves
    keep = np.abs(lay.k) <= nm
    np.add.at(z, lay.k[keep] + nm, zb[keep])
    w_eta, w_zeta = from_complex(emb.physics, z, RealField.zeros(nm))
    return action_angle_point(emb.physics, emb.sites, emb.xi, theta, act, WahlenState(w_eta, w_zeta), nm)


# -- residual ---------------------------------------------------------------------------


@dataclass
class ResidualParts:
    """Components of the embedding residual and symmetry defects."""

    f_theta_mean: np.ndarray
    f_theta: np.ndarray
    f_action: np.ndarray
    f_normal: np.ndarray
    reversibility_defect: float
    vector: np.ndarray = field(repr=False)


def _field_on_profile(emb: TorusEmbedding, basis: Basis, cfg: SolverConfig, eta: np.ndarray, zeta: np.ndarray):
    if emb.epsilon == 0.0:
        return linear_wahlen_grid(basis, emb.physics, eta, zeta)
    e = emb.epsilon
    de, dz = wahlen_field_grid(basis, emb.physics, e * eta, e * zeta, cfg.dno)
    return de / e, dz / e


def residual_parts(emb: TorusEmbedding, cfg: SolverConfig) -> ResidualParts:
    """Evaluate all components of the embedding residual on the dealiased profile grid."""
    lay = emb.layout
    p = emb.physics
    basis = profile_basis(lay.jvec, lay.eval_grid_size(cfg.taylor_order + 3))
    eta, zeta, angles, r = _profile_fields(emb, basis)
    de, dz = _field_on_profile(emb, basis, cfg, eta, zeta)
    mk_full = np.ones(basis.shape)
    nzk = basis.wavenumber != 0
    mk_full[nzk] = mj_coeff(p, basis.wavenumber[nzk])
    zdot = np.where(nzk, (basis.forward(de) / mk_full + 1j * mk_full * basis.forward(dz)) / math.sqrt(2.0), 0.0)

    # tangential components through z_j = r exp(-i theta)/sqrt(2)
    theta_dot = np.empty_like(angles)
    action_dot = np.empty_like(angles)
    for a, j in enumerate(lay.sites.sites):
        fa = basis.backward(np.where(basis.wavenumber == j, zdot, 0.0), real=False)
        q = math.sqrt(2.0) * fa * np.exp(1j * angles[a])
        theta_dot[a] = -q.imag / r[a]
        action_dot[a] = 2.0 * math.pi * r[a] * q.real
    shift = (emb.alpha - big_omega_j(p, np.array(lay.sites.sites))).reshape((-1,) + (1,) * lay.nu)
    om = emb.omega.reshape((-1,) + (1,) * lay.nu)
    theta_off = angles - np.stack(basis.points)
    r_act = math.pi * r**2 - emb.xi.reshape(om.shape)
    d_theta = np.stack([basis.omega_dphi(emb.omega, theta_off[a]) for a in range(lay.nu)])
    d_act = np.stack([basis.omega_dphi(emb.omega, r_act[a]) for a in range(lay.nu)])
    f_theta = om + d_theta - theta_dot - shift
    f_act = d_act - action_dot
    ft = basis.coeff_box(f_theta, lay.n_phi).reshape(lay.nu, -1)
    fa = basis.coeff_box(f_act, lay.n_phi).reshape(lay.nu, -1)
    zd = _box_from_coeffs(basis, zdot, lay.n_phi)
    zb = emb.z_box()
    lin = 1j * (lay.ells @ emb.omega) * zb - zd
    fw = lin[lay.w_idx]
    f_theta_mean = ft[:, lay.zero].real
    f_theta_cos = ft[:, lay.l0p].real
    f_act_sin = fa[:, lay.l0p].imag
    f_w = fw.imag
    # reversible input gives an anti-reversible residual: these parts vanish
    defect = max(
        float(np.max(np.abs(ft[:, lay.l0p].imag), initial=0.0)),
        float(np.max(np.abs(fa[:, lay.l0p].real), initial=0.0)),
        float(np.max(np.abs(fw.real), initial=0.0)),
        float(np.max(np.abs(ft[:, lay.zero].imag), initial=0.0)),
    )
    vec = np.concatenate([f_theta_mean, f_theta_cos.ravel(), f_act_sin.ravel(), f_w])
    return ResidualParts(f_theta_mean, f_theta_cos, f_act_sin, f_w, defect, vec)


def _box_from_coeffs(basis: Basis, coeffs: np.ndarray, n: int) -> np.ndarray:
    c = np.fft.fftshift(coeffs, axes=basis.axes)
    mid = basis.m // 2
    sl = (slice(mid - n, mid + n + 1),) * basis.ndim
    return c[sl].ravel()


def residual_F(emb: TorusEmbedding, cfg: SolverConfig) -> np.ndarray:
    """Reduced residual vector (cosine part of the angle equation, sine part of the action
    equation, imaginary part of the normal equation)."""
    return residual_parts(emb, cfg).vector


# -- reduced unknowns -------------------------------------------------------------------


def _pack(emb: TorusEmbedding, cfg: SolverConfig) -> np.ndarray:
    head = emb.omega if cfg.unknown == "omega" else emb.alpha
    return np.concatenate([head, emb.theta_sin.ravel(), emb.i_cos.ravel(), emb.z_normal])


def _unpack(emb: TorusEmbedding, cfg: SolverConfig, x: np.ndarray) -> TorusEmbedding:
    lay = emb.layout
    nu, n0 = lay.nu, lay.n_l0
    head = x[:nu]
    th = x[nu : nu + nu * n0]
    ic = x[nu + nu * n0 : nu + 2 * nu * n0]
    zn = x[nu + 2 * nu * n0 :]
    if cfg.unknown == "omega":
        return emb.copy(omega=head.copy(), theta_sin=th.copy(), i_cos=ic.copy(), z_normal=zn.copy())
    return emb.copy(alpha=head.copy(), theta_sin=th.copy(), i_cos=ic.copy(), z_normal=zn.copy())


def _as_vector(emb: TorusEmbedding, cfg: SolverConfig, x: np.ndarray) -> np.ndarray:
    return residual_F(_unpack(emb, cfg, x), cfg)


def fd_jacobian(emb: TorusEmbedding, cfg: SolverConfig, x: np.ndarray | None = None) -> np.ndarray:
    """Central finite-difference Jacobian of the reduced residual."""
    x = _pack(emb, cfg) if x is None else x
    n = x.size
    jac = np.empty((n, n))
    h = cfg.fd_step
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        jac[:, i] = (_as_vector(emb, cfg, x + e) - _as_vector(emb, cfg, x - e)) / (2.0 * h)
    return jac


# -- small divisors -------------------------------------------------------------------


def small_divisor_check(emb: TorusEmbedding, cfg: SolverConfig, ell_max: int | None = None, tau: float | None = None) -> dict:
    """Smallest divisors of the linearized torus equation in the Galerkin box.

    Raises :class:`SmallDivisorError` (naming the offending index) when any is
    below ``cfg.min_divisor``.
    """
    lay = emb.layout
    p = emb.physics
    om = emb.omega
    report: dict = {}
    if lay.n_l0:
        vals = np.abs(lay.ells[lay.l0p] @ om)
        k = int(np.argmin(vals))
        report["angle_divisor"] = float(vals[k])
        report["angle_divisor_ell"] = lay.ells[lay.l0p][k].tolist()
        if vals[k] < cfg.min_divisor:
            raise SmallDivisorError(f"omega.ell = {vals[k]:.3g} at ell = {lay.ells[lay.l0p][k].tolist()}")
    if lay.w_idx.size:
        kk = lay.k[lay.w_idx]
        mel = np.abs(lay.ells[lay.w_idx] @ om + big_omega_j(p, kk))
        k = int(np.argmin(mel))
        report["melnikov_divisor"] = float(mel[k])
        report["melnikov_divisor_index"] = [lay.ells[lay.w_idx][k].tolist(), int(kk[k])]
        if mel[k] < cfg.min_divisor:
            raise SmallDivisorError(
                f"omega.ell + Omega_j = {mel[k]:.3g} at ell = {lay.ells[lay.w_idx][k].tolist()}, j = {int(kk[k])}"
            )
    if lay.nu > 1:
        margin, ell = diophantine_margin(om, ell_max or lay.n_phi, tau if tau is not None else lay.nu)
        report["diophantine_margin"] = margin
        report["diophantine_ell"] = list(ell)
    return report


# -- Newton -------------------------------------------------------------------------------


@dataclass
class SolveReport:
    """Newton history and final diagnostics."""

    converged: bool
    iterations: int
    residual_history: list[float]
    step_norms: list[float]
    final_residual: float
    frequency_shift: float
    constraint_defect: float
    divisors: dict
    n_unknowns: int
    wall_time: float
    message: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def newton_solve(emb0: TorusEmbedding, cfg: SolverConfig, check_divisors: bool = True) -> tuple[TorusEmbedding, SolveReport]:
    """Damped Newton on the reduced unknowns with a dense finite-difference Jacobian.

    Steps are halved (down to ``1/64``) until the residual norm decreases.
    Raises :class:`ConvergenceError` when ``cfg.tol`` is not met after
    ``cfg.max_iter`` iterations.
    """
    start = time.perf_counter()
    if (emb0.n_phi, emb0.n_modes) != (cfg.n_phi, cfg.n_modes):
        emb0 = emb0.resized(cfg.n_phi, cfg.n_modes)
    divisors = small_divisor_check(emb0, cfg) if check_divisors else {}
    x = _pack(emb0, cfg)
    f = _as_vector(emb0, cfg, x)
    hist = [float(np.linalg.norm(f))]
    steps: list[float] = []
    converged = hist[-1] <= cfg.tol
    it = 0
    while not converged and it < cfg.max_iter:
        it += 1
        jac = fd_jacobian(emb0, cfg, x)
        cond = np.linalg.cond(jac)
        if not np.isfinite(cond) or cond > 1e14:
            raise SmallDivisorError(f"singular Jacobian (condition number {cond:.3g})")
        dx = np.linalg.solve(jac, -f)
        lam = cfg.damping
        while True:
            x_new = x + lam * dx
            f_new = _as_vector(emb0, cfg, x_new)
            if np.linalg.norm(f_new) < hist[-1] or lam < 1.0 / 64:
                break
            lam *= 0.5
        x, f = x_new, f_new
        steps.append(float(lam * np.linalg.norm(dx)))
        hist.append(float(np.linalg.norm(f)))
        converged = hist[-1] <= cfg.tol
    emb = _unpack(emb0, cfg, x)
    parts = residual_parts(emb, cfg)
    report = SolveReport(
        converged=converged,
        iterations=it,
        residual_history=hist,
        step_norms=steps,
        final_residual=hist[-1],
        frequency_shift=float(np.max(np.abs(emb.alpha - emb.omega))),
        constraint_defect=parts.reversibility_defect,
        divisors=divisors,
        n_unknowns=x.size,
        wall_time=time.perf_counter() - start,
        message="converged" if converged else "maximum number of iterations reached",
    )
    if not converged:
        raise ConvergenceError(f"residual {hist[-1]:.3g} above tol {cfg.tol:.3g} after {it} iterations")
    return emb, report


def continue_amplitude(
    emb: TorusEmbedding, epsilons: Sequence[float], cfg: SolverConfig
) -> list[tuple[TorusEmbedding, SolveReport]]:
    """Warm-started solves along an amplitude ladder."""
    out = []
    cur = emb
    for eps in epsilons:
        cur, rep = newton_solve(cur.copy(epsilon=float(eps)), cfg)
        out.append((cur, rep))
    return out


# -- validation ------------------------------------------------------------------------


@dataclass
class ValidationReport:
    """Comparison of the time-integrated initial state with the torus flow."""

    times: list[float]
    deviations: list[float]
    max_deviation: float
    amplitude: float
    correction_norm: float
    correction_ratio: float
    periods: float
    steps_per_period: int
    invariants: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _physical_state(emb: TorusEmbedding, phi: np.ndarray, n_modes: int) -> WahlenState:
    w = action_angle_map(emb, phi, n_modes)
    return WahlenState(w.eta * emb.epsilon, w.zeta * emb.epsilon)


def correction_norm(emb: TorusEmbedding, cfg: SolverConfig) -> float:
    """``||eps (A(i) - A(phi, 0, 0))||``, root mean square over the torus."""
    lay = emb.layout
    basis = profile_basis(lay.jvec, lay.eval_grid_size(cfg.taylor_order + 3))
    eta, zeta, _, _ = _profile_fields(emb, basis)
    flat = linear_seed(emb.physics, emb.sites, emb.xi, n_phi=emb.n_phi, n_modes=emb.n_modes)
    e0, z0, _, _ = _profile_fields(flat, basis)
    return float(emb.epsilon * np.sqrt(np.mean((eta - e0) ** 2 + (zeta - z0) ** 2)))


def validate_solution(
    emb: TorusEmbedding,
    cfg: SolverConfig,
    periods: float = 5.0,
    steps_per_period: int = 64,
    samples: int = 10,
    t_end: float | None = None,
    dt: float | None = None,
) -> ValidationReport:
    """Integrate ``eps A(i(0))`` and compare with ``eps A(i(omega t))`` at sample times.

    The period is that of the slowest tangential frequency; ``t_end`` and
    ``dt`` override ``periods`` and ``steps_per_period``.  The deviation is
    the grid maximum over ``eta`` and ``zeta``.
    """
    lay = emb.layout
    nm = max(lay.n_modes, int(np.max(np.abs(lay.k))))
    period = 2.0 * math.pi / float(np.min(np.abs(emb.omega)))
    if t_end is not None:
        periods = t_end / period
    if dt is not None:
        steps_per_period = max(1, int(round(period / dt)))
    n_steps = max(1, int(round(periods * steps_per_period)))
    dt = periods * period / n_steps
    every = max(1, n_steps // samples)
    s0 = wahlen_backward(emb.physics, _physical_state(emb, np.zeros(lay.nu), nm))
    traj, inv = integrate(emb.physics, s0, dt, n_steps * dt, cfg.dno, save_every=every)
    m = 2 * nm + 1
    devs = []
    for t, s in zip(traj.times, traj.states):
        ref = _physical_state(emb, emb.omega * t, nm)
        got = wahlen_forward(emb.physics, s)
        devs.append(
            float(max(np.max(np.abs(got.eta.grid(m) - ref.eta.grid(m))), np.max(np.abs(got.zeta.grid(m) - ref.zeta.grid(m)))))
        )
    cn = correction_norm(emb, cfg)
    xi_norm = float(np.linalg.norm(emb.xi))
    ratio = cn / (abs(emb.epsilon) * math.sqrt(xi_norm)) if emb.epsilon else 0.0
    return ValidationReport(
        times=[float(t) for t in traj.times],
        deviations=devs,
        max_deviation=max(devs),
        amplitude=float(emb.epsilon),
        correction_norm=cn,
        correction_ratio=ratio,
        periods=periods,
        steps_per_period=steps_per_period,
        invariants=inv.to_dict(),
    )


# -- independent steady-wave solver for one tangential site ------------------------------


@dataclass
class MovingFrameWave:
    speed: float
    eta: RealField
    psi: RealField
    residual: float


def moving_frame_wave(p: WavePhysics, j: int, z_amplitude: float, n_modes: int, cfg: DnoConfig, speed_guess: float | None = None) -> MovingFrameWave:
    """Steady wave ``u(x - c t)`` of the water-wave system solved directly in x-space.

    Unknowns are the cosine coefficients of ``eta``, the sine coefficients
    of ``psi`` and the speed ``c``, over the harmonics of ``j``; the
    Wahlen coordinate ``z_j`` is pinned to the real value ``z_amplitude``.
    """
    if j == 0:
        raise ValueError("the carrier wavenumber must be nonzero")
    aj = abs(j)
    harmonics = np.arange(1, n_modes // aj + 1) * aj
    n = harmonics.size
    basis = x_basis(padded_size(n_modes, cfg.taylor_order + 3))
    x = basis.points[0]
    cosm = np.cos(np.outer(harmonics, x))
    sinm = np.sin(np.outer(harmonics, x))
    m_j = float(mj_coeff(p, j))
    c0 = speed_guess if speed_guess is not None else float(big_omega_j(p, j)) / j

    def fields(v):
        a, b = v[:n], v[n : 2 * n]
        return a @ cosm, b @ sinm

    def z_of(eta, psi):
        zeta = psi - 0.5 * p.gamma * basis.dx_inv(eta)
        ej = np.mean(eta * np.exp(-1j * j * x))
        zj = np.mean(zeta * np.exp(-1j * j * x))
        return (ej / m_j + 1j * m_j * zj) / math.sqrt(2.0)

    def equations(v):
        eta, psi = fields(v)
        c = v[-1]
        de, dp = vector_field_grid(basis, p, eta, psi, cfg, guard=False)
        r1 = de + c * basis.dx(eta)
        r2 = dp + c * basis.dx(psi)
        out1 = 2.0 * (sinm @ r1) / x.size
        out2 = 2.0 * (cosm @ r2) / x.size
        return np.concatenate([out1, out2, [z_of(eta, psi).real - z_amplitude]])

    # linear guess from the single mode
    v0 = np.zeros(2 * n + 1)
    lin = np.zeros(2 * n_modes + 1, dtype=complex)
    lin[n_modes + j] = z_amplitude
    e_lin, z_lin = from_complex(p, lin, RealField.zeros(n_modes))
    s_lin = wahlen_backward(p, WahlenState(e_lin, z_lin))
    k0 = np.nonzero(harmonics == aj)[0][0]
    v0[k0] = 2.0 * s_lin.eta.coeff(aj).real
    v0[n + k0] = -2.0 * s_lin.psi.coeff(aj).imag
    v0[-1] = c0
    sol, info, ier, msg = fsolve(equations, v0, full_output=True, xtol=1e-14)
    res = float(np.max(np.abs(equations(sol))))
    if ier != 1 and res > 1e-12:
        raise ConvergenceError(f"moving-frame solver failed: {msg}")
    eta, psi = fields(sol)
    return MovingFrameWave(float(sol[-1]), RealField.from_grid(eta, n_modes), RealField.from_grid(psi, n_modes), res)
