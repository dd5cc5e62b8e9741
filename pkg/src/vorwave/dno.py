"""Dirichlet-Neumann operator: flat multiplier, Taylor expansion in the surface and trace fields.

The Taylor terms come from expanding the harmonic extension in powers of
the surface elevation and evaluating vertical derivatives at the flat
boundary, where ``d^m/dy^m`` has symbol ``j^m`` for even ``m`` and
``j^m tanh(hj)`` for odd ``m`` (``|j|^m`` in infinite depth).  This gives the
same operators as the Craig-Sulem recursion ``G_0 = D tanh(hD)``,
``G_1 = D eta D - G_0 eta G_0``, ... at quadratic instead of exponential
cost; the recursion is kept as :func:`dno_terms_recursive` for cross-checks.

The grid-level functions take a :class:`~vorwave.spectral.Basis` and act on
grid values, so the same code serves spatial grids and traveling profiles.
No truncation is applied between recursion steps; callers choose a grid
large enough to hold the polynomial products without aliasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispersion import WavePhysics
from .fields import RealField
from .spectral import Basis, odd_size, x_basis

__all__ = [
    "DnoConfig",
    "NormGuardError",
    "dno_grid",
    "dno_terms_grid",
    "dno_terms_recursive",
    "bv_grid",
    "g0_apply",
    "g_eta_apply",
    "bv_fields",
    "shape_derivative_check",
    "padded_size",
]

MAX_TAYLOR_ORDER = 6


class NormGuardError(ValueError):
    """The surface slope exceeds the configured radius of the Taylor expansion."""


@dataclass(frozen=True)
class DnoConfig:
    """Expansion order, spatial cutoff and slope guard of the truncated operator."""

    taylor_order: int = 4
    n_modes: int = 32
    max_slope: float = 0.3
    max_order: int = MAX_TAYLOR_ORDER

    def __post_init__(self) -> None:
        if self.taylor_order < 0:
            raise ValueError("taylor_order must be non-negative")
        if self.taylor_order > self.max_order:
            raise ValueError(f"taylor_order {self.taylor_order} exceeds the maximum {self.max_order}")
        if self.n_modes < 1:
            raise ValueError("n_modes must be positive")
        if not self.max_slope > 0:
            raise ValueError("max_slope must be positive")


def padded_size(n_modes: int, degree: int) -> int:
    """Odd grid size on which products of ``degree`` factors of band ``n_modes`` are exact."""
    return odd_size(2 * degree * n_modes + 1)


def _check_slope(basis: Basis, eta: np.ndarray, cfg: DnoConfig) -> None:
    slope = float(np.max(np.abs(basis.dx(eta)), initial=0.0))
    if slope > cfg.max_slope:
        raise NormGuardError(f"max |eta_x| = {slope:.3g} exceeds the guard {cfg.max_slope}")


def _vertical_symbols(basis: Basis, p: WavePhysics, top: int) -> np.ndarray:
    """Symbols of ``d^m/dy^m`` at ``y = 0`` of the harmonic extension, ``m = 0..top``."""
    k = basis.wavenumber.astype(float)
    t = basis.depth_symbol(p)
    return np.stack([k**m * (t if m % 2 else 1.0) for m in range(top + 1)])


def dno_terms_grid(basis: Basis, p: WavePhysics, eta: np.ndarray, psi: np.ndarray, order: int) -> list[np.ndarray]:
    """Taylor terms ``[G_0 psi, ..., G_order psi]`` on grid values.

    The harmonic extension is expanded as ``sum_n Phi_n`` with ``Phi_n`` of
    degree ``n`` in ``eta``; the flat traces ``phi_n`` follow from
    ``sum_m eta^m/m! d_y^m Phi_{n-m} = 0`` for ``n >= 1``, and
    ``G(eta) psi = (Phi_y - eta_x Phi_x)`` at the surface is collected by degree.
    """
    vert = _vertical_symbols(basis, p, order + 1)
    kx = 1j * basis.wavenumber
    pw = [np.ones_like(eta)]
    for m in range(1, order + 1):
        pw.append(pw[-1] * eta / m)  # eta^m / m!
    ex = basis.dx(eta)
    hats: list[np.ndarray] = []  # Fourier coefficients of the traces phi_n

    def dy(n: int, m: int) -> np.ndarray:
        return basis.backward(vert[m] * hats[n])

    for n in range(order + 1):
        if n == 0:
            hats.append(basis.forward(psi))
        else:
            trace = -sum(pw[m] * dy(n - m, m) for m in range(1, n + 1))
            hats.append(basis.forward(trace))
    terms = []
    for n in range(order + 1):
        out = sum(pw[m] * dy(n - m, m + 1) for m in range(n + 1))
        if n >= 1:
            out = out - ex * sum(pw[m] * basis.backward(kx * vert[m] * hats[n - 1 - m]) for m in range(n))
        terms.append(out)
    return terms


def dno_terms_recursive(basis: Basis, p: WavePhysics, eta: np.ndarray, psi: np.ndarray, order: int) -> list[np.ndarray]:
    """Reference Craig-Sulem operator recursion for the same Taylor terms (exponential cost)."""
    dsym = basis.wavenumber.astype(float)
    tsym = basis.depth_symbol(p)
    pw = [np.ones_like(eta)]
    for k in range(1, order + 1):
        pw.append(pw[-1] * eta / k)

    def d_pow(n: int, with_t: bool, f: np.ndarray) -> np.ndarray:
        return basis.apply(dsym**n * (tsym if with_t else 1.0), f, real=False)

    # D and T are odd symbols, so intermediate values are complex
    def apply_g(n: int, f: np.ndarray) -> np.ndarray:
        out = basis.apply(dsym, pw[n] * d_pow(n, n % 2 == 0, f), real=False)
        for k in range(n):
            out = out - apply_g(k, pw[n - k] * d_pow(n - k, (n - k) % 2 == 1, f))
        return out

    return [apply_g(n, psi).real for n in range(order + 1)]


def dno_grid(basis: Basis, p: WavePhysics, eta: np.ndarray, psi: np.ndarray, cfg: DnoConfig, guard: bool = True) -> np.ndarray:
    """Truncated ``G(eta) psi`` on grid values."""
    if guard:
        _check_slope(basis, eta, cfg)
    return sum(dno_terms_grid(basis, p, eta, psi, cfg.taylor_order))


def bv_grid(basis: Basis, p: WavePhysics, eta: np.ndarray, psi: np.ndarray, cfg: DnoConfig, g_psi: np.ndarray | None = None):
    """Trace fields ``(B, V, V - gamma eta)`` on grid values."""
    if g_psi is None:
        g_psi = dno_grid(basis, p, eta, psi, cfg)
    ex = basis.dx(eta)
    px = basis.dx(psi)
    b = (g_psi + ex * px) / (1.0 + ex**2)
    v = px - b * ex
    return b, v, v - p.gamma * eta


# -- RealField interface ------------------------------------------------------


def _grid_for(cfg: DnoConfig, *fields: RealField) -> Basis:
    n = max([cfg.n_modes] + [f.n_modes for f in fields])
    return x_basis(padded_size(n, cfg.taylor_order + 3))


def _to_grid(basis: Basis, f: RealField) -> np.ndarray:
    return f.grid(basis.m)


def _from_grid(values: np.ndarray, n_modes: int) -> RealField:
    return RealField.from_grid(values, n_modes)


def g0_apply(p: WavePhysics, psi: RealField) -> RealField:
    """Flat operator ``G(0) = D tanh(hD)`` (``|D|`` in infinite depth)."""
    j = psi.modes.astype(float)
    if p.infinite_depth:
        sym = np.abs(j)
    else:
        sym = j * np.tanh(np.clip(p.depth * j, -40.0, 40.0))
    return psi.with_coeffs(sym * psi.coeffs)


def g_eta_apply(p: WavePhysics, eta: RealField, psi: RealField, cfg: DnoConfig) -> RealField:
    """Truncated Taylor expansion of ``G(eta) psi`` up to ``cfg.taylor_order``."""
    basis = _grid_for(cfg, eta, psi)
    out = dno_grid(basis, p, _to_grid(basis, eta), _to_grid(basis, psi), cfg)
    return _from_grid(out, cfg.n_modes)


def bv_fields(p: WavePhysics, eta: RealField, psi: RealField, cfg: DnoConfig) -> tuple[RealField, RealField, RealField]:
    """``B``, ``V`` and ``V - gamma eta`` truncated to ``cfg.n_modes``."""
    basis = _grid_for(cfg, eta, psi)
    b, v, vt = bv_grid(basis, p, _to_grid(basis, eta), _to_grid(basis, psi), cfg)
    return tuple(_from_grid(f, cfg.n_modes) for f in (b, v, vt))


def shape_derivative_check(
    p: WavePhysics, eta: RealField, etahat: RealField, psi: RealField, cfg: DnoConfig, step: float = 1e-5
) -> tuple[RealField, RealField, float]:
    """Compare a centered difference of ``G(eta) psi`` with ``-G(eta)(B etahat) - d/dx(V etahat)``."""
    basis = _grid_for(cfg, eta, etahat, psi)
    e, eh, ps = (_to_grid(basis, f) for f in (eta, etahat, psi))
    plus = dno_grid(basis, p, e + step * eh, ps, cfg)
    minus = dno_grid(basis, p, e - step * eh, ps, cfg)
    lhs = (plus - minus) / (2.0 * step)
    b, v, _ = bv_grid(basis, p, e, ps, cfg)
    rhs = -dno_grid(basis, p, e, b * eh, cfg) - basis.dx(v * eh)
    lhs_f, rhs_f = _from_grid(lhs, cfg.n_modes), _from_grid(rhs, cfg.n_modes)
    denom = rhs_f.norm()
    err = (lhs_f - rhs_f).norm() / denom if denom > 0 else (lhs_f - rhs_f).norm()
    return lhs_f, rhs_f, float(err)


def flat_symbol_composed(p: WavePhysics, j: np.ndarray) -> np.ndarray:
    """Symbol of ``d/dx H tanh(h|D|)`` as a product of three multipliers (test helper)."""
    j = np.asarray(j, dtype=float)
    tsym = np.ones_like(j) if math.isinf(p.depth) else np.tanh(np.minimum(p.depth * np.abs(j), 40.0))
    return np.real((1j * j) * (-1j * np.sign(j)) * tsym)
