"""Truncated Fourier fields on ``T_x`` and ``T^nu x T_x`` and their multiplier calculus.

Coefficients are stored centered: index ``k`` of an axis of length ``2n + 1``
holds mode ``k - n``.  A :class:`RealField` has one spatial axis; a
:class:`TorusField` has ``nu`` angle axes followed by the spatial axis.
Spatial operators act on the last axis of either type.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dispersion import WavePhysics, mj_coeff
from .spectral import odd_size

__all__ = [
    "RealField",
    "TorusField",
    "TravelingProfile",
    "apply_multiplier",
    "dx",
    "dx_inverse",
    "hilbert",
    "mean_project",
    "translate",
    "field_product",
    "traveling_embed",
    "traveling_extract",
    "project_tangential",
    "project_normal",
    "is_traveling",
    "to_complex",
    "from_complex",
    "TravelingSupportError",
]

_SYM_TOL = 1e-12


class TravelingSupportError(ValueError):
    """Raised when a field carries energy off the traveling support."""


def _symmetrize(c: np.ndarray) -> np.ndarray:
    """Return the conjugate-symmetric part ``(c + conj(c[::-1]))/2`` over all axes."""
    flipped = np.conj(c[(slice(None, None, -1),) * c.ndim])
    return 0.5 * (c + flipped)


def _check_symmetry(c: np.ndarray) -> None:
    flipped = np.conj(c[(slice(None, None, -1),) * c.ndim])
    scale = max(1.0, float(np.max(np.abs(c), initial=0.0)))
    if np.max(np.abs(c - flipped), initial=0.0) > _SYM_TOL * scale * 10:
        raise ValueError("coefficients are not conjugate symmetric")


def _centered_to_grid(c: np.ndarray, m: int) -> np.ndarray:
    """Real grid values on ``m`` points per axis from centered coefficients."""
    full = np.zeros((m,) * c.ndim, dtype=complex)
    sl = tuple(slice(m // 2 - (s - 1) // 2, m // 2 + (s - 1) // 2 + 1) for s in c.shape)
    full[sl] = c
    full = np.fft.ifftshift(full)
    return (np.fft.ifftn(full) * full.size).real


def _grid_to_centered(values: np.ndarray, half: Sequence[int]) -> np.ndarray:
    """Centered coefficients with half-widths ``half`` from real grid values."""
    c = np.fft.fftshift(np.fft.fftn(values) / values.size)
    sl = tuple(slice(s // 2 - h, s // 2 + h + 1) for s, h in zip(values.shape, half))
    return c[sl]


@dataclass(frozen=True, eq=False)
class RealField:
    """Real function of ``x`` as Fourier coefficients ``u_j``, ``|j| <= n_modes``."""

    n_modes: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (2 * self.n_modes + 1,):
            raise ValueError(f"expected {2 * self.n_modes + 1} coefficients, got {c.shape}")
        _check_symmetry(c)
        c = _symmetrize(c)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, n_modes: int) -> "RealField":
        return cls(n_modes, np.zeros(2 * n_modes + 1, dtype=complex))

    @classmethod
    def from_grid(cls, values: np.ndarray, n_modes: int | None = None) -> "RealField":
        """Interpolate real grid values (odd length) and truncate to ``n_modes``."""
        v = np.asarray(values, dtype=float)
        if v.ndim != 1 or v.size % 2 == 0:
            raise ValueError("grid values must be a 1-D array of odd length")
        n = (v.size - 1) // 2 if n_modes is None else n_modes
        if n > (v.size - 1) // 2:
            raise ValueError("grid too coarse for the requested number of modes")
        return cls(n, _grid_to_centered(v, (n,)))

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], n_modes: int, oversample: int = 4) -> "RealField":
        m = odd_size(oversample * (2 * n_modes + 1))
        x = 2.0 * np.pi * np.arange(m) / m
        return cls.from_grid(fn(x), n_modes)

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.n_modes, self.n_modes + 1)

    def coeff(self, j: int) -> complex:
        return complex(self.coeffs[j + self.n_modes]) if abs(j) <= self.n_modes else 0j

    def grid(self, m: int | None = None) -> np.ndarray:
        """Values on the uniform grid with ``m`` (odd, default ``2 n_modes + 1``) points."""
        m = 2 * self.n_modes + 1 if m is None else m
        if m % 2 == 0 or m < 2 * self.n_modes + 1:
            raise ValueError("evaluation grid must be odd and resolve all modes")
        return _centered_to_grid(self.coeffs, m)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.real(np.exp(1j * np.multiply.outer(x, self.modes)) @ self.coeffs)

    def resized(self, n_modes: int) -> "RealField":
        out = np.zeros(2 * n_modes + 1, dtype=complex)
        k = min(n_modes, self.n_modes)
        out[n_modes - k : n_modes + k + 1] = self.coeffs[self.n_modes - k : self.n_modes + k + 1]
        return RealField(n_modes, out)

    def with_coeffs(self, coeffs: np.ndarray) -> "RealField":
        return RealField(self.n_modes, coeffs)

    def __add__(self, other: "RealField") -> "RealField":
        _same_shape(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "RealField") -> "RealField":
        _same_shape(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __neg__(self) -> "RealField":
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, s: float) -> "RealField":
        return self.with_coeffs(float(s) * self.coeffs)

    __rmul__ = __mul__

    def norm(self) -> float:
        """``L^2`` norm normalized so that ``||1|| = 1``."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))


@dataclass(frozen=True, eq=False)
class TorusField:
    """Real function of ``(phi, x)`` as coefficients ``u_{ell, j}``."""

    nu: int
    n_phi: int
    n_modes: int
    coeffs: np.ndarray = field(repr=False)
    jvec: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=complex)
        shape = (2 * self.n_phi + 1,) * self.nu + (2 * self.n_modes + 1,)
        if c.shape != shape:
            raise ValueError(f"expected coefficient shape {shape}, got {c.shape}")
        _check_symmetry(c)
        c = _symmetrize(c)
        if self.jvec is not None:
            jv = tuple(int(v) for v in self.jvec)
            if len(jv) != self.nu:
                raise ValueError("jvec must have one entry per angle")
            object.__setattr__(self, "jvec", jv)
            c = np.where(self._traveling_mask(jv), c, 0.0)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def _traveling_mask(self, jvec: Sequence[int]) -> np.ndarray:
        grids = np.meshgrid(*([np.arange(-self.n_phi, self.n_phi + 1)] * self.nu), np.arange(-self.n_modes, self.n_modes + 1), indexing="ij")
        return grids[-1] + sum(int(ja) * la for ja, la in zip(jvec, grids[:-1])) == 0

    @classmethod
    def zeros(cls, nu: int, n_phi: int, n_modes: int) -> "TorusField":
        return cls(nu, n_phi, n_modes, np.zeros((2 * n_phi + 1,) * nu + (2 * n_modes + 1,), dtype=complex))

    @classmethod
    def from_grid(cls, values: np.ndarray, n_phi: int, n_modes: int) -> "TorusField":
        v = np.asarray(values, dtype=float)
        if any(s % 2 == 0 for s in v.shape):
            raise ValueError("grid sizes must be odd")
        nu = v.ndim - 1
        return cls(nu, n_phi, n_modes, _grid_to_centered(v, (n_phi,) * nu + (n_modes,)))

    @classmethod
    def from_function(cls, fn: Callable[..., np.ndarray], nu: int, n_phi: int, n_modes: int, oversample: int = 3) -> "TorusField":
        """Sample ``fn(phi_1, ..., phi_nu, x)`` on a grid and truncate."""
        mp = odd_size(oversample * (2 * n_phi + 1))
        mx = odd_size(oversample * (2 * n_modes + 1))
        axes = [2.0 * np.pi * np.arange(mp) / mp] * nu + [2.0 * np.pi * np.arange(mx) / mx]
        pts = np.meshgrid(*axes, indexing="ij")
        return cls.from_grid(fn(*pts), n_phi, n_modes)

    @property
    def traveling(self) -> bool:
        return self.jvec is not None

    def grid(self, m_phi: int | None = None, m_x: int | None = None) -> np.ndarray:
        mp = 2 * self.n_phi + 1 if m_phi is None else m_phi
        mx = 2 * self.n_modes + 1 if m_x is None else m_x
        full = np.zeros((mp,) * self.nu + (mx,), dtype=complex)
        sl = tuple(slice(mp // 2 - self.n_phi, mp // 2 + self.n_phi + 1) for _ in range(self.nu))
        sl += (slice(mx // 2 - self.n_modes, mx // 2 + self.n_modes + 1),)
        full[sl] = self.coeffs
        full = np.fft.ifftshift(full)
        return (np.fft.ifftn(full) * full.size).real

    def with_coeffs(self, coeffs: np.ndarray, jvec: tuple[int, ...] | None = None) -> "TorusField":
        return TorusField(self.nu, self.n_phi, self.n_modes, coeffs, jvec)

    def __add__(self, other: "TorusField") -> "TorusField":
        _same_shape(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs, self.jvec if self.jvec == other.jvec else None)

    def __sub__(self, other: "TorusField") -> "TorusField":
        _same_shape(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs, self.jvec if self.jvec == other.jvec else None)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))


@dataclass(frozen=True, eq=False)
class TravelingProfile:
    """Profile ``U`` of a traveling field ``u(phi, x) = U(phi - jvec x)``.

    ``coeffs`` holds ``U_ell`` for ``|ell|_inf <= n_phi`` on ``nu`` centered axes.
    """

    jvec: tuple[int, ...]
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        jv = tuple(int(v) for v in self.jvec)
        if not jv or all(v == 0 for v in jv):
            raise ValueError("jvec must be a nonzero integer vector")
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != len(jv) or len(set(c.shape)) != 1 or c.shape[0] % 2 == 0:
            raise ValueError("profile coefficients must be a centered cube with one axis per angle")
        _check_symmetry(c)
        c = _symmetrize(c)
        c.setflags(write=False)
        object.__setattr__(self, "jvec", jv)
        object.__setattr__(self, "coeffs", c)

    @property
    def nu(self) -> int:
        return len(self.jvec)

    @property
    def n_phi(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def wavenumbers(self) -> np.ndarray:
        """x-wavenumber ``-jvec.ell`` of every profile coefficient."""
        grids = np.meshgrid(*([np.arange(-self.n_phi, self.n_phi + 1)] * self.nu), indexing="ij")
        return -sum(ja * la for ja, la in zip(self.jvec, grids))

    @classmethod
    def from_function(cls, fn: Callable[..., np.ndarray], jvec: Sequence[int], n_phi: int, oversample: int = 3) -> "TravelingProfile":
        nu = len(jvec)
        mp = odd_size(oversample * (2 * n_phi + 1))
        pts = np.meshgrid(*([2.0 * np.pi * np.arange(mp) / mp] * nu), indexing="ij")
        return cls(tuple(jvec), _grid_to_centered(np.asarray(fn(*pts), dtype=float), (n_phi,) * nu))

    def __call__(self, *psi) -> np.ndarray:
        pts = np.broadcast_arrays(*[np.asarray(p, dtype=float) for p in psi])
        ells = np.meshgrid(*([np.arange(-self.n_phi, self.n_phi + 1)] * self.nu), indexing="ij")
        phase = sum(np.multiply.outer(p, l) for p, l in zip(pts, ells))
        axes = tuple(range(-self.nu, 0))
        return np.real(np.sum(np.exp(1j * phase) * self.coeffs, axis=axes))


def _same_shape(a, b) -> None:
    if type(a) is not type(b) or a.coeffs.shape != b.coeffs.shape:
        raise ValueError("fields must share type and cutoffs")


def _x_modes(f: RealField | TorusField) -> np.ndarray:
    return np.arange(-f.n_modes, f.n_modes + 1)


def apply_multiplier(sym: Callable[[np.ndarray], np.ndarray], f: RealField | TorusField):
    """Multiply the spatial Fourier coefficients of ``f`` by ``sym(j)``.

    ``sym`` is called once with the integer array of spatial modes; ``sym(0)``
    sets the action on the mean.  The result is re-symmetrized so ``sym``
    must satisfy ``sym(-j) = conj(sym(j))``.
    """
    s = np.asarray(sym(_x_modes(f)), dtype=complex)
    return f.with_coeffs(f.coeffs * s) if isinstance(f, RealField) else f.with_coeffs(f.coeffs * s, f.jvec)


def _sym_dx(j: np.ndarray) -> np.ndarray:
    return 1j * j


def _sym_dx_inv(j: np.ndarray) -> np.ndarray:
    safe = np.where(j == 0, 1, j)
    return np.where(j == 0, 0.0, -1j / safe)


def _sym_hilbert(j: np.ndarray) -> np.ndarray:
    return -1j * np.sign(j)


def dx(f):
    """Spatial derivative."""
    return apply_multiplier(_sym_dx, f)


def dx_inverse(f):
    """Zero-mean spatial primitive, inverse of ``dx`` on zero-mean fields."""
    return apply_multiplier(_sym_dx_inv, f)


def hilbert(f):
    """Hilbert transform, symbol ``-i sign(j)``; annihilates constants."""
    return apply_multiplier(_sym_hilbert, f)


def mean_project(f):
    """Projection on the spatial mean (mode ``j = 0``)."""
    return apply_multiplier(lambda j: (j == 0).astype(float), f)


def translate(f, shift: float):
    """Translation ``u(x) -> u(x + shift)``."""
    return apply_multiplier(lambda j: np.exp(1j * j * shift), f)


def field_product(f: RealField, g: RealField) -> RealField:
    """Dealiased pointwise product truncated to the common cutoff."""
    _same_shape(f, g)
    n = f.n_modes
    m = odd_size(3 * n + 1)  # 3/2 rule on the 2n + 1 point grid
    return RealField.from_grid(f.grid(m) * g.grid(m), n)


def is_traveling(u: TorusField, jvec: Sequence[int], tol: float = 1e-12) -> bool:
    mask = u._traveling_mask(jvec)
    off = np.abs(u.coeffs[~mask])
    return bool(off.size == 0 or np.max(off) <= tol * max(1.0, np.max(np.abs(u.coeffs))))


def traveling_embed(p: TravelingProfile, n_modes: int) -> TorusField:
    """Place ``U_ell`` at ``(ell, -jvec.ell)``; profile modes beyond ``n_modes`` are dropped."""
    nu, n_phi = p.nu, p.n_phi
    c = np.zeros((2 * n_phi + 1,) * nu + (2 * n_modes + 1,), dtype=complex)
    jw = p.wavenumbers
    keep = np.abs(jw) <= n_modes
    idx = np.nonzero(keep)
    c[idx + (jw[keep] + n_modes,)] = p.coeffs[keep]
    return TorusField(nu, n_phi, n_modes, c, p.jvec)


def traveling_extract(u: TorusField, jvec: Sequence[int], tol: float = 1e-10) -> TravelingProfile:
    """Inverse of :func:`traveling_embed`; fails if ``u`` is not traveling."""
    jv = tuple(int(v) for v in jvec)
    if len(jv) != u.nu:
        raise ValueError("jvec must have one entry per angle")
    mask = u._traveling_mask(jv)
    off = np.abs(u.coeffs[~mask])
    scale = max(1.0, float(np.max(np.abs(u.coeffs), initial=0.0)))
    worst = float(np.max(off, initial=0.0))
    if worst > tol * scale:
        raise TravelingSupportError(f"non-traveling coefficient of size {worst:.3e} exceeds tolerance {tol:.1e}")
    tmp = TravelingProfile(jv, np.zeros((2 * u.n_phi + 1,) * u.nu, dtype=complex))
    jw = tmp.wavenumbers
    keep = np.abs(jw) <= u.n_modes
    prof = np.zeros_like(tmp.coeffs)
    idx = np.nonzero(keep)
    prof[keep] = u.coeffs[idx + (jw[keep] + u.n_modes,)]
    return TravelingProfile(jv, prof)


def to_complex(p: WavePhysics, eta, zeta) -> np.ndarray:
    """Spatial coefficients of ``z = (M^{-1} eta + i M zeta)/sqrt(2)``; the mean mode is zero."""
    j = _x_modes(eta)
    nz = j != 0
    m = np.ones(j.shape)
    m[nz] = mj_coeff(p, j[nz])
    z = (eta.coeffs / m + 1j * m * zeta.coeffs) / np.sqrt(2.0)
    return np.where(nz, z, 0.0)


def from_complex(p: WavePhysics, z: np.ndarray, template):
    """Inverse of :func:`to_complex` for zero-mean ``eta`` and ``zeta``; ``template`` fixes the type."""
    j = _x_modes(template)
    nz = j != 0
    m = np.ones(j.shape)
    m[nz] = mj_coeff(p, j[nz])
    zr = np.conj(z[(slice(None, None, -1),) * z.ndim])  # conj(z_{-ell,-j})
    eta = np.where(nz, m * (z + zr) / np.sqrt(2.0), 0.0)
    zeta = np.where(nz, -1j * (z - zr) / (m * np.sqrt(2.0)), 0.0)
    jv = getattr(template, "jvec", None)
    if isinstance(template, RealField):
        return template.with_coeffs(eta), template.with_coeffs(zeta)
    return template.with_coeffs(eta, jv), template.with_coeffs(zeta, jv)


def _site_mask(f, sites: Sequence[int]) -> np.ndarray:
    return np.isin(_x_modes(f), np.asarray(list(sites), dtype=int))


def project_tangential(p: WavePhysics, eta, zeta, sites: Sequence[int]):
    """``L^2`` projection of ``(eta, zeta)`` on the complex modes ``z_j``, ``j`` in ``S``."""
    z = to_complex(p, eta, zeta)
    return from_complex(p, np.where(_site_mask(eta, sites), z, 0.0), eta)


def project_normal(p: WavePhysics, eta, zeta, sites: Sequence[int]):
    """Projection on the complex modes ``z_j`` with ``j`` outside ``S`` and ``j != 0``."""
    z = to_complex(p, eta, zeta)
    keep = ~_site_mask(eta, sites) & (_x_modes(eta) != 0)
    return from_complex(p, np.where(keep, z, 0.0), eta)
