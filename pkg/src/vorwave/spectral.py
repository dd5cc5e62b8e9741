"""Collocation grids shared by the field, Dirichlet-Neumann and solver code.

A :class:`Basis` is a periodic grid on ``T^d`` whose Fourier modes each carry
a spatial wavenumber.  Two concrete grids are used:

* :func:`x_basis` -- the ordinary grid on ``T_x``; the wavenumber of mode
  ``k`` is ``k``.
* :func:`profile_basis` -- the grid on ``T^nu`` carrying the profile ``U`` of a
  traveling field ``u(phi, x) = U(phi - jvec x)``.  Mode ``ell`` of ``U``
  is mode ``(ell, -jvec.ell)`` of ``u``, so x-multipliers act on profiles
  through the wavenumber ``-jvec.ell`` and pointwise products of profiles
  are profiles of pointwise products.

Operators act on grid values with any number of leading batch axes; the
transforms run over the trailing ``ndim`` axes.  All grids have odd size so
no Nyquist mode breaks the parity of odd symbols.
"""

from __future__ import annotations

import math
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .dispersion import TANH_SATURATION, WavePhysics

__all__ = ["Basis", "x_basis", "profile_basis", "odd_size", "smooth_cutoff"]


def odd_size(n: int) -> int:
    """Smallest odd integer ``>= n``."""
    n = int(math.ceil(n))
    return n if n % 2 else n + 1


class Basis:
    """Periodic grid of odd size ``m`` per axis with attached x-wavenumbers."""

    def __init__(self, m: int, ndim: int, jvec: Sequence[int] | None = None):
        if m % 2 == 0 or m < 1:
            raise ValueError(f"grid size must be odd and positive, got {m}")
        self.m = int(m)
        self.ndim = int(ndim)
        self.jvec = None if jvec is None else np.asarray(jvec, dtype=int)
        if self.jvec is not None and self.jvec.shape != (self.ndim,):
            raise ValueError("jvec must have one entry per angle")

    # -- geometry ---------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return (self.m,) * self.ndim

    @property
    def size(self) -> int:
        return self.m**self.ndim

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.ndim, 0))

    @cached_property
    def points(self) -> list[np.ndarray]:
        """Grid coordinates per axis, broadcast to the full grid."""
        x = 2.0 * np.pi * np.arange(self.m) / self.m
        return list(np.meshgrid(*([x] * self.ndim), indexing="ij"))

    @cached_property
    def modes(self) -> list[np.ndarray]:
        """Integer mode numbers per axis in FFT order, broadcast to the grid."""
        k = np.fft.fftfreq(self.m, 1.0 / self.m).round().astype(int)
        return list(np.meshgrid(*([k] * self.ndim), indexing="ij"))

    @cached_property
    def wavenumber(self) -> np.ndarray:
        """Spatial wavenumber of every mode."""
        if self.jvec is None:
            return self.modes[0].copy()
        return -sum(int(ja) * la for ja, la in zip(self.jvec, self.modes))

    @cached_property
    def x_mean_mask(self) -> np.ndarray:
        return self.wavenumber == 0

    # -- transforms -------------------------------------------------------
    def forward(self, values: np.ndarray) -> np.ndarray:
        return np.fft.fftn(values, axes=self.axes) / self.size

    def backward(self, coeffs: np.ndarray, real: bool = True) -> np.ndarray:
        out = np.fft.ifftn(coeffs, axes=self.axes) * self.size
        return out.real if real else out

    def apply(self, symbol: np.ndarray, values: np.ndarray, real: bool = True) -> np.ndarray:
        """Apply the Fourier multiplier with mode-wise ``symbol`` to grid values."""
        return self.backward(symbol * self.forward(values), real=real)

    # -- symbols ----------------------------------------------------------
    def symbol(self, fn: Callable[[np.ndarray], np.ndarray], at_zero: complex = 0.0) -> np.ndarray:
        """Evaluate ``fn`` on non-zero wavenumbers and ``at_zero`` on the x-mean."""
        k = self.wavenumber.astype(float)
        safe = np.where(k == 0, 1.0, k)
        return np.where(k == 0, at_zero, fn(safe))

    @cached_property
    def dx_symbol(self) -> np.ndarray:
        return 1j * self.wavenumber

    @cached_property
    def dx_inv_symbol(self) -> np.ndarray:
        return self.symbol(lambda k: -1j / k)

    @cached_property
    def hilbert_symbol(self) -> np.ndarray:
        return -1j * np.sign(self.wavenumber)

    def g0_symbol(self, p: WavePhysics) -> np.ndarray:
        k = np.abs(self.wavenumber.astype(float))
        if p.infinite_depth:
            return k
        return np.where(p.depth * k > TANH_SATURATION, k, k * np.tanh(np.minimum(p.depth * k, TANH_SATURATION)))

    def depth_symbol(self, p: WavePhysics) -> np.ndarray:
        """``tanh(hD)`` (finite depth) or ``sign(D)`` (infinite depth)."""
        k = self.wavenumber.astype(float)
        if p.infinite_depth:
            return np.sign(k)
        return np.where(p.depth * np.abs(k) > TANH_SATURATION, np.sign(k), np.tanh(np.clip(p.depth * k, -TANH_SATURATION, TANH_SATURATION)))

    # -- common operators on grid values -----------------------------------
    def dx(self, v: np.ndarray) -> np.ndarray:
        return self.apply(self.dx_symbol, v)

    def dx_inv(self, v: np.ndarray) -> np.ndarray:
        return self.apply(self.dx_inv_symbol, v)

    def x_mean(self, v: np.ndarray) -> np.ndarray:
        """Projection on the x-average (a function of the angles for profiles)."""
        return self.apply(self.x_mean_mask.astype(float), v)

    def angle_derivative_symbol(self, omega: Sequence[float]) -> np.ndarray:
        """Symbol ``i omega.ell`` of ``omega . d/dphi`` on a profile grid."""
        om = np.asarray(omega, dtype=float)
        if om.shape != (self.ndim,):
            raise ValueError("omega must have one entry per angle")
        return 1j * sum(o * l for o, l in zip(om, self.modes))

    def omega_dphi(self, omega: Sequence[float], v: np.ndarray) -> np.ndarray:
        return self.apply(self.angle_derivative_symbol(omega), v)

    def angle_mean(self, v: np.ndarray) -> np.ndarray:
        return np.mean(v, axis=self.axes)

    def resample(self, values: np.ndarray, m: int) -> np.ndarray:
        """Trigonometric interpolation of grid values onto a grid of size ``m``."""
        return self.from_coeff_box(self.coeff_box(values, (min(m, self.m) - 1) // 2), m)

    # -- box <-> grid -------------------------------------------------------
    def coeff_box(self, values: np.ndarray, n: int) -> np.ndarray:
        """Centered coefficient array for modes ``|ell|_inf <= n``."""
        if 2 * n + 1 > self.m:
            raise ValueError("requested box exceeds the grid resolution")
        c = np.fft.fftshift(self.forward(values), axes=self.axes)
        mid = self.m // 2
        sl = (Ellipsis,) + (slice(mid - n, mid + n + 1),) * self.ndim
        return c[sl]

    def from_coeff_box(self, box: np.ndarray, m: int | None = None, real: bool = True) -> np.ndarray:
        """Grid values (on a grid of size ``m``) from a centered coefficient box."""
        m = self.m if m is None else m
        n = (box.shape[-1] - 1) // 2
        if 2 * n + 1 > m:
            raise ValueError("grid too coarse for the coefficient box")
        full = np.zeros(box.shape[: box.ndim - self.ndim] + (m,) * self.ndim, dtype=complex)
        mid = m // 2
        sl = (Ellipsis,) + (slice(mid - n, mid + n + 1),) * self.ndim
        full[sl] = box
        full = np.fft.ifftshift(full, axes=self.axes)
        out = np.fft.ifftn(full, axes=self.axes) * m**self.ndim
        return out.real if real else out

    def with_size(self, m: int) -> "Basis":
        return Basis(m, self.ndim, self.jvec)


def x_basis(m: int) -> Basis:
    """Grid on ``T_x`` with ``m`` (odd) points."""
    return Basis(odd_size(m), 1, None)


def profile_basis(jvec: Sequence[int], m: int) -> Basis:
    """Profile grid on ``T^nu`` for traveling fields with wave vector ``jvec``."""
    jv = np.asarray(jvec, dtype=int)
    return Basis(odd_size(m), jv.size, jv)


def _bump(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_cutoff(xi) -> np.ndarray:
    """Even smooth cutoff: 0 for ``|xi| <= 1/3``, 1 for ``|xi| >= 2/3``, increasing between."""
    t = 3.0 * np.abs(np.asarray(xi, dtype=float)) - 1.0
    t = np.clip(t, 0.0, 1.0)
    a = _bump(t)
    b = _bump(1.0 - t)
    return a / (a + b)
