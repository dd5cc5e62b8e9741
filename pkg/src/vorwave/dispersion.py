"""Linear dispersion of gravity-capillary waves over a constant-vorticity flow.

All functions accept an integer or an integer array ``j`` and are vectorized.
Symbols are even in ``j`` except the vorticity shift, which is odd.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "WavePhysics",
    "g0_symbol",
    "mj_coeff",
    "pj_coeff",
    "omega_j",
    "omega_tilde",
    "big_omega_j",
    "big_omega_kappa_derivative",
    "lambda_j",
    "tilde_c",
    "omega_kappa_derivative",
    "asymptotic_remainder",
    "dispersion_table",
]

# Beyond this value of h|j| the hyperbolic tangent is 1 in double precision.
TANH_SATURATION = 20.0


@dataclass(frozen=True)
class WavePhysics:
    """Physical parameters: gravity, surface tension, vorticity and depth.

    ``depth = math.inf`` selects the infinitely deep fluid.
    """

    g: float = 1.0
    kappa: float = 1.0
    gamma: float = 0.0
    depth: float = math.inf

    def __post_init__(self) -> None:
        if not (self.g >= 0.0 and math.isfinite(self.g)):
            raise ValueError(f"gravity must be finite and non-negative, got {self.g}")
        if not (self.kappa > 0.0 and math.isfinite(self.kappa)):
            raise ValueError(f"surface tension must be positive, got {self.kappa}")
        if not math.isfinite(self.gamma):
            raise ValueError(f"vorticity must be finite, got {self.gamma}")
        if not self.depth > 0.0:
            raise ValueError(f"depth must be positive, got {self.depth}")

    @property
    def infinite_depth(self) -> bool:
        return math.isinf(self.depth)

    def with_kappa(self, kappa: float) -> "WavePhysics":
        return WavePhysics(self.g, kappa, self.gamma, self.depth)

    def to_dict(self) -> dict:
        return {
            "g": self.g,
            "kappa": self.kappa,
            "gamma": self.gamma,
            "depth": "inf" if self.infinite_depth else self.depth,
        }


def _as_nonzero(j) -> np.ndarray:
    arr = np.asarray(j)
    if np.any(arr == 0):
        raise ValueError("the symbol is not defined at j = 0")
    return arr.astype(float)


def _g0(p: WavePhysics, jf: np.ndarray) -> np.ndarray:
    aj = np.abs(jf)
    if p.infinite_depth:
        return aj
    hj = p.depth * aj
    with np.errstate(over="ignore"):
        return np.where(hj > TANH_SATURATION, aj, aj * np.tanh(np.minimum(hj, TANH_SATURATION)))


def _scalar(x, like):
    return float(x) if np.ndim(like) == 0 else x


def g0_symbol(p: WavePhysics, j):
    """Symbol of the flat Dirichlet-Neumann operator, ``j tanh(hj)`` or ``|j|``."""
    jf = _as_nonzero(j)
    return _scalar(_g0(p, jf), j)


def _energy_weight(p: WavePhysics, jf: np.ndarray, g0: np.ndarray) -> np.ndarray:
    # kappa j^2 + g + (gamma^2/4) G_j / j^2
    return p.kappa * jf**2 + p.g + 0.25 * p.gamma**2 * g0 / jf**2


def mj_coeff(p: WavePhysics, j):
    """Normalizing coefficient ``M_j`` of the complex coordinates (even in j)."""
    jf = _as_nonzero(j)
    g0 = _g0(p, jf)
    return _scalar((g0 / _energy_weight(p, jf, g0)) ** 0.25, j)


def pj_coeff(p: WavePhysics, n, sign: int):
    """Coefficient ``P_{sign*n} = (gamma/2) M_n / n + sign / M_n`` for ``n >= 1``."""
    nf = np.asarray(n, dtype=float)
    if np.any(nf < 1):
        raise ValueError("pj_coeff requires n >= 1")
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    m = np.asarray(mj_coeff(p, nf))
    return _scalar(0.5 * p.gamma * m / nf + sign / m, n)


def omega_j(p: WavePhysics, j):
    """Even part of the linear frequency, ``sqrt(G_j E_j)``."""
    jf = _as_nonzero(j)
    g0 = _g0(p, jf)
    return _scalar(np.sqrt(g0 * _energy_weight(p, jf, g0)), j)


def omega_tilde(p: WavePhysics, j):
    """``omega_j`` extended by ``sqrt(kappa)`` at ``j = 0``."""
    jf = np.asarray(j, dtype=float)
    safe = np.where(jf == 0, 1.0, jf)
    out = np.where(jf == 0, math.sqrt(p.kappa), omega_j(p, safe))
    return _scalar(out, j)


def big_omega_j(p: WavePhysics, j):
    """Linear frequency ``Omega_j = omega_j + (gamma/2) G_j / j`` (not even in j)."""
    jf = _as_nonzero(j)
    g0 = _g0(p, jf)
    return _scalar(np.sqrt(g0 * _energy_weight(p, jf, g0)) + 0.5 * p.gamma * g0 / jf, j)


def lambda_j(p: WavePhysics, j, include_zero: bool = False):
    """Logarithmic kappa-derivative of ``omega_j``; equals ``1/(2 kappa)`` at ``j = 0``."""
    jf = np.asarray(j, dtype=float)
    if include_zero:
        safe = np.where(jf == 0, 1.0, jf)
    else:
        safe = _as_nonzero(j)
    g0 = _g0(p, safe)
    # G j^2 / (2 G E) with the common factor G cancelled
    lam = 0.5 / (p.kappa + (p.g + 0.25 * p.gamma**2 * g0 / safe**2) / safe**2)
    if include_zero:
        lam = np.where(jf == 0, 0.5 / p.kappa, lam)
    return _scalar(lam, j)


def tilde_c(n: int) -> float:
    """Product ``prod_{k=1..n} (3 - 2k)``; equal to 1 for ``n = 0``."""
    if n < 0:
        raise ValueError("order must be non-negative")
    return float(math.prod(3 - 2 * k for k in range(1, n + 1)))


def omega_kappa_derivative(p: WavePhysics, j, n: int):
    """Closed-form ``d^n/dkappa^n`` of ``omega_tilde_j``: ``tilde_c(n) lambda_j^n omega_tilde_j``."""
    if n < 0:
        raise ValueError("order must be non-negative")
    lam = np.asarray(lambda_j(p, j, include_zero=True))
    om = np.asarray(omega_tilde(p, j))
    return _scalar(tilde_c(n) * lam**n * om, j)


def big_omega_kappa_derivative(p: WavePhysics, j, n: int):
    """``d^n/dkappa^n Omega_j``; the vorticity shift does not depend on kappa."""
    if n == 0:
        return big_omega_j(p, j)
    _as_nonzero(j)
    return omega_kappa_derivative(p, j, n)


def asymptotic_remainder(p: WavePhysics, j):
    """``c_j = (omega_j - sqrt(kappa)|j|^{3/2}) sqrt(kappa)|j|^{1/2}``.

    Evaluated as a quotient of the difference of squares, which avoids the
    cancellation of the direct difference for large ``|j|``.
    """
    jf = _as_nonzero(j)
    aj = np.abs(jf)
    g0 = _g0(p, jf)
    om = np.sqrt(g0 * _energy_weight(p, jf, g0))
    sk = math.sqrt(p.kappa)
    diff_sq = p.kappa * aj**2 * (g0 - aj) + p.g * g0 + 0.25 * p.gamma**2 * g0**2 / aj**2
    return _scalar(diff_sq * sk * np.sqrt(aj) / (om + sk * aj**1.5), j)


def dispersion_table(p: WavePhysics, jmax: int) -> dict[str, np.ndarray]:
    """Columns of the dispersion table for ``0 < |j| <= jmax``, ordered by j."""
    if jmax < 1:
        raise ValueError("jmax must be at least 1")
    j = np.concatenate([np.arange(-jmax, 0), np.arange(1, jmax + 1)])
    return {
        "j": j,
        "G_j": g0_symbol(p, j),
        "M_j": mj_coeff(p, j),
        "omega_j": omega_j(p, j),
        "Omega_j": big_omega_j(p, j),
        "lambda_j": lambda_j(p, j),
        "c_j": asymptotic_remainder(p, j),
    }
