"""Small divisors: Diophantine and Melnikov margins, transversality scans and resonant-set measures.

Frequency combinations are indexed by a family name and a triple:

* ``"0th"``  -- ``omega.ell``, ``ell != 0`` (no momentum restriction);
* ``"1st"``  -- ``omega.ell + mu_j`` with ``jvec.ell + j = 0``;
* ``"2nd-"`` -- ``omega.ell + mu_j - mu_j'`` with ``jvec.ell + j - j' = 0``;
* ``"2nd+"`` -- ``omega.ell + mu_j + mu_j'`` with ``jvec.ell + j + j' = 0``;

where ``j, j'`` range over normal sites (not tangential, not zero).  The
lattice weight is ``<ell> = max(1, |ell|_inf)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .dispersion import WavePhysics, g0_symbol, tilde_c

__all__ = [
    "SiteSelection",
    "NonresConfig",
    "FrequencyModel",
    "ResonantSetEstimate",
    "TransversalityResult",
    "FAMILIES",
    "tangential_frequencies",
    "bracket",
    "diophantine_margin",
    "momentum_triples",
    "melnikov_margin",
    "combination_derivatives",
    "transversality_scan",
    "measure_estimate",
    "default_restriction_constant",
    "resonant_example",
    "ResolutionError",
]

FAMILIES = ("0th", "1st", "2nd-", "2nd+")


class ResolutionError(ValueError):
    """The kappa grid cannot resolve the requested quantity."""


@dataclass(frozen=True)
class SiteSelection:
    """Tangential moduli ``n_1 < ... < n_nu`` with signs; ``S = {sigma_a n_a}`` and ``jvec``.

    ``strict=False`` admits repeated moduli (used to build the resonant
    counterexample with sites ``+-n``); the solver requires strict selections.
    """

    splus: tuple[int, ...]
    sigma: tuple[int, ...]
    strict: bool = True

    def __post_init__(self) -> None:
        sp = tuple(int(n) for n in self.splus)
        sg = tuple(int(s) for s in self.sigma)
        if not sp:
            raise ValueError("at least one tangential site is required")
        if len(sp) != len(sg):
            raise ValueError("splus and sigma must have equal length")
        if any(n < 1 for n in sp):
            raise ValueError("tangential moduli must be positive")
        if any(s not in (-1, 1) for s in sg):
            raise ValueError("signs must be +1 or -1")
        if self.strict and any(a >= b for a, b in zip(sp, sp[1:])):
            raise ValueError("tangential moduli must be strictly increasing")
        if len(set(zip(sp, sg))) != len(sp):
            raise ValueError("signed sites must be distinct")
        object.__setattr__(self, "splus", sp)
        object.__setattr__(self, "sigma", sg)

    @classmethod
    def from_signed(cls, sites: Sequence[int], strict: bool = True) -> "SiteSelection":
        s = [int(j) for j in sites]
        if any(j == 0 for j in s):
            raise ValueError("sites must be nonzero")
        return cls(tuple(abs(j) for j in s), tuple(1 if j > 0 else -1 for j in s), strict)

    @property
    def nu(self) -> int:
        return len(self.splus)

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(s * n for s, n in zip(self.sigma, self.splus))

    @property
    def jvec(self) -> np.ndarray:
        return np.array(self.sites, dtype=int)

    def is_normal(self, j: int) -> bool:
        return j != 0 and j not in self.sites

    def to_dict(self) -> dict:
        return {"splus": list(self.splus), "sigma": list(self.sigma)}


@dataclass(frozen=True)
class NonresConfig:
    """Small-divisor levels, lattice and spatial cutoffs, and the kappa scan grid."""

    upsilon: float = 1e-3
    tau: float = 2.0
    m0: int = 4
    ell_max: int = 6
    j_cutoff: int = 32
    kappa_range: tuple[float, float] = (0.5, 2.0)
    kappa_grid: int = 801
    restriction_constant: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.upsilon < 1.0:
            raise ValueError("upsilon must lie in (0, 1)")
        if self.m0 < 0 or self.ell_max < 1 or self.j_cutoff < 1:
            raise ValueError("m0, ell_max and j_cutoff must be positive")
        k1, k2 = self.kappa_range
        if not 0.0 < k1 < k2:
            raise ValueError("kappa_range must satisfy 0 < kappa_1 < kappa_2")
        if self.kappa_grid < 2:
            raise ValueError("kappa_grid must have at least two points")

    def check_tau(self, nu: int) -> None:
        if not self.tau > nu - 1:
            raise ValueError(f"tau = {self.tau} must exceed nu - 1 = {nu - 1}")

    @property
    def kappas(self) -> np.ndarray:
        return np.linspace(self.kappa_range[0], self.kappa_range[1], self.kappa_grid)


def bracket(ell) -> np.ndarray | float:
    """Lattice weight ``max(1, |ell|_inf)`` along the last axis."""
    e = np.asarray(ell)
    out = np.maximum(1, np.max(np.abs(e), axis=-1)) if e.ndim else max(1, abs(int(e)))
    return out.astype(float) if isinstance(out, np.ndarray) else float(out)


# -- frequencies as functions of kappa ------------------------------------------------


def _omega_table(p: WavePhysics, j: np.ndarray, kappa: np.ndarray, order: int = 0) -> np.ndarray:
    """``d^order/dkappa^order Omega_j`` on the outer product ``kappa x j`` (``j != 0``)."""
    jf = np.asarray(j, dtype=float)
    kap = np.asarray(kappa, dtype=float)[..., None]
    g0 = np.asarray(g0_symbol(p, jf))
    rest = p.g + 0.25 * p.gamma**2 * g0 / jf**2
    om = np.sqrt(g0 * (kap * jf**2 + rest))
    if order == 0:
        return om + 0.5 * p.gamma * g0 / jf
    lam = 0.5 / (kap + rest / jf**2)
    return tilde_c(order) * lam**order * om


@dataclass(frozen=True)
class FrequencyModel:
    """Normal frequencies ``mu_j = m32 Omega_j + m1 j + m12 |j|^{1/2} + r_j``."""

    m32: float = 1.0
    m1: float = 0.0
    m12: float = 0.0
    physics: WavePhysics = field(default_factory=WavePhysics)
    r: dict[int, float] | None = None

    def mu(self, j, kappa: float | None = None) -> np.ndarray:
        p = self.physics if kappa is None else self.physics.with_kappa(kappa)
        jj = np.asarray(j)
        base = _omega_table(p, np.atleast_1d(jj), np.array(p.kappa))[..., :]
        base = np.reshape(base, np.atleast_1d(jj).shape)
        out = self.m32 * base + self.m1 * np.atleast_1d(jj) + self.m12 * np.sqrt(np.abs(np.atleast_1d(jj)))
        if self.r:
            out = out + np.array([self.r.get(int(v), 0.0) for v in np.atleast_1d(jj)])
        return float(out[0]) if jj.ndim == 0 else out

    def mu_table(self, j: np.ndarray, kappas: np.ndarray, order: int = 0) -> np.ndarray:
        """``d^order/dkappa^order mu_j`` for constant coefficients, shape ``(len(kappas), len(j))``."""
        jf = np.asarray(j)
        tab = self.m32 * _omega_table(self.physics, jf, kappas, order)
        if order == 0:
            tab = tab + self.m1 * jf + self.m12 * np.sqrt(np.abs(jf))
            if self.r:
                tab = tab + np.array([self.r.get(int(v), 0.0) for v in jf])
        return tab

    def to_dict(self) -> dict:
        return {"m32": self.m32, "m1": self.m1, "m12": self.m12, "physics": self.physics.to_dict()}


def tangential_frequencies(p: WavePhysics, sites: SiteSelection, kappa=None) -> np.ndarray:
    """``(Omega_j(kappa))_{j in S}``; vectorized over ``kappa``."""
    kap = p.kappa if kappa is None else kappa
    return _omega_table(p, np.array(sites.sites), np.asarray(kap))


# -- margins ----------------------------------------------------------------------------


def _half_lattice(nu: int, ell_max: int) -> np.ndarray:
    """Nonzero ``ell`` in the box with first nonzero entry positive (one per +- pair)."""
    rng = np.arange(-ell_max, ell_max + 1)
    pts = np.array(list(itertools.product(rng, repeat=nu)), dtype=int)
    first = np.array([row[np.nonzero(row)[0][0]] if np.any(row) else 0 for row in pts])
    return pts[first > 0]


def diophantine_margin(omega: Sequence[float], ell_max: int, tau: float) -> tuple[float, tuple[int, ...]]:
    """``min |omega.ell| <ell>^tau`` over ``0 < |ell|_inf <= ell_max`` and the minimizing ``ell``."""
    om = np.asarray(omega, dtype=float)
    if not np.any(om):
        raise ValueError("omega must be nonzero")
    ells = _half_lattice(om.size, ell_max)
    vals = np.abs(ells @ om) * bracket(ells) ** tau
    k = int(np.argmin(vals))
    return float(vals[k]), tuple(int(v) for v in ells[k])


def default_restriction_constant(p: WavePhysics, sites: SiteSelection, kappa_range: tuple[float, float]) -> float:
    """Constant ``C`` of the a-priori restrictions ``|j|^{3/2} <= C <ell>`` and its variants.

    Near-resonance of ``omega.ell + mu_j`` needs ``sqrt(kappa)|j|^{3/2}`` to be at
    most about ``|omega|_1 <ell>``; ``C`` doubles that ratio over the kappa range
    and adds the vorticity shift.
    """
    k1, k2 = kappa_range
    om = np.abs(tangential_frequencies(p, sites, np.array([k1, k2]))).sum(axis=-1).max()
    return float(2.0 * (om + abs(p.gamma)) / math.sqrt(k1) + 2.0)


def momentum_triples(
    sites: SiteSelection, ell_max: int, j_cutoff: int, c_const: float | None = None
) -> dict[str, list[tuple]]:
    """Admissible index sets per family, within the lattice box and ``|j|, |j'| <= j_cutoff``.

    ``"0th"`` lists one ``ell`` per +- pair.  The momentum constraints are
    enforced exactly; ``c_const`` (when given) adds the a-priori
    restrictions ``|j|^{3/2} <= C<ell>``, ``||j|^{3/2} - |j'|^{3/2}| <= C<ell>``
    and ``|j|^{3/2} + |j'|^{3/2} <= C<ell>``.  Pairs with ``ell = 0`` and
    ``j = j'`` are excluded from ``"2nd-"``.
    """
    nu = sites.nu
    jv = sites.jvec
    rng = np.arange(-ell_max, ell_max + 1)
    box = [tuple(int(v) for v in e) for e in itertools.product(rng, repeat=nu)]
    out: dict[str, list[tuple]] = {f: [] for f in FAMILIES}
    out["0th"] = [tuple(int(v) for v in e) for e in _half_lattice(nu, ell_max)]
    normal = [j for j in range(-j_cutoff, j_cutoff + 1) if sites.is_normal(j)]
    normal_set = set(normal)

    def ok(weight: float, ell) -> bool:
        return c_const is None or weight <= c_const * bracket(np.array(ell))

    for ell in box:
        s = int(np.dot(jv, ell))
        j = -s
        if j in normal_set and ok(abs(j) ** 1.5, ell):
            out["1st"].append((ell, j))
        for j in normal:
            jm = j + s  # jvec.ell + j - j' = 0
            if jm in normal_set and not (s == 0 and not any(ell)) and ok(abs(abs(j) ** 1.5 - abs(jm) ** 1.5), ell):
                out["2nd-"].append((ell, j, jm))
            jp = -s - j  # jvec.ell + j + j' = 0
            if jp in normal_set and ok(abs(j) ** 1.5 + abs(jp) ** 1.5, ell):
                out["2nd+"].append((ell, j, jp))
    return out


def _weight(family: str, triple: tuple, cfg: NonresConfig) -> float:
    ell = np.asarray(triple[0] if family != "0th" else triple)
    decay = bracket(ell) ** (-cfg.tau)
    if family == "0th":
        return 8.0 * cfg.upsilon * decay
    if family == "1st":
        return 4.0 * cfg.upsilon * abs(triple[1]) ** 1.5 * decay
    j, jp = triple[1], triple[2]
    if family == "2nd-":
        return 4.0 * cfg.upsilon * max(1.0, abs(abs(j) ** 1.5 - abs(jp) ** 1.5)) * decay
    return 4.0 * cfg.upsilon * (abs(j) ** 1.5 + abs(jp) ** 1.5) * decay


def _signs(family: str) -> tuple[int, int]:
    return {"0th": (0, 0), "1st": (1, 0), "2nd-": (1, -1), "2nd+": (1, 1)}[family]


def _combination(family: str, triple: tuple, omega: np.ndarray, mu: Callable[[int], float]) -> float:
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if family == "0th":
        ell = np.asarray(triple)
        if not np.any(ell):
            raise ValueError("the zeroth family excludes ell = 0")
        return float(omega @ ell)
    s1, s2 = _signs(family)
    ell = np.asarray(triple[0])
    val = float(omega @ ell) + s1 * mu(triple[1])
    if s2:
        val += s2 * mu(triple[2])
    return val


def melnikov_margin(
    model: FrequencyModel, sites: SiteSelection, omega: Sequence[float], family: str, triple: tuple, cfg: NonresConfig
) -> float:
    """``|combination| / threshold``; values ``>= 1`` satisfy the Melnikov condition."""
    _check_admissible(sites, family, triple)
    om = np.asarray(omega, dtype=float)
    val = _combination(family, triple, om, lambda j: float(model.mu(j)))
    return abs(val) / _weight(family, triple, cfg)


def _check_admissible(sites: SiteSelection, family: str, triple: tuple) -> None:
    if family == "0th":
        return
    ell = np.asarray(triple[0])
    s = int(sites.jvec @ ell)
    js = triple[1:]
    if not all(sites.is_normal(int(j)) for j in js):
        raise ValueError("Melnikov indices must be normal sites")
    total = {"1st": s + js[0], "2nd-": s + js[0] - js[-1], "2nd+": s + js[0] + js[-1]}[family]
    if total != 0:
        raise ValueError(f"triple {triple} violates the momentum constraint of family {family}")
    if family == "2nd-" and not np.any(ell) and js[0] == js[1]:
        raise ValueError("(0, j, j) is excluded from the difference family")


# -- transversality -----------------------------------------------------------------------


@dataclass
class TransversalityResult:
    family: str
    bound: float
    argmin_kappa: float
    worst_triple: tuple
    n_triples: int
    m0: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["worst_triple"] = _jsonable(self.worst_triple)
        return d


def _jsonable(x):
    if isinstance(x, (tuple, list)):
        return [_jsonable(v) for v in x]
    return int(x) if isinstance(x, (np.integer, int)) else x


def _family_arrays(family: str, triples: list[tuple], nu: int):
    """Split triples into ``ell`` (n, nu), ``j`` (n,), ``j'`` (n,) arrays (zeros where unused)."""
    n = len(triples)
    ells = np.zeros((n, nu), dtype=int)
    j1 = np.zeros(n, dtype=int)
    j2 = np.zeros(n, dtype=int)
    for k, t in enumerate(triples):
        if family == "0th":
            ells[k] = t
        else:
            ells[k] = t[0]
            j1[k] = t[1]
            if len(t) > 2:
                j2[k] = t[2]
    return ells, j1, j2


def combination_derivatives(
    p: WavePhysics, sites: SiteSelection, family: str, triples: list[tuple], kappas: np.ndarray, order: int
) -> np.ndarray:
    """``d^order/dkappa^order`` of the unperturbed combinations, shape ``(n_triples, n_kappa)``."""
    ells, j1, j2 = _family_arrays(family, triples, sites.nu)
    tang = _omega_table(p, np.array(sites.sites), kappas, order)  # (K, nu)
    out = ells @ tang.T  # (n, K)
    s1, s2 = _signs(family)
    jmax = int(max(np.max(np.abs(j1), initial=0), np.max(np.abs(j2), initial=0), 1))
    jj = np.arange(-jmax, jmax + 1)
    safe = np.where(jj == 0, 1, jj)
    table = np.where(jj == 0, 0.0, _omega_table(p, safe, kappas, order))  # (K, 2J+1)
    if s1:
        out = out + s1 * table[:, j1 + jmax].T
    if s2:
        out = out + s2 * table[:, j2 + jmax].T
    return out


def transversality_scan(
    p: WavePhysics, sites: SiteSelection, cfg: NonresConfig, family: str, triples: Iterable[tuple] | None = None
) -> TransversalityResult:
    """Lower bound ``min_kappa max_{n <= m0} |d^n f / dkappa^n| / <ell>`` over the family.

    Derivatives use the closed forms; the vorticity shift is kappa-independent.
    Without ``triples`` the family is enumerated with the configured cutoffs
    and restriction constant.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if cfg.kappa_grid < cfg.m0 + 1:
        raise ResolutionError("kappa grid too coarse for the requested derivative order")
    if triples is None:
        c = cfg.restriction_constant
        if c is None:
            c = default_restriction_constant(p, sites, cfg.kappa_range)
        triples = momentum_triples(sites, cfg.ell_max, cfg.j_cutoff, c)[family]
    triples = list(triples)
    if not triples:
        return TransversalityResult(family, math.inf, math.nan, (), 0, cfg.m0)
    kappas = cfg.kappas
    ells, _, _ = _family_arrays(family, triples, sites.nu)
    weight = bracket(ells)[:, None]
    best = np.zeros((len(triples), kappas.size))
    for n in range(cfg.m0 + 1):
        best = np.maximum(best, np.abs(combination_derivatives(p, sites, family, triples, kappas, n)) / weight)
    k_min = np.argmin(best, axis=1)
    per_triple = best[np.arange(len(triples)), k_min]
    worst = int(np.argmin(per_triple))
    return TransversalityResult(
        family, float(per_triple[worst]), float(kappas[k_min[worst]]), triples[worst], len(triples), cfg.m0
    )


def resonant_example(moduli: Sequence[int] = (1, 2, 3), ell_n: Sequence[int] = (1, -2, 1)):
    """Sites ``(-n3, -n2, -n1, n1, n2, n3)`` and ``ell = (-l3, -l2, -l1, l1, l2, l3)``.

    In infinite depth ``Omega.ell = gamma (l1 + l2 + l3)`` and the momentum is
    ``2 (n1 l1 + n2 l2 + n3 l3)``; both vanish for the defaults.
    """
    n = [int(v) for v in moduli]
    lv = [int(v) for v in ell_n]
    if sum(lv) != 0 or sum(a * b for a, b in zip(n, lv)) != 0:
        raise ValueError("ell_n must satisfy sum(l) = 0 and sum(n l) = 0")
    sites = SiteSelection.from_signed([-n[2], -n[1], -n[0], n[0], n[1], n[2]], strict=False)
    ell = (-lv[2], -lv[1], -lv[0], lv[0], lv[1], lv[2])
    return sites, ell


# -- measure estimates ---------------------------------------------------------------------


@dataclass
class ResonantSetEstimate:
    """Measure of the excluded kappa set per family and in total."""

    measures: dict[str, float]
    total: float
    upsilon: float
    tau: float
    epsilon: float
    kappa_range: tuple[float, float]
    kappa_grid: int
    ell_max: int
    j_cutoff: int
    restriction_constant: float
    n_triples: dict[str, int]
    intervals: list[tuple[float, float, str]] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("intervals")
        d["kappa_range"] = list(self.kappa_range)
        return d


def _union(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    merged: list[list[float]] = []
    for a, b in sorted(intervals):
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]


def _measure(intervals: list[tuple[float, float]]) -> float:
    return float(sum(b - a for a, b in _union(intervals)))


def _sublevel_intervals(f: Callable[[float], float], grid: np.ndarray, vals: np.ndarray, w: float, slope: float) -> list[tuple[float, float]]:
    """Intervals of ``{|f| < w}`` from grid values refined by root finding.

    ``slope`` bounds ``|f'|`` so that cells whose endpoint values cannot dip
    below ``w`` are skipped; remaining cells are searched for interior minima.
    """
    h = grid[1] - grid[0]
    points = [grid[0], grid[-1]]
    for k in range(grid.size - 1):
        a, b = grid[k], grid[k + 1]
        fa, fb = vals[k], vals[k + 1]
        if min(abs(fa), abs(fb)) > w + 0.5 * slope * h and fa * fb > 0:
            continue
        for level in (w, -w):
            if (fa - level) * (fb - level) < 0:
                points.append(brentq(lambda t: f(t) - level, a, b, xtol=1e-15, rtol=1e-14))
        if fa * fb > 0 and min(abs(fa), abs(fb)) > w:
            # a dip towards zero inside the cell may cross the threshold twice
            res = minimize_scalar(lambda t: abs(f(t)), bounds=(a, b), method="bounded", options={"xatol": 1e-14})
            if abs(res.fun) < w:
                for level in (w, -w):
                    if (fa - level) * (res.fun * np.sign(fa) - level) < 0:
                        points.append(brentq(lambda t: f(t) - level, a, res.x, xtol=1e-15, rtol=1e-14))
                    if (fb - level) * (res.fun * np.sign(fb) - level) < 0:
                        points.append(brentq(lambda t: f(t) - level, res.x, b, xtol=1e-15, rtol=1e-14))
    pts = np.unique(points)
    out = []
    for a, b in zip(pts[:-1], pts[1:]):
        if abs(f(0.5 * (a + b))) < w:
            out.append((float(a), float(b)))
    return out


def measure_estimate(
    sites: SiteSelection,
    cfg: NonresConfig,
    physics: WavePhysics,
    model_fn: Callable[[float], FrequencyModel] | None = None,
    tangential_fn: Callable[[float], np.ndarray] | None = None,
    epsilon: float = 0.0,
    families: Sequence[str] = FAMILIES,
    skip_diagonal: bool = True,
) -> ResonantSetEstimate:
    """Measure of the union of the nearly-resonant kappa sets of every scanned family.

    ``model_fn(kappa)`` supplies the normal frequencies and ``tangential_fn``
    the tangential frequency vector (default: the unperturbed ``Omega(kappa)``).
    Excluded sets are located on the kappa grid and their endpoints refined by
    root finding, so nested thresholds give nested sets.  ``skip_diagonal``
    drops ``(ell, j, j)`` from ``"2nd-"``, which lie inside the zeroth family.
    """
    cfg.check_tau(sites.nu)
    kappas = cfg.kappas
    h = kappas[1] - kappas[0]
    if not np.isfinite(h) or h <= 0:
        raise ResolutionError("degenerate kappa grid")
    c = cfg.restriction_constant
    if c is None:
        c = default_restriction_constant(physics, sites, cfg.kappa_range)
    if model_fn is None:
        base = FrequencyModel(physics=physics)
        model_fn = lambda k: FrequencyModel(base.m32, base.m1, base.m12, physics.with_kappa(k), base.r)  # noqa: E731
    if tangential_fn is None:
        tangential_fn = lambda k: tangential_frequencies(physics, sites, k)  # noqa: E731

    all_triples = momentum_triples(sites, cfg.ell_max, cfg.j_cutoff, c)
    jmax = cfg.j_cutoff
    jj = np.arange(-jmax, jmax + 1)
    safe = np.where(jj == 0, 1, jj)
    models = [model_fn(float(k)) for k in kappas]
    mu_grid = np.array([np.where(jj == 0, 0.0, m.mu(safe)) for m in models])  # (K, 2J+1)
    tang_grid = np.array([np.asarray(tangential_fn(float(k)), dtype=float) for k in kappas])  # (K, nu)
    # |f'| bound from grid differences with a safety factor for the curvature
    measures: dict[str, float] = {}
    counts: dict[str, int] = {}
    all_intervals: list[tuple[float, float, str]] = []
    for family in families:
        triples = all_triples[family]
        if family == "2nd-" and skip_diagonal:
            triples = [t for t in triples if t[1] != t[2]]
        counts[family] = len(triples)
        if not triples:
            measures[family] = 0.0
            continue
        ells, j1, j2 = _family_arrays(family, triples, sites.nu)
        s1, s2 = _signs(family)
        vals = ells @ tang_grid.T
        if s1:
            vals = vals + s1 * mu_grid[:, j1 + jmax].T
        if s2:
            vals = vals + s2 * mu_grid[:, j2 + jmax].T
        weights = np.array([_weight(family, t, cfg) for t in triples])
        slopes = 2.0 * np.max(np.abs(np.diff(vals, axis=1)), axis=1) / h + 1.0
        near = np.min(np.abs(vals), axis=1) <= weights + 0.5 * slopes * h
        crossing = np.any(np.sign(vals[:, 1:]) != np.sign(vals[:, :-1]), axis=1)
        fam_intervals: list[tuple[float, float]] = []
        for k in np.nonzero(near | crossing)[0]:
            t = triples[k]

            def f(kap: float, t=t, s1=s1, s2=s2) -> float:
                om = np.asarray(tangential_fn(kap), dtype=float)
                m = model_fn(kap)
                ell = np.asarray(t if family == "0th" else t[0])
                v = float(om @ ell)
                if s1:
                    v += s1 * float(m.mu(int(t[1])))
                if s2:
                    v += s2 * float(m.mu(int(t[2])))
                return v

            fam_intervals.extend(_sublevel_intervals(f, kappas, vals[k], float(weights[k]), float(slopes[k])))
        measures[family] = _measure(fam_intervals)
        all_intervals.extend((a, b, family) for a, b in fam_intervals)
    total = _measure([(a, b) for a, b, _ in all_intervals])
    return ResonantSetEstimate(
        measures=measures,
        total=total,
        upsilon=cfg.upsilon,
        tau=cfg.tau,
        epsilon=epsilon,
        kappa_range=tuple(cfg.kappa_range),
        kappa_grid=cfg.kappa_grid,
        ell_max=cfg.ell_max,
        j_cutoff=cfg.j_cutoff,
        restriction_constant=c,
        n_triples=counts,
        intervals=sorted(all_intervals),
    )


def excluded_interval_union(est: ResonantSetEstimate) -> list[tuple[float, float]]:
    return _union([(a, b) for a, b, _ in est.intervals])
