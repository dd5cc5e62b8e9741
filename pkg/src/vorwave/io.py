"""Torus snapshots and coefficient CSV files.

A torus snapshot is a pair of files sharing a stem: ``<stem>.json`` holds the
physical parameters, sites, frequencies and the angle/action coefficients;
``<stem>.csv`` holds the normal coefficients as rows ``ell_1..ell_nu, j, re, im``.
Floats are written with ``repr`` so that a save/load cycle is bit-exact.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .dispersion import WavePhysics
from .fields import TorusField
from .nonres import SiteSelection
from .solver import TorusEmbedding, TorusLayout

SNAPSHOT_FORMAT = "vorwave-torus/1"


class SnapshotError(ValueError):
    """Malformed or inconsistent snapshot files."""


def physics_from_dict(d: dict) -> WavePhysics:
    depth = d.get("depth", "inf")
    depth = math.inf if depth in ("inf", None) else float(depth)
    return WavePhysics(float(d.get("g", 1.0)), float(d["kappa"]), float(d.get("gamma", 0.0)), depth)


def sites_from_dict(d: dict) -> SiteSelection:
    return SiteSelection(tuple(int(n) for n in d["splus"]), tuple(int(s) for s in d["sigma"]))


def _paths(path: str | Path) -> tuple[Path, Path]:
    p = Path(path)
    stem = p.with_suffix("") if p.suffix in (".json", ".csv") else p
    return stem.with_suffix(".json"), stem.with_suffix(".csv")


def _coeff_header(nu: int) -> list[str]:
    return [f"ell_{a + 1}" for a in range(nu)] + ["j", "re", "im"]


def save_snapshot(emb: TorusEmbedding, path: str | Path, extra: dict | None = None) -> tuple[Path, Path]:
    """Write ``emb`` to ``<stem>.json`` and ``<stem>.csv``; returns both paths."""
    jpath, cpath = _paths(path)
    jpath.parent.mkdir(parents=True, exist_ok=True)
    lay = emb.layout
    header = {"format": SNAPSHOT_FORMAT, **emb.to_dict(), "fields_csv": cpath.name}
    if extra:
        header["extra"] = extra
    jpath.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    with cpath.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_coeff_header(lay.nu))
        for value, idx in zip(emb.z_normal, lay.w_idx):
            w.writerow([*map(int, lay.ells[idx]), int(lay.k[idx]), repr(float(value)), "0.0"])
    return jpath, cpath


def load_snapshot(path: str | Path) -> TorusEmbedding:
    """Inverse of :func:`save_snapshot`; ``path`` may name either file or the stem."""
    jpath, _ = _paths(path)
    try:
        header = json.loads(jpath.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"cannot read snapshot header {jpath}: {exc}") from exc
    if header.get("format") != SNAPSHOT_FORMAT:
        raise SnapshotError(f"unsupported snapshot format {header.get('format')!r}")
    cpath = jpath.parent / header["fields_csv"]
    sites = sites_from_dict(header["sites"])
    lay = TorusLayout(sites, int(header["n_phi"]), int(header["n_modes"]))
    where = {tuple(lay.ells[i]): k for k, i in enumerate(lay.w_idx)}
    z = np.zeros(lay.w_idx.size)
    for ell, j, re, im in _read_rows(cpath, sites.nu):
        k = where.get(ell)
        if k is None:
            raise SnapshotError(f"lattice point {ell} is not a normal unknown of this truncation")
        if j != int(lay.k[lay.w_idx[k]]):
            raise SnapshotError(f"row {ell} has j={j}, expected {int(lay.k[lay.w_idx[k]])}")
        if im != 0.0:
            raise SnapshotError("normal coefficients of a reversible torus are real")
        z[k] = re
    return TorusEmbedding(
        physics=physics_from_dict(header["physics"]),
        sites=sites,
        xi=np.array(header["xi"], dtype=float),
        epsilon=float(header["epsilon"]),
        omega=np.array(header["omega"], dtype=float),
        alpha=np.array(header["alpha"], dtype=float),
        n_phi=int(header["n_phi"]),
        n_modes=int(header["n_modes"]),
        theta_sin=np.array(header["theta_sin"], dtype=float),
        i_cos=np.array(header["i_cos"], dtype=float),
        z_normal=z,
    )


def _read_rows(path: Path, nu: int):
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise SnapshotError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        head = next(reader, None)
        if head != _coeff_header(nu):
            raise SnapshotError(f"{path}: expected columns {_coeff_header(nu)}, got {head}")
        for row in reader:
            if not row:
                continue
            ell = tuple(int(v) for v in row[:nu])
            yield ell, int(row[nu]), float(row[nu + 1]), float(row[nu + 2])


def write_field_csv(u: TorusField, path: str | Path) -> Path:
    """All coefficients of ``u`` (zeros included, so the box is recoverable)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    c = u.coeffs
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_coeff_header(u.nu))
        for idx in np.ndindex(c.shape):
            ell = [i - u.n_phi for i in idx[:-1]]
            j = idx[-1] - u.n_modes
            w.writerow([*ell, j, repr(float(c[idx].real)), repr(float(c[idx].imag))])
    return path


def read_field_csv(path: str | Path, jvec: tuple[int, ...] | None = None) -> TorusField:
    """Inverse of :func:`write_field_csv`; the box size is read off the largest indices."""
    path = Path(path)
    with path.open(newline="") as fh:
        head = next(csv.reader(fh), None)
    if not head or head[-3:] != ["j", "re", "im"]:
        raise SnapshotError(f"{path}: not a coefficient CSV")
    nu = len(head) - 3
    rows = list(_read_rows(path, nu))
    n_phi = max((max(map(abs, ell), default=0) for ell, *_ in rows), default=0)
    n_modes = max((abs(j) for _, j, _, _ in rows), default=0)
    c = np.zeros((2 * n_phi + 1,) * nu + (2 * n_modes + 1,), dtype=complex)
    for ell, j, re, im in rows:
        c[tuple(a + n_phi for a in ell) + (j + n_modes,)] = complex(re, im)
    return TorusField(nu, n_phi, n_modes, c, jvec)
