"""Batch command-line front end.

Every command reads an optional JSON config (unknown keys rejected), applies
flag overrides, writes its artifacts into a run directory together with
``manifest.json`` and exits with 0 (success), 1 (configuration error) or 2
(numerical failure, reason in ``failure.json`` and on stderr).
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from importlib import metadata
from pathlib import Path
from typing import Callable, Literal

import click
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import __version__
from .dispersion import WavePhysics, big_omega_j, dispersion_table
from .dno import DnoConfig, NormGuardError
from .dynamics import IntegrationError, hamiltonian, integrate, mode_frequency, momentum, unit_mode_state
from .io import SnapshotError, load_snapshot, save_snapshot
from .nonres import (
    FAMILIES,
    FrequencyModel,
    NonresConfig,
    ResolutionError,
    ResonantSetEstimate,
    SiteSelection,
    excluded_interval_union,
    measure_estimate,
    transversality_scan,
)
from .normalform import DiffeomorphismError, NormalFormConfig, SmallDivisorOverflow, frequency_model, reduce_torus
from .solver import (
    ConvergenceError,
    SmallDivisorError,
    SolverConfig,
    continue_amplitude,
    correction_norm,
    linear_seed,
    small_divisor_check,
    validate_solution,
    xi_for_amplitude,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2

NUMERICAL_ERRORS = (
    ConvergenceError,
    SmallDivisorError,
    SmallDivisorOverflow,
    DiffeomorphismError,
    IntegrationError,
    ResolutionError,
    NormGuardError,
    np.linalg.LinAlgError,
    FloatingPointError,
)
CONFIG_ERRORS = (ValidationError, SnapshotError, json.JSONDecodeError, OSError, ValueError, TypeError, KeyError)


# -- configuration schema ---------------------------------------------------------------


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PhysicsBlock(_Block):
    g: float = Field(1.0, gt=0)
    kappa: float = Field(1.0, gt=0)
    gamma: float = 0.0
    depth: float | Literal["inf"] = "inf"

    def build(self) -> WavePhysics:
        return WavePhysics(self.g, self.kappa, self.gamma, math.inf if self.depth == "inf" else float(self.depth))


class SitesBlock(_Block):
    splus: list[int] = Field(default_factory=lambda: [1, 2], min_length=1)
    sigma: list[int] | None = None

    def build(self) -> SiteSelection:
        sigma = self.sigma if self.sigma is not None else [1] * len(self.splus)
        return SiteSelection(tuple(self.splus), tuple(sigma))


class NonresBlock(_Block):
    upsilon: float = 1e-3
    tau: float = 2.0
    m0: int = 4
    ell_max: int = 6
    j_cutoff: int = 32
    kappa_range: tuple[float, float] = (0.5, 2.0)
    kappa_grid: int = 801
    restriction_constant: float | None = None

    def build(self) -> NonresConfig:
        return NonresConfig(**self.model_dump())


class SolverBlock(_Block):
    n_phi: int = 6
    n_modes: int = 24
    taylor_order: int = 4
    tol: float = 1e-11
    max_iter: int = 12
    damping: float = 1.0
    fd_step: float = 1e-6
    unknown: Literal["omega", "alpha"] = "omega"
    min_divisor: float = 1e-6
    max_slope: float = 0.3

    def build(self) -> SolverConfig:
        return SolverConfig(**self.model_dump())


class NormalFormBlock(_Block):
    upsilon: float = 1e-6
    tau: float | None = None
    taylor_order: int = 4
    grid_size: int | None = None
    jmax: int = 32

    def build(self) -> NormalFormConfig:
        return NormalFormConfig(upsilon=self.upsilon, tau=self.tau, taylor_order=self.taylor_order)


class DispersionBlock(_Block):
    jmax: int = Field(16, ge=1)


class LinwaveBlock(_Block):
    amplitude: float = Field(1e-2, ge=0)
    xi: list[float] | None = None


class SolveBlock(_Block):
    amplitudes: list[float] = Field(default_factory=lambda: [1e-3], min_length=1)
    xi: list[float] | None = None


class ModelBlock(_Block):
    m32: float = 1.0
    m1: float = 0.0
    m12: float = 0.0


class MeasureBlock(_Block):
    epsilon: float = 0.0
    families: list[Literal["0th", "1st", "2nd-", "2nd+"]] = Field(default_factory=lambda: list(FAMILIES))
    model: ModelBlock | None = None


class ValidateBlock(_Block):
    amplitude: float = Field(1e-3, gt=0)
    t_end: float | None = Field(None, gt=0)
    dt: float | None = Field(None, gt=0)
    modes: int = Field(32, ge=1)
    mode: int = 1
    periods: float = Field(5.0, gt=0)
    steps_per_period: int = Field(64, ge=1)
    samples: int = Field(10, ge=1)
    tolerance: float = Field(1e-5, gt=0)


class ExperimentConfig(_Block):
    """Top-level JSON config; every block is optional and defaults as shown in docs/formats.md."""

    physics: PhysicsBlock = Field(default_factory=PhysicsBlock)
    sites: SitesBlock = Field(default_factory=SitesBlock)
    nonres: NonresBlock = Field(default_factory=NonresBlock)
    solver: SolverBlock = Field(default_factory=SolverBlock)
    normalform: NormalFormBlock = Field(default_factory=NormalFormBlock)
    dispersion: DispersionBlock = Field(default_factory=DispersionBlock)
    linwave: LinwaveBlock = Field(default_factory=LinwaveBlock)
    solve: SolveBlock = Field(default_factory=SolveBlock)
    measure: MeasureBlock = Field(default_factory=MeasureBlock)
    validate_: ValidateBlock = Field(default_factory=ValidateBlock, alias="validate")

    model_config = ConfigDict(extra="forbid", populate_by_name=True)


def load_config(path: str | Path | None, overrides: dict[str, object] | None = None) -> ExperimentConfig:
    """Parse ``path`` (or defaults) and apply dotted-key overrides such as ``{"physics.kappa": 1.5}``."""
    raw: dict = {} if path is None else json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValueError("config root must be a JSON object")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        node = raw
        *parents, leaf = key.split(".")
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = value
    return ExperimentConfig.model_validate(raw)


# -- output helpers ---------------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as strings, wall times dropped."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items() if k != "wall_time"}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class RunDir:
    """Collects artifacts and timings of one command invocation."""

    def __init__(self, root: Path):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)
        self.outputs: list[Path] = []
        self.timings: dict[str, float] = {}

    def path(self, name: str) -> Path:
        p = self.root / name
        self.outputs.append(p)
        return p

    def write_json(self, name: str, obj) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")
        return p

    def write_csv(self, name: str, header: list[str], rows) -> Path:
        p = self.path(name)
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
        return p

    def timed(self, label: str, fn: Callable, *args, **kwargs):
        start = time.perf_counter()
        try:
            return fn(*args, **kwargs)
        finally:
            self.timings[label] = self.timings.get(label, 0.0) + time.perf_counter() - start


def _versions() -> dict[str, str]:
    out = {"vorwave": __version__, "python": platform.python_version()}
    for dist in ("numpy", "scipy", "pydantic", "click"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            out[dist] = "unknown"
    return out


# -- commands ---------------------------------------------------------------------------


def _cmd_dispersion(cfg: ExperimentConfig, run: RunDir, opts: dict) -> dict:
    p = cfg.physics.build()
    tab = run.timed("dispersion", dispersion_table, p, cfg.dispersion.jmax)
    cols = list(tab)
    run.write_csv("dispersion.csv", cols, zip(*(tab[c].tolist() for c in cols)))
    return {"rows": int(tab["j"].size)}


def _cmd_linwave(cfg: ExperimentConfig, run: RunDir, opts: dict) -> dict:
    p, sites = cfg.physics.build(), cfg.sites.build()
    xi = cfg.linwave.xi if cfg.linwave.xi is not None else xi_for_amplitude(p, sites)
    sv = cfg.solver
    emb = linear_seed(p, sites, xi, n_phi=sv.n_phi, n_modes=sv.n_modes, epsilon=cfg.linwave.amplitude)
    divisors = small_divisor_check(emb, sv.build())
    save_snapshot(emb, run.path("seed.json"))
    run.outputs.append(run.root / "seed.csv")
    summary = {"omega": emb.omega, "xi": emb.xi, "epsilon": emb.epsilon, "divisors": divisors}
    run.write_json("linwave.json", summary)
    return summary


def _family_pool(threads: int, fn: Callable[[str], object], families: list[str]) -> dict[str, object]:
    if threads <= 1 or len(families) == 1:
        return {f: fn(f) for f in families}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(fn, families))
    return dict(zip(families, results))


def _cmd_measure(cfg: ExperimentConfig, run: RunDir, opts: dict) -> dict:
    p, sites, nr = cfg.physics.build(), cfg.sites.build(), cfg.nonres.build()
    model_fn = None
    if cfg.measure.model is not None:
        m = cfg.measure.model
        model_fn = lambda k: FrequencyModel(m.m32, m.m1, m.m12, p.with_kappa(k))  # noqa: E731
    eps = cfg.measure.epsilon

    def one(family: str) -> ResonantSetEstimate:
        return measure_estimate(sites, nr, p, model_fn=model_fn, epsilon=eps, families=(family,))

    parts = run.timed("measure", _family_pool, opts["threads"], one, list(cfg.measure.families))
    first = next(iter(parts.values()))
    intervals = sorted(iv for est in parts.values() for iv in est.intervals)
    est = ResonantSetEstimate(
        measures={f: e.measures[f] for f, e in parts.items()},
        total=0.0,
        upsilon=first.upsilon,
        tau=first.tau,
        epsilon=eps,
        kappa_range=first.kappa_range,
        kappa_grid=first.kappa_grid,
        ell_max=first.ell_max,
        j_cutoff=first.j_cutoff,
        restriction_constant=first.restriction_constant,
        n_triples={f: e.n_triples[f] for f, e in parts.items()},
        intervals=intervals,
    )
    union = excluded_interval_union(est)
    est.total = float(sum(b - a for a, b in union))
    out = est.to_dict()
    run.write_json("measure.json", out)
    run.write_csv("excluded_intervals.csv", ["kappa_lo", "kappa_hi", "family"], intervals)
    run.write_csv("excluded_union.csv", ["kappa_lo", "kappa_hi"], union)
    return out


def _cmd_transversality(cfg: ExperimentConfig, run: RunDir, opts: dict) -> dict:
    p, sites, nr = cfg.physics.build(), cfg.sites.build(), cfg.nonres.build()
    fams = list(cfg.measure.families)
    res = run.timed("scan", _family_pool, opts["threads"], lambda f: transversality_scan(p, sites, nr, f), fams)
    out = {"families": {f: r.to_dict() for f, r in res.items()}, "min_bound": min(r.bound for r in res.values())}
    run.write_json("transversality.json", out)
    run.write_csv(
        "transversality.csv",
        ["family", "bound", "argmin_kappa", "n_triples"],
        [(f, r.bound, r.argmin_kappa, r.n_triples) for f, r in res.items()],
    )
    return out


def _cmd_normalform(cfg: ExperimentConfig, run: RunDir, opts: dict) -> dict:
    emb = load_snapshot(opts["snapshot"])
    nf = cfg.normalform
    res = run.timed("reduce", reduce_torus, emb, nf.build(), nf.grid_size)
    out = res.to_dict()
    run.write_json("normalform.json", out)
    model = frequency_model(res.constants, emb.physics)
    j = np.concatenate([np.arange(-nf.jmax, 0), np.arange(1, nf.jmax + 1)])
    omega = big_omega_j(emb.physics, j)
    mu = model.mu(j)
    run.write_csv("mu_table.csv", ["j", "Omega_j", "mu_j"], zip(j.tolist(), omega.tolist(), mu.tolist()))
    return {"m32": out["m32"], "m1": out["m1"], "m12": out["m12"], "residuals": out["residuals"]}


def _cmd_solve(cfg: ExperimentConfig, run: RunDir, opts: dict) -> dict:
    p, sites, sv = cfg.physics.build(), cfg.sites.build(), cfg.solver.build()
    xi = cfg.solve.xi if cfg.solve.xi is not None else xi_for_amplitude(p, sites)
    seed = linear_seed(p, sites, xi, n_phi=sv.n_phi, n_modes=sv.n_modes)
    ladder = run.timed("newton", continue_amplitude, seed, cfg.solve.amplitudes, sv)
    rows, reports = [], []
    for emb, rep in ladder:
        run.timings[f"newton_eps_{emb.epsilon:g}"] = rep.wall_time
        cn = correction_norm(emb, sv)
        reports.append({"epsilon": emb.epsilon, "omega": emb.omega, "alpha": emb.alpha, "correction_norm": cn, **rep.to_dict()})
        rows.append((emb.epsilon, *emb.omega.tolist(), rep.final_residual, rep.iterations, cn))
    final = ladder[-1][0]
    save_snapshot(final, run.path("torus.json"))
    run.outputs.append(run.root / "torus.csv")
    out = {"ladder": reports, "solver": sv.to_dict()}
    run.write_json("solve_report.json", out)
    head = ["epsilon", *[f"omega_{a + 1}" for a in range(sites.nu)], "final_residual", "iterations", "correction_norm"]
    run.write_csv("ladder.csv", head, rows)
    return {"epsilon": final.epsilon, "omega": final.omega, "final_residual": ladder[-1][1].final_residual}


class ValidationFailure(RuntimeError):
    """Deviation from the torus flow above the configured tolerance."""


def _cmd_validate(cfg: ExperimentConfig, run: RunDir, opts: dict) -> dict:
    v = cfg.validate_
    if opts.get("snapshot"):
        emb = load_snapshot(opts["snapshot"])
        sv = replace(cfg.solver.build(), n_phi=emb.n_phi, n_modes=emb.n_modes)
        rep = run.timed(
            "validate", validate_solution, emb, sv, v.periods, v.steps_per_period, v.samples, v.t_end, v.dt
        )
        run.timings["integrate"] = rep.invariants.get("wall_time", 0.0)
        out = rep.to_dict()
        run.write_json("validation.json", out)
        run.write_csv("timeseries.csv", ["t", "deviation"], zip(rep.times, rep.deviations))
        if not rep.max_deviation < v.tolerance:
            raise ValidationFailure(f"max deviation {rep.max_deviation:.3g} exceeds tolerance {v.tolerance:.3g}")
        return {"max_deviation": rep.max_deviation, "correction_ratio": rep.correction_ratio}
    p = cfg.physics.build()
    dno = DnoConfig(taylor_order=cfg.solver.taylor_order, n_modes=v.modes, max_slope=cfg.solver.max_slope)
    period = 2.0 * math.pi / abs(mode_frequency(p, v.mode))
    t_end = v.t_end if v.t_end is not None else v.periods * period
    dt = v.dt if v.dt is not None else period / v.steps_per_period
    n_steps = max(1, int(round(t_end / dt)))
    dt = t_end / n_steps
    s0 = unit_mode_state(p, v.modes, v.mode, v.amplitude)
    traj, inv = run.timed(
        "integrate", integrate, p, s0, dt, t_end, dno, save_every=max(1, n_steps // v.samples), check_reversibility=True
    )
    rows = [(float(t), hamiltonian(p, s, dno), momentum(p, s), float(s.eta.coeff(0).real)) for t, s in zip(traj.times, traj.states)]
    out = inv.to_dict()
    run.write_json("invariants.json", out)
    run.write_csv("timeseries.csv", ["t", "hamiltonian", "momentum", "mean_eta"], rows)
    return out


COMMANDS: dict[str, Callable[[ExperimentConfig, RunDir, dict], dict]] = {
    "dispersion": _cmd_dispersion,
    "linwave": _cmd_linwave,
    "measure": _cmd_measure,
    "transversality": _cmd_transversality,
    "normalform": _cmd_normalform,
    "solve": _cmd_solve,
    "validate": _cmd_validate,
}


def run(
    command: str,
    config_path: str | Path | None = None,
    overrides: dict[str, object] | None = None,
    out: str | Path | None = None,
    threads: int = 1,
    seed: int = 0,
    snapshot: str | Path | None = None,
) -> int:
    """Execute one command and return its exit code; artifacts land in ``out``."""
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    start = time.perf_counter()
    root = Path(out) if out is not None else Path("vorwave-runs") / command
    rd = RunDir(root)
    inputs = [Path(x) for x in (config_path,) if x is not None]
    if snapshot is not None:
        inputs.append(Path(snapshot).with_suffix(".json"))
        inputs.append(Path(snapshot).with_suffix(".csv"))
    manifest: dict = {"command": command, "seed": seed, "threads": threads, "versions": _versions()}
    status, code, summary, failure = "ok", EXIT_OK, None, None
    try:
        cfg = load_config(config_path, overrides)
        manifest["config"] = cfg.model_dump(mode="json", by_alias=True)
        digest = hashlib.sha256(json.dumps(manifest["config"], sort_keys=True).encode())
        digest.update(f"{command}|{seed}".encode())
        manifest["inputs"] = {}
        for p in inputs:
            if p.exists():
                manifest["inputs"][str(p)] = _sha256(p)
                digest.update(bytes.fromhex(manifest["inputs"][str(p)]))
        manifest["inputs_hash"] = digest.hexdigest()
        np.random.seed(seed)
        summary = COMMANDS[command](cfg, rd, {"threads": max(1, threads), "snapshot": snapshot})
    except NUMERICAL_ERRORS + (ValidationFailure,) as exc:
        status, code = "numerical_failure", EXIT_NUMERICAL
        failure = {"status": status, "reason": type(exc).__name__, "message": str(exc)}
    except CONFIG_ERRORS as exc:
        status, code = "config_error", EXIT_CONFIG
        failure = {"status": status, "reason": type(exc).__name__, "message": str(exc)}
    if failure is not None:
        rd.write_json("failure.json", failure)
        click.echo(json.dumps(failure, sort_keys=True), err=True)
    rd.timings["total"] = time.perf_counter() - start
    manifest.update(
        status=status,
        exit_code=code,
        timings=rd.timings,
        outputs={p.name: _sha256(p) for p in rd.outputs if p.exists()},
        summary=summary,
    )
    (root / "manifest.json").write_text(json.dumps(_clean({**manifest, "timings": rd.timings}), indent=2, sort_keys=True) + "\n")
    return code


# -- click wiring -----------------------------------------------------------------------


def _common(fn):
    fn = click.option("--seed", type=int, default=0, show_default=True, help="Seed recorded in the manifest.")(fn)
    fn = click.option(
        "--threads", type=int, envvar="VORWAVE_THREADS", default=1, show_default=True, help="Worker threads (env VORWAVE_THREADS)."
    )(fn)
    fn = click.option("--out", type=click.Path(file_okay=False), default=None, help="Run directory [vorwave-runs/<command>].")(fn)
    fn = click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="JSON config file.")(fn)
    return fn


def _physics_flags(fn):
    fn = click.option("--depth", type=str, default=None, help="Fluid depth or 'inf'.")(fn)
    fn = click.option("--gamma", type=float, default=None, help="Constant vorticity.")(fn)
    fn = click.option("--kappa", type=float, default=None, help="Surface tension.")(fn)
    fn = click.option("--g", "gravity", type=float, default=None, help="Gravity.")(fn)
    return fn


def _physics_overrides(gravity, kappa, gamma, depth) -> dict:
    if depth is not None and depth != "inf":
        try:
            depth = float(depth)
        except ValueError:
            pass
    return {"physics.g": gravity, "physics.kappa": kappa, "physics.gamma": gamma, "physics.depth": depth}


def _finish(code: int) -> None:
    sys.exit(code)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="vorwave")
def main() -> None:
    """Quasi-periodic traveling gravity-capillary waves with constant vorticity."""


@main.command()
@_common
@_physics_flags
@click.option("--jmax", type=int, default=None, help="Rows per sign of j.")
def dispersion(config_path, out, threads, seed, gravity, kappa, gamma, depth, jmax):
    """Dispersion table: j, G_j, M_j, omega_j, Omega_j, lambda_j, c_j."""
    ov = {**_physics_overrides(gravity, kappa, gamma, depth), "dispersion.jmax": jmax}
    _finish(run("dispersion", config_path, ov, out, threads, seed))


@main.command()
@_common
@_physics_flags
@click.option("--amplitude", type=float, default=None, help="Elevation amplitude of each tangential mode.")
@click.option("--nphi", type=int, default=None, help="Lattice cutoff.")
@click.option("--modes", type=int, default=None, help="Spatial cutoff.")
def linwave(config_path, out, threads, seed, gravity, kappa, gamma, depth, amplitude, nphi, modes):
    """Linear quasi-periodic seed as a torus snapshot."""
    ov = {**_physics_overrides(gravity, kappa, gamma, depth), "linwave.amplitude": amplitude, "solver.n_phi": nphi, "solver.n_modes": modes}
    _finish(run("linwave", config_path, ov, out, threads, seed))


@main.command()
@_common
@_physics_flags
@click.option("--upsilon", type=float, default=None)
@click.option("--tau", type=float, default=None)
@click.option("--ellmax", type=int, default=None)
@click.option("--jcut", type=int, default=None)
@click.option("--grid", type=int, default=None, help="Number of kappa grid points.")
@click.option("--epsilon", type=float, default=None, help="Amplitude the frequency model refers to.")
def measure(config_path, out, threads, seed, gravity, kappa, gamma, depth, upsilon, tau, ellmax, jcut, grid, epsilon):
    """Excluded kappa measure of the nearly-resonant sets."""
    ov = {
        **_physics_overrides(gravity, kappa, gamma, depth),
        "nonres.upsilon": upsilon,
        "nonres.tau": tau,
        "nonres.ell_max": ellmax,
        "nonres.j_cutoff": jcut,
        "nonres.kappa_grid": grid,
        "measure.epsilon": epsilon,
    }
    _finish(run("measure", config_path, ov, out, threads, seed))


@main.command()
@_common
@_physics_flags
@click.option("--ellmax", type=int, default=None)
@click.option("--jcut", type=int, default=None)
@click.option("--m0", type=int, default=None, help="Highest kappa derivative.")
@click.option("--grid", type=int, default=None, help="Number of kappa grid points.")
def transversality(config_path, out, threads, seed, gravity, kappa, gamma, depth, ellmax, jcut, m0, grid):
    """Transversality lower bounds per Melnikov family."""
    ov = {
        **_physics_overrides(gravity, kappa, gamma, depth),
        "nonres.ell_max": ellmax,
        "nonres.j_cutoff": jcut,
        "nonres.m0": m0,
        "nonres.kappa_grid": grid,
    }
    _finish(run("transversality", config_path, ov, out, threads, seed))


@main.command()
@_common
@click.option("--snapshot", type=click.Path(dir_okay=False), required=True, help="Torus snapshot (.json).")
@click.option("--jmax", type=int, default=None, help="Rows per sign in the mu table.")
def normalform(config_path, out, threads, seed, snapshot, jmax):
    """Reduce a torus to constant coefficients m32, m1, m12."""
    _finish(run("normalform", config_path, {"normalform.jmax": jmax}, out, threads, seed, snapshot))


@main.command()
@_common
@_physics_flags
@click.option("--amplitude", "amplitudes", type=float, multiple=True, help="Amplitude ladder (repeatable).")
@click.option("--nphi", type=int, default=None, help="Lattice cutoff.")
@click.option("--modes", type=int, default=None, help="Spatial cutoff.")
def solve(config_path, out, threads, seed, gravity, kappa, gamma, depth, amplitudes, nphi, modes):
    """Newton continuation of a quasi-periodic traveling torus."""
    ov = {
        **_physics_overrides(gravity, kappa, gamma, depth),
        "solve.amplitudes": list(amplitudes) or None,
        "solver.n_phi": nphi,
        "solver.n_modes": modes,
    }
    _finish(run("solve", config_path, ov, out, threads, seed))


@main.command()
@_common
@_physics_flags
@click.option("--snapshot", type=click.Path(dir_okay=False), default=None, help="Torus snapshot to validate.")
@click.option("--amplitude", type=float, default=None, help="Single-mode amplitude (without snapshot).")
@click.option("--tend", type=float, default=None, help="Final time.")
@click.option("--dt", type=float, default=None, help="Time step.")
@click.option("--modes", type=int, default=None, help="Spatial cutoff (without snapshot).")
def validate(config_path, out, threads, seed, gravity, kappa, gamma, depth, snapshot, amplitude, tend, dt, modes):
    """Time-integrate a torus (or a single linear mode) and report invariants."""
    ov = {
        **_physics_overrides(gravity, kappa, gamma, depth),
        "validate.amplitude": amplitude,
        "validate.t_end": tend,
        "validate.dt": dt,
        "validate.modes": modes,
    }
    _finish(run("validate", config_path, ov, out, threads, seed, snapshot))


if __name__ == "__main__":
    main()
