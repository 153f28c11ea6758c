"""Scenario execution and data export.

Every run writes into its output directory:

* ``timeseries.csv``: time, mean_n, p0..pK, trace_error, tail_mass, then
  fidelity and qsd_mean_n, qsd_stderr when requested.
* ``wigner_<i>.csv`` (n_y rows by n_x columns, row-major in y) with a
  ``wigner_<i>.json`` sidecar.
* ``comparison.csv`` when both methods ran.
* ``manifest.json``: resolved config, seeds, tool version, wall time and
  check verdicts.

Numbers are written with 17 significant digits, so the CSV files are
byte-identical for identical configs and seeds.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .checks import ComparisonReport, compare_methods, evaluate
from .config import ScenarioConfig, jsonable
from .errors import IntegrationFailure, TruncationOverflow
from .fock import GUARD_BAND, dm_from_pure, tail_mass
from .master import integrate_master
from .phasespace import fidelity_pure, negativity_volume, symmetry_defect, wigner
from .qsd import ensemble_average

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INTEGRATION = 3
EXIT_TRUNCATION = 4


def fmt(x) -> str:
    return format(float(x), ".17g")


@dataclass
class RunOutcome:
    config: ScenarioConfig
    status: int = EXIT_OK
    error: Optional[str] = None
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    states: list = field(default_factory=list)
    master: object = None
    qsd: object = None
    comparison: Optional[ComparisonReport] = None
    snapshots: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    files: list = field(default_factory=list)

    @property
    def output_dir(self) -> Path:
        return self.config.output_dir

    def final_field(self):
        if self.snapshots and abs(self.snapshots[-1]["time"] - self.times[-1]) < 1e-9:
            return self.snapshots[-1]["field"]
        return wigner(self.states[-1])


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def _timeseries(out: RunOutcome, path: Path):
    cfg = out.config
    K = cfg.observables.max_level
    header = ["time", "mean_n"] + [f"p{k}" for k in range(K + 1)] + ["trace_error", "tail_mass"]
    target = cfg.observables.fidelity_target
    if target is not None:
        header.append("fidelity")
    if out.qsd is not None:
        header += ["qsd_mean_n", "qsd_stderr"]
    levels = np.arange(cfg.basis.dimension)
    band = min(GUARD_BAND, cfg.basis.n_max)
    rows = []
    for i, (t, rho) in enumerate(zip(out.times, out.states)):
        pops = np.real(np.diagonal(rho.elements))
        row = [t, pops @ levels, *pops[:K + 1], abs(rho.trace - 1.0), tail_mass(rho, band)]
        if target is not None:
            row.append(fidelity_pure(rho, target))
        if out.qsd is not None:
            row += [out.qsd.mean_excitation[i], out.qsd.stderr_excitation[i]]
        rows.append(row)
    _write_csv(path, header, rows)


def _snapshots(out: RunOutcome):
    req = out.config.observables.wigner
    if req is None:
        return
    index = {round(t, 9): i for i, t in enumerate(out.times)}
    for n, (t, label) in enumerate(zip(req.times, req.labels)):
        i = index[round(t, 9)]
        rho = out.states[i]
        fld = wigner(rho, req.grid)
        polar = wigner(rho, req.symmetry_grid)
        meta = dict(req.grid.metadata())
        meta.update({
            "label": label,
            "time": float(out.times[i]),
            "min_value": fld.min_value,
            "integral": fld.integral,
            "negativity_volume": negativity_volume(fld),
            "symmetry_defect_polar": symmetry_defect(polar),
            "symmetry_grid": req.symmetry_grid.metadata(),
            "source": "master" if out.master is not None else "qsd",
            "units": "alpha = x + i y, gamma = 1",
        })
        if req.grid.kind == "polar" or (math.isclose(req.grid.x_min, -req.grid.x_max)
                                        and math.isclose(req.grid.y_min, -req.grid.y_max)):
            meta["symmetry_defect"] = symmetry_defect(fld)
        else:
            meta["symmetry_defect"] = meta["symmetry_defect_polar"]
        stem = f"wigner_{n:02d}"
        _write_csv_matrix(out.output_dir / f"{stem}.csv", fld.values)
        (out.output_dir / f"{stem}.json").write_text(json.dumps(meta, indent=2) + "\n")
        out.files += [f"{stem}.csv", f"{stem}.json"]
        out.snapshots.append({**meta, "field": fld})


def _write_csv_matrix(path: Path, values: np.ndarray):
    with open(path, "w") as fh:
        for row in values:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def run_scenario(cfg: ScenarioConfig) -> RunOutcome:
    """Run the configured method(s), write all outputs and evaluate the checks."""
    out = RunOutcome(cfg)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    try:
        if cfg.method in ("master", "both"):
            out.master = integrate_master(dm_from_pure(cfg.initial_state), cfg.evolution, cfg.model, cfg.pulses)
        if cfg.method in ("qsd", "both"):
            out.qsd = ensemble_average(cfg.qsd, cfg.model, cfg.pulses, cfg.initial_state)
    except TruncationOverflow as exc:
        out.status, out.error = EXIT_TRUNCATION, str(exc)
    except IntegrationFailure as exc:
        out.status, out.error = EXIT_INTEGRATION, f"{exc} (last good t = {exc.last_good_time})"

    if out.status == EXIT_OK:
        if out.master is not None:
            out.times, out.states = out.master.times, out.master.states
        else:
            out.times, out.states = out.qsd.times, out.qsd.mean_density
        _timeseries(out, cfg.output_dir / "timeseries.csv")
        out.files.append("timeseries.csv")
        _snapshots(out)
        if out.master is not None and out.qsd is not None:
            out.comparison = compare_methods(out.times, out.master.mean_excitation(), out.qsd.mean_excitation,
                                             out.qsd.stderr_excitation, out.qsd.n_trajectories)
            _write_csv(cfg.output_dir / "comparison.csv",
                       ["time", "master_mean_n", "qsd_mean_n", "qsd_stderr", "z", "within"],
                       out.comparison.rows())
            out.files.append("comparison.csv")
        for spec in cfg.checks:
            out.checks.append(evaluate(out, spec))

    manifest = {
        "tool": "pdaosim",
        "tool_version": __version__,
        "scenario": cfg.name,
        "status": "complete" if out.status == EXIT_OK else "partial",
        "exit_status": out.status,
        "error": out.error,
        "units": "time in 1/gamma, rates in gamma",
        "config": jsonable(cfg.resolved),
        "base_seed": cfg.qsd.base_seed if cfg.qsd else None,
        "n_trajectories": cfg.qsd.n_trajectories if cfg.qsd else None,
        "master_dt": out.master.dt if out.master is not None else None,
        "wall_time_s": time.perf_counter() - started,
        "files": out.files,
        "comparison": None if out.comparison is None else {
            "passed": out.comparison.passed, "fraction": out.comparison.fraction,
            "message": out.comparison.message},
        "checks": out.checks,
    }
    (cfg.output_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_json_default) + "\n")
    return out


def _json_default(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    raise TypeError(f"not JSON serializable: {type(v).__name__}")
