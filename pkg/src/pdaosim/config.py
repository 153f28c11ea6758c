"""Scenario configuration: a YAML key-value tree resolved against defaults.

Top-level keys::

    name, method (master | qsd | both), output_dir
    model:      delta, chi, drive, phi, gamma, nbath
    pulses:     t0, width, period, count, monochromatic
    basis:      n_max, tail_tolerance
    initial_state: vacuum | {fock: n} | {amplitudes: {n: amplitude, ...}}
    evolution:  t_start, t_end, sample_step | sample_times, initial_dt, rel_tol, abs_tol, converge
    qsd:        n_trajectories, dt, base_seed
    observables:
      populations: highest level written as p0..pK
      fidelity:    {n: amplitude, ...} target state (normalized on load)
      wigner:      {times: [...], grid: {...}, symmetry_grid: {...}}
      symmetry_defect, negativity: booleans
    checks:     list of {kind: ..., ...} assertions evaluated after the run

Times under ``observables.wigner.times`` may be numbers or pulse landmarks
written as ``"2tau - 0.4T"`` (k periods plus c widths).
"""
from __future__ import annotations

import copy
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .errors import ConfigError, InvalidArgument
from .fock import FockBasis, PureState, fock_state, superposition
from .master import EvolutionConfig, StepControl
from .model import ModelParams, PulseTrain
from .phasespace import WignerGrid
from .qsd import QsdConfig

METHODS = ("master", "qsd", "both")

DEFAULTS = {
    "name": "scenario",
    "method": "master",
    "output_dir": "out",
    "model": {"delta": 0.0, "chi": 0.0, "drive": 0.0, "phi": 0.0, "gamma": 1.0, "nbath": 0.0},
    "pulses": {"t0": 0.0, "width": 1.0, "period": 1.0, "count": None, "monochromatic": True},
    "basis": {"n_max": 50, "tail_tolerance": 1e-6},
    "initial_state": "vacuum",
    "evolution": {"t_start": 0.0, "t_end": 10.0, "sample_step": 0.05, "sample_times": None,
                  "initial_dt": 1e-3, "rel_tol": 1e-6, "abs_tol": 1e-9, "converge": False},
    "qsd": None,
    "observables": {"populations": 5, "fidelity": None, "wigner": None,
                    "symmetry_defect": True, "negativity": True},
    "checks": [],
}
QSD_DEFAULTS = {"n_trajectories": 500, "dt": 1e-3, "base_seed": 0}
WIGNER_DEFAULTS = {
    "times": [],
    "grid": {"kind": "cartesian", "x_min": -5.0, "x_max": 5.0, "y_min": -5.0, "y_max": 5.0,
             "n_x": 201, "n_y": 201},
    "symmetry_grid": {"kind": "polar", "r_max": 5.0, "n_r": 101, "n_theta": 128},
}

_LANDMARK = re.compile(
    r"^\s*(?:(?P<k>[+-]?\d*\.?\d*)\s*\*?\s*tau)?\s*(?:(?P<sign>[+-])?\s*(?P<c>\d*\.?\d*)\s*\*?\s*T)?\s*$")


@dataclass
class WignerRequest:
    times: list
    labels: list
    grid: WignerGrid
    symmetry_grid: WignerGrid


@dataclass
class Observables:
    max_level: int = 5
    fidelity_target: Optional[PureState] = None
    wigner: Optional[WignerRequest] = None
    symmetry_defect: bool = True
    negativity: bool = True


@dataclass
class ScenarioConfig:
    name: str
    model: ModelParams
    pulses: PulseTrain
    method: str
    basis: FockBasis
    evolution: EvolutionConfig
    qsd: Optional[QsdConfig]
    observables: Observables
    output_dir: Path
    initial_state: PureState
    checks: list = field(default_factory=list)
    resolved: dict = field(default_factory=dict)


def landmark_time(expr, period: float, width: float) -> float:
    """Evaluate ``"k tau + c T"`` (or a plain number) to an absolute time."""
    if isinstance(expr, (int, float)) and not isinstance(expr, bool):
        return float(expr)
    m = _LANDMARK.match(str(expr))
    if not m or not str(expr).strip() or (m.group("k") is None and m.group("c") is None):
        raise InvalidArgument(f"cannot parse time landmark {expr!r}")

    def number(text, default):
        if text in (None, "", "+", "-"):
            return -default if text == "-" else default
        return float(text)

    k = number(m.group("k"), 1.0) if m.group("k") is not None else 0.0
    c = number(m.group("c"), 1.0) if m.group("c") is not None else 0.0
    if m.group("sign") == "-":
        c = -c
    return k * period + c * width


def _merge(defaults, user, path, problems):
    if user is None:
        return copy.deepcopy(defaults)
    if not isinstance(defaults, dict):
        return copy.deepcopy(user)
    if not isinstance(user, dict):
        problems.append(f"{path or 'config'}: expected a mapping, got {type(user).__name__}")
        return copy.deepcopy(defaults)
    out = copy.deepcopy(defaults)
    for key, value in user.items():
        where = f"{path}.{key}" if path else str(key)
        if key not in defaults:
            problems.append(f"{where}: unknown key")
            continue
        if isinstance(defaults[key], dict):
            out[key] = _merge(defaults[key], value, where, problems)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _section(problems, where, build):
    try:
        return build()
    except (InvalidArgument, TypeError, ValueError) as exc:
        problems.append(f"{where}: {exc}")
        return None


def _sample_times(ev):
    if ev["sample_times"] is not None:
        return [float(t) for t in ev["sample_times"]]
    step, t_start, t_end = float(ev["sample_step"]), float(ev["t_start"]), float(ev["t_end"])
    if not step > 0:
        raise InvalidArgument("sample_step must be > 0")
    count = int(math.floor((t_end - t_start) / step + 1e-9))
    times = [round(t_start + i * step, 12) for i in range(count + 1)]
    if times[-1] < t_end - 1e-12:
        times.append(t_end)
    return times


def _state(spec, basis):
    if spec in (None, "vacuum"):
        return fock_state(basis, 0)
    if isinstance(spec, dict) and set(spec) == {"fock"}:
        return fock_state(basis, int(spec["fock"]))
    if isinstance(spec, dict) and set(spec) == {"amplitudes"}:
        return superposition(basis, {int(k): complex(v) for k, v in spec["amplitudes"].items()})
    raise InvalidArgument(f"initial_state must be 'vacuum', {{fock: n}} or {{amplitudes: ...}}, got {spec!r}")


def _pulses(spec):
    count = spec["count"]
    return PulseTrain(t0=float(spec["t0"]), width=float(spec["width"]), period=float(spec["period"]),
                      count=None if count is None else int(count),
                      monochromatic=bool(spec["monochromatic"]))


def _grid(spec):
    spec = dict(spec)
    kind = spec.pop("kind", "cartesian")
    return WignerGrid(kind, **spec)


def resolve(tree: dict, source: str = "<config>") -> ScenarioConfig:
    """Validate a raw config tree, fill defaults and build the typed config."""
    problems = []
    if not isinstance(tree, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    cfg = _merge(DEFAULTS, tree, "", problems)
    if cfg["qsd"] is not None or cfg["method"] in ("qsd", "both"):
        cfg["qsd"] = _merge(QSD_DEFAULTS, cfg["qsd"] or {}, "qsd", problems)
    obs = cfg["observables"]
    if obs["wigner"] is not None:
        obs["wigner"] = _merge(WIGNER_DEFAULTS, obs["wigner"], "observables.wigner", problems)

    if cfg["method"] not in METHODS:
        problems.append(f"method: must be one of {', '.join(METHODS)} (got {cfg['method']!r})")

    model = _section(problems, "model", lambda: ModelParams(**{k: float(v) for k, v in cfg["model"].items()}))
    pulses = _section(problems, "pulses", lambda: _pulses(cfg["pulses"]))
    basis = _section(problems, "basis", lambda: FockBasis(int(cfg["basis"]["n_max"]),
                                                          float(cfg["basis"]["tail_tolerance"])))
    ev = cfg["evolution"]
    wigner_times, wigner_labels = [], []
    if obs["wigner"] is not None and pulses is not None:
        for expr in obs["wigner"]["times"]:
            t = _section(problems, "observables.wigner.times",
                         lambda: landmark_time(expr, pulses.period, pulses.width))
            if t is not None:
                wigner_times.append(t)
                wigner_labels.append(str(expr))

    evolution = None
    if basis is not None:
        def build_evolution():
            times = sorted(set(_sample_times(ev)) | set(wigner_times))
            control = StepControl(float(ev["initial_dt"]), float(ev["rel_tol"]), float(ev["abs_tol"]),
                                  bool(ev["converge"]))
            return EvolutionConfig(float(ev["t_start"]), float(ev["t_end"]), times, basis, control)
        evolution = _section(problems, "evolution", build_evolution)

    qsd = None
    if cfg["qsd"] is not None and evolution is not None:
        q = cfg["qsd"]
        qsd = _section(problems, "qsd", lambda: QsdConfig(
            int(q["n_trajectories"]), evolution.sample_times, basis, float(q["dt"]),
            int(q["base_seed"]), evolution.t_start))

    initial = _section(problems, "initial_state", lambda: _state(cfg["initial_state"], basis)) if basis else None

    observables = None
    if basis is not None:
        def build_observables():
            target = None
            if obs["fidelity"] is not None:
                target = superposition(basis, {int(k): complex(v) for k, v in obs["fidelity"].items()})
            wig = None
            if obs["wigner"] is not None:
                wig = WignerRequest(wigner_times, wigner_labels, _grid(obs["wigner"]["grid"]),
                                    _grid(obs["wigner"]["symmetry_grid"]))
            level = int(obs["populations"])
            if not 0 <= level <= basis.n_max:
                raise InvalidArgument(f"populations level must lie in 0..{basis.n_max}")
            return Observables(level, target, wig, bool(obs["symmetry_defect"]), bool(obs["negativity"]))
        observables = _section(problems, "observables", build_observables)

    if not isinstance(cfg["checks"], list) or not all(isinstance(c, dict) and "kind" in c for c in cfg["checks"]):
        problems.append("checks: must be a list of mappings with a 'kind' key")
    else:
        from .checks import CHECKS
        for c in cfg["checks"]:
            if c["kind"] not in CHECKS:
                problems.append(f"checks: unknown kind {c['kind']!r}")

    if problems:
        raise ConfigError(f"{source}: invalid configuration\n  - " + "\n  - ".join(problems))
    return ScenarioConfig(
        name=str(cfg["name"]), model=model, pulses=pulses, method=cfg["method"], basis=basis,
        evolution=evolution, qsd=qsd, observables=observables, output_dir=Path(cfg["output_dir"]),
        initial_state=initial, checks=list(cfg["checks"]), resolved=cfg)


def parse_text(text: str, source: str = "<config>") -> dict:
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"{source}: parse error at {where}: {problem}") from exc
    return tree if tree is not None else {}


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    return resolve(parse_text(text, str(path)), str(path))


def override(cfg: ScenarioConfig, method=None, seed=None, trajectories=None, out=None) -> ScenarioConfig:
    """Re-resolve `cfg` with command-line overrides applied."""
    tree = copy.deepcopy(cfg.resolved)
    if method is not None:
        tree["method"] = method
    if seed is not None or trajectories is not None:
        tree["qsd"] = dict(tree["qsd"] or QSD_DEFAULTS)
        if seed is not None:
            tree["qsd"]["base_seed"] = seed
        if trajectories is not None:
            tree["qsd"]["n_trajectories"] = trajectories
    if out is not None:
        tree["output_dir"] = str(out)
    return resolve(tree, cfg.name)


def to_yaml(tree: dict) -> str:
    return yaml.safe_dump(tree, sort_keys=False)


def jsonable(tree):
    """Resolved tree with complex amplitudes turned into ``[re, im]`` pairs."""
    if isinstance(tree, dict):
        return {str(k): jsonable(v) for k, v in tree.items()}
    if isinstance(tree, (list, tuple)):
        return [jsonable(v) for v in tree]
    if isinstance(tree, complex):
        return [tree.real, tree.imag]
    if isinstance(tree, np.generic):
        return tree.item()
    return tree
