"""Post-run assertions attached to scenarios and the method-comparison harness."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .phasespace import fidelity_pure, local_maxima, negativity_volume, wigner

SIGMA = 3.0
REQUIRED_FRACTION = 0.95
# below this |master - qsd| counts as agreement even when the standard error vanishes
ABS_FLOOR = 1e-9


@dataclass
class ComparisonReport:
    times: np.ndarray
    master_mean_n: np.ndarray
    qsd_mean_n: np.ndarray
    qsd_stderr: np.ndarray
    z: np.ndarray
    within: np.ndarray
    fraction: float
    passed: bool
    message: str

    def rows(self):
        for i, t in enumerate(self.times):
            yield (t, self.master_mean_n[i], self.qsd_mean_n[i], self.qsd_stderr[i], self.z[i],
                   int(self.within[i]))


def compare_methods(times, master_mean_n, qsd_mean_n, qsd_stderr, n_trajectories: int,
                    sigma: float = SIGMA, required_fraction: float = REQUIRED_FRACTION) -> ComparisonReport:
    """Per-sample ``|master - qsd| / stderr`` and a verdict.

    Passes when at least `required_fraction` of the samples lie within `sigma`
    standard errors. Fewer than two trajectories always fails, since the
    standard error is undefined.
    """
    times = np.asarray(times, dtype=float)
    m = np.asarray(master_mean_n, dtype=float)
    q = np.asarray(qsd_mean_n, dtype=float)
    se = np.asarray(qsd_stderr, dtype=float)
    dev = np.abs(m - q)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, dev / se, np.where(dev <= ABS_FLOOR, 0.0, np.inf))
    within = dev <= sigma * se + ABS_FLOOR
    fraction = float(within.mean()) if within.size else 0.0
    if n_trajectories < 2:
        return ComparisonReport(times, m, q, se, z, within, fraction, False,
                                f"insufficient statistics: {n_trajectories} trajectory, "
                                "standard error undefined")
    passed = fraction >= required_fraction
    message = (f"{fraction:.1%} of {within.size} samples within {sigma:g} standard errors "
               f"(need {required_fraction:.0%}): {'pass' if passed else 'fail'}")
    return ComparisonReport(times, m, q, se, z, within, fraction, passed, message)


def _populations(states):
    return np.array([np.real(np.diagonal(r.elements)) for r in states])


def _mean_n(states):
    pops = _populations(states)
    return pops @ np.arange(pops.shape[1])


def _after(times, after):
    return np.asarray(times) > after - 1e-12


def check_periodicity(run, after=10.0, rel_tol=1e-3):
    times = np.asarray(run.times)
    n = _mean_n(run.states)
    tau = run.config.pulses.period
    lookup = {round(t, 9): i for i, t in enumerate(times)}
    worst, pairs = 0.0, 0
    for i, t in enumerate(times):
        j = lookup.get(round(t + tau, 9))
        if t > after and j is not None:
            worst = max(worst, abs(n[i] - n[j]))
            pairs += 1
    scale = float(n[_after(times, after)].max())
    passed = pairs > 0 and worst <= rel_tol * scale
    return {"passed": passed, "max_deviation": worst, "max_mean_n": scale, "pairs": pairs,
            "limit": rel_tol * scale}


def check_max_population(run, level=2, after=0.0, min=None, max=None):
    times = np.asarray(run.times)
    pops = _populations(run.states)[:, level]
    mask = _after(times, after)
    i = int(np.argmax(np.where(mask, pops, -np.inf)))
    value = float(pops[i])
    passed = (min is None or value >= min) and (max is None or value <= max)
    return {"passed": passed, "value": value, "argmax_time": float(times[i])}


def check_superposition_window(run, after=0.0, max_gap=0.1, min_fidelity=0.6, max_min_wigner=-0.01,
                               target=None):
    """A sample with P0 ~ P2, high overlap with the target and a negative Wigner dip."""
    from .fock import superposition

    basis = run.config.basis
    target = target or run.config.observables.fidelity_target or superposition(basis, {0: 1, 2: 1})
    times = np.asarray(run.times)
    pops = _populations(run.states)
    fid = np.array([fidelity_pure(r, target) for r in run.states])
    cand = np.nonzero(_after(times, after) & (np.abs(pops[:, 0] - pops[:, 2]) < max_gap)
                      & (fid > min_fidelity))[0]
    best = {"passed": False, "candidates": int(cand.size)}
    for i in cand[np.argsort(-fid[cand])][:10]:
        w = wigner(run.states[i]).min_value
        if w < max_min_wigner:
            return {"passed": True, "time": float(times[i]), "p0": float(pops[i, 0]), "p2": float(pops[i, 2]),
                    "fidelity": float(fid[i]), "min_wigner": w, "candidates": int(cand.size)}
    return best


def check_symmetry(run, max_defect=1e-6):
    defects = [s["symmetry_defect_polar"] for s in run.snapshots]
    worst = float(max(defects)) if defects else math.nan
    return {"passed": bool(defects) and worst <= max_defect, "max_defect": worst}


def check_wigner_normalized(run, tol=1e-3):
    errs = [abs(s["integral"] - 1.0) for s in run.snapshots]
    worst = float(max(errs)) if errs else math.nan
    return {"passed": bool(errs) and worst <= tol, "max_error": worst}


def check_steady_state(run, window=1.0, tol=1e-6):
    times = np.asarray(run.times)
    j = int(np.argmin(np.abs(times - (times[-1] - window))))
    change = float(np.max(np.abs(run.states[-1].elements - run.states[j].elements)))
    return {"passed": change <= tol, "change": change, "window": float(times[-1] - times[j])}


def check_two_humps(run, max_negativity=1e-3):
    """Final Wigner snapshot: two maxima related by point reflection, no negativity."""
    field = run.final_field()
    peaks = local_maxima(field)
    neg = negativity_volume(field)
    mirrored = False
    if len(peaks) >= 2:
        (x1, y1, w1), (x2, y2, w2) = peaks[:2]
        step = max(field.grid.xs[1] - field.grid.xs[0], field.grid.ys[1] - field.grid.ys[0])
        mirrored = abs(x1 + x2) <= step and abs(y1 + y2) <= step and abs(w1 - w2) <= 1e-6 * abs(w1)
    return {"passed": len(peaks) == 2 and mirrored and neg < max_negativity,
            "maxima": [list(p) for p in peaks[:4]], "negativity_volume": neg}


def check_decay(run, level=1, rel_tol=1e-6, at=(1.0, 2.0, 5.0)):
    times = np.asarray(run.times)
    pops = _populations(run.states)[:, level]
    gamma = run.config.model.gamma
    worst = 0.0
    for t in at:
        i = int(np.argmin(np.abs(times - t)))
        exact = math.exp(-gamma * times[i])
        worst = max(worst, abs(pops[i] - exact) / exact)
    return {"passed": worst <= rel_tol, "max_rel_error": worst}


def check_methods_agree(run):
    if run.comparison is None:
        return {"passed": False, "detail": "requires method: both"}
    return {"passed": run.comparison.passed, "fraction": run.comparison.fraction,
            "detail": run.comparison.message}


CHECKS = {
    "periodicity": check_periodicity,
    "max_population": check_max_population,
    "superposition_window": check_superposition_window,
    "symmetry": check_symmetry,
    "wigner_normalized": check_wigner_normalized,
    "steady_state": check_steady_state,
    "two_humps": check_two_humps,
    "decay": check_decay,
    "methods_agree": check_methods_agree,
}


def evaluate(run, spec: dict) -> dict:
    spec = dict(spec)
    kind = spec.pop("kind")
    if kind not in CHECKS:
        raise ConfigError(f"unknown check kind {kind!r}; known: {', '.join(sorted(CHECKS))}")
    try:
        result = CHECKS[kind](run, **spec)
    except TypeError as exc:
        return {"kind": kind, "passed": False, "detail": f"bad check parameters: {exc}"}
    return {"kind": kind, **{k: _plain(v) for k, v in result.items()}}


def _plain(v):
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.generic):
        return v.item()
    return v
