"""Built-in scenarios for the figure regimes.

Pulsed entries put the first pulse at ``t0 = tau`` so pulse k is centred at
``k tau`` and the snapshot labels (``2tau - 0.4T`` ...) are absolute times.
All entries use ``n_max = 30``; the guard band stays below 1e-8 for these
parameters.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass

from .config import ScenarioConfig, resolve
from .errors import ConfigError

TAU = 4.0
WIDTH = 0.5

_BASIS = {"n_max": 30, "tail_tolerance": 1e-6}
_PULSES = {"t0": TAU, "width": WIDTH, "period": TAU, "count": None, "monochromatic": False}
FIG4_TIMES = ["2tau - 2T", "2tau - 1.8T", "2tau - 0.4T", "2tau", "2tau + 0.6T"]


@dataclass(frozen=True)
class ScenarioCatalogEntry:
    name: str
    description: str
    tree: dict

    @property
    def expected_checks(self) -> list:
        return self.tree.get("checks", [])

    def config(self) -> ScenarioConfig:
        tree = copy.deepcopy(self.tree)
        tree.setdefault("output_dir", f"out/{self.name}")
        return resolve(tree, f"catalog:{self.name}")


def _entry(name, description, **tree):
    return ScenarioCatalogEntry(name, description, {"name": name, **tree})


ENTRIES = [
    _entry(
        "fig2", "continuous drive, delta=-2, chi=5, drive=7: relaxation to a two-humped steady state",
        model={"delta": -2.0, "chi": 5.0, "drive": 7.0},
        pulses={"monochromatic": True},
        basis=_BASIS,
        evolution={"t_end": 20.0, "sample_step": 0.05},
        observables={"populations": 5, "wigner": {"times": [20.0]}},
        checks=[{"kind": "steady_state", "window": 2.0, "tol": 1e-6},
                {"kind": "two_humps", "max_negativity": 1e-3},
                {"kind": "symmetry", "max_defect": 1e-6}],
    ),
    _entry(
        "fig3", "pulsed, delta=-2, chi=5, drive=10, tau=4, T=0.5: periodic regime and |0>+|2> window",
        # phi = pi orients the pump so the window state is (|0> + |2>)/sqrt 2
        model={"delta": -2.0, "chi": 5.0, "drive": 10.0, "phi": math.pi},
        pulses=_PULSES,
        basis=_BASIS,
        evolution={"t_end": 20.0, "sample_step": 0.01},
        observables={"populations": 5, "fidelity": {0: 1.0, 2: 1.0}, "wigner": {"times": FIG4_TIMES}},
        checks=[{"kind": "periodicity", "after": 10.0, "rel_tol": 1e-3},
                {"kind": "superposition_window", "after": 8.0},
                {"kind": "symmetry", "max_defect": 1e-6},
                {"kind": "wigner_normalized", "tol": 1e-3}],
    ),
    _entry(
        "fig4", "fig3 parameters: occupation and Wigner snapshots through the second pulse",
        model={"delta": -2.0, "chi": 5.0, "drive": 10.0, "phi": math.pi},
        pulses=_PULSES,
        basis=_BASIS,
        evolution={"t_end": 2 * TAU + 2 * WIDTH, "sample_step": 0.05},
        observables={"populations": 5, "fidelity": {0: 1.0, 2: 1.0}, "wigner": {"times": FIG4_TIMES}},
        checks=[{"kind": "symmetry", "max_defect": 1e-6},
                {"kind": "wigner_normalized", "tol": 1e-3}],
    ),
    _entry(
        "fig5", "pulsed at two-quanta resonance, delta=-10, chi=5, drive=10.3, tau=4, T=0.5: |2> production",
        model={"delta": -10.0, "chi": 5.0, "drive": 10.3},
        pulses=_PULSES,
        basis=_BASIS,
        evolution={"t_end": 14.0, "sample_step": 0.01},
        observables={"populations": 5},
        checks=[{"kind": "max_population", "level": 2, "after": 10.0, "min": 0.5, "max": 0.7}],
    ),
    _entry(
        "fig6", "fig5 parameters: Wigner snapshots near the |2> maximum",
        model={"delta": -10.0, "chi": 5.0, "drive": 10.3},
        pulses=_PULSES,
        basis=_BASIS,
        evolution={"t_end": 2 * TAU + 2 * WIDTH, "sample_step": 0.05},
        observables={"populations": 5, "fidelity": {2: 1.0},
                     "wigner": {"times": ["2tau - 0.8T", "2tau - 0.25T", "2tau + 0.8T"]}},
        checks=[{"kind": "symmetry", "max_defect": 1e-6},
                {"kind": "wigner_normalized", "tol": 1e-3}],
    ),
    _entry(
        "decay", "undriven decay of |1>: analytic P1 = exp(-t) and master/QSD agreement",
        method="both",
        model={"delta": 0.0, "chi": 0.0, "drive": 0.0},
        pulses={"monochromatic": True},
        basis={"n_max": 10, "tail_tolerance": 1e-6},
        initial_state={"fock": 1},
        evolution={"t_end": 5.0, "sample_step": 0.05},
        qsd={"n_trajectories": 500, "dt": 1e-3, "base_seed": 0},
        observables={"populations": 3},
        checks=[{"kind": "decay", "level": 1, "rel_tol": 1e-6},
                {"kind": "methods_agree"}],
    ),
]

CATALOG = {e.name: e for e in ENTRIES}


def get(name: str) -> ScenarioCatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise ConfigError(f"no catalog entry {name!r}; available: {', '.join(CATALOG)}") from None
