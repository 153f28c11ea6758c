"""Shared fixtures. The physics runs are expensive, so each one is done once per session."""
import time

import numpy as np
import pytest

from pdaosim import catalog
from pdaosim.config import override
from pdaosim.fock import make_basis
from pdaosim.model import ModelParams, PulseTrain
from pdaosim.qsd import QsdConfig, ensemble_average
from pdaosim.runner import run_scenario

FIG3_PARAMS = ModelParams(delta=-2.0, chi=5.0, drive=10.0, phi=np.pi)
FIG3_TRAIN = PulseTrain(t0=4.0, width=0.5, period=4.0)


def _run_entry(name, out_dir):
    cfg = override(catalog.get(name).config(), out=out_dir)
    started = time.perf_counter()
    outcome = run_scenario(cfg)
    outcome.wall_time = time.perf_counter() - started
    return outcome


@pytest.fixture(scope="session")
def fig2_run(tmp_path_factory):
    return _run_entry("fig2", tmp_path_factory.mktemp("fig2"))


@pytest.fixture(scope="session")
def fig3_run(tmp_path_factory):
    return _run_entry("fig3", tmp_path_factory.mktemp("fig3"))


@pytest.fixture(scope="session")
def fig5_run(tmp_path_factory):
    return _run_entry("fig5", tmp_path_factory.mktemp("fig5"))


@pytest.fixture(scope="session")
def decay_run(tmp_path_factory):
    return _run_entry("decay", tmp_path_factory.mktemp("decay"))


@pytest.fixture(scope="session")
def fig3_qsd():
    """500-trajectory ensemble on the fig3 scenario, sampled every 0.1 up to t = 12."""
    times = np.round(np.arange(0.0, 12.0 + 1e-9, 0.1), 10)
    cfg = QsdConfig(500, times, make_basis(30), dt=1e-3, base_seed=1)
    return ensemble_average(cfg, FIG3_PARAMS, FIG3_TRAIN)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
