import json
import math

import numpy as np
import pytest

from pdaosim import catalog
from pdaosim.checks import compare_methods
from pdaosim.cli import main
from pdaosim.config import landmark_time, load_config, parse_text, resolve
from pdaosim.errors import ConfigError

SMALL = """
name: small
method: both
model: {delta: -2.0, chi: 5.0, drive: 4.0}
pulses: {t0: 0.5, width: 0.5, period: 2.0, monochromatic: false}
basis: {n_max: 16}
evolution: {t_end: 1.0, sample_step: 0.1}
qsd: {n_trajectories: 20, base_seed: 3}
observables:
  populations: 3
  fidelity: {0: 1, 2: 1}
  wigner: {times: [1.0], grid: {n_x: 41, n_y: 41}, symmetry_grid: {n_r: 21, n_theta: 16}}
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(SMALL)
    return path


def test_defaults_applied(tmp_path):
    path = tmp_path / "min.yaml"
    path.write_text("model: {chi: 1.0}\n")
    cfg = load_config(path)
    assert cfg.model.nbath == 0 and cfg.model.phi == 0
    assert cfg.basis.n_max == 50
    assert cfg.initial_state.amplitudes[0] == 1
    assert cfg.method == "master" and cfg.qsd is None


def test_qsd_method_gets_qsd_section():
    cfg = resolve({"method": "qsd"})
    assert cfg.qsd.n_trajectories == 500 and cfg.qsd.dt == 1e-3


def test_parse_error_has_position():
    with pytest.raises(ConfigError, match="line 2, column 10"):
        parse_text("model:\n  delta: : 1\n")


def test_validation_lists_every_problem():
    with pytest.raises(ConfigError) as err:
        resolve({"method": "magic", "model": {"chi": -1.0, "spin": 2}, "basis": {"n_max": 0},
                 "checks": [{"kind": "nope"}]})
    text = str(err.value)
    for needle in ("method", "chi must be", "model.spin: unknown key", "n_max", "unknown kind 'nope'"):
        assert needle in text


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/config.yaml")


@pytest.mark.parametrize("expr, expected", [("2tau - 0.4T", 7.8), ("2tau", 8.0), ("2tau + 0.6T", 8.3),
                                            ("tau", 4.0), ("-T", -0.5), (3.25, 3.25)])
def test_landmarks(expr, expected):
    assert landmark_time(expr, 4.0, 0.5) == pytest.approx(expected)


def test_catalog_parameters():
    fig2 = catalog.get("fig2").config()
    assert (fig2.model.delta, fig2.model.chi, fig2.model.drive) == (-2.0, 5.0, 7.0)
    assert fig2.pulses.monochromatic
    for name in ("fig3", "fig4"):
        c = catalog.get(name).config()
        assert (c.model.delta, c.model.chi, c.model.drive) == (-2.0, 5.0, 10.0)
        assert (c.pulses.period, c.pulses.width) == (4.0, 0.5)
    for name in ("fig5", "fig6"):
        c = catalog.get(name).config()
        assert (c.model.delta, c.model.chi, c.model.drive) == (-10.0, 5.0, 10.3)
        assert (c.pulses.period, c.pulses.width) == (4.0, 0.5)
    fig3 = catalog.get("fig3").config()
    np.testing.assert_allclose(fig3.observables.wigner.times, [7.0, 7.1, 7.8, 8.0, 8.3])
    assert len({e.name for e in catalog.ENTRIES}) == len(catalog.ENTRIES)
    with pytest.raises(ConfigError):
        catalog.get("fig9")


def test_cli_catalog_list_and_show(capsys):
    assert main(["catalog", "list"]) == 0
    assert "fig5" in capsys.readouterr().out
    assert main(["catalog", "show", "fig5"]) == 0
    assert "drive: 10.3" in capsys.readouterr().out
    assert main(["catalog", "show", "fig9"]) == 2


def test_cli_run_both_and_reproducible(small_config, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(small_config), "--out", str(out1)]) == 0
    assert main(["run", str(small_config), "--out", str(out2)]) == 0
    header = (out1 / "timeseries.csv").read_text().splitlines()[0].split(",")
    assert header == ["time", "mean_n", "p0", "p1", "p2", "p3", "trace_error", "tail_mass", "fidelity",
                      "qsd_mean_n", "qsd_stderr"]
    for name in ("timeseries.csv", "wigner_00.csv", "comparison.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert manifest["status"] == "complete" and manifest["base_seed"] == 3
    assert manifest["config"]["model"]["drive"] == 4.0
    sidecar = json.loads((out1 / "wigner_00.json").read_text())
    for key in ("kind", "n_x", "min_value", "integral", "symmetry_defect", "negativity_volume", "units"):
        assert key in sidecar
    # 17 significant digits round-trip exactly
    row = (out1 / "timeseries.csv").read_text().splitlines()[3].split(",")
    assert float(row[1]) == float(format(float(row[1]), ".17g"))


def test_cli_overrides(small_config, tmp_path):
    out = tmp_path / "o"
    assert main(["run", str(small_config), "--method", "qsd", "--seed", "8", "--trajectories", "3",
                 "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["base_seed"] == 8 and manifest["n_trajectories"] == 3
    assert manifest["master_dt"] is None


def test_cli_single_trajectory_comparison_fails_cleanly(small_config, tmp_path, capsys):
    out = tmp_path / "one"
    assert main(["run", str(small_config), "--trajectories", "1", "--out", str(out)]) == 0
    assert "insufficient statistics" in capsys.readouterr().out
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["comparison"]["passed"] is False


def test_cli_config_error_exit(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("model: {chi: -1}\n")
    assert main(["run", str(bad)]) == 2


def test_cli_truncation_exit(tmp_path):
    cfg = tmp_path / "trunc.yaml"
    cfg.write_text("model: {drive: 2.0}\nbasis: {n_max: 6}\nevolution: {t_end: 3.0}\n")
    out = tmp_path / "t"
    assert main(["run", str(cfg), "--out", str(out)]) == 4
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "partial" and "tail mass" in manifest["error"]


def test_compare_methods_verdicts():
    t = np.linspace(0, 1, 20)
    m = np.exp(-t)
    ok = compare_methods(t, m, m + 0.001, np.full(20, 0.001), 500)
    assert ok.passed and ok.fraction == 1
    bad = compare_methods(t, m, m + 0.1, np.full(20, 0.001), 500)
    assert not bad.passed and math.isinf(compare_methods(t, m, m + 1, np.zeros(20), 500).z[0])
    one = compare_methods(t, m, m, np.zeros(20), 1)
    assert not one.passed and "insufficient statistics" in one.message
