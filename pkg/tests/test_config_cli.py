"""Scenario config parsing and the command-line front end."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from randmix.cli import main, run_validation
from randmix.config import load_config, parse_config
from randmix.errors import AdmissibilityError, ConfigError
from randmix.heatkernel import HeatKernelModel
from randmix.mixers import DiscretePrior, GaussBump
from randmix.pricing import PricingModel
from randmix.processes import GammaCPParams, VGParams

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

BASE = """
[model]
kind = "fh"

[model.driver]
type = "gamma"
m = 0.5
kappa = 0.5

[model.mixer]
type = "binary_exp_decay"
c = -2.0
b = 0.03

[model.prior]
type = "binary"
p1 = 0.65

[model.info]
type = "brownian_linear"
sigma = 0.1

[model.initial_curve]
type = "flat"
rate = 0.04

[run]
seed = 42
n_paths = 3
horizon = 2.0
dt = 0.25
bond_maturity = 5.0
times = [1.0]
tenors = [1.0, 2.0, 5.0]
expiries = [3.0, 4.0]
strikes = [0.7, 0.8, 0.9]
valuation_time = 1.0
"""


def write_config(tmp_path, text, name="scenario.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# --- parsing --------------------------------------------------------------------


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.toml")), ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    cfg = load_config(path)
    assert cfg.kind in ("fh", "heat_kernel")
    assert isinstance(cfg.model, (PricingModel, HeatKernelModel))


def test_parse_round_trip_values(tmp_path):
    cfg = load_config(write_config(tmp_path, BASE))
    assert cfg.kind == "fh"
    assert cfg.model.spec.driver.m == 0.5
    assert cfg.model.spec.mixer.c == -2.0
    assert cfg.run.seed == 42
    assert cfg.run.tenors == (1.0, 2.0, 5.0)
    assert cfg.bond_maturity == 5.0
    assert cfg.output.format == "csv"  # defaulted


def test_unknown_key_rejected_at_every_level(tmp_path):
    for needle, extra in [
        ("(top level)", "\n[extra]\nx = 1\n"),
        ("model", "\n[model.extras]\nx = 1\n"),
        ("model.driver", "\n[model.driver.sub]\nx = 1\n"),
        ("model.mixer", None),
        ("run", "\n[run.sub]\nx = 1\n"),
    ]:
        if extra is None:
            text = BASE.replace("c = -2.0", "c = -2.0\ncc = 1.0")
        else:
            text = BASE + extra
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(write_config(tmp_path, text))
        try:
            load_config(write_config(tmp_path, text))
        except ConfigError as e:
            assert needle in str(e)


def test_missing_required_key(tmp_path):
    text = BASE.replace('m = 0.5\nkappa = 0.5', "m = 0.5")
    with pytest.raises(ConfigError, match="missing required key 'kappa'"):
        load_config(write_config(tmp_path, text))


def test_wrong_value_types(tmp_path):
    with pytest.raises(ConfigError, match="must be a number"):
        load_config(write_config(tmp_path, BASE.replace("m = 0.5", 'm = "x"')))
    with pytest.raises(ConfigError, match="must be an integer"):
        load_config(write_config(tmp_path, BASE.replace("seed = 42", "seed = 4.5")))
    with pytest.raises(ConfigError, match="array of numbers"):
        load_config(write_config(tmp_path, BASE.replace("tenors = [1.0, 2.0, 5.0]", 'tenors = [1.0, "x"]')))
    with pytest.raises(ConfigError, match="must be one of"):
        load_config(write_config(tmp_path, BASE.replace('type = "binary"', 'type = "bin"')))


def test_not_toml_rejected(tmp_path):
    with pytest.raises(ConfigError, match="not valid TOML"):
        load_config(write_config(tmp_path, "model = [unclosed"))


def test_inadmissible_mixer_rejected_at_parse(tmp_path):
    text = BASE.replace("c = -2.0", "c = 2.0")
    with pytest.raises(AdmissibilityError) as exc:
        load_config(write_config(tmp_path, text))
    assert exc.value.witness is not None
    u, x, h = exc.value.witness
    assert h == pytest.approx(2.0)


def test_kind_driver_mismatch(tmp_path):
    text = BASE.replace('type = "gamma"\nm = 0.5\nkappa = 0.5',
                        'type = "ou"\ndelta = 0.02\nbeta = 0.5\nupsilon = 0.2\ny0 = 1.0')
    with pytest.raises(ConfigError, match="Levy driver"):
        load_config(write_config(tmp_path, text))


def test_gamma_cp_nested_driver():
    data = {
        "model": {
            "kind": "fh",
            "driver": {
                "type": "gamma_cp",
                "gamma": {"m": 0.5, "kappa": 0.5},
                "cp": {"lam": 2.0, "jump_mean": 1.0, "jump_std": 0.5},
            },
            "mixer": {"type": "binary_exp_decay", "c": -2.0, "b": 0.03},
            "mixer2": {"type": "binary_exp_decay", "c": -1.0, "b": 0.05},
            "prior": {"type": "binary", "p1": 0.5},
            "info": {"type": "brownian_linear", "sigma": 0.1},
            "initial_curve": {"type": "flat", "rate": 0.04},
        },
    }
    cfg = parse_config(data)
    assert isinstance(cfg.model.spec.driver, GammaCPParams)
    assert cfg.model.spec.mixer2 is not None


def test_vg_discrete_prior_quadrature_override():
    data = {
        "model": {
            "kind": "fh",
            "driver": {"type": "vg", "theta": -1.5, "sigma": 2.0, "nu": 0.25},
            "mixer": {"type": "gauss_bump", "c": 0.5, "b": 0.015},
            "prior": {"type": "discrete", "points": [2.0, 5.0], "weights": [0.4, 0.6]},
            "info": {"type": "brownian_linear", "sigma": 0.1},
            "initial_curve": {"type": "flat", "rate": 0.04},
            "quadrature": {"u_max": 150.0, "nodes_per_panel": 12},
        },
    }
    cfg = parse_config(data)
    assert isinstance(cfg.model.spec.driver, VGParams)
    assert isinstance(cfg.model.spec.mixer, GaussBump)
    assert isinstance(cfg.model.spec.prior, DiscretePrior)
    assert cfg.model.quad.u_max == 150.0
    assert cfg.model.quad.nodes_per_panel == 12


def test_run_settings_validated(tmp_path):
    with pytest.raises(ConfigError, match="n_paths"):
        load_config(write_config(tmp_path, BASE.replace("n_paths = 3", "n_paths = 0")))
    with pytest.raises(ConfigError, match="tenors"):
        load_config(write_config(tmp_path, BASE.replace("tenors = [1.0, 2.0, 5.0]", "tenors = [0.0]")))


# --- simulate-paths ---------------------------------------------------------------


def test_simulate_paths_outputs(tmp_path):
    cfg_path = write_config(tmp_path, BASE)
    out = tmp_path / "run1"
    assert main(["simulate-paths", "--config", cfg_path, "--out", str(out)]) == 0
    for name in ("driver", "info", "short_rate", "bond_price", "pricing_kernel"):
        assert (out / f"{name}.csv").exists()
    with open(out / "short_rate.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["t", "path_0", "path_1", "path_2"]
    assert len(rows) == 1 + 9  # header + horizon 2.0 / dt 0.25 + t=0
    t0 = [float(v) for v in rows[1][1:]]
    assert t0 == pytest.approx([0.04] * 3, abs=1e-12)
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["command"] == "simulate-paths"
    assert meta["seed"] == 42
    assert meta["rng_streams"] == {"driver": 0, "info": 1, "mixer": 2}
    assert "short_rate.csv" in meta["files"]


def test_simulate_paths_reproducible(tmp_path):
    cfg_path = write_config(tmp_path, BASE)
    outs = []
    for name in ("a", "b", "c"):
        out = tmp_path / name
        seed = ["--seed", "7"] if name != "c" else ["--seed", "8"]
        assert main(["simulate-paths", "--config", cfg_path, "--out", str(out)] + seed) == 0
        outs.append((out / "short_rate.csv").read_bytes())
    assert outs[0] == outs[1]
    assert outs[0] != outs[2]


def test_simulate_paths_json_format(tmp_path):
    cfg_path = write_config(tmp_path, BASE)
    out = tmp_path / "runj"
    assert main(["simulate-paths", "--config", cfg_path, "--out", str(out), "--format", "json"]) == 0
    doc = json.loads((out / "bond_price.json").read_text())
    assert doc["columns"][0] == "t"
    assert len(doc["rows"]) == 9
    prices = np.array([row[1:] for row in doc["rows"]])
    assert np.all(prices > 0) and np.all(prices <= 1.0 + 1e-12)


def test_simulate_paths_maturity_before_horizon_fails(tmp_path):
    text = BASE.replace("bond_maturity = 5.0", "bond_maturity = 1.0")
    assert main(["simulate-paths", "--config", write_config(tmp_path, text)]) == 2


def test_simulate_paths_heat_kernel(tmp_path):
    cfg_path = str(CONFIG_DIR / "fig13.toml")
    out = tmp_path / "hk"
    assert main(["simulate-paths", "--config", cfg_path, "--out", str(out), "--paths", "2"]) == 0
    with open(out / "short_rate.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["t", "path_0", "path_1"]
    # the quadratic mixer carries a factor t, so the short rate starts at zero
    assert [float(v) for v in rows[1][1:]] == [0.0, 0.0]
    r = np.array([[float(v) for v in row[1:]] for row in rows[1:]])
    assert np.all(r >= 0.0)
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["rng_streams"] == {"ou": 0, "info": 1, "mixer": 2}


# --- yield-curves -----------------------------------------------------------------


def test_yield_curves_outputs(tmp_path):
    cfg_path = write_config(tmp_path, BASE)
    out = tmp_path / "yc"
    assert main(["yield-curves", "--config", cfg_path, "--out", str(out)]) == 0
    with open(out / "yield_curves.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["t", "tau", "P", "Y", "path_id"]
    assert len(rows) == 1 + 1 * 3 * 3  # times x paths x tenors
    for row in rows[1:]:
        t, tau, p, y, pid = (float(v) for v in row)
        assert 0.0 < p < 1.0
        assert y == pytest.approx(-np.log(p) / tau, rel=1e-12)


def test_yield_curves_requires_times(tmp_path):
    text = BASE.replace("times = [1.0]", "times = []")
    assert main(["yield-curves", "--config", write_config(tmp_path, text)]) == 2


# --- option-surface ---------------------------------------------------------------


def test_option_surface_outputs(tmp_path):
    cfg_path = write_config(tmp_path, BASE)
    out = tmp_path / "surf"
    assert main(["option-surface", "--config", cfg_path, "--out", str(out), "--paths", "400"]) == 0
    with open(out / "option_surface.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["expiry", "strike", "price", "std_error"]
    assert len(rows) == 1 + 2 * 3
    table = np.array([[float(v) for v in row] for row in rows[1:]])
    # within each expiry, price decreases in strike
    for expiry in (3.0, 4.0):
        block = table[table[:, 0] == expiry]
        assert np.all(np.diff(block[:, 2]) <= 1e-15)


def test_option_surface_rejects_heat_kernel(tmp_path):
    assert main(["option-surface", "--config", str(CONFIG_DIR / "fig13.toml")]) == 2


# --- validate ---------------------------------------------------------------------


def test_validate_passes_and_writes_report(tmp_path, capsys):
    out = tmp_path / "rep"
    code = main(["validate", "--config", str(CONFIG_DIR / "fig02iii.toml"), "--out", str(out)])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] is True
    by_name = {c["name"]: c for c in report["checks"]}
    # all prior mass on the u-constant mixer branch: short rate pinned to 4%
    assert by_name["degenerate_flat_rate"]["details"]["applicable"] is True
    assert by_name["degenerate_flat_rate"]["details"]["max_abs_error"] < 1e-6
    assert by_name["initial_curve_reproduction"]["details"]["max_abs_error"] < 1e-6
    disk = json.loads((out / "validate_report.json").read_text())
    assert disk == report


def test_validate_inadmissible_config_reports_witness(tmp_path, capsys):
    bad = BASE.replace("c = -2.0", "c = 2.0")
    code = main(["validate", "--config", write_config(tmp_path, bad)])
    assert code == 1
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] is False
    assert report["error"]["type"] == "AdmissibilityError"
    assert report["error"]["witness"][2] == pytest.approx(2.0)


def test_validate_heat_kernel_checks(capsys):
    code = main(["validate", "--config", str(CONFIG_DIR / "fig13.toml")])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    names = [c["name"] for c in report["checks"]]
    assert "fh_equivalence" in names
    assert all(c["passed"] for c in report["checks"])


def test_run_validation_importable(tmp_path):
    cfg = load_config(write_config(tmp_path, BASE))
    checks = run_validation(cfg)
    assert all(c["passed"] for c in checks)
    assert {c["name"] for c in checks} >= {"admissibility", "initial_curve_reproduction",
                                           "positivity_and_monotonicity", "filter_mass"}
