import csv
import json

import numpy as np
import pytest

from rsortho import experiments as ex
from rsortho.power_opt import OptimizerConfig
from rsortho.ris_baseline import RisOptConfig


def tiny_spec(**kw):
    base = dict(
        e0_grid=[0.0, 1.0],
        trials=3,
        seed=4,
        optimizer=OptimizerConfig(max_iters=60, restarts=2),
        ris=RisOptConfig(restarts=2, max_iters=30),
    )
    base.update(kw)
    return ex.ExperimentSpec(**base)


def read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_spec_defaults():
    s = ex.ExperimentSpec()
    assert (s.m, s.k) == (4, 2)
    assert [s.n_for(k) for k in ("aris", "fris", "ris")] == [8, 4, 8]
    assert s.e0_grid[0] == pytest.approx(1e-2) and s.e0_grid[-1] == pytest.approx(1e2)
    with pytest.raises(ValueError):
        ex.ExperimentSpec(trials=0)
    with pytest.raises(ValueError):
        ex.ExperimentSpec(e0_grid=[])


def test_load_spec_yaml_and_overrides(tmp_path):
    path = tmp_path / "spec.yaml"
    path.write_text("m: 5\nk: 3\ntrials: 7\noptimizer:\n  restarts: 3\ne0_grid: [0.1, 1]\n")
    s = ex.load_spec(path, trials=2, seed=None, optimizer={"max_iters": 10})
    assert (s.m, s.k, s.trials, s.seed) == (5, 3, 2, 0)
    assert s.optimizer.restarts == 3 and s.optimizer.max_iters == 10
    assert s.n_for("aris") == 15
    bad = tmp_path / "bad.yaml"
    bad.write_text("mm: 4\n")
    with pytest.raises(ValueError):
        ex.load_spec(bad)


def test_trial_metrics():
    spec = tiny_spec()
    zero = ex.run_trial(spec, 0.0, "aris", 0)
    assert zero["power_per_element"] <= 1e-10
    for kind in ("aris", "fris"):
        r = ex.run_trial(spec, 1.0, kind, 1)
        if np.isfinite(r["beta_unit_power"]):
            assert r["beta_unit_power"] >= r["beta"] * (1 - 1e-9)
    ris = ex.run_trial(spec, 1.0, "ris", 0)
    assert ris["power_per_element"] == 1.0
    assert ris["gain_min"] <= ris["gain_mean"]


def test_aggregate():
    mean, se, n = ex._aggregate([1.0, 3.0, float("nan")])
    assert (mean, n) == (2.0, 2)
    assert se == pytest.approx(np.std([1, 3], ddof=1) / np.sqrt(2))
    assert ex._aggregate([float("nan")])[2] == 0


def test_sweep_outputs(tmp_path):
    spec = tiny_spec()
    ex.run_sweep(spec, tmp_path)
    for name in ("fig1_power.csv", "fig1_gain.csv", "fig2_gain.csv"):
        text = (tmp_path / name).read_bytes()
        assert b"\r" not in text
        assert text.splitlines()[0].decode() == ",".join(ex.CSV_HEADER)
    rows = read(tmp_path / "fig1_power.csv")
    assert len(rows) == 2 * 3
    for r in rows:
        assert r["complete"] == "1" and r["trials"] == "3"
        if r["e0"] == "0.0" and r["kind"] != "ris":
            assert float(r["mean"]) <= 1e-10
    manifest = json.loads((tmp_path / "run_manifest.json").read_text())
    assert manifest["complete"] and manifest["spec"]["seed"] == 4
    assert "numpy" in manifest["versions"]
    assert "fig1_power.csv" in (tmp_path / "plot_figures.py").read_text()


def test_worker_pool_matches_serial(tmp_path):
    spec = tiny_spec(e0_grid=[1.0], trials=2)
    ex.run_sweep(spec, tmp_path / "a")
    spec.workers = 2
    ex.run_sweep(spec, tmp_path / "b")
    for name in ("fig1_power.csv", "fig2_gain.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_interrupt_writes_partial_results(tmp_path, monkeypatch):
    real = ex.run_trial
    calls = {"n": 0}

    def flaky(*args):
        calls["n"] += 1
        if calls["n"] > 4:
            raise KeyboardInterrupt
        return real(*args)

    monkeypatch.setattr(ex, "run_trial", flaky)
    with pytest.raises(KeyboardInterrupt):
        ex.run_sweep(tiny_spec(), tmp_path)
    rows = read(tmp_path / "fig1_power.csv")
    assert any(r["complete"] == "0" for r in rows)
    assert not json.loads((tmp_path / "run_manifest.json").read_text())["complete"]


def test_selftest_and_negative_control():
    checks = ex.selftest(instances=2)
    assert all(ok for _, ok, _, _ in checks)
    bad = ex.selftest(instances=2, corrupt_gradient=True)
    failed = [name for name, ok, _, _ in bad if not ok]
    assert failed and all("gradient" in name for name in failed)
