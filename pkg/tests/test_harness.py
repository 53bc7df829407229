import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from mginf import dists, harness
from mginf.cli import load_toml
from mginf.dists import HolderClass
from mginf.estimators import EstimatorConfig

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def small_g_spec(**kw):
    base = dict(
        target="g", ladder=[(0.125, 1024), (0.125, 2048)], replicates=20,
        estimator=EstimatorConfig(x0=1.0, ell=3, h="auto", lam=1.0,
                                  holder=HolderClass(2.0, math.exp(-0.5), (0.5, 1.5), 2.0)),
        dist=dists.Exponential(1.0), lam=1.0, seed=3)
    base.update(kw)
    return harness.ExperimentSpec(**base)


def test_run_risk_is_reproducible(tmp_path):
    a = harness.run_risk(small_g_spec())
    b = harness.run_risk(small_g_spec())
    assert a.to_json() == b.to_json()
    assert all(r.rmse >= 0 and not r.aborted for r in a.rungs)
    c = harness.run_risk(small_g_spec(seed=4))
    assert c.rungs[0].rmse != a.rungs[0].rmse


def test_report_files(tmp_path):
    rep = harness.run_risk(small_g_spec(output=str(tmp_path)))
    rows = list(csv.reader((tmp_path / "risk_g.csv").open()))
    assert tuple(rows[0]) == harness.CSV_HEADER == ("t", "delta", "h", "rmse", "se", "bound")
    assert len(rows) == 3
    summary = json.loads((tmp_path / "risk_g.json").read_text())
    assert summary["slope"] == pytest.approx(rep.slope)
    assert summary["truth"] == pytest.approx(1 - math.exp(-1))


def test_default_output_dir(monkeypatch, tmp_path):
    monkeypatch.setenv(harness.OUTPUT_ENV, str(tmp_path))
    assert harness.default_output_dir() == tmp_path


def test_fit_slope_on_power_law():
    T = np.array([512, 1024, 2048, 4096])
    slope, se = harness.fit_slope(T, 3.0 * T**-0.4)
    assert slope == pytest.approx(-0.4, abs=1e-12)
    assert se == pytest.approx(0.0, abs=1e-12)
    assert math.isnan(harness.fit_slope([1.0], [1.0])[0])


def test_counting_rung_matches_poisson_variance():
    spec = harness.ExperimentSpec(target="lambda_up", ladder=[(0.5, 64)], replicates=2000,
                                  dist=dists.Exponential(1.0), lam=2.0, seed=1)
    r = harness.run_rung(spec, 0)
    # rmse^2 vs lambda / T, with the delta-method standard error of rmse^2
    assert abs(r.rmse**2 - 2.0 / 32.0) < 3 * (2 * r.rmse * r.se)
    assert r.bound == pytest.approx(math.sqrt(2.0 / 32.0))


def test_infeasible_window_aborts_rung():
    spec = small_g_spec(estimator=EstimatorConfig(x0=1.0, ell=3, h=0.1, lam=1.0), ladder=[(0.125, 512)])
    r = harness.run_rung(spec, 0)
    assert r.aborted and r.failures == spec.replicates and math.isnan(r.rmse)


def test_spec_validation():
    with pytest.raises(ValueError):
        small_g_spec(target="mu")
    with pytest.raises(ValueError):
        small_g_spec(replicates=1)
    with pytest.raises(ValueError):
        small_g_spec(ladder=[])
    with pytest.raises(ValueError):
        harness.ExperimentSpec(target="theta", ladder=[(0.1, 10)], replicates=2)


@pytest.mark.parametrize("name", ["risk_g.toml", "risk_lambda.toml", "risk_theta.toml"])
def test_shipped_configs_parse(name):
    spec = harness.ExperimentSpec.from_config(load_toml(CONFIGS / name))
    assert [n * d for d, n in spec.ladder] == [512, 1024, 2048, 4096, 8192]
    assert spec.replicates == 200 and spec.seed == 0
    assert spec.estimator.ell == 3


def test_theta_truth_is_analytic():
    spec = harness.ExperimentSpec.from_config(load_toml(CONFIGS / "risk_theta.toml"))
    assert harness.truth_value(spec) == pytest.approx(-math.exp(-spec.estimator.x0))


def test_oracle_suite():
    a = harness.run_oracle_suite(seed=5, replicates=20_000)
    b = harness.run_oracle_suite(seed=5, replicates=20_000)
    assert [(r.name, r.passed, r.statistic) for r in a] == [(r.name, r.passed, r.statistic) for r in b]
    assert all(r.passed for r in a), harness.format_table(a)
    names = {r.name for r in a}
    assert {"log_mgf n=4 expansion", "poisson marginal chi-square"} <= names
    table = harness.format_table(a)
    assert table.count("PASS") == len(a)


def test_oracle_csv(tmp_path):
    res = harness.run_oracle_suite(seed=0, replicates=2000)
    path = harness.write_oracle_csv(res, tmp_path / "o.csv")
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["check", "passed", "statistic", "threshold"]
    assert len(rows) == len(res) + 1
