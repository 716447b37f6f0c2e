import csv
import io
import json
import math

import numpy as np
import pytest

from cgkdm.errors import InvalidInput
from cgkdm.experiments import (
    CSV_COLUMNS,
    ExperimentConfig,
    ResultRow,
    bootstrap_se,
    cell_tag,
    empirical_size,
    gamma_ks_distance,
    power,
    replicate_seed,
    rows_to_csv,
    rows_to_json,
    run_experiment,
    sampling_distribution,
    table1_case,
    table2_rows,
)
from cgkdm.datagen import Scenario


def test_config_defaults_and_validation():
    assert ExperimentConfig("table1").replicates() == 2000
    assert ExperimentConfig("table1", full=True).replicates() == 10000
    assert ExperimentConfig("table4", reps=7).replicates() == 7
    with pytest.raises(InvalidInput):
        ExperimentConfig("table9")
    with pytest.raises(InvalidInput):
        ExperimentConfig("table1", reps=0)


def test_result_row_requires_error_bar():
    with pytest.raises(InvalidInput):
        ResultRow("x", "s", {}, "m", 0.5, None, 10)
    ResultRow("x", "s", {}, "m", float("nan"), None, 10)
    ResultRow("x", "s", {}, "m", 0.5, None, 1)


def test_seeds_are_stable():
    assert cell_tag("a", 1) == cell_tag("a", 1) != cell_tag("a", 2)
    assert replicate_seed(0, 5, 3) == replicate_seed(0, 5, 3)
    assert replicate_seed(0, 5, 3) != replicate_seed(0, 5, 4)


def test_workers_do_not_change_results():
    sc = Scenario("bvn", rho=0.3)
    a = sampling_distribution(sc, 30, 1.0, 40, seed=2, workers=1)
    b = sampling_distribution(sc, 30, 1.0, 40, seed=2, workers=2)
    np.testing.assert_array_equal(a, b)


def test_table1_comonotone_case():
    rows = table1_case("g", 3, n=50)
    assert [r.metric for r in rows] == ["I_1", "I_0.2", "pearson", "kendall", "spearman", "dcor"]
    assert all(r.value == pytest.approx(1.0) for r in rows)
    assert all(r.reference == 1.0 for r in rows)


def test_table1_stand_in_note():
    rows = table1_case("h", 2, n=30)
    assert all("not reproducible" in r.note for r in rows)


def test_table2_rows():
    rows = table2_rows(n=300)
    assert len(rows) == 16
    assert all(r.value == pytest.approx(1.0, abs=1e-12) for r in rows if r.metric == "I")


def test_size_and_power_rows(tmp_path):
    r = empirical_size(20, 2, 1.0, 200, method="sim", null_reps=200)
    assert 0 <= r.value <= 0.2 and r.std_error > 0
    assert r.params["method"] == "sim"
    a = empirical_size(30, 2, 1.0, 100, method="gamma-asym")
    assert a.reference is None
    p = power(Scenario("bvn", rho=0.9), 40, 1.0, 50, method="gamma-asym")
    assert p.value > 0.9


def test_gamma_ks_distance_small_for_gamma_data():
    x = np.random.default_rng(0).gamma(2.0, 3.0, 4000)
    assert gamma_ks_distance(x) < 0.03
    assert gamma_ks_distance(np.random.default_rng(0).normal(size=4000) + 10) < 0.05


def test_bootstrap_se_of_mean():
    x = np.random.default_rng(1).normal(size=400)
    assert bootstrap_se(x, np.mean, 400) == pytest.approx(1 / math.sqrt(400), rel=0.2)


def test_serialization(tmp_path):
    cfg = ExperimentConfig("fig1", sigmas=[1.0])
    rows = run_experiment(cfg)
    assert len(rows) == 21
    text = rows_to_csv(rows)
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert tuple(parsed[0].keys()) == CSV_COLUMNS
    assert parsed[-1]["value"] == "1.0" or float(parsed[-1]["value"]) == pytest.approx(1.0)
    doc = json.loads(rows_to_json(rows, cfg))
    assert doc["config"]["experiment"] == "fig1"
    assert rows_to_csv(run_experiment(cfg)) == text


def test_errors_become_rows():
    rows = run_experiment(ExperimentConfig("table4", reps=5, n=[20], d=[2], sigmas=[1.0], null_reps=1))
    # one null replicate cannot give a variance, so the cell becomes an error row
    assert len(rows) == 1 and math.isnan(rows[0].value) and rows[0].note
