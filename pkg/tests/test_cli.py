import json

import numpy as np
import pytest
from click.testing import CliRunner

from cgkdm.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def write(path, rows, header=("x", "y")):
    lines = [",".join(header)] + [",".join(repr(float(v)) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture
def comonotone_csv(tmp_path):
    x = np.arange(1.0, 31.0)
    return write(tmp_path / "mono.csv", np.column_stack([x, np.exp(x / 10)]))


@pytest.fixture
def noise_csv(tmp_path):
    rng = np.random.default_rng(3)
    return write(tmp_path / "noise.csv", rng.standard_normal((60, 3)), ("a", "b", "c"))


def test_measure_comonotone(runner, comonotone_csv):
    res = runner.invoke(main, ["measure", comonotone_csv, "--sigma", "1", "--sigma", "0.2"])
    assert res.exit_code == 0, res.output
    lines = dict(l.split("\t") for l in res.output.strip().splitlines())
    assert lines["I[sigma=1]"] == "1.000000"
    assert lines["I[sigma=0.2]"] == "1.000000"
    assert lines["kendall"] == "1.000000"


def test_measure_json_multivariate(runner, noise_csv):
    res = runner.invoke(main, ["measure", noise_csv, "--format", "json"])
    assert res.exit_code == 0
    doc = json.loads(res.output)
    assert doc["d"] == 3 and "spearman_rho2" in doc["measures"]
    assert 0 <= doc["measures"]["I[sigma=1]"] <= 1


def test_usage_errors(runner, comonotone_csv, tmp_path):
    assert runner.invoke(main, ["measure", comonotone_csv, "--sigma", "0"]).exit_code == 2
    assert runner.invoke(main, ["measure", comonotone_csv, "--sigma", "-1"]).exit_code == 2
    assert runner.invoke(main, ["test", comonotone_csv, "--level", "1.5"]).exit_code == 2
    one = tmp_path / "one.csv"
    one.write_text("x\n1\n2\n3\n")
    assert runner.invoke(main, ["measure", str(one)]).exit_code == 2
    assert runner.invoke(main, ["experiment", "table9"]).exit_code == 2


def test_data_errors(runner, tmp_path):
    tied = write(tmp_path / "tied.csv", [[1, 2], [1, 3], [2, 4]])
    res = runner.invoke(main, ["measure", tied])
    assert res.exit_code == 3
    assert runner.invoke(main, ["measure", tied, "--ties", "jitter", "--no-baselines"]).exit_code == 0
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n3,oops\n4,5\n")
    assert runner.invoke(main, ["measure", str(bad)]).exit_code == 3


def test_independence_command(runner, comonotone_csv, tmp_path):
    res = runner.invoke(main, ["test", comonotone_csv, "--method", "sim", "--reps", "199", "--cache-dir", str(tmp_path)])
    assert res.exit_code == 0, res.output
    doc = json.loads(res.output)
    assert doc["reject"] is True
    assert doc["p_value"] == pytest.approx(1 / 200)
    assert doc["method"] == "sim"


def test_auto_picks_asymptotic_for_large_n(runner, tmp_path):
    rng = np.random.default_rng(0)
    path = write(tmp_path / "big.csv", rng.standard_normal((2000, 2)))
    doc = json.loads(runner.invoke(main, ["test", path]).output)
    assert doc["method"] == "gamma-asym"
    assert doc["metadata"]["requested_method"] == "auto"
    assert 0 < doc["p_value"] <= 1


def test_output_file(runner, comonotone_csv, tmp_path):
    out = tmp_path / "m.txt"
    res = runner.invoke(main, ["measure", comonotone_csv, "--no-baselines", "--output", str(out)])
    assert res.exit_code == 0 and res.output == ""
    assert out.read_text() == "I[sigma=1]\t1.000000\n"


def test_experiment_rerun_byte_identical(runner, tmp_path):
    args = ["experiment", "size-sweep", "--reps", "50", "-n", "20", "--sigma", "1", "--null-reps", "100",
            "--cache-dir", str(tmp_path / "c")]
    a = runner.invoke(main, args)
    b = runner.invoke(main, args)
    assert a.exit_code == 0, a.output
    assert a.output == b.output
    assert a.output.splitlines()[0].startswith("schema_version,")
    assert len(a.output.splitlines()) == 4


def test_experiment_json(runner):
    res = runner.invoke(main, ["experiment", "table2", "-n", "500", "--format", "json"])
    doc = json.loads(res.output)
    assert doc["schema_version"] == 1
    assert len(doc["rows"]) == 16
    assert all(r["value"] == pytest.approx(1.0) for r in doc["rows"] if r["metric"] == "I")


def test_dump_roundtrip(runner, tmp_path):
    res = runner.invoke(main, ["dump", "orientation", "-n", "5", "--signs", "+-+"])
    assert res.exit_code == 0
    assert res.output.splitlines()[0] == "x1,x2,x3"
    assert res.output.splitlines()[2] == "2.0,-2.0,2.0"
    out = tmp_path / "bvn.csv"
    assert runner.invoke(main, ["dump", "bvn", "--rho", "0.5", "-n", "50", "--output", str(out)]).exit_code == 0
    assert runner.invoke(main, ["measure", str(out)]).exit_code == 0
    assert runner.invoke(main, ["dump", "mvn-equi", "-d", "5", "--rho", "-0.3"]).exit_code == 3
