import csv
import io
import json
import math

import pytest
from click.testing import CliRunner

from epenc.cli import SCAN_HEADER, main, parse_theta, parse_x


@pytest.fixture
def runner():
    return CliRunner()


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


@pytest.mark.parametrize("text, value", [
    ("4pi", 4 * math.pi), ("6*pi", 6 * math.pi), ("pi", math.pi), ("pi/2", math.pi / 2),
    ("0.5pi", 0.5 * math.pi), ("12.566", 12.566), ("4 PI", 4 * math.pi),
])
def test_parse_theta(text, value):
    assert parse_theta(text) == value


def test_parse_x():
    assert parse_x("inf") == math.inf
    assert parse_x("2.5") == 2.5
    with pytest.raises(ValueError):
        parse_x("five")


def test_survive_all_modes(runner):
    res = runner.invoke(main, ["survive", "--x", "5", "--alpha-bar", "2", "--theta", "4pi", "--mode", "all"])
    assert res.exit_code == 0, res.output
    data = json.loads(res.output)
    assert set(data) == {"analytic", "quadrature", "tdse"}
    assert data["analytic"]["layout"] == "even"
    assert data["analytic"]["p1"] == pytest.approx(4.144377e-4, rel=1e-4)
    assert data["tdse"]["p1"] == pytest.approx(3.72377e-4, rel=1e-4)
    assert data["quadrature"]["p1"] > 0


def test_survive_odd(runner):
    res = runner.invoke(main, ["survive", "--x", "2", "--alpha-bar", "3", "--theta", "18.850"])
    assert res.exit_code == 0
    data = json.loads(res.output)["analytic"]
    assert data["layout"] == "odd"
    assert data["p1_alternate"] is None
    assert len(data["contributions"]) == 2
    assert data["contributions"][1]["total"] == [0.0, 0.0]


def test_survive_usage_errors(runner):
    res = runner.invoke(main, ["survive", "--x", "5", "--alpha-bar", "2"])
    assert res.exit_code == 2
    assert "--theta" in res.output
    assert runner.invoke(main, ["survive", "--x", "5", "--alpha-bar", "2", "--theta", "fourpi"]).exit_code == 2
    assert runner.invoke(main, ["survive", "--x", "-1", "--alpha-bar", "2", "--theta", "pi"]).exit_code == 2


def test_computational_error_exit_one(runner):
    # x < 1 has no on-axis pair: a computational failure, not a usage error
    res = runner.invoke(main, ["survive", "--x", "0.5", "--alpha-bar", "0.1", "--theta", "4pi"])
    assert res.exit_code == 1
    assert "error:" in res.output


def test_flagged_regime_exits_zero(runner):
    res = runner.invoke(main, ["survive", "--x", "2", "--alpha-bar", "3", "--theta", "0.001"])
    assert res.exit_code == 0
    assert "p1_exceeds_unity" in json.loads(res.output)["analytic"]["flags"]


def test_tps_rows(runner):
    res = runner.invoke(main, ["tps", "--x", "2", "--alpha-bar", "3", "--kmax", "4"])
    assert res.exit_code == 0
    rows = _rows(res.output)
    assert rows[0] == ["k", "side", "re_s", "im_s", "residual", "gamma", "phi", "arg_beta1"]
    assert len(rows) == 11
    assert [r[1] for r in rows[1:3]] == ["lower", "upper"]
    assert all(float(r[4]) < 1e-10 for r in rows[1:])


def test_tps_json(runner):
    res = runner.invoke(main, ["tps", "--x", "5", "--alpha-bar", "2", "--kmax", "1", "--format", "json"])
    data = json.loads(res.output)
    assert len(data) == 4
    assert data[0]["side"] == "right"


def test_trace(runner):
    res = runner.invoke(main, ["trace", "--x", "5", "--alpha-bar", "2", "--kmax", "0"])
    assert res.exit_code == 0, res.output
    rows = _rows(res.output)
    assert rows[0] == ["k", "side", "n", "re_s", "im_s", "gamma_drift", "terminal"]
    assert {r[2] for r in rows[1:]} == {"0", "1", "2"}
    assert max(abs(float(r[5])) for r in rows[1:]) < 1e-6


def test_scan_order_and_workers(runner):
    args = ["scan", "--x", "5", "--alpha-range", "0.5:3.0", "--grid", "1,6",
            "--theta", "4pi", "--theta", "6pi"]
    serial = runner.invoke(main, args)
    assert serial.exit_code == 0
    rows = _rows(serial.output)
    assert rows[0] == SCAN_HEADER
    assert len(rows) == 13
    assert [float(r[1]) for r in rows[1:7]] == sorted(float(r[1]) for r in rows[1:7])
    assert {r[4] for r in rows[1:]} <= {"even", "odd"}
    parallel = runner.invoke(main, args + ["--workers", "2"])
    assert parallel.output == serial.output


def test_scan_usage(runner):
    assert runner.invoke(main, ["scan", "--alpha-bar", "2", "--theta", "pi"]).exit_code == 2
    assert runner.invoke(main, ["scan", "--x", "5", "--alpha-range", "3:1", "--theta", "pi"]).exit_code == 2
    assert runner.invoke(main, ["scan", "--x", "5", "--alpha-bar", "2", "--theta", "pi",
                                "--grid", "0,3"]).exit_code == 2


def test_byte_stable_with_sidecar(runner, tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        res = runner.invoke(main, ["scan", "--x", "5", "--alpha-range", "1:2", "--grid", "1,3",
                                   "--theta", "4pi", "--mode", "all", "--out", str(path)])
        assert res.exit_code == 0
        outs.append(path.read_bytes())
        meta = json.loads((tmp_path / (name + ".meta.json")).read_text())
        assert meta["params"]["theta"] == [4 * math.pi]
        assert "utc" in meta and "tolerance" in meta
    assert outs[0] == outs[1]
    assert b"utc" not in outs[0]


def test_fitcheck(runner):
    res = runner.invoke(main, ["fitcheck", "--quantity", "phi", "--grid", "3"])
    assert res.exit_code == 0
    rows = _rows(res.stdout)
    assert rows[0] == ["R", "varphi", "fit", "pipeline", "error"]
    assert all(float(r[0]) < 1 for r in rows[1:])
    assert "max |error|" in res.stderr


def test_oracle_series(runner):
    res = runner.invoke(main, ["oracle-series", "--x", "5", "--alpha-bar", "2", "--theta", "4pi", "--order", "5"])
    assert res.exit_code == 0
    rows = _rows(res.output)
    assert len(rows) == 6
    assert runner.invoke(main, ["oracle-series", "--x", "5", "--alpha-bar", "2", "--theta", "4pi",
                                "--order", "4"]).exit_code == 2


def test_tolerance_env(runner, monkeypatch):
    monkeypatch.setenv("EPENC_TOL", "1e-8")
    res = runner.invoke(main, ["survive", "--x", "5", "--alpha-bar", "2", "--theta", "4pi"])
    assert json.loads(res.output)["analytic"]["p1"] == pytest.approx(4.144377e-4, rel=1e-4)
