import csv
import json
import os

import pytest

from fibermeasure.cli import emit_plotdata, main
from fibermeasure.config import ExperimentConfig, config_reference, parse_field
from fibermeasure.errors import ConfigError
from fibermeasure.measure import GrowthSeries

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_field():
    assert parse_field("padic:p=5,N=24") == {"kind": "padic", "p": 5, "N": 24, "e": 1}
    assert parse_field("laurent:p=3,N=32,e=2")["e"] == 2
    assert parse_field("real") == {"kind": "real"}
    for bad in ("padic:p=6", "padic", "foo:p=3", "padic:p=5,N=x", "padic:p=5,e=2"):
        with pytest.raises(ConfigError):
            parse_field(bad)


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_string("[map]\npolys = x0\nbogus = 1\n")
    cfg = ExperimentConfig.from_string("[map]\npolys = x0^2; x1\n[value]\nc = 1\n")
    assert cfg.poly_map().r == 2
    assert cfg.value(2) == [1, 1]


def test_config_reference_lists_every_section():
    text = config_reference()
    for section in ("field", "map", "value", "region", "depth", "sampling", "probe", "check",
                    "run", "output"):
        assert f"[{section}]" in text


def test_measure_report(capsys):
    code, out, _ = run(capsys, "measure", "--poly", "x0^2 + x1^2", "--c", "1", "--depth", "4")
    assert code == 0
    rep = json.loads(out)
    assert rep["result"]["value"] == "4/5"
    for key in ("normalization", "precision", "depth", "error_bound", "config"):
        assert key in rep
    assert rep["config"]["map"]["polys"] == "x0^2 + x1^2"


def test_growth_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "growth", "--poly", "x0^2+x1^2+x2^2", "--c", "1", "--t-max", "5",
                       "--depth", "6", "--csv-dir", str(tmp_path))
    assert code == 0
    rows = list(csv.reader(open(tmp_path / "growth.csv")))
    assert len(rows) == 7 and rows[1][1] == "6/5" and rows[-1][1] == "3750"
    plot = list(csv.reader(open(tmp_path / "growth_plot.csv")))
    assert plot[0] == ["t", "log_q_measure", "fitted_line"]
    assert abs(json.loads(out)["result"]["slope"] - 1) < 1e-9


def test_growth_threads_match_serial(capsys):
    args = ["growth", "--poly", "x0^2+x1^2+x2^2", "--c", "1", "--t-max", "3", "--depth", "5"]
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args, "--threads", "2")
    ra, rb = json.loads(a), json.loads(b)
    assert ra["result"] == rb["result"]


def test_icp(capsys):
    code, out, _ = run(capsys, "icp", "--set", "probe.icp=1,0,0,0,0", "--set",
                       "sampling.samples=300", "--set", "check.expect_label=case-I")
    assert code == 0 and json.loads(out)["result"]["label"] == "case-I"


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "measure", "--poly", "x0^2 +")[0] == 2
    assert run(capsys, "measure", "--poly", "x0", "--field", "padic:p=4")[0] == 2
    assert run(capsys, "measure", "--set", "nope.key=1", "--poly", "x0")[0] == 2
    assert run(capsys, "measure", "--poly", "x0^2+x1^2+x2^2+x3^2", "--depth", "12",
               "--set", "depth.budget=50")[0] == 3
    code, _, err = run(capsys, "measure", "--poly", "x0^2+x1^2", "--c", "1", "--depth", "4",
                       "--set", "check.expect=1/2")
    assert code == 1 and "expected" in err
    assert run(capsys, "lift", "--poly", "x0^2", "--set", "probe.point=5")[0] == 1


def test_config_files_run(capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cases = [("measure", "measure_circle.ini"), ("growth", "growth_sphere.ini"),
             ("icp", "icp.ini"), ("growth", "sl2.ini")]
    for cmd, name in cases:
        code, out, err = run(capsys, cmd, "--config", os.path.join(ROOT, "configs", name),
                             "--set", "sampling.samples=400")
        assert code == 0, (name, err)


def test_reruns_are_byte_identical(capsys):
    args = ["measure", "--poly", "x0^2 + x1^2", "--c", "1", "--field", "real",
            "--set", "sampling.samples=2000", "--seed", "3"]
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b


def test_emit_plotdata():
    gs = GrowthSeries([0, 1, 2], [1, 5, 25], 1.0, 0.0, 1, 0.0, 0.0, 5)
    rows = emit_plotdata(gs)
    assert len(rows) == 4 and all(len(r) == 3 for r in rows)
    assert all(abs(r[1] - r[2]) < 1e-12 for r in rows[1:])
    with pytest.raises(ValueError):
        emit_plotdata(GrowthSeries([], [], 0.0, 0.0, 0, 0.0, 0.0, 5))


def test_config_reference_command(capsys):
    code, out, _ = run(capsys, "config-reference")
    assert code == 0 and "[depth]" in out
