import json

import numpy as np
import pytest

from hirob.cli import main
from hirob.io import fixture_path


def test_check_consistent_exit_zero(capsys):
    code = main(["check", str(fixture_path("exhrob")), "--grid", "201", "--scenario-res", "11", "--radius", "inf"])
    out = json.loads(capsys.readouterr().out)
    assert code == 0
    assert out["overall"] == "ConsistentAtResolution"
    assert out["checks"][0]["resolution"]["scenarios"] == 121


def test_check_refuted_exit_one(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main(["check", str(fixture_path("ex2-nec1")), "--suite", "highly-robust,necessary", "--mode", "weak",
                 "--radius", "0.5", "--out", str(out)])
    assert code == 1
    rep = json.loads(out.read_text())
    assert [c["status"] for c in rep["checks"]] == ["Refuted", "Refuted"]
    assert "Refuted" in capsys.readouterr().out


def test_reports_are_byte_identical(tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for pth in paths:
        main(["check", str(fixture_path("ex-neckkt")), "--suite", "kkt,necessary", "--scenario-res", "3",
              "--out", str(pth)])
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_timings_flag_adds_wall_time(tmp_path):
    out = tmp_path / "r.json"
    main(["check", str(fixture_path("exhrob")), "--timings", "--out", str(out)])
    assert "wall_time_s" in json.loads(out.read_text())["checks"][0]


def test_errors_exit_two(tmp_path, capsys):
    assert main(["check", str(fixture_path("exhrob")), "--suite", "bogus"]) == 2
    assert main(["check", str(fixture_path("exhrob")), "--candidate", "nope"]) == 2
    assert main(["check", str(fixture_path("exhrob")), "--out", str(tmp_path / "missing" / "r.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["check", str(bad)]) == 2
    assert "error" in capsys.readouterr().err


def test_reduce(tmp_path, capsys):
    assert main(["reduce", str(fixture_path("exhrob"))]) == 0
    assert json.loads(capsys.readouterr().out)["applicable"] is False
    out = tmp_path / "red.json"
    assert main(["reduce", str(fixture_path("ex1-nec1")), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["diagonal"] is True


def test_worstcase(capsys):
    assert main(["worstcase", str(fixture_path("exhrob")), "--radius", "inf"]) == 0
    names = [c["name"] for c in json.loads(capsys.readouterr().out)["checks"]]
    assert names == ["worst-case", "set-based"]


def test_ingest_then_check_then_report(tmp_path, capsys):
    rng = np.random.default_rng(7)
    R = rng.normal(0.01, 0.05, size=(30, 2))
    csv = tmp_path / "r.csv"
    csv.write_text("a,b\n" + "\n".join(f"{float(x)!r},{float(y)!r}" for x, y in R) + "\n")
    prob = tmp_path / "p.json"
    assert main(["ingest", str(csv), "--window", "20", "--set-type", "ball", "--out", str(prob)]) == 0
    rep = tmp_path / "rep.json"
    code = main(["check", str(prob), "--candidate", "equal_weight", "--grid", "41", "--out", str(rep)])
    assert code in (0, 1)
    table = tmp_path / "t.csv"
    assert main(["report", str(rep), "--csv", str(table)]) == code
    assert table.read_text().startswith("check,status")


def test_version(capsys):
    with pytest.raises(SystemExit):
        main(["--version"])
    assert "hirob" in capsys.readouterr().out
