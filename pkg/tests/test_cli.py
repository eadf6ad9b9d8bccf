import json
import math

import pytest

from cifsdim.cli import EXIT_BUDGET, EXIT_CONFIG, EXIT_OK, main, parse_config, plotdata
from cifsdim.errors import CifsdimError


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cantor_construct_then_report(tmp_path, capsys):
    code, out, _ = run(["construct", "--recipe", "cantor13", "--out", str(tmp_path)], capsys)
    assert code == EXIT_OK
    code, out, _ = run(["report", "--recipe", "cantor13", "--out", str(tmp_path)], capsys)
    assert code == EXIT_OK
    assert f"D = {{{math.log(2) / math.log(3):.6f}}}" in out
    assert "verdict: exists" in out


def test_round_trip_through_system_json(tmp_path, capsys):
    run(["construct", "--recipe", "prescribed", "--param", "h=0.5", "--param", "g=0.2", "--out", str(tmp_path)],
        capsys)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"system_path": str(tmp_path / "prescribed_system.json"),
                               "output": {"stem": "ingested"}}))
    assert main(["report", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    assert main(["report", "--recipe", "prescribed", "--param", "h=0.5", "--param", "g=0.2",
                 "--out", str(tmp_path)]) == EXIT_OK
    a = json.loads((tmp_path / "ingested_report.json").read_text())
    b = json.loads((tmp_path / "prescribed_report.json").read_text())
    for key in ("h", "scales", "fixed_point_counts", "s_low", "s_up", "interval", "verdict", "rows"):
        assert a[key] == b[key]


def test_deterministic_artifacts(tmp_path, capsys):
    for sub in ("a", "b"):
        assert main(["report", "--recipe", "gauss", "--param", "digits=[1,2]", "--out", str(tmp_path / sub)]) == 0
        assert main(["plotdata", str(tmp_path / sub / "gauss_report.json")]) == 0
    for name in ("gauss_report_rows.csv", "gauss_report_plot.csv", "gauss_report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sharpness_provenance(tmp_path, capsys):
    code, _, _ = run(["construct", "--recipe", "sharpness", "--param", "h=0.3", "--param", "s=0.2",
                      "--param", "t=0.6", "--param", "beta=0.35", "--out", str(tmp_path)], capsys)
    assert code == EXIT_OK
    prov = json.loads((tmp_path / "sharpness_system.json").read_text())["provenance"]
    assert prov["stages"][0]["a1"] == pytest.approx(math.log(3), abs=1e-9)
    env = json.loads((tmp_path / "sharpness_envelope.json").read_text())
    assert env["segments"]


def test_sharpness_plotdata_envelope_above_f(tmp_path, capsys):
    run(["report", "--recipe", "sharpness", "--param", "h=0.3", "--param", "s=0.2", "--param", "t=0.6",
         "--param", "beta=0.35", "--out", str(tmp_path)], capsys)
    series = plotdata(json.loads((tmp_path / "sharpness_report.json").read_text()))
    assert all(row["envelope"] >= row["s_F"] - 1e-12 for row in series)


def test_finite_report_plotdata_is_flat(tmp_path, capsys):
    run(["report", "--recipe", "cantor13", "--out", str(tmp_path)], capsys)
    series = plotdata(json.loads((tmp_path / "cantor13_report.json").read_text()))
    env = [row["envelope"] for row in series]
    assert max(env) - min(env) < 0.01


def test_moran_plotdata_in_corridor(tmp_path, capsys):
    assert main(["report", "--recipe", "moran", "--param", "g=0.5", "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "moran_report.json").read_text())
    for lo, s, hi in zip(rep["corridor_lo"], rep["fixed_point_exponents"], rep["envelope"]):
        assert lo <= s <= hi
    assert len(plotdata(rep)) == 12


def test_plotdata_incomplete_report(tmp_path, capsys):
    with pytest.raises(CifsdimError, match="incomplete report"):
        plotdata({"scales": [0.1]})
    bad = tmp_path / "r.json"
    bad.write_text("{}")
    code, _, err = run(["plotdata", str(bad)], capsys)
    assert code == EXIT_CONFIG and "incomplete report" in err


def test_config_errors_are_line_anchored(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "recipe": {"name": "cantor13"},\n  "budgets": {"words": 0}\n}\n')
    code, _, err = run(["report", "--config", str(cfg)], capsys)
    assert code == EXIT_CONFIG
    assert f"{cfg}:3:" in err
    cfg.write_text('{\n  "recipe": {"name": "cantor13"}\n  "x": 1\n}\n')
    code, _, err = run(["report", "--config", str(cfg)], capsys)
    assert code == EXIT_CONFIG and f"{cfg}:3:" in err


def test_unknown_recipe_rejected():
    with pytest.raises(CifsdimError):
        parse_config('{"recipe": {"name": "nope"}}')


def test_bad_scales_flag(capsys):
    code, _, err = run(["profile", "--recipe", "cantor13", "--scales", "3:5:2"], capsys)
    assert code == EXIT_CONFIG and "--scales" in err


def test_budget_partial_exit_code(tmp_path, capsys):
    code, _, err = run(["verify", "--recipe", "cantor13", "--budget-words", "20", "--scales", "3:2:8",
                        "--out", str(tmp_path)], capsys)
    assert code == EXIT_BUDGET and "warning" in err
    lines = (tmp_path / "cantor13_rows.csv").read_text().splitlines()
    assert len(lines) == 8 and lines[-1].endswith("budget,0")


def test_profile_with_scales(tmp_path, capsys):
    code, out, _ = run(["profile", "--recipe", "cantor13", "--scales", "3:1:6", "--out", str(tmp_path)], capsys)
    assert code == EXIT_OK
    assert (tmp_path / "cantor13_profile.csv").read_text().count("\n") == 7


@pytest.mark.slow
def test_nonexistence_report_verdict(tmp_path, capsys):
    code, out, _ = run(["report", "--recipe", "cf-nonexistence", "--param", "stages=3", "--out", str(tmp_path)],
                       capsys)
    assert "verdict: does-not-exist" in out
    assert code in (EXIT_OK, EXIT_BUDGET)


def test_plotdata_out_directory(tmp_path, capsys):
    run(["report", "--recipe", "cantor13", "--out", str(tmp_path)], capsys)
    dest = tmp_path / "plots"
    dest.mkdir()
    assert main(["plotdata", str(tmp_path / "cantor13_report.json"), "--out", str(dest)]) == EXIT_OK
    assert (dest / "cantor13_report_plot.csv").read_text().startswith("x,s_F,psi,envelope,measured")
