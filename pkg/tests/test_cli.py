import csv
import json

import pytest

from tfe_focus import __version__
from tfe_focus.cli import EXIT_FAIL, main
from tfe_focus.output import OUT_DIR_ENV, read_config_file


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    code = main(args + ["--out-dir", str(out), "--quiet"])
    return code, out


def read_csv(path):
    lines = path.read_text().splitlines()
    header = [l for l in lines if l.startswith("#")]
    rows = list(csv.reader(l for l in lines if not l.startswith("#")))
    return header, rows


# ---- subcommands -------------------------------------------------------------------------

def test_regularity_linear(tmp_path):
    code, out = run(["regularity", "--k-max", "4"], tmp_path)
    assert code == 0
    data = json.loads((out / "regularity.json").read_text())
    assert set(data) == {"config", "results", "diagnostics"}
    assert [r["mu_k"] for r in data["results"]["rows"]] == [2.0, 4.0, 6.0, 8.0]
    header, rows = read_csv(out / "regularity.csv")
    assert len(rows) == 5


def test_regularity_with_alpha(tmp_path):
    code, out = run(["regularity", "--n", "1.0", "--N", "2", "--alpha", "0.2"], tmp_path)
    assert code == 0
    data = json.loads((out / "regularity.json").read_text())
    assert data["results"]["rows"][0]["p_star"] == pytest.approx(6.0)


def test_wkbj_check(tmp_path):
    code, out = run(["wkbj-check"], tmp_path)
    assert code == 0
    data = json.loads((out / "wkbj_check.json").read_text())
    text = json.dumps(data["results"])
    assert "eikonal" in text
    _, rows = read_csv(out / "wkbj_outer.csv")
    assert len(rows) == 402


def test_linear_scan(tmp_path):
    code, out = run(["linear-scan", "--alpha", "0.4,0.5,0.6"], tmp_path)
    assert code == 0
    header, rows = read_csv(out / "linear_scan.csv")
    assert rows[0] == ["alpha", "C1", "C2", "fit_residual"]
    assert abs(float(rows[2][1])) < 1e-10
    assert (out / "linear_scan_plots.json").exists()


def test_linear_eigen(tmp_path):
    code, out = run(["linear-eigen", "--k-max", "2", "--N", "2"], tmp_path)
    assert code == 0
    data = json.loads((out / "linear_eigen.json").read_text())
    alphas = [r["alpha"] for r in data["results"]]
    assert alphas == pytest.approx([0.5, 1.0], abs=1e-6)


def test_nonlinear_branch(tmp_path):
    code, out = run(["nonlinear-branch", "--n", "0.001,0.01,0.02"], tmp_path)
    assert code == 0
    _, rows = read_csv(out / "nonlinear_branch_k1_N1.csv")
    i = rows[0].index("alpha")
    assert float(rows[1][i]) == pytest.approx(1 / 1.999, abs=1e-6)
    diag = json.loads((out / "nonlinear_branch.json").read_text())["diagnostics"]
    assert "slope_vs_alpha_sq" in json.dumps(diag)


def test_nonlinear_branch_failure_exit(tmp_path):
    code, _ = run(["nonlinear-branch", "--k", "2", "--n", "0.001,0.01"], tmp_path)
    assert code == EXIT_FAIL


def test_osc(tmp_path):
    code, out = run(["osc", "--n", "0.3", "--span-hat", "20", "--samples", "401"], tmp_path)
    assert code == 0
    _, rows = read_csv(out / "osc_orbit.csv")
    assert rows[0][0] == "s" and len(rows) == 402


def test_osc_phihat(tmp_path):
    code, out = run(["osc", "--phihat", "--n", "0", "--span-hat", "80", "--samples", "8001"], tmp_path)
    assert code == 0
    data = json.loads((out / "osc.json").read_text())
    assert data["diagnostics"]["envelope_slope"] == pytest.approx(-0.6850198, abs=1e-2)


# ---- errors ----------------------------------------------------------------------------------

@pytest.mark.parametrize("args", [
    ["linear-eigen", "--k-max", "0"],
    ["nonlinear-branch", "--n", "0.1,2.5"],
    ["regularity", "--n", "0.2"],
    ["linear-scan", "--alpha-min", "1.0", "--alpha-max", "0.5"],
])
def test_usage_errors(args, tmp_path):
    assert run(args, tmp_path)[0] == 2


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("bogus = 1\n")
    assert run(["regularity", "--config", str(cfg)], tmp_path)[0] == 2


# ---- files, config and determinism ----------------------------------------------------------

def test_header_records_version_and_config(tmp_path):
    _, out = run(["regularity", "--k-max", "2"], tmp_path)
    header, _ = read_csv(out / "regularity.csv")
    assert header[0] == f"# tfe_focus {__version__}"
    assert "# command: regularity" in header
    assert "# k_max = 2" in header


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# comment\nk-max = 3\nN = 2\n")
    assert read_config_file(cfg) == {"k_max": 3, "N": 2}
    _, out = run(["regularity", "--config", str(cfg), "--N", "1"], tmp_path)
    data = json.loads((out / "regularity.json").read_text())
    assert data["config"]["k_max"] == 3 and data["config"]["N"] == 1


def test_json_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"k_max": 2}))
    _, out = run(["regularity", "--config", str(cfg)], tmp_path)
    assert len(json.loads((out / "regularity.json").read_text())["results"]["rows"]) == 2


def test_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path / "env"))
    assert main(["regularity", "--quiet"]) == 0
    assert (tmp_path / "env" / "regularity.json").exists()


def test_format_json_only(tmp_path):
    out = tmp_path / "j"
    assert main(["regularity", "--format", "json", "--out-dir", str(out), "--quiet"]) == 0
    assert (out / "regularity.json").exists() and not (out / "regularity.csv").exists()


def test_deterministic_output(tmp_path):
    _, a = run(["linear-scan", "--alpha", "0.4,0.6"], tmp_path, "a")
    _, b = run(["linear-scan", "--alpha", "0.4,0.6"], tmp_path, "b")
    for name in ("linear_scan.csv", "linear_scan.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_seventeen_digits(tmp_path):
    _, out = run(["linear-scan", "--alpha", "0.4"], tmp_path)
    _, rows = read_csv(out / "linear_scan.csv")
    assert rows[1][0] == "0.40000000000000002"
