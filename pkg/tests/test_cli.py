import csv
import json
import subprocess
import sys

import pytest

from crisis_assoc.cli import main
from crisis_assoc.panel import CountryLabel, CrisisPanel, load_panel, write_panel
from crisis_assoc.synth import block_correlation, generate_panel, synthetic_codes


@pytest.fixture
def panel_file(tmp_path):
    """12 real country codes, 1800-2014, two correlated blocks."""
    codes = ["DEU", "FRA", "GBR", "ITA", "USA", "ESP", "ARG", "BRA", "CHL", "MEX", "IND", "JPN"]
    panel = generate_panel([1.3] * 12, block_correlation([6, 6], 0.7, 0.2), 215, seed=3, codes=codes)
    path = tmp_path / "panel.csv"
    write_panel(panel, path)
    return path


def run(*args):
    return main([str(a) for a in args])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_ingest(panel_file, tmp_path, capsys):
    assert run("ingest", "--input", panel_file, "--out", tmp_path / "o") == 0
    assert "12 countries, window 1800:2014" in capsys.readouterr().out
    assert load_panel(tmp_path / "o" / "panel.csv") == load_panel(panel_file)


def test_ingest_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("country_code,year,crisis\nSGP,1982,2\n")
    assert run("ingest", "--input", bad, "--out", tmp_path) == 1
    assert "line 2" in capsys.readouterr().err


def test_summary(panel_file, tmp_path):
    assert run("summary", "--input", panel_file, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "summary_countries.csv")
    assert rows[0] == ["country_code", "name", "crises", "observed_years"]
    assert len(rows) == 13
    years = read_csv(tmp_path / "summary_years.csv")
    assert len(years) == 216
    assert sum(int(r[2]) for r in rows[1:]) == sum(int(r[1]) for r in years[1:])


def test_runs_conventions(panel_file, tmp_path):
    assert run("runs", "--input", panel_file, "--out", tmp_path / "a") == 0
    assert run("runs", "--input", panel_file, "--out", tmp_path / "b", "--convention", "one-sided-low") == 0
    a, b = read_csv(tmp_path / "a" / "runs.csv"), read_csv(tmp_path / "b" / "runs.csv")
    assert len(a) == 13
    assert [r[8] for r in a] == [r[8] for r in b]  # approximate column unchanged
    assert [r[10] for r in b[1:]] == ["one-sided-low"] * 12


def test_runs_short_window_flags(tmp_path):
    codes = synthetic_codes(6)
    panel = generate_panel([2.0] * 6, block_correlation([6], 0.0), 8, seed=0, start_year=2007)
    path = tmp_path / "p.csv"
    write_panel(panel, path)
    assert run("runs", "--input", path, "--window", "2007:2014", "--out", tmp_path) == 0
    flags = [r[9] for r in read_csv(tmp_path / "runs.csv")[1:]]
    assert flags.count("degenerate") >= 3 and len(flags) == len(codes)


def test_corr_outputs(panel_file, tmp_path):
    assert run("corr", "--input", panel_file, "--out", tmp_path) == 0
    for name in ("corr_rho.csv", "corr_p.csv", "corr_stars.csv"):
        rows = read_csv(tmp_path / name)
        assert len(rows) == 13 and all(len(r) == 13 for r in rows)
    svg = (tmp_path / "heatmap_stars.svg").read_text()
    assert "* indicates a 10% significance" in svg
    assert (tmp_path / "heatmap.svg").exists()


def test_corr_two_countries_phi(tmp_path):
    panel = generate_panel([0.5, 0.5], block_correlation([2], 0.5), 100, seed=1, codes=["AAA", "BBB"])
    path = tmp_path / "p.csv"
    write_panel(panel, path)
    assert run("corr", "--input", path, "--coefficient", "phi", "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "corr_rho.csv")
    assert len(rows) == 3 and rows[1][1] == "1"
    assert "phi correlation" in (tmp_path / "heatmap.svg").read_text()


def test_chi2(panel_file, tmp_path):
    assert run("chi2", "--input", panel_file, "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "chi2.json").read_text())
    assert len(doc["continent_map_sha256"]) == 64
    assert set(doc["filters"]) == {"all", "significant"}
    entry = doc["filters"]["all"]
    assert entry["n_pairs"] == 66 and 0 <= entry["p_value"] <= 1
    assert not list(tmp_path.glob("corr_*.csv"))


def test_chi2_yates(panel_file, tmp_path):
    assert run("chi2", "--input", panel_file, "--yates", "--out", tmp_path) == 0
    entry = json.loads((tmp_path / "chi2.json").read_text())["filters"]["all"]
    assert entry["statistic"] == entry["statistic_yates"] <= entry["statistic_uncorrected"]


def test_chi2_uniform_strength_error(tmp_path, capsys):
    # identical series: every pair strong and same continent -> zero margins
    panel = generate_panel([0.5] * 3, block_correlation([3], 1.0), 100, seed=1, codes=["DEU", "FRA", "ITA"])
    path = tmp_path / "p.csv"
    write_panel(panel, path)
    assert run("chi2", "--input", path, "--out", tmp_path) == 1
    assert "zero margin" in capsys.readouterr().err


def test_chi2_unmapped(tmp_path, capsys):
    panel = generate_panel([0.5] * 3, block_correlation([3], 0.3), 100, seed=1)
    path = tmp_path / "p.csv"
    write_panel(panel, path)
    assert run("chi2", "--input", path, "--out", tmp_path) == 1
    assert "no entry for" in capsys.readouterr().err


def test_cluster(panel_file, tmp_path):
    assert run("cluster", "--input", panel_file, "--cutoff", "auto", "--out", tmp_path) == 0
    newick = (tmp_path / "cluster.newick").read_text()
    assert newick.strip().endswith(";") and newick.count(":") == 22
    assert len(read_csv(tmp_path / "cluster_merges.csv")) == 12
    cut = json.loads((tmp_path / "cluster_cut.json").read_text())
    assert cut["method"] == "largest-gap" and sum(len(g) for g in cut["groups"]) == 12


def test_cluster_window(panel_file, tmp_path):
    assert run("cluster", "--input", panel_file, "--window", "1991:2014", "--format", "newick", "--out", tmp_path) == 0
    assert [p.name for p in tmp_path.iterdir() if p.suffix != ".csv" or p.name != "panel.csv"] == ["cluster.newick"]


def test_report_and_determinism(panel_file, tmp_path):
    assert run("report", "--input", panel_file, "--out", tmp_path / "r1") == 0
    assert run("report", "--input", panel_file, "--out", tmp_path / "r2", "--jobs", "2") == 0
    m1 = json.loads((tmp_path / "r1" / "manifest.json").read_text())
    m2 = json.loads((tmp_path / "r2" / "manifest.json").read_text())
    assert m1["artifacts"] == m2["artifacts"]
    names = set(m1["artifacts"])
    for tag in ("1800-2014", "1929-2006", "2007-2014", "1800-1990", "1991-2014"):
        assert f"cluster_{tag}.svg" in names and f"cluster_{tag}.newick" in names
    assert {"heatmap.svg", "heatmap_stars.svg", "runs.csv", "chi2.json"} <= names
    for name in names:
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()


def test_report_missing_map(panel_file, tmp_path):
    assert run("report", "--input", panel_file, "--continent-map", tmp_path / "nope.csv", "--out", tmp_path) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert "chi2.json" not in manifest["artifacts"]
    assert any("chi-square step skipped" in w for w in manifest["warnings"])
    assert "runs.csv" in manifest["artifacts"]


def test_recession_start_flag(panel_file, tmp_path):
    assert run("report", "--input", panel_file, "--recession-start", "2006", "--format", "newick", "--out", tmp_path) == 0
    assert (tmp_path / "cluster_2006-2014.newick").exists()


def test_synth(tmp_path):
    assert run("synth", "--countries", "6", "--seed", "4", "--window", "1900:1999", "--out", tmp_path) == 0
    panel = load_panel(tmp_path / "synth_panel.csv")
    assert len(panel) == 6 and len(panel.window) == 100
    assert run("synth", "--countries", "6", "--seed", "4", "--window", "1900:1999", "--out", tmp_path / "b") == 0
    assert (tmp_path / "synth_panel.csv").read_bytes() == (tmp_path / "b" / "synth_panel.csv").read_bytes()


def test_out_dir_from_environment(panel_file, tmp_path, monkeypatch):
    monkeypatch.setenv("CRISIS_ASSOC_OUT", str(tmp_path / "env"))
    assert run("summary", "--input", panel_file) == 0
    assert (tmp_path / "env" / "summary_countries.csv").exists()


def test_bad_alpha_order(panel_file, tmp_path, capsys):
    assert run("corr", "--input", panel_file, "--alpha", "0.01,0.05", "--out", tmp_path) == 1


def test_console_script_entry_point(panel_file, tmp_path):
    res = subprocess.run([sys.executable, "-m", "crisis_assoc.cli", "summary", "--input", str(panel_file),
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
