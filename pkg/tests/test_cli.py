"""
Tests for the cubiclab command line tool
"""

import json

import pytest

from cubiclab_api.lab import CubicLab
from cubiclab_tools.cubic_lab import build_parser, run


def report_of(capsys):
    return json.loads(capsys.readouterr().out)


def test_parser_defaults():
    args = build_parser().parse_args(["hyperbolicity"])
    assert args.form == "u5"
    assert args.zero_tol == 1e-10
    assert not args.orbit


def test_catalog(capsys):
    assert run(["catalog"]) == 0
    data = report_of(capsys)
    assert data["command"] == "catalog"
    assert any(entry["selector"] == "u5" for entry in data["results"]["forms"])


def test_verify_passing_checks(capsys):
    assert run(["verify", "--form", "cartan:1", "--checks", "munzner,harmonic"]) == 0
    data = report_of(capsys)
    assert data["passed"] is True
    assert set(data["results"]["checks"]) == {"munzner", "harmonic"}
    assert data["parameters"]["checks"] == ["munzner", "harmonic"]


@pytest.mark.slow
def test_verify_all_checks_on_cartan(capsys):
    assert run(["verify", "--form", "cartan:1"]) == 0
    checks = report_of(capsys)["results"]["checks"]
    assert checks["dimension"]["passed"]
    assert checks["fusion"]["passed"]


def test_verify_failing_check(capsys):
    assert run(["verify", "--form", "random:5:3", "--checks", "munzner"]) == 1
    assert report_of(capsys)["passed"] is False


def test_results_are_deterministic(capsys):
    run(["verify", "--form", "cartan:2", "--checks", "munzner", "--seed", "5"])
    first = report_of(capsys)
    run(["verify", "--form", "cartan:2", "--checks", "munzner", "--seed", "5"])
    second = report_of(capsys)
    assert first["results"] == second["results"]
    assert first["parameters"]["seed"] == 5


def test_gallery_mazya(capsys):
    assert run(["gallery", "mazya", "--n", "5", "--kappa", "15", "--mu", "25", "--nu", "9"]) == 0
    data = report_of(capsys)
    assert data["command"] == "gallery mazya"
    assert data["results"]["exponent"] == -0.5


def test_gallery_mazya_epsilon(capsys):
    assert run(["gallery", "mazya", "--n", "5", "--eps", "0"]) == 0
    assert report_of(capsys)["results"]["exponent"] == -0.5


@pytest.mark.parametrize(
    "argv",
    [
        ["gallery", "mazya", "--n", "5", "--kappa", "16", "--mu", "25", "--nu", "9"],
        ["gallery", "mazya", "--n", "5", "--kappa", "15", "--eps", "1"],
        ["gallery", "mazya", "--n", "5", "--kappa", "15"],
    ],
)
def test_gallery_mazya_errors(argv):
    assert run(argv) == 2


def test_gallery_lawson_osserman(capsys):
    assert run(["gallery", "lawson-osserman", "--d", "4", "--points", "50"]) == 0
    data = report_of(capsys)
    assert data["results"]["hopf_norm_residual"] <= 1e-12


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze", "--form", "file:missing.json"],
        ["verify", "--form", "cartan:3"],
        ["verify", "--form", "cartan:1", "--checks", "bogus"],
        ["frobnicate"],
        ["verify"],
        ["hyperbolicity", "--alpha", "2.5", "--pairs", "10"],
    ],
)
def test_usage_errors(argv):
    assert run(argv) == 2


def test_help_exits_cleanly(capsys):
    assert run(["--help"]) == 0
    assert "cubiclab" in capsys.readouterr().out


def test_hyperbolicity_csv(tmp_path, capsys):
    csv = tmp_path / "pairs.csv"
    out = tmp_path / "report.json"
    code = run(["hyperbolicity", "--pairs", "200", "--csv", str(csv), "--out", str(out)])
    assert code == 0
    assert capsys.readouterr().out == ""
    header = csv.read_text().splitlines()[0]
    assert header == "pair_index,lambda_min,lambda_max,M"
    data = json.loads(out.read_text())
    assert data["parameters"]["pairs"] == 200
    assert data["results"]["hyperbolicity"]["violations"] == 0


def test_csv_without_samples_is_ignored(tmp_path, capsys):
    csv = tmp_path / "none.csv"
    assert run(["hsiang", "--form", "u9", "--csv", str(csv)]) == 0
    assert not csv.exists()
    assert report_of(capsys)["results"]["hsiang"]["C1"] > 0


def test_f5_scale_search(capsys):
    assert run(["f5", "--points", "20"]) == 0
    data = report_of(capsys)
    assert data["results"]["f5"]["found"] is True
    assert abs(abs(data["results"]["f5"]["s_star"]) - 1.0 / 6.0) <= 1e-6


def test_config_file(tmp_path, capsys):
    config = tmp_path / "lab.yaml"
    config.write_text("seed: 11\nresidual_samples: 50\n")
    assert run(["verify", "--form", "cartan:1", "--checks", "munzner", "--config", str(config)]) == 0
    assert report_of(capsys)["parameters"]["residual_samples"] == 50


def test_unexpected_errors_exit_with_usage_code(mocker):
    mocker.patch.object(CubicLab, "verify", side_effect=RuntimeError("boom"))
    assert run(["verify", "--form", "cartan:1"]) == 2


def test_summary_table(capsys):
    assert run(["hsiang", "--form", "cartan:1", "--summary"]) == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)["passed"] is True
    assert "hsiang" in captured.err


def test_gap_scan_passes_at_cartan_idempotents(capsys):
    assert run(["gap-scan", "--form", "cartan:1", "--dirs", "100"]) == 0
    data = report_of(capsys)
    assert data["results"]["gap_scan"]["idempotent_bound_holds"] is True
    assert data["parameters"]["gap_tol"] == 1e-8
    assert data["parameters"]["gap_zero_tol"] == 1e-12


def test_gap_scan_fails_without_idempotents(tmp_path, capsys):
    form = tmp_path / "zero.json"
    form.write_text(json.dumps({"dim": 3, "terms": []}))
    assert run(["gap-scan", "--form", f"file:{form}", "--dirs", "20"]) == 1
    data = report_of(capsys)
    assert data["passed"] is False
    assert data["results"]["gap_scan"]["idempotent_ratios"] == []


def test_hyperbolicity_reports_every_tolerance(capsys):
    assert run(["hyperbolicity", "--pairs", "100", "--normalize"]) == 0
    params = report_of(capsys)["parameters"]
    for key in ("zero_tol", "munzner_tol", "newton_tol", "charpoly_points",
                "refine_starts", "refine_sweeps", "refine_step", "refine_min_step"):
        assert key in params


def test_analyze_reports_every_tolerance(capsys):
    assert run(["analyze", "--form", "cartan:1", "--scaling", "eiconal"]) == 0
    params = report_of(capsys)["parameters"]
    for key in ("newton_tol", "ascent_tol", "genericity_tol", "idempotent_tol", "cluster_rtol",
                "fusion_tol", "munzner_tol", "law_match_tol", "extremal_slack"):
        assert key in params


def test_verify_peirce_checks_report_their_tolerances(capsys):
    run(["verify", "--form", "cartan:1", "--checks", "fusion"])
    params = report_of(capsys)["parameters"]
    for key in ("idempotent_tol", "cluster_rtol", "fusion_tol", "newton_tol", "law_match_tol"):
        assert key in params


def test_config_reaches_decomposition_and_charpoly(tmp_path, capsys):
    config = tmp_path / "lab.yaml"
    config.write_text("cluster_rtol: 1.0e-3\ncharpoly_points: 7\nn_starts: 16\n")
    assert run(["analyze", "--form", "cartan:1", "--scaling", "eiconal", "--config", str(config)]) == 0
    peirce = report_of(capsys)["results"]["peirce"]
    assert peirce
    # eiconal idempotents have spectral radius 1
    assert peirce[0]["decomposition"]["cluster_tol"] == pytest.approx(1e-3)

    assert run(["hyperbolicity", "--pairs", "100", "--normalize", "--config", str(config)]) == 0
    spectra = report_of(capsys)["results"]["idempotent_spectra"]
    assert spectra
    assert all(entry["charpoly"]["grid_points"] == 7 for entry in spectra)
