import csv
import json

import pytest

from conftest import SAMPLES
from holofol import cli


def _run(tmp_path, *argv):
    out = tmp_path / "out"
    code = cli.main([*argv[:1], "--input", str(SAMPLES / argv[1]), *argv[2:], "--out", str(out)])
    return code, out


def _rows(path):
    return list(csv.DictReader(line for line in path.read_text().splitlines() if not line.startswith("#")))


def test_analyze_linear_saddle(tmp_path):
    code, out = _run(tmp_path, "analyze", "linear_saddle.json", "--svg")
    assert code == 0
    rows = _rows(out / "singularities.csv")
    affine = [r for r in rows if r["chart"] == "affine"]
    assert len(affine) == 1
    assert float(affine[0]["lambda_re"]) == 0.0 and float(affine[0]["lambda_im"]) == 2.0
    assert len([r for r in rows if r["chart"] != "affine"]) == 2
    report = (out / "report.txt").read_text()
    assert "degree: 1" in report and "S(n): True" in report
    assert (out / "singularities_infinity.svg").read_text().lstrip().startswith("<?xml")


def test_analyze_rejects_common_factor(tmp_path, capsys):
    code, _ = _run(tmp_path, "analyze", "common_factor.json")
    assert code == cli.EXIT_INVALID
    assert "common factor" in capsys.readouterr().err


def test_malformed_input(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    code = cli.main(["analyze", "--input", str(bad), "--out", str(tmp_path / "o")])
    assert code == cli.EXIT_INVALID
    assert "malformed JSON" in capsys.readouterr().err


def test_missing_input(tmp_path):
    assert cli.main(["growth", "--input", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == cli.EXIT_INVALID


def test_holonomy_with_user_loops(tmp_path):
    code, out = _run(tmp_path, "holonomy", "linear_oracle.json", "--loops",
                     str(SAMPLES / "linear_oracle_loops.json"), "--budget", "800")
    assert code == 0
    gens = _rows(out / "generators.csv")
    assert len(gens) == 2
    assert all(float(r["rel_dev"]) < 1e-8 for r in gens)
    cov = [float(r["coverage"]) for r in _rows(out / "coverage.csv")]
    assert cov == sorted(cov)
    text = (out / "coverage.csv").read_text()
    assert "empirical coverage" in text and "loops_sha256" in text


def test_holonomy_non_invariant_line(tmp_path):
    doc = {"n": 2, "P": [{"i": 0, "j": 1, "re": "1"}], "Q": [{"i": 1, "j": 0, "re": "1"}],
           "g": [{"i": 2, "j": 0, "re": "1"}, {"i": 0, "j": 2, "re": "1"}]}
    p = tmp_path / "f.json"
    p.write_text(json.dumps(doc))
    code = cli.main(["holonomy", "--input", str(p), "--out", str(tmp_path / "o")])
    assert code == cli.EXIT_INVALID


def test_track_given_word(tmp_path):
    code, out = _run(tmp_path, "track", "linear_family.json")
    assert code == 0
    rows = _rows(out / "track_1.csv")
    assert len(rows) == 11
    assert all(float(r["p_re"]) == 0.0 for r in rows)
    assert "word: f" in (out / "track_1.csv").read_text()


def test_track_rejects_non_fixed_point(tmp_path):
    doc = json.loads((SAMPLES / "linear_family.json").read_text())
    doc["track"]["words"][0]["p0"] = [0.3, 0]
    p = tmp_path / "fam.json"
    p.write_text(json.dumps(doc))
    assert cli.main(["track", "--input", str(p), "--out", str(tmp_path / "o")]) == cli.EXIT_INITIAL


def test_track_auto_words(tmp_path):
    code, out = _run(tmp_path, "track", "family.json", "--svg")
    assert code == 0
    assert sorted(p.name for p in out.glob("track_*")) == ["track_1.csv", "track_2.csv", "track_3.csv", "track_summary.txt"]
    for k in (1, 2, 3):
        assert max(float(r["oracle_dev"]) for r in _rows(out / f"track_{k}.csv")) < 1e-8
    assert (out / "tracking.svg").exists()


def test_growth_abelian(tmp_path):
    code, out = _run(tmp_path, "growth", "abelian_rank2.json", "--nmax", "6")
    assert code == 0
    rows = _rows(out / "growth.csv")
    assert [int(r["gamma"]) for r in rows] == [2 * n * n + 2 * n + 1 for n in range(7)]
    assert "verdict=" in (out / "verdict.txt").read_text()
    assert not (out / "limit_homomorphism.csv").exists()


def test_growth_tangent_pair_reports(tmp_path):
    code, out = _run(tmp_path, "growth", "tangent_pair.json", "--derived", "--nmax", "6")
    assert code == 0
    assert "G_1" in (out / "derived_series.txt").read_text()
    assert (out / "limit_homomorphism.csv").exists() and (out / "additivity.csv").exists()


def test_growth_budget_exit(tmp_path):
    code, out = _run(tmp_path, "growth", "free_like_pair.json", "--budget", "100")
    assert code == cli.EXIT_BUDGET
    text = (out / "growth.csv").read_text()
    assert "# partial table: budget exceeded" in text


def test_help_lists_commands(capsys):
    with pytest.raises(SystemExit):
        cli.main(["--help"])
    out = capsys.readouterr().out
    for cmd in ("analyze", "holonomy", "track", "growth"):
        assert cmd in out


def test_analyze_flags_non_reduced_degree(tmp_path):
    # x d/dx + y d/dy declared with n = 1 has tangency degree 0 on every line
    doc = {"n": 1, "P": [{"i": 1, "j": 0, "re": "1"}], "Q": [{"i": 0, "j": 1, "re": "1"}]}
    p = tmp_path / "radial.json"
    p.write_text(json.dumps(doc))
    code = cli.main(["analyze", "--input", str(p), "--out", str(tmp_path / "o")])
    assert code == cli.EXIT_SOLVER
    assert "tangency degrees on 5 random lines: [0, 0, 0, 0, 0]" in (tmp_path / "o" / "report.txt").read_text()
