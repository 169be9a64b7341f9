import csv
import io
import json

import pytest

from torsionzeta.main import EXIT_FAIL, EXIT_PASS, EXIT_USAGE, main, parse_sigma_grid
from torsionzeta.report import save_complex_document


def read_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def hand_document(tmp_path, hand):
    path = tmp_path / "hand.json"
    save_complex_document(path, hand)
    return str(path)


def test_verify_fried_suite_passes(tmp_path):
    out = tmp_path / "fried.json"
    assert main(["verify", "--suite", "fried", "--out", str(out)]) == EXIT_PASS
    report = json.loads(out.read_text())
    assert report["suite"] == "fried"
    assert report["failed_checks"] == 0
    assert all("wall_time" not in check for check in report["checks"])


def test_verify_is_deterministic(tmp_path):
    outputs = []
    for name in ("first.json", "second.json"):
        out = tmp_path / name
        assert main(["verify", "--suite", "all", "--seed", "7", "--trials", "2", "--out", str(out)]) == EXIT_PASS
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
    assert json.loads(outputs[0])["failed_checks"] == 0


@pytest.mark.parametrize("argv", [
    ["verify", "--suite", "bogus"],
    ["verify", "--suite", "fried", "--tolerance", "bogus=1"],
    ["verify", "--tolerance", "gluing"],
    ["zeta", "--matrix", "1,1,0,1"],
    ["zeta", "--matrix", "2,1,1,1", "--K", "0"],
    ["zeta", "--matrix", "2,1,1,1", "--sigma", "3:1:0.5"],
    ["glue"],
])
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_help_exits_cleanly():
    assert main(["--help"]) == EXIT_PASS


def test_zeta_grid(capsys):
    assert main(["zeta", "--matrix", "2,1,1,1", "--sigma", "1.5:2.0:0.1"]) == EXIT_PASS
    rows = read_rows(capsys.readouterr().out)
    assert len(rows) == 6
    for row in rows:
        assert row["K"] == "60"
        assert float(row["abs_diff"]) <= 1e-8


def test_zeta_twist_matches_shift(tmp_path):
    twisted, shifted = tmp_path / "twisted.csv", tmp_path / "shifted.csv"
    main(["zeta", "--matrix", "2,1,1,1", "--theta", "0.7", "--sigma", "2", "--out", str(twisted)])
    main(["zeta", "--matrix", "2,1,1,1", "--sigma", "2-0.7j", "--out", str(shifted)])
    a, b = read_rows(twisted.read_text())[0], read_rows(shifted.read_text())[0]
    value_a = complex(float(a["value_re"]), float(a["value_im"]))
    value_b = complex(float(b["value_re"]), float(b["value_im"]))
    assert abs(value_a - value_b) <= 1e-10 * abs(value_b)


def test_sigma_grid_includes_stop():
    assert parse_sigma_grid("1.5:3.0:0.5") == [1.5, 2.0, 2.5, 3.0]
    assert parse_sigma_grid("2,1+1j") == [2.0, 1 + 1j]


def test_zeta_grid_through_the_pole(capsys):
    assert main(["zeta", "--matrix", "2,1,1,1", "--sigma=-0.5:0.5:0.5", "--K", "20"]) == EXIT_PASS
    rows = read_rows(capsys.readouterr().out)
    assert [row["sigma_re"] for row in rows] == ["-0.5", "0", "0.5"]
    assert rows[1]["closed_re"] == "nan"
    assert rows[1]["tail_bound"] == "inf"


def test_glue_hand_document(hand_document, capsys):
    assert main(["glue", "--input", hand_document, "--cutoffs", "1,10"]) == EXIT_PASS
    payload = json.loads(capsys.readouterr().out)
    assert payload["passed"]
    assert payload["spread"] == pytest.approx(0.0, abs=1e-12)
    assert payload["direct"][0] == pytest.approx(1.0 / 6.0)


def test_glue_rejects_cutoff_on_spectrum(hand_document, capsys):
    assert main(["glue", "--input", hand_document, "--cutoffs", "1,6"]) == EXIT_FAIL
    payload = json.loads(capsys.readouterr().out)
    assert not payload["passed"]
    assert list(payload["rejections"]) == ["6"]


def test_glue_random_complex(capsys):
    assert main(["glue", "--dims", "1,2,1"]) == EXIT_PASS
    payload = json.loads(capsys.readouterr().out)
    assert payload["dims"] == [1, 2, 1]
    assert len(payload["cutoffs"]) == 3


def test_config_command(capsys):
    assert main(["--preset", "quick", "config"]) == EXIT_PASS
    assert "Preset: QUICK" in capsys.readouterr().out
