import math

import pytest

from torsionzeta.verify_suites import CheckRecord, VerificationEngine, run_verification


def test_check_record_pass_rules():
    assert CheckRecord("fried", "x", 1e-12, 1e-9).passed
    assert not CheckRecord("fried", "x", 1e-6, 1e-9).passed
    failed = CheckRecord("fried", "x", math.inf, 1e-9, error="SingularMapError: boom")
    assert not failed.passed
    assert failed.to_dict()["error"] == "SingularMapError: boom"
    assert "wall_time" not in CheckRecord("fried", "x", 0.0, 0.0).to_dict()


def test_unknown_suite():
    with pytest.raises(KeyError):
        VerificationEngine().run("bogus")


def test_fried_suite_passes():
    report = run_verification("fried", seed=0)
    assert report.passed, [c.anchor for c in report.failures]
    assert report.to_dict()["total_checks"] == len(report.checks)


def test_timings_are_opt_in():
    report = run_verification("fried", seed=0, timings=True)
    assert all(check.wall_time is not None for check in report.checks)


def test_hand_checks_lead_each_suite():
    report = run_verification("spectral", seed=1, trials=0)
    assert [c.anchor for c in report.checks] == ["glued value of d=[[2]], δ=[[3]] at a=1 and a=10 equals 1/6"]
    assert report.passed


def test_spectral_suite_with_cohomology_passes():
    report = run_verification("spectral", seed=3, trials=2)
    assert report.passed, [(c.anchor, c.error) for c in report.failures]
    assert any(c.anchor == "glued value of the regraded dual complex" and c.trial == 1 for c in report.checks)


def test_all_suites_pass():
    report = run_verification("all", seed=0, trials=1)
    assert report.passed, [(c.suite, c.anchor, c.error) for c in report.failures]
