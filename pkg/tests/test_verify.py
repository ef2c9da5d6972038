import pytest

from measengine import cycle, verify


def test_quick_suites_pass():
    results = verify.run_suites("quick")
    assert len(results) == len(verify.SUITES)
    failed = [r for r in results if not r.passed]
    assert not failed, verify.format_results(failed)


def test_full_depth_runs_200_scenarios_for_random_suites():
    counts = {s.name: s.full for s in verify.SUITES}
    for name in ("stroke_sum_and_gauge_cancellation", "selective_shannon_bonus",
                 "selective_net_deficit", "gibbs_dual_roundtrip", "cycle_closure"):
        assert counts[name] >= 200
    assert counts["dephasing_entropy_monotone"] >= 500
    assert counts["eigh_reconstruction"] >= 1000


def test_trial_rng_is_replayable():
    a = verify.trial_rng(5, "bad_apple", 3).random(4)
    b = verify.trial_rng(5, "bad_apple", 3).random(4)
    c = verify.trial_rng(5, "bad_apple", 4).random(4)
    assert (a == b).all() and not (a == c).all()


def test_sign_flip_in_extractable_work_is_caught(monkeypatch):
    real = cycle.max_extractable_work

    def flipped(rho, rho_prime, h, bath):
        d_e, d_s = cycle.measurement_deltas(rho, rho_prime, h)
        return d_e + bath.temperature * d_s

    monkeypatch.setattr(cycle, "max_extractable_work", flipped)
    res = verify.run_suites("quick", only=["selective_shannon_bonus"])[0]
    assert not res.passed
    assert "seed=0" in res.failures[0]
    monkeypatch.setattr(cycle, "max_extractable_work", real)
    assert verify.run_suites("quick", only=["selective_shannon_bonus"])[0].passed


def test_failure_report_names_suite_and_seed():
    r = verify.SuiteResult("demo", 3, ("seed=9 trial=1: AssertionError: boom",), 0.0)
    text = verify.format_results([r])
    assert "FAIL  demo" in text and "seed=9 trial=1" in text
    assert text.strip().endswith("0/1 invariant suites passed")


def test_bad_depth():
    with pytest.raises(ValueError):
        verify.run_suites("medium")
