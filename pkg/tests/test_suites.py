import numpy as np
import pytest

from massflow.suites import DEFAULT_TOLERANCES, SUITES, case_seed, run_case, run_suite


def test_case_seeds_are_stable_and_distinct():
    seeds = [case_seed(42, i) for i in range(100)]
    assert len(set(seeds)) == 100
    assert seeds == [case_seed(42, i) for i in range(100)]
    assert case_seed(42, 0) != case_seed(43, 0)


@pytest.mark.parametrize("suite", sorted(SUITES))
def test_each_suite_passes_small_run(suite):
    rep = run_suite(suite, 3, seed=7, jobs=1)
    assert rep.ok, rep.cases
    assert rep.passed == 3 and rep.worst_margin >= 0
    assert rep.config["tolerances"] == DEFAULT_TOLERANCES


def test_serial_and_parallel_runs_agree():
    a = run_suite("pmt", 6, seed=3, jobs=1).to_dict()
    b = run_suite("pmt", 6, seed=3, jobs=2).to_dict()
    a.pop("wall_time"), b.pop("wall_time")
    assert a == b


def test_summaries():
    pmt = run_suite("pmt", 2, seed=1, jobs=1)
    control = pmt.summary["negative_mass_control"]
    assert control["adm"] == pytest.approx(-1.0, abs=5 * control["adm_error"])
    assert run_suite("penrose", 2, seed=1, jobs=1).summary["strict_count"] == 2
    lo, hi = run_suite("geroch", 2, seed=1, jobs=1).summary["order_range"]
    assert 1.7 <= lo <= hi <= 2.3


def test_failing_tolerance_marks_cases():
    rep = run_suite("pmt", 3, seed=1, jobs=1, tolerances={"pmt": -10.0})
    assert rep.failed == 3 and not rep.ok
    assert rep.worst_margin < 0


def test_errors_are_recorded_not_raised():
    rec = run_case("pmt", 1, dict(DEFAULT_TOLERANCES), 100.0, 0)
    assert rec["passed"] is False and "RejectionLimitExceeded" in rec["error"]
    rep = run_suite("pmt", 2, seed=1, jobs=1, amplitude=100.0)
    assert rep.failed == 2 and rep.worst_margin is None


def test_bad_arguments():
    with pytest.raises(ValueError):
        run_suite("nope", 1, 0)
    with pytest.raises(ValueError):
        run_suite("pmt", 0, 0)
    with pytest.raises(ValueError):
        run_suite("pmt", 1, 0, tolerances={"bogus": 1.0})


def test_case_records_reproduce_alone():
    rep = run_suite("bounds", 4, seed=11, jobs=1)
    again = run_case("bounds", 11, dict(DEFAULT_TOLERANCES), 0.05, 2)
    assert again == rep.cases[2]
    assert np.isfinite(again["value"])
