import time

import numpy as np
import pytest

from thinheat.errors import BudgetExceeded, DegenerateFit, DiscretizationDominance
from thinheat.harness import (
    ConvergenceReport,
    Criterion,
    ExperimentResult,
    _map,
    check_discretization,
    fit_slope,
    pairwise_orders,
)

EPS = [0.2, 0.1, 0.05, 0.025]


def _square(x):
    return x * x


def _slow(x):
    time.sleep(0.2)
    return x


@pytest.mark.parametrize("order", [1.0, 2.0])
def test_fit_slope_recovers_power(order):
    errs = [3.0 * e**order for e in EPS]
    slope, r2 = fit_slope(EPS, errs)
    assert slope == pytest.approx(order, abs=1e-12) and r2 == pytest.approx(1.0)
    np.testing.assert_allclose(pairwise_orders(EPS, errs), order, atol=1e-12)


@pytest.mark.parametrize("params, errs", [
    (EPS, [1.0, 0.0, 0.1, 0.01]),
    (EPS, [1.0, float("nan"), 0.1, 0.01]),
    (EPS, [1.0, 0.5]),
    ([0.1, 0.1], [1.0, 0.5]),
])
def test_fit_slope_degenerate(params, errs):
    with pytest.raises(DegenerateFit):
        fit_slope(params, errs)


def test_report_band_and_degenerate_note():
    rows = [{"epsilon": e, "error": e} for e in EPS]
    rep = ConvergenceReport.build("lin", "epsilon", rows, band=[0.9, 1.1], r2_min=0.99)
    assert rep.passed and rep.slope == pytest.approx(1.0)
    bad = ConvergenceReport.build("zero", "epsilon", [{"epsilon": e, "error": 0.0} for e in EPS],
                                  band=[0.9, 1.1])
    assert bad.passed is False and "degenerate" in bad.note


def test_json_round_trips():
    rows = [{"epsilon": e, "error": 2 * e**2, "extra": 1} for e in EPS]
    rep = ConvergenceReport.build("quad", "epsilon", rows, band=[1.8, 2.2])
    assert ConvergenceReport.from_json(rep.to_json()) == rep
    res = ExperimentResult("convergence", "demo", [rep], [Criterion("slope", True, "ok")],
                           {"config": {}}, timings={"total": 1.0})
    back = ExperimentResult.from_json(res.to_json())
    assert back.to_json() == res.to_json()
    # timings never enter the report
    assert "total" not in res.to_json()
    csv = res.rows_csv().splitlines()
    assert csv[0] == "section,epsilon,error,extra" and len(csv) == 5
    assert "ax.loglog" in res.plot_script()
    assert res.summary_lines() == ["PASS demo: slope (ok)"]


def test_incomplete_result_fails():
    res = ExperimentResult("sharpness", "x", [], [Criterion("a", True, "")], {}, complete=False)
    assert not res.passed


def test_discretization_dominance_guard():
    ok = [{"epsilon": e, "error": e, "disc_error": 0.05 * e} for e in EPS]
    check_discretization(ok, 0.1)
    bad = ok[:-1] + [{"epsilon": 0.025, "error": 0.025, "disc_error": 0.01}]
    with pytest.raises(DiscretizationDominance):
        check_discretization(bad, 0.1)


@pytest.mark.parametrize("jobs", [1, 2])
def test_map_is_ordered(jobs):
    timings = {}
    out = _map(_square, [(i,) for i in range(5)], jobs, None, time.monotonic(), timings)
    assert out == [0, 1, 4, 9, 16] and len(timings["members"]) == 5


def test_map_budget_keeps_partial_results():
    with pytest.raises(BudgetExceeded) as info:
        _map(_slow, [(i,) for i in range(10)], 1, 0.3, time.monotonic())
    assert 1 <= len(info.value.partial) < 10
    with pytest.raises(BudgetExceeded):
        _map(_slow, [(i,) for i in range(10)], 2, 0.3, time.monotonic())
