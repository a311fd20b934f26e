"""Benchmark driver: report fields, orders, CSV/JSON serialization."""
import json
import math

import pytest

from twogrid import harness
from twogrid.errors import BadParams
from twogrid.harness import (CaseReport, convergence_study, reference_errors,
                             run_case, to_csv, to_json)
from twogrid.problems import ProblemSpec, make_problem

CSV_HEADER = "N,r,lambda,unknowns,err_coarse,err_fine,order_coarse,order_fine"


def report(**kw):
    base = dict(problem="piecewise_kappa_1d", N=10, r=2, lam=2.0,
                hf_mode="ratio", unknowns=44, err_coarse=1.0e-5,
                err_fine=2.0e-5)
    base.update(kw)
    return CaseReport(**base)


def test_csv_header_and_row_formatting():
    rep = report(err_coarse=1.2345678e-5, err_fine=float("nan"),
                 order_coarse=None, order_fine=3.25)
    lines = to_csv([rep]).splitlines()
    assert lines[0] == CSV_HEADER
    # %.6g floats, empty fields for None and NaN
    assert lines[1] == "10,2,2,44,1.23457e-05,,,3.25"


def test_csv_empty_report_list_is_header_only():
    assert to_csv([]) == CSV_HEADER + "\n"


def test_order_formula():
    assert harness._order(1e-2, 1e-4, 10.0) == pytest.approx(2.0, rel=1e-12)
    assert harness._order(8e-3, 1e-3, 2.0) == pytest.approx(3.0, rel=1e-12)


@pytest.mark.parametrize("args", [
    (0.0, 1e-3, 2.0),
    (1e-3, 0.0, 2.0),
    (-1e-3, 1e-3, 2.0),
    (1e-3, 1e-4, 1.0),
    (float("nan"), 1e-3, 2.0),
])
def test_order_undefined_cases(args):
    assert harness._order(*args) is None


def test_run_case_report_fields():
    prob = make_problem("piecewise_kappa_1d")
    rep = run_case(prob, 10, 8, lam=2.0)
    assert rep.problem == "piecewise_kappa_1d"
    assert (rep.N, rep.r, rep.lam, rep.hf_mode) == (10, 8, 2.0, "ratio")
    # frozen from the hand-counted grid: 46 nodes, 2 of them boundary
    assert rep.unknowns == 44
    assert 0 < rep.err_coarse < 1e-4
    assert 0 < rep.err_fine < 1e-4
    assert rep.wall_time > 0
    assert rep.m_matrix["sign_ok"] is True
    assert rep.m_matrix["row_sum_ok"] is True
    assert rep.order_coarse is None and rep.order_fine is None


def test_run_case_check_operator_toggle():
    prob = make_problem("piecewise_kappa_1d")
    rep = run_case(prob, 10, 4, check_operator=False)
    assert rep.m_matrix is None


def test_run_case_is_deterministic():
    prob = make_problem("piecewise_kappa_1d")
    a = run_case(prob, 10, 4)
    b = run_case(prob, 10, 4)
    assert a.err_coarse == b.err_coarse
    assert a.err_fine == b.err_fine
    assert a.unknowns == b.unknowns
    assert a.m_matrix == b.m_matrix


def test_run_case_detail_namespace():
    prob = make_problem("piecewise_kappa_1d")
    out = run_case(prob, 10, 4, detail=True)
    assert out.solution.shape[0] == out.grid.x.size
    assert out.system.matrix.shape == (out.grid.x.size,) * 2
    plain = run_case(prob, 10, 4)
    assert out.report.err_coarse == plain.err_coarse
    assert out.report.err_fine == plain.err_fine


def test_run_case_h2_mode_reports_effective_ratio():
    # h = 1/10, h_f = h**2, so the recorded ratio is 1/h = 10
    prob = make_problem("piecewise_kappa_1d")
    rep = run_case(prob, 10, 2, hf_mode="h2")
    assert rep.hf_mode == "h2"
    assert rep.r == 10


def test_build_grid_rejects_unknown_kind():
    prob = ProblemSpec(name="odd", kind="weird", domain=(0.0, 1.0),
                       f=lambda x, y, s: x, boundary=lambda x, y: 0.0 * x)
    with pytest.raises(BadParams):
        harness.build_grid(prob, 10, 2)


def test_convergence_study_attaches_orders():
    prob = make_problem("piecewise_kappa_1d")
    reps = convergence_study(prob, [(10, 4), (20, 4)])
    assert reps[0].order_coarse is None and reps[0].order_fine is None
    expect_c = harness._order(reps[0].err_coarse, reps[1].err_coarse, 2.0)
    expect_f = harness._order(reps[0].err_fine, reps[1].err_fine, 2.0)
    assert reps[1].order_coarse == pytest.approx(expect_c, rel=1e-12)
    assert reps[1].order_fine == pytest.approx(expect_f, rel=1e-12)


def test_convergence_study_refining_only_the_tube():
    # same N twice: no coarse scale change, fine scale is the r ratio
    prob = make_problem("piecewise_kappa_1d")
    reps = convergence_study(prob, [(10, 2), (10, 8)])
    assert reps[1].order_coarse is None
    expect_f = harness._order(reps[0].err_fine, reps[1].err_fine, 4.0)
    assert reps[1].order_fine == pytest.approx(expect_f, rel=1e-12)


def test_reference_errors_known_values_and_copy():
    ref = reference_errors("peskin_circle")
    assert ref["IB"][20] == pytest.approx(3.614e-1)
    assert ref["IIM"][320] == pytest.approx(1.5672e-5)
    assert "uniform grids" in ref["source"]
    ref["IB"][20] = 0.0
    again = reference_errors("peskin_circle")
    assert again["IB"][20] == pytest.approx(3.614e-1)


def test_reference_errors_missing_problem():
    assert reference_errors("flower") is None


def test_to_json_round_trip_and_reference_block():
    rep = report(problem="peskin_circle", N=40, r=4, err_coarse=5.9e-6,
                 err_fine=1.6e-5, order_coarse=2.1)
    rows = json.loads(to_json([rep]))
    assert len(rows) == 1
    row = rows[0]
    assert row["problem"] == "peskin_circle"
    assert row["lambda"] == 2.0
    assert row["order_fine"] is None
    assert row["reference"]["IB"] == pytest.approx(2.6467e-2)
    assert row["reference"]["IIM"] == pytest.approx(8.3461e-3)
    assert "source" in row["reference"]


def test_to_json_skips_reference_off_table():
    rep = report(problem="peskin_circle", N=30)
    row = json.loads(to_json([rep]))[0]
    assert "reference" not in row
    other = json.loads(to_json([report(problem="flower")]))[0]
    assert "reference" not in other


def test_to_json_nan_errors_become_null():
    rep = report(err_coarse=float("nan"), err_fine=float("nan"))
    row = json.loads(to_json([rep]))[0]
    assert row["err_coarse"] is None
    assert row["err_fine"] is None


def test_to_json_summarizes_operator_check():
    mm = {"sign_ok": True, "row_sum_ok": False,
          "offenders": [{"row": 1, "col": -1, "kind": "row_sum",
                         "value": 0.5}] * 2}
    row = json.loads(to_json([report(m_matrix=mm)]))[0]
    assert row["m_matrix"] == {"sign_ok": True, "row_sum_ok": False,
                               "offender_count": 2}
    bare = json.loads(to_json([report()]))[0]
    assert "m_matrix" not in bare


def test_run_case_without_exact_solution_reports_nan():
    prob = make_problem("piecewise_kappa_1d")
    blind = ProblemSpec(name=prob.name, kind=prob.kind, domain=prob.domain,
                        f=prob.f, boundary=prob.boundary, exact=None,
                        kappa_minus=prob.kappa_minus,
                        kappa_plus=prob.kappa_plus, jumps=prob.jumps,
                        alpha=prob.alpha)
    rep = run_case(blind, 10, 4)
    assert math.isnan(rep.err_coarse) and math.isnan(rep.err_fine)
