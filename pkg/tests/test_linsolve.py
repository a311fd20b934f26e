"""Solver contract, extended-precision fallback, operator checks."""
from types import SimpleNamespace

import numpy as np
import pytest
import scipy.sparse as sp

from twogrid import problems
from twogrid.assembly import apply_dirichlet, assemble
from twogrid.errors import NoConvergence, SingularMatrix
from twogrid.grid import GridParams, build_two_grid_1d
from twogrid.linsolve import reduce_dirichlet, solve, verify_m_matrix


def fake_system(dense, boundary=None, rhs=None):
    n = len(dense)
    return SimpleNamespace(
        matrix=sp.csr_matrix(np.asarray(dense, dtype=float)),
        rhs=np.zeros(n) if rhs is None else np.asarray(rhs, dtype=float),
        boundary=np.zeros(n, dtype=bool) if boundary is None
        else np.asarray(boundary, dtype=bool))


def assembled_1d(N=10, r=4):
    prob = problems.make_problem("piecewise_kappa_1d", {})
    g = build_two_grid_1d(GridParams(N=N, r=r, lam=2.0), alpha=prob.alpha)
    sys_ = assemble(g, prob)
    apply_dirichlet(sys_, lambda x, y: prob.boundary(x, y))
    return sys_


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def test_solve_meets_residual_contract():
    sys_ = assembled_1d()
    u = solve(sys_)
    res = np.linalg.norm(sys_.matrix @ u - sys_.rhs)
    assert res <= 1e-12 * np.linalg.norm(sys_.rhs)


def test_solve_respects_custom_tolerance():
    sys_ = assembled_1d()
    u = solve(sys_, tol=1e-6)
    res = np.linalg.norm(sys_.matrix @ u - sys_.rhs)
    assert res <= 1e-6 * np.linalg.norm(sys_.rhs)


def test_solve_zero_rhs_returns_zero():
    sys_ = fake_system(np.diag([2.0, 3.0, 4.0]))
    u = solve(sys_)
    assert (np.asarray(u, dtype=float) == 0.0).all()


def test_solve_singular_matrix():
    sys_ = fake_system([[1.0, 0.0], [0.0, 0.0]], rhs=[1.0, 1.0])
    with pytest.raises(SingularMatrix):
        solve(sys_)


def test_solve_extended_precision_fallback():
    # a cancellation-heavy row: the double-precision residual floor
    # eps * ||A| |u|| sits above the contract, the longdouble pass does not
    big = 1e6
    sys_ = fake_system([[big, -big + 1.0], [0.0, 1.0]], rhs=[0.1, 0.1])
    u = solve(sys_)
    assert u.dtype == np.longdouble
    assert np.asarray(u, dtype=float) == pytest.approx([0.1, 0.1])
    res = np.linalg.norm(np.asarray(
        sys_.matrix.astype(np.longdouble) @ u - sys_.rhs, dtype=float))
    assert res <= 1e-12 * np.linalg.norm(sys_.rhs)


def test_solve_reports_unattainable_contract():
    big = 1e12
    sys_ = fake_system([[big, -big + 1.0], [0.0, 1.0]], rhs=[0.1, 0.1])
    with pytest.raises(NoConvergence, match="exceeds"):
        solve(sys_)


# ---------------------------------------------------------------------------
# verify_m_matrix
# ---------------------------------------------------------------------------

def laplacian_like(n=6):
    d = np.zeros((n, n))
    for i in range(1, n - 1):
        d[i, i - 1] = 1.0
        d[i, i] = -2.0
        d[i, i + 1] = 1.0
    d[0, 0] = d[-1, -1] = 1.0
    bnd = np.zeros(n, dtype=bool)
    bnd[0] = bnd[-1] = True
    return d, bnd


def test_verify_clean_operator():
    d, bnd = laplacian_like()
    rep = verify_m_matrix(fake_system(d, boundary=bnd))
    assert rep["sign_ok"] and rep["row_sum_ok"]
    assert rep["offenders"] == []


def test_verify_flags_positive_diagonal():
    d, bnd = laplacian_like()
    d[2, 2] = 2.0
    rep = verify_m_matrix(fake_system(d, boundary=bnd))
    assert not rep["sign_ok"]
    kinds = [o for o in rep["offenders"] if o["kind"] == "diagonal_sign"]
    assert kinds == [{"row": 2, "col": 2, "kind": "diagonal_sign",
                      "value": 2.0}]


def test_verify_flags_negative_offdiagonal():
    d, bnd = laplacian_like()
    d[2, 3] = -0.5
    rep = verify_m_matrix(fake_system(d, boundary=bnd))
    assert not rep["sign_ok"]
    off = [o for o in rep["offenders"]
           if o["kind"] == "negative_offdiagonal"]
    assert off == [{"row": 2, "col": 3, "kind": "negative_offdiagonal",
                    "value": -0.5}]


def test_verify_flags_positive_row_sum():
    d, bnd = laplacian_like()
    d[2, 3] = 3.0   # interior row sum becomes +2, signs stay legal
    rep = verify_m_matrix(fake_system(d, boundary=bnd))
    assert rep["sign_ok"]
    assert not rep["row_sum_ok"]
    sums = [o for o in rep["offenders"] if o["kind"] == "row_sum"]
    assert sums == [{"row": 2, "col": -1, "kind": "row_sum", "value": 2.0}]


def test_verify_requires_dominance_witness():
    # interior block with exact zero row sums and no boundary coupling:
    # weak dominance alone cannot rule out a singular operator
    d = np.array([[1.0, 0.0, 0.0],
                  [0.0, -2.0, 2.0],
                  [0.0, 2.0, -2.0]])
    bnd = np.array([True, False, False])
    rep = verify_m_matrix(fake_system(d, boundary=bnd))
    assert rep["sign_ok"]
    assert not rep["row_sum_ok"]
    assert {"row": -1, "col": -1, "kind": "row_sum",
            "value": 0.0} in rep["offenders"]


def test_verify_tolerates_roundoff_noise():
    d, bnd = laplacian_like()
    d[2, 3] = -1e-15   # far below the relative sign tolerance
    d[3, 3] = -2.0 + 1e-15
    rep = verify_m_matrix(fake_system(d, boundary=bnd))
    assert rep["sign_ok"] and rep["row_sum_ok"]


def test_verify_caps_offender_list():
    n = 80
    d = np.diag(np.ones(n))   # every interior diagonal has the wrong sign
    bnd = np.zeros(n, dtype=bool)
    bnd[0] = bnd[-1] = True
    rep = verify_m_matrix(fake_system(d, boundary=bnd), max_offenders=10)
    assert not rep["sign_ok"]
    diag_off = [o for o in rep["offenders"] if o["kind"] == "diagonal_sign"]
    assert len(diag_off) == 10


def test_verify_all_boundary_is_vacuously_fine():
    d = np.diag([1.0, 1.0])
    rep = verify_m_matrix(fake_system(d, boundary=[True, True]))
    assert rep["sign_ok"] and rep["row_sum_ok"]


def test_verify_on_assembled_benchmark():
    rep = verify_m_matrix(assembled_1d())
    assert rep["sign_ok"] and rep["row_sum_ok"]


# ---------------------------------------------------------------------------
# reduce_dirichlet and the comparison principle
# ---------------------------------------------------------------------------

def test_reduce_dirichlet_matches_full_solve():
    sys_ = assembled_1d()
    u_full = np.asarray(solve(sys_), dtype=float)
    A_int, rhs_int, interior = reduce_dirichlet(sys_)
    u_int = np.asarray(solve(SimpleNamespace(matrix=A_int, rhs=rhs_int)),
                       dtype=float)
    assert u_int == pytest.approx(u_full[interior], abs=1e-10)


def test_comparison_principle_on_perturbed_rhs():
    # the assembled operator has negative diagonal and non-negative
    # off-diagonals with weak dominance, so raising f anywhere lowers the
    # solution everywhere
    sys_ = assembled_1d()
    u0 = np.asarray(solve(sys_), dtype=float)
    rng = np.random.default_rng(7)
    interior = np.nonzero(~sys_.boundary)[0]
    for row in rng.choice(interior, size=5, replace=False):
        rhs = sys_.rhs.copy()
        rhs[row] += 1.0
        u1 = np.asarray(solve(SimpleNamespace(matrix=sys_.matrix, rhs=rhs)),
                        dtype=float)
        diff = u1 - u0
        assert diff.max() <= 1e-10
        assert diff.min() < -1e-12
