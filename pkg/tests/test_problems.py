"""Benchmark fixtures: closed forms verified against their own operators."""
import numpy as np
import pytest

from twogrid import problems
from twogrid.errors import BadParams, NoExactSolution, UnknownProblem
from twogrid.grid import GridParams, NodeTag, build_two_grid_1d


def test_registry_names():
    assert problems.problem_names() == [
        "boundary_layer_1d", "flower", "internal_layer",
        "line_interface_2d", "peskin_circle", "piecewise_kappa_1d"]


def test_unknown_problem():
    with pytest.raises(UnknownProblem):
        problems.make_problem("nope", {})


@pytest.mark.parametrize("name", problems.problem_names())
def test_selfcheck_every_fixture(name):
    # sixth-order finite differences applied to the closed-form solution
    # must reproduce f, and the prescribed jumps, to near rounding
    prob = problems.make_problem(name, {})
    rep = problems.selfcheck(prob, n=60, seed=3)
    assert rep["n"] == 60
    assert rep["pde_max_rel"] < 1e-7, rep
    if "jump_max_rel" in rep:
        assert rep["jump_max_rel"] < 1e-7, rep


def test_selfcheck_catches_wrong_rhs():
    prob = problems.make_problem("piecewise_kappa_1d", {})
    broken = problems.ProblemSpec(
        name="broken", kind=prob.kind, domain=prob.domain,
        f=lambda x, y, s: 11.0 * np.asarray(x, float) ** 2,
        boundary=prob.boundary, exact=prob.exact,
        kappa_minus=prob.kappa_minus, kappa_plus=prob.kappa_plus,
        jumps=prob.jumps, alpha=prob.alpha)
    rep = problems.selfcheck(broken, n=40, seed=0)
    assert rep["pde_max_rel"] > 1e-2


def test_parameter_overrides_and_validation():
    prob = problems.make_problem("piecewise_kappa_1d",
                                 {"kappa_minus": 2.0, "kappa_plus": 3.0})
    assert prob.kappa_minus == 2.0 and prob.kappa_plus == 3.0
    with pytest.raises(BadParams):
        problems.make_problem("piecewise_kappa_1d", {"kappa_minus": -1.0})
    with pytest.raises(BadParams):
        problems.make_problem("piecewise_kappa_1d", {"alpha": 1.5})
    with pytest.raises(BadParams):
        problems.make_problem("boundary_layer_1d", {"eps": 0.3})
    with pytest.raises(BadParams):
        problems.make_problem("peskin_circle", {"radius": 1.2})
    with pytest.raises(BadParams):
        problems.make_problem("flower", {"petals": 9})


def test_piecewise_exact_satisfies_jump_conditions():
    prob = problems.make_problem("piecewise_kappa_1d", {})
    a = prob.alpha
    # value jump folded into the shift: [u] = 0 and [kappa u'] = 0
    um = float(prob.exact(a, 0.0, -1))
    up = float(prob.exact(a, 0.0, 1))
    assert up - um == pytest.approx(0.0, abs=1e-14)
    km, kp = prob.kappa_minus, prob.kappa_plus
    assert km * 4 * a**3 / km == pytest.approx(kp * 4 * a**3 / kp)


def test_boundary_layer_recovers_boundary_values():
    prob = problems.make_problem("boundary_layer_1d", {})
    assert float(prob.exact(0.0, 0.0, 1)) == pytest.approx(1.0, abs=1e-12)
    assert float(prob.exact(1.0, 0.0, 1)) == pytest.approx(3.0, abs=1e-12)


def test_line_interface_continuous_value():
    prob = problems.make_problem("line_interface_2d", {})
    a = prob.alpha
    for yy in (0.2, 0.7):
        um = float(prob.exact(a, yy, -1))
        up = float(prob.exact(a, yy, 1))
        assert um == pytest.approx(up, abs=1e-14)


def test_internal_layer_has_no_jumps():
    prob = problems.make_problem("internal_layer", {})
    assert prob.jumps is None
    assert prob.interface is not None
    rep = problems.selfcheck(prob, n=30, seed=1)
    assert "jump_max_rel" not in rep


def test_exact_error_class_split():
    prob = problems.make_problem("piecewise_kappa_1d", {})
    g = build_two_grid_1d(GridParams(N=10, r=4, lam=2.0), alpha=prob.alpha)
    uex = np.asarray(prob.exact(g.x, g.y, g.sides().astype(int)), float)
    u = uex.copy()
    # plant one known error in each class and read it back
    ic = int(np.nonzero(g.tags == NodeTag.COARSE_REGULAR)[0][0])
    if_ = int(np.nonzero(g.tags == NodeTag.FINE_REGULAR)[0][0])
    ib = int(np.nonzero(g.tags == NodeTag.BOUNDARY)[0][0])
    u[ic] += 1e-3
    u[if_] -= 2e-3
    u[ib] += 5.0   # boundary never counts
    errs = problems.exact_error(prob, g, u)
    assert errs["coarse"] == pytest.approx(1e-3)
    assert errs["fine"] == pytest.approx(2e-3)
    assert errs["interior"] == pytest.approx(2e-3)


def test_exact_error_requires_closed_form():
    prob = problems.make_problem("piecewise_kappa_1d", {})
    anon = problems.ProblemSpec(
        name="anon", kind=prob.kind, domain=prob.domain, f=prob.f,
        boundary=prob.boundary, exact=None, jumps=prob.jumps,
        alpha=prob.alpha)
    g = build_two_grid_1d(GridParams(N=10, r=2, lam=2.0), alpha=prob.alpha)
    with pytest.raises(NoExactSolution):
        problems.exact_error(anon, g, np.zeros(g.n))
    with pytest.raises(NoExactSolution):
        problems.selfcheck(anon)


def test_flower_level_set_is_signed_distance_like():
    # the normalized field must vanish on the parametric curve and keep the
    # sign convention phi < 0 inside
    prob = problems.make_problem("flower", {})
    ls = prob.interface
    th = np.linspace(0.0, 2.0 * np.pi, 50)
    rho = 0.5 + 0.1 * np.sin(8.0 * th)
    on = ls.phi(rho * np.cos(th), rho * np.sin(th))
    assert np.abs(on).max() < 1e-12
    assert float(ls.phi(0.0, 0.0)) < 0.0
    assert float(ls.phi(0.9, 0.9)) > 0.0
