"""Benchmark problem definitions with closed-form solutions.

Every problem carries side-aware callables: ``f(x, y, side)`` and
``exact(x, y, side)`` where ``side`` is -1 on the minus side of the
interface (``phi <= 0``) and +1 elsewhere; both accept numpy arrays.
``boundary(x, y)`` is the Dirichlet trace. 1D problems ignore ``y``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import sympy

from .errors import BadParams, NoExactSolution, UnknownProblem
from .geometry import LevelSet
from .grid import NodeTag
from .iim import JumpData


@dataclass
class ProblemSpec:
    """A benchmark instance: coefficients, data, geometry, exact solution.

    ``kind`` selects the mesh builder: ``interface_1d``, ``layer_1d``,
    ``line`` or ``tube``. ``epsilon``/``conv`` are only set for singularly
    perturbed problems (``eps u'' + conv u' + K u = f``); elliptic interface
    problems use ``kappa_minus``/``kappa_plus`` and ``K``.
    """

    name: str
    kind: str
    domain: Tuple
    f: Callable
    boundary: Callable
    exact: Optional[Callable] = None
    kappa_minus: float = 1.0
    kappa_plus: float = 1.0
    K: float = 0.0
    jumps: Optional[JumpData] = None
    interface: Optional[LevelSet] = None
    alpha: Optional[float] = None
    epsilon: Optional[float] = None
    conv: float = 0.0

    @property
    def dim(self) -> int:
        return 1 if self.kind.endswith("_1d") else 2


def _take(params: Optional[dict], defaults: dict, name: str) -> dict:
    params = dict(params or {})
    unknown = set(params) - set(defaults)
    if unknown:
        raise BadParams(f"{name}: unknown parameters {sorted(unknown)}; "
                        f"accepted: {sorted(defaults)}")
    out = dict(defaults)
    out.update(params)
    return out


# ---------------------------------------------------------------------------
# 1D benchmarks
# ---------------------------------------------------------------------------

def _boundary_layer_1d(params) -> ProblemSpec:
    p = _take(params, {"eps": 1e-3}, "boundary_layer_1d")
    eps = float(p["eps"])
    if not 0 < eps <= 0.25:
        raise BadParams(f"eps must be in (0, 1/4], got {eps}")
    m = (1.0 + math.sqrt(1.0 - 4.0 * eps)) / (2.0 * eps)
    c2 = 2.0 / (1.0 - math.exp(-m))
    c1 = 3.0 - c2

    def exact(x, y, side):
        return c1 + c2 * np.exp(m * (np.asarray(x, dtype=float) - 1.0))

    return ProblemSpec(
        name="boundary_layer_1d", kind="layer_1d", domain=(0.0, 1.0),
        f=lambda x, y, side: c1 + 0.0 * np.asarray(x, dtype=float),
        boundary=lambda x, y: exact(x, y, 1),
        exact=exact, epsilon=eps, conv=-1.0, K=1.0)


def _piecewise_kappa_1d(params) -> ProblemSpec:
    p = _take(params, {"alpha": 17.0 / 30.0, "kappa_minus": 4.0,
                       "kappa_plus": 50.0}, "piecewise_kappa_1d")
    alpha = float(p["alpha"])
    km, kp = float(p["kappa_minus"]), float(p["kappa_plus"])
    if not 0 < alpha < 1:
        raise BadParams(f"alpha must be interior to (0, 1), got {alpha}")
    if km <= 0 or kp <= 0:
        raise BadParams("diffusion coefficients must be positive")
    shift = alpha**4 * (1.0 / km - 1.0 / kp)

    def exact(x, y, side):
        x = np.asarray(x, dtype=float)
        return np.where(np.asarray(side) < 0, x**4 / km, x**4 / kp + shift)

    return ProblemSpec(
        name="piecewise_kappa_1d", kind="interface_1d", domain=(0.0, 1.0),
        f=lambda x, y, side: 12.0 * np.asarray(x, dtype=float) ** 2,
        boundary=lambda x, y: exact(x, y, np.where(
            np.asarray(x, dtype=float) <= alpha, -1, 1)),
        exact=exact, kappa_minus=km, kappa_plus=kp,
        jumps=JumpData(C=0.0, Cbar=0.0), alpha=alpha)


# ---------------------------------------------------------------------------
# 2D benchmarks
# ---------------------------------------------------------------------------

def _line_interface_2d(params) -> ProblemSpec:
    p = _take(params, {"alpha": 33.0 / 70.0}, "line_interface_2d")
    alpha = float(p["alpha"])
    if not 0 < alpha < 1:
        raise BadParams(f"alpha must be interior to (0, 1), got {alpha}")

    def exact(x, y, side):
        x = np.asarray(x, dtype=float)
        base = np.sin(np.pi * np.asarray(y, dtype=float))
        return np.where(np.asarray(side) < 0,
                        x * (alpha - 1.0) + base, alpha * (x - 1.0) + base)

    return ProblemSpec(
        name="line_interface_2d", kind="line", domain=((0.0, 1.0), (0.0, 1.0)),
        f=lambda x, y, side: (-np.pi**2 * np.sin(np.pi * np.asarray(y, float))
                              + 0.0 * np.asarray(x, dtype=float)),
        boundary=lambda x, y: exact(x, y, np.where(
            np.asarray(x, dtype=float) <= alpha, -1, 1)),
        exact=exact, jumps=JumpData(C=1.0, Cbar=0.0), alpha=alpha)


def _peskin_circle(params) -> ProblemSpec:
    p = _take(params, {"radius": 0.5}, "peskin_circle")
    R = float(p["radius"])
    if not 0 < R < 1:
        raise BadParams(f"radius must be in (0, 1), got {R}")

    def phi(x, y):
        return np.hypot(x, y) - R

    def grad(x, y):
        r = max(math.hypot(x, y), 1e-300)
        return x / r, y / r

    ts = np.linspace(0.0, 2.0 * math.pi, 720, endpoint=False)
    samples = np.column_stack([R * np.cos(ts), R * np.sin(ts)])

    def exact(x, y, side):
        r2 = np.maximum(np.asarray(x, float) ** 2 + np.asarray(y, float) ** 2,
                        1e-300)
        return np.where(np.asarray(side) < 0, 1.0,
                        1.0 + np.log(np.sqrt(r2) / R))

    return ProblemSpec(
        name="peskin_circle", kind="tube",
        domain=((-1.0, 1.0), (-1.0, 1.0)),
        f=lambda x, y, side: 0.0 * np.asarray(x, dtype=float),
        boundary=lambda x, y: exact(x, y, 1),
        exact=exact,
        jumps=JumpData(w=0.0, v=1.0 / R, fjump=0.0),
        interface=LevelSet(phi=phi, grad=grad, samples=samples))


def _flower(params) -> ProblemSpec:
    p = _take(params, {"kappa_minus": 1.0, "kappa_plus": 10.0}, "flower")
    km, kp = float(p["kappa_minus"]), float(p["kappa_plus"])
    if km <= 0 or kp <= 0:
        raise BadParams("diffusion coefficients must be positive")

    def phi(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        th = np.arctan2(y, x)
        raw = r - 0.5 - 0.1 * np.sin(8.0 * th)
        norm = np.sqrt(1.0 + (0.8 * np.cos(8.0 * th)
                              / np.maximum(r, 0.35)) ** 2)
        return raw / norm

    ts = np.linspace(0.0, 2.0 * math.pi, 1440, endpoint=False)
    rho_s = 0.5 + 0.1 * np.sin(8.0 * ts)
    samples = np.column_stack([rho_s * np.cos(ts), rho_s * np.sin(ts)])

    def exact(x, y, side):
        r2 = np.maximum(np.asarray(x, float) ** 2 + np.asarray(y, float) ** 2,
                        1e-300)
        return np.where(np.asarray(side) < 0, r2 / km,
                        (r2 * r2 - 0.1 * np.log(2.0 * np.sqrt(r2))) / kp)

    jumps = _flower_jumps(km, kp)

    return ProblemSpec(
        name="flower", kind="tube", domain=((-1.0, 1.0), (-1.0, 1.0)),
        f=lambda x, y, side: np.where(
            np.asarray(side) < 0, 4.0,
            16.0 * (np.asarray(x, float) ** 2 + np.asarray(y, float) ** 2)),
        boundary=lambda x, y: exact(x, y, 1),
        exact=exact, kappa_minus=km, kappa_plus=kp, jumps=jumps,
        interface=LevelSet(phi=phi, samples=samples))


def _flower_jumps(km: float, kp: float) -> JumpData:
    """Interface data for the flower benchmark, differentiated along the
    curve with sympy and evaluated through the polar angle of the foot."""
    th = sympy.Symbol("theta", real=True)
    rho = sympy.Rational(1, 2) + sympy.Rational(1, 10) * sympy.sin(8 * th)
    Tx = sympy.diff(rho * sympy.cos(th), th)
    Ty = sympy.diff(rho * sympy.sin(th), th)
    speed = sympy.sqrt(Tx**2 + Ty**2)
    nx, ny = Ty / speed, -Tx / speed          # outward normal

    w = (rho**4 - sympy.log(2 * rho) / 10) / kp - rho**2 / km
    radial_dot_n = sympy.cos(th) * nx + sympy.sin(th) * ny
    v = (4 * rho**3 - 1 / (10 * rho) - 2 * rho) * radial_dot_n
    wp = sympy.diff(w, th) / speed
    wpp = sympy.diff(wp, th) / speed
    vp = sympy.diff(v, th) / speed

    fns = {name: sympy.lambdify(th, expr, "math")
           for name, expr in
           (("w", w), ("v", v), ("wp", wp), ("wpp", wpp), ("vp", vp))}

    def on_curve(name):
        fn = fns[name]
        return lambda x, y: float(fn(math.atan2(y, x)))

    return JumpData(
        w=on_curve("w"), v=on_curve("v"), wp=on_curve("wp"),
        wpp=on_curve("wpp"), vp=on_curve("vp"),
        fjump=lambda x, y: 16.0 * (x * x + y * y) - 4.0)


def _internal_layer(params) -> ProblemSpec:
    p = _take(params, {"eps": 0.01}, "internal_layer")
    eps = float(p["eps"])
    if eps <= 0:
        raise BadParams(f"eps must be positive, got {eps}")

    def sigma(x, y):
        return (np.asarray(x, dtype=float) ** 2
                + np.asarray(y, dtype=float) ** 2 + 0.75)

    def exact(x, y, side):
        return np.arctan((np.sqrt(sigma(x, y)) - 1.0) / eps)

    def f(x, y, side):
        sg = sigma(x, y)
        r2 = sg - 0.75
        s = (np.sqrt(sg) - 1.0) / eps
        lap_s = (2.0 / np.sqrt(sg) - r2 / sg**1.5) / eps
        grad_s2 = r2 / (eps * eps * sg)
        return lap_s / (1.0 + s * s) - 2.0 * s * grad_s2 / (1.0 + s * s) ** 2

    def phi(x, y):
        return np.sqrt(sigma(x, y)) - 1.0

    ts = np.linspace(0.0, 2.0 * math.pi, 720, endpoint=False)
    samples = 0.5 * np.column_stack([np.cos(ts), np.sin(ts)])

    return ProblemSpec(
        name="internal_layer", kind="tube", domain=((-1.0, 1.0), (-1.0, 1.0)),
        f=f, boundary=lambda x, y: exact(x, y, 1), exact=exact,
        interface=LevelSet(phi=phi, samples=samples))


# ---------------------------------------------------------------------------
# registry and error measurement
# ---------------------------------------------------------------------------

_REGISTRY = {
    "boundary_layer_1d": _boundary_layer_1d,
    "piecewise_kappa_1d": _piecewise_kappa_1d,
    "line_interface_2d": _line_interface_2d,
    "peskin_circle": _peskin_circle,
    "flower": _flower,
    "internal_layer": _internal_layer,
}


def problem_names() -> list:
    return sorted(_REGISTRY)


def make_problem(name: str, params: Optional[dict] = None) -> ProblemSpec:
    try:
        builder = _REGISTRY[name]
    except KeyError:
        raise UnknownProblem(
            f"{name!r}; known problems: {', '.join(problem_names())}") from None
    return builder(params)


# sixth-order central difference weights on offsets -3..3
_FD_OFFSETS = np.arange(-3, 4)
_FD_D1 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_FD_D2 = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0


def _fd_axis(fn, x, y, side, hd: float, weights, order: int, axis: int):
    acc = 0.0
    for off, wgt in zip(_FD_OFFSETS, weights):
        if axis == 0:
            acc = acc + wgt * np.asarray(fn(x + off * hd, y, side), float)
        else:
            acc = acc + wgt * np.asarray(fn(x, y + off * hd, side), float)
    return acc / hd**order


def _sample_off_interface(problem: ProblemSpec, rng, n: int, pad: float,
                          margin: float):
    """Uniform points in the domain, clear of boundaries and of the
    interface or layer by ``margin``. Returns (x, y, side)."""
    if problem.dim == 1:
        a, b = problem.domain
        hi = b - pad - (margin if problem.kind == "layer_1d" else 0.0)
        xs = np.empty(0)
        while len(xs) < n:
            cand = rng.uniform(a + pad, hi, size=2 * n)
            if problem.alpha is not None:
                cand = cand[np.abs(cand - problem.alpha) >= margin]
            xs = np.concatenate([xs, cand])[:n]
        ys = np.zeros_like(xs)
    else:
        (ax, bx), (ay, by) = problem.domain
        xs = np.empty(0)
        ys = np.empty(0)
        while len(xs) < n:
            cx = rng.uniform(ax + pad, bx - pad, size=4 * n)
            cy = rng.uniform(ay + pad, by - pad, size=4 * n)
            if problem.alpha is not None:
                keep = np.abs(cx - problem.alpha) >= margin
            elif problem.interface is not None:
                keep = np.abs(problem.interface.phi(cx, cy)) >= margin
            else:
                keep = np.ones(len(cx), dtype=bool)
            xs = np.concatenate([xs, cx[keep]])[:n]
            ys = np.concatenate([ys, cy[keep]])[:n]
    if problem.alpha is not None:
        side = np.where(xs <= problem.alpha, -1, 1)
    elif problem.interface is not None:
        side = np.where(problem.interface.phi(xs, ys) <= 0, -1, 1)
    else:
        side = np.ones(len(xs), dtype=int)
    return xs, ys, side


def _jump_value(val, px: float, py: float) -> float:
    return float(val(px, py)) if callable(val) else float(val)


def _interface_normal(problem: ProblemSpec, px: float, py: float, hd: float):
    ls = problem.interface
    if ls.grad is not None:
        gx, gy = ls.grad(px, py)
    else:
        gx = _fd_axis(lambda x, y, s: ls.phi(x, y), px, py, 0, hd,
                      _FD_D1, 1, 0)
        gy = _fd_axis(lambda x, y, s: ls.phi(x, y), px, py, 0, hd,
                      _FD_D1, 1, 1)
    norm = math.hypot(float(gx), float(gy))
    return float(gx) / norm, float(gy) / norm


def selfcheck(problem: ProblemSpec, n: int = 100, seed: int = 0) -> dict:
    """Spot-check the closed-form data of a fixture against its own PDE.

    Applies the problem's differential operator to ``exact`` by sixth-order
    central differences at ``n`` random points away from the interface or
    layer and compares with ``f``; where jump data is prescribed, the value,
    flux and source jumps of the closed forms are compared against it on
    interface points. Residuals are relative with the denominator floored
    at one. Returns ``{n, pde_max_rel[, jump_max_rel]}``.
    """
    if problem.exact is None:
        raise NoExactSolution(f"{problem.name} has no closed-form solution")
    rng = np.random.default_rng(seed)
    hd = 1e-3
    margin = 0.05
    x, y, side = _sample_off_interface(problem, rng, n, 4 * hd, margin)

    uxx = _fd_axis(problem.exact, x, y, side, hd, _FD_D2, 2, 0)
    if problem.epsilon is not None:
        ux = _fd_axis(problem.exact, x, y, side, hd, _FD_D1, 1, 0)
        u0 = np.asarray(problem.exact(x, y, side), float)
        lhs = problem.epsilon * uxx + problem.conv * ux + problem.K * u0
    else:
        lap = uxx
        if problem.dim == 2:
            lap = lap + _fd_axis(problem.exact, x, y, side, hd, _FD_D2, 2, 1)
        kap = np.where(side < 0, problem.kappa_minus, problem.kappa_plus)
        lhs = kap * lap + problem.K * np.asarray(problem.exact(x, y, side),
                                                 float)
    fv = np.asarray(problem.f(x, y, side), float)
    rel = np.abs(lhs - fv) / np.maximum(1.0, np.abs(fv))
    out = {"n": int(len(x)), "pde_max_rel": float(rel.max())}

    if problem.jumps is None:
        return out
    worst = 0.0
    if problem.dim == 2 and problem.interface is not None:
        rows = problem.interface.samples
        picks = rng.choice(len(rows), size=min(20, len(rows)), replace=False)
        for px, py in rows[picks]:
            nx, ny = _interface_normal(problem, px, py, hd)
            du = (float(problem.exact(px, py, 1))
                  - float(problem.exact(px, py, -1)))
            worst = max(worst, abs(du - _jump_value(problem.jumps.w, px, py)))
            line = lambda t, s: problem.exact(px + t * nx, py + t * ny, s)
            flux = (problem.kappa_plus
                    * _fd_axis(lambda t, _, s: line(t, s), 0.0, 0.0, 1,
                               hd, _FD_D1, 1, 0)
                    - problem.kappa_minus
                    * _fd_axis(lambda t, _, s: line(t, s), 0.0, 0.0, -1,
                               hd, _FD_D1, 1, 0))
            vref = _jump_value(problem.jumps.v, px, py)
            worst = max(worst, abs(float(flux) - vref) / max(1.0, abs(vref)))
            df = (float(problem.f(px, py, 1)) - float(problem.f(px, py, -1)))
            worst = max(worst, abs(
                df - _jump_value(problem.jumps.fjump, px, py)))
    elif problem.alpha is not None:
        ys = (rng.uniform(*problem.domain[1], size=8)
              if problem.dim == 2 else np.zeros(8))
        for py in ys:
            a = problem.alpha
            du = (float(problem.exact(a, py, 1))
                  - float(problem.exact(a, py, -1)))
            worst = max(worst, abs(du - problem.jumps.Cbar))
            flux = (problem.kappa_plus
                    * _fd_axis(problem.exact, a, py, 1, hd, _FD_D1, 1, 0)
                    - problem.kappa_minus
                    * _fd_axis(problem.exact, a, py, -1, hd, _FD_D1, 1, 0))
            worst = max(worst, abs(float(flux) - problem.jumps.C)
                        / max(1.0, abs(problem.jumps.C)))
    out["jump_max_rel"] = worst
    return out


_COARSE_TAGS = (NodeTag.COARSE_REGULAR, NodeTag.BORDER)
_FINE_TAGS = (NodeTag.FINE_REGULAR, NodeTag.FINE_IRREGULAR, NodeTag.HANGING)


def exact_error(problem: ProblemSpec, grid, u: np.ndarray) -> dict:
    """Max-norm solution error split by node class.

    ``coarse`` covers coarse-regular plus border nodes, ``fine`` the tube
    classes (fine regular/irregular and hanging). Boundary nodes are
    excluded everywhere.
    """
    if problem.exact is None:
        raise NoExactSolution(f"{problem.name} has no closed-form solution")
    uex = np.asarray(problem.exact(grid.x, grid.y, grid.sides().astype(int)),
                     dtype=float)
    err = np.abs(u - uex)
    tags = np.asarray(grid.tags)

    def emax(tag_list):
        mask = np.isin(tags, np.asarray(tag_list, dtype=tags.dtype))
        return float(err[mask].max()) if mask.any() else 0.0

    return {
        "coarse": emax(_COARSE_TAGS),
        "fine": emax(_FINE_TAGS),
        "interior": emax(_COARSE_TAGS + _FINE_TAGS),
    }
