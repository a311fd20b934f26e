"""Interface-fitted stencils for nodes whose arms cross the interface.

One dimension: closed-form three-point coefficients for a diffusion
coefficient that jumps at ``alpha``, with right-side corrections built from
the prescribed value jump ``Cbar = [u]`` and flux jump ``C = [kappa u']``.

Two dimensions: the solution's Taylor data on one side of the interface
determines the data on the other side through the jump conditions

    [u] = w(s),   [kappa du/dn] = v(s)      (s = arclength)

together with the PDE ``kappa Lap u = f`` on each side (no reaction term
here). The affine transfer between the two six-component Taylor vectors is
the engine behind both 2D stencil builders: a corrected five-point scheme
when ``kappa`` is continuous, and a fitted multi-point scheme when it jumps.

Local frame convention (see :mod:`twogrid.geometry`): ``xi`` along the
normal toward the plus side, ``eta`` along the tangent; the interface is
locally the graph ``xi = chi/2 * eta**2`` with ``chi = -curvature``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .errors import BadParams, DegenerateDenominator, MultipleCrossings, SignViolation
from .geometry import InterfaceFrame, LevelSet, project_to_interface, segment_crossing
from .stencils import Stencil

ScalarOrField = Union[float, Callable[[float, float], float]]

_CROSS = ((1, 0), (-1, 0), (0, 1), (0, -1))
_BLOCK3 = tuple((di, dj) for dj in (-1, 0, 1) for di in (-1, 0, 1))
_EXTENDED = ((2, 0), (-2, 0), (0, 2), (0, -2))
_RING2 = tuple((di, dj) for dj in (-2, -1, 0, 1, 2) for di in (-2, -1, 0, 1, 2))


@dataclass
class JumpData:
    """Prescribed interface jumps, always oriented plus-side minus minus-side.

    ``w`` and ``v`` are the value and flux jumps (scalars or fields evaluated
    on the interface); ``C`` and ``Cbar`` are their one-dimensional scalar
    counterparts (flux and value respectively). ``wp``, ``wpp``, ``vp`` are
    optional arclength derivatives along the canonical tangent; when absent
    they are computed by differencing along the curve. ``fjump`` is the jump
    of the right-hand side across the interface.
    """

    w: ScalarOrField = 0.0
    v: ScalarOrField = 0.0
    C: float = 0.0
    Cbar: float = 0.0
    wp: Optional[Callable[[float, float], float]] = None
    wpp: Optional[Callable[[float, float], float]] = None
    vp: Optional[Callable[[float, float], float]] = None
    fjump: ScalarOrField = 0.0


# ---------------------------------------------------------------------------
# one-dimensional pair
# ---------------------------------------------------------------------------

def iim_1d_irregular(kminus: float, kplus: float, alpha: float, xj: float,
                     h_f: float, jumps: JumpData) -> Tuple[Stencil, Stencil]:
    """Fitted three-point stencils for the node pair straddling ``alpha``.

    ``xj`` is the last node on the minus side, so ``xj <= alpha < xj + h_f``.
    Returns the stencils for ``xj`` and ``xj + h_f``; offset keys are node
    steps relative to each stencil's own center. The schemes approximate
    ``kappa u'' = f`` with pointwise right side plus the returned correction.
    """
    if not xj <= alpha < xj + h_f:
        raise BadParams(f"alpha={alpha} not in [{xj}, {xj + h_f})")
    dk = kplus - kminus
    xjm1, xjp1, xjp2 = xj - h_f, xj + h_f, xj + 2 * h_f

    Dj = h_f**2 + dk * (xjm1 - alpha) * (xj - alpha) / (2 * kminus)
    Djp1 = h_f**2 - dk * (xjp2 - alpha) * (xjp1 - alpha) / (2 * kplus)
    if abs(Dj) < 1e-3 * h_f**2 or abs(Djp1) < 1e-3 * h_f**2:
        raise DegenerateDenominator(
            f"fitted-stencil denominator too small: D={Dj:.3e}, {Djp1:.3e}")

    gj = ((kminus - dk * (xj - alpha) / h_f) / Dj,
          (-2 * kminus + dk * (xjm1 - alpha) / h_f) / Dj,
          kplus / Dj)
    gjp1 = (kminus / Djp1,
            (-2 * kplus + dk * (xjp2 - alpha) / h_f) / Djp1,
            (kplus - dk * (xjp1 - alpha) / h_f) / Djp1)

    # corrections: jump polynomial of the one arm that lands across the
    # interface, written from the center node's side
    corr_j = gj[2] * (jumps.Cbar + (xjp1 - alpha) * jumps.C / kplus)
    corr_jp1 = -gjp1[0] * (jumps.Cbar + (xj - alpha) * jumps.C / kminus)

    st_j = Stencil(center=0, alphas={-1: gj[0], 0: gj[1], 1: gj[2]},
                   betas={0: 1.0}, correction=corr_j)
    st_jp1 = Stencil(center=0, alphas={-1: gjp1[0], 0: gjp1[1], 1: gjp1[2]},
                     betas={0: 1.0}, correction=corr_jp1)
    return st_j, st_jp1


# ---------------------------------------------------------------------------
# jump-data evaluation on the curve
# ---------------------------------------------------------------------------

def _ev(q: ScalarOrField, x: float, y: float) -> float:
    return float(q(x, y)) if callable(q) else float(q)


def _curve_samples(ls: LevelSet, frame: InterfaceFrame, eps: float):
    pp = project_to_interface(ls, frame.foot + eps * frame.tangent)
    pm = project_to_interface(ls, frame.foot - eps * frame.tangent)
    sp = float((pp.foot - frame.foot) @ frame.tangent)
    sm = float((pm.foot - frame.foot) @ frame.tangent)
    return pp.foot, sp, pm.foot, sm


def jump_scalars(ls: LevelSet, jumps: JumpData, frame: InterfaceFrame) -> dict:
    """Evaluate w, v, [f] and the tangential derivatives at a frame's foot."""
    x, y = frame.foot
    out = {
        "w": _ev(jumps.w, x, y),
        "v": _ev(jumps.v, x, y),
        "fj": _ev(jumps.fjump, x, y),
    }
    need_wd = callable(jumps.w) and (jumps.wp is None or jumps.wpp is None)
    need_vd = callable(jumps.v) and jumps.vp is None
    if need_wd or need_vd:
        eps = 1e-4 * ls.scale
        Pp, sp, Pm, sm = _curve_samples(ls, frame, eps)
        if need_wd:
            wv = np.array([_ev(jumps.w, *Pm), out["w"], _ev(jumps.w, *Pp)])
            coef = np.polyfit([sm, 0.0, sp], wv, 2)
            out["wp"] = float(coef[1])
            out["wpp"] = 2.0 * float(coef[0])
        if need_vd:
            out["vp"] = float((_ev(jumps.v, *Pp) - _ev(jumps.v, *Pm)) / (sp - sm))
    if jumps.wp is not None:
        out["wp"] = float(jumps.wp(x, y))
    if jumps.wpp is not None:
        out["wpp"] = float(jumps.wpp(x, y))
    if jumps.vp is not None:
        out["vp"] = float(jumps.vp(x, y))
    out.setdefault("wp", 0.0)
    out.setdefault("wpp", 0.0)
    out.setdefault("vp", 0.0)
    return out


# ---------------------------------------------------------------------------
# Taylor-data transfer across the interface
# ---------------------------------------------------------------------------

def transfer_minus_to_plus(km: float, kp: float, chi: float, js: dict):
    """Affine map from minus-side to plus-side Taylor data at a foot point.

    Component order ``(u, u_xi, u_eta, u_xixi, u_xieta, u_etaeta)``. Returns
    ``(M, J0, jf)`` with ``T_plus = M @ T_minus + J0 + jf * f_plus``; the
    ``u_xixi`` component is produced by the plus-side PDE, so the map never
    reads ``u_xixi`` of the minus side.
    """
    w, wp, wpp, v, vp = js["w"], js["wp"], js["wpp"], js["v"], js["vp"]
    q = km / kp
    M = np.zeros((6, 6))
    M[0, 0] = 1.0
    M[1, 1] = q
    M[2, 2] = 1.0
    M[3, 1] = chi * (km - kp) / kp
    M[3, 5] = -1.0
    M[4, 2] = chi * (1.0 - q)
    M[4, 4] = q
    M[5, 1] = chi * (1.0 - q)
    M[5, 5] = 1.0
    J0 = np.array([
        w,
        v / kp,
        wp,
        chi * v / kp - wpp,
        chi * wp + vp / kp,
        wpp - chi * v / kp,
    ])
    jf = np.zeros(6)
    jf[3] = 1.0 / kp
    return M, J0, jf


def transfer_from_side(side: int, km: float, kp: float, chi: float, js: dict):
    """Transfer away from ``side`` (-1: minus->plus, +1: plus->minus).

    The reverse map is the forward one with the roles of the two sides
    swapped and the jump data negated; the frame (and ``chi``) is unchanged.
    """
    if side < 0:
        return transfer_minus_to_plus(km, kp, chi, js)
    neg = {k: -js[k] for k in ("w", "wp", "wpp", "v", "vp")}
    return transfer_minus_to_plus(kp, km, chi, neg)


def _basis_row(dx: float, dy: float, frame: InterfaceFrame, foot) -> np.ndarray:
    xi = dx * frame.normal[0] + dy * frame.normal[1]
    eta = dx * frame.tangent[0] + dy * frame.tangent[1]
    return np.array([1.0, xi, eta, 0.5 * xi * xi, xi * eta, 0.5 * eta * eta])


# ---------------------------------------------------------------------------
# irregular-node description handed over by the assembler
# ---------------------------------------------------------------------------

@dataclass
class IrregularNode:
    """Geometry of one fine node whose five-point arms cross the interface.

    ``arm_side`` carries the grid's side classification of the neighbors.
    Passing it is essential for consistency: a neighbor sitting exactly on
    the interface must be coupled with the side the grid assigned to its
    unknown, which re-evaluating phi from slightly different coordinate
    arithmetic can get wrong by one ulp. When absent, sides are recomputed
    from the level set (fine for standalone use away from such ties).
    """

    x: float
    y: float
    h_f: float
    side: int                      # -1 on the minus side (phi <= 0), +1 otherwise
    available: Set[Tuple[int, int]]  # neighbor offsets present in the grid
    arm_side: Optional[dict] = None  # offset -> -1 / +1, from the grid


def _arm_sides(node: IrregularNode, ls: LevelSet) -> dict:
    """Side of each 3x3 (and extension) offset; checks arms for double crossings."""
    sides = {(0, 0): node.side}
    for off in set(node.available):
        if node.arm_side is not None and off in node.arm_side:
            sides[off] = node.arm_side[off]
        else:
            px = node.x + off[0] * node.h_f
            py = node.y + off[1] * node.h_f
            sides[off] = -1 if float(ls.phi(px, py)) <= 0.0 else 1
    for di, dj in _CROSS:
        if (di, dj) not in sides:
            continue
        mx = node.x + 0.5 * di * node.h_f
        my = node.y + 0.5 * dj * node.h_f
        mid = -1 if float(ls.phi(mx, my)) <= 0.0 else 1
        if mid != sides[(0, 0)] and mid != sides[(di, dj)]:
            raise MultipleCrossings(
                f"arm ({di},{dj}) of node ({node.x:.4g},{node.y:.4g}) "
                "crosses the interface more than once")
    return sides


# ---------------------------------------------------------------------------
# continuous-kappa path: five-point scheme with jump corrections
# ---------------------------------------------------------------------------

def singular_source_stencil_2d(node: IrregularNode, ls: LevelSet, kappa: float,
                               jumps: JumpData) -> Stencil:
    """Corrected five-point scheme for ``kappa Lap u = f`` with interface jumps.

    ``kappa`` must be the same on both sides. Each arm that crosses the
    interface contributes the jump Taylor polynomial, expanded at that arm's
    own crossing point, to the right-hand-side correction.
    """
    h = node.h_f
    sides = _arm_sides(node, ls)
    sgn = 1.0 if node.side < 0 else -1.0
    alphas = {(0, 0): -4.0 * kappa / h**2}
    corr = 0.0
    for di, dj in _CROSS:
        alphas[(di, dj)] = kappa / h**2
        if sides[(di, dj)] == node.side:
            continue
        nb = np.array([node.x + di * h, node.y + dj * h])
        try:
            Xc = segment_crossing(ls, (node.x, node.y), nb)
        except ValueError:
            # grid-side tie: the crossing sits on an endpoint to within
            # rounding, so phi shows no sign change along the arm
            ctr = np.array([node.x, node.y])
            Xc = nb if abs(float(ls.phi(*nb))) <= abs(
                float(ls.phi(*ctr))) else ctr
        frame = project_to_interface(ls, Xc)
        js = jump_scalars(ls, jumps, frame)
        chi = -frame.curvature
        juxi = js["v"] / kappa
        jueta = js["wp"]
        juee = js["wpp"] - chi * js["v"] / kappa
        juxx = js["fj"] / kappa - juee
        juxe = chi * js["wp"] + js["vp"] / kappa
        d = nb - frame.foot
        b = _basis_row(d[0], d[1], frame, frame.foot)
        jpoly = (js["w"] * b[0] + juxi * b[1] + jueta * b[2]
                 + juxx * b[3] + juxe * b[4] + juee * b[5])
        corr += sgn * alphas[(di, dj)] * jpoly
    return Stencil(center=(0, 0), alphas=alphas, betas={(0, 0): 1.0},
                   correction=corr)


# ---------------------------------------------------------------------------
# discontinuous-kappa path: fitted stencil via constrained least squares
# ---------------------------------------------------------------------------

def _candidate_rows(node: IrregularNode, ls: LevelSet, offsets, frame,
                    kc: float, ko: float, M, J0, jf, sides):
    """Per-candidate expansion over the center side's reduced Taylor basis.

    Basis: ``(u, u_xi, u_eta, u_xieta, u_etaeta)`` of the center side plus
    carriers for f on each side; ``u_xixi`` is eliminated through the PDE.
    Returns (A5, fsame, fother, const) columns per candidate.
    """
    foot = frame.foot
    A5, fsame, fother, const = [], [], [], []
    for di, dj in offsets:
        dx = node.x + di * node.h_f - foot[0]
        dy = node.y + dj * node.h_f - foot[1]
        b = _basis_row(dx, dy, frame, foot)
        if sides[(di, dj)] == node.side:
            A5.append([b[0], b[1], b[2], b[4], b[5] - b[3]])
            fsame.append(b[3] / kc)
            fother.append(0.0)
            const.append(0.0)
        else:
            c = M.T @ b
            A5.append([c[0], c[1], c[2], c[4], c[5]])
            fsame.append(0.0)
            fother.append(float(b @ jf))
            const.append(float(b @ J0))
    return (np.array(A5).T, np.array(fsame), np.array(fother), np.array(const))


def _constrained_fit(A: np.ndarray, rhs: np.ndarray, scale: float,
                     center_idx: int) -> Optional[np.ndarray]:
    """Find g with ``A g = rhs``, off-center ``g >= 0`` and ``g[center] < 0``.

    Solved as a small linear program minimizing the total off-center weight
    (the constant-consistency row forces a zero row sum, so the diagonal is
    minus that total and monotonicity comes out maximally diagonally
    dominant). ``scale`` is the natural weight magnitude, used to condition
    the LP and to reject a vanishing diagonal. Returns None when infeasible.
    """
    from scipy.optimize import linprog

    n = A.shape[1]
    As = A * scale
    rownorm = np.maximum(np.abs(As).max(axis=1), 1e-300)
    An = As / rownorm[:, None]
    bn = rhs / rownorm
    cost = np.ones(n)
    cost[center_idx] = 0.0
    bounds = [(None, 0.0) if k == center_idx else (0.0, None)
              for k in range(n)]
    res = linprog(cost, A_eq=An, b_eq=bn, bounds=bounds, method="highs")
    if not res.success:
        return None
    ghat = res.x
    if float(np.abs(An @ ghat - bn).max()) > 1e-7:
        return None
    if ghat[center_idx] > -1e-9:
        return None
    g = ghat * scale
    g[np.abs(g) < 1e-13 * scale] = 0.0
    return g


def iim_discontinuous_stencil_2d(node: IrregularNode, ls: LevelSet,
                                 kminus: float, kplus: float,
                                 jumps: JumpData) -> Stencil:
    """Fitted stencil at a fine node where the diffusion coefficient jumps.

    All available 3x3 neighbors are candidates; consistency with the
    interface problem (both sides expanded about the common projection foot,
    coupled by the jump transfer) fixes six linear conditions, and the
    remaining freedom is spent on the monotone sign pattern with the least
    total off-center weight. If no sign-feasible stencil exists on the 3x3
    block, the candidate set is widened to the distance-2 arm points and
    then to the full 5x5 ring before giving up.
    """
    frame = project_to_interface(ls, (node.x, node.y))
    chi = -frame.curvature
    js = jump_scalars(ls, jumps, frame)
    kc = kminus if node.side < 0 else kplus
    ko = kplus if node.side < 0 else kminus
    M, J0, jf = transfer_from_side(node.side, kminus, kplus, chi, js)
    sides = _arm_sides(node, ls)
    fold = 1.0 if node.side < 0 else -1.0   # f_other = f_center + fold * [f]

    def attempt(offsets):
        offsets = [o for o in offsets if o == (0, 0) or o in node.available]
        A5, fsame, fother, const = _candidate_rows(
            node, ls, offsets, frame, kc, ko, M, J0, jf, sides)
        A = np.vstack([A5, (fsame + fother)[None, :]])
        rhs = np.zeros(6)
        rhs[5] = 1.0
        g = _constrained_fit(A, rhs, kc / node.h_f**2, offsets.index((0, 0)))
        if g is None:
            return None
        corr = float(g @ const) + float(g @ fother) * fold * js["fj"]
        alphas = {off: float(g[k]) for k, off in enumerate(offsets) if g[k] != 0.0}
        alphas.setdefault((0, 0), float(g[offsets.index((0, 0))]))
        return Stencil(center=(0, 0), alphas=alphas, betas={(0, 0): 1.0},
                       correction=corr)

    st = attempt(list(_BLOCK3))
    if st is None:
        st = attempt(list(_BLOCK3) + list(_EXTENDED))
    if st is None:
        st = attempt(list(_RING2))
    if st is None:
        raise SignViolation(
            f"no sign-feasible fitted stencil at ({node.x:.4g},{node.y:.4g})")
    return st
