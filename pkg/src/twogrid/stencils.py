"""Finite-difference stencils for the composite two-grid discretization.

Every generator returns a :class:`Stencil` describing one row of the linear
system in the form

    sum_k alpha_k * U(x_center + offset_k)  =  sum_k beta_k * f(...) + correction

Offsets are dictionary keys; their units are documented per generator. Sign
convention throughout: negative diagonal, nonnegative off-diagonal entries
(the assembled operator approximates ``kappa * Lap u + K u``).

The transition ("hanging") stencils that tie fine tube nodes to the coarse
lattice come in two flavors: a lookup table for the refinement ratios used by
the benchmarks, and an exact rational derivation that reproduces the table
and extends it to arbitrary ratios.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Dict, Optional, Tuple, Union

from .errors import BadParams, InconsistentSystem, UnsupportedRatio

Number = Union[float, Fraction]


@dataclass
class Stencil:
    """One discrete equation: U-weights, f-weights, and an RHS correction."""

    center: Union[int, Tuple[int, int]]
    alphas: Dict
    betas: Dict
    correction: Number = 0.0

    def alpha_sum(self) -> Number:
        return sum(self.alphas.values())

    def beta_sum(self) -> Number:
        return sum(self.betas.values())


# ---------------------------------------------------------------------------
# one-dimensional stencils
# ---------------------------------------------------------------------------

def compact4_uniform_1d(kappa: float, K: float, h: float) -> Stencil:
    """Fourth-order compact scheme for ``kappa u'' + K u = f`` on spacing ``h``.

    The reaction term is folded onto the left side through the same 1-10-1
    averaging that is applied to ``f``. Offset keys are node steps.
    """
    betas = {-1: 1.0 / 12.0, 0: 10.0 / 12.0, 1: 1.0 / 12.0}
    alphas = {
        -1: kappa / h**2 + K * betas[-1],
        0: -2.0 * kappa / h**2 + K * betas[0],
        1: kappa / h**2 + K * betas[1],
    }
    return Stencil(center=0, alphas=alphas, betas=betas)


def border_coeffs_1d(h1: float, h2: float, kappa: float, K: float) -> Stencil:
    """Third-order one-sided-compact scheme at a mesh-size transition.

    The center node has a neighbor at distance ``h1`` to the left and ``h2``
    to the right. Offset keys -1, 0, +1 refer to those three nodes. Reduces
    to :func:`compact4_uniform_1d` when ``h1 == h2``. The f-weights sum to
    one; the outer ones may be negative for strongly graded spacings.

    Arithmetic is type-preserving: Fraction inputs give exact rational
    coefficients.
    """
    if h1 <= 0 or h2 <= 0:
        raise BadParams(f"spacings must be positive, got h1={h1}, h2={h2}")
    s = h1 + h2
    betas = {
        -1: (h1 * h1 - h2 * h2 + h1 * h2) / (6 * h1 * s),
        0: (h1 * h1 + h2 * h2 + 3 * h1 * h2) / (6 * h1 * h2),
        1: (-h1 * h1 + h2 * h2 + h1 * h2) / (6 * h2 * s),
    }
    alphas = {
        -1: 2 * kappa / (h1 * s) + K * betas[-1],
        0: -2 * kappa / (h1 * h2) + K * betas[0],
        1: 2 * kappa / (h2 * s) + K * betas[1],
    }
    return Stencil(center=0, alphas=alphas, betas=betas)


def centered_nonuniform_1d(eps: float, p: float, q: float,
                           h1: float, h2: float) -> Stencil:
    """Second-order centered scheme for ``eps u'' + p u' + q u = f``.

    Neighbors at ``-h1`` and ``+h2``; plain pointwise right side.
    """
    if h1 <= 0 or h2 <= 0:
        raise BadParams(f"spacings must be positive, got h1={h1}, h2={h2}")
    s = h1 + h2
    d2 = {-1: 2.0 / (h1 * s), 0: -2.0 / (h1 * h2), 1: 2.0 / (h2 * s)}
    d1 = {-1: -h2 / h1 / s, 0: (h2 / h1 - h1 / h2) / s, 1: h1 / h2 / s}
    alphas = {k: eps * d2[k] + p * d1[k] for k in (-1, 0, 1)}
    alphas[0] += q
    return Stencil(center=0, alphas=alphas, betas={0: 1.0})


# ---------------------------------------------------------------------------
# two-dimensional stencils
# ---------------------------------------------------------------------------

def nine_point_compact_2d(h: float, K: float, kappa: float = 1.0) -> Stencil:
    """Fourth-order compact nine-point scheme on a uniform square grid.

    Offset keys are ``(di, dj)`` node steps. The right side averages ``f``
    over the cross with weights 8/12 center, 1/12 per edge; the reaction
    term folds through the same weights.
    """
    alphas: Dict[Tuple[int, int], float] = {}
    betas: Dict[Tuple[int, int], float] = {(0, 0): 8.0 / 12.0}
    for di, dj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        alphas[(di, dj)] = kappa / (6.0 * h * h)
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        alphas[(di, dj)] = 4.0 * kappa / (6.0 * h * h) + K / 12.0
        betas[(di, dj)] = 1.0 / 12.0
    alphas[(0, 0)] = -20.0 * kappa / (6.0 * h * h) + K * betas[(0, 0)]
    return Stencil(center=(0, 0), alphas=alphas, betas=betas)


def strip_mixed_order_2d(h_f: float, h_y: float,
                         xgamma: Optional[Tuple[float, float, float]] = None,
                         correction: float = 0.0,
                         kappa: float = 1.0) -> Stencil:
    """Anisotropic scheme for strips refined in x only (fine ``h_f``, coarse ``h_y``).

    Couples a fourth-order compact treatment of ``kappa u_xx`` (1-10-1
    weighting of the rows above/at/below) with the plain three-point
    ``kappa u_yy``. Offset keys ``(di, dj)``: x-steps of ``h_f``, y-steps of
    ``h_y``.

    ``xgamma`` overrides the three x-direction weights, which is how an
    interface-fitted triple (with its RHS ``correction``) is lifted into the
    strip; the default is ``kappa * (1, -2, 1)/h_f**2``. ``kappa`` always
    scales the y-part.
    """
    if xgamma is None:
        xgamma = (kappa / h_f**2, -2.0 * kappa / h_f**2, kappa / h_f**2)
    gm, g0, gp = xgamma
    w = {-1: gm, 0: g0, 1: gp}
    alphas: Dict[Tuple[int, int], float] = {}
    for di in (-1, 0, 1):
        alphas[(di, 0)] = 10.0 / 12.0 * w[di]
        alphas[(di, 1)] = w[di] / 12.0
        alphas[(di, -1)] = w[di] / 12.0
    alphas[(0, 1)] += kappa / h_y**2
    alphas[(0, -1)] += kappa / h_y**2
    alphas[(0, 0)] += -2.0 * kappa / h_y**2
    betas = {(0, -1): 1.0 / 12.0, (0, 0): 10.0 / 12.0, (0, 1): 1.0 / 12.0}
    return Stencil(center=(0, 0), alphas=alphas, betas=betas, correction=correction)


def border_coeffs_2d(h1: float, h2: float, h_y: float) -> Stencil:
    """Transition column scheme: x-neighbors at ``-h1`` and ``+h2``, y-step ``h_y``.

    Nine U-weights on the 3x3 patch and five f-weights (the x-triple plus the
    two y-neighbors; no corner f-weights). Offset keys ``(di, dj)`` with
    ``di`` in (-1, 0, 1) mapping to physical x-offsets ``(-h1, 0, +h2)``.
    The f-weights sum to one and reduce to the nine-point averaging when
    ``h1 == h2 == h_y``. Derived by matching all monomials through total
    degree four; see :func:`derive_border_coeffs_2d` for the exact version.
    """
    if h1 <= 0 or h2 <= 0 or h_y <= 0:
        raise BadParams("spacings must be positive")
    s = h1 + h2
    hy2 = h_y * h_y
    alphas = {
        (-1, 0): (-h1 * h1 - h1 * h2 + h2 * h2 + 5 * hy2) / (3 * h1 * hy2 * s),
        (0, 0): -(h1 * h1 + 3 * h1 * h2 + h2 * h2 + 5 * hy2) / (3 * h1 * h2 * hy2),
        (1, 0): (h1 * h1 - h1 * h2 - h2 * h2 + 5 * hy2) / (3 * h2 * hy2 * s),
    }
    for dj in (-1, 1):
        alphas[(-1, dj)] = (h1 * h1 + h1 * h2 - h2 * h2 + hy2) / (6 * h1 * hy2 * s)
        alphas[(0, dj)] = (h1 * h1 + 3 * h1 * h2 + h2 * h2 - hy2) / (6 * h1 * h2 * hy2)
        alphas[(1, dj)] = (-h1 * h1 + h1 * h2 + h2 * h2 + hy2) / (6 * h2 * hy2 * s)
    betas = {
        (-1, 0): (h1 * h1 + h1 * h2 - h2 * h2) / (6 * h1 * s),
        (0, 0): s * s / (6 * h1 * h2),
        (1, 0): (-h1 * h1 + h1 * h2 + h2 * h2) / (6 * h2 * s),
        (0, -1): 1.0 / 12.0,
        (0, 1): 1.0 / 12.0,
    }
    return Stencil(center=(0, 0), alphas=alphas, betas=betas)


# ---------------------------------------------------------------------------
# transition (hanging-node) stencils: table and derivation engine
# ---------------------------------------------------------------------------

def _F(a, b=1) -> Fraction:
    return Fraction(a, b)


# rows keyed by primitive (ratio, offset); entries
# (corner_left, corner_right, mid_left, mid_right, self, beta_left, beta_right)
# normalized to coarse spacing 1. Non-primitive combinations reduce by gcd;
# offsets past the midpoint mirror left<->right.
_HANGING_TABLE: Dict[Tuple[int, int], Tuple[Fraction, ...]] = {
    (2, 1): (_F(1, 2), _F(1, 2), _F(3), _F(3), _F(-8), _F(1, 2), _F(1, 2)),
    (4, 1): (_F(7, 12), _F(5, 12), _F(41, 6), _F(11, 6), _F(-32, 3), _F(7, 12), _F(5, 12)),
    (8, 1): (_F(5, 8), _F(3, 8), _F(59, 4), _F(43, 28), _F(-128, 7), _F(5, 8), _F(3, 8)),
    (8, 3): (_F(13, 24), _F(11, 24), _F(17, 4), _F(137, 60), _F(-128, 15), _F(13, 24), _F(11, 24)),
    (16, 1): (_F(31, 48), _F(17, 48), _F(737, 24), _F(57, 40), _F(-512, 15), _F(31, 48), _F(17, 48)),
    (16, 3): (_F(29, 48), _F(19, 48), _F(227, 24), _F(521, 312), _F(-512, 39), _F(29, 48), _F(19, 48)),
    (16, 5): (_F(9, 16), _F(7, 16), _F(211, 40), _F(179, 88), _F(-512, 55), _F(9, 16), _F(7, 16)),
    (16, 7): (_F(25, 48), _F(23, 48), _F(593, 168), _F(187, 72), _F(-512, 63), _F(25, 48), _F(23, 48)),
}

_TABULATED_RATIOS = (2, 4, 8, 16)


def _hanging_stencil_from_row(row: Tuple[Fraction, ...], r: int, j: int) -> Stencil:
    a1, a2, a3, a4, a5, b1, b2 = row
    alphas = {
        (-j, -r): a1, (r - j, -r): a2,
        (-j, 0): a3, (r - j, 0): a4,
        (-j, r): a1, (r - j, r): a2,
        (0, 0): a5,
    }
    betas = {(-j, 0): b1, (r - j, 0): b2}
    return Stencil(center=(0, 0), alphas=alphas, betas=betas, correction=Fraction(0))


def hanging_coeffs(r: int, j: int) -> Stencil:
    """Tabulated seven-point transition stencil for a tube-edge fine node.

    The node sits between two coarse neighbors a coarse step ``h`` apart, at
    ``j`` fine steps (``j*h/r``) from the left one. The seven U-weights live
    on the two coarse columns at y-offsets ``0, +-h`` plus the node itself;
    the two f-weights sit on the flanking coarse nodes. Offset keys are in
    fine steps ``h/r`` relative to the node, so the coarse columns are at
    ``-j`` and ``r - j`` and the y-offsets are ``+-r``. Values are exact
    rationals normalized to ``h = 1``; scale by ``kappa / h**2`` to apply.

    Only ratios 2, 4, 8, 16 are tabulated; other ratios go through
    :func:`derive_hanging_coeffs`.
    """
    r, j = int(r), int(j)
    if r not in _TABULATED_RATIOS:
        raise UnsupportedRatio(f"ratio {r} is not tabulated (have {_TABULATED_RATIOS})")
    if not 1 <= j <= r - 1:
        raise BadParams(f"offset j={j} out of range for ratio {r}")
    g = gcd(r, j)
    rr, jj = r // g, j // g
    mirrored = jj > rr - jj
    if mirrored:
        jj = rr - jj
    row = _HANGING_TABLE[(rr, jj)]
    if mirrored:
        a1, a2, a3, a4, a5, b1, b2 = row
        row = (a2, a1, a4, a3, a5, b2, b1)
    return _hanging_stencil_from_row(row, r, j)


def _solve_exact(rows, rhs):
    """Gaussian elimination over exact rationals; raises on singular systems."""
    n = len(rows)
    A = [list(map(Fraction, row)) + [Fraction(v)] for row, v in zip(rows, rhs)]
    for col in range(n):
        piv = next((k for k in range(col, n) if A[k][col] != 0), None)
        if piv is None:
            raise InconsistentSystem("derivation system is singular")
        A[col], A[piv] = A[piv], A[col]
        pv = A[col][col]
        A[col] = [v / pv for v in A[col]]
        for k in range(n):
            if k != col and A[k][col] != 0:
                fac = A[k][col]
                A[k] = [vk - fac * vc for vk, vc in zip(A[k], A[col])]
    return [A[k][n] for k in range(n)]


def derive_hanging_coeffs(r: int, j: int, kappa=1, K=0) -> Stencil:
    """Derive the transition stencil from scratch in exact rational arithmetic.

    Builds the scheme ``sum alpha u = sum beta (kappa Lap u + K u)`` on the
    seven-point support, symmetric in y, that annihilates every monomial of
    total degree <= 4 except the pure ``x**4`` and ``y**4`` terms, with the
    f-weights summing to one. The system is square and uniquely solvable for
    any ratio ``r >= 2``; for tabulated ratios (with ``kappa=1, K=0``) it
    reproduces :func:`hanging_coeffs` exactly. Geometry is normalized to a
    coarse spacing of one, like the table.
    """
    r, j = int(r), int(j)
    if r < 2:
        raise BadParams(f"refinement ratio must be >= 2, got {r}")
    if not 1 <= j <= r - 1:
        raise BadParams(f"offset j={j} out of range for ratio {r}")
    kap = Fraction(kappa)
    KK = Fraction(K)
    d2 = Fraction(j, r)   # distance to the left coarse neighbor
    d1 = 1 - d2           # distance to the right one

    def mono(k1: int, k2: int, x: Fraction, y: Fraction) -> Fraction:
        return x**k1 * y**k2

    def source(k1: int, k2: int, x: Fraction, y: Fraction) -> Fraction:
        lap = Fraction(0)
        if k1 >= 2:
            lap += k1 * (k1 - 1) * x ** (k1 - 2) * y**k2
        if k2 >= 2:
            lap += k2 * (k2 - 1) * x**k1 * y ** (k2 - 2)
        return kap * lap + KK * mono(k1, k2, x, y)

    # y-odd monomials hold by symmetry; x**4 and y**4 are released
    monos = [(0, 0), (1, 0), (2, 0), (3, 0), (0, 2), (1, 2), (2, 2)]
    one = Fraction(1)
    rows, rhs = [], []
    for k1, k2 in monos:
        rows.append([
            mono(k1, k2, -d2, one) + mono(k1, k2, -d2, -one),   # corner pair, left
            mono(k1, k2, d1, one) + mono(k1, k2, d1, -one),     # corner pair, right
            mono(k1, k2, -d2, Fraction(0)),                      # mid left
            mono(k1, k2, d1, Fraction(0)),                       # mid right
            mono(k1, k2, Fraction(0), Fraction(0)),              # self
            -source(k1, k2, -d2, Fraction(0)),                   # beta left
            -source(k1, k2, d1, Fraction(0)),                    # beta right
            -source(k1, k2, Fraction(0), Fraction(0)),           # beta self
        ])
        rhs.append(Fraction(0))
    rows.append([Fraction(0)] * 5 + [Fraction(1)] * 3)
    rhs.append(Fraction(1))
    a1, a2, a3, a4, a5, b1, b2, b3 = _solve_exact(rows, rhs)

    st = _hanging_stencil_from_row((a1, a2, a3, a4, a5, b1, b2), r, j)
    if b3 != 0:
        st.betas[(0, 0)] = b3
    return st


def derive_border_coeffs_2d(h1: Fraction, h2: Fraction, h_y: Fraction) -> Stencil:
    """Exact-rational version of :func:`border_coeffs_2d`.

    Solves the same degree-four matching system (y-symmetric U-weights on the
    3x3 patch, f-weights on the x-triple and the two y-neighbors) by exact
    elimination instead of evaluating the closed forms. Used by the CLI and
    as a cross-check in the test suite.
    """
    h1, h2, h_y = Fraction(h1), Fraction(h2), Fraction(h_y)
    if h1 <= 0 or h2 <= 0 or h_y <= 0:
        raise BadParams("spacings must be positive")

    def mono(k1, k2, x, y):
        return x**k1 * y**k2

    def lap(k1, k2, x, y):
        out = Fraction(0)
        if k1 >= 2:
            out += k1 * (k1 - 1) * x ** (k1 - 2) * y**k2
        if k2 >= 2:
            out += k2 * (k2 - 1) * x**k1 * y ** (k2 - 2)
        return out

    # unknowns: aW aC aE (dy=0), aWn aCn aEn (dy=+-1 pairs),
    #           bW bC bE (dy=0), bCn (dy=+-1 pair)
    monos = [(0, 0), (1, 0), (2, 0), (3, 0), (4, 0), (0, 2), (0, 4), (1, 2), (2, 2)]
    xs = (-h1, Fraction(0), h2)
    rows, rhs = [], []
    for k1, k2 in monos:
        row = [mono(k1, k2, x, Fraction(0)) for x in xs]
        row += [mono(k1, k2, x, h_y) + mono(k1, k2, x, -h_y) for x in xs]
        row += [-lap(k1, k2, x, Fraction(0)) for x in xs]
        row += [-(lap(k1, k2, Fraction(0), h_y) + lap(k1, k2, Fraction(0), -h_y))]
        rows.append(row)
        rhs.append(Fraction(0))
    rows.append([Fraction(0)] * 6 + [Fraction(1)] * 3 + [Fraction(2)])
    rhs.append(Fraction(1))
    aW, aC, aE, aWn, aCn, aEn, bW, bC, bE, bCn = _solve_exact(rows, rhs)
    alphas = {(-1, 0): aW, (0, 0): aC, (1, 0): aE}
    for dj in (-1, 1):
        alphas[(-1, dj)] = aWn
        alphas[(0, dj)] = aCn
        alphas[(1, dj)] = aEn
    betas = {(-1, 0): bW, (0, 0): bC, (1, 0): bE, (0, -1): bCn, (0, 1): bCn}
    return Stencil(center=(0, 0), alphas=alphas, betas=betas, correction=Fraction(0))
