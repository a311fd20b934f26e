"""System assembly: one discrete equation per node, dispatched on node tag.

The assembled matrix is full-size with identity rows at Dirichlet nodes, so
node ids and matrix rows coincide (``rowmap`` is the identity permutation)
and structural checks can look at interior rows without reindexing.
``assemble`` leaves the boundary right-hand side at zero;
:func:`apply_dirichlet` fills it in.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import stencils
from .errors import BadParams, UnsupportedRatio
from .grid import Grid1D, Grid2DLine, Grid2DTube, NodeTag
from .iim import (IrregularNode, iim_1d_irregular,
                  iim_discontinuous_stencil_2d, singular_source_stencil_2d)


@dataclass
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    rowmap: np.ndarray          # node id -> matrix row (identity layout)
    boundary: np.ndarray        # bool mask over rows
    tags: np.ndarray
    x: np.ndarray
    y: np.ndarray


class _Builder:
    def __init__(self, n: int):
        self.n = n
        self.rows = []
        self.cols = []
        self.vals = []
        self.rhs = np.zeros(n)

    def add(self, row, col, val) -> None:
        self.rows.append(np.atleast_1d(np.asarray(row, dtype=np.int64)))
        self.cols.append(np.atleast_1d(np.asarray(col, dtype=np.int64)))
        self.vals.append(np.atleast_1d(np.asarray(val, dtype=float)))

    def finish(self, grid) -> SparseSystem:
        rows = np.concatenate(self.rows)
        cols = np.concatenate(self.cols)
        if rows.min() < 0 or cols.min() < 0:
            raise AssertionError("stencil referenced a node outside the grid")
        vals = np.concatenate(self.vals)
        mat = sp.coo_matrix((vals, (rows, cols)),
                            shape=(self.n, self.n)).tocsr()
        return SparseSystem(matrix=mat, rhs=self.rhs,
                            rowmap=np.arange(self.n),
                            boundary=np.asarray(grid.tags) == NodeTag.BOUNDARY,
                            tags=np.asarray(grid.tags),
                            x=np.asarray(grid.x), y=np.asarray(grid.y))


def apply_dirichlet(system: SparseSystem, g) -> SparseSystem:
    """Fill boundary rows of the right side with ``g(x, y)``."""
    idx = np.nonzero(system.boundary)[0]
    system.rhs[idx] = g(system.x[idx], system.y[idx])
    return system


def apply_neumann_1d(system: SparseSystem, end: str,
                     flux: float) -> SparseSystem:
    """Replace one 1D boundary row with a flux condition u' = flux.

    Untested extension point; every shipped benchmark is Dirichlet. The row
    discretizes the derivative at the chosen ``end`` ('left' or 'right') to
    second order on the three nearest nodes, spacing-agnostic, so it works
    whether or not the refined patch touches that end. The opposite end must
    stay Dirichlet for solvability.
    """
    if end not in ("left", "right"):
        raise BadParams(f"end must be 'left' or 'right', not {end!r}")
    order = np.argsort(system.x, kind="stable")
    ids = order[:3] if end == "left" else order[-3:][::-1]
    row = int(ids[0])
    if not system.boundary[row]:
        raise BadParams(f"{end} end of the grid is not a boundary node")
    x0, x1, x2 = system.x[ids]
    w = (1.0 / (x0 - x1) + 1.0 / (x0 - x2),
         (x0 - x2) / ((x1 - x0) * (x1 - x2)),
         (x0 - x1) / ((x2 - x0) * (x2 - x1)))
    mat = system.matrix.tolil()
    mat[row, :] = 0.0
    for i, wi in zip(ids, w):
        mat[row, int(i)] = wi
    system.matrix = mat.tocsr()
    system.rhs[row] = flux
    return system


def assemble(grid, problem) -> SparseSystem:
    if isinstance(grid, Grid1D):
        return _assemble_1d(grid, problem)
    if isinstance(grid, Grid2DLine):
        return _assemble_line(grid, problem)
    if isinstance(grid, Grid2DTube):
        return _assemble_tube(grid, problem)
    raise BadParams(f"unknown grid type {type(grid).__name__}")


def _kappa_of(problem, side: int) -> float:
    return problem.kappa_minus if side < 0 else problem.kappa_plus


# ---------------------------------------------------------------------------
# 1D
# ---------------------------------------------------------------------------

def _assemble_1d(grid: Grid1D, problem) -> SparseSystem:
    n = grid.n
    x, tags = grid.x, grid.tags
    side = grid.sides()
    b = _Builder(n)
    h_f = grid.h_f

    pair = np.nonzero(tags == NodeTag.FINE_IRREGULAR)[0]
    pair_st = {}
    if len(pair):
        st_lo, st_hi = iim_1d_irregular(
            problem.kappa_minus, problem.kappa_plus, grid.alpha,
            float(x[pair[0]]), h_f, problem.jumps)
        pair_st = {int(pair[0]): st_lo, int(pair[1]): st_hi}

    for i in range(n):
        t = tags[i]
        if t == NodeTag.BOUNDARY:
            b.add(i, i, 1.0)
            continue
        if problem.epsilon is not None:
            st = stencils.centered_nonuniform_1d(
                problem.epsilon, problem.conv, problem.K,
                float(x[i] - x[i - 1]), float(x[i + 1] - x[i]))
        elif t == NodeTag.COARSE_REGULAR:
            st = stencils.compact4_uniform_1d(
                _kappa_of(problem, side[i]), problem.K, grid.h)
        elif t == NodeTag.BORDER:
            st = stencils.border_coeffs_1d(
                float(x[i] - x[i - 1]), float(x[i + 1] - x[i]),
                _kappa_of(problem, side[i]), problem.K)
        elif t == NodeTag.FINE_REGULAR:
            k = _kappa_of(problem, side[i])
            st = stencils.Stencil(
                center=0,
                alphas={-1: k / h_f**2, 0: -2.0 * k / h_f**2 + problem.K,
                        1: k / h_f**2},
                betas={0: 1.0})
        else:  # FINE_IRREGULAR
            st = pair_st[i]
            if problem.K:
                st.alphas[0] += problem.K
        for off, a in st.alphas.items():
            b.add(i, i + off, float(a))
        acc = st.correction
        for off, bw in st.betas.items():
            j = i + off
            acc += float(bw) * problem.f(float(x[j]), 0.0, int(side[j]))
        b.rhs[i] = acc
    return b.finish(grid)


# ---------------------------------------------------------------------------
# 2D strip around a vertical interface line
# ---------------------------------------------------------------------------

def _assemble_line(grid: Grid2DLine, problem) -> SparseSystem:
    if problem.K:
        raise BadParams("2D assembly supports only K == 0")
    cols = grid.cols
    ncol, N = grid.ncol, grid.N
    h_y = grid.h_y
    b = _Builder(grid.n)

    side_col = np.where(cols.x <= grid.alpha, -1, 1)
    pair = np.nonzero(cols.tags == NodeTag.FINE_IRREGULAR)[0]
    pair_st = {}
    if len(pair):
        st_lo, st_hi = iim_1d_irregular(
            problem.kappa_minus, problem.kappa_plus, grid.alpha,
            float(cols.x[pair[0]]), grid.h_f, problem.jumps)
        pair_st = {int(pair[0]): st_lo, int(pair[1]): st_hi}

    bnd = np.nonzero(grid.tags == NodeTag.BOUNDARY)[0]
    b.add(bnd, bnd, np.ones(len(bnd)))

    jr = np.arange(1, N)
    for c in range(1, ncol - 1):
        t = cols.tags[c]
        kc = _kappa_of(problem, side_col[c])
        if t == NodeTag.COARSE_REGULAR:
            if abs(h_y - grid.h) > 1e-12 * grid.h:
                raise BadParams("coarse strip columns need square cells")
            st = stencils.nine_point_compact_2d(grid.h, 0.0, kc)
        elif t == NodeTag.BORDER:
            st = stencils.border_coeffs_2d(
                float(cols.x[c] - cols.x[c - 1]),
                float(cols.x[c + 1] - cols.x[c]), h_y)
            st.alphas = {k: kc * v for k, v in st.alphas.items()}
        elif t == NodeTag.FINE_REGULAR:
            st = stencils.strip_mixed_order_2d(grid.h_f, h_y, kappa=kc)
        else:  # FINE_IRREGULAR
            g = pair_st[c].alphas
            st = stencils.strip_mixed_order_2d(
                grid.h_f, h_y, xgamma=(g[-1], g[0], g[1]),
                correction=pair_st[c].correction, kappa=kc)
        base = jr * ncol + c
        for (dx, dy), w in st.alphas.items():
            b.add(base, (jr + dy) * ncol + (c + dx), np.full(len(jr), w))
        acc = np.full(len(jr), float(st.correction))
        for (dx, dy), bw in st.betas.items():
            ys = grid.y[(jr + dy) * ncol]
            acc += float(bw) * problem.f(
                float(cols.x[c + dx]), ys, int(side_col[c + dx]))
        b.rhs[base] = acc
    return b.finish(grid)


# ---------------------------------------------------------------------------
# 2D tube around a level-set interface
# ---------------------------------------------------------------------------

_IRREGULAR_CANDIDATES = [
    (dx, dy) for dx in (-2, -1, 0, 1, 2) for dy in (-2, -1, 0, 1, 2)
    if (dx, dy) != (0, 0)]


def _assemble_tube(grid: Grid2DTube, problem) -> SparseSystem:
    if problem.K:
        raise BadParams("2D assembly supports only K == 0")
    n = grid.n
    tags, side = grid.tags, grid.side
    km, kp = problem.kappa_minus, problem.kappa_plus
    kap = np.where(side < 0, km, kp).astype(float)
    W, r = grid.W, grid.r
    h, h_f = grid.h, grid.h_f
    b = _Builder(n)

    def fvec(ids):
        return problem.f(grid.x[ids], grid.y[ids], side[ids].astype(int))

    bnd = np.nonzero(tags == NodeTag.BOUNDARY)[0]
    b.add(bnd, bnd, np.ones(len(bnd)))

    coarse = np.nonzero(tags == NodeTag.COARSE_REGULAR)[0]
    if len(coarse):
        proto = stencils.nine_point_compact_2d(h, 0.0, 1.0)
        cc = grid.codes[coarse]
        for (dx, dy), w in proto.alphas.items():
            nb = grid.id_of(cc + (dy * W + dx) * r)
            b.add(coarse, nb, w * kap[coarse])
        for (dx, dy), bw in proto.betas.items():
            nb = grid.id_of(cc + (dy * W + dx) * r)
            b.rhs[coarse] += bw * fvec(nb)

    plain = problem.jumps is None
    if plain:
        # Without an interface the side classification is vacuous, so nodes
        # straddling the level set's zero curve are ordinary fine nodes.
        fine = np.nonzero((tags == NodeTag.FINE_REGULAR)
                          | (tags == NodeTag.FINE_IRREGULAR))[0]
    else:
        fine = np.nonzero(tags == NodeTag.FINE_REGULAR)[0]
    if len(fine):
        fc = grid.codes[fine]
        if plain:
            # No interface crosses the tube, so the solution is smooth there
            # and the compact fourth order scheme applies on the fine lattice
            # as well.  A concave corner of the patch union can lack one
            # diagonal neighbour; those nodes keep the five point scheme.
            proto = stencils.nine_point_compact_2d(h_f, 0.0, 1.0)
            nb = {off: grid.id_of(fc + off[1] * W + off[0])
                  for off in proto.alphas if off != (0, 0)}
            ok = np.ones(len(fine), dtype=bool)
            for ids in nb.values():
                ok &= ids >= 0
            rows = fine[ok]
            for off, w in proto.alphas.items():
                tgt = rows if off == (0, 0) else nb[off][ok]
                b.add(rows, tgt, w * kap[rows])
            for off, bw in proto.betas.items():
                tgt = rows if off == (0, 0) else nb[off][ok]
                b.rhs[rows] += bw * fvec(tgt)
            fine, fc = fine[~ok], fc[~ok]
        for delta, w in ((1, 1.0), (-1, 1.0), (W, 1.0), (-W, 1.0), (0, -4.0)):
            nbi = grid.id_of(fc + delta)
            b.add(fine, nbi, w * kap[fine] / h_f**2)
        b.rhs[fine] = fvec(fine)

    cache = {}
    for i in np.nonzero(tags == NodeTag.HANGING)[0]:
        key = (r, int(grid.hang_j[i]))
        st = cache.get(key)
        if st is None:
            try:
                st = stencils.hanging_coeffs(*key)
            except UnsupportedRatio:
                st = stencils.derive_hanging_coeffs(*key)
            cache[key] = st
        flip = grid.hang_axis[i] == 1
        scal = kap[i] / h**2
        code = grid.codes[i]
        for (kx, ky), a in st.alphas.items():
            dx, dy = (ky, kx) if flip else (kx, ky)
            b.add(i, grid.id_of(code + dy * W + dx), float(a) * scal)
        acc = 0.0
        for (kx, ky), bw in st.betas.items():
            dx, dy = (ky, kx) if flip else (kx, ky)
            j = int(grid.id_of(code + dy * W + dx)[0])
            acc += float(bw) * problem.f(
                float(grid.x[j]), float(grid.y[j]), int(side[j]))
        b.rhs[i] = acc

    irr = np.nonzero(tags == NodeTag.FINE_IRREGULAR)[0] if not plain else []
    for i in irr:
        amap = {(0, 0): int(i)}
        for off in _IRREGULAR_CANDIDATES:
            j = int(grid.id_of(grid.codes[i] + off[1] * W + off[0])[0])
            if j >= 0:
                amap[off] = j
        node = IrregularNode(x=float(grid.x[i]), y=float(grid.y[i]), h_f=h_f,
                             side=int(side[i]),
                             available=set(amap) - {(0, 0)},
                             arm_side={off: int(side[j])
                                       for off, j in amap.items()})
        if km == kp:
            st = singular_source_stencil_2d(node, grid.ls, km, problem.jumps)
        else:
            st = iim_discontinuous_stencil_2d(node, grid.ls, km, kp,
                                              problem.jumps)
        for off, a in st.alphas.items():
            b.add(i, amap[off], float(a))
        b.rhs[i] = (problem.f(float(grid.x[i]), float(grid.y[i]),
                              int(side[i]))
                    + st.correction)
    return b.finish(grid)
