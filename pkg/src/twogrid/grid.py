"""Composite two-grid meshes: coarse background plus a refined interface tube.

Three constructions share one node taxonomy:

* 1D: coarse nodes outside a tube around the interface point (or abutting
  one boundary for layer problems), fine nodes inside, one border node on
  each seam.
* 2D "line": a vertical-interface strip; every 1D column is extruded along
  uniform coarse rows.
* 2D "tube": a full coarse lattice everywhere; coarse nodes within
  ``lam * h`` of the interface sprout ``(2r+1)`` x ``(2r+1)`` fine patches
  whose union is the tube. Fine nodes on the tube rim that do not coincide
  with the coarse lattice hang between two coarse neighbors.

Node ids are deterministic: sorted by x in 1D and row-major (y, then x)
in 2D.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional, Tuple, Union

import numpy as np

from .errors import BadParams, EmptyTube, TubeTooWide
from .geometry import LevelSet


class NodeTag(IntEnum):
    COARSE_REGULAR = 0
    FINE_REGULAR = 1
    FINE_IRREGULAR = 2
    BORDER = 3
    HANGING = 4
    BOUNDARY = 5


TAG_NAMES = {
    NodeTag.COARSE_REGULAR: "coarse_regular",
    NodeTag.FINE_REGULAR: "fine_regular",
    NodeTag.FINE_IRREGULAR: "fine_irregular",
    NodeTag.BORDER: "border",
    NodeTag.HANGING: "hanging",
    NodeTag.BOUNDARY: "boundary",
}


@dataclass
class GridParams:
    """Mesh parameters: ``N`` coarse cells, refinement ratio ``r``, tube
    half-width ``lam`` in units of the coarse spacing.

    ``domain`` is ``(a, b)`` in 1D and ``((ax, bx), (ay, by))`` in 2D (a bare
    ``(a, b)`` is promoted to the square). ``hf_mode='h2'`` requests
    ``h_f = h**2`` instead of ``h / r`` (1D and line grids only); the coarse
    spacing must then divide it evenly.
    """

    N: int
    r: int
    lam: float = 2.0
    domain: Tuple = (0.0, 1.0)
    hf_mode: str = "ratio"

    def __post_init__(self) -> None:
        if self.N < 4:
            raise BadParams(f"need at least 4 coarse cells, got N={self.N}")
        if self.hf_mode not in ("ratio", "h2"):
            raise BadParams(f"unknown hf_mode {self.hf_mode!r}")
        if self.hf_mode == "ratio" and self.r < 2:
            raise BadParams(f"refinement ratio must be >= 2, got {self.r}")
        if self.lam <= 0:
            raise BadParams(f"tube half-width must be positive, got {self.lam}")


def _interval(domain) -> Tuple[float, float]:
    a, b = float(domain[0]), float(domain[1])
    if not b > a:
        raise BadParams(f"empty interval ({a}, {b})")
    return a, b


def _square(domain) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    if np.ndim(domain[0]) == 0:
        iv = _interval(domain)
        return iv, iv
    return _interval(domain[0]), _interval(domain[1])


def _effective_ratio(params: GridParams, h: float) -> int:
    if params.hf_mode == "ratio":
        return params.r
    ratio = h / (h * h)          # h_f = h**2
    r_eff = int(round(ratio))
    if r_eff < 2 or abs(ratio - r_eff) > 1e-9 * ratio:
        raise BadParams(
            f"h**2 refinement needs the coarse spacing to divide it; h={h}")
    return r_eff


# ---------------------------------------------------------------------------
# one dimension
# ---------------------------------------------------------------------------

@dataclass
class Grid1D:
    params: GridParams
    x: np.ndarray
    tags: np.ndarray
    h: float
    h_f: float
    r_eff: int
    alpha: Optional[float] = None
    layer: bool = False

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def y(self) -> np.ndarray:
        return np.zeros_like(self.x)

    def sides(self) -> np.ndarray:
        if self.alpha is None:
            return np.ones(self.n, dtype=np.int8)
        return np.where(self.x <= self.alpha, -1, 1).astype(np.int8)


def build_two_grid_1d(params: GridParams, alpha: Optional[float],
                      refine_edge: Optional[str] = None) -> Grid1D:
    """One-dimensional composite grid.

    With ``alpha`` given, the tube is the smallest coarse-node interval
    containing ``[alpha - lam*h, alpha + lam*h]`` (borders snap outward onto
    coarse nodes). With ``refine_edge='right'`` the fine zone spans the last
    ``lam`` coarse cells instead, for boundary-layer problems.
    """
    a, b = _interval(params.domain)
    h = (b - a) / params.N
    r_eff = _effective_ratio(params, h)
    h_f = h / r_eff

    if refine_edge is not None:
        if refine_edge != "right":
            raise BadParams(f"unsupported refine_edge {refine_edge!r}")
        i_lo = int(math.floor(params.N - params.lam + 1e-10))
        if not 1 <= i_lo <= params.N - 1:
            raise TubeTooWide(f"layer zone of {params.lam} cells leaves no "
                              f"coarse interior for N={params.N}")
        i_hi = params.N
    else:
        if alpha is None:
            raise BadParams("interface grids need alpha")
        if not a < alpha < b:
            raise BadParams(f"alpha={alpha} outside ({a}, {b})")
        # snap outward to coarse nodes; a tube hitting the boundary is fine
        # in 1D (the border node simply degenerates into a Dirichlet node)
        i_lo = max(0, int(math.floor((alpha - params.lam * h - a) / h + 1e-10)))
        i_hi = min(params.N,
                   int(math.ceil((alpha + params.lam * h - a) / h - 1e-10)))

    xs = [a + i * h for i in range(i_lo + 1)]
    tags = [NodeTag.COARSE_REGULAR] * (i_lo + 1)
    tags[i_lo] = NodeTag.BORDER
    tags[0] = NodeTag.BOUNDARY

    m = (i_hi - i_lo) * r_eff
    x_lo = a + i_lo * h
    for k in range(1, m):
        xs.append(x_lo + k * h_f)
        tags.append(NodeTag.FINE_REGULAR)

    if refine_edge is None:
        for i in range(i_hi, params.N + 1):
            xs.append(a + i * h)
            tags.append(NodeTag.COARSE_REGULAR)
        tags[len(xs) - (params.N - i_hi) - 1] = NodeTag.BORDER
        tags[-1] = NodeTag.BOUNDARY
    else:
        xs.append(b)
        tags.append(NodeTag.BOUNDARY)

    x = np.array(xs)
    tag_arr = np.array(tags, dtype=np.int8)

    if refine_edge is None and alpha is not None:
        fine_idx = np.nonzero(tag_arr == NodeTag.FINE_REGULAR)[0]
        below = fine_idx[x[fine_idx] <= alpha]
        if len(below) and below[-1] + 1 < len(x):
            j = below[-1]
            tag_arr[j] = NodeTag.FINE_IRREGULAR
            tag_arr[j + 1] = NodeTag.FINE_IRREGULAR

    return Grid1D(params=params, x=x, tags=tag_arr, h=h, h_f=h_f,
                  r_eff=r_eff, alpha=alpha, layer=refine_edge is not None)


# ---------------------------------------------------------------------------
# 2D, refined along a vertical interface line
# ---------------------------------------------------------------------------

@dataclass
class Grid2DLine:
    params: GridParams
    cols: Grid1D
    N: int
    h: float
    h_y: float
    alpha: float
    x: np.ndarray
    y: np.ndarray
    tags: np.ndarray

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def ncol(self) -> int:
        return self.cols.n

    @property
    def h_f(self) -> float:
        return self.cols.h_f

    def node_id(self, row: int, col: int) -> int:
        return row * self.cols.n + col

    def sides(self) -> np.ndarray:
        return np.where(self.x <= self.alpha, -1, 1).astype(np.int8)


def build_line_two_grid_2d(params: GridParams, alpha: float) -> Grid2DLine:
    """Strip grid for a straight interface ``x = alpha``: columns from the 1D
    construction, uniform coarse rows in y."""
    (ax, bx), (ay, by) = _square(params.domain)
    cols = build_two_grid_1d(
        GridParams(params.N, params.r, params.lam, (ax, bx), params.hf_mode),
        alpha)
    h_y = (by - ay) / params.N
    ncol = cols.n
    nrow = params.N + 1

    x = np.tile(cols.x, nrow)
    y = np.repeat(ay + h_y * np.arange(nrow), ncol)
    tags = np.tile(cols.tags, nrow)
    tags[:ncol] = NodeTag.BOUNDARY
    tags[-ncol:] = NodeTag.BOUNDARY
    tags[::ncol] = NodeTag.BOUNDARY
    tags[ncol - 1::ncol] = NodeTag.BOUNDARY

    return Grid2DLine(params=params, cols=cols, N=params.N, h=cols.h, h_y=h_y,
                      alpha=alpha, x=x, y=y, tags=tags)


# ---------------------------------------------------------------------------
# 2D, refined in a tube around a level-set interface
# ---------------------------------------------------------------------------

@dataclass
class Grid2DTube:
    params: GridParams
    ls: LevelSet
    N: int
    h: float
    h_f: float
    r: int
    W: int                      # row stride of the global fine lattice
    codes: np.ndarray           # sorted: code = py * W + px
    px: np.ndarray
    py: np.ndarray
    x: np.ndarray
    y: np.ndarray
    tags: np.ndarray
    side: np.ndarray            # -1 where phi <= 0, +1 elsewhere
    hang_axis: np.ndarray       # 0: between x-neighbors, 1: y; -1 elsewhere
    hang_j: np.ndarray          # fine offset from the lower/left coarse node

    @property
    def n(self) -> int:
        return len(self.codes)

    def sides(self) -> np.ndarray:
        return self.side

    def id_of(self, codes) -> np.ndarray:
        """Node ids for fine-lattice codes; -1 where no node exists."""
        codes = np.atleast_1d(np.asarray(codes, dtype=np.int64))
        pos = np.searchsorted(self.codes, codes)
        pos = np.clip(pos, 0, self.n - 1)
        ok = self.codes[pos] == codes
        return np.where(ok, pos, -1)


def build_tube_two_grid_2d(params: GridParams, ls: LevelSet) -> Grid2DTube:
    """Tube-refined grid around the zero set of ``ls``.

    Every coarse node within ``lam * h`` of the interface (inclusive, as
    measured by ``|phi|``) is a patch parent; parents must stay two coarse
    cells clear of the boundary or :class:`TubeTooWide` is raised.
    """
    if params.hf_mode != "ratio":
        raise BadParams("tube grids support only hf_mode='ratio'")
    (ax, bx), (ay, by) = _square(params.domain)
    N, r = params.N, params.r
    h = (bx - ax) / N
    if abs((by - ay) / N - h) > 1e-12 * h:
        raise BadParams("tube grids need square coarse cells")
    h_f = h / r
    W = N * r + 1

    ii = np.arange(N + 1)
    CI, CJ = np.meshgrid(ii, ii, indexing="ij")
    phi_c = np.asarray(ls.phi(ax + CI * h, ay + CJ * h), dtype=float)
    pmask = np.abs(phi_c) <= params.lam * h + 1e-12 * ls.scale
    if not pmask.any():
        raise EmptyTube("no coarse node lies within lam*h of the interface")
    pi, pj = CI[pmask], CJ[pmask]
    if pi.min() < 2 or pi.max() > N - 2 or pj.min() < 2 or pj.max() > N - 2:
        raise TubeTooWide("refinement patches reach within two coarse cells "
                          "of the boundary; shrink lam or refine")

    off = np.arange(-r, r + 1)
    OX, OY = np.meshgrid(off, off, indexing="ij")
    patch_px = (pi[:, None, None] * r + OX[None]).ravel()
    patch_py = (pj[:, None, None] * r + OY[None]).ravel()
    rcodes = np.unique(patch_py.astype(np.int64) * W + patch_px)

    ccodes = (CJ.ravel().astype(np.int64) * r * W + CI.ravel() * r)
    codes = np.unique(np.concatenate([rcodes, ccodes]))

    px = (codes % W).astype(np.int64)
    py = (codes // W).astype(np.int64)
    x = ax + px * h_f
    y = ay + py * h_f
    phi = np.asarray(ls.phi(x, y), dtype=float)
    side = np.where(phi <= 0.0, -1, 1).astype(np.int8)

    def in_r(c):
        pos = np.searchsorted(rcodes, c)
        pos = np.clip(pos, 0, len(rcodes) - 1)
        return rcodes[pos] == c

    inR = in_r(codes)
    n_e = in_r(codes + 1)
    n_w = in_r(codes - 1)
    n_n = in_r(codes + W)
    n_s = in_r(codes - W)
    fine4 = n_e & n_w & n_n & n_s
    coincident = (px % r == 0) & (py % r == 0)

    tags = np.full(len(codes), NodeTag.COARSE_REGULAR, dtype=np.int8)
    hang_axis = np.full(len(codes), -1, dtype=np.int8)
    hang_j = np.zeros(len(codes), dtype=np.int32)

    fine_cls = inR & fine4
    hanging = inR & ~fine4 & ~coincident
    tags[fine_cls] = NodeTag.FINE_REGULAR

    on_xline = py % r == 0
    on_yline = px % r == 0
    bad = hanging & ~on_xline & ~on_yline
    if bad.any():
        raise AssertionError("tube rim left the coarse lattice lines")
    hx = hanging & on_xline
    hy = hanging & on_yline & ~on_xline
    tags[hanging] = NodeTag.HANGING
    hang_axis[hx] = 0
    hang_axis[hy] = 1
    hang_j[hx] = px[hx] % r
    hang_j[hy] = py[hy] % r

    # fine nodes whose arms change side are irregular
    idx_fine = np.nonzero(fine_cls)[0]
    if len(idx_fine):
        own = side[idx_fine]
        irr = np.zeros(len(idx_fine), dtype=bool)
        for delta in (1, -1, W, -W):
            nb_pos = np.searchsorted(codes, codes[idx_fine] + delta)
            nb_pos = np.clip(nb_pos, 0, len(codes) - 1)
            irr |= side[nb_pos] != own
        tags[idx_fine[irr]] = NodeTag.FINE_IRREGULAR

    on_boundary = (px == 0) | (px == N * r) | (py == 0) | (py == N * r)
    if (on_boundary & inR).any():
        raise TubeTooWide("refinement patches touch the boundary")
    tags[on_boundary] = NodeTag.BOUNDARY

    return Grid2DTube(params=params, ls=ls, N=N, h=h, h_f=h_f, r=r, W=W,
                      codes=codes, px=px, py=py, x=x, y=y, tags=tags,
                      side=side, hang_axis=hang_axis, hang_j=hang_j)


Grid = Union[Grid1D, Grid2DLine, Grid2DTube]


def dump_grid_json(grid: Grid, path: str) -> None:
    """Write the node list as JSON records ``{id, x, y, tag}``."""
    ys = grid.y
    rows = [
        {"id": int(i), "x": float(grid.x[i]), "y": float(ys[i]),
         "tag": TAG_NAMES[NodeTag(int(grid.tags[i]))]}
        for i in range(grid.n)
    ]
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=1)
