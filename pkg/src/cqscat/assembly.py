"""Frequency-domain system, observation, and right-hand-side assembly.

Two spatial discretizations share one evaluation model: a block knows the
geometry of its interactions (point distances, or flattened quadrature
node lists per panel pair) and produces the complex matrix at a given
frequency, with optional entrywise whole-step shifts fused into the
kernel evaluation.  The standard scheme is the shifted path with all
shift counts zero, so the two schemes coincide bit-for-bit at zero shift.

Galerkin quadrature is precomputed once per mesh as geometry-only node
and weight lists and reused at every frequency:

* far pairs (certified distance >= panel length): q x q tensor Gauss;
* near pairs (0 < distance < panel length): 2q x 2q tensor Gauss;
* touching pairs (certified distance 0): tensor of composite Gauss rules
  geometrically graded toward the closest sample points, which resolves
  both the log singularity and the e^{-sr} boundary layer at the large
  contour frequencies;
* self pairs: fold the square onto the triangle sigma < tau, substitute
  sigma = tau(1 - w), and grade in w toward the diagonal;
* fold pairs (touching with anti-parallel tangents, where the boundary
  doubles back on itself): points at equal arclength from the turning
  point are only quadratically separated, so the kernel has a ridge
  along the equal-arclength diagonal; treated like self pairs with the
  diagonal substitution applied from the turning point outward.
"""

from __future__ import annotations

import dataclasses
import logging
from typing import Callable, Union

import numpy as np

from ._backend import use_numba
from .cq import MultistepRule, TimeGrid, delta_at
from .geometry import (
    MfsLayout,
    PanelMesh,
    ShiftData,
    certified_panel_distances,
    certified_point_panel_distances,
    panel_nodes,
    shift_data_from_distances,
    shift_data_mfs,
)
from .kernels import KernelFamily, shifted_kernel

logger = logging.getLogger(__name__)

# Graded-rule shape parameters: cell contraction ratio and level counts.
# Levels are chosen so the innermost cell is far below any resolvable
# scale while per-frequency cost stays around a million kernel evaluations
# for a 100-panel mesh.
GRADE_RATIO = 0.25
LEVELS_DIAGONAL = 12
LEVELS_ALONG = 6
LEVELS_CORNER = 10


@dataclasses.dataclass(frozen=True)
class FrequencyMatrix:
    """Assembled complex matrix tagged with its frequency (s or zeta)."""

    entries: np.ndarray
    frequency: complex

    def __post_init__(self):
        if not np.all(np.isfinite(self.entries)):
            raise ArithmeticError("assembled matrix has non-finite entries")


@dataclasses.dataclass(frozen=True)
class RhsSeries:
    """Time series of right-hand-side vectors, one row per time step."""

    values: np.ndarray

    @property
    def num_steps(self) -> int:
        return self.values.shape[0] - 1


def _zeta_powers(zeta: complex, m: np.ndarray) -> np.ndarray:
    out = np.ones(m.shape, dtype=np.complex128)
    hot = m > 0
    if np.any(hot):
        out[hot] = np.power(complex(zeta), m[hot])
    return out


@dataclasses.dataclass(frozen=True)
class PointBlock:
    """Point-to-point interactions, entries K(s, r_ij) with fused shifts."""

    dist: np.ndarray
    family: KernelFamily

    def __post_init__(self):
        if np.any(self.dist <= 0.0):
            raise ValueError("point interaction distances must be positive")

    @property
    def shape(self):
        return self.dist.shape

    def matrix(self, s: complex, m: np.ndarray, dt: float, zeta: complex) -> np.ndarray:
        if use_numba():
            from . import _kernels_numba as nk

            out = nk.fill_pointwise(
                complex(s),
                np.ascontiguousarray(self.dist),
                np.ascontiguousarray(m, dtype=np.int64),
                float(dt),
                complex(zeta),
                self.family is KernelFamily.D3,
            )
            bad = np.isnan(out)
            if np.any(bad):
                logger.warning("compiled kernel fill bailed on %d entries", bad.sum())
                out[bad] = _zeta_powers(zeta, m[bad]) * shifted_kernel(
                    self.family, s, self.dist[bad], m[bad] * dt
                )
            return out
        return _zeta_powers(zeta, m) * shifted_kernel(self.family, s, self.dist, m * dt)


@dataclasses.dataclass(frozen=True)
class SegmentBlock:
    """Panel-pair quadratures flattened into contiguous node segments.

    Pair p scatters into entry (row[p], col[p]); symmetric blocks carry
    only pairs with row <= col and mirror on assembly, which makes the
    result exactly symmetric.
    """

    shape: tuple
    row: np.ndarray
    col: np.ndarray
    flat_r: np.ndarray
    flat_w: np.ndarray
    seg_start: np.ndarray
    seg_stop: np.ndarray
    node_pair: np.ndarray
    symmetric: bool

    def matrix(self, s: complex, m: np.ndarray, dt: float, zeta: complex) -> np.ndarray:
        m_pair = np.ascontiguousarray(m[self.row, self.col], dtype=np.int64)
        tm = m_pair * float(dt)
        if use_numba():
            from . import _kernels_numba as nk

            vals = nk.fill_pair_segments(
                complex(s), self.flat_r, self.flat_w, self.seg_start, self.seg_stop, tm
            )
            bad = np.isnan(vals)
            if np.any(bad):
                logger.warning("compiled kernel fill bailed on %d panel pairs", bad.sum())
                vals[bad] = self._segment_sums_numpy(s, tm, np.flatnonzero(bad))
        else:
            nodes = self.flat_w * shifted_kernel(
                KernelFamily.D2, s, self.flat_r, tm[self.node_pair]
            )
            vals = np.add.reduceat(nodes, self.seg_start)
        bad = ~np.isfinite(vals)
        if np.any(bad):
            pairs = list(zip(self.row[bad].tolist(), self.col[bad].tolist()))
            raise ArithmeticError(f"panel quadrature produced non-finite values for pairs {pairs}")
        vals = vals * _zeta_powers(zeta, m_pair)
        out = np.zeros(self.shape, dtype=np.complex128)
        out[self.row, self.col] = vals
        if self.symmetric:
            out[self.col, self.row] = vals
        return out

    def _segment_sums_numpy(self, s, tm, pair_idx):
        out = np.empty(pair_idx.size, dtype=np.complex128)
        for k, p in enumerate(pair_idx):
            sl = slice(self.seg_start[p], self.seg_stop[p])
            out[k] = np.sum(
                self.flat_w[sl] * shifted_kernel(KernelFamily.D2, s, self.flat_r[sl], tm[p])
            )
        return out


def _gauss01(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def _graded01(levels: int, order: int):
    """Composite Gauss on [0, 1], cells geometrically contracted toward 0."""
    edges = np.concatenate(([0.0], GRADE_RATIO ** np.arange(levels - 1, -1, -1.0)))
    x, w = _gauss01(order)
    lo, hi = edges[:-1], edges[1:]
    nodes = (lo[:, None] + (hi - lo)[:, None] * x[None, :]).ravel()
    wts = ((hi - lo)[:, None] * w[None, :]).ravel()
    return nodes, wts


def _toward(length: float, s_star: float, levels: int, order: int):
    """Nodes on [0, length] graded toward local arclength s_star."""
    g, gw = _graded01(levels, order)
    runs = []
    if s_star > 0.0:
        runs.append((s_star - s_star * g, s_star * gw))
    if s_star < length:
        span = length - s_star
        runs.append((s_star + span * g, span * gw))
    nodes = np.concatenate([r[0] for r in runs])
    wts = np.concatenate([r[1] for r in runs])
    return nodes, wts


class GalerkinDiscretization:
    """Piecewise-constant Galerkin discretization of the single layer operator."""

    def __init__(self, mesh: PanelMesh, quad_order: int = 8):
        self.mesh = mesh
        self.quad_order = quad_order
        self.family = KernelFamily.D2
        self.certified = certified_panel_distances(mesh)
        self.system_block = self._build_system_block()

    @property
    def num_rows(self) -> int:
        return self.mesh.num_panels

    @property
    def num_dofs(self) -> int:
        return self.mesh.num_panels

    def _pair_nodes(self, i: int, j: int, kind: str, pts_far, wts_far, pts_near, wts_near):
        mesh = self.mesh
        if kind == "self":
            h = mesh.lengths[i]
            tn, tw = _graded01(LEVELS_ALONG, self.quad_order)
            wn, ww = _graded01(LEVELS_DIAGONAL, self.quad_order)
            tau = h * tn
            sig = tau[:, None] * (1.0 - wn[None, :])
            p_tau = mesh.points_at(i, tau)
            p_sig = mesh.points_at(i, sig.ravel()).reshape(tau.size, wn.size, 2)
            d = p_tau[:, None, :] - p_sig
            r = np.hypot(d[..., 0], d[..., 1])
            # Coordinate subtraction underflows once the separation nears the
            # machine resolution of the panel coordinates.  The arclength gap
            # is the chord to leading order there and keeps r positive.
            gap = tau[:, None] * wn[None, :]
            r = np.where(r > 0.5 * gap, r, gap)
            wgt = 2.0 * (h * tw)[:, None] * ww[None, :] * tau[:, None]
            return r.ravel(), wgt.ravel()
        if kind == "fold":
            return self._fold_nodes(i, j)
        if kind == "touch":
            si, sj = self._closest_sample_arclengths(i, j)
            ni, wi = _toward(mesh.lengths[i], si, LEVELS_CORNER, self.quad_order)
            nj, wj = _toward(mesh.lengths[j], sj, LEVELS_CORNER, self.quad_order)
            pi = mesh.points_at(i, ni)
            pj = mesh.points_at(j, nj)
        elif kind == "near":
            pi, wi = pts_near[i], wts_near[i]
            pj, wj = pts_near[j], wts_near[j]
        else:
            pi, wi = pts_far[i], wts_far[i]
            pj, wj = pts_far[j], wts_far[j]
        d = pi[:, None, :] - pj[None, :, :]
        r = np.hypot(d[..., 0], d[..., 1])
        wgt = wi[:, None] * wj[None, :]
        return r.ravel(), wgt.ravel()

    def _closest_sample_arclengths(self, i: int, j: int):
        mesh = self.mesh
        loc_i = np.array([0.0, 0.5 * mesh.lengths[i], mesh.lengths[i]])
        loc_j = np.array([0.0, 0.5 * mesh.lengths[j], mesh.lengths[j]])
        si = np.stack([mesh.starts[i], mesh.midpoints[i], mesh.ends[i]])
        sj = np.stack([mesh.starts[j], mesh.midpoints[j], mesh.ends[j]])
        d2 = ((si[:, None, :] - sj[None, :, :]) ** 2).sum(-1)
        a, b = np.unravel_index(int(np.argmin(d2)), d2.shape)
        return loc_i[a], loc_j[b]

    def _tangent_at(self, panel: int, s_loc: float):
        h = self.mesh.lengths[panel]
        e = 1e-6 * h
        p = self.mesh.points_at(panel, np.array([max(s_loc - e, 0.0), min(s_loc + e, h)]))
        t = p[1] - p[0]
        return t / np.hypot(t[0], t[1])

    def _is_fold(self, i: int, j: int) -> bool:
        si, sj = self._closest_sample_arclengths(i, j)
        return float(self._tangent_at(i, si) @ self._tangent_at(j, sj)) < -0.5

    def _fold_nodes(self, i: int, j: int):
        # Square [0, hi] x [0, hj] in arclength from the turning point,
        # split along the equal-arclength diagonal where the panels are
        # closest; each triangle gets the self-pair substitution, and the
        # leftover strip of the longer panel a tensor graded to the seam.
        mesh = self.mesh
        si, sj = self._closest_sample_arclengths(i, j)
        hi, hj = mesh.lengths[i], mesh.lengths[j]
        hm = min(hi, hj)
        tn, tw = _graded01(LEVELS_ALONG, self.quad_order)
        wn, ww = _graded01(LEVELS_DIAGONAL, self.quad_order)

        def from_corner(s_star, h, u):
            return h - u if s_star > 0.5 * h else u

        u = hm * tn
        wu = hm * tw
        parts = []
        for pa, sa, ha, pb, sb, hb in ((i, si, hi, j, sj, hj), (j, sj, hj, i, si, hi)):
            v = u[:, None] * (1.0 - wn[None, :])
            p_a = mesh.points_at(pa, from_corner(sa, ha, u))
            p_b = mesh.points_at(pb, from_corner(sb, hb, v.ravel())).reshape(u.size, wn.size, 2)
            d = p_a[:, None, :] - p_b
            r = np.hypot(d[..., 0], d[..., 1])
            gap = u[:, None] * wn[None, :]
            r = np.where(r > 0.5 * gap, r, gap)
            wgt = wu[:, None] * ww[None, :] * u[:, None]
            parts.append((r.ravel(), wgt.ravel()))
        if abs(hi - hj) > 1e-15 * hm:
            if hi > hj:
                pa, sa, ha, pb, sb, hb = i, si, hi, j, sj, hj
            else:
                pa, sa, ha, pb, sb, hb = j, sj, hj, i, si, hi
            g, gw = _graded01(LEVELS_ALONG, self.quad_order)
            ua = hm + (ha - hm) * g
            ub = hm - hm * g
            p_a = mesh.points_at(pa, from_corner(sa, ha, ua))
            p_b = mesh.points_at(pb, from_corner(sb, hb, ub))
            d = p_a[:, None, :] - p_b[None, :, :]
            r = np.hypot(d[..., 0], d[..., 1])
            wgt = ((ha - hm) * gw)[:, None] * (hm * gw)[None, :]
            parts.append((r.ravel(), wgt.ravel()))
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    def _build_system_block(self) -> SegmentBlock:
        mesh = self.mesh
        n = mesh.num_panels
        pts_far, wts_far = panel_nodes(mesh, self.quad_order)
        pts_near, wts_near = panel_nodes(mesh, 2 * self.quad_order)
        rows, cols, rs, ws, counts = [], [], [], [], []
        for i in range(n):
            for j in range(i, n):
                if i == j:
                    kind = "self"
                elif self.certified[i, j] == 0.0:
                    kind = "fold" if self._is_fold(i, j) else "touch"
                elif self.certified[i, j] < max(mesh.lengths[i], mesh.lengths[j]):
                    kind = "near"
                else:
                    kind = "far"
                r, w = self._pair_nodes(i, j, kind, pts_far, wts_far, pts_near, wts_near)
                rows.append(i)
                cols.append(j)
                rs.append(r)
                ws.append(w)
                counts.append(r.size)
        stops = np.cumsum(np.asarray(counts, dtype=np.int64))
        starts = np.concatenate(([0], stops[:-1]))
        row = np.asarray(rows, dtype=np.int64)
        col = np.asarray(cols, dtype=np.int64)
        return SegmentBlock(
            shape=(n, n),
            row=row,
            col=col,
            flat_r=np.ascontiguousarray(np.concatenate(rs)),
            flat_w=np.ascontiguousarray(np.concatenate(ws)),
            seg_start=starts,
            seg_stop=stops,
            node_pair=np.repeat(np.arange(row.size), counts),
            symmetric=True,
        )

    def observation_block(self, points: np.ndarray) -> SegmentBlock:
        """Single-panel integrals toward off-boundary points."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        self._require_off_boundary(pts)
        nodes, wts = panel_nodes(self.mesh, self.quad_order)
        n_obs, n_pan, q = pts.shape[0], self.mesh.num_panels, self.quad_order
        d = pts[:, None, None, :] - nodes[None, :, :, :]
        r = np.hypot(d[..., 0], d[..., 1]).reshape(n_obs * n_pan, q)
        w = np.broadcast_to(wts[None, :, :], (n_obs, n_pan, q)).reshape(n_obs * n_pan, q)
        row, col = np.divmod(np.arange(n_obs * n_pan, dtype=np.int64), n_pan)
        starts = q * np.arange(n_obs * n_pan, dtype=np.int64)
        return SegmentBlock(
            shape=(n_obs, n_pan),
            row=row,
            col=col,
            flat_r=np.ascontiguousarray(r.ravel()),
            flat_w=np.ascontiguousarray(w.ravel()),
            seg_start=starts,
            seg_stop=starts + q,
            node_pair=np.repeat(np.arange(n_obs * n_pan), q),
            symmetric=False,
        )

    def _require_off_boundary(self, pts: np.ndarray) -> None:
        d = certified_point_panel_distances(self.mesh, pts)
        # the certified bound is 0 within a quarter panel of the curve
        if np.any(d.min(axis=1) <= 0.0):
            raise ValueError("observation points must stay off the boundary")

    def system_shifts(self, dt: float) -> ShiftData:
        return shift_data_from_distances(self.certified, dt)

    def observation_shifts(self, points: np.ndarray, dt: float) -> ShiftData:
        r = certified_point_panel_distances(self.mesh, np.atleast_2d(points))
        return shift_data_from_distances(r, dt)

    def project(self, data: Callable, grid: TimeGrid) -> RhsSeries:
        pts, wts = panel_nodes(self.mesh, self.quad_order)
        flat = pts.reshape(-1, 2)
        out = np.empty((grid.num_nodes, self.mesh.num_panels))
        for n, t in enumerate(grid.times()):
            f = np.asarray(data(t, flat), dtype=np.float64).reshape(wts.shape)
            out[n] = (wts * f).sum(axis=1)
        return RhsSeries(values=out)


class MfsDiscretization:
    """Fundamental-solution collocation discretization."""

    def __init__(self, layout: MfsLayout, family: KernelFamily = KernelFamily.D2):
        self.layout = layout
        self.family = family
        diff = layout.collocation[:, None, :] - layout.sources[None, :, :]
        self.system_block = PointBlock(np.hypot(diff[..., 0], diff[..., 1]), family)

    @property
    def num_rows(self) -> int:
        return self.layout.collocation.shape[0]

    @property
    def num_dofs(self) -> int:
        return self.layout.sources.shape[0]

    def observation_block(self, points: np.ndarray) -> PointBlock:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        # the layout only knows the boundary through its collocation
        # samples; coincidence with one of them is certainly on-boundary
        dc = pts[:, None, :] - self.layout.collocation[None, :, :]
        if np.any(np.hypot(dc[..., 0], dc[..., 1]) == 0.0):
            raise ValueError("observation points must lie off the boundary")
        diff = pts[:, None, :] - self.layout.sources[None, :, :]
        return PointBlock(np.hypot(diff[..., 0], diff[..., 1]), self.family)

    def system_shifts(self, dt: float) -> ShiftData:
        return shift_data_mfs(self.layout, dt)

    def observation_shifts(self, points: np.ndarray, dt: float) -> ShiftData:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        diff = pts[:, None, :] - self.layout.sources[None, :, :]
        return shift_data_from_distances(np.hypot(diff[..., 0], diff[..., 1]), dt)

    def project(self, data: Callable, grid: TimeGrid) -> RhsSeries:
        out = np.empty((grid.num_nodes, self.num_rows))
        for n, t in enumerate(grid.times()):
            out[n] = np.asarray(data(t, self.layout.collocation), dtype=np.float64)
        return RhsSeries(values=out)


Discretization = Union[MfsDiscretization, GalerkinDiscretization]


@dataclasses.dataclass(frozen=True)
class ConvolutionOperator:
    """System (or observation) matrix family along the quadrature contour.

    shifts=None selects the standard scheme; internally both schemes run
    the shifted fill, standard with all counts zero.
    """

    block: Union[PointBlock, SegmentBlock]
    rule: MultistepRule
    grid: TimeGrid
    shifts: ShiftData | None = None

    def shift_counts(self) -> np.ndarray:
        if self.shifts is None:
            return np.zeros(self.block.shape, dtype=np.int64)
        return self.shifts.m

    def at_contour_point(self, zeta: complex) -> np.ndarray:
        s = complex(delta_at(self.rule, np.asarray(zeta, dtype=np.complex128))) / self.grid.dt
        return self.block.matrix(s, self.shift_counts(), self.grid.dt, zeta)


def assemble_mfs(layout: MfsLayout, s: complex, family: KernelFamily = KernelFamily.D2) -> FrequencyMatrix:
    """Collocation matrix K(s, |x_i - y_j|)."""
    if not np.real(s) > 0.0:
        raise ValueError("frequency must have positive real part")
    block = MfsDiscretization(layout, family).system_block
    m = np.zeros(block.shape, dtype=np.int64)
    return FrequencyMatrix(block.matrix(s, m, 1.0, 1.0 + 0j), frequency=s)


def assemble_galerkin(mesh_or_disc, s: complex, quad_order: int = 8) -> FrequencyMatrix:
    """Symmetric panel-pair double integrals of the 2D kernel.

    Accepts a PanelMesh (quadrature plan built on the fly) or a prebuilt
    GalerkinDiscretization for repeated frequencies.
    """
    if not np.real(s) > 0.0:
        raise ValueError("frequency must have positive real part")
    disc = (
        mesh_or_disc
        if isinstance(mesh_or_disc, GalerkinDiscretization)
        else GalerkinDiscretization(mesh_or_disc, quad_order)
    )
    block = disc.system_block
    m = np.zeros(block.shape, dtype=np.int64)
    return FrequencyMatrix(block.matrix(s, m, 1.0, 1.0 + 0j), frequency=s)


def assemble_modified(
    base: Discretization,
    shifts: ShiftData,
    rule: MultistepRule,
    grid: TimeGrid,
    zeta: complex,
) -> FrequencyMatrix:
    """Entrywise zeta^m e^{m delta(zeta)} V(delta(zeta)/dt) at one contour point."""
    op = ConvolutionOperator(block=base.system_block, rule=rule, grid=grid, shifts=shifts)
    return FrequencyMatrix(op.at_contour_point(zeta), frequency=zeta)


def assemble_observation(base: Discretization, points, s: complex) -> FrequencyMatrix:
    """Potential-evaluation matrix from the density dofs to the points."""
    if not np.real(s) > 0.0:
        raise ValueError("frequency must have positive real part")
    block = base.observation_block(points)
    m = np.zeros(block.shape, dtype=np.int64)
    return FrequencyMatrix(block.matrix(s, m, 1.0, 1.0 + 0j), frequency=s)


def project_rhs(discretization, data: Callable, grid: TimeGrid) -> RhsSeries:
    """Boundary data as a time series: pointwise traces (MFS) or panel integrals."""
    if isinstance(discretization, (MfsDiscretization, GalerkinDiscretization)):
        return discretization.project(data, grid)
    if isinstance(discretization, MfsLayout):
        return MfsDiscretization(discretization).project(data, grid)
    if isinstance(discretization, PanelMesh):
        return GalerkinDiscretization(discretization).project(data, grid)
    raise TypeError(f"cannot project onto {type(discretization).__name__}")
