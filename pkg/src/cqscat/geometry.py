"""Scatterer boundaries, collocation layouts, panel meshes, shift data.

Shapes are built from parametric pieces mapping an angle interval into the
complex plane.  Pieces carry an exact speed function, so arclength tables
are exact for circular arcs (constant speed) and spectrally sampled for
the conformal ellipse images.  All public arrays are real (n, 2).
"""

from __future__ import annotations

import dataclasses
import enum
import math
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad

# Relative snapping window for floor(r/dt): quotients within this distance
# of an integer are treated as that integer, so representable ratios do not
# fall one step short after roundoff.  The resulting t_m may exceed r by at
# most ~1e-12 relative, inside the slack accepted by the kernel evaluators.
FLOOR_GUARD = 1e-12

# Inflation on the arc-deviation correction used by the certified panel
# distance bound, covering arclength-table interpolation error on the
# non-constant-speed pieces.
_CORRECTION_MARGIN = 1e-6

_N_DENSE = 4097


class ScattererShape(enum.Enum):
    """Shipped scatterer geometries."""

    DISK = "disk"
    TWO_ELLIPSES = "two-ellipses"
    SEMICIRCLES = "semicircles"


@dataclasses.dataclass(frozen=True)
class BoundaryPiece:
    """One smooth piece theta in [theta0, theta1] -> complex plane."""

    chart: Callable[[np.ndarray], np.ndarray]
    speed: Callable[[np.ndarray], np.ndarray]
    theta0: float
    theta1: float
    length: float = dataclasses.field(init=False)
    _theta_grid: np.ndarray = dataclasses.field(init=False, repr=False)
    _s_grid: np.ndarray = dataclasses.field(init=False, repr=False)

    def __post_init__(self):
        total, _ = quad(lambda t: float(self.speed(np.asarray(t))), self.theta0, self.theta1, limit=200)
        grid = np.linspace(self.theta0, self.theta1, _N_DENSE)
        s = cumulative_trapezoid(self.speed(grid), grid, initial=0.0)
        # pin the endpoint to the quadrature value; interior stays relative
        s *= total / s[-1]
        object.__setattr__(self, "length", float(total))
        object.__setattr__(self, "_theta_grid", grid)
        object.__setattr__(self, "_s_grid", s)

    def at_arclength(self, s) -> np.ndarray:
        """Points at arclength s in [0, length] from the theta0 end."""
        theta = np.interp(np.asarray(s, dtype=np.float64), self._s_grid, self._theta_grid)
        return self.chart(theta)


@dataclasses.dataclass(frozen=True)
class ParametricBoundary:
    """Closed curve(s) assembled from pieces.

    components groups piece indices into closed loops; consecutive pieces
    within a loop share endpoints.
    """

    name: str
    pieces: tuple[BoundaryPiece, ...]
    components: tuple[tuple[int, ...], ...]
    closed: bool = True

    @property
    def length(self) -> float:
        return sum(p.length for p in self.pieces)


def _points(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.complex128)
    return np.column_stack((z.real, z.imag))


def _arc_piece(center: complex, radius: float, theta0: float, theta1: float) -> BoundaryPiece:
    return BoundaryPiece(
        chart=lambda th, c=center, r=radius: c + r * np.exp(1j * np.asarray(th)),
        speed=lambda th, r=radius: np.full(np.shape(np.asarray(th)), float(r)) if np.ndim(th) else np.float64(r),
        theta0=theta0,
        theta1=theta1,
    )


def conformal_ellipse_map(z, center_offset: float):
    """f(z) + offset with f(z) = i(z + 1/(5z))/2, as a point in the plane.

    Maps the unit circle to an ellipse with half-axes 0.4 (horizontal) and
    0.6 (vertical); circles of radius R in (1/sqrt(5), 1) map to nested
    interior ellipses.
    """
    z = np.asarray(z, dtype=np.complex128)
    if np.any(z == 0):
        raise ValueError("conformal map is singular at z = 0")
    w = 0.5j * (z + 1.0 / (5.0 * z)) + center_offset
    return _points(w)


def _ellipse_piece(center_offset: float) -> BoundaryPiece:
    def chart(th, off=center_offset):
        e = np.exp(1j * np.asarray(th))
        return 0.5j * (e + 1.0 / (5.0 * e)) + off

    def speed(th):
        return 0.5 * np.abs(1.0 - np.exp(-2j * np.asarray(th)) / 5.0)

    return BoundaryPiece(chart=chart, speed=speed, theta0=0.0, theta1=2.0 * math.pi)


def disk_boundary() -> ParametricBoundary:
    """Unit circle."""
    return ParametricBoundary(
        name="disk", pieces=(_arc_piece(0.0, 1.0, 0.0, 2.0 * math.pi),), components=((0,),)
    )


def two_ellipses_boundary() -> ParametricBoundary:
    """Two conformal-image ellipses centered at (-2, 0) and (+2, 0)."""
    return ParametricBoundary(
        name="two-ellipses",
        pieces=(_ellipse_piece(-2.0), _ellipse_piece(+2.0)),
        components=((0,), (1,)),
    )


def semicircle_boundary() -> ParametricBoundary:
    """Non-convex domain bounded by four semicircles.

    Large right half-circle of radius 1, closed on the left by three
    half-circles of radii 1/4, 1/2, 1/4 centered at 3i/4, 0, -3i/4.
    """
    return ParametricBoundary(
        name="semicircles",
        pieces=(
            _arc_piece(0.0, 1.0, -0.5 * math.pi, 0.5 * math.pi),
            _arc_piece(0.75j, 0.25, 0.5 * math.pi, 1.5 * math.pi),
            _arc_piece(0.0, 0.5, 0.5 * math.pi, 1.5 * math.pi),
            _arc_piece(-0.75j, 0.25, 0.5 * math.pi, 1.5 * math.pi),
        ),
        components=((0, 1, 2, 3),),
    )


def boundary_for(shape: ScattererShape) -> ParametricBoundary:
    if shape is ScattererShape.DISK:
        return disk_boundary()
    if shape is ScattererShape.TWO_ELLIPSES:
        return two_ellipses_boundary()
    return semicircle_boundary()


@dataclasses.dataclass(frozen=True)
class MfsLayout:
    """Collocation points on the boundary, source points off it."""

    collocation: np.ndarray
    sources: np.ndarray
    radius: float

    def __post_init__(self):
        if self.collocation.shape[0] < self.sources.shape[0]:
            raise ValueError("need at least as many collocation points as sources")


def _unit_circle(n: int) -> np.ndarray:
    ang = 2.0 * math.pi * np.arange(n) / n
    return np.exp(1j * ang)


def mfs_points(shape: ScattererShape, num_collocation: int, num_sources: int, radius: float) -> MfsLayout:
    """Uniform-angle collocation/source layout, conformally mapped for the ellipses.

    radius < 1 places sources inside the scatterer (exterior problems),
    radius > 1 outside (interior problems).  For TWO_ELLIPSES the counts
    are totals, split evenly between the two components.
    """
    if num_collocation < num_sources or num_sources < 1:
        raise ValueError("need num_collocation >= num_sources >= 1")
    if radius <= 0.0 or radius == 1.0:
        raise ValueError("source radius must be positive and != 1")
    if shape is ScattererShape.DISK:
        return MfsLayout(
            collocation=_points(_unit_circle(num_collocation)),
            sources=_points(radius * _unit_circle(num_sources)),
            radius=radius,
        )
    if shape is ScattererShape.TWO_ELLIPSES:
        if num_collocation % 2 or num_sources % 2:
            raise ValueError("two-ellipse layouts need even point counts")
        col_disk = _unit_circle(num_collocation // 2)
        src_disk = radius * _unit_circle(num_sources // 2)
        col = np.vstack([conformal_ellipse_map(col_disk, off) for off in (-2.0, +2.0)])
        src = np.vstack([conformal_ellipse_map(src_disk, off) for off in (-2.0, +2.0)])
        return MfsLayout(collocation=col, sources=src, radius=radius)
    raise ValueError(f"no collocation layout defined for {shape}")


@dataclasses.dataclass(frozen=True)
class PanelMesh:
    """Arclength-uniform (per piece) panels of a boundary."""

    boundary: ParametricBoundary
    piece: np.ndarray
    s_start: np.ndarray
    s_stop: np.ndarray
    starts: np.ndarray
    ends: np.ndarray
    midpoints: np.ndarray
    lengths: np.ndarray

    @property
    def num_panels(self) -> int:
        return self.lengths.size

    def points_at(self, panel: int, s_local) -> np.ndarray:
        """Points on a panel at local arclength in [0, length]."""
        pc = self.boundary.pieces[int(self.piece[panel])]
        return _points(pc.at_arclength(self.s_start[panel] + np.asarray(s_local)))


def _apportion(weights: Sequence[float], total: int) -> np.ndarray:
    """Largest-remainder apportionment, ties to the earlier piece."""
    w = np.asarray(weights, dtype=np.float64)
    raw = total * w / w.sum()
    base = np.floor(raw).astype(int)
    rem = raw - base
    short = total - int(base.sum())
    order = np.argsort(-rem, kind="stable")
    base[order[:short]] += 1
    return base


def panel_mesh(boundary: ParametricBoundary, num_panels: int) -> PanelMesh:
    """Split each piece into equal-arclength panels, counts proportional to length."""
    n_pieces = len(boundary.pieces)
    if num_panels < max(1, n_pieces):
        raise ValueError("too few panels for this boundary")
    counts = _apportion([p.length for p in boundary.pieces], num_panels)
    if np.any(counts < 1):
        raise ValueError("too few panels for this boundary")
    piece_idx, s0, s1 = [], [], []
    for k, (pc, n) in enumerate(zip(boundary.pieces, counts)):
        edges = np.linspace(0.0, pc.length, n + 1)
        piece_idx.append(np.full(n, k))
        s0.append(edges[:-1])
        s1.append(edges[1:])
    piece_idx = np.concatenate(piece_idx)
    s0 = np.concatenate(s0)
    s1 = np.concatenate(s1)
    starts = np.empty((num_panels, 2))
    ends = np.empty((num_panels, 2))
    mids = np.empty((num_panels, 2))
    for k, pc in enumerate(boundary.pieces):
        sel = piece_idx == k
        starts[sel] = _points(pc.at_arclength(s0[sel]))
        ends[sel] = _points(pc.at_arclength(s1[sel]))
        mids[sel] = _points(pc.at_arclength(0.5 * (s0[sel] + s1[sel])))
    return PanelMesh(
        boundary=boundary,
        piece=piece_idx,
        s_start=s0,
        s_stop=s1,
        starts=starts,
        ends=ends,
        midpoints=mids,
        lengths=s1 - s0,
    )


def panel_nodes(mesh: PanelMesh, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes in arclength on every panel.

    Returns points (M, order, 2) and weights (M, order); weights carry the
    arclength measure, so sums of f(points)*weights integrate over the curve.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    u = 0.5 * (x + 1.0)
    pts = np.empty((mesh.num_panels, order, 2))
    for i in range(mesh.num_panels):
        pts[i] = mesh.points_at(i, mesh.lengths[i] * u)
    wts = 0.5 * np.outer(mesh.lengths, w)
    return pts, wts


@dataclasses.dataclass(frozen=True)
class ShiftData:
    """Distances and whole-step shift counts for the modified quadrature."""

    r: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        if np.any(self.m < 0):
            raise ValueError("shift counts must be nonnegative")


def _guarded_floor(quotient: np.ndarray) -> np.ndarray:
    nearest = np.rint(quotient)
    snap = np.abs(quotient - nearest) <= FLOOR_GUARD * np.maximum(1.0, np.abs(quotient))
    return np.where(snap, nearest, np.floor(quotient)).astype(np.int64)


def shift_data_from_distances(r: np.ndarray, dt: float) -> ShiftData:
    """m = floor(r / dt) with the snapping guard, paired with r."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0.0):
        raise ValueError("distances must be nonnegative")
    return ShiftData(r=r, m=_guarded_floor(r / np.float64(dt)))


def shift_data_mfs(layout: MfsLayout, dt: float) -> ShiftData:
    """r_ij = |x_i - y_j|, m_ij = floor(r_ij / dt) with the snapping guard."""
    diff = layout.collocation[:, None, :] - layout.sources[None, :, :]
    return shift_data_from_distances(np.hypot(diff[..., 0], diff[..., 1]), dt)


def _deviation_bounds(mesh: PanelMesh) -> np.ndarray:
    # any point of a panel lies within arclength/4 of an endpoint/midpoint
    # sample; the margin covers arclength-table interpolation error
    return 0.25 * mesh.lengths * (1.0 + _CORRECTION_MARGIN)


def certified_panel_distances(mesh: PanelMesh) -> np.ndarray:
    """Lower bounds on pairwise panel distances, zero on the diagonal.

    Each panel is sampled at its endpoints and midpoint; the sample minimum
    is reduced by each panel's arc-deviation bound and floored at zero.
    Overestimating would break causality of the shifted weights,
    underestimating only costs a little damping, hence the one-sided
    construction.  Self and adjacent pairs come out exactly zero.
    """
    samples = np.stack([mesh.starts, mesh.midpoints, mesh.ends], axis=1)
    diff = samples[:, None, :, None, :] - samples[None, :, None, :, :]
    d = np.min(np.hypot(diff[..., 0], diff[..., 1]), axis=(2, 3))
    corr = _deviation_bounds(mesh)
    r = np.maximum(0.0, d - corr[:, None] - corr[None, :])
    np.fill_diagonal(r, 0.0)
    return r


def certified_point_panel_distances(mesh: PanelMesh, points: np.ndarray) -> np.ndarray:
    """Lower bounds on distances from off-boundary points to panels."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    samples = np.stack([mesh.starts, mesh.midpoints, mesh.ends], axis=1)
    diff = pts[:, None, None, :] - samples[None, :, :, :]
    d = np.min(np.hypot(diff[..., 0], diff[..., 1]), axis=2)
    return np.maximum(0.0, d - _deviation_bounds(mesh)[None, :])


def shift_data_galerkin(mesh: PanelMesh, dt: float) -> ShiftData:
    """Certified lower-bound panel distances and their shift counts."""
    return shift_data_from_distances(certified_panel_distances(mesh), dt)


def _component_polyline(boundary: ParametricBoundary, comp: tuple[int, ...], per_piece: int) -> np.ndarray:
    parts = []
    for k in comp:
        pc = boundary.pieces[k]
        s = np.linspace(0.0, pc.length, per_piece, endpoint=False)
        parts.append(_points(pc.at_arclength(s)))
    return np.vstack(parts)


def contains(boundary: ParametricBoundary, points, samples_per_piece: int = 512) -> np.ndarray:
    """Even-odd test against densely sampled component polylines."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    inside = np.zeros(pts.shape[0], dtype=bool)
    for comp in boundary.components:
        poly = _component_polyline(boundary, comp, samples_per_piece)
        x1, y1 = poly[:, 0], poly[:, 1]
        x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
        for lo in range(0, pts.shape[0], 4096):
            px = pts[lo : lo + 4096, 0][:, None]
            py = pts[lo : lo + 4096, 1][:, None]
            straddle = (y1 > py) != (y2 > py)
            with np.errstate(divide="ignore", invalid="ignore"):
                xcross = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            hits = straddle & (px < xcross)
            inside[lo : lo + 4096] ^= (hits.sum(axis=1) % 2).astype(bool)
    return inside
