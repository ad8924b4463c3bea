"""Experiment scenarios: geometry + discretization + incident data + outputs.

A scenario bundles everything needed to reproduce one scattering run at
desk scale.  Observation points default to rings of eight points whose
radius depends on the geometry; snapshot grids and error tables are
written as plain CSV so runs diff cleanly.  Everything here is
deterministic: same scenario, same bytes.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import logging
import math
import os
from typing import Sequence, Union

import numpy as np

from .assembly import (
    ConvolutionOperator,
    GalerkinDiscretization,
    MfsDiscretization,
    project_rhs,
)
from .cq import MultistepRule, TimeGrid
from .geometry import (
    ScattererShape,
    boundary_for,
    certified_point_panel_distances,
    contains,
    mfs_points,
    panel_mesh,
)
from .incident import GaussianPulse, WindowedPlaneWave
from .solver import (
    DensityHistory,
    FieldSamples,
    SolveReport,
    all_at_once_solve,
    evaluate_field,
    max_error,
    mot_solve,
    operator_weights,
)

logger = logging.getLogger(__name__)

DEFAULT_SNAPSHOT_TIMES = (2.5, 3.75, 5.0, 6.25, 7.5, 8.75)

# Loose scattering-energy bound; exceeding it on a snapshot grid is a
# strong hint the run went unstable.
ENERGY_FACTOR = 5.0


class Geometry(enum.Enum):
    DISK = "disk"
    TWO_ELLIPSES = "two-ellipses"
    SEMICIRCLES = "semicircles"
    DISK_INTERIOR = "disk-interior"


class Problem(enum.Enum):
    EXTERIOR = "exterior"
    INTERIOR = "interior"


class Scheme(enum.Enum):
    STANDARD = "standard"
    MODIFIED = "modified"


@dataclasses.dataclass(frozen=True)
class MfsSpatial:
    num_collocation: int = 200
    num_sources: int = 100
    radius: float = 0.9


@dataclasses.dataclass(frozen=True)
class GalerkinSpatial:
    num_panels: int = 100
    quad_order: int = 8


Spatial = Union[MfsSpatial, GalerkinSpatial]
Incident = Union[WindowedPlaneWave, GaussianPulse]

_SHAPE = {
    Geometry.DISK: ScattererShape.DISK,
    Geometry.TWO_ELLIPSES: ScattererShape.TWO_ELLIPSES,
    Geometry.SEMICIRCLES: ScattererShape.SEMICIRCLES,
    Geometry.DISK_INTERIOR: ScattererShape.DISK,
}

_RING_RADIUS = {
    Geometry.DISK: 2.0,
    Geometry.TWO_ELLIPSES: 4.0,
    Geometry.SEMICIRCLES: 2.0,
    Geometry.DISK_INTERIOR: 0.5,
}


def observation_ring(geometry: Geometry, count: int = 8) -> tuple:
    """Default observation points: a ring matched to the geometry's scale."""
    radius = _RING_RADIUS[geometry]
    ang = 2.0 * math.pi * np.arange(count) / count
    return tuple((float(radius * np.cos(a)), float(radius * np.sin(a))) for a in ang)


def default_incident(geometry: Geometry, omega: float = 1.0) -> Incident:
    if geometry is Geometry.DISK_INTERIOR:
        return GaussianPulse()
    if geometry is Geometry.SEMICIRCLES:
        s = 1.0 / math.sqrt(2.0)
        return WindowedPlaneWave(omega=omega, direction=(s, s))
    return WindowedPlaneWave(omega=omega, direction=(0.0, -1.0))


@dataclasses.dataclass(frozen=True)
class Scenario:
    geometry: Geometry = Geometry.DISK
    problem: Problem = Problem.EXTERIOR
    spatial: Spatial = MfsSpatial()
    rule: MultistepRule = MultistepRule.BDF2
    scheme: Scheme = Scheme.MODIFIED
    num_steps: int = 256
    horizon: float = 10.0
    incident: Incident = None
    observation: tuple = None
    output_dir: str = None

    def __post_init__(self):
        interior = self.geometry is Geometry.DISK_INTERIOR
        if interior != (self.problem is Problem.INTERIOR):
            raise ValueError("interior runs pair with the disk-interior geometry")
        if isinstance(self.spatial, MfsSpatial):
            if self.problem is Problem.EXTERIOR and self.spatial.radius >= 1.0:
                raise ValueError("exterior problems need sources inside (radius < 1)")
            if self.problem is Problem.INTERIOR and self.spatial.radius <= 1.0:
                raise ValueError("interior problems need sources outside (radius > 1)")
        if self.num_steps < 1:
            raise ValueError("need at least one time step")
        if self.horizon <= 0.0:
            raise ValueError("final time must be positive")
        if self.incident is None:
            object.__setattr__(self, "incident", default_incident(self.geometry))
        if self.observation is None:
            object.__setattr__(self, "observation", observation_ring(self.geometry))
        if len(self.observation) == 0:
            raise ValueError("need at least one observation point")

    @property
    def shape(self) -> ScattererShape:
        return _SHAPE[self.geometry]

    def grid(self) -> TimeGrid:
        return TimeGrid(num_steps=self.num_steps, dt=self.horizon / self.num_steps)

    def observation_array(self) -> np.ndarray:
        return np.asarray(self.observation, dtype=np.float64)


def build_discretization(sc: Scenario):
    if isinstance(sc.spatial, MfsSpatial):
        layout = mfs_points(
            sc.shape, sc.spatial.num_collocation, sc.spatial.num_sources, sc.spatial.radius
        )
        return MfsDiscretization(layout)
    mesh = panel_mesh(boundary_for(sc.shape), sc.spatial.num_panels)
    return GalerkinDiscretization(mesh, sc.spatial.quad_order)


def build_system_operator(sc: Scenario, disc) -> ConvolutionOperator:
    grid = sc.grid()
    shifts = disc.system_shifts(grid.dt) if sc.scheme is Scheme.MODIFIED else None
    return ConvolutionOperator(block=disc.system_block, rule=sc.rule, grid=grid, shifts=shifts)


def build_observation_operator(
    sc: Scenario, disc, points: np.ndarray, shifted_observation: bool = True
) -> ConvolutionOperator:
    grid = sc.grid()
    shifted = sc.scheme is Scheme.MODIFIED and shifted_observation
    shifts = disc.observation_shifts(points, grid.dt) if shifted else None
    return ConvolutionOperator(
        block=disc.observation_block(points), rule=sc.rule, grid=grid, shifts=shifts
    )


@dataclasses.dataclass(frozen=True)
class ScenarioResult:
    scenario: Scenario
    densities: DensityHistory
    fields: FieldSamples
    report: SolveReport
    paths: tuple


def run_scenario(
    sc: Scenario,
    workers: int | None = None,
    marching: bool = False,
    shifted_observation: bool = True,
) -> ScenarioResult:
    """Assemble, solve (all-at-once unless marching=True), observe, persist."""
    disc = build_discretization(sc)
    grid = sc.grid()
    rhs = project_rhs(disc, sc.incident.data, grid)
    op = build_system_operator(sc, disc)
    report = None
    if marching:
        densities = mot_solve(operator_weights(op), rhs)
    else:
        densities, report = all_at_once_solve(op, rhs, workers=workers)
    obs_op = build_observation_operator(sc, disc, sc.observation_array(), shifted_observation)
    fields = evaluate_field(densities, obs_op, workers=workers)
    paths = ()
    if sc.output_dir:
        paths = _persist(sc, fields, report)
    return ScenarioResult(
        scenario=sc, densities=densities, fields=fields, report=report, paths=paths
    )


def _persist(sc: Scenario, fields: FieldSamples, report: SolveReport | None) -> tuple:
    os.makedirs(sc.output_dir, exist_ok=True)
    paths = []
    field_path = os.path.join(sc.output_dir, "field.csv")
    with open(field_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"u{i}" for i in range(fields.values.shape[1])])
        for t, row in zip(fields.times(), fields.values):
            writer.writerow([float(t)] + [float(v) for v in row])
    paths.append(field_path)
    if report is not None:
        report_path = os.path.join(sc.output_dir, "report.txt")
        write_report(report, report_path)
        paths.append(report_path)
    return tuple(paths)


def write_report(report: SolveReport, path: str) -> None:
    """SolveReport as flat structured text plus a per-frequency table."""
    with open(path, "w") as fh:
        fh.write(f"rule = {report.rule}\n")
        fh.write(f"scheme = {report.scheme}\n")
        fh.write(f"workers = {report.workers}\n")
        fh.write(f"wall_time = {report.wall_time:.6f}\n")
        fh.write(f"num_frequencies = {report.num_frequencies}\n")
        fh.write("index,residual,condition,rank\n")
        for k in range(report.num_frequencies):
            fh.write(
                f"{k},{report.residual_norms[k]:.6e},{report.condition[k]:.6e},"
                f"{report.rank[k]}\n"
            )


def _scaled_spatial(spatial: Spatial, factor: float, shape: ScattererShape) -> Spatial:
    if isinstance(spatial, GalerkinSpatial):
        return dataclasses.replace(spatial, num_panels=round(spatial.num_panels * factor))
    m = round(spatial.num_collocation * factor)
    k = round(spatial.num_sources * factor)
    if shape is ScattererShape.TWO_ELLIPSES:
        m += m % 2
        k += k % 2
    return dataclasses.replace(spatial, num_collocation=m, num_sources=k)


def reference_scenario(sc: Scenario, reference_steps: int, spatial_factor: float = 1.5) -> Scenario:
    """Fine-solve companion: modified BDF2, more steps, denser space."""
    return dataclasses.replace(
        sc,
        rule=MultistepRule.BDF2,
        scheme=Scheme.MODIFIED,
        num_steps=reference_steps,
        spatial=_scaled_spatial(sc.spatial, spatial_factor, sc.shape),
        output_dir=None,
    )


def convergence_study(
    sc: Scenario,
    step_counts: Sequence[int],
    reference_steps: int,
    spatial_factor: float = 1.5,
    rules: Sequence[MultistepRule] | None = None,
    schemes: Sequence[Scheme] | None = None,
    workers: int | None = None,
    out_path: str | None = None,
) -> list:
    """Max-norm errors against a shared fine reference, one row per combination.

    The reference step count must be a multiple of every tested count so
    coarse time nodes are nested in the reference grid.
    """
    for n in step_counts:
        if reference_steps % n:
            raise ValueError(f"reference steps {reference_steps} not a multiple of {n}")
    rules = tuple(rules) if rules else tuple(MultistepRule)
    schemes = tuple(schemes) if schemes else tuple(Scheme)
    ref = run_scenario(reference_scenario(sc, reference_steps, spatial_factor), workers=workers)
    omega = sc.incident.omega if isinstance(sc.incident, WindowedPlaneWave) else float("nan")
    rows = []
    for rule in rules:
        for scheme in schemes:
            for n in step_counts:
                trial = dataclasses.replace(
                    sc, rule=rule, scheme=scheme, num_steps=int(n), output_dir=None
                )
                res = run_scenario(trial, workers=workers)
                err = max_error(res.fields, ref.fields)
                rows.append(
                    {
                        "N": int(n),
                        "rule": rule.name.lower(),
                        "scheme": scheme.value,
                        "omega": omega,
                        "error": err,
                    }
                )
    if out_path:
        os.makedirs(os.path.dirname(out_path) or ".", exist_ok=True)
        with open(out_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["N", "rule", "scheme", "omega", "error"])
            writer.writeheader()
            writer.writerows(rows)
    return rows


@dataclasses.dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int = 61
    ny: int = 61

    def points(self) -> np.ndarray:
        xs = np.linspace(self.x_min, self.x_max, self.nx)
        ys = np.linspace(self.y_min, self.y_max, self.ny)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return np.column_stack((gx.ravel(), gy.ravel()))


_GRID_EXTENT = {
    Geometry.DISK: 3.0,
    Geometry.TWO_ELLIPSES: 5.0,
    Geometry.SEMICIRCLES: 3.0,
    Geometry.DISK_INTERIOR: 1.0,
}


def default_grid(geometry: Geometry, n: int = 61) -> GridSpec:
    ext = _GRID_EXTENT[geometry]
    return GridSpec(-ext, ext, -ext, ext, n, n)


def _snapshot_mask(sc: Scenario, disc, pts: np.ndarray) -> np.ndarray:
    """True where the total field is evaluable (off the scatterer)."""
    boundary = boundary_for(sc.shape)
    inside = contains(boundary, pts)
    keep = ~inside if sc.problem is Problem.EXTERIOR else inside
    if isinstance(disc, GalerkinDiscretization):
        certified = certified_point_panel_distances(disc.mesh, pts)
        keep &= certified.min(axis=1) > 0.0
    return keep


def render_snapshots(
    sc: Scenario,
    times: Sequence[float] = DEFAULT_SNAPSHOT_TIMES,
    grid_spec: GridSpec | None = None,
    workers: int | None = None,
    out_dir: str | None = None,
) -> tuple:
    """Total field u + u_inc on a regular grid, one CSV per requested time.

    Grid points on the scatterer (or beyond the domain for interior runs)
    are emitted with the masked sentinel nan.  Requested times snap to the
    nearest time node.
    """
    grid_spec = grid_spec if grid_spec is not None else default_grid(sc.geometry)
    out_dir = out_dir or sc.output_dir or "."
    disc = build_discretization(sc)
    grid = sc.grid()
    rhs = project_rhs(disc, sc.incident.data, grid)
    op = build_system_operator(sc, disc)
    densities, _ = all_at_once_solve(op, rhs, workers=workers)
    pts = grid_spec.points()
    keep = _snapshot_mask(sc, disc, pts)
    obs_op = build_observation_operator(sc, disc, pts[keep])
    scattered = evaluate_field(densities, obs_op, workers=workers)
    dt = grid.dt
    indices = [min(grid.num_steps, max(0, round(t / dt))) for t in times]
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    max_total = 0.0
    max_incident = 0.0
    for t_req, n in zip(times, indices):
        t_n = n * dt
        u_inc = np.asarray(sc.incident.field(t_n, pts[keep]), dtype=np.float64)
        total = np.full(pts.shape[0], np.nan)
        total[keep] = scattered.values[n] + u_inc
        max_total = max(max_total, float(np.max(np.abs(total[keep]), initial=0.0)))
        max_incident = max(max_incident, float(np.max(np.abs(u_inc), initial=0.0)))
        path = os.path.join(out_dir, f"snapshot_t{t_req:.2f}.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y", "value"])
            for (x, y), v in zip(pts, total):
                writer.writerow([float(x), float(y), float(v)])
        paths.append(path)
    if max_incident > 0.0 and max_total > ENERGY_FACTOR * max_incident:
        logger.warning(
            "snapshot field magnitude %.3e exceeds %.1fx the incident scale %.3e",
            max_total,
            ENERGY_FACTOR,
            max_incident,
        )
    return tuple(paths)
