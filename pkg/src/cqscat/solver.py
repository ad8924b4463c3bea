"""Time-stepping strategies for the discrete convolution system.

The default path diagonalizes the block-Toeplitz system by FFT along the
scaled contour |zeta| = lambda into independent frequency solves, of
which only the first ceil((N+2)/2) are computed; the rest are conjugate
mirrors because the data is real and every matrix entry is a
real-coefficient analytic function of zeta.  Marching-on-in-time is an
opt-in alternative that needs an invertible zeroth weight matrix, which
the shifted scheme destroys whenever every entry carries a positive
shift, so it raises an explicit infeasibility error in that regime.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ._backend import default_workers
from .assembly import ConvolutionOperator, RhsSeries
from .cq import TimeGrid, contour_points

logger = logging.getLogger(__name__)

RANK_TOL = 1e-12

# Imaginary mass above this fraction of the density scale signals an
# unstable run; surfaced as a warning so instabilities stay observable.
IMAG_WARN = 1e-6

_SQRT_EPS = math.sqrt(np.finfo(np.float64).eps)


class MotInfeasibleError(RuntimeError):
    """Raised when the zeroth weight matrix cannot drive a time march."""


@dataclasses.dataclass(frozen=True)
class DensityHistory:
    """Real density vectors per time step plus the discarded imaginary mass."""

    phi: np.ndarray
    residual_imag: float

    def __post_init__(self):
        scale = float(np.max(np.abs(self.phi))) if self.phi.size else 0.0
        if scale > 0.0 and self.residual_imag > IMAG_WARN * scale:
            logger.warning(
                "imaginary residual %.3e exceeds %.0e of the density scale; "
                "the run is likely unstable",
                self.residual_imag,
                IMAG_WARN,
            )


@dataclasses.dataclass(frozen=True)
class FieldSamples:
    """Field values u(t_n, X_l), rows indexed by time step."""

    values: np.ndarray
    grid: TimeGrid
    residual_imag: float

    def times(self) -> np.ndarray:
        return self.grid.times()


@dataclasses.dataclass(frozen=True)
class SolveReport:
    """Per-frequency diagnostics of an all-at-once solve."""

    rule: str
    scheme: str
    residual_norms: np.ndarray
    condition: np.ndarray
    rank: np.ndarray
    wall_time: float
    workers: int

    @property
    def num_frequencies(self) -> int:
        return self.residual_norms.size


def least_squares(a: np.ndarray, b: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Minimal-residual solution with relative singular-value truncation.

    Directions with singular value below rank_tol * sigma_max are dropped;
    severe ill-conditioning is expected (analytic source systems) and
    truncation is the degeneracy policy, not an error.
    """
    a = np.asarray(a)
    if a.shape[0] < a.shape[1]:
        raise ValueError("least squares expects at least as many rows as columns")
    x, _, _, _ = np.linalg.lstsq(a, b, rcond=rank_tol)
    return x


def _solve_one(a: np.ndarray, b: np.ndarray, rank_tol: float):
    x, _, rank, sv = np.linalg.lstsq(a, b, rcond=rank_tol)
    resn = float(np.linalg.norm(a @ x - b))
    cond = float(sv[0] / sv[-1]) if sv.size and sv[-1] > 0.0 else np.inf
    return x, resn, cond, int(rank)


def _contour_nodes(grid: TimeGrid) -> np.ndarray:
    # exact conjugate pairs, so full sweeps reproduce mirrored half sweeps
    return contour_points(grid)


def _half_count(n1: int) -> int:
    return n1 // 2 + 1


def _mirror(spectrum: np.ndarray) -> None:
    n1 = spectrum.shape[0]
    half = _half_count(n1)
    for k in range(1, n1 - half + 1):
        spectrum[n1 - k] = np.conj(spectrum[k])


def _run_frequency_sweep(task, n1: int, workers: int):
    half = _half_count(n1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(task, range(half)))
    return [task(k) for k in range(half)]


def all_at_once_solve(
    operator: ConvolutionOperator,
    rhs: RhsSeries,
    workers: int | None = None,
    rank_tol: float = RANK_TOL,
    use_symmetry: bool = True,
) -> tuple[DensityHistory, SolveReport]:
    """Decoupled frequency-domain solve of the discrete convolution system.

    use_symmetry=False solves all N+1 frequencies directly instead of
    mirroring conjugates; results agree to roundoff and the flag exists
    to demonstrate that.
    """
    grid = operator.grid
    g = rhs.values if isinstance(rhs, RhsSeries) else np.asarray(rhs, dtype=np.float64)
    if g.ndim == 1:
        g = g[:, None]
    n1 = grid.num_nodes
    if g.shape[0] != n1:
        raise ValueError("right-hand side length does not match the time grid")
    workers = default_workers() if workers is None else max(1, int(workers))
    t0 = time.perf_counter()
    lam_pow = grid.contour_radius ** np.arange(n1)
    # rfft plus exact mirror keeps the data spectrum bitwise
    # conjugate-symmetric, so half and full sweeps see the same numbers
    ghat = np.empty((n1, g.shape[1]), dtype=np.complex128)
    ghat[: _half_count(n1)] = np.fft.rfft(lam_pow[:, None] * g, axis=0)
    _mirror(ghat)
    zetas = _contour_nodes(grid)
    n_cols = operator.block.shape[1]
    square = operator.block.shape[0] == n_cols

    def task(k):
        a = operator.at_contour_point(zetas[k])
        x, resn, cond, rank = _solve_one(a, ghat[k], rank_tol)
        if square and rank < n_cols:
            logger.warning("singular square system at frequency index %d (rank %d)", k, rank)
        return x, resn, cond, rank

    sweep = range(_half_count(n1)) if use_symmetry else range(n1)
    if use_symmetry:
        results = _run_frequency_sweep(task, n1, workers)
    else:
        results = [task(k) for k in sweep]
    phihat = np.empty((n1, n_cols), dtype=np.complex128)
    for k, (x, _, _, _) in zip(sweep, results):
        phihat[k] = x
    if use_symmetry:
        _mirror(phihat)
    phi_c = np.fft.ifft(phihat, axis=0) / lam_pow[:, None]
    residual_imag = float(np.max(np.abs(phi_c.imag))) if phi_c.size else 0.0
    history = DensityHistory(phi=np.ascontiguousarray(phi_c.real), residual_imag=residual_imag)
    report = SolveReport(
        rule=operator.rule.name.lower(),
        scheme="modified" if operator.shifts is not None else "standard",
        residual_norms=np.array([r[1] for r in results]),
        condition=np.array([r[2] for r in results]),
        rank=np.array([r[3] for r in results]),
        wall_time=time.perf_counter() - t0,
        workers=workers,
    )
    return history, report


def operator_weights(operator: ConvolutionOperator) -> np.ndarray:
    """Discrete convolution weight matrices omega_0..omega_N, real parts.

    Evaluates the operator symbol along the contour (half sweep plus
    conjugate mirror) and inverse-transforms; the imaginary residue is
    checked against the FFT noise floor before being dropped.
    """
    grid = operator.grid
    n1 = grid.num_nodes
    zetas = _contour_nodes(grid)
    shape = operator.block.shape
    vhat = np.empty((n1, *shape), dtype=np.complex128)
    for k in range(_half_count(n1)):
        vhat[k] = operator.at_contour_point(zetas[k])
    _mirror(vhat)
    w = np.fft.ifft(vhat, axis=0)
    w /= grid.contour_radius ** np.arange(n1)[:, None, None]
    scale = float(np.max(np.abs(w.real))) if w.size else 0.0
    imag = float(np.max(np.abs(w.imag))) if w.size else 0.0
    if scale > 0.0 and imag > 100.0 * _SQRT_EPS * scale:
        logger.warning("weight matrices carry imaginary mass %.3e (scale %.3e)", imag, scale)
    return np.ascontiguousarray(w.real)


def mot_solve(weights: np.ndarray, rhs: RhsSeries, rank_tol: float = RANK_TOL) -> DensityHistory:
    """Sequential least-squares march using the zeroth weight matrix.

    Infeasible when omega_0 is numerically zero (every kernel entry
    shifted by a full step or more) or column-rank deficient.
    """
    w = np.asarray(weights, dtype=np.float64)
    g = rhs.values if isinstance(rhs, RhsSeries) else np.asarray(rhs, dtype=np.float64)
    if g.ndim == 1:
        g = g[:, None]
    if w.shape[0] != g.shape[0]:
        raise ValueError("weight and data lengths disagree")
    scale = float(np.max(np.sqrt((w**2).sum(axis=(1, 2)))))
    head = float(np.linalg.norm(w[0]))
    if scale == 0.0 or head <= 100.0 * _SQRT_EPS * scale:
        raise MotInfeasibleError(
            "zeroth weight matrix is numerically zero; "
            "marching-on-in-time is infeasible, use the all-at-once solver"
        )
    sv = np.linalg.svd(w[0], compute_uv=False)
    if sv[-1] < rank_tol * sv[0] or w[0].shape[0] < w[0].shape[1]:
        raise MotInfeasibleError(
            "zeroth weight matrix is rank deficient; "
            "marching-on-in-time is infeasible, use the all-at-once solver"
        )
    n1, _, k_dof = w.shape
    phi = np.zeros((n1, k_dof))
    for n in range(n1):
        acc = g[n].astype(np.float64).copy()
        for ell in range(n):
            acc -= w[n - ell] @ phi[ell]
        phi[n], _, _, _ = np.linalg.lstsq(w[0], acc, rcond=rank_tol)
    return DensityHistory(phi=phi, residual_imag=0.0)


def evaluate_field(
    densities: DensityHistory,
    observation: ConvolutionOperator,
    workers: int | None = None,
) -> FieldSamples:
    """Apply the discrete single-layer convolution to solved densities.

    Runs the same contour transform as the solve: forward-transform the
    densities, multiply by the observation matrices frequency by
    frequency, inverse-transform, take the real part.
    """
    grid = observation.grid
    n1 = grid.num_nodes
    if densities.phi.shape[0] != n1:
        raise ValueError("density history does not match the observation grid")
    workers = default_workers() if workers is None else max(1, int(workers))
    lam_pow = grid.contour_radius ** np.arange(n1)
    phihat = np.fft.fft(lam_pow[:, None] * densities.phi, axis=0)
    zetas = _contour_nodes(grid)

    def task(k):
        return observation.at_contour_point(zetas[k]) @ phihat[k]

    results = _run_frequency_sweep(task, n1, workers)
    uhat = np.empty((n1, observation.block.shape[0]), dtype=np.complex128)
    for k, row in enumerate(results):
        uhat[k] = row
    _mirror(uhat)
    u_c = np.fft.ifft(uhat, axis=0) / lam_pow[:, None]
    residual = float(np.max(np.abs(u_c.imag))) if u_c.size else 0.0
    scale = float(np.max(np.abs(u_c.real))) if u_c.size else 0.0
    if scale > 0.0 and residual > IMAG_WARN * scale:
        logger.warning("field imaginary residual %.3e exceeds %.0e of scale", residual, IMAG_WARN)
    return FieldSamples(values=np.ascontiguousarray(u_c.real), grid=grid, residual_imag=residual)


def max_error(u_h: FieldSamples, u_ref: FieldSamples) -> float:
    """Max-norm difference over observation points and shared time nodes.

    The reference may live on a refinement whose nodes contain the coarse
    nodes (same horizon, step ratio integer); anything else is rejected.
    """
    if u_h.values.shape[1] != u_ref.values.shape[1]:
        raise ValueError("observation point sets differ")
    n_c = u_h.grid.num_steps
    n_f = u_ref.grid.num_steps
    if n_c == 0 or n_f % max(n_c, 1):
        raise ValueError("reference grid does not refine the coarse grid")
    ratio = n_f // n_c
    if not math.isclose(u_h.grid.dt, ratio * u_ref.grid.dt, rel_tol=1e-12):
        raise ValueError("grids span different horizons")
    return float(np.max(np.abs(u_h.values - u_ref.values[::ratio])))
