"""Workspace scans: fixed-orientation size ratios, zone maps over an
orientation range, pointwise-best (VAM) selection and the regular dextrous
workspace (largest inscribed circle of the good zone).
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage, optimize

from .exceptions import EmptyRegion, EmptyWorkspace
from .indices import evaluate_batch
from .mechanism import MechanismGeometry, WorkingMode, default_geometry, solve_legs_batch

log = logging.getLogger(__name__)

VAM = "vam"
PHI_FIXED_DEG = 17.5
DEFAULT_THRESHOLDS = {"cond": 0.15, "angle": math.radians(75.0)}
# grouped rows of the size-ratio table: modes 1 | 2,3,4 | 5,6,7 | 8
TABLE_GROUPS = ((1,), (2, 3, 4), (5, 6, 7), (8,))
PUBLISHED_RATIOS = {
    "cond": (0.8827, 0.7533, 0.6226, 0.5215),
    "angle": (0.8316, 0.7193, 0.7076, 0.7186),
}


class CellClass(enum.IntEnum):
    DARK = 0
    DARK_GRAY = 1
    LIGHT_GRAY = 2


@dataclass(frozen=True)
class GridSpec:
    x_range: Tuple[float, float] = (-9.0, 9.0)
    y_range: Tuple[float, float] = (-9.0, 9.0)
    x_res: int = 400
    y_res: int = 400
    phi_range: Tuple[float, float] = (math.radians(5.0), math.radians(25.0))
    phi_res: int = 21

    def __post_init__(self):
        for lo, hi in (self.x_range, self.y_range):
            if not hi > lo:
                raise ValueError(f"empty range ({lo}, {hi})")
        if self.phi_range[1] < self.phi_range[0]:
            raise ValueError("phi range is reversed")
        if self.x_res < 2 or self.y_res < 2:
            raise ValueError("grid resolution must be at least 2 per axis")
        if self.phi_res < 1 or (self.phi_res < 2 and self.phi_range[1] > self.phi_range[0]):
            raise ValueError("phi resolution must be at least 2 when phi is swept")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(*self.x_range, self.x_res)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(*self.y_range, self.y_res)

    @property
    def phis(self) -> np.ndarray:
        return np.linspace(*self.phi_range, self.phi_res)

    @property
    def step(self) -> Tuple[float, float]:
        return (
            (self.x_range[1] - self.x_range[0]) / (self.x_res - 1),
            (self.y_range[1] - self.y_range[0]) / (self.y_res - 1),
        )

    def mesh(self):
        """(X, Y) arrays of shape (y_res, x_res); row index is y."""
        return np.meshgrid(self.xs, self.ys)

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(
            self.x_range,
            self.y_range,
            (self.x_res - 1) * factor + 1,
            (self.y_res - 1) * factor + 1,
            self.phi_range,
            (self.phi_res - 1) * factor + 1 if self.phi_res > 1 else 1,
        )


def passes(index: str, values, threshold: float):
    """Threshold test: ``1/kappa > threshold`` or ``psi < threshold``."""
    values = np.asarray(values)
    with np.errstate(invalid="ignore"):
        if index == "cond":
            return values > threshold
        if index == "angle":
            return values < threshold
    raise ValueError(f"unknown index {index!r}")


def worst(index: str, values, axis):
    return np.min(values, axis=axis) if index == "cond" else np.max(values, axis=axis)


def _check_index(index):
    if index not in ("cond", "angle"):
        raise ValueError(f"index must be 'cond' or 'angle', got {index!r}")


def _mode_list(mode) -> List[int]:
    if mode == VAM:
        return list(range(1, 9))
    return [int(mode)]


def _chunks(n, size):
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


def _evaluate_points(geometry, x, y, phi, working_mode, modes, char_length, index, jacobian, workers, chunk=20000):
    """Index values (N, M) plus reachable/serial masks, evaluated in chunks."""
    x, y, phi = (np.ravel(v) for v in np.broadcast_arrays(x, y, phi))
    n = x.size
    values = np.empty((n, len(modes)))
    reach = np.empty(n, dtype=bool)
    serial = np.empty(n, dtype=bool)

    def run(sl):
        bp = evaluate_batch(geometry, x[sl], y[sl], phi[sl], working_mode, modes, char_length, want=(index,), jacobian=jacobian)
        values[sl] = bp.inv_condition if index == "cond" else bp.transmission
        reach[sl] = bp.reachable
        serial[sl] = bp.serial

    slices = _chunks(n, chunk)
    if workers and workers > 1 and len(slices) > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(run, slices))
    else:
        for sl in slices:
            run(sl)
    return values, reach, serial


@dataclass
class RatioResult:
    ratio: float
    passing: np.ndarray  # (y_res, x_res) bool
    reachable: np.ndarray  # (y_res, x_res) bool
    values: np.ndarray  # (y_res, x_res) index value (best over modes for the VAM)


def scan_constant_phi_detail(
    geometry: MechanismGeometry,
    mode,
    phi: float,
    spec: GridSpec,
    index: str = "angle",
    threshold: Optional[float] = None,
    working_mode: WorkingMode = WorkingMode(),
    char_length: float = 3.0,
    jacobian: str = "kinematic",
    workers: int = 1,
) -> RatioResult:
    _check_index(index)
    threshold = DEFAULT_THRESHOLDS[index] if threshold is None else threshold
    modes = _mode_list(mode)
    X, Y = spec.mesh()
    values, reach, serial = _evaluate_points(
        geometry, X, Y, phi, working_mode, modes, char_length, index, jacobian, workers
    )
    ok = reach & ~serial
    good = passes(index, values, threshold).any(axis=1) & ok
    best = np.max(values, axis=1) if index == "cond" else np.min(values, axis=1)
    shape = X.shape
    n_ok = int(ok.sum())
    if n_ok == 0:
        raise EmptyWorkspace("no reachable cell in the grid")
    return RatioResult(good.sum() / n_ok, good.reshape(shape), ok.reshape(shape), best.reshape(shape))


def scan_constant_phi(geometry, mode, phi, spec, index="angle", threshold=None, working_mode=WorkingMode(), char_length=3.0, **kw) -> float:
    """Fraction of reachable, non-singular cells that meet the threshold at fixed ``phi``."""
    return scan_constant_phi_detail(geometry, mode, phi, spec, index, threshold, working_mode, char_length, **kw).ratio


@dataclass
class ScanResult:
    spec: GridSpec
    mode: Union[int, str]
    index: str
    threshold: float
    cells: np.ndarray  # (y_res, x_res) of CellClass values
    values: np.ndarray  # worst index over phi; nan where Dark


def _classify(index, threshold, values, reach, serial):
    """values (K, P, M), reach/serial (K, P) -> classes (K,), worst values (K,)."""
    sweep_ok = (reach & ~serial).all(axis=1)
    ok_per_phi = passes(index, values, threshold).any(axis=2)
    if index == "cond":
        best_mode = np.max(np.nan_to_num(values, nan=-np.inf), axis=2)
    else:
        best_mode = np.min(np.nan_to_num(values, nan=np.inf), axis=2)
    all_pass = ok_per_phi.all(axis=1)
    cls = np.where(
        ~sweep_ok,
        CellClass.DARK,
        np.where(all_pass, CellClass.LIGHT_GRAY, CellClass.DARK_GRAY),
    ).astype(np.int8)
    w = np.where(sweep_ok, worst(index, best_mode, axis=1), np.nan)
    return cls, w


def classify_points(
    geometry,
    xs,
    ys,
    mode,
    phis,
    index="angle",
    threshold=None,
    working_mode=WorkingMode(),
    char_length=3.0,
    jacobian="kinematic",
    workers=1,
):
    """Classify arbitrary (x, y) points over the orientation samples ``phis``."""
    _check_index(index)
    threshold = DEFAULT_THRESHOLDS[index] if threshold is None else threshold
    modes = _mode_list(mode)
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    k, p = xs.size, phis.size
    X = np.repeat(xs, p)
    Y = np.repeat(ys, p)
    P = np.tile(phis, k)
    values, reach, serial = _evaluate_points(
        geometry, X, Y, P, working_mode, modes, char_length, index, jacobian, workers
    )
    return _classify(index, threshold, values.reshape(k, p, -1), reach.reshape(k, p), serial.reshape(k, p))


def classify_cell(
    geometry,
    x,
    y,
    mode,
    phi_range,
    phi_res,
    index="angle",
    threshold=None,
    working_mode=WorkingMode(),
    char_length=3.0,
    jacobian="kinematic",
) -> CellClass:
    if phi_res < 2:
        raise ValueError("phi_res must be at least 2")
    phis = np.linspace(phi_range[0], phi_range[1], phi_res)
    cls, _ = classify_points(geometry, [x], [y], mode, phis, index, threshold, working_mode, char_length, jacobian)
    return CellClass(int(cls[0]))


def vam_classify_cell(geometry, x, y, phi_range, phi_res, index="angle", threshold=None, working_mode=WorkingMode(), char_length=3.0, jacobian="kinematic") -> CellClass:
    """Like :func:`classify_cell`, but a sample passes if any of the eight modes passes."""
    return classify_cell(geometry, x, y, VAM, phi_range, phi_res, index, threshold, working_mode, char_length, jacobian)


def candidate_cells(geometry: MechanismGeometry, spec: GridSpec, working_mode=WorkingMode()) -> np.ndarray:
    """Cells whose centre is reachable at the first orientation sample.

    Anything else is Dark, so scans only evaluate these.
    """
    X, Y = spec.mesh()
    legs = solve_legs_batch(geometry, X, Y, spec.phis[0], working_mode)
    return legs.reachable.reshape(X.shape)


def classify_grid(
    geometry: MechanismGeometry,
    mode,
    spec: GridSpec,
    index: str = "angle",
    threshold: Optional[float] = None,
    working_mode: WorkingMode = WorkingMode(),
    char_length: float = 3.0,
    jacobian: str = "kinematic",
    workers: int = 1,
) -> ScanResult:
    threshold = DEFAULT_THRESHOLDS[index] if threshold is None else threshold
    X, Y = spec.mesh()
    cand = candidate_cells(geometry, spec, working_mode)
    cells = np.full(X.shape, CellClass.DARK, dtype=np.int8)
    values = np.full(X.shape, np.nan)
    if cand.any():
        cls, w = classify_points(
            geometry, X[cand], Y[cand], mode, spec.phis, index, threshold, working_mode, char_length, jacobian, workers
        )
        cells[cand] = cls
        values[cand] = w
    return ScanResult(spec, mode, index, threshold, cells, values)


@dataclass(frozen=True)
class RdwResult:
    center: Tuple[float, float]
    radius: float
    index: str
    threshold: float
    phi_range: Tuple[float, float]


def rdw_search(scan: ScanResult, strict: bool = False) -> RdwResult:
    """Largest circle centred on a grid node whose interior holds only
    LightGray cells.

    The radius is the Euclidean distance to the nearest non-LightGray cell
    centre minus half a cell diagonal. An empty region returns radius 0, or
    raises :class:`EmptyRegion` with ``strict=True``.
    """
    good = scan.cells == CellClass.LIGHT_GRAY
    spec = scan.spec
    if not good.any():
        if strict:
            raise EmptyRegion("no LightGray cell")
        return RdwResult((math.nan, math.nan), 0.0, scan.index, scan.threshold, spec.phi_range)
    dx, dy = spec.step
    padded = np.pad(good, 1, constant_values=False)
    dist = ndimage.distance_transform_edt(padded, sampling=(dy, dx))[1:-1, 1:-1]
    iy, ix = np.unravel_index(np.argmax(dist), dist.shape)
    radius = max(float(dist[iy, ix]) - 0.5 * math.hypot(dx, dy), 0.0)
    return RdwResult((float(spec.xs[ix]), float(spec.ys[iy])), radius, scan.index, scan.threshold, spec.phi_range)


@dataclass
class CompareRow:
    mode: Union[int, str]
    ratio: float
    rdw: RdwResult


def compare_modes(
    geometry: MechanismGeometry,
    spec: GridSpec,
    index: str = "angle",
    threshold: Optional[float] = None,
    working_mode: WorkingMode = WorkingMode(),
    char_length: float = 3.0,
    phi_fixed: float = math.radians(PHI_FIXED_DEG),
    jacobian: str = "kinematic",
    workers: int = 1,
) -> List[CompareRow]:
    """Nine rows (modes 1..8 then the VAM) with size ratio and RDW."""
    rows = []
    for mode in [*range(1, 9), VAM]:
        ratio = scan_constant_phi(
            geometry, mode, phi_fixed, spec, index, threshold, working_mode, char_length, jacobian=jacobian, workers=workers
        )
        scan = classify_grid(geometry, mode, spec, index, threshold, working_mode, char_length, jacobian, workers)
        rows.append(CompareRow(mode, ratio, rdw_search(scan)))
    return rows


def mode_ratios(geometry, spec, phi, index, threshold=None, working_mode=WorkingMode(), char_length=3.0, jacobian="kinematic", workers=1):
    """Size ratios of the eight modes in one pass (shared inverse kinematics)."""
    threshold = DEFAULT_THRESHOLDS[index] if threshold is None else threshold
    X, Y = spec.mesh()
    values, reach, serial = _evaluate_points(geometry, X, Y, phi, working_mode, list(range(1, 9)), char_length, index, jacobian, workers)
    ok = reach & ~serial
    n_ok = ok.sum()
    if n_ok == 0:
        raise EmptyWorkspace("no reachable cell in the grid")
    good = passes(index, values, threshold) & ok[:, None]
    return good.sum(axis=0) / n_ok


def grouped(values_by_mode: Sequence[float]) -> Tuple[float, ...]:
    """Average the eight per-mode values over the table groups."""
    v = np.asarray(values_by_mode, dtype=float)
    return tuple(float(np.mean(v[[m - 1 for m in g]])) for g in TABLE_GROUPS)


def minimize_on_interval(objective, lo: float, hi: float, coarse: int = 40, xatol: float = 1e-3) -> float:
    """Minimize a possibly piecewise-constant scalar function on [lo, hi].

    A log-spaced coarse scan picks the first (smallest-argument) minimum,
    then a bounded golden-section/Brent search refines it inside the
    neighbouring bracket. A flat objective returns the interval midpoint.
    """
    grid = np.geomspace(lo, hi, coarse)
    vals = np.array([objective(v) for v in grid])
    if np.ptp(vals) == 0.0:
        log.warning("objective is flat on [%g, %g]; returning the midpoint", lo, hi)
        return 0.5 * (lo + hi)
    k = int(np.argmin(vals))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, coarse - 1)]
    res = optimize.minimize_scalar(objective, bounds=(a, b), method="bounded", options={"xatol": xatol})
    return float(res.x) if res.fun < vals[k] else float(grid[k])


def calibrate_char_length(
    geometry: Optional[MechanismGeometry] = None,
    spec: GridSpec = GridSpec(x_res=200, y_res=200),
    target_ratios: Sequence[float] = PUBLISHED_RATIOS["cond"],
    threshold: float = 0.15,
    working_mode: WorkingMode = WorkingMode(),
    phi: float = math.radians(PHI_FIXED_DEG),
    bounds: Tuple[float, float] = (0.5, 20.0),
    jacobian: str = "kinematic",
    coarse: int = 40,
    workers: int = 1,
) -> float:
    """Characteristic length that best reproduces the size-ratio targets.

    ``target_ratios`` holds one value per table group (modes 1 | 2-4 | 5-7 | 8)
    or one per mode; the objective is the sum of squared ratio errors at
    fixed ``phi``. Ties go to the smaller length.
    """
    geometry = geometry or default_geometry()
    target = np.asarray(target_ratios, dtype=float)
    if target.size not in (4, 8):
        raise ValueError("need 4 grouped or 8 per-mode target ratios")

    def objective(length):
        try:
            r = mode_ratios(geometry, spec, phi, "cond", threshold, working_mode, length, jacobian, workers)
        except EmptyWorkspace:
            return float(np.sum(target**2))
        got = np.asarray(grouped(r)) if target.size == 4 else r
        return float(np.sum((got - target) ** 2))

    return minimize_on_interval(objective, bounds[0], bounds[1], coarse)
