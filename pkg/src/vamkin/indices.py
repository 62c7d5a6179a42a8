"""Kinetostatic performance indices: Frobenius condition number of the
normalized kinematic Jacobian and the transmission angle.

The transmission angle of leg i is the angle between the force the leg
transmits to its platform joint C_i and the velocity C_i would have if the
other two legs' actuators were locked. With two legs locked the platform
rotates about the intersection I_i of their force lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .exceptions import DegenerateDirection, Indeterminate, ParallelSingular, Unreachable
from .mechanism import (
    ActuatingMode,
    Drive,
    JointState,
    MechanismGeometry,
    Pose,
    WorkingMode,
    cross2,
    full_ik,
    jacobian_pair,
    jacobians_batch,
    kinematic_jacobian,
    normalized_direct,
    singularity_flags,
    solve_legs_batch,
)

HALF_PI = 0.5 * math.pi
COINCIDENT_TOL = 1e-12


def frobenius_condition(m) -> Tuple[float, float]:
    """Return ``(kappa, 1 / kappa)`` using the Frobenius-norm definition.

    ``kappa = sqrt(tr(M^T M) tr((M^T M)^-1)) / m`` for an m x n matrix with
    m <= n. A singular ``M^T M`` gives ``(inf, 0.0)``.
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    rows, cols = m.shape
    if rows > cols:
        raise ValueError("expected an m x n matrix with m <= n")
    gram = m.T @ m
    tr = np.trace(gram)
    if tr == 0.0 or not np.all(np.isfinite(gram)):
        return math.inf, 0.0
    scaled = gram / tr
    try:
        cond = np.linalg.cond(scaled)
        if not np.isfinite(cond) or cond > 1e15:
            return math.inf, 0.0
        tr_inv = np.trace(np.linalg.inv(scaled))
    except np.linalg.LinAlgError:
        return math.inf, 0.0
    kappa = math.sqrt(tr_inv) / rows
    return kappa, 1.0 / kappa


def fold_angle(angle):
    """Map an angle difference onto [0, pi/2]: reduce modulo pi, then reflect."""
    r = np.mod(angle, math.pi)
    return np.minimum(r, math.pi - r)


@dataclass(frozen=True)
class ForceLine:
    through: np.ndarray
    direction_angle: float
    intercept: float  # y-intercept, inf for vertical lines

    @property
    def direction(self) -> np.ndarray:
        return np.array([math.cos(self.direction_angle), math.sin(self.direction_angle)])

    def homogeneous(self) -> np.ndarray:
        """Line coefficients (l0, l1, l2) with l0 x + l1 y + l2 = 0."""
        d = self.direction
        n = np.array([-d[1], d[0]])
        return np.array([n[0], n[1], -n @ self.through])


def _normalize_direction(angle: float) -> float:
    # into (-pi/2, pi/2]
    r = math.remainder(angle, math.pi)
    if r <= -HALF_PI:
        r += math.pi
    return r


def line_from_direction(through, vec) -> ForceLine:
    through = np.asarray(through, dtype=float)
    vec = np.asarray(vec, dtype=float)
    if math.hypot(vec[0], vec[1]) == 0.0:
        raise DegenerateDirection("force direction has zero length")
    if vec[0] == 0.0:
        gamma = HALF_PI
    else:
        gamma = _normalize_direction(math.atan2(vec[1], vec[0]))
    if abs(gamma) == HALF_PI:
        intercept = math.inf
    else:
        intercept = through[1] - through[0] * math.tan(gamma)
    return ForceLine(through, gamma, intercept)


def force_line(geometry: MechanismGeometry, state: JointState, leg: int, drive: Drive) -> ForceLine:
    """Line of the force leg ``leg`` applies at C_i.

    Proximal drive: along B_iC_i. Distal drive: along A_iC_i.
    """
    c = state.platform_points[leg]
    origin = state.elbow_points[leg] if Drive(drive) is Drive.PROXIMAL else geometry.base_anchors[leg]
    return line_from_direction(c, c - origin)


@dataclass(frozen=True)
class AtInfinity:
    direction: np.ndarray
    degenerate: bool = False


def instantaneous_center(line_j: ForceLine, line_k: ForceLine, tol: float = COINCIDENT_TOL):
    """Intersection of two force lines, or :class:`AtInfinity` when parallel.

    Coincident lines give ``AtInfinity(..., degenerate=True)``.
    """
    lj, lk = line_j.homogeneous(), line_k.homogeneous()
    x = np.cross(lj, lk)
    scale = max(1.0, abs(lj[2]), abs(lk[2]))
    if abs(x[2]) <= tol:
        # parallel: x[:2] is perpendicular to both normals (a direction)
        coincident = abs(x[0]) <= tol * scale and abs(x[1]) <= tol * scale
        return AtInfinity(line_j.direction.copy(), degenerate=coincident)
    return x[:2] / x[2]


def icr_from_intercepts(gamma_j, b_j, gamma_k, b_k):
    """Closed-form intersection with slopes tan(gamma) and y-intercepts b."""
    tj, tk = math.tan(gamma_j), math.tan(gamma_k)
    x = (b_k - b_j) / (tj - tk)
    y = (b_k * tj - b_j * tk) / (tj - tk)
    return np.array([x, y])


def _others(i):
    return [(1, 2), (2, 0), (0, 1)][i]


def transmission_angles(geometry: MechanismGeometry, state: JointState, mode: ActuatingMode, strict: bool = False):
    """Return ``(psi, psi_per_leg)`` in radians.

    A coincident pair of force lines (parallel singularity) sets that leg's
    angle to 90 degrees, or raises :class:`Indeterminate` with ``strict=True``.
    """
    lines = [force_line(geometry, state, i, d) for i, d in enumerate(mode.leg_drive)]
    psis = []
    for i in range(3):
        j, k = _others(i)
        icr = instantaneous_center(lines[j], lines[k])
        c = state.platform_points[i]
        if isinstance(icr, AtInfinity):
            if icr.degenerate:
                if strict:
                    raise Indeterminate(f"force lines of legs {j + 1} and {k + 1} coincide")
                psis.append(HALF_PI)
                continue
            beta = math.atan2(icr.direction[1], icr.direction[0]) + HALF_PI
        else:
            rel = c - icr
            if math.hypot(rel[0], rel[1]) <= COINCIDENT_TOL * geometry.max_reach:
                if strict:
                    raise Indeterminate(f"C_{i + 1} coincides with its instantaneous centre")
                psis.append(HALF_PI)
                continue
            beta = math.atan2(rel[1], rel[0]) + HALF_PI
        psis.append(float(fold_angle(lines[i].direction_angle - beta)))
    return max(psis), tuple(psis)


@dataclass(frozen=True)
class PerformanceSample:
    reachable: bool
    serial_singular: bool = False
    parallel_singular: bool = False
    inv_condition: float = math.nan
    transmission_angles: Tuple[float, float, float] = (math.nan, math.nan, math.nan)
    transmission_angle: float = math.nan
    unreachable_leg: Optional[int] = None


def evaluate_pose(
    geometry: MechanismGeometry,
    pose: Pose,
    working_mode: WorkingMode = WorkingMode(),
    mode: ActuatingMode = ActuatingMode(1),
    char_length: float = 3.0,
    jacobian: str = "kinematic",
) -> PerformanceSample:
    """Full per-pose evaluation; unreachable poses give ``reachable=False``."""
    try:
        state = full_ik(geometry, pose, working_mode)
    except Unreachable as exc:
        return PerformanceSample(False, unreachable_leg=exc.leg)
    flags = singularity_flags(geometry, state, pose, mode, char_length)
    serial = any(flags["serial"])
    parallel = flags["parallel"]
    inv_kappa = 0.0
    if not (serial or parallel):
        try:
            pair = jacobian_pair(geometry, state, pose, mode)
            if jacobian == "direct":
                inv_kappa = frobenius_condition(normalized_direct(pair, char_length))[1]
            else:
                inv_kappa = frobenius_condition(kinematic_jacobian(pair, char_length))[1]
        except ParallelSingular:
            parallel = True
    psi, per_leg = transmission_angles(geometry, state, mode)
    if parallel:
        psi = HALF_PI
    return PerformanceSample(True, serial, parallel, inv_kappa, per_leg, psi)


# ---------------------------------------------------------------------------
# batch evaluation


def _adj3(m):
    """Adjugate of a stack of 3x3 matrices."""
    a = m
    adj = np.empty_like(a)
    adj[..., 0, 0] = a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1]
    adj[..., 0, 1] = a[..., 0, 2] * a[..., 2, 1] - a[..., 0, 1] * a[..., 2, 2]
    adj[..., 0, 2] = a[..., 0, 1] * a[..., 1, 2] - a[..., 0, 2] * a[..., 1, 1]
    adj[..., 1, 0] = a[..., 1, 2] * a[..., 2, 0] - a[..., 1, 0] * a[..., 2, 2]
    adj[..., 1, 1] = a[..., 0, 0] * a[..., 2, 2] - a[..., 0, 2] * a[..., 2, 0]
    adj[..., 1, 2] = a[..., 0, 2] * a[..., 1, 0] - a[..., 0, 0] * a[..., 1, 2]
    adj[..., 2, 0] = a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0]
    adj[..., 2, 1] = a[..., 0, 1] * a[..., 2, 0] - a[..., 0, 0] * a[..., 2, 1]
    adj[..., 2, 2] = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    return adj


def inv_condition_batch(a_norm, b_diag):
    """1/kappa_F of J = A^-1 B for stacks of (A, diag B); also det(A).

    Uses ``1/kappa = 3 |det A| |det B| / (||adj(A) B|| ||adj(B) A||)`` which
    stays finite and goes to 0 at either kind of singularity.
    """
    det_a = np.linalg.det(a_norm)
    det_b = np.prod(b_diag, axis=-1)
    adj_a_b = _adj3(a_norm) * b_diag[..., None, :]
    adj_b = np.stack(
        [b_diag[..., 1] * b_diag[..., 2], b_diag[..., 0] * b_diag[..., 2], b_diag[..., 0] * b_diag[..., 1]],
        axis=-1,
    )
    adj_b_a = adj_b[..., :, None] * a_norm
    num = 3.0 * np.abs(det_a) * np.abs(det_b)
    den = np.linalg.norm(adj_a_b, axis=(-2, -1)) * np.linalg.norm(adj_b_a, axis=(-2, -1))
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(den > 0, num / den, 0.0)
    return np.clip(inv, 0.0, 1.0), det_a


def transmission_batch(legs, distal_mask):
    """Per-leg folded transmission angles (N, 3) for one actuating mode."""
    distal_mask = np.asarray(distal_mask, dtype=bool)
    h = np.where(distal_mask[:, None], legs.a, legs.b)
    c = legs.c
    d = c - h
    # homogeneous lines n . X + w = 0 with n = E d
    n = np.stack([-d[..., 1], d[..., 0]], axis=-1)
    w = -np.sum(n * c, axis=-1)
    lines = np.concatenate([n, w[..., None]], axis=-1)
    psi = np.empty(c.shape[:-1])
    for i in range(3):
        j, k = _others(i)
        icr = np.cross(lines[:, j], lines[:, k])
        # velocity of C_i about the (homogeneous) centre, valid at infinity too
        rel = c[:, i] * icr[:, 2:3] - icr[:, :2]
        vel = np.stack([-rel[:, 1], rel[:, 0]], axis=-1)
        di = d[:, i]
        dot = np.abs(np.sum(di * vel, axis=-1))
        crs = np.abs(cross2(di, vel))
        ang = np.arctan2(crs, dot)
        vnorm = np.hypot(vel[:, 0], vel[:, 1])
        scale = np.hypot(di[:, 0], di[:, 1]) * np.linalg.norm(lines[:, j], axis=-1) * np.linalg.norm(lines[:, k], axis=-1)
        psi[:, i] = np.where(vnorm <= COINCIDENT_TOL * scale, HALF_PI, ang)
    return psi


@dataclass
class BatchPerformance:
    """Indices for N poses and a list of actuating modes (columns)."""

    modes: Sequence[int]
    reachable: np.ndarray  # (N,)
    serial: np.ndarray  # (N,)
    parallel: np.ndarray  # (N, M)
    inv_condition: np.ndarray  # (N, M)
    transmission: np.ndarray  # (N, M)  max over legs
    det_a: np.ndarray  # (N, M)


def evaluate_batch(
    geometry: MechanismGeometry,
    x,
    y,
    phi,
    working_mode: WorkingMode = WorkingMode(),
    modes: Sequence[int] = tuple(range(1, 9)),
    char_length: float = 3.0,
    want=("cond", "angle"),
    jacobian: str = "kinematic",
) -> BatchPerformance:
    """Evaluate many poses at once for several actuating modes.

    ``jacobian="direct"`` conditions the normalized direct Jacobian A alone
    instead of J = A^-1 B.
    """
    if jacobian not in ("kinematic", "direct"):
        raise ValueError(f"jacobian must be 'kinematic' or 'direct', got {jacobian!r}")
    legs = solve_legs_batch(geometry, x, y, phi, working_mode)
    n = legs.p.shape[0]
    serial = legs.serial & legs.reachable
    modes = [int(m) for m in modes]
    inv = np.zeros((n, len(modes)))
    psi = np.full((n, len(modes)), HALF_PI)
    det = np.zeros((n, len(modes)))
    par = np.zeros((n, len(modes)), dtype=bool)
    for col, number in enumerate(modes):
        mask = ActuatingMode(number).distal_mask
        a_norm, b_diag = jacobians_batch(legs, mask, char_length)
        if "cond" in want:
            scale = b_diag if jacobian == "kinematic" else np.ones_like(b_diag)
            inv[:, col], det[:, col] = inv_condition_batch(a_norm, scale)
        else:
            det[:, col] = np.linalg.det(a_norm)
        fro = np.linalg.norm(a_norm, axis=(-2, -1))
        par[:, col] = np.abs(det[:, col]) < 1e-10 * fro**3
        if "angle" in want:
            psi[:, col] = transmission_batch(legs, mask).max(axis=-1)
    bad = ~legs.reachable
    inv[serial | bad] = 0.0
    inv[par] = 0.0
    psi[par] = HALF_PI
    psi[bad] = np.nan
    inv[bad] = np.nan
    return BatchPerformance(modes, legs.reachable, serial, par & legs.reachable[:, None], inv, psi, det)
