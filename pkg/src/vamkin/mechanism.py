"""Geometry, inverse kinematics and Jacobians of the 3-RRR mechanism with
variable actuation.

Every leg is a chain A_i -> B_i -> C_i of two revolute links. The joint at
A_i (angle ``alpha``) or the relative joint at B_i can be the driven one,
selected per leg by an :class:`ActuatingMode`. Angles ``alpha`` and ``delta``
are absolute direction angles of A_iB_i and B_iC_i in the base frame.

The velocity model is ``A t = B qdot`` with ``t = (xdot, ydot, phidot)``.
For a proximal-driven leg ``q_i = alpha_i``; for a distal-driven leg
``q_i = alpha_i - delta_i``, the elbow angle measured from B_iC_i to A_iB_i,
which is the sign convention that keeps B identical for all modes.

Scalar functions take and return small dataclasses; the ``*_batch`` helpers
work on arrays of poses and are what the workspace scans use.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from .exceptions import ParallelSingular, SerialSingular, Unreachable

SERIAL_TOL = 1e-8
PARALLEL_TOL = 1e-10
REACH_TOL = 1e-12

E = np.array([[0.0, -1.0], [1.0, 0.0]])


def cross2(u, v):
    """z-component of u x v for arrays of planar vectors (last axis = 2)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def rotation(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def _equilateral(side: float) -> np.ndarray:
    # A1A2 parallel to x, counterclockwise, centroid at the origin
    r_in = side / (2.0 * math.sqrt(3.0))
    return np.array(
        [
            [-side / 2.0, -r_in],
            [side / 2.0, -r_in],
            [0.0, 2.0 * r_in],
        ]
    )


@dataclass(frozen=True)
class MechanismGeometry:
    base_anchors: np.ndarray
    platform_offsets: np.ndarray
    proximal_length: float = 3.0
    distal_length: float = 3.0

    def __post_init__(self):
        base = np.array(self.base_anchors, dtype=float).reshape(3, 2)
        plat = np.array(self.platform_offsets, dtype=float).reshape(3, 2)
        base.flags.writeable = False
        plat.flags.writeable = False
        object.__setattr__(self, "base_anchors", base)
        object.__setattr__(self, "platform_offsets", plat)
        if not (self.proximal_length > 0 and self.distal_length > 0):
            raise ValueError("link lengths must be positive")

    @classmethod
    def from_sides(cls, base_side=10.0, platform_side=5.0, proximal_length=3.0, distal_length=3.0):
        if base_side <= 0 or platform_side <= 0:
            raise ValueError("triangle sides must be positive")
        return cls(_equilateral(base_side), _equilateral(platform_side), proximal_length, distal_length)

    @property
    def max_reach(self) -> float:
        return self.proximal_length + self.distal_length

    @property
    def min_reach(self) -> float:
        return abs(self.proximal_length - self.distal_length)


def default_geometry() -> MechanismGeometry:
    """Base side 10, platform side 5, both links 3."""
    return MechanismGeometry.from_sides()


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    phi: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise ValueError("phi must be finite")

    @property
    def p(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    @classmethod
    def from_degrees(cls, x, y, phi_deg):
        return cls(float(x), float(y), math.radians(phi_deg))


class Drive(enum.Enum):
    PROXIMAL = "proximal"
    DISTAL = "distal"


_P, _D = Drive.PROXIMAL, Drive.DISTAL

# row order of the eight actuating modes
MODE_TABLE = {
    1: (_P, _P, _P),
    2: (_P, _P, _D),
    3: (_P, _D, _P),
    4: (_D, _P, _P),
    5: (_P, _D, _D),
    6: (_D, _D, _P),
    7: (_D, _P, _D),
    8: (_D, _D, _D),
}


@dataclass(frozen=True)
class ActuatingMode:
    number: int

    def __post_init__(self):
        if self.number not in MODE_TABLE:
            raise ValueError(f"actuating mode must be 1..8, got {self.number!r}")

    @property
    def leg_drive(self) -> Tuple[Drive, Drive, Drive]:
        return MODE_TABLE[self.number]

    @property
    def distal_mask(self) -> np.ndarray:
        return np.array([d is Drive.DISTAL for d in self.leg_drive])

    @classmethod
    def from_drives(cls, drives: Sequence[Drive]) -> "ActuatingMode":
        drives = tuple(Drive(d) for d in drives)
        for number, row in MODE_TABLE.items():
            if row == drives:
                return cls(number)
        raise ValueError(f"not a valid drive triple: {drives}")

    @classmethod
    def all(cls):
        return [cls(n) for n in range(1, 9)]

    def __str__(self):
        return str(self.number)


@dataclass(frozen=True)
class WorkingMode:
    elbow: Tuple[int, int, int] = (1, 1, 1)

    def __post_init__(self):
        elbow = tuple(int(s) for s in self.elbow)
        if len(elbow) != 3 or any(s not in (1, -1) for s in elbow):
            raise ValueError(f"working mode needs three signs in {{+1, -1}}, got {self.elbow!r}")
        object.__setattr__(self, "elbow", elbow)

    @classmethod
    def parse(cls, text: str) -> "WorkingMode":
        text = text.strip()
        if len(text) != 3 or any(ch not in "+-" for ch in text):
            raise ValueError(f"working mode must look like '+-+', got {text!r}")
        return cls(tuple(1 if ch == "+" else -1 for ch in text))

    def __str__(self):
        return "".join("+" if s > 0 else "-" for s in self.elbow)


@dataclass(frozen=True)
class JointState:
    alpha: np.ndarray
    delta: np.ndarray
    elbow_points: np.ndarray
    platform_points: np.ndarray
    serial_warning: Tuple[bool, bool, bool] = field(default=(False, False, False))


@dataclass(frozen=True)
class JacobianPair:
    direct_a: np.ndarray
    inverse_b: np.ndarray
    link_scale: float = 1.0  # l1 * l2, the magnitude of B_i at a right-angled elbow

    @property
    def b_matrix(self) -> np.ndarray:
        return np.diag(self.inverse_b)


def platform_points(geometry: MechanismGeometry, pose: Pose) -> np.ndarray:
    """Positions of C_1..C_3 in the base frame."""
    return pose.p + geometry.platform_offsets @ rotation(pose.phi).T


def leg_ik(anchor, target, l_prox: float, l_dist: float, elbow: int = 1, tol: float = 1e-9):
    """Place the elbow of a two-link leg.

    Returns ``(elbow_point, alpha, delta, singular)``. ``elbow=+1`` picks the
    intersection left of the ray anchor -> target. ``singular`` is set when the
    leg is fully stretched or folded (within ``tol`` relative to the reach);
    the solution is still returned in that case.
    """
    if l_prox <= 0 or l_dist <= 0:
        raise ValueError("link lengths must be positive")
    anchor = np.asarray(anchor, dtype=float)
    target = np.asarray(target, dtype=float)
    diff = target - anchor
    d = math.hypot(diff[0], diff[1])
    hi, lo = l_prox + l_dist, abs(l_prox - l_dist)
    scale = tol * hi
    if d > hi + scale or d < lo - scale or d <= REACH_TOL * hi:
        raise Unreachable()
    along = (d * d + l_prox * l_prox - l_dist * l_dist) / (2.0 * d)
    h2 = l_prox * l_prox - along * along
    h = math.sqrt(h2) if h2 > 0 else 0.0
    u = diff / d
    n = np.array([-u[1], u[0]])
    elbow_point = anchor + along * u + elbow * h * n
    singular = abs(d - hi) <= scale or abs(d - lo) <= scale
    first = elbow_point - anchor
    second = target - elbow_point
    alpha = math.atan2(first[1], first[0])
    delta = math.atan2(second[1], second[0])
    return elbow_point, alpha, delta, singular


def full_ik(geometry: MechanismGeometry, pose: Pose, working_mode: WorkingMode = WorkingMode()) -> JointState:
    cs = platform_points(geometry, pose)
    elbows, alphas, deltas, flags = [], [], [], []
    for i in range(3):
        try:
            b, a, d, s = leg_ik(
                geometry.base_anchors[i],
                cs[i],
                geometry.proximal_length,
                geometry.distal_length,
                working_mode.elbow[i],
            )
        except Unreachable:
            raise Unreachable(i) from None
        elbows.append(b)
        alphas.append(a)
        deltas.append(d)
        flags.append(s)
    return JointState(np.array(alphas), np.array(deltas), np.array(elbows), cs, tuple(flags))


def jacobian_pair(geometry: MechanismGeometry, state: JointState, pose: Pose, mode: ActuatingMode) -> JacobianPair:
    a = geometry.base_anchors
    b = state.elbow_points
    c = state.platform_points
    h = np.where(mode.distal_mask[:, None], a, b)
    ch = c - h
    moment = cross2(ch, pose.p - c)
    direct = np.column_stack([ch, moment])
    inverse = cross2(b - a, c - b)
    return JacobianPair(direct, inverse, geometry.proximal_length * geometry.distal_length)


def normalized_direct(pair: JacobianPair, char_length: float) -> np.ndarray:
    if char_length <= 0:
        raise ValueError("characteristic length must be positive")
    a = pair.direct_a.copy()
    a[:, 2] /= char_length
    return a


def _parallel_singular(a_norm: np.ndarray) -> bool:
    scale = np.linalg.norm(a_norm) ** 3
    return abs(np.linalg.det(a_norm)) < PARALLEL_TOL * scale


def _serial_singular(pair: JacobianPair):
    # |B_i| = l1 * l2 * |sin(delta - alpha)|
    return np.abs(pair.inverse_b) < SERIAL_TOL * pair.link_scale


def kinematic_jacobian(pair: JacobianPair, char_length: float = 3.0) -> np.ndarray:
    """J = A_n^-1 B, where A_n has its moment column divided by ``char_length``.

    J maps actuated rates to ``(xdot, ydot, char_length * phidot)``.
    """
    a_norm = normalized_direct(pair, char_length)
    if _parallel_singular(a_norm):
        raise ParallelSingular("direct Jacobian is singular")
    return np.linalg.solve(a_norm, pair.b_matrix)


def rate_inverse(pair: JacobianPair, char_length: float = 1.0) -> np.ndarray:
    """K = B^-1 A_n, so that ``qdot = K t`` (with the same twist scaling as J)."""
    b = pair.inverse_b
    bad = _serial_singular(pair)
    if bad.any():
        raise SerialSingular(f"inverse Jacobian singular on leg(s) {[i + 1 for i in np.flatnonzero(bad)]}")
    return normalized_direct(pair, char_length) / b[:, None]


def actuated_coordinates(state: JointState, mode: ActuatingMode) -> np.ndarray:
    """Values of the driven joint coordinates q_1..q_3."""
    return np.where(mode.distal_mask, state.alpha - state.delta, state.alpha)


def singularity_flags(
    geometry: MechanismGeometry,
    state: JointState,
    pose: Pose,
    mode: ActuatingMode,
    char_length: float = 3.0,
):
    pair = jacobian_pair(geometry, state, pose, mode)
    serial = _serial_singular(pair)
    parallel = _parallel_singular(normalized_direct(pair, char_length))
    return {"serial": tuple(bool(s) for s in serial), "parallel": bool(parallel)}


# ---------------------------------------------------------------------------
# batch versions


@dataclass
class LegSolution:
    """Leg IK solved for a flat array of N poses.

    ``a`` is (3, 2); ``b``, ``c`` are (N, 3, 2); ``p`` is (N, 2). ``reachable``
    is per pose (all three legs); ``sin_elbow`` is sin(delta - alpha) per leg.
    """

    p: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    reachable: np.ndarray
    sin_elbow: np.ndarray

    @property
    def serial(self) -> np.ndarray:
        return np.any(np.abs(self.sin_elbow) < SERIAL_TOL, axis=-1)


def solve_legs_batch(geometry: MechanismGeometry, x, y, phi, working_mode: WorkingMode = WorkingMode()) -> LegSolution:
    x, y, phi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, phi)))
    x, y, phi = x.ravel(), y.ravel(), phi.ravel()
    p = np.stack([x, y], axis=-1)
    cph, sph = np.cos(phi), np.sin(phi)
    off = geometry.platform_offsets
    cx = x[:, None] + cph[:, None] * off[:, 0] - sph[:, None] * off[:, 1]
    cy = y[:, None] + sph[:, None] * off[:, 0] + cph[:, None] * off[:, 1]
    c = np.stack([cx, cy], axis=-1)

    a = geometry.base_anchors
    l1, l2 = geometry.proximal_length, geometry.distal_length
    diff = c - a
    d = np.hypot(diff[..., 0], diff[..., 1])
    hi, lo = l1 + l2, abs(l1 - l2)
    tol = 1e-9 * hi
    ok = (d <= hi + tol) & (d >= lo - tol) & (d > REACH_TOL * hi)
    dsafe = np.where(ok, d, 1.0)
    along = (dsafe**2 + l1 * l1 - l2 * l2) / (2.0 * dsafe)
    h = np.sqrt(np.clip(l1 * l1 - along**2, 0.0, None))
    u = diff / dsafe[..., None]
    n = np.stack([-u[..., 1], u[..., 0]], axis=-1)
    sign = np.asarray(working_mode.elbow, dtype=float)[:, None]
    b = a + along[..., None] * u + (sign * h[..., None]) * n
    sin_elbow = cross2(b - a, c - b) / (l1 * l2)
    return LegSolution(p, a, b, c, ok.all(axis=-1), sin_elbow)


def jacobians_batch(legs: LegSolution, distal_mask, char_length: float = 3.0):
    """Normalized direct Jacobians (N, 3, 3) and diagonal of B (N, 3)."""
    distal_mask = np.asarray(distal_mask, dtype=bool)
    h = np.where(distal_mask[:, None], legs.a, legs.b)
    ch = legs.c - h
    moment = cross2(ch, legs.p[:, None, :] - legs.c) / char_length
    a_norm = np.concatenate([ch, moment[..., None]], axis=-1)
    b_diag = cross2(legs.b - legs.a, legs.c - legs.b)
    return a_norm, b_diag
