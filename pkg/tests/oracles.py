"""Independent reference computations used by the tests.

None of these call the Jacobian, ICR or folding code under test; they work
from positions only (root finding, finite differences, plain algebra).
"""

import math

import numpy as np
from scipy import optimize

from vamkin.mechanism import Pose, actuated_coordinates, full_ik


def circle_intersections(anchor, target, l1, l2, samples=2000):
    """Elbow points found by root-finding the distance residual over the
    proximal angle; returns a list of points."""
    anchor = np.asarray(anchor, float)
    target = np.asarray(target, float)

    def resid(t):
        b = anchor + l1 * np.array([math.cos(t), math.sin(t)])
        return math.hypot(*(target - b)) - l2

    ts = np.linspace(-math.pi, math.pi, samples + 1)
    vals = [resid(t) for t in ts]
    roots = []
    for t0, t1, v0, v1 in zip(ts[:-1], ts[1:], vals[:-1], vals[1:]):
        if v0 == 0.0:
            roots.append(t0)
        elif v0 * v1 < 0:
            roots.append(optimize.brentq(resid, t0, t1, xtol=1e-15))
    return [anchor + l1 * np.array([math.cos(t), math.sin(t)]) for t in roots]


def wrap(a):
    return (np.asarray(a) + math.pi) % (2 * math.pi) - math.pi


def actuated(geometry, pose_vec, working_mode, mode):
    state = full_ik(geometry, Pose(*pose_vec), working_mode)
    return actuated_coordinates(state, mode)


def fd_joint_rates(geometry, pose, working_mode, mode, twist, h=1e-7):
    """Central-difference qdot along ``twist`` (x, y, phi rates)."""
    p0 = np.array([pose.x, pose.y, pose.phi])
    t = np.asarray(twist, float)
    qp = actuated(geometry, p0 + h * t, working_mode, mode)
    qm = actuated(geometry, p0 - h * t, working_mode, mode)
    return wrap(qp - qm) / (2 * h)


def fd_gradient(geometry, pose, working_mode, mode, h=1e-6):
    """dq/dpose as a 3x3 matrix (rows: legs, columns: x, y, phi)."""
    cols = [fd_joint_rates(geometry, pose, working_mode, mode, e, h) for e in np.eye(3)]
    return np.column_stack(cols)


def locked_leg_velocity(geometry, pose, working_mode, mode, leg):
    """Velocity direction of C_leg when the other two actuators are locked.

    The admissible twist spans the null space of the two locked legs'
    finite-difference gradient rows.
    """
    g = fd_gradient(geometry, pose, working_mode, mode)
    j, k = [i for i in range(3) if i != leg]
    t = np.cross(g[j], g[k])
    state = full_ik(geometry, pose, working_mode)
    c = state.platform_points[leg]
    rel = c - np.array([pose.x, pose.y])
    return t[:2] + t[2] * np.array([-rel[1], rel[0]])


def line_intersection(p1, d1, p2, d2):
    """Solve p1 + s d1 = p2 + u d2 with Cramer's rule."""
    det = d1[0] * (-d2[1]) - d1[1] * (-d2[0])
    rx, ry = p2[0] - p1[0], p2[1] - p1[1]
    s = (rx * (-d2[1]) - ry * (-d2[0])) / det
    return np.array([p1[0] + s * d1[0], p1[1] + s * d1[1]])


def brute_fold(angle, kmax=6):
    """min over k of |angle + k pi|, reflected onto [0, pi/2]."""
    best = min(abs(angle + k * math.pi) for k in range(-kmax, kmax + 1))
    return min(best, math.pi - best)


def point_line_distance(q, p, d):
    d = np.asarray(d, float) / np.linalg.norm(d)
    r = np.asarray(q, float) - np.asarray(p, float)
    return abs(r[0] * d[1] - r[1] * d[0])
