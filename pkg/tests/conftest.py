import math

import numpy as np
import pytest

from vamkin.mechanism import (
    ActuatingMode,
    Pose,
    WorkingMode,
    default_geometry,
    full_ik,
    jacobian_pair,
    normalized_direct,
)
from vamkin.exceptions import Unreachable


def random_regular_poses(n, seed=0, working_mode=WorkingMode(), margin=0.1, det_margin=1e-3):
    """Poses well away from both singularity kinds for all eight modes."""
    geometry = default_geometry()
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        r = 2.5 * math.sqrt(rng.uniform())
        t = rng.uniform(-math.pi, math.pi)
        pose = Pose(r * math.cos(t), r * math.sin(t), math.radians(rng.uniform(-20, 50)))
        try:
            state = full_ik(geometry, pose, working_mode)
        except Unreachable:
            continue
        if np.min(np.abs(np.sin(state.delta - state.alpha))) < margin:
            continue
        ok = True
        for mode in ActuatingMode.all():
            a = normalized_direct(jacobian_pair(geometry, state, pose, mode), 3.0)
            if abs(np.linalg.det(a)) < det_margin * np.linalg.norm(a) ** 3:
                ok = False
                break
        if ok:
            out.append(pose)
    return out


@pytest.fixture(scope="session")
def geometry():
    return default_geometry()


@pytest.fixture(scope="session")
def regular_poses():
    return random_regular_poses(100, seed=1)


def pytest_terminal_summary(terminalreporter):
    import report

    if report.LINES:
        terminalreporter.section("acceptance criteria")
        for line in report.LINES:
            terminalreporter.write_line(line)
