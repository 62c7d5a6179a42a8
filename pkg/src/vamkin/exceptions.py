"""Error types raised by the kinematic and workspace routines."""


class VamkError(Exception):
    """Base class for every error raised by this package."""


class Unreachable(VamkError):
    def __init__(self, leg=None, message=None):
        self.leg = leg
        if message is None:
            message = "unreachable" if leg is None else f"unreachable: leg {leg + 1}"
        super().__init__(message)


class SerialSingular(VamkError):
    """Inverse Jacobian B is singular (some leg has A_i, B_i, C_i aligned)."""


class ParallelSingular(VamkError):
    """Direct Jacobian A is singular (the three force lines are concurrent)."""


class DegenerateDirection(VamkError):
    pass


class Indeterminate(VamkError):
    """Two force lines coincide, so the instantaneous centre is undefined."""


class EmptyWorkspace(VamkError):
    pass


class EmptyRegion(VamkError):
    pass
