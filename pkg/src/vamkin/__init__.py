"""Kinetostatic analysis of a 3-RRR planar parallel mechanism with variable actuation."""

from .exceptions import (
    DegenerateDirection,
    EmptyRegion,
    EmptyWorkspace,
    Indeterminate,
    ParallelSingular,
    SerialSingular,
    Unreachable,
    VamkError,
)
from .estimator import PoseEvaluator
from .indices import (
    AtInfinity,
    ForceLine,
    PerformanceSample,
    evaluate_batch,
    evaluate_pose,
    force_line,
    frobenius_condition,
    instantaneous_center,
    transmission_angles,
)
from .mechanism import (
    ActuatingMode,
    Drive,
    JacobianPair,
    JointState,
    MechanismGeometry,
    Pose,
    WorkingMode,
    default_geometry,
    full_ik,
    jacobian_pair,
    kinematic_jacobian,
    leg_ik,
    platform_points,
    rate_inverse,
    singularity_flags,
)
from .workspace import (
    VAM,
    CellClass,
    GridSpec,
    RdwResult,
    ScanResult,
    calibrate_char_length,
    classify_cell,
    classify_grid,
    compare_modes,
    rdw_search,
    scan_constant_phi,
    vam_classify_cell,
)

__version__ = "0.1.0"
