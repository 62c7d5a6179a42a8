"""scikit-learn compatible wrapper: poses in, performance columns out."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .indices import evaluate_batch
from .mechanism import ActuatingMode, MechanismGeometry, WorkingMode

FEATURES = ("reachable", "serial_singular", "parallel_singular", "inv_condition", "transmission_angle")


class PoseEvaluator(TransformerMixin, BaseEstimator):
    """Map an ``(n, 3)`` array of poses ``(x, y, phi)`` to kinetostatic indices.

    Output columns are ``FEATURES``; the transmission angle is in the same
    angular unit as the input (``degrees=True`` for degrees). Unreachable
    poses get NaN indices. ``fit`` only validates parameters.
    """

    def __init__(
        self,
        mode=1,
        working_mode="+++",
        char_length=3.0,
        jacobian="kinematic",
        base_side=10.0,
        platform_side=5.0,
        proximal_length=3.0,
        distal_length=3.0,
        degrees=False,
    ):
        self.mode = mode
        self.working_mode = working_mode
        self.char_length = char_length
        self.jacobian = jacobian
        self.base_side = base_side
        self.platform_side = platform_side
        self.proximal_length = proximal_length
        self.distal_length = distal_length
        self.degrees = degrees

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_min_features=3)
        if X.shape[1] != 3:
            raise ValueError(f"expected 3 columns (x, y, phi), got {X.shape[1]}")
        if not self.char_length > 0:
            raise ValueError("char_length must be positive")
        if self.jacobian not in ("kinematic", "direct"):
            raise ValueError(f"unknown jacobian {self.jacobian!r}")
        self.mode_ = ActuatingMode(int(self.mode))
        wm = self.working_mode
        self.working_mode_ = WorkingMode.parse(wm) if isinstance(wm, str) else WorkingMode(tuple(wm))
        self.geometry_ = MechanismGeometry.from_sides(
            self.base_side, self.platform_side, self.proximal_length, self.distal_length
        )
        self.n_features_in_ = 3
        return self

    def transform(self, X):
        check_is_fitted(self, "geometry_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        phi = np.radians(X[:, 2]) if self.degrees else X[:, 2]
        bp = evaluate_batch(
            self.geometry_, X[:, 0], X[:, 1], phi, self.working_mode_, [self.mode_.number],
            self.char_length, jacobian=self.jacobian,
        )
        psi = bp.transmission[:, 0]
        if self.degrees:
            psi = np.degrees(psi)
        return np.column_stack(
            [bp.reachable, bp.serial, bp.parallel[:, 0], bp.inv_condition[:, 0], psi]
        ).astype(float)

    def get_feature_names_out(self, input_features=None):
        return np.array(FEATURES, dtype=object)
