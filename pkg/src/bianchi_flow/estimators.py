"""scikit-learn style wrappers around the integrate/analyze pipeline.

Rows of ``X`` are initial triples ``(A0, B0, C0)``. Nothing is learned from
data: ``fit`` only validates inputs, so these estimators exist to slot the
flow into pipelines, grid utilities and cross-validation tooling.
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .analyze import analyze_trajectory, classify_initial
from .exceptions import InvalidInput
from .flow import Direction, FlowSpec
from .geometry import BianchiClass
from .integrate import Controls, canonicalize, integrate

__all__ = ["SL2RClassifier", "FlowTransformer"]

SL2R_LABELS = np.array(["Q1", "Q2", "Undetermined"])


def _validate_triples(X) -> np.ndarray:
    X = check_array(X, dtype=np.float64)
    if X.shape[1] != 3:
        raise InvalidInput(f"expected 3 columns (A0, B0, C0), got {X.shape[1]}")
    if np.any(X <= 0):
        raise InvalidInput("initial coefficients must be positive")
    return X


class SL2RClassifier(ClassifierMixin, BaseEstimator):
    """Predict the Q1/Q2 label of SL(2,R) initial data by integrating the positive flow.

    Args:
        rel_tol: Integrator relative tolerance.
        abs_tol: Integrator absolute tolerance.
        max_coeff: Blow-up ceiling; larger values shrink the Undetermined band.
        allow_swap: Relabel ``B0 < C0`` data instead of rejecting it.
    """

    def __init__(self, rel_tol: float = 1e-11, abs_tol: float = 1e-13,
                 max_coeff: float = 1e8, allow_swap: bool = True):
        self.rel_tol = rel_tol
        self.abs_tol = abs_tol
        self.max_coeff = max_coeff
        self.allow_swap = allow_swap

    def _controls(self) -> Controls:
        return Controls(rel_tol=self.rel_tol, abs_tol=self.abs_tol, max_coeff=self.max_coeff)

    def fit(self, X, y=None):
        X = _validate_triples(X)
        if y is not None and len(y) != X.shape[0]:
            raise InvalidInput("X and y have different lengths")
        self._controls()
        self.classes_ = SL2R_LABELS.copy()
        self.n_features_in_ = 3
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "classes_")
        X = _validate_triples(X)
        controls = self._controls()
        labels = [classify_initial(*row, controls=controls, allow_swap=self.allow_swap)[0].label
                  for row in X]
        return np.array(labels, dtype=object)

    def margins(self, X) -> np.ndarray:
        """Signed distance to the triggering inequality at each run's final sample."""
        check_is_fitted(self, "classes_")
        X = _validate_triples(X)
        controls = self._controls()
        return np.array([classify_initial(*row, controls=controls, allow_swap=self.allow_swap)[0].margin
                         for row in X])


FEATURES = ("t_plus", "exp_A", "exp_B", "exp_C", "eta1", "eta2")


class FlowTransformer(TransformerMixin, BaseEstimator):
    """Map initial data to blow-up features ``(T+, exponents, eta1, eta2)``.

    Features that do not apply to a row (no blow-up, no 1/4 pair) are NaN.
    Data are canonicalized to ``A0*B0*C0 = 4`` first, so features describe
    the canonical-gauge flow.
    """

    def __init__(self, geometry: str = "su2", direction: str = "positive",
                 horizon: Optional[float] = None, rel_tol: float = 1e-11,
                 abs_tol: float = 1e-13, max_coeff: float = 1e8, allow_swap: bool = True):
        self.geometry = geometry
        self.direction = direction
        self.horizon = horizon
        self.rel_tol = rel_tol
        self.abs_tol = abs_tol
        self.max_coeff = max_coeff
        self.allow_swap = allow_swap

    def fit(self, X, y=None):
        _validate_triples(X)
        self.geometry_ = BianchiClass.parse(self.geometry)
        self.direction_ = Direction.parse(self.direction)
        self.controls_ = Controls(rel_tol=self.rel_tol, abs_tol=self.abs_tol, max_coeff=self.max_coeff)
        self.n_features_in_ = 3
        return self

    def _row(self, row) -> list[float]:
        canon = canonicalize(self.geometry_, *row, allow_swap=self.allow_swap)
        horizon = self.horizon
        if horizon is None:
            horizon = 1000.0 if self.direction_ is Direction.POSITIVE else 10.0
        traj = integrate(FlowSpec(self.geometry_, self.direction_), canon.canonical_initial,
                         self.controls_, horizon=horizon)
        rep = analyze_trajectory(traj)
        out = [math.nan] * len(FEATURES)
        if rep.t_plus is not None:
            out[0] = rep.t_plus
        if rep.fit is not None:
            out[1:4] = rep.fit.exponents
        if rep.eta is not None:
            out[4:6] = rep.eta.eta1, rep.eta.eta2
        return out

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "controls_")
        X = _validate_triples(X)
        return np.array([self._row(r) for r in X], dtype=float).reshape(-1, len(FEATURES))

    def get_feature_names_out(self, input_features=None) -> np.ndarray:
        return np.array(FEATURES, dtype=object)
