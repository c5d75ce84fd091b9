"""Cubic multivariate polynomial regression on the three channel voltages.

The model is linear in its 19 monomial features plus an intercept, so fitting
is plain least squares. Voltages are z-scored before the monomials are built
(raw mV cubed would span ~10 orders of magnitude and wreck conditioning);
the response stays in mg/dl.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..data import ChannelVoltages, Dataset
from ..errors import DataError, SolverError
from .base import Prediction, Standardizer, clamp_glucose, design_arrays, usable_samples
from .features import N_FEATURES, feature_matrix, monomials

CONDITION_LIMIT = 1e10


@dataclass(frozen=True)
class Mpr3Model:
    """Fitted cubic polynomial: 19 coefficients, intercept, input scaling."""

    coefficients: tuple[float, ...]
    intercept: float
    x_scaler: Standardizer
    glucose_kind: str

    def __post_init__(self):
        if len(self.coefficients) != N_FEATURES:
            raise DataError(f"expected {N_FEATURES} coefficients, got {len(self.coefficients)}")
        if not all(math.isfinite(c) for c in self.coefficients) or not math.isfinite(self.intercept):
            raise DataError("model coefficients must be finite")


def fit_mpr3(train: Dataset, kind: str, *, intercept: bool = True) -> Mpr3Model:
    """Least-squares fit of the 19-term cubic polynomial (+ optional intercept).

    Solved through an orthogonal decomposition (SVD-backed lstsq), never the
    normal equations. Needs at least 20 usable samples and a design matrix
    with condition number below 1e10.
    """
    rows = usable_samples(train, kind)
    n = len(rows)
    if n < N_FEATURES + 1:
        raise DataError(
            f"need at least {N_FEATURES + 1} samples with a {kind} reference "
            f"to fit 19 coefficients + intercept, got {n}"
        )
    X, y = design_arrays(rows, kind)
    scaler = Standardizer.fit(X)
    Phi = feature_matrix(scaler.transform(X))
    if intercept:
        design = np.hstack([Phi, np.ones((n, 1))])
    else:
        design = Phi
    cond = np.linalg.cond(design)
    if not math.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SolverError(
            f"design matrix condition number {cond:.3e} exceeds {CONDITION_LIMIT:.0e}; "
            "predictors are collinear or nearly so"
        )
    theta, *_ = np.linalg.lstsq(design, y, rcond=None)
    coeffs = theta[:N_FEATURES]
    eps = float(theta[N_FEATURES]) if intercept else 0.0
    return Mpr3Model(
        coefficients=tuple(float(c) for c in coeffs),
        intercept=eps,
        x_scaler=scaler,
        glucose_kind=kind,
    )


def predict_mpr3(m: Mpr3Model, v: ChannelVoltages) -> Prediction:
    """Evaluate the polynomial at one reading; output clamped to [10, 600]."""
    z = m.x_scaler.transform(v.as_array())
    raw = float(np.dot(monomials(z), np.asarray(m.coefficients))) + m.intercept
    value, clamped = clamp_glucose(raw)
    return Prediction(value, m.glucose_kind, clamped)
