"""The 19-term cubic feature map shared by the polynomial model.

Term order is fixed and load-bearing (coefficients are reported against it):

    x1^3, x2^3, x3^3,
    x1^2*x2, x1^2*x3, x1*x2^2, x1*x3^2, x2^2*x3, x2*x3^2,
    x1^2, x2^2, x3^2,
    x1*x2*x3,
    x1*x2, x1*x3, x2*x3,
    x1, x2, x3
"""

from __future__ import annotations

import numpy as np

from ..data import ChannelVoltages

FEATURE_NAMES = (
    "x1^3", "x2^3", "x3^3",
    "x1^2*x2", "x1^2*x3", "x1*x2^2", "x1*x3^2", "x2^2*x3", "x2*x3^2",
    "x1^2", "x2^2", "x3^2",
    "x1*x2*x3",
    "x1*x2", "x1*x3", "x2*x3",
    "x1", "x2", "x3",
)

N_FEATURES = len(FEATURE_NAMES)


def monomials(x: np.ndarray) -> np.ndarray:
    """Evaluate the 19 monomials of a 3-vector, in the documented order."""
    x1, x2, x3 = float(x[0]), float(x[1]), float(x[2])
    return np.array([
        x1 * x1 * x1, x2 * x2 * x2, x3 * x3 * x3,
        x1 * x1 * x2, x1 * x1 * x3, x1 * x2 * x2, x1 * x3 * x3,
        x2 * x2 * x3, x2 * x3 * x3,
        x1 * x1, x2 * x2, x3 * x3,
        x1 * x2 * x3,
        x1 * x2, x1 * x3, x2 * x3,
        x1, x2, x3,
    ])


def build_features(v: ChannelVoltages) -> np.ndarray:
    """Feature vector of raw channel voltages (no standardization applied)."""
    return monomials(v.as_array())


def feature_matrix(X: np.ndarray) -> np.ndarray:
    """Row-wise monomials of an (n, 3) array -> (n, 19) design block."""
    X = np.asarray(X, dtype=float)
    x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
    cols = [
        x1 * x1 * x1, x2 * x2 * x2, x3 * x3 * x3,
        x1 * x1 * x2, x1 * x1 * x3, x1 * x2 * x2, x1 * x3 * x3,
        x2 * x2 * x3, x2 * x3 * x3,
        x1 * x1, x2 * x2, x3 * x3,
        x1 * x2 * x3,
        x1 * x2, x1 * x3, x2 * x3,
        x1, x2, x3,
    ]
    return np.stack(cols, axis=1)
