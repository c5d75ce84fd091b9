"""Shared regression plumbing: standardization, output clamping, sample prep."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from ..data import Dataset, Sample, GLUCOSE_KINDS
from ..errors import DataError

CLAMP_LO_MGDL = 10.0
CLAMP_HI_MGDL = 600.0


@dataclass(frozen=True)
class Prediction:
    """A model output in mg/dl; clamped marks values pulled back into range."""

    value_mgdl: float
    kind: str
    clamped: bool = False


def clamp_glucose(value: float) -> tuple[float, bool]:
    """Pull a raw model output into [10, 600] mg/dl; flags when clamping fired."""
    if not math.isfinite(value):
        raise DataError(f"model produced non-finite glucose {value!r}")
    if value < CLAMP_LO_MGDL:
        return CLAMP_LO_MGDL, True
    if value > CLAMP_HI_MGDL:
        return CLAMP_HI_MGDL, True
    return value, False


@dataclass(frozen=True)
class Standardizer:
    """Per-column z-score parameters, stored so models travel with their scaling."""

    means: tuple[float, ...]
    stds: tuple[float, ...]

    def __post_init__(self):
        for s in self.stds:
            if not (math.isfinite(s) and s > 0):
                raise DataError(f"standardizer std must be > 0, got {s!r}")
        for m in self.means:
            if not math.isfinite(m):
                raise DataError(f"standardizer mean must be finite, got {m!r}")

    @classmethod
    def fit(cls, columns: np.ndarray) -> "Standardizer":
        """Compute per-column mean/std (population) of a 2-D array."""
        arr = np.asarray(columns, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        means = arr.mean(axis=0)
        stds = arr.std(axis=0)
        if (stds == 0).any():
            j = int(np.argmin(stds))
            raise DataError(f"column {j} has zero variance; cannot standardize")
        return cls(tuple(float(m) for m in means), tuple(float(s) for s in stds))

    def transform(self, arr: np.ndarray) -> np.ndarray:
        a = np.asarray(arr, dtype=float)
        return (a - np.asarray(self.means)) / np.asarray(self.stds)

    def inverse(self, arr: np.ndarray) -> np.ndarray:
        a = np.asarray(arr, dtype=float)
        return a * np.asarray(self.stds) + np.asarray(self.means)


def usable_samples(train: Dataset, kind: str) -> list[Sample]:
    """Training rows carrying a reference of the requested kind, sorted by id.

    The id sort fixes a canonical order so fitted coefficients do not depend
    on how the caller happened to arrange the Dataset.
    """
    if kind not in GLUCOSE_KINDS:
        raise DataError(f"glucose kind must be one of {GLUCOSE_KINDS}, got {kind!r}")
    rows = [s for s in train.samples if s.reference(kind) is not None]
    rows.sort(key=lambda s: s.id)
    return rows


def design_arrays(rows: list[Sample], kind: str) -> tuple[np.ndarray, np.ndarray]:
    """Stack voltages into X (n, 3) and references into y (n,)."""
    X = np.array([s.voltages.as_array() for s in rows], dtype=float)
    y = np.array([s.reference(kind).value_mgdl for s in rows], dtype=float)
    return X, y


def split_hash(rows: list[Sample]) -> str:
    """Stable fingerprint of the training membership (ids only, order-free)."""
    joined = "\n".join(sorted(s.id for s in rows))
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()[:16]
