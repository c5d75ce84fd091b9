"""Epsilon-insensitive support vector regression, solved in the dual.

The dual maximizes -1/2 b'Kb + b'y - eps*||b||_1 subject to sum(b) = 0 and
|b_i| <= C, where b_i = alpha_i - alpha_i*. The solver is sequential minimal
optimization on the stacked 2n-variable form: pick the maximal violating pair,
take the exact two-variable step, repeat until the KKT gap m - M drops under
tolerance. Inputs and response are z-scored before solving; the Gaussian scale
conventions (sqrt(P), sqrt(P)/4, 4*sqrt(P) for P = 3 predictors) presume that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..data import ChannelVoltages, Dataset
from ..errors import DataError, SolverError
from .base import Prediction, Standardizer, clamp_glucose, design_arrays, usable_samples

KERNEL_KINDS = ("linear", "quadratic", "cubic", "gaussian")
N_PREDICTORS = 3
KKT_TOL = 1e-6
MAX_SMO_ITERS = 100_000


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus, for the Gaussian, its length scale."""

    kind: str
    scale: float | None = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise DataError(f"kernel kind must be one of {KERNEL_KINDS}, got {self.kind!r}")
        if self.kind == "gaussian":
            if self.scale is None or not (math.isfinite(self.scale) and self.scale > 0):
                raise DataError(f"gaussian kernel needs scale > 0, got {self.scale!r}")
        elif self.scale is not None:
            raise DataError(f"{self.kind} kernel takes no scale parameter")

    @classmethod
    def gaussian(cls, flavor: str, n_predictors: int = N_PREDICTORS) -> "KernelSpec":
        """Named Gaussian scales: medium sqrt(P), fine sqrt(P)/4, coarse 4*sqrt(P)."""
        root = math.sqrt(n_predictors)
        scales = {"medium": root, "fine": root / 4.0, "coarse": 4.0 * root}
        if flavor not in scales:
            raise DataError(f"gaussian flavor must be one of {sorted(scales)}, got {flavor!r}")
        return cls("gaussian", scales[flavor])

    @property
    def degree(self) -> int | None:
        return {"linear": 1, "quadratic": 2, "cubic": 3}.get(self.kind)


def kernel_eval(k: KernelSpec, u, v) -> float:
    """Scalar kernel value between two equal-length vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise DataError(f"kernel arguments must be equal-length vectors, got {u.shape} and {v.shape}")
    if k.kind == "linear":
        return float(u @ v)
    if k.kind == "quadratic":
        return float((1.0 + u @ v) ** 2)
    if k.kind == "cubic":
        return float((1.0 + u @ v) ** 3)
    d2 = float(((u - v) ** 2).sum())
    return math.exp(-d2 / (2.0 * k.scale ** 2))


def kernel_matrix(k: KernelSpec, A: np.ndarray, B: np.ndarray | None = None) -> np.ndarray:
    """Gram block K[i, j] = k(A_i, B_j); B defaults to A."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = A if B is None else np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise DataError(f"kernel arguments must share width, got {A.shape} and {B.shape}")
    inner = A @ B.T
    if k.kind == "linear":
        return inner
    if k.kind == "quadratic":
        return (1.0 + inner) ** 2
    if k.kind == "cubic":
        return (1.0 + inner) ** 3
    d2 = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * inner
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-d2 / (2.0 * k.scale ** 2))


@dataclass(frozen=True)
class SvrModel:
    """Converged dual solution plus everything needed to predict."""

    kernel: KernelSpec
    beta: tuple[float, ...]
    bias: float
    eps: float
    c: float
    train_inputs: tuple[tuple[float, float, float], ...]  # standardized
    x_scaler: Standardizer
    y_scaler: Standardizer
    glucose_kind: str

    def __post_init__(self):
        if len(self.beta) != len(self.train_inputs):
            raise DataError("beta and retained inputs must have equal length")
        if any(abs(b) > self.c * (1 + 1e-9) for b in self.beta):
            raise DataError("dual coefficient exceeds box constraint C")

    def support_count(self, tol: float = 1e-9) -> int:
        return sum(1 for b in self.beta if abs(b) > tol)


def default_hyperparams(y_std: np.ndarray) -> tuple[float, float]:
    """(eps, C) from the standardized response: iqr/13.49 and iqr/1.349.

    iqr/1.349 is the robust sigma estimate; eps is a tenth of it. A zero iqr
    (heavily repeated response values) falls back to the normal-reference
    values eps = 0.1, C = 1.0.
    """
    q75, q25 = np.percentile(y_std, [75.0, 25.0])
    iqr = float(q75 - q25)
    if iqr <= 0:
        return 0.1, 1.0
    return iqr / 13.49, iqr / 1.349


def _solve_smo(K: np.ndarray, y: np.ndarray, eps: float, c: float,
               tol: float, max_iters: int) -> tuple[np.ndarray, float, int]:
    """SMO on the stacked dual; returns (beta, bias, iterations).

    State: u = (alpha; alpha*) in [0, C]^2n and h = K @ beta. The gradient of
    the stacked objective is (h + eps - y; -h + eps + y); the maximal violating
    pair is chosen on -z*grad with z = (+1...; -1...).
    """
    n = len(y)
    u = np.zeros(2 * n)
    h = np.zeros(n)
    diag = np.diag(K).copy()
    for it in range(max_iters):
        g1 = h + eps - y
        g2 = -h + eps + y
        vals = np.concatenate([-g1, g2])
        up_mask = np.concatenate([u[:n] < c, u[n:] > 0.0])
        low_mask = np.concatenate([u[:n] > 0.0, u[n:] < c])
        if not up_mask.any() or not low_mask.any():
            break
        up_idx = np.flatnonzero(up_mask)
        low_idx = np.flatnonzero(low_mask)
        i = int(up_idx[np.argmax(vals[up_idx])])
        j = int(low_idx[np.argmin(vals[low_idx])])
        m_val = float(vals[i])
        big_m_val = float(vals[j])
        if m_val - big_m_val <= tol:
            bias = _bias_from_state(u, vals, m_val, big_m_val, n, c)
            return u[:n] - u[n:], bias, it
        ic, jc = i % n, j % n
        a = diag[ic] + diag[jc] - 2.0 * K[ic, jc]
        if a <= 1e-12:
            a = 1e-12
        t = (m_val - big_m_val) / a
        t = min(t, c - u[i] if i < n else u[i])
        t = min(t, u[j] if j < n else c - u[j])
        if t <= 0:
            break
        u[i] += t if i < n else -t
        u[j] += -t if j < n else t
        u[i] = min(max(u[i], 0.0), c)
        u[j] = min(max(u[j], 0.0), c)
        if ic != jc:
            h += t * (K[:, ic] - K[:, jc])
    g1 = h + eps - y
    g2 = -h + eps + y
    vals = np.concatenate([-g1, g2])
    up_idx = np.flatnonzero(np.concatenate([u[:n] < c, u[n:] > 0.0]))
    low_idx = np.flatnonzero(np.concatenate([u[:n] > 0.0, u[n:] < c]))
    gap = float(vals[up_idx].max() - vals[low_idx].min()) if len(up_idx) and len(low_idx) else 0.0
    if gap <= tol:
        m_val = float(vals[up_idx].max()) if len(up_idx) else 0.0
        big_m_val = float(vals[low_idx].min()) if len(low_idx) else 0.0
        return u[:n] - u[n:], _bias_from_state(u, vals, m_val, big_m_val, n, c), max_iters
    raise SolverError(
        f"SVR dual failed to converge in {max_iters} iterations; "
        f"worst KKT violation {gap:.3e} (tol {tol:.0e})"
    )


def _bias_from_state(u: np.ndarray, vals: np.ndarray, m_val: float,
                     big_m_val: float, n: int, c: float) -> float:
    free = (u > 0.0) & (u < c)
    if free.any():
        return float(vals[free].mean())
    return 0.5 * (m_val + big_m_val)


def _check_kkt(beta: np.ndarray, h: np.ndarray, bias: float, y: np.ndarray,
               eps: float, c: float, tol: float) -> None:
    n = len(y)
    if np.any(np.abs(beta) > c * (1 + 1e-9)):
        raise SolverError("KKT violation: |beta| exceeds C")
    if abs(float(beta.sum())) > 1e-8 * c * n:
        raise SolverError(f"KKT violation: sum(beta) = {beta.sum():.3e} not ~0")
    resid = np.abs(h + bias - y)
    inside = resid < eps - tol
    if np.any(inside & (np.abs(beta) > tol)):
        raise SolverError("KKT violation: point strictly inside the tube has nonzero beta")


def fit_svr(train: Dataset, kind: str, kernel: KernelSpec,
            eps: float | None = None, c: float | None = None, *,
            tol: float = KKT_TOL, max_iters: int = MAX_SMO_ITERS) -> SvrModel:
    """Fit an SVR model; eps/C default to iqr-derived values when omitted."""
    rows = usable_samples(train, kind)
    n = len(rows)
    if n < 2:
        raise DataError(f"need at least 2 samples with a {kind} reference, got {n}")
    X, y_raw = design_arrays(rows, kind)
    x_scaler = Standardizer.fit(X)
    y_scaler = Standardizer.fit(y_raw)
    Xs = x_scaler.transform(X)
    ys = y_scaler.transform(y_raw)
    eps_def, c_def = default_hyperparams(ys)
    eps = eps_def if eps is None else float(eps)
    c = c_def if c is None else float(c)
    if eps < 0:
        raise DataError(f"eps must be >= 0, got {eps}")
    if c <= 0:
        raise DataError(f"C must be > 0, got {c}")
    K = kernel_matrix(kernel, Xs)
    evals = np.linalg.eigvalsh(K)
    if evals[0] < -1e-8 * max(1.0, float(evals[-1])):
        raise SolverError(
            f"Gram matrix not PSD: min eigenvalue {evals[0]:.3e} (kernel bug?)"
        )
    beta, bias, _ = _solve_smo(K, ys, eps, c, tol, max_iters)
    _check_kkt(beta, K @ beta, bias, ys, eps, c, tol)
    return SvrModel(
        kernel=kernel,
        beta=tuple(float(b) for b in beta),
        bias=float(bias),
        eps=eps,
        c=c,
        train_inputs=tuple(tuple(float(v) for v in row) for row in Xs),
        x_scaler=x_scaler,
        y_scaler=y_scaler,
        glucose_kind=kind,
    )


def svr_decision(m: SvrModel, z: np.ndarray) -> float:
    """Standardized-space decision value f(z) = sum b_i k(x_i, z) + bias."""
    Xs = np.asarray(m.train_inputs, dtype=float)
    kvec = kernel_matrix(m.kernel, Xs, z[None, :])[:, 0]
    return float(np.asarray(m.beta) @ kvec) + m.bias


def predict_svr(m: SvrModel, v: ChannelVoltages) -> Prediction:
    """De-standardized prediction at one reading, clamped to [10, 600] mg/dl."""
    z = m.x_scaler.transform(v.as_array())
    f = svr_decision(m, z)
    raw = float(m.y_scaler.inverse(np.array([f]))[0])
    value, clamped = clamp_glucose(raw)
    return Prediction(value, m.glucose_kind, clamped)
