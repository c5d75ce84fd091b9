"""Feedforward sigmoid network trained by Levenberg-Marquardt.

Depth is the headline knob (10 hidden layers by default, width 10); the output
neuron is linear. LM iterates theta <- theta - (J'J + lambda*I)^-1 J'r with a
strict-decrease acceptance rule: rejected steps raise lambda by 10x and retry,
accepted steps lower it by 10x. All parameters live in one flat vector; the
Jacobian comes from reverse-mode accumulation, one residual row per sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..data import ChannelVoltages, Dataset
from ..errors import DataError, SolverError
from .base import Prediction, Standardizer, clamp_glucose, design_arrays, usable_samples

LAMBDA_LIMIT = 1e10


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically safe logistic; exact 1/(1+exp(-x)) in both tails."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass(frozen=True)
class DnnTrainConfig:
    hidden_layers: int = 10
    width: int = 10
    seed: int = 0
    lambda0: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 10.0
    max_iters: int = 1000
    sse_tol: float = 1e-10

    def __post_init__(self):
        if self.hidden_layers < 1 or self.width < 1:
            raise DataError("hidden_layers and width must be >= 1")
        for name in ("lambda0", "lambda_up", "lambda_down", "sse_tol"):
            if getattr(self, name) <= 0:
                raise DataError(f"{name} must be > 0")
        if self.max_iters < 1:
            raise DataError("max_iters must be >= 1")

    def widths(self, n_inputs: int = 3) -> tuple[int, ...]:
        return (n_inputs, *([self.width] * self.hidden_layers), 1)


@dataclass(frozen=True)
class DnnModel:
    """Weights per layer (row-major (out, in)), biases, and scalers."""

    widths: tuple[int, ...]
    weights: tuple[tuple[tuple[float, ...], ...], ...]
    biases: tuple[tuple[float, ...], ...]
    x_scaler: Standardizer
    y_scaler: Standardizer
    glucose_kind: str

    def __post_init__(self):
        if len(self.widths) < 3 or self.widths[-1] != 1:
            raise DataError("network needs >= 1 hidden layer and a single output")
        if len(self.weights) != len(self.widths) - 1 or len(self.biases) != len(self.widths) - 1:
            raise DataError("one weight matrix and bias vector per layer required")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if len(w) != self.widths[l + 1] or any(len(row) != self.widths[l] for row in w):
                raise DataError(f"layer {l} weight shape does not chain {self.widths}")
            if len(b) != self.widths[l + 1]:
                raise DataError(f"layer {l} bias length does not chain {self.widths}")
            flat = [x for row in w for x in row] + list(b)
            if not all(math.isfinite(x) for x in flat):
                raise DataError(f"layer {l} has non-finite parameters")

    def theta(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(np.asarray(w, dtype=float).ravel())
            parts.append(np.asarray(b, dtype=float))
        return np.concatenate(parts)


def n_params(widths: tuple[int, ...]) -> int:
    return sum(widths[l + 1] * widths[l] + widths[l + 1] for l in range(len(widths) - 1))


def layers_from_theta(widths: tuple[int, ...], theta: np.ndarray):
    """Split a flat parameter vector into (weights, biases) per layer."""
    ws, bs, pos = [], [], 0
    for l in range(len(widths) - 1):
        n_out, n_in = widths[l + 1], widths[l]
        ws.append(theta[pos:pos + n_out * n_in].reshape(n_out, n_in))
        pos += n_out * n_in
        bs.append(theta[pos:pos + n_out])
        pos += n_out
    if pos != len(theta):
        raise DataError(f"theta length {len(theta)} does not match widths {widths}")
    return ws, bs


def init_theta(widths: tuple[int, ...], seed: int) -> np.ndarray:
    """Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer, weights and biases."""
    rng = np.random.default_rng(seed)
    parts = []
    for l in range(len(widths) - 1):
        n_out, n_in = widths[l + 1], widths[l]
        bound = 1.0 / math.sqrt(n_in)
        parts.append(rng.uniform(-bound, bound, size=n_out * n_in))
        parts.append(rng.uniform(-bound, bound, size=n_out))
    return np.concatenate(parts)


def forward_batch(widths: tuple[int, ...], theta: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Network outputs (standardized space) for rows of X; shape (n,)."""
    ws, bs = layers_from_theta(widths, theta)
    a = np.asarray(X, dtype=float)
    for w, b in zip(ws[:-1], bs[:-1]):
        a = sigmoid(a @ w.T + b)
    return (a @ ws[-1].T + bs[-1])[:, 0]


def batch_residuals(widths, theta, X, y) -> np.ndarray:
    return forward_batch(widths, theta, X) - np.asarray(y, dtype=float)


def batch_jacobian(widths: tuple[int, ...], theta: np.ndarray, X: np.ndarray) -> np.ndarray:
    """J[i, p] = d out_i / d theta_p, reverse-mode, one row per sample."""
    ws, bs = layers_from_theta(widths, theta)
    n = X.shape[0]
    acts = [np.asarray(X, dtype=float)]
    for w, b in zip(ws[:-1], bs[:-1]):
        acts.append(sigmoid(acts[-1] @ w.T + b))
    n_layers = len(ws)
    delta = np.ones((n, 1))
    blocks: list[np.ndarray | None] = [None] * n_layers
    for l in range(n_layers - 1, -1, -1):
        w_block = np.einsum("io,ip->iop", delta, acts[l]).reshape(n, -1)
        blocks[l] = np.hstack([w_block, delta])
        if l > 0:
            a = acts[l]
            delta = (delta @ ws[l]) * (a * (1.0 - a))
    return np.hstack(blocks)


@dataclass(frozen=True)
class LmResult:
    theta: np.ndarray
    sse_path: tuple[float, ...]  # initial SSE then every accepted step's SSE
    iterations: int
    stop_reason: str


def levenberg_marquardt(residual_fn, jacobian_fn, theta0: np.ndarray,
                        cfg: DnnTrainConfig) -> LmResult:
    """Damped Gauss-Newton with strict-decrease acceptance.

    Stops on max_iters, on relative SSE improvement below sse_tol, or when
    lambda climbs past 1e10 without finding a descent step.
    """
    theta = np.asarray(theta0, dtype=float).copy()
    r = residual_fn(theta)
    sse = float(r @ r)
    if not math.isfinite(sse):
        raise SolverError(f"initial loss is not finite ({sse})")
    path = [sse]
    lam = cfg.lambda0
    stop = "max_iters"
    iters = 0
    for it in range(cfg.max_iters):
        iters = it + 1
        J = jacobian_fn(theta)
        n_res, n_par = J.shape
        # Overparameterized nets: (J'J + lam*I)^-1 J'r == J'(JJ' + lam*I)^-1 r,
        # so the solve can run in residual space (n^3 instead of p^3).
        dual = n_par > n_res
        H = J @ J.T if dual else J.T @ J
        g = None if dual else J.T @ r
        eye = np.eye(H.shape[0])
        accepted = False
        solve_failed = True
        while lam <= LAMBDA_LIMIT:
            try:
                if dual:
                    delta = J.T @ np.linalg.solve(H + lam * eye, r)
                else:
                    delta = np.linalg.solve(H + lam * eye, g)
            except np.linalg.LinAlgError:
                lam *= cfg.lambda_up
                continue
            solve_failed = False
            theta_new = theta - delta
            r_new = residual_fn(theta_new)
            sse_new = float(r_new @ r_new)
            if math.isnan(sse_new):
                raise SolverError("loss became NaN during a trial step")
            if sse_new < sse:
                improvement = sse - sse_new
                theta, r, sse = theta_new, r_new, sse_new
                path.append(sse)
                lam = max(lam / cfg.lambda_down, 1e-300)  # keep lam > 0 for the dual solve
                accepted = True
                break
            lam *= cfg.lambda_up
        if not accepted:
            if solve_failed:
                raise SolverError(
                    f"(J'J + lambda*I) stayed singular up to lambda = {LAMBDA_LIMIT:.0e}"
                )
            stop = "lambda_limit"
            break
        if sse == 0.0 or improvement <= cfg.sse_tol * max(path[-2], 1e-300):
            stop = "sse_tol"
            break
    return LmResult(theta=theta, sse_path=tuple(path), iterations=iters, stop_reason=stop)


def train_dnn_lm(train: Dataset, kind: str, cfg: DnnTrainConfig | None = None) -> DnnModel:
    """Fit the network on standardized voltages/response; deterministic per seed."""
    cfg = cfg or DnnTrainConfig()
    rows = usable_samples(train, kind)
    if len(rows) < 2:
        raise DataError(f"need at least 2 samples with a {kind} reference, got {len(rows)}")
    X, y_raw = design_arrays(rows, kind)
    x_scaler = Standardizer.fit(X)
    y_scaler = Standardizer.fit(y_raw)
    Xs = x_scaler.transform(X)
    ys = y_scaler.transform(y_raw)
    widths = cfg.widths(n_inputs=3)
    theta0 = init_theta(widths, cfg.seed)
    result = levenberg_marquardt(
        lambda th: batch_residuals(widths, th, Xs, ys),
        lambda th: batch_jacobian(widths, th, Xs),
        theta0, cfg,
    )
    ws, bs = layers_from_theta(widths, result.theta)
    return DnnModel(
        widths=widths,
        weights=tuple(tuple(tuple(float(x) for x in row) for row in w) for w in ws),
        biases=tuple(tuple(float(x) for x in b) for b in bs),
        x_scaler=x_scaler,
        y_scaler=y_scaler,
        glucose_kind=kind,
    )


def dnn_forward(m: DnnModel, v: ChannelVoltages) -> Prediction:
    """One reading through the network; output de-standardized and clamped."""
    z = m.x_scaler.transform(v.as_array())
    out = forward_batch(m.widths, m.theta(), z[None, :])[0]
    raw = float(m.y_scaler.inverse(np.array([out]))[0])
    value, clamped = clamp_glucose(raw)
    return Prediction(value, m.glucose_kind, clamped)


def dnn_jacobian(m: DnnModel, batch: Dataset) -> np.ndarray:
    """Residual Jacobian of the model on a batch, in standardized space."""
    rows = usable_samples(batch, m.glucose_kind)
    if not rows:
        raise DataError(f"batch has no samples with a {m.glucose_kind} reference")
    X, _ = design_arrays(rows, m.glucose_kind)
    return batch_jacobian(m.widths, m.theta(), m.x_scaler.transform(X))
