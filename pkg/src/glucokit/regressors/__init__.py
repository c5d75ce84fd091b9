"""Calibration model families behind one fit/predict interface.

Model spec strings accepted by fit_model:

    mpr3                   19-term cubic polynomial + intercept
    svr:linear             epsilon-SVR, linear kernel
    svr:quadratic          epsilon-SVR, (1 + u.v)^2
    svr:cubic              epsilon-SVR, (1 + u.v)^3
    svr:medium-gaussian    Gaussian, scale sqrt(3)
    svr:fine-gaussian      Gaussian, scale sqrt(3)/4
    svr:coarse-gaussian    Gaussian, scale 4*sqrt(3)
    dnn                    sigmoid network, 10 hidden layers of 10
"""

from __future__ import annotations

from ..data import Dataset
from ..errors import DataError
from .base import (
    CLAMP_HI_MGDL,
    CLAMP_LO_MGDL,
    Prediction,
    Standardizer,
    clamp_glucose,
    split_hash,
    usable_samples,
)
from .dnn import (
    DnnModel,
    DnnTrainConfig,
    dnn_forward,
    dnn_jacobian,
    train_dnn_lm,
)
from .features import FEATURE_NAMES, N_FEATURES, build_features, feature_matrix
from .io import TrainedModel, load_model, model_from_dict, model_to_dict, save_model
from .mpr import Mpr3Model, fit_mpr3, predict_mpr3
from .svr import KernelSpec, SvrModel, fit_svr, kernel_eval, kernel_matrix, predict_svr

MODEL_SPECS = (
    "mpr3",
    "svr:linear", "svr:quadratic", "svr:cubic",
    "svr:medium-gaussian", "svr:fine-gaussian", "svr:coarse-gaussian",
    "dnn",
)


def _parse_kernel(name: str) -> KernelSpec:
    if name in ("linear", "quadratic", "cubic"):
        return KernelSpec(name)
    if name.endswith("-gaussian"):
        return KernelSpec.gaussian(name[: -len("-gaussian")])
    raise DataError(f"unknown SVR kernel {name!r}")


def fit_model(model_spec: str, train: Dataset, kind: str, *,
              seed: int = 0, created_utc: str | None = None,
              **options) -> TrainedModel:
    """Dispatch a fit by spec string; returns the model plus fit metadata.

    options are family-specific: intercept (mpr3); eps, c (svr);
    hidden_layers, width, max_iters, sse_tol, lambda0 (dnn).
    """
    rows = usable_samples(train, kind)
    meta: dict = {
        "seed": seed,
        "n_train": len(rows),
        "train_split_hash": split_hash(rows),
    }
    if created_utc is not None:
        meta["created_utc"] = created_utc

    def reject_unknown(allowed: set[str]) -> None:
        bad = set(options) - allowed
        if bad:
            raise DataError(f"options {sorted(bad)} not valid for {model_spec!r}")

    if model_spec == "mpr3":
        reject_unknown({"intercept"})
        model = fit_mpr3(train, kind, intercept=options.get("intercept", True))
        meta["hyperparameters"] = {"intercept": options.get("intercept", True)}
    elif model_spec.startswith("svr:"):
        reject_unknown({"eps", "c"})
        kernel = _parse_kernel(model_spec[len("svr:"):])
        model = fit_svr(train, kind, kernel,
                        eps=options.get("eps"), c=options.get("c"))
        meta["hyperparameters"] = {
            "kernel": kernel.kind,
            "scale": kernel.scale,
            "eps": model.eps,
            "c": model.c,
        }
    elif model_spec == "dnn":
        reject_unknown({"hidden_layers", "width", "max_iters", "sse_tol",
                        "lambda0", "lambda_up", "lambda_down"})
        cfg = DnnTrainConfig(seed=seed, **options)
        model = train_dnn_lm(train, kind, cfg)
        meta["hyperparameters"] = {
            "hidden_layers": cfg.hidden_layers,
            "width": cfg.width,
            "lambda0": cfg.lambda0,
            "max_iters": cfg.max_iters,
            "sse_tol": cfg.sse_tol,
        }
    else:
        raise DataError(
            f"unknown model spec {model_spec!r}; expected one of {MODEL_SPECS}"
        )
    return TrainedModel(spec=model_spec, glucose_kind=kind, model=model, metadata=meta)


__all__ = [
    "CLAMP_HI_MGDL", "CLAMP_LO_MGDL", "FEATURE_NAMES", "N_FEATURES",
    "DnnModel", "DnnTrainConfig", "KernelSpec", "Mpr3Model", "MODEL_SPECS",
    "Prediction", "Standardizer", "SvrModel", "TrainedModel",
    "build_features", "clamp_glucose", "dnn_forward", "dnn_jacobian",
    "feature_matrix", "fit_model", "fit_mpr3", "fit_svr", "kernel_eval",
    "kernel_matrix", "load_model", "model_from_dict", "model_to_dict",
    "predict_mpr3", "predict_svr", "save_model", "split_hash", "train_dnn_lm",
    "usable_samples",
]
