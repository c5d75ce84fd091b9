"""Command-line driver for the glucose pipeline.

Subcommands cover the full loop: simulate a synthetic dataset, calibrate a
model on its calibration split, validate against the held-out split (report
JSON plus SVG plots), predict from raw channel voltages, sync the upload
queue to an endpoint, and render model-comparison tables from report files.

Option layering, highest priority first: explicit flag, environment variable
(GLUCOKIT_ENDPOINT, GLUCOKIT_QUEUE_DIR), JSON config file given with
--config (top-level keys are flag names with underscores), built-in default.

Exit codes: 0 success, 1 usage, 2 data error, 3 solver/convergence error,
4 network failure or dead-lettered records.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import hashlib
import json
import os
import re
import sys

import numpy as np

from . import acquisition, svgplot
from .data import (
    ChannelVoltages,
    Dataset,
    GLUCOSE_KINDS,
    GlucoseValue,
    export_csv,
    load_csv,
    split_dataset,
)
from .errors import DataError, NetworkError, SolverError
from .evaluation import (
    ZONES,
    ceg_analyze,
    group_readings,
    metrics_report,
    paired_readings,
)
from .regressors import MODEL_SPECS, fit_model, load_model, save_model
from .telemetry import ReadingRecord, RetryPolicy, UploadQueue, sync as run_sync

ENV_ENDPOINT = "GLUCOKIT_ENDPOINT"
ENV_QUEUE_DIR = "GLUCOKIT_QUEUE_DIR"


class UsageError(Exception):
    """Bad flags or flag combinations; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_flag_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise DataError(f"config {path}: not valid JSON ({e})") from e
    if not isinstance(doc, dict):
        raise DataError(f"config {path}: top level must be a JSON object")
    return doc


def _resolve(args, name: str, config: dict, default, env_var: str | None = None,
             cast=None):
    """flag > env > config > default; None means the layer is silent."""
    v = getattr(args, name, None)
    if v is None and env_var is not None:
        v = os.environ.get(env_var)
    if v is None:
        v = config.get(name)
    if v is None:
        v = default
    if v is not None and cast is not None:
        try:
            v = cast(v)
        except (TypeError, ValueError) as e:
            raise UsageError(f"bad value for {name}: {v!r} ({e})") from e
    return v


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _parse_range(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"--range wants LO:HI, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as e:
        raise UsageError(f"--range wants numbers, got {text!r}") from e


def _parse_fractions(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"--split-fractions wants C,V,T, got {text!r}")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError as e:
        raise UsageError(f"--split-fractions wants numbers, got {text!r}") from e


def _parse_depths(text: str) -> list[int]:
    m = re.fullmatch(r"(\d+)(?:\.\.(\d+))?", text)
    if not m:
        raise UsageError(f"--hidden-layers wants N or A..B, got {text!r}")
    lo = int(m.group(1))
    hi = int(m.group(2)) if m.group(2) else lo
    if lo < 1 or hi < lo:
        raise UsageError(f"--hidden-layers wants 1 <= A <= B, got {text!r}")
    return list(range(lo, hi + 1))


def _select_split(ds: Dataset, which: str, wanted: str) -> tuple[Dataset, str]:
    """which is auto|all|<wanted>; auto takes the labeled split when present."""
    if which == "all":
        return ds, "all"
    if which == "auto":
        if any(v == wanted for v in ds.split_labels.values()):
            return ds.subset(wanted), wanted
        return ds, "all"
    return ds.subset(which), which


# ---------------------------------------------------------------- simulate

def cmd_simulate(args, config: dict) -> int:
    n = _resolve(args, "n", config, None, cast=int)
    if n is None:
        raise UsageError("--n is required")
    if n < 1:
        raise UsageError(f"--n must be >= 1, got {n}")
    out = _resolve(args, "out", config, None)
    if out is None:
        raise UsageError("--out is required")
    seed = _resolve(args, "seed", config, None, cast=int)
    lo, hi = _parse_range(_resolve(args, "range", config, "60:340", cast=str))
    n_raw = _resolve(args, "n_raw", config, 1024, cast=int)
    noise = _resolve(args, "noise_sd", config, None, cast=float)
    serum_delta = _resolve(args, "serum_delta", config, 0.05, cast=float)
    if _resolve(args, "no_serum", config, False, cast=bool):
        serum_delta = None
    fractions = _parse_fractions(
        _resolve(args, "split_fractions", config, "0.6,0.4,0.0", cast=str))

    fm = acquisition.ForwardModelConfig.from_dict(config.get("forward_model", {}))
    adc = acquisition.AdcConfig.from_dict(config.get("adc", {}))
    if seed is not None:
        fm = dataclasses.replace(fm, seed=seed)
    if noise is not None:
        fm = dataclasses.replace(fm, noise_sd_mv=noise)

    ds = acquisition.generate_dataset(
        n, (lo, hi), fm, adc, n_raw=n_raw, serum_delta=serum_delta,
        id_prefix=_resolve(args, "id_prefix", config, "sim", cast=str),
    )
    if any(f > 0 for f in fractions[1:]) or fractions[0] < 1:
        ds = split_dataset(ds, seed=fm.seed, fractions=fractions)
    else:
        ds = ds.with_splits({s.id: "calibration" for s in ds.samples})
    export_csv(ds, out)
    print(f"wrote {n} samples to {out} "
          f"(glucose {lo:g}-{hi:g} mg/dl, noise sd {fm.noise_sd_mv:g} mV, "
          f"seed {fm.seed})")
    return 0


# --------------------------------------------------------------- calibrate

def _fit_and_report(spec: str, train: Dataset, kind: str, seed: int,
                    created: str | None, options: dict):
    tm = fit_model(spec, train, kind, seed=seed, created_utc=created, **options)
    p = paired_readings(tm, train, kind)
    return tm, metrics_report(p)


def cmd_calibrate(args, config: dict) -> int:
    train_path = _resolve(args, "train", config, None)
    if train_path is None:
        raise UsageError("--train is required")
    spec = _resolve(args, "model", config, "mpr3", cast=str)
    if spec not in MODEL_SPECS:
        raise UsageError(f"unknown model {spec!r}; choose from {', '.join(MODEL_SPECS)}")
    kind = _resolve(args, "kind", config, "capillary", cast=str)
    if kind not in GLUCOSE_KINDS:
        raise UsageError(f"--kind must be one of {GLUCOSE_KINDS}, got {kind!r}")
    seed = _resolve(args, "seed", config, 0, cast=int)
    out = _resolve(args, "out", config, None)
    created = _resolve(args, "timestamp", config, None)
    which = _resolve(args, "split", config, "auto", cast=str)

    ds = load_csv(train_path)
    train, used = _select_split(ds, which, "calibration")

    options: dict = {}
    if _resolve(args, "no_intercept", config, False, cast=bool):
        if spec != "mpr3":
            raise UsageError("--no-intercept only applies to mpr3")
        options["intercept"] = False
    eps = _resolve(args, "svr_eps", config, None, cast=float)
    c = _resolve(args, "svr_c", config, None, cast=float)
    if (eps is not None or c is not None) and not spec.startswith("svr:"):
        raise UsageError("--svr-eps/--svr-c only apply to svr models")
    if eps is not None:
        options["eps"] = eps
    if c is not None:
        options["c"] = c

    depths_text = _resolve(args, "hidden_layers", config, None, cast=str)
    for name, key, cast in (("width", "width", int),
                            ("max_iters", "max_iters", int),
                            ("sse_tol", "sse_tol", float),
                            ("lambda0", "lambda0", float)):
        v = _resolve(args, name, config, None, cast=cast)
        if v is not None:
            if spec != "dnn":
                raise UsageError(f"--{name.replace('_', '-')} only applies to dnn")
            options[key] = v
    if depths_text is not None and spec != "dnn":
        raise UsageError("--hidden-layers only applies to dnn")

    depths = _parse_depths(depths_text) if depths_text is not None else None
    if depths is not None and len(depths) > 1:
        print(f"hidden-layer sweep on {len(train)} samples ({used} split), "
              f"kind {kind}, seed {seed}")
        print(f"{'depth':>5}  {'train mARD %':>12}  {'train RMSE mg/dl':>16}")
        best = None
        for h in depths:
            tm, rep = _fit_and_report(spec, train, kind, seed, created,
                                      dict(options, hidden_layers=h))
            print(f"{h:>5}  {rep.mard_pct:>12.4f}  {rep.rmse_mgdl:>16.4f}")
            if best is None or rep.rmse_mgdl < best[1].rmse_mgdl:
                best = (tm, rep, h)
        assert best is not None
        tm, rep, h = best
        print(f"best depth {h} by train RMSE")
    else:
        if depths is not None:
            options["hidden_layers"] = depths[0]
        tm, rep = _fit_and_report(spec, train, kind, seed, created, options)

    print(f"fit {tm.tag} on {rep.n} samples ({used} split): "
          f"mARD {rep.mard_pct:.4f} %  RMSE {rep.rmse_mgdl:.4f} mg/dl  "
          f"r {rep.r_pearson:.6f}")
    if out is not None:
        save_model(tm, out)
        print(f"saved model to {out}")
    return 0


# ---------------------------------------------------------------- validate

def _slug(value: str) -> str:
    return re.sub(r"[^A-Za-z0-9_-]+", "-", value) or "untagged"


def cmd_validate(args, config: dict) -> int:
    model_path = _resolve(args, "model", config, None)
    data_path = _resolve(args, "data", config, None)
    out_dir = _resolve(args, "out_dir", config, None)
    if model_path is None or data_path is None or out_dir is None:
        raise UsageError("--model, --data and --out-dir are required")
    group_by = _resolve(args, "group_by", config, None)
    if group_by is not None and group_by not in ("sex", "mode"):
        raise UsageError(f"--group-by must be sex or mode, got {group_by!r}")
    which = _resolve(args, "split", config, "auto", cast=str)

    tm = load_model(model_path)
    kind = _resolve(args, "kind", config, tm.glucose_kind, cast=str)
    if kind not in GLUCOSE_KINDS:
        raise UsageError(f"--kind must be one of {GLUCOSE_KINDS}, got {kind!r}")
    ds = load_csv(data_path)
    subset, used = _select_split(ds, which, "validation")

    p = paired_readings(tm, subset, kind)
    rep = metrics_report(p)
    ceg = ceg_analyze(p)

    os.makedirs(out_dir, exist_ok=True)
    doc = {
        "model": {"spec": tm.spec, "glucose_kind": tm.glucose_kind,
                  "metadata": tm.metadata},
        "data": {"path": os.path.basename(str(data_path)), "split": used, "n": len(p)},
        "kind": kind,
        "metrics": rep.to_dict(),
        "ceg": ceg.to_dict(),
    }

    written = ["report.json", "scatter.svg", "ceg.svg", "zones.svg"]
    title = f"{tm.tag} ({used} split, n={len(p)})"
    with open(os.path.join(out_dir, "scatter.svg"), "w", encoding="utf-8") as fh:
        fh.write(svgplot.scatter_svg(p, title=f"Predicted vs reference: {title}"))
    with open(os.path.join(out_dir, "ceg.svg"), "w", encoding="utf-8") as fh:
        fh.write(svgplot.ceg_svg(p, title=f"Clarke error grid: {title}"))
    with open(os.path.join(out_dir, "zones.svg"), "w", encoding="utf-8") as fh:
        fh.write(svgplot.histogram_svg(ceg, title=f"Clarke zones: {title}"))

    if group_by is not None:
        doc["groups"] = {}
        for value, gp in group_readings(p, group_by).items():
            gceg = ceg_analyze(gp)
            try:
                gmetrics = metrics_report(gp).to_dict()
            except DataError:
                gmetrics = None  # degenerate group (e.g. single point)
            doc["groups"][value] = {
                "n": len(gp), "metrics": gmetrics, "ceg": gceg.to_dict(),
            }
            name = f"ceg_{_slug(value)}.svg"
            with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
                fh.write(svgplot.ceg_svg(
                    gp, title=f"Clarke error grid: {tm.tag} {group_by}={value}"))
            written.append(name)

    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")

    print(f"validated {tm.tag} on {len(p)} samples ({used} split)")
    print(f"mARD {rep.mard_pct:.4f} %  AvgE {rep.avge_pct:.4f} %  "
          f"MAD {rep.mad_mgdl:.4f} mg/dl  RMSE {rep.rmse_mgdl:.4f} mg/dl  "
          f"r {rep.r_pearson:.6f}")
    print("CEG " + "  ".join(f"{z} {ceg.percentages[z]:.1f}%" for z in ZONES))
    print(f"wrote {' '.join(written)} in {out_dir}")
    return 0


# ----------------------------------------------------------------- predict

def cmd_predict(args, config: dict) -> int:
    model_path = _resolve(args, "model", config, None)
    if model_path is None:
        raise UsageError("--model is required")
    v = tuple(_resolve(args, f"v{i}", config, None, cast=float) for i in (1, 2, 3))
    if any(x is None for x in v):
        raise UsageError("--v1, --v2 and --v3 are required (millivolts)")
    fsr = _resolve(args, "fsr", config, 5000.0, cast=float)

    tm = load_model(model_path)
    voltages = ChannelVoltages(*v)
    voltages.check_range(fsr)
    pred = tm.predict(voltages)

    if _resolve(args, "json", config, False, cast=bool):
        print(json.dumps({"glucose_mgdl": pred.value_mgdl, "kind": pred.kind,
                          "clamped": pred.clamped, "model": tm.tag}))
    else:
        note = "  [clamped]" if pred.clamped else ""
        print(f"{pred.value_mgdl:.3f} mg/dl ({pred.kind}, {tm.tag}){note}")

    if _resolve(args, "enqueue", config, False, cast=bool):
        queue_dir = _resolve(args, "queue", config, None, env_var=ENV_QUEUE_DIR)
        if queue_dir is None:
            raise UsageError("--enqueue needs --queue DIR (or GLUCOKIT_QUEUE_DIR)")
        patient = _resolve(args, "patient_id", config, "anonymous", cast=str)
        device = _resolve(args, "device_id", config, "iglu-sim-0", cast=str)
        ts = _resolve(args, "timestamp", config, None) or _utc_now()
        key = "|".join([patient, device, ts, repr(v[0]), repr(v[1]), repr(v[2]), tm.tag])
        rid = hashlib.sha256(key.encode()).hexdigest()[:32]
        record = ReadingRecord(
            reading_id=rid, patient_id=patient, timestamp_utc=ts,
            glucose=GlucoseValue(pred.value_mgdl, pred.kind),
            model_tag=tm.tag, device_id=device,
        )
        with UploadQueue(queue_dir) as q:
            q.enqueue(record)
            print(f"enqueued {rid} ({q.pending_count()} pending in {queue_dir})")
    return 0


# -------------------------------------------------------------------- sync

def cmd_sync(args, config: dict) -> int:
    queue_dir = _resolve(args, "queue", config, None, env_var=ENV_QUEUE_DIR)
    endpoint = _resolve(args, "endpoint", config, None, env_var=ENV_ENDPOINT)
    if queue_dir is None:
        raise UsageError("--queue DIR is required (or GLUCOKIT_QUEUE_DIR)")
    if endpoint is None:
        raise UsageError("--endpoint URL is required (or GLUCOKIT_ENDPOINT)")
    retry = RetryPolicy(
        base_delay=_resolve(args, "base_delay", config, 0.1, cast=float),
        max_delay=_resolve(args, "max_delay", config, 2.0, cast=float),
        jitter=_resolve(args, "jitter", config, 0.1, cast=float),
        max_attempts=_resolve(args, "max_attempts", config, 6, cast=int),
    )
    timeout = _resolve(args, "timeout", config, 10.0, cast=float)
    seed = _resolve(args, "seed", config, 0, cast=int)

    with UploadQueue(queue_dir) as q:
        stats = run_sync(q, endpoint, retry, timeout=timeout,
                         rng=np.random.default_rng(seed))
        print(f"uploaded {stats.uploaded}  dead-lettered {stats.dead_lettered}  "
              f"remaining {stats.remaining}  attempts {stats.attempts}")
        for record, reason in q.dead_letters():
            print(f"dead letter {record.reading_id}: {reason}", file=sys.stderr)
    if stats.dead_lettered > 0 or stats.remaining > 0:
        return 4
    return 0


# ------------------------------------------------------------------ report

_REPORT_COLUMNS = ("model", "kind", "split", "n", "mARD %", "AvgE %",
                   "MAD mg/dl", "RMSE mg/dl", "r", "A %", "B %", "C %", "D %", "E %")


def _report_row(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        m = doc["metrics"]
        pct = doc["ceg"]["percentages"]
        return [
            doc["model"]["spec"], doc["kind"], doc["data"]["split"],
            str(doc["data"]["n"]),
            f"{m['mard_pct']:.3f}", f"{m['avge_pct']:.3f}",
            f"{m['mad_mgdl']:.3f}", f"{m['rmse_mgdl']:.3f}",
            f"{m['r_pearson']:.5f}",
        ] + [f"{pct[z]:.1f}" for z in ZONES]
    except (KeyError, TypeError) as e:
        raise DataError(f"report {path}: missing field {e}") from e


def cmd_report(args, config: dict) -> int:
    fmt = _resolve(args, "format", config, "md", cast=str)
    if fmt not in ("md", "csv"):
        raise UsageError(f"--format must be md or csv, got {fmt!r}")
    rows = [_report_row(p) for p in args.reports]
    if fmt == "md":
        lines = ["| " + " | ".join(_REPORT_COLUMNS) + " |",
                 "|" + "|".join("---" for _ in _REPORT_COLUMNS) + "|"]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
    else:
        import csv as _csv
        import io as _io
        buf = _io.StringIO()
        w = _csv.writer(buf, lineterminator="\n")
        w.writerow(_REPORT_COLUMNS)
        w.writerows(rows)
        lines = buf.getvalue().splitlines()
    text = "\n".join(lines) + "\n"
    out = _resolve(args, "out", config, None)
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {out}")
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", default=None,
                        help="JSON file supplying defaults for any flag")

    p = _Parser(prog="glucokit",
                description="Synthetic NIR glucometer pipeline: simulate, "
                            "calibrate, validate, predict, sync, report.")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    s = sub.add_parser("simulate", parents=[common],
                       help="generate a synthetic dataset CSV")
    s.add_argument("--n", type=int, default=None, help="number of samples")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", default=None, help="output CSV path")
    s.add_argument("--range", default=None, metavar="LO:HI",
                   help="glucose range in mg/dl (default 60:340)")
    s.add_argument("--noise-sd", type=float, default=None,
                   help="channel noise sd in mV (default 6)")
    s.add_argument("--n-raw", type=int, default=None,
                   help="raw samples averaged per channel (default 1024)")
    s.add_argument("--serum-delta", type=float, default=None,
                   help="serum = capillary*(1-delta); default 0.05")
    s.add_argument("--no-serum", action="store_true", default=None,
                   help="emit capillary references only")
    s.add_argument("--split-fractions", default=None, metavar="C,V,T",
                   help="calibration,validation,test fractions (default 0.6,0.4,0.0)")
    s.add_argument("--id-prefix", default=None)
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("calibrate", parents=[common],
                       help="fit a model on the calibration split")
    c.add_argument("--train", default=None, help="training CSV")
    c.add_argument("--model", default=None,
                   help="model spec (default mpr3); one of " + ", ".join(MODEL_SPECS))
    c.add_argument("--kind", default=None, choices=GLUCOSE_KINDS)
    c.add_argument("--out", default=None, help="model JSON output path")
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--split", default=None, choices=("auto", "calibration",
                                                     "validation", "testing", "all"))
    c.add_argument("--timestamp", default=None,
                   help="ISO timestamp recorded in model metadata")
    c.add_argument("--no-intercept", action="store_true", default=None,
                   help="mpr3: drop the fitted intercept")
    c.add_argument("--svr-eps", type=float, default=None, help="svr: tube half-width")
    c.add_argument("--svr-c", type=float, default=None, help="svr: box constraint")
    c.add_argument("--hidden-layers", default=None, metavar="N|A..B",
                   help="dnn: depth, or an inclusive sweep like 1..10")
    c.add_argument("--width", type=int, default=None, help="dnn: neurons per layer")
    c.add_argument("--max-iters", type=int, default=None)
    c.add_argument("--sse-tol", type=float, default=None)
    c.add_argument("--lambda0", type=float, default=None)
    c.set_defaults(func=cmd_calibrate)

    v = sub.add_parser("validate", parents=[common],
                       help="evaluate a model; write report JSON and SVG plots")
    v.add_argument("--model", default=None, help="model JSON path")
    v.add_argument("--data", default=None, help="dataset CSV")
    v.add_argument("--out-dir", default=None)
    v.add_argument("--kind", default=None, choices=GLUCOSE_KINDS,
                   help="reference kind (default: the model's)")
    v.add_argument("--split", default=None, choices=("auto", "calibration",
                                                     "validation", "testing", "all"))
    v.add_argument("--group-by", default=None, choices=("sex", "mode"))
    v.set_defaults(func=cmd_validate)

    q = sub.add_parser("predict", parents=[common],
                       help="predict glucose from three channel voltages")
    q.add_argument("--model", default=None, help="model JSON path")
    q.add_argument("--v1", type=float, default=None, help="channel 1, mV")
    q.add_argument("--v2", type=float, default=None, help="channel 2, mV")
    q.add_argument("--v3", type=float, default=None, help="channel 3, mV")
    q.add_argument("--fsr", type=float, default=None,
                   help="ADC full-scale range in mV (default 5000)")
    q.add_argument("--json", action="store_true", default=None,
                   help="print a JSON object instead of text")
    q.add_argument("--enqueue", action="store_true", default=None,
                   help="append the reading to the upload queue")
    q.add_argument("--queue", default=None, help="queue directory")
    q.add_argument("--patient-id", default=None)
    q.add_argument("--device-id", default=None)
    q.add_argument("--timestamp", default=None,
                   help="reading timestamp (default: now, UTC)")
    q.set_defaults(func=cmd_predict)

    y = sub.add_parser("sync", parents=[common],
                       help="upload queued readings to the endpoint")
    y.add_argument("--queue", default=None, help="queue directory")
    y.add_argument("--endpoint", default=None,
                   help="ingest base URL; records POST to {endpoint}/v1/readings")
    y.add_argument("--max-attempts", type=int, default=None)
    y.add_argument("--base-delay", type=float, default=None)
    y.add_argument("--max-delay", type=float, default=None)
    y.add_argument("--jitter", type=float, default=None)
    y.add_argument("--timeout", type=float, default=None)
    y.add_argument("--seed", type=int, default=None, help="retry jitter seed")
    y.set_defaults(func=cmd_sync)

    r = sub.add_parser("report", parents=[common],
                       help="render a comparison table from report JSONs")
    r.add_argument("reports", nargs="+", metavar="REPORT_JSON")
    r.add_argument("--format", default=None, choices=("md", "csv"))
    r.add_argument("--out", default=None, help="write the table here instead of stdout")
    r.set_defaults(func=cmd_report)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            parser.print_usage(sys.stderr)
            print("glucokit: a COMMAND is required", file=sys.stderr)
            return 1
        config = _load_flag_config(getattr(args, "config", None))
        return args.func(args, config)
    except UsageError as e:
        print(f"glucokit: usage error: {e}", file=sys.stderr)
        return 1
    except DataError as e:
        print(f"glucokit: data error: {e}", file=sys.stderr)
        return 2
    except SolverError as e:
        print(f"glucokit: solver error: {e}", file=sys.stderr)
        return 3
    except NetworkError as e:
        print(f"glucokit: network error: {e}", file=sys.stderr)
        return 4
    except OSError as e:
        print(f"glucokit: {e}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
