"""Domain types, dataset container, CSV ingestion/export and deterministic splits.

A Dataset is immutable after construction; all operations here either build a
new Dataset or read one. The CSV schema (header required, comma-separated,
UTF-8) is:

    id,ch1_mv,ch2_mv,ch3_mv,capillary_mgdl,serum_mgdl,mode,sex,age,split

capillary_mgdl / serum_mgdl / age may be empty; mode is one of
{fasting, postprandial, random} or empty; sex is one of
{male, female, unspecified} or empty (read as "unspecified");
split is one of {calibration, validation, testing} or empty.
Voltages are decimal millivolts.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError

GLUCOSE_KINDS = ("capillary", "serum")
MODES = ("fasting", "postprandial", "random")
SEXES = ("male", "female", "unspecified")
SPLITS = ("calibration", "validation", "testing")

CSV_HEADER = (
    "id", "ch1_mv", "ch2_mv", "ch3_mv", "capillary_mgdl", "serum_mgdl",
    "mode", "sex", "age", "split",
)


@dataclass(frozen=True)
class ChannelVoltages:
    """Detector output voltages in millivolts, one per optical channel."""

    ch1_mv: float
    ch2_mv: float
    ch3_mv: float

    def __post_init__(self):
        for name in ("ch1_mv", "ch2_mv", "ch3_mv"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise DataError(f"{name} must be a finite number, got {v!r}")
            if v < 0:
                raise DataError(f"{name} must be >= 0 mV, got {v}")

    def as_array(self) -> np.ndarray:
        return np.array([self.ch1_mv, self.ch2_mv, self.ch3_mv], dtype=float)

    def check_range(self, fsr_mv: float) -> None:
        """Raise DataError if any channel lies outside [0, fsr_mv]."""
        for name in ("ch1_mv", "ch2_mv", "ch3_mv"):
            v = getattr(self, name)
            if v < 0 or v > fsr_mv:
                raise DataError(
                    f"{name}={v} mV outside ADC full-scale range [0, {fsr_mv}]"
                )


@dataclass(frozen=True)
class GlucoseValue:
    """A reference or predicted glucose concentration in mg/dl."""

    value_mgdl: float
    kind: str  # "capillary" or "serum"

    def __post_init__(self):
        if self.kind not in GLUCOSE_KINDS:
            raise DataError(f"glucose kind must be one of {GLUCOSE_KINDS}, got {self.kind!r}")
        v = self.value_mgdl
        if not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0:
            raise DataError(f"glucose value must be finite and > 0 mg/dl, got {v!r}")


@dataclass(frozen=True)
class Sample:
    """One measurement: channel voltages plus reference value(s) and demographics."""

    id: str
    voltages: ChannelVoltages
    capillary: GlucoseValue | None = None
    serum: GlucoseValue | None = None
    mode: str | None = None
    sex: str = "unspecified"
    age_years: int | None = None

    def __post_init__(self):
        if not self.id:
            raise DataError("sample id must be a non-empty string")
        if self.capillary is not None and self.capillary.kind != "capillary":
            raise DataError(f"capillary reference has kind {self.capillary.kind!r}")
        if self.serum is not None and self.serum.kind != "serum":
            raise DataError(f"serum reference has kind {self.serum.kind!r}")
        if self.mode is not None and self.mode not in MODES:
            raise DataError(f"mode must be one of {MODES} or None, got {self.mode!r}")
        if self.sex not in SEXES:
            raise DataError(f"sex must be one of {SEXES}, got {self.sex!r}")
        if self.age_years is not None and (not isinstance(self.age_years, int) or self.age_years < 0):
            raise DataError(f"age_years must be a non-negative integer, got {self.age_years!r}")

    def reference(self, kind: str) -> GlucoseValue | None:
        if kind not in GLUCOSE_KINDS:
            raise DataError(f"unknown glucose kind {kind!r}")
        return self.capillary if kind == "capillary" else self.serum

    def has_reference(self) -> bool:
        return self.capillary is not None or self.serum is not None


@dataclass(frozen=True)
class Dataset:
    """Ordered collection of Samples plus an id -> split-label map."""

    samples: tuple[Sample, ...]
    split_labels: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        ids = [s.id for s in self.samples]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise DataError(f"duplicate sample id {dup!r}")
        known = set(ids)
        for sid, label in self.split_labels.items():
            if sid not in known:
                raise DataError(f"split label refers to unknown sample id {sid!r}")
            if label not in SPLITS:
                raise DataError(f"invalid split label {label!r} for sample {sid!r}")
        by_id = {s.id: s for s in self.samples}
        for sid, label in self.split_labels.items():
            s = by_id[sid]
            if label in ("calibration", "validation") and not s.has_reference():
                raise DataError(
                    f"sample {sid!r} is labeled {label} but carries no reference glucose"
                )
            if label == "validation" and s.mode is None:
                raise DataError(f"validation sample {sid!r} has no measurement mode")

    def __len__(self) -> int:
        return len(self.samples)

    def split_of(self, sample_id: str) -> str | None:
        return self.split_labels.get(sample_id)

    def subset(self, split: str) -> "Dataset":
        """Samples carrying the given split label, in original order."""
        if split not in SPLITS:
            raise DataError(f"unknown split {split!r}")
        kept = tuple(s for s in self.samples if self.split_labels.get(s.id) == split)
        labels = {s.id: split for s in kept}
        return Dataset(kept, labels)

    def with_splits(self, labels: dict[str, str]) -> "Dataset":
        return Dataset(self.samples, dict(labels))


def _parse_float(text: str, what: str, row: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"row {row}: {what} is not numeric: {text!r}") from None
    if not math.isfinite(v):
        raise DataError(f"row {row}: {what} must be finite, got {text!r}")
    return v


def _row_error(lineno: int, exc: DataError) -> DataError:
    msg = str(exc)
    prefix = f"row {lineno}: "
    return DataError(msg if msg.startswith(prefix) else prefix + msg)


def load_csv(path) -> Dataset:
    """Read a Dataset from the documented CSV schema.

    Row numbers in error messages are 1-based file lines (header is line 1).
    """
    samples: list[Sample] = []
    labels: dict[str, str] = {}
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected CSV header") from None
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise DataError(
                f"{path}: bad header {header!r}, expected {','.join(CSV_HEADER)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise DataError(
                    f"row {lineno}: expected {len(CSV_HEADER)} columns, got {len(row)}"
                )
            (sid, ch1, ch2, ch3, cap, ser, mode, sex, age, split) = [c.strip() for c in row]
            if not sid:
                raise DataError(f"row {lineno}: empty sample id")
            if sid in seen:
                raise DataError(f"row {lineno}: duplicate sample id {sid!r}")
            seen.add(sid)
            try:
                voltages = ChannelVoltages(
                    _parse_float(ch1, "ch1_mv", lineno),
                    _parse_float(ch2, "ch2_mv", lineno),
                    _parse_float(ch3, "ch3_mv", lineno),
                )
            except DataError as exc:
                raise _row_error(lineno, exc) from None

            def glucose(text: str, kind: str) -> GlucoseValue | None:
                if not text:
                    return None
                v = _parse_float(text, f"{kind}_mgdl", lineno)
                if v <= 0:
                    raise DataError(f"row {lineno}: {kind}_mgdl must be > 0, got {v}")
                return GlucoseValue(v, kind)

            if mode and mode not in MODES:
                raise DataError(f"row {lineno}: invalid mode {mode!r}")
            if sex and sex not in SEXES:
                raise DataError(f"row {lineno}: invalid sex {sex!r}")
            if split and split not in SPLITS:
                raise DataError(f"row {lineno}: invalid split {split!r}")
            age_years = None
            if age:
                try:
                    age_years = int(age)
                except ValueError:
                    raise DataError(f"row {lineno}: age is not an integer: {age!r}") from None
                if age_years < 0:
                    raise DataError(f"row {lineno}: age must be >= 0, got {age_years}")
            try:
                sample = Sample(
                    id=sid,
                    voltages=voltages,
                    capillary=glucose(cap, "capillary"),
                    serum=glucose(ser, "serum"),
                    mode=mode or None,
                    sex=sex or "unspecified",
                    age_years=age_years,
                )
            except DataError as exc:
                raise _row_error(lineno, exc) from None
            samples.append(sample)
            if split:
                labels[sid] = split
    return Dataset(tuple(samples), labels)


def _fmt(v: float | int | None) -> str:
    if v is None:
        return ""
    return repr(float(v))


def export_csv(d: Dataset, path) -> None:
    """Write a Dataset using the documented CSV schema.

    Floats are written with repr so load_csv(export_csv(d)) round-trips exactly.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for s in d.samples:
            writer.writerow([
                s.id,
                _fmt(s.voltages.ch1_mv),
                _fmt(s.voltages.ch2_mv),
                _fmt(s.voltages.ch3_mv),
                _fmt(s.capillary.value_mgdl if s.capillary else None),
                _fmt(s.serum.value_mgdl if s.serum else None),
                s.mode or "",
                s.sex,
                "" if s.age_years is None else str(s.age_years),
                d.split_labels.get(s.id, ""),
            ])


def _stratum_groups(samples: list[Sample]) -> list[list[Sample]]:
    """Partition samples into three contiguous glucose tertiles (low/mid/high)."""

    def strat_value(s: Sample) -> float:
        ref = s.capillary or s.serum
        if ref is None:
            raise DataError(f"sample {s.id!r} has no reference glucose; cannot stratify")
        return ref.value_mgdl

    ordered = sorted(samples, key=lambda s: (strat_value(s), s.id))
    n = len(ordered)
    base, extra = divmod(n, 3)
    sizes = [base + (1 if i < extra else 0) for i in range(3)]
    groups, start = [], 0
    for size in sizes:
        groups.append(ordered[start:start + size])
        start += size
    return groups


def _largest_remainder(targets: np.ndarray) -> np.ndarray:
    """Round non-negative targets to integers preserving the (integral) total."""
    floors = np.floor(targets).astype(int)
    remainder = int(round(targets.sum())) - floors.sum()
    order = np.argsort(-(targets - floors), kind="stable")
    out = floors.copy()
    for i in range(remainder):
        out[order[i]] += 1
    return out


def _balance_allocation(alloc: np.ndarray, target: np.ndarray, global_target: np.ndarray) -> np.ndarray:
    """Nudge a per-stratum allocation until per-class totals hit global_target.

    Keeps every cell within one sample of its fractional target. Moves one
    sample at a time between classes inside a stratum; when no direct move is
    safe, routes through the third class (two moves), which always exists.
    """
    alloc = alloc.copy()
    n_strata, n_classes = alloc.shape

    def dev():
        return alloc.sum(axis=0) - global_target

    def can_dec(s, c):
        return alloc[s, c] - target[s, c] > 0 and alloc[s, c] > 0

    def can_inc(s, c):
        return alloc[s, c] - target[s, c] < 0

    guard = 0
    while True:
        d = dev()
        if not d.any():
            break
        guard += 1
        if guard > 10 * n_strata * n_classes:
            raise DataError("split allocation failed to balance")  # pragma: no cover
        c_over = int(np.argmax(d))
        c_under = int(np.argmin(d))
        direct = [s for s in range(n_strata) if can_dec(s, c_over) and can_inc(s, c_under)]
        if direct:
            s = max(direct, key=lambda s: (alloc[s, c_over] - target[s, c_over])
                    - (alloc[s, c_under] - target[s, c_under]))
            alloc[s, c_over] -= 1
            alloc[s, c_under] += 1
            continue
        c3 = next(c for c in range(n_classes) if c not in (c_over, c_under))
        s1 = next(s for s in range(n_strata) if can_dec(s, c_over) and can_inc(s, c3))
        alloc[s1, c_over] -= 1
        alloc[s1, c3] += 1
        s2 = next(s for s in range(n_strata) if can_dec(s, c3) and can_inc(s, c_under))
        alloc[s2, c3] -= 1
        alloc[s2, c_under] += 1
    return alloc


def split_dataset(d: Dataset, seed: int, fractions) -> Dataset:
    """Assign calibration/validation/testing labels, stratified by glucose tertile.

    fractions is a (calibration, validation, testing) triple summing to 1.
    Deterministic for a fixed seed. Global split sizes follow the fractions
    exactly (largest-remainder rounding); per-stratum sizes stay within one
    sample of the fractional target.
    """
    fr = np.asarray(list(fractions), dtype=float)
    if fr.shape != (3,):
        raise DataError("fractions must be a (calibration, validation, testing) triple")
    if (fr < 0).any():
        raise DataError("fractions must be non-negative")
    if abs(fr.sum() - 1.0) > 1e-9:
        raise DataError(f"fractions must sum to 1, got {fr.sum()!r}")
    n = len(d.samples)
    if n == 0:
        return d.with_splits({})

    groups = _stratum_groups(list(d.samples))
    nonzero_classes = int(np.count_nonzero(fr > 0))
    if nonzero_classes > 1:
        for g in groups:
            if len(g) < 3:
                raise DataError(
                    "need at least 3 samples per glucose stratum to split "
                    f"(got a stratum of {len(g)})"
                )

    global_target = _largest_remainder(fr * n)
    sizes = np.array([len(g) for g in groups])
    target = np.outer(sizes, fr)
    alloc = np.stack([_largest_remainder(t) for t in target])
    alloc = _balance_allocation(alloc, target, global_target)

    rng = np.random.default_rng(seed)
    labels: dict[str, str] = {}
    for g, counts in zip(groups, alloc):
        order = rng.permutation(len(g))
        shuffled = [g[i] for i in order]
        start = 0
        for cls, count in zip(SPLITS, counts):
            for s in shuffled[start:start + count]:
                labels[s.id] = cls
            start += count
    return d.with_splits(labels)
