"""Property-data tables: CSV ingestion, target transforms, normalization.

A DataSet is immutable after construction (its arrays are write-locked) so
it can be shared across concurrent evaluation folds.  Normalization is the
invertible min-max map to [0, 1]; the record it returns is what model files
store so predictions can be mapped back to original units.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from hpsplit.errors import InputError, LoadError, TransformError

log = logging.getLogger(__name__)


def _locked(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DataSet:
    ids: tuple[str, ...]
    features: np.ndarray            # n x K
    targets: np.ndarray             # n
    descriptor_names: tuple[str, ...]

    def __post_init__(self):
        feats = _locked(np.atleast_2d(self.features))
        targs = _locked(self.targets)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "targets", targs)
        object.__setattr__(self, "descriptor_names", tuple(self.descriptor_names))
        n, k = feats.shape
        if targs.shape != (n,):
            raise InputError(f"{n} feature rows but {targs.size} targets")
        if len(self.ids) != n:
            raise InputError(f"{n} rows but {len(self.ids)} ids")
        if len(self.descriptor_names) != k:
            raise InputError(f"{k} columns but {len(self.descriptor_names)} descriptor names")
        seen = set()
        for cid in self.ids:
            if cid in seen:
                raise InputError(f"duplicate compound id {cid!r}")
            seen.add(cid)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def num_descriptors(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "DataSet":
        idx = np.asarray(indices, dtype=int)
        return DataSet(tuple(self.ids[i] for i in idx),
                       self.features[idx], self.targets[idx],
                       self.descriptor_names)


@dataclass(frozen=True)
class NormalizationRecord:
    feature_mins: np.ndarray
    feature_maxs: np.ndarray
    target_min: float
    target_max: float
    log_offset: float | None = None
    constant_columns: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "feature_mins", _locked(self.feature_mins))
        object.__setattr__(self, "feature_maxs", _locked(self.feature_maxs))
        if np.any(self.feature_maxs < self.feature_mins) or self.target_max < self.target_min:
            raise InputError("normalization record has max < min")


def load_table(path) -> DataSet:
    """Read a CSV of the form id,target,descriptor...; strict numeric parsing."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise LoadError(f"{path}: empty file")
    header = lines[0].split(",")
    if len(header) < 2:
        raise LoadError(f"{path}: header must name an id column and a target column")
    names = tuple(header[2:])
    ids, feats, targs = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise LoadError(f"{path}:{lineno}: expected {len(header)} cells, found {len(cells)}")
        ids.append(cells[0])
        row = []
        for col, cell in enumerate(cells[1:], start=1):
            try:
                row.append(float(cell))
            except ValueError:
                raise LoadError(
                    f"{path}:{lineno}: non-numeric cell {cell!r} in column "
                    f"{header[col]!r}") from None
        targs.append(row[0])
        feats.append(row[1:])
    if not ids:
        raise LoadError(f"{path}: no data rows")
    try:
        return DataSet(ids, np.array(feats).reshape(len(ids), len(names)),
                       np.array(targs), names)
    except InputError as exc:
        raise LoadError(f"{path}: {exc}") from None


def save_table(ds: DataSet, path) -> None:
    """Write the CSV mirror of load_table; floats use repr so reload is exact."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(["id", "target", *ds.descriptor_names]) + "\n")
        for i, cid in enumerate(ds.ids):
            cells = [cid, repr(float(ds.targets[i]))]
            cells += [repr(float(v)) for v in ds.features[i]]
            fh.write(",".join(cells) + "\n")


def apply_log_transform(ds: DataSet, offset: float) -> DataSet:
    """Replace each target a by log(a + offset); all arguments must be positive."""
    shifted = ds.targets + offset
    bad = np.nonzero(shifted <= 0.0)[0]
    if bad.size:
        i = int(bad[0])
        raise TransformError(
            f"log transform undefined for compound {ds.ids[i]!r}: "
            f"{ds.targets[i]} + {offset} <= 0")
    return replace(ds, targets=np.log(shifted))


def normalize(ds: DataSet, log_offset: float | None = None
              ) -> tuple[DataSet, NormalizationRecord]:
    """Affinely map every feature column and the target column onto [0, 1].

    Constant columns map to all-zeros and are flagged in the record (and
    logged) rather than dropped, so the column count stays auditable.
    ``log_offset`` is carried into the record when the targets were
    log-transformed beforehand, making the record invert the full pipeline.
    """
    if len(ds) < 2:
        raise InputError("normalization needs at least 2 rows")
    fmin = ds.features.min(axis=0)
    fmax = ds.features.max(axis=0)
    span = fmax - fmin
    constant = np.nonzero(span == 0)[0]
    safe = np.where(span == 0, 1.0, span)
    feats = (ds.features - fmin) / safe
    tmin, tmax = float(ds.targets.min()), float(ds.targets.max())
    if tmax > tmin:
        targs = (ds.targets - tmin) / (tmax - tmin)
    else:
        targs = np.zeros(len(ds))
        log.warning("target column is constant; normalized to all zeros")
    if constant.size:
        log.warning("constant descriptor columns kept as zeros: %s",
                    [ds.descriptor_names[i] for i in constant])
    rec = NormalizationRecord(fmin, fmax, tmin, tmax, log_offset,
                              tuple(int(i) for i in constant))
    out = DataSet(ds.ids, feats, targs, ds.descriptor_names)
    return out, rec


def normalize_features(X: np.ndarray, rec: NormalizationRecord) -> np.ndarray:
    """Map raw feature rows into the [0, 1] scale of a fitted record."""
    span = rec.feature_maxs - rec.feature_mins
    safe = np.where(span == 0, 1.0, span)
    return (np.asarray(X, dtype=float) - rec.feature_mins) / safe


def denormalize_target(v: float, rec: NormalizationRecord) -> float:
    """Map a [0, 1]-scale prediction back to original units.

    Inverts min-max first, then the log transform if one was applied.
    """
    if rec.target_max <= rec.target_min:
        raise InputError("degenerate target range: cannot denormalize")
    out = rec.target_min + float(v) * (rec.target_max - rec.target_min)
    if rec.log_offset is not None:
        out = math.exp(out) - rec.log_offset
    return out


def normalize_target_value(a: float, rec: NormalizationRecord) -> float:
    """Map an original-units target value into the [0, 1] scale (log included)."""
    if rec.target_max <= rec.target_min:
        raise InputError("degenerate target range: cannot normalize")
    v = float(a)
    if rec.log_offset is not None:
        if v + rec.log_offset <= 0:
            raise TransformError(f"log transform undefined for value {a}")
        v = math.log(v + rec.log_offset)
    return (v - rec.target_min) / (rec.target_max - rec.target_min)
