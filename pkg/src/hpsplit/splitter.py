"""Hyperplane data splitting and the combined piecewise predictor.

Workflow: for a threshold in (0, 1) over normalized targets, a linear
program finds the hyperplane that best pushes low-target compounds to one
side and high-target compounds to the other; a scan picks the threshold
whose split has the smallest overlap of target ranges subject to a size
floor; each side then gets its own regressor, fit against that side's
targets renormalized to [0, 1]; prediction picks the side by the sign of
w.x - b (ties to side 1) and maps the sub-model output back through the
side's target range.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from hpsplit.dataset import (DataSet, NormalizationRecord,
                             normalize_target_value)
from hpsplit.errors import (DegenerateSplitError, InputError, SolverFailure,
                            ToolkitError)
from hpsplit.evaluation import MethodSpec, cross_validate, fit_method
from hpsplit.lp import Constraint, LinearProgram, LPStatus, solve_lp
from hpsplit.regression import Hyperplane, LinearModel, LinearRef, QuadraticTag, predict

log = logging.getLogger(__name__)

# box guard on the hyperplane variables: the split LP leaves them free, and
# cleanly separable data pushes |w| arbitrarily large; the box keeps the
# simplex polytope bounded without changing any achieved split
HYPERPLANE_BOX = 1e4

DEFAULT_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))
DEFAULT_MIN_FRACTION = 0.25

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class SplitResult:
    theta: float
    hyperplane: Hyperplane
    subset1_ids: tuple[str, ...]
    subset2_ids: tuple[str, ...]
    a_max_1: float
    a_min_2: float
    lp_objective: float
    subset1_idx: np.ndarray
    subset2_idx: np.ndarray


@dataclass(frozen=True)
class SplitModel:
    hyperplane: Hyperplane
    theta: float
    sub_models: tuple[LinearModel, LinearModel]
    sub_ranges: tuple[tuple[float, float], tuple[float, float]]
    normalization: NormalizationRecord | None = None


def _check_normalized(ds: DataSet):
    a = ds.targets
    if a.min() > 1e-9 or a.max() < 1.0 - 1e-9:
        raise InputError("targets must be normalized to [0, 1] with both "
                         "endpoints attained (missing anchor compounds)")


def _anchors(ds: DataSet) -> tuple[int, int]:
    """Lowest-index rows attaining target 0 and target 1."""
    a = ds.targets
    s = int(np.nonzero(a <= a.min() + 1e-12)[0][0])
    t = int(np.nonzero(a >= a.max() - 1e-12)[0][0])
    return s, t


def build_split_lp(ds: DataSet, theta: float) -> LinearProgram:
    """The split-finding LP for one threshold.

    Variables are the hyperplane entries w (one per descriptor), the offset
    b, and one nonnegative slack per compound.  Low-target compounds i pay
    slack when w.x_i - b fails to sit below -(a_i - theta)^2; high-target
    ones pay symmetrically; the anchor compounds attaining targets 0 and 1
    are pinned to their sides.  Objective: minimize total slack.
    """
    if not 0.0 < theta < 1.0:
        raise InputError(f"threshold must lie strictly inside (0, 1), got {theta}")
    _check_normalized(ds)
    n, k = ds.features.shape
    s, t = _anchors(ds)
    a = ds.targets
    X = ds.features

    nv = k + 1 + n                       # w | b | slack
    obj = np.zeros(nv)
    obj[k + 1:] = 1.0
    cons = []
    row = np.zeros(nv)
    row[:k] = X[s]
    row[k] = -1.0
    cons.append(Constraint(row, "<=", 0.0))
    row = np.zeros(nv)
    row[:k] = X[t]
    row[k] = -1.0
    cons.append(Constraint(row, ">=", 0.0))
    for i in range(n):
        margin = (a[i] - theta) ** 2
        sign = 1.0 if a[i] <= theta else -1.0
        # low side:  w.x - b - slack <= -margin; high side mirrored
        row = np.zeros(nv)
        row[:k] = sign * X[i]
        row[k] = -sign
        row[k + 1 + i] = -1.0
        cons.append(Constraint(row, "<=", -margin))
    bounds = [(-HYPERPLANE_BOX, HYPERPLANE_BOX)] * (k + 1) + [(0.0, np.inf)] * n
    return LinearProgram(obj, cons, bounds)


def side_of(hyperplane: Hyperplane, X) -> np.ndarray:
    """0 for rows with w.x - b <= 0 (side 1), 1 otherwise."""
    vals = np.atleast_2d(X) @ hyperplane.w - hyperplane.b
    return (vals > 0.0).astype(int)


def find_hyperplane(ds: DataSet, theta: float) -> SplitResult:
    """Solve the split LP and compute both subsets and their target extremes."""
    lp = build_split_lp(ds, theta)
    sol = solve_lp(lp)
    if sol.status is not LPStatus.OPTIMAL:
        raise SolverFailure(f"split LP ended {sol.status.value} at threshold {theta}")
    k = ds.features.shape[1]
    hp = Hyperplane(sol.values[:k], float(sol.values[k]))
    side = side_of(hp, ds.features)
    idx1 = np.nonzero(side == 0)[0]
    idx2 = np.nonzero(side == 1)[0]
    if idx1.size == 0 or idx2.size == 0:
        raise DegenerateSplitError(f"threshold {theta} left one side empty")
    return SplitResult(
        theta, hp,
        tuple(ds.ids[i] for i in idx1), tuple(ds.ids[i] for i in idx2),
        float(ds.targets[idx1].max()), float(ds.targets[idx2].min()),
        float(sol.objective_value), idx1, idx2)


@dataclass(frozen=True)
class ScanRow:
    theta: float
    gap: float            # a_max(1) - a_min(2); NaN when the split degenerated
    size_1: int
    size_2: int
    result: SplitResult | None


@dataclass(frozen=True)
class ScanResult:
    best: SplitResult
    rows: tuple[ScanRow, ...]
    size_constrained: bool    # False when no threshold met the size floor


def scan_thresholds(ds: DataSet, grid=DEFAULT_GRID,
                    min_fraction: float = DEFAULT_MIN_FRACTION,
                    jobs: int = 1) -> ScanResult:
    """Try every threshold in ``grid`` and pick the best split.

    Among thresholds whose split keeps both sides at least
    ``min_fraction * n`` large, picks the one minimizing the target-range
    overlap a_max(1) - a_min(2); ties go to the threshold closest to 0.5,
    then to the smaller threshold.  If no threshold meets the size floor,
    falls back to the most balanced split and logs a warning.
    """
    grid = list(grid)
    if not grid:
        raise InputError("empty threshold grid")
    for theta in grid:
        if not 0.0 < theta < 1.0:
            raise InputError(f"threshold {theta} outside (0, 1)")
    if not 0.0 < min_fraction <= 0.5:
        raise InputError(f"min_fraction must lie in (0, 0.5], got {min_fraction}")

    def run(theta: float) -> ScanRow:
        try:
            res = find_hyperplane(ds, theta)
        except (DegenerateSplitError, SolverFailure) as exc:
            log.warning("threshold %s skipped: %s", theta, exc)
            return ScanRow(theta, math.nan, 0, 0, None)
        return ScanRow(theta, res.a_max_1 - res.a_min_2,
                       len(res.subset1_ids), len(res.subset2_ids), res)

    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_scan_worker, [(ds, th) for th in grid]))
    else:
        rows = [run(theta) for theta in grid]

    def tie_key(row: ScanRow):
        return (abs(row.theta - 0.5), row.theta)

    n = len(ds)
    ok = [r for r in rows if r.result is not None
          and min(r.size_1, r.size_2) >= min_fraction * n]
    if ok:
        # gaps are quantized at 1e-9 so that arithmetic noise cannot defeat
        # the documented tie rules (closest to 0.5, then smaller threshold)
        best = min(ok, key=lambda r: (round(r.gap, 9), *tie_key(r)))
        return ScanResult(best.result, tuple(rows), True)
    candidates = [r for r in rows if r.result is not None]
    if not candidates:
        raise DegenerateSplitError("every threshold in the grid degenerated")
    best = max(candidates, key=lambda r: (min(r.size_1, r.size_2),
                                          tuple(-v for v in tie_key(r))))
    log.warning("no threshold met the size floor %.2f; falling back to the "
                "most balanced split at %.2f", min_fraction, best.theta)
    return ScanResult(best.result, tuple(rows), False)


def _scan_worker(args):
    ds, theta = args
    try:
        res = find_hyperplane(ds, theta)
    except (DegenerateSplitError, SolverFailure):
        return ScanRow(theta, math.nan, 0, 0, None)
    return ScanRow(theta, res.a_max_1 - res.a_min_2,
                   len(res.subset1_ids), len(res.subset2_ids), res)


def resplit(ds: DataSet, model_or_split) -> SplitResult:
    """Recompute subset membership on ``ds`` under a fixed hyperplane.

    Used per cross-validation fold: the hyperplane and threshold stay fixed,
    the side membership and target extremes are those of the given rows.
    """
    hp = model_or_split.hyperplane
    theta = model_or_split.theta
    side = side_of(hp, ds.features)
    idx1 = np.nonzero(side == 0)[0]
    idx2 = np.nonzero(side == 1)[0]
    if idx1.size == 0 or idx2.size == 0:
        raise DegenerateSplitError("fixed hyperplane left one side empty on this subset")
    return SplitResult(
        theta, hp,
        tuple(ds.ids[i] for i in idx1), tuple(ds.ids[i] for i in idx2),
        float(ds.targets[idx1].max()), float(ds.targets[idx2].min()),
        math.nan, idx1, idx2)


AUTO_CANDIDATES = (MethodSpec("mlr"), MethodSpec("lasso"), MethodSpec("alr"),
                   MethodSpec("rlr"))


def _renormalized_side(ds: DataSet, idx: np.ndarray) -> tuple[DataSet, float, float]:
    sub = ds.subset(idx)
    lo, hi = float(sub.targets.min()), float(sub.targets.max())
    if hi > lo:
        targets = (sub.targets - lo) / (hi - lo)
    else:
        targets = np.zeros(len(sub))
    return DataSet(sub.ids, sub.features, targets, sub.descriptor_names), lo, hi


def _auto_select(side_ds: DataSet, seed: int) -> MethodSpec:
    n = len(side_ds)
    k = min(5, n // 2)
    if k < 2:
        return MethodSpec("mlr")
    best_spec, best_median = None, -np.inf
    for spec in AUTO_CANDIDATES:
        try:
            rep = cross_validate(side_ds, spec, k=k, runs=1, seed=seed)
        except ToolkitError:
            continue
        if rep.median > best_median:
            best_spec, best_median = spec, rep.median
    return best_spec or MethodSpec("mlr")


def train_split_model(ds: DataSet, split: SplitResult, side_specs=("auto", "auto"),
                      seed: int = 0) -> SplitModel:
    """Fit one regressor per side of a split and package the piecewise model.

    Each side's targets are renormalized from that side's [min, max] onto
    [0, 1] before fitting; the ranges are recorded for inversion at predict
    time.  A side spec of "auto" picks the best of the four learners by an
    internal 5-fold median; a side whose targets are all equal gets a
    constant sub-model and a warning.
    """
    models, ranges = [], []
    for side, idx in enumerate((split.subset1_idx, split.subset2_idx)):
        if idx.size < 2:
            raise DegenerateSplitError(f"side {side + 1} has {idx.size} compounds; "
                                       "need at least 2 to fit")
        side_ds, lo, hi = _renormalized_side(ds, idx)
        if hi <= lo:
            log.warning("side %d targets are all %.6g; using a constant sub-model",
                        side + 1, lo)
            model = LinearModel(Hyperplane(np.zeros(0), 0.0), (), "constant",
                                ds.num_descriptors)
        else:
            spec = side_specs[side]
            if spec == "auto" or spec is None:
                spec = _auto_select(side_ds, seed)
            model = fit_method(side_ds, spec)
        models.append(model)
        ranges.append((lo, hi))
    return SplitModel(split.hyperplane, split.theta,
                      (models[0], models[1]), (ranges[0], ranges[1]))


def sub_model_outputs(model: SplitModel, side: int, X) -> np.ndarray:
    """Raw side-scale outputs of one sub-model on full-dimension rows."""
    rows = np.atleast_2d(np.asarray(X, dtype=float))
    sub = model.sub_models[side]
    if not sub.descriptor_subset:
        return np.full(rows.shape[0], sub.hyperplane.b)
    return np.asarray(predict(sub, rows), dtype=float)


def predict_split(model: SplitModel, x) -> float | np.ndarray:
    """Piecewise prediction in the global-normalized target scale.

    Side 1 applies when w.x - b <= 0 (boundary inclusive); the chosen
    sub-model's output is mapped from the side's [0, 1] scale back onto the
    side's stretch of the global scale.
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    rows = arr[None, :] if single else arr
    if rows.shape[1] != model.hyperplane.w.size:
        raise InputError(f"feature vector has {rows.shape[1]} entries, "
                         f"model expects {model.hyperplane.w.size}")
    side = side_of(model.hyperplane, rows)
    out = np.empty(rows.shape[0])
    for s in (0, 1):
        sel = np.nonzero(side == s)[0]
        if sel.size == 0:
            continue
        lo, hi = model.sub_ranges[s]
        out[sel] = lo + sub_model_outputs(model, s, rows[sel]) * (hi - lo)
    return float(out[0]) if single else out


# --- phase-2 constraint emission -------------------------------------------

def emit_phase2_constraint(model: SplitModel, y_lo: float, y_hi: float,
                           rec: NormalizationRecord | None = None) -> list[dict]:
    """Side selection records for an external inverse-design pipeline.

    The target interval (original units) is normalized; if its top sits at
    or below max(a_max(1), theta) the search belongs on side 1 under
    w.x - b <= 0; if its bottom sits at or above min(a_min(2), theta), on
    side 2 under w.x - b >= 0.  An interval failing both tests is covered by
    two records, one per side, with the interval clipped at those anchors.
    """
    if y_lo > y_hi:
        raise InputError(f"empty target interval [{y_lo}, {y_hi}]")
    rec = rec or model.normalization
    if rec is None:
        raise InputError("no normalization record attached to the model")
    lo = normalize_target_value(y_lo, rec)
    hi = normalize_target_value(y_hi, rec)
    a_max_1 = model.sub_ranges[0][1]
    a_min_2 = model.sub_ranges[1][0]
    top_anchor = max(a_max_1, model.theta)
    bottom_anchor = min(a_min_2, model.theta)

    def record(side: int, interval: tuple[float, float]) -> dict:
        return {"side": side,
                "relation": "<=" if side == 1 else ">=",
                "w": [float(v) for v in model.hyperplane.w],
                "b": float(model.hyperplane.b),
                "interval": [float(interval[0]), float(interval[1])]}

    if hi <= top_anchor:
        return [record(1, (lo, hi))]
    if lo >= bottom_anchor:
        return [record(2, (lo, hi))]
    return [record(1, (lo, top_anchor)), record(2, (bottom_anchor, hi))]


# --- model serialization ----------------------------------------------------

def _ref_to_json(ref) -> str:
    if isinstance(ref, QuadraticTag):
        return ref.key()
    return f"x({ref.index}):{ref.name}"


def _ref_from_json(text: str):
    for kind in ("prod_compl", "prod"):
        if text.startswith(kind + "("):
            inner = text[len(kind) + 1:-1]
            i, j = (int(v) for v in inner.split(","))
            return QuadraticTag(kind, i, j)
    head, _, name = text.partition(":")
    return LinearRef(int(head[2:-1]), name)


def save_split_model(model: SplitModel, path) -> None:
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "theta": model.theta,
        "hyperplane": {"w": [float(v) for v in model.hyperplane.w],
                       "b": float(model.hyperplane.b)},
        "sub_models": [
            {"method": sub.method,
             "descriptor_subset": [_ref_to_json(r) for r in sub.descriptor_subset],
             "w": [float(v) for v in sub.hyperplane.w],
             "b": float(sub.hyperplane.b)}
            for sub in model.sub_models],
        "sub_ranges": [[float(lo), float(hi)] for lo, hi in model.sub_ranges],
    }
    if model.normalization is not None:
        rec = model.normalization
        doc["normalization"] = {
            "feature_mins": [float(v) for v in rec.feature_mins],
            "feature_maxs": [float(v) for v in rec.feature_maxs],
            "target_min": rec.target_min,
            "target_max": rec.target_max,
            "log_offset": rec.log_offset,
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_split_model(path) -> SplitModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise InputError(f"unsupported model file version {doc.get('version')!r}")
    k = len(doc["hyperplane"]["w"])
    subs = []
    for entry in doc["sub_models"]:
        refs = tuple(_ref_from_json(t) for t in entry["descriptor_subset"])
        subs.append(LinearModel(Hyperplane(np.array(entry["w"]), entry["b"]),
                                refs, entry["method"], k))
    rec = None
    if "normalization" in doc:
        nd = doc["normalization"]
        rec = NormalizationRecord(np.array(nd["feature_mins"]),
                                  np.array(nd["feature_maxs"]),
                                  nd["target_min"], nd["target_max"],
                                  nd["log_offset"])
    ranges = tuple((float(lo), float(hi)) for lo, hi in doc["sub_ranges"])
    return SplitModel(Hyperplane(np.array(doc["hyperplane"]["w"]),
                                 doc["hyperplane"]["b"]),
                      float(doc["theta"]), (subs[0], subs[1]),
                      (ranges[0], ranges[1]), rec)


def with_normalization(model: SplitModel, rec: NormalizationRecord) -> SplitModel:
    return SplitModel(model.hyperplane, model.theta, model.sub_models,
                      model.sub_ranges, rec)


def single_model_as_split(model: LinearModel) -> SplitModel:
    """Wrap one regressor in the piecewise model format.

    A zero hyperplane puts every point on side 1 (0 <= 0), whose range is
    the identity [0, 1]; side 2 is an unreachable placeholder.  This keeps
    one model file format for both piecewise and plain fits.
    """
    placeholder = LinearModel(Hyperplane(np.zeros(0), 0.0), (), "constant",
                              model.input_dim)
    return SplitModel(Hyperplane(np.zeros(model.input_dim), 0.0), 0.5,
                      (model, placeholder), ((0.0, 1.0), (0.0, 1.0)))
