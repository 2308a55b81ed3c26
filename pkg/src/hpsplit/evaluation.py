"""Fit-quality metrics, the repeated k-fold protocol, and report building.

Scores are coefficients of determination; a method's headline number is the
median over all runs-times-folds test scores.  With an even score count the
median is the lower-middle element of the sorted scores (documented choice,
kept for reproducibility).  Partitions come from the named, portable PCG64
generator; run r of a cross-validation is seeded with ``seed + r``, so whole
reports are byte-reproducible.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from hpsplit.dataset import DataSet
from hpsplit.errors import InputError, ToolkitError, UndefinedMetricError
from hpsplit.regression import (ALR_DEFAULT_LAMBDA, fit_alr, fit_lasso,
                                fit_mlr, fit_rlr, predict)

log = logging.getLogger(__name__)

LASSO_DEFAULT_LAMBDA = 1e-3
RLR_DEFAULT_BUDGET = 20


def r_squared(predictions, targets) -> float:
    """1 - (squared error) / (total sum of squares around the target mean)."""
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape or p.ndim != 1 or p.size == 0:
        raise InputError("predictions and targets must be equal-length nonempty vectors")
    tss = float(((t - t.mean()) ** 2).sum())
    if tss == 0.0:
        raise UndefinedMetricError("coefficient of determination undefined: "
                                   "targets are all identical")
    err = float(((t - p) ** 2).sum())
    return 1.0 - err / tss


def kfold_partition(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Random disjoint cover of range(n) by k folds with sizes differing <= 1.

    Uses PCG64 seeded with ``seed``; identical inputs give identical folds.
    Indices within each fold are sorted.
    """
    if k < 1 or k > n:
        raise InputError(f"cannot split {n} rows into {k} folds")
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(n)
    base, extra = divmod(n, k)
    folds, start = [], 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(np.sort(perm[start:start + size]))
        start += size
    return folds


@dataclass(frozen=True)
class MethodSpec:
    """A learner choice: name in {mlr, lasso, alr, rlr} plus its parameter."""

    name: str
    lam: float | None = None
    budget: int | None = None

    def __post_init__(self):
        if self.name not in ("mlr", "lasso", "alr", "rlr"):
            raise InputError(f"unknown method {self.name!r}")

    def label(self) -> str:
        if self.name == "lasso":
            return f"lasso(lam={self.lam if self.lam is not None else LASSO_DEFAULT_LAMBDA})"
        if self.name == "alr":
            return f"alr(lam={self.lam if self.lam is not None else ALR_DEFAULT_LAMBDA})"
        if self.name == "rlr":
            return f"rlr(budget={self.budget if self.budget is not None else RLR_DEFAULT_BUDGET})"
        return "mlr"


def fit_method(ds: DataSet, spec: MethodSpec):
    if spec.name == "mlr":
        return fit_mlr(ds)
    if spec.name == "lasso":
        return fit_lasso(ds, spec.lam if spec.lam is not None else LASSO_DEFAULT_LAMBDA)
    if spec.name == "alr":
        return fit_alr(ds, spec.lam if spec.lam is not None else ALR_DEFAULT_LAMBDA)
    budget = spec.budget if spec.budget is not None else RLR_DEFAULT_BUDGET
    return fit_rlr(ds, max(1, min(budget, len(ds) - 2)))


def median_low(values) -> float:
    """Median as the lower-middle element of the sorted values."""
    vals = sorted(values)
    if not vals:
        raise UndefinedMetricError("median of an empty score list")
    return float(vals[(len(vals) - 1) // 2])


@dataclass(frozen=True)
class CVReport:
    method: str
    scores: tuple[float, ...]      # NaN marks an undefined or failed fold
    folds: int
    runs: int
    seed: int
    undefined: int = 0
    failures: int = 0

    @property
    def median(self) -> float:
        valid = [s for s in self.scores if not math.isnan(s)]
        return median_low(valid)

    def rows(self):
        for i, s in enumerate(self.scores):
            yield i // self.folds, i % self.folds, s


def cross_validate(ds: DataSet, spec: MethodSpec, k: int = 5, runs: int = 10,
                   seed: int = 0) -> CVReport:
    """Repeated k-fold evaluation of one method; p*k scores plus their median.

    Fit failures and constant-target test folds are recorded as NaN scores
    (excluded from the median) rather than aborting, unless every fold fails.
    """
    if len(ds) < 2 * k:
        raise InputError(f"{len(ds)} rows is too few for {k}-fold evaluation")
    scores, undefined, failures = [], 0, 0
    for run in range(runs):
        folds = kfold_partition(len(ds), k, seed + run)
        for fold in folds:
            mask = np.ones(len(ds), dtype=bool)
            mask[fold] = False
            train = ds.subset(np.nonzero(mask)[0])
            try:
                model = fit_method(train, spec)
                score = r_squared(predict(model, ds.features[fold]),
                                  ds.targets[fold])
            except UndefinedMetricError:
                undefined += 1
                score = math.nan
            except ToolkitError as exc:
                failures += 1
                log.warning("fold failed under %s: %s", spec.label(), exc)
                score = math.nan
            scores.append(score)
    if all(math.isnan(s) for s in scores):
        raise ToolkitError(f"every fold failed under {spec.label()}")
    return CVReport(spec.label(), tuple(scores), k, runs, seed, undefined, failures)


def evaluate_split_cv(ds: DataSet, model, side_specs, k: int = 5,
                      runs: int = 10, seed: int = 0):
    """Repeated k-fold evaluation of a fixed-hyperplane piecewise model.

    The hyperplane and threshold stay fixed across folds (they are part of
    the model under evaluation); each training fold is split by them and the
    two sub-predictors are refit.  Returns the combined report plus one
    report per side, the side ones scored on that side's renormalized scale.
    """
    from hpsplit import splitter  # local import; splitter builds on this module

    if len(ds) < 2 * k:
        raise InputError(f"{len(ds)} rows is too few for {k}-fold evaluation")
    combined, sub1, sub2 = [], [], []
    undefined = [0, 0, 0]
    failures = 0
    for run in range(runs):
        folds = kfold_partition(len(ds), k, seed + run)
        for fold in folds:
            mask = np.ones(len(ds), dtype=bool)
            mask[fold] = False
            train = ds.subset(np.nonzero(mask)[0])
            try:
                fold_model = splitter.train_split_model(
                    train, splitter.resplit(train, model), side_specs, seed=seed)
            except ToolkitError as exc:
                failures += 1
                log.warning("skipping fold: %s", exc)
                combined.append(math.nan)
                sub1.append(math.nan)
                sub2.append(math.nan)
                continue
            preds = splitter.predict_split(fold_model, ds.features[fold])
            try:
                combined.append(r_squared(preds, ds.targets[fold]))
            except UndefinedMetricError:
                undefined[0] += 1
                combined.append(math.nan)
            side = splitter.side_of(fold_model.hyperplane, ds.features[fold])
            for s, collect in ((0, sub1), (1, sub2)):
                rows = np.nonzero(side == s)[0]
                lo, hi = fold_model.sub_ranges[s]
                if rows.size == 0 or hi <= lo:
                    undefined[s + 1] += 1
                    collect.append(math.nan)
                    continue
                raw = splitter.sub_model_outputs(fold_model, s, ds.features[fold][rows])
                scaled_targets = (ds.targets[fold][rows] - lo) / (hi - lo)
                try:
                    collect.append(r_squared(raw, scaled_targets))
                except UndefinedMetricError:
                    undefined[s + 1] += 1
                    collect.append(math.nan)
    labels = (f"hps[{side_specs[0].label()}|{side_specs[1].label()}]",
              f"side1[{side_specs[0].label()}]", f"side2[{side_specs[1].label()}]")
    reports = []
    for i, (label, scores) in enumerate(zip(labels, (combined, sub1, sub2))):
        reports.append(CVReport(label, tuple(scores), k, runs, seed,
                                undefined[i], failures))
    return tuple(reports)


def load_external_scores(path, label: str, k: int = 5, runs: int = 10,
                         seed: int = 0) -> CVReport:
    """Ingest fold scores produced by an outside predictor for comparison.

    The CSV needs a header ``run,fold,score``; this is the plug-in point for
    learners this package does not train itself (e.g. neural networks).
    """
    scores = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header[:3] != ["run", "fold", "score"]:
            raise InputError(f"{path}: expected header run,fold,score")
        for line in fh:
            if not line.strip():
                continue
            _, _, cell = line.strip().split(",")[:3]
            scores.append(float(cell) if cell not in ("", "nan") else math.nan)
    if not scores:
        raise InputError(f"{path}: no scores found")
    return CVReport(label, tuple(scores), k, runs, seed)


def comparison_table(reports, split_info: dict | None = None) -> str:
    """Human-readable side-by-side table of method medians.

    ``split_info`` (from a trained piecewise model) adds the threshold, the
    per-side target extremes, the subset sizes, and per-side medians.
    """
    lines = [f"{'method':<28} {'median R^2':>10}  {'scores':>6}  {'undef':>5}"]
    for rep in reports:
        lines.append(f"{rep.method:<28} {rep.median:>10.3f}  "
                     f"{len(rep.scores):>6}  {rep.undefined:>5}")
    if split_info:
        lines.append("")
        lines.append(f"theta={split_info['theta']:.2f}  "
                     f"a_max(1)={split_info['a_max_1']:.3f}  "
                     f"a_min(2)={split_info['a_min_2']:.3f}  "
                     f"sizes={split_info['size_1']}/{split_info['size_2']}")
        if "side_medians" in split_info:
            m1, m2 = split_info["side_medians"]
            lines.append(f"side-1 {split_info['side_methods'][0]}: {m1:.3f}   "
                         f"side-2 {split_info['side_methods'][1]}: {m2:.3f}")
    return "\n".join(lines)


def report_to_csv(reports, path) -> None:
    """Write every fold score of every report plus a median row per method."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("method,run,fold,score\n")
        for rep in reports:
            for run, fold, score in rep.rows():
                cell = "nan" if math.isnan(score) else repr(score)
                fh.write(f"{rep.method},{run},{fold},{cell}\n")
        for rep in reports:
            fh.write(f"{rep.method},median,,{rep.median!r}\n")
