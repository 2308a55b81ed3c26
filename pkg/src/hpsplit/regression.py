"""Single-set learners returning linear predictors over a descriptor subset.

Four methods are available:

* ``mlr``   -- ordinary least squares over all descriptors.
* ``lasso`` -- L1-penalized least squares; zero-weight descriptors dropped.
* ``alr``   -- adjustive linear regression: a linear program fits monotone
  quadratic expansions of both the target and the descriptors, then a linear
  predictor is recovered from the expansion weights by a sign rule driven by
  each descriptor's correlation with the target.
* ``rlr``   -- quadratic descriptor augmentation (pairwise products and
  complement-products), greedy reduction to a budget, then least squares on
  the survivors.

All fits assume features and targets normalized to [0, 1] and are
deterministic for a fixed input; ties break toward the lowest descriptor
index.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hpsplit.dataset import DataSet
from hpsplit.errors import InputError
from hpsplit.lp import (Constraint, LinearProgram, LPStatus, lasso_fit,
                        least_squares, solve_lp)
from hpsplit.errors import SolverFailure

ALR_DEFAULT_LAMBDA = 0.01
ALR_LAMBDA_GRID = (0.0, 1e-3, 1e-2, 1e-1)
QUADRATIC_COLUMN_CAP = 200_000
REDUCE_MIN_CORR = 0.01
REDUCE_DUP_CORR = 0.95


@dataclass(frozen=True)
class Hyperplane:
    """A weight vector and offset; predicts w.x + b and splits by sign of w.x - b."""

    w: np.ndarray
    b: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))


@dataclass(frozen=True)
class LinearRef:
    """A linear descriptor, identified by its 1-based column and its name."""

    index: int
    name: str = ""

    def __post_init__(self):
        if self.index < 1:
            raise InputError(f"linear descriptor index must be >= 1, got {self.index}")

    def key(self) -> str:
        return self.name or f"x({self.index})"


@dataclass(frozen=True)
class QuadraticTag:
    """A quadratic descriptor over two linear columns (1-based indices).

    kind "prod" is x(i)*x(j) with i <= j; "prod_compl" is x(i)*(1-x(j)) for
    any ordered pair, including i == j.
    """

    kind: str
    i: int
    j: int

    def __post_init__(self):
        if self.kind not in ("prod", "prod_compl"):
            raise InputError(f"unknown quadratic kind {self.kind!r}")
        if self.i < 1 or self.j < 1:
            raise InputError("quadratic tag indices are 1-based")
        if self.kind == "prod" and self.i > self.j:
            raise InputError("prod tags require i <= j")

    def key(self) -> str:
        return f"{self.kind}({self.i},{self.j})"


DescriptorRef = LinearRef | QuadraticTag


@dataclass(frozen=True)
class LinearModel:
    hyperplane: Hyperplane
    descriptor_subset: tuple[DescriptorRef, ...]
    method: str
    input_dim: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.descriptor_subset) != self.hyperplane.w.size:
            raise InputError("descriptor subset does not match weight length")
        for ref in self.descriptor_subset:
            hi = ref.index if isinstance(ref, LinearRef) else max(ref.i, ref.j)
            if hi > self.input_dim:
                raise InputError(f"descriptor {ref.key()} exceeds input dimension "
                                 f"{self.input_dim}")


def design_columns(refs, X: np.ndarray) -> np.ndarray:
    """Expand descriptor references over full-dimension feature rows."""
    cols = []
    for ref in refs:
        if isinstance(ref, LinearRef):
            cols.append(X[:, ref.index - 1])
        elif ref.kind == "prod":
            cols.append(X[:, ref.i - 1] * X[:, ref.j - 1])
        else:
            cols.append(X[:, ref.i - 1] * (1.0 - X[:, ref.j - 1]))
    if not cols:
        return np.zeros((X.shape[0], 0))
    return np.column_stack(cols)


def predict(model: LinearModel, x) -> float | np.ndarray:
    """Evaluate the model on one feature vector or a stack of them.

    ``x`` must have the full linear dimension the model was trained against;
    quadratic tags are expanded internally.
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    rows = arr[None, :] if single else arr
    if rows.shape[1] != model.input_dim:
        raise InputError(f"feature vector has {rows.shape[1]} entries, "
                         f"model expects {model.input_dim}")
    out = design_columns(model.descriptor_subset, rows) @ model.hyperplane.w \
        + model.hyperplane.b
    return float(out[0]) if single else out


def _linear_refs(ds: DataSet) -> tuple[LinearRef, ...]:
    return tuple(LinearRef(i + 1, name) for i, name in enumerate(ds.descriptor_names))


def fit_mlr(ds: DataSet) -> LinearModel:
    """Least squares over every descriptor."""
    w, b = least_squares(ds.features, ds.targets)
    return LinearModel(Hyperplane(w, b), _linear_refs(ds), "mlr", ds.num_descriptors)


def fit_lasso(ds: DataSet, lam: float) -> LinearModel:
    """L1-penalized least squares; descriptors with zero weight are dropped."""
    w, b = lasso_fit(ds.features, ds.targets, lam)
    refs = _linear_refs(ds)
    keep = [i for i in range(w.size) if w[i] != 0.0]
    return LinearModel(Hyperplane(w[keep], b),
                       tuple(refs[i] for i in keep), "lasso",
                       ds.num_descriptors, {"lambda": lam})


# --- adjustive linear regression ------------------------------------------

# tiny secondary cost on the quadratic expansion mass: among exact alternate
# optima it selects the one with the largest linear share, which keeps the
# weight-recovery step well-posed; it perturbs the optimum by < 1e-9 * mass
ALR_TIE_BREAK = 1e-9


@dataclass(frozen=True)
class AdjustiveSolution:
    c: np.ndarray        # target expansion weights, sum to 1
    w0: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    b: float
    objective: float     # mean-absolute-deviation + lambda * penalty


def correlation_signs(X: np.ndarray, a: np.ndarray) -> np.ndarray:
    """+1 where a descriptor correlates nonnegatively with the target, else -1.

    Zero-variance columns get correlation 0 and land on the +1 side.
    """
    xc = X - X.mean(axis=0)
    ac = a - a.mean()
    denom = np.sqrt((xc * xc).sum(axis=0) * (ac * ac).sum())
    corr = np.zeros(X.shape[1])
    nz = denom > 0
    corr[nz] = (xc.T @ ac)[nz] / denom[nz]
    return np.where(corr >= 0.0, 1.0, -1.0)


def solve_adjustive_lp(X: np.ndarray, a: np.ndarray, lam: float) -> AdjustiveSolution:
    """Set up and solve the adjustive-regression LP.

    Expansion bases: g0(t) = t, g1(t) = t^2, g2(t) = 1 - (t-1)^2.  For the
    target the three weights are constrained to sum to 1; descriptor
    expansions enter with the sign of the descriptor's target correlation.
    The absolute deviations and |b| are linearized with one nonnegative
    auxiliary each; the penalty is lam * (sum of linear descriptor weights
    + |b|).
    """
    m, k = X.shape
    signs = correlation_signs(X, a)
    ga = np.column_stack([a, a ** 2, 1.0 - (a - 1.0) ** 2])
    gx = [X, X ** 2, 1.0 - (X - 1.0) ** 2]

    # variable order: c(3) | w0(k) | w1(k) | w2(k) | b | e(m) | t_b
    n = 3 + 3 * k + 1 + m + 1
    b_col = 3 + 3 * k
    e0 = b_col + 1
    tb = n - 1

    obj = np.zeros(n)
    obj[e0:e0 + m] = 1.0 / (2 * m)
    obj[3:3 + k] = lam
    obj[tb] = lam
    obj[1:3] += ALR_TIE_BREAK
    obj[3 + k:3 + 3 * k] += ALR_TIE_BREAK

    cons = []
    base = np.zeros(n)
    base[0:3] = 1.0
    cons.append(Constraint(base, "=", 1.0))
    for i in range(m):
        row = np.zeros(n)
        row[0:3] = ga[i]
        for q in range(3):
            row[3 + q * k:3 + (q + 1) * k] = -signs * gx[q][i]
        row[b_col] = -1.0
        row[e0 + i] = -1.0
        cons.append(Constraint(row, "<=", 0.0))
        neg = -row.copy()
        neg[e0 + i] = -1.0
        cons.append(Constraint(neg, "<=", 0.0))
    row = np.zeros(n)
    row[b_col], row[tb] = 1.0, -1.0
    cons.append(Constraint(row, "<=", 0.0))
    row = np.zeros(n)
    row[b_col], row[tb] = -1.0, -1.0
    cons.append(Constraint(row, "<=", 0.0))

    bounds = [(0.0, np.inf)] * n
    bounds[b_col] = (-np.inf, np.inf)
    sol = solve_lp(LinearProgram(obj, cons, bounds))
    if sol.status is not LPStatus.OPTIMAL:
        raise SolverFailure(f"adjustive-regression LP ended {sol.status.value}")
    z = sol.values
    c = z[0:3]
    w0, w1, w2 = (z[3 + q * k:3 + (q + 1) * k] for q in range(3))
    b = float(z[b_col])
    expr = ga @ c - sum(gx[q] * (signs * (w0, w1, w2)[q]) for q in range(3)).sum(axis=1) - b
    objective = float(np.abs(expr).sum() / (2 * m) + lam * (w0.sum() + abs(b)))
    return AdjustiveSolution(c, w0, w1, w2, b, objective)


def fit_alr(ds: DataSet, lam: float = ALR_DEFAULT_LAMBDA) -> LinearModel:
    """Adjustive linear regression: expansion LP plus sign-rule recovery.

    Descriptors whose linear expansion weight is zero get weight zero; the
    rest get w0/(w0+w1+w2), negated on the negatively-correlated side.  The
    offset is taken from the LP optimum unchanged.
    """
    if lam < 0:
        raise InputError(f"penalty must be nonnegative, got {lam}")
    if float(ds.targets.max() - ds.targets.min()) == 0.0:
        raise InputError("adjustive regression on an all-constant target")
    sol = solve_adjustive_lp(ds.features, ds.targets, lam)
    signs = correlation_signs(ds.features, ds.targets)
    denom = sol.w0 + sol.w1 + sol.w2
    active = sol.w0 > 1e-9
    w = np.zeros(ds.num_descriptors)
    w[active] = signs[active] * sol.w0[active] / denom[active]
    return LinearModel(Hyperplane(w, sol.b), _linear_refs(ds), "alr",
                       ds.num_descriptors,
                       {"lambda": lam, "lp_objective": sol.objective})


# --- quadratic augmentation and reduction ----------------------------------

def quadratic_refs(k1: int) -> tuple[QuadraticTag, ...]:
    """All quadratic tags for k1 linear descriptors, in fixed column order:
    products x(i)x(j) for i <= j, then complement-products x(i)(1-x(j)) for
    every ordered pair including i == j.  That is (3*k1^2 + k1)/2 tags."""
    prods = tuple(QuadraticTag("prod", i, j)
                  for i in range(1, k1 + 1) for j in range(i, k1 + 1))
    compls = tuple(QuadraticTag("prod_compl", i, j)
                   for i in range(1, k1 + 1) for j in range(1, k1 + 1))
    return prods + compls


def augment_quadratic(ds: DataSet, cap: int = QUADRATIC_COLUMN_CAP) -> DataSet:
    """Append every quadratic descriptor column to a normalized data set."""
    k1 = ds.num_descriptors
    if k1 < 1:
        raise InputError("no descriptors to augment")
    added = (3 * k1 * k1 + k1) // 2
    if added > cap:
        raise InputError(f"quadratic augmentation would add {added} columns, "
                         f"over the cap of {cap}")
    tags = quadratic_refs(k1)
    cols = design_columns(tags, ds.features)
    names = ds.descriptor_names + tuple(
        _quadratic_name(t, ds.descriptor_names) for t in tags)
    return DataSet(ds.ids, np.hstack([ds.features, cols]), ds.targets, names)


def _quadratic_name(tag: QuadraticTag, names) -> str:
    a, b = names[tag.i - 1], names[tag.j - 1]
    return f"{a}*{b}" if tag.kind == "prod" else f"{a}*(1-{b})"


def reduce_descriptors(ds: DataSet, budget: int) -> list[int]:
    """Greedy forward selection of at most ``budget`` descriptor columns.

    Repeatedly picks the column most correlated (in absolute value) with the
    residual of a least-squares fit on the columns chosen so far.  Stops
    early when the best correlation falls below 0.01; columns correlated
    above 0.95 with an already-chosen one are skipped.  Deterministic; ties
    go to the lowest index.
    """
    if budget < 1:
        raise InputError(f"descriptor budget must be >= 1, got {budget}")
    if len(ds) == 0:
        raise InputError("empty data set")
    X = ds.features
    n, k = X.shape
    xc = X - X.mean(axis=0)
    norms = np.sqrt((xc * xc).sum(axis=0))
    usable = norms > 0

    selected: list[int] = []
    residual = ds.targets - ds.targets.mean()
    while len(selected) < min(budget, int(usable.sum())):
        rc = residual - residual.mean()
        rnorm = np.sqrt(rc @ rc)
        if rnorm == 0.0:
            break
        corr = np.zeros(k)
        corr[usable] = (xc[:, usable].T @ rc) / (norms[usable] * rnorm)
        corr[selected] = 0.0
        order = np.argsort(-np.abs(corr), kind="stable")
        pick = -1
        for j in order:
            if abs(corr[j]) < REDUCE_MIN_CORR:
                break
            if j in selected or not usable[j]:
                continue
            dup = False
            for s in selected:
                pc = (xc[:, j] @ xc[:, s]) / (norms[j] * norms[s])
                if abs(pc) > REDUCE_DUP_CORR:
                    dup = True
                    break
            if not dup:
                pick = int(j)
                break
        if pick < 0:
            break
        selected.append(pick)
        w, b = least_squares(X[:, selected], ds.targets)
        residual = ds.targets - X[:, selected] @ w - b
    return selected


def fit_rlr(ds: DataSet, budget: int) -> LinearModel:
    """Quadratic augmentation, reduction to ``budget`` columns, least squares."""
    if budget < 1:
        raise InputError(f"descriptor budget must be >= 1, got {budget}")
    k1 = ds.num_descriptors
    aug = augment_quadratic(ds)
    idx = reduce_descriptors(aug, budget)
    refs = _linear_refs(ds) + quadratic_refs(k1)
    chosen = tuple(refs[i] for i in idx)
    if idx:
        w, b = least_squares(aug.features[:, idx], ds.targets)
    else:
        w, b = np.zeros(0), float(ds.targets.mean())
    return LinearModel(Hyperplane(w, b), chosen, "rlr", k1, {"budget": budget})
