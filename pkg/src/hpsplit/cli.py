"""Command-line pipeline: extract, train, scan, evaluate, predict, validate.

Exit codes: 0 success (rule violations found by the validators count as
success, with the finding count in the output), 1 domain error, 2 usage
error.  All randomness is governed by --seed (default from HPSPLIT_SEED);
identical invocations produce byte-identical outputs.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from hpsplit import chemgraph, evaluation, splitter
from hpsplit.dataset import (apply_log_transform, denormalize_target,
                             load_table, normalize, normalize_features,
                             save_table)
from hpsplit.errors import ToolkitError
from hpsplit.evaluation import MethodSpec
from hpsplit import specvalidator

METHODS = ("mlr", "lasso", "alr", "rlr", "hps")


def default_seed() -> int:
    return int(os.environ.get("HPSPLIT_SEED", "0"))


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="hpsplit",
        description="Piecewise property prediction by hyperplane data splitting")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="turn chemical graphs into a descriptor table")
    p.add_argument("--graphs", required=True, help="graph file (V/E line format)")
    p.add_argument("--output", required=True, help="descriptor CSV to write")
    p.add_argument("--targets", help="CSV with header id,target; row i pairs "
                                     "with graph i")
    p.add_argument("--config", help="reuse a saved descriptor config (JSON)")
    p.add_argument("--save-config", help="write the descriptor config JSON here")
    p.add_argument("--rho", type=int, default=2, help="branch parameter (default 2)")
    p.add_argument("--keep-inadmissible", action="store_true",
                   help="skip the admissibility filter")

    p = sub.add_parser("train", help="fit a model and write it as JSON")
    _data_flags(p)
    p.add_argument("--output", required=True, help="model JSON to write")
    p.add_argument("--method", choices=METHODS, default="hps")
    p.add_argument("--theta", type=float, help="split threshold; omit to scan")
    _scan_flags(p)
    _method_flags(p)
    p.add_argument("--seed", type=int, default=default_seed())

    p = sub.add_parser("scan", help="print the threshold scan table")
    _data_flags(p)
    _scan_flags(p)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("evaluate", help="repeated k-fold evaluation of a method")
    _data_flags(p)
    p.add_argument("--method", choices=METHODS, default="hps")
    p.add_argument("--theta", type=float, help="split threshold for hps; "
                                               "omit to scan")
    _scan_flags(p)
    _method_flags(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=default_seed())
    p.add_argument("--jobs", type=int, default=1,
                   help="accepted for symmetry; evaluation is sequential "
                        "for bit-reproducibility")
    p.add_argument("--external", action="append", default=[],
                   metavar="LABEL=SCORES.CSV",
                   help="ingest outside fold scores (run,fold,score) for the table")
    p.add_argument("--report", help="write every fold score to this CSV")

    p = sub.add_parser("predict", help="apply a model to a descriptor table")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="descriptor CSV (target column "
                                                 "may be zeros)")
    p.add_argument("--output", required=True, help="prediction CSV to write")

    p = sub.add_parser("emit-constraint",
                       help="side-selection records for an inverse pipeline")
    p.add_argument("--model", required=True)
    p.add_argument("--lo", type=float, required=True, help="target interval low end")
    p.add_argument("--hi", type=float, required=True, help="target interval high end")
    p.add_argument("--output", help="write records JSON here (default stdout)")

    p = sub.add_parser("validate-spec", help="check a target specification file")
    p.add_argument("--spec", required=True)

    p = sub.add_parser("check-extension",
                       help="verify or search a witness for a specification")
    p.add_argument("--graph", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--witness", help="witness JSON; omit with --find to search")
    p.add_argument("--find", action="store_true", help="search for a witness")
    p.add_argument("--output", help="write the report/witness JSON here")
    return top


def _data_flags(p):
    p.add_argument("--data", required=True, help="descriptor CSV (id,target,...)")
    p.add_argument("--log", action="store_true",
                   help="model log(target + offset) instead of the raw target")
    p.add_argument("--log-offset", type=float, default=0.0)


def _scan_flags(p):
    p.add_argument("--grid", default="0.05:0.95:0.05",
                   metavar="LO:HI:STEP", help="threshold grid (default 0.05 steps)")
    p.add_argument("--min-fraction", type=float,
                   default=splitter.DEFAULT_MIN_FRACTION,
                   help="smallest acceptable side, as a fraction of the data")


def _method_flags(p):
    p.add_argument("--side-methods", default="auto,auto",
                   metavar="M1,M2", help="per-side learners for hps "
                                         "(mlr/lasso/alr/rlr/auto)")
    p.add_argument("--lam", type=float, help="penalty for lasso/alr")
    p.add_argument("--budget", type=int, help="descriptor budget for rlr")


def _parse_grid(text: str) -> list[float]:
    lo, hi, step = (float(t) for t in text.split(":"))
    out = []
    x = lo
    while x <= hi + 1e-12:
        out.append(round(x, 10))
        x += step
    return out


def _load_normalized(args):
    ds = load_table(args.data)
    offset = None
    if args.log or args.log_offset:
        offset = args.log_offset
        ds = apply_log_transform(ds, offset)
    return normalize(ds, log_offset=offset)


def _method_spec(name: str, args) -> MethodSpec:
    return MethodSpec(name, lam=args.lam, budget=args.budget)


def _side_specs(args):
    sides = args.side_methods.split(",")
    if len(sides) != 2:
        raise ToolkitError("--side-methods needs two comma-separated entries")
    return tuple("auto" if s == "auto" else _method_spec(s, args) for s in sides)


def _pick_split(ds, args, out=sys.stdout):
    if args.theta is not None:
        return splitter.find_hyperplane(ds, args.theta)
    scan = splitter.scan_thresholds(ds, _parse_grid(args.grid),
                                    args.min_fraction)
    _print_scan(scan, out)
    return scan.best


def _print_scan(scan, out):
    out.write(f"{'theta':>6} {'gap':>10} {'size1':>6} {'size2':>6}\n")
    for row in scan.rows:
        gap = "   (empty)" if math.isnan(row.gap) else f"{row.gap:>10.6f}"
        out.write(f"{row.theta:>6.2f} {gap} {row.size_1:>6} {row.size_2:>6}\n")
    out.write(f"selected theta={scan.best.theta:.2f}"
              f"{'' if scan.size_constrained else '  (size floor not met)'}\n")


def cmd_extract(args) -> int:
    with open(args.graphs, encoding="utf-8") as fh:
        graphs = chemgraph.parse_graphs(fh.read())
    ids = [f"g{i + 1}" for i in range(len(graphs))]
    targets = [0.0] * len(graphs)
    if args.targets:
        with open(args.targets, encoding="utf-8") as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
        if lines[0].split(",")[:2] != ["id", "target"]:
            raise ToolkitError("targets CSV needs the header id,target")
        rows = [ln.split(",") for ln in lines[1:]]
        if len(rows) != len(graphs):
            raise ToolkitError(f"{len(rows)} target rows for {len(graphs)} graphs")
        ids = [r[0] for r in rows]
        targets = []
        for lineno, r in enumerate(rows, start=2):
            try:
                targets.append(float(r[1]))
            except (ValueError, IndexError):
                raise ToolkitError(f"{args.targets}:{lineno}: bad target value "
                                   f"for {r[0]!r}") from None
    if not args.keep_inadmissible:
        kept, rejected = chemgraph.filter_admissible(graphs)
        for i, reason in rejected:
            print(f"rejected graph {i + 1} ({ids[i]}): {reason}", file=sys.stderr)
        keep_idx = [i for i in range(len(graphs))
                    if i not in {j for j, _ in rejected}]
        graphs = kept
        ids = [ids[i] for i in keep_idx]
        targets = [targets[i] for i in keep_idx]
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            config = chemgraph.DescriptorConfig.from_json(json.load(fh))
    else:
        config = chemgraph.build_config(graphs, rho=args.rho)
    ds = chemgraph.extract_features(graphs, config, ids=ids, targets=targets)
    save_table(ds, args.output)
    if args.save_config:
        with open(args.save_config, "w", encoding="utf-8") as fh:
            json.dump(config.to_json(), fh, indent=1)
            fh.write("\n")
    print(f"wrote {len(ds)} rows x {ds.num_descriptors} descriptors to {args.output}")
    return 0


def cmd_train(args) -> int:
    ds, rec = _load_normalized(args)
    if args.method == "hps":
        split = _pick_split(ds, args)
        model = splitter.train_split_model(ds, split, _side_specs(args),
                                           seed=args.seed)
        print(f"theta={model.theta:.2f}  a_max(1)={split.a_max_1:.3f}  "
              f"a_min(2)={split.a_min_2:.3f}  "
              f"sizes={len(split.subset1_ids)}/{len(split.subset2_ids)}")
        print(f"side methods: {model.sub_models[0].method} / "
              f"{model.sub_models[1].method}")
    else:
        fitted = evaluation.fit_method(ds, _method_spec(args.method, args))
        model = splitter.single_model_as_split(fitted)
        print(f"fit {fitted.method} over {ds.num_descriptors} descriptors")
    model = splitter.with_normalization(model, rec)
    splitter.save_split_model(model, args.output)
    print(f"model written to {args.output}")
    return 0


def cmd_scan(args) -> int:
    ds, _ = _load_normalized(args)
    scan = splitter.scan_thresholds(ds, _parse_grid(args.grid),
                                    args.min_fraction, jobs=args.jobs)
    _print_scan(scan, sys.stdout)
    return 0


def cmd_evaluate(args) -> int:
    ds, _ = _load_normalized(args)
    reports = []
    split_info = None
    if args.method == "hps":
        split = _pick_split(ds, args)
        model = splitter.train_split_model(ds, split, _side_specs(args),
                                           seed=args.seed)
        side_specs = tuple(
            MethodSpec(m.method, lam=m.metadata.get("lambda"),
                       budget=m.metadata.get("budget"))
            if m.method != "constant" else MethodSpec("mlr")
            for m in model.sub_models)
        combined, sub1, sub2 = evaluation.evaluate_split_cv(
            ds, model, side_specs, k=args.folds, runs=args.runs, seed=args.seed)
        reports += [combined, sub1, sub2]
        split_info = {"theta": model.theta, "a_max_1": split.a_max_1,
                      "a_min_2": split.a_min_2,
                      "size_1": len(split.subset1_ids),
                      "size_2": len(split.subset2_ids),
                      "side_methods": (model.sub_models[0].method,
                                       model.sub_models[1].method),
                      "side_medians": (sub1.median, sub2.median)}
    else:
        reports.append(evaluation.cross_validate(
            ds, _method_spec(args.method, args), k=args.folds,
            runs=args.runs, seed=args.seed))
    for item in args.external:
        label, _, path = item.partition("=")
        reports.append(evaluation.load_external_scores(
            path, label, k=args.folds, runs=args.runs, seed=args.seed))
    print(evaluation.comparison_table(reports, split_info))
    print(f"scores per method: {args.runs} runs x {args.folds} folds = "
          f"{args.runs * args.folds}")
    if args.report:
        evaluation.report_to_csv(reports, args.report)
        print(f"fold scores written to {args.report}")
    return 0


def cmd_predict(args) -> int:
    model = splitter.load_split_model(args.model)
    if model.normalization is None:
        raise ToolkitError("model file carries no normalization record")
    ds = load_table(args.data)
    X = normalize_features(ds.features, model.normalization)
    preds = np.atleast_1d(splitter.predict_split(model, X))
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        fh.write("id,prediction_normalized,prediction\n")
        for cid, p in zip(ds.ids, preds):
            orig = denormalize_target(float(p), model.normalization)
            fh.write(f"{cid},{float(p)!r},{orig!r}\n")
    print(f"wrote {len(ds)} predictions to {args.output}")
    return 0


def cmd_emit_constraint(args) -> int:
    model = splitter.load_split_model(args.model)
    records = splitter.emit_phase2_constraint(model, args.lo, args.hi)
    text = json.dumps(records, indent=1) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"{len(records)} constraint record(s) written to {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_validate_spec(args) -> int:
    with open(args.spec, encoding="utf-8") as fh:
        spec = specvalidator.parse_specification(fh.read())
    problems = specvalidator.validate_specification(spec)
    for p in problems:
        print(p)
    print(f"findings: {len(problems)}")
    return 0


def cmd_check_extension(args) -> int:
    with open(args.graph, encoding="utf-8") as fh:
        graphs = chemgraph.parse_graphs(fh.read())
    if len(graphs) != 1:
        raise ToolkitError(f"expected one graph, found {len(graphs)}")
    with open(args.spec, encoding="utf-8") as fh:
        spec = specvalidator.parse_specification(fh.read())
    g = graphs[0]
    if args.find:
        witness = specvalidator.find_embedding(g, spec)
        if witness is None:
            print("no witness found: the graph is not an extension of the seed")
            return 0
        doc = witness.to_json()
        doc["confirmed"] = True
        text = json.dumps(doc, indent=1) + "\n"
        if args.output:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text)
        print("extension confirmed (witness found)")
        if args.output:
            print(f"witness written to {args.output}")
        return 0
    if not args.witness:
        raise ToolkitError("either --witness or --find is required")
    with open(args.witness, encoding="utf-8") as fh:
        witness = specvalidator.ExtensionWitness.from_json(json.load(fh))
    report = specvalidator.check_extension(g, spec, witness)
    sys.stdout.write(report.to_text())
    print(f"findings: {len(report.violations)}")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, indent=1)
            fh.write("\n")
    return 0


COMMANDS = {
    "extract": cmd_extract,
    "train": cmd_train,
    "scan": cmd_scan,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "emit-constraint": cmd_emit_constraint,
    "validate-spec": cmd_validate_spec,
    "check-extension": cmd_check_extension,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"hpsplit: file not found: {exc.filename}", file=sys.stderr)
        return 2
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
