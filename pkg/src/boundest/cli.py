"""Command-line entry point.

Exit codes: 0 success, 2 invalid flags, 3 missing input artifact,
4 estimator/instance schema mismatch.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .cop import InstanceError, load_instance, post_boundary_constraint, serialize_instance
from .estimators import (GTB, KINDS, SHIFTED, SQUARED, LabelShift,
                         LossSpec, UnsupportedCombination, estimate, is_admissible,
                         load_estimator, save_estimator, train_arrays)
from .features import MINMAX, STANDARDIZE, FeatureSchemaError, RecipeError, fit_recipe_maps
from .generators import FAMILIES, LEQ_MAX, MAX_OF, GenerationError, GenSpec, generate_batch
from .metrics import (LAMBDA_GRID, NODES, TIME, InstanceRecord, ModelConfig,
                      dumps_report, estimation_metrics, fixed_boundary, fmt, format_table,
                      lambda_sweep, mad, median, solver_comparison, sweep_rows_json,
                      sweep_table)
from .pipeline import (BOTH, NONE, TEST, TRAIN, UPPER, DEV, build_corpus, load_dataset,
                       save_dataset, solve_bounded, solve_with_bion, split_dataset)
from .solver import OPTIMAL, SolverConfig, solve

log = logging.getLogger("boundest")

EXIT_OK, EXIT_USAGE, EXIT_MISSING, EXIT_SCHEMA = 0, 2, 3, 4
REPORT_DIR_ENV = "BOUNDEST_REPORT_DIR"


class CliError(Exception):
    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


def _range(text: str) -> tuple[int, int]:
    try:
        parts = [int(p) for p in text.split(":")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or LO:HI, got {text!r}") from None
    if len(parts) == 1:
        return parts[0], parts[0]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected N or LO:HI, got {text!r}")
    return parts[0], parts[1]


def _floats(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _need(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise CliError(EXIT_MISSING, f"missing input: {p}")
    return p


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _solver_config(args) -> SolverConfig:
    return SolverConfig(time_limit=args.time_limit, node_limit=args.node_limit, seed=args.solver_seed)


def _outcome_json(out, wall: bool) -> dict:
    doc = {
        "verdict": out.verdict,
        "best_objective": out.best_objective,
        "assignment": dict(sorted(out.assignment.items())) if out.assignment else None,
        "nodes_explored": out.nodes_explored,
        "solution_log": [{"nodes": r.nodes, "objective": r.objective,
                          **({"time": r.time} if wall else {})} for r in out.solution_log],
    }
    if wall:
        doc["wall_time"] = out.wall_time
    return doc


# -- subcommands ----------------------------------------------------------------

def cmd_generate(args) -> int:
    fields = {}
    if args.spec_file:
        fields.update(json.loads(_need(args.spec_file).read_text()))
    for name in ("items", "capacity", "weights", "jobs", "machines", "durations"):
        value = getattr(args, name)
        if value is not None:
            fields[name] = list(value)
    if args.family:
        fields["family"] = args.family
    if args.formulation:
        fields["formulation"] = args.formulation
    fields["seed"] = args.seed
    try:
        spec = GenSpec.from_dict(fields)
        batch = generate_batch(spec, args.count)
    except GenerationError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, m in enumerate(batch):
        (out / f"{i:04d}-{m.name}.json").write_bytes(serialize_instance(m))
    print(f"wrote {len(batch)} instances to {out}")
    return EXIT_OK


def _instance_files(paths) -> list[Path]:
    files = []
    for p in map(_need, paths):
        files += sorted(p.glob("*.json")) if p.is_dir() else [p]
    return files


def cmd_corpus(args) -> int:
    files = _instance_files(args.instances)
    if not files:
        raise CliError(EXIT_MISSING, "no instance files found")
    instances = [load_instance(f) for f in files]
    d = build_corpus(instances, _solver_config(args), jobs=args.jobs, sources=[str(f) for f in files])
    d = split_dataset(d, args.fractions, seed=args.seed)
    save_dataset(d, args.out)
    dropped = len(instances) - len(d)
    print(f"corpus: {len(d)} entries ({dropped} excluded) -> {args.out}")
    return EXIT_OK


def _loss(args) -> LossSpec:
    return LossSpec(SHIFTED, args.a) if args.loss == "shifted" else LossSpec(SQUARED)


def _hyperparams(pairs) -> dict:
    hp = {}
    for pair in pairs or []:
        key, _, value = pair.partition("=")
        hp[key] = json.loads(value)
    return hp


def _train_from_dataset(d, args, splits=(TRAIN,)):
    idx = [i for i, s in enumerate(d.split) if s in splits]
    if len(idx) < 2:
        raise CliError(EXIT_USAGE, f"need at least two corpus entries in splits {splits}")
    maps, y, lb, ub = d.arrays(idx)
    try:
        recipe = fit_recipe_maps(maps, args.scaling)
        e = train_arrays(args.kind, recipe.matrix(maps), y, lb, ub, _loss(args),
                         LabelShift(args.lam), _hyperparams(args.param), recipe, args.seed)
    except (UnsupportedCombination, RecipeError, ValueError) as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    e.meta = {"training_entries": len(idx), "splits": list(splits)}
    return e


def cmd_train(args) -> int:
    d = load_dataset(_need(args.corpus))
    splits = (TRAIN, DEV) if args.include_dev else (TRAIN,)
    e = _train_from_dataset(d, args, splits)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_estimator(e, args.out)
    print(f"trained {args.kind} on {e.meta['training_entries']} instances -> {args.out}")
    return EXIT_OK


def _load_model(path):
    return load_estimator(_need(path))


def cmd_estimate(args) -> int:
    e = _load_model(args.model)
    m = load_instance(_need(args.instance))
    est = estimate(e, m)
    print(json.dumps({"instance": m.name, "lo": est.lo, "hi": est.hi}, sort_keys=True))
    return EXIT_OK


def cmd_solve(args) -> int:
    m = load_instance(_need(args.instance))
    cfg = _solver_config(args)
    doc: dict = {"instance": m.name, "bounds": args.bounds}
    if args.fixed_baseline:
        base = solve(m, cfg)
        if base.first is None:
            raise CliError(EXIT_USAGE, "unbounded run found no solution; fixed baseline undefined")
        z_opt = m.known_optimum if m.known_optimum is not None else (
            base.best_objective if base.verdict == OPTIMAL else None)
        if z_opt is None:
            raise CliError(EXIT_USAGE, "fixed baseline needs a known or proven optimum")
        ub = fixed_boundary(z_opt, base.first.objective)
        out = solve(post_boundary_constraint(m, m.objective_domain.lb, ub), cfg)
        doc.update({"bounds": "fixed", "fixed_upper": ub, "result": _outcome_json(out, args.wall_time),
                    "unbounded": _outcome_json(base, args.wall_time)})
    elif args.bounds == NONE:
        doc["result"] = _outcome_json(solve(m, cfg), args.wall_time)
    else:
        if not args.model:
            raise CliError(EXIT_USAGE, "--model is required unless --bounds none")
        e = _load_model(args.model)
        res = solve_with_bion(m, e, cfg, args.bounds, args.complement, not args.trust_lower)
        doc.update({"estimation": {"lo": res.estimation.lo, "hi": res.estimation.hi},
                    "fallback_used": res.fallback_used, "fallback_reason": res.fallback_reason,
                    "lower_checked": res.lower_checked, "lower_violated": res.lower_violated,
                    "result": _outcome_json(res.outcome, args.wall_time)})
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _report_dir(args) -> Path:
    return Path(args.report_dir or os.environ.get(REPORT_DIR_ENV) or "reports")


def cmd_bench(args) -> int:
    d = load_dataset(_need(args.corpus))
    cfg = _solver_config(args)
    e = _load_model(args.model) if args.model else _train_from_dataset(d, args)
    test_idx = [i for i, s in enumerate(d.split) if s == args.split]
    if not test_idx:
        raise CliError(EXIT_USAGE, f"corpus has no {args.split!r} entries")

    per_instance, comparisons = [], {"fixed": [], "upper": [], "both": []}
    est_records = []
    for i in test_idx:
        entry = d.entries[i]
        m = entry.instance
        x = e.recipe.matrix([entry.features])
        lower, upper = e.predict_bounds(x)
        est_records.append(InstanceRecord(i, entry.optimum, m.objective_domain.lb, m.objective_domain.ub,
                                          float(upper[0]), None if lower is None else float(lower[0])))
        est = estimate(e, m)
        base = solve(m, cfg)
        both = solve_bounded(m, est, cfg, BOTH, verify_lower=not args.trust_lower)
        up = solve_bounded(m, est, cfg, UPPER)
        row = {"instance": m.name, "optimum": entry.optimum, "estimation": [est.lo, est.hi],
               "admissible": is_admissible(est, entry.optimum),
               "unbounded": {"verdict": base.verdict, "first": base.first.objective if base.first else None}}
        runs = {"upper": up.outcome, "both": both.outcome}
        if base.first is not None:
            ub = fixed_boundary(entry.optimum, base.first.objective)
            runs["fixed"] = solve(post_boundary_constraint(m, m.objective_domain.lb, ub), cfg)
            row["fixed_upper"] = ub
        for name in ("fixed", "upper", "both"):
            if name not in runs:
                comparisons[name].append(None)
                row[name] = None
                continue
            c = solver_comparison(runs[name], base, args.clock)
            comparisons[name].append(c)
            row[name] = {"verdict": runs[name].verdict, "best": runs[name].best_objective,
                         "est": c.equivalent_solution_time, "qof": c.quality_of_first,
                         "ttc": c.time_to_completion}
        row["fallback"] = {"upper": up.fallback_used, "both": both.fallback_used}
        row["lower_above_optimum"] = est.lo > entry.optimum
        per_instance.append(row)

    summary = {}
    for name, cells in comparisons.items():
        summary[name] = {}
        for metric, attr in (("est", "equivalent_solution_time"), ("qof", "quality_of_first"),
                             ("ttc", "time_to_completion")):
            vals = [getattr(c, attr) if c else None for c in cells]
            summary[name][metric] = {"median": median(vals), "mad": mad(vals),
                                     "defined": sum(v is not None for v in vals), "n": len(vals)}
    em = estimation_metrics(est_records)

    lambdas = args.lambdas if args.lambdas is not None else list(LAMBDA_GRID)
    configs = [ModelConfig("GTB_s", GTB), ModelConfig("GTB_a", GTB, LossSpec(SHIFTED, -1.0))]
    sweep = lambda_sweep(d, configs, lambdas, args.folds, args.reps, args.seed) if lambdas else []

    report = {
        "clock": args.clock,
        "model": {"kind": e.kind, "loss": e.loss.to_json(), "shift": e.shift.to_json()},
        "split": args.split,
        "estimation": {"admissible_ratio": em.admissible_ratio, "gap": em.gap, "gap_mad": em.gap_mad,
                       "size": em.size, "size_mad": em.size_mad, "n": len(est_records)},
        "solver_comparison": summary,
        "lower_bound": {"verified": not args.trust_lower,
                        "above_optimum": sum(row["lower_above_optimum"] for row in per_instance)},
        "instances": per_instance,
        "lambda_sweep": sweep_rows_json(sweep),
        "notes": ["estimations are clamped into the original objective domain before Gap/Size",
                  "positive percentages mean the bounded run did better",
                  "MAD is reported raw instead of dispersion buckets"],
    }
    out_dir = _report_dir(args)
    _write(out_dir / "bench.json", dumps_report(report))

    text = [f"boundest bench ({len(test_idx)} {args.split} instances, clock={args.clock})\n",
            "\nEstimation (median, MAD in parentheses)\n",
            f"  admissible {fmt(em.admissible_ratio)} %   gap {fmt(em.gap)} ({fmt(em.gap_mad, 0)})"
            f"   size {fmt(em.size)} ({fmt(em.size_mad, 0)})\n",
            f"  lower bound above optimum on {report['lower_bound']['above_optimum']} instances"
            f" ({'searched below' if not args.trust_lower else 'not checked'})\n",
            "\nSolver comparison, median % (defined/total)\n"]
    rows = []
    for name in ("fixed", "upper", "both"):
        s = summary[name]
        rows.append([name] + [s[k]["median"] for k in ("est", "qof", "ttc")]
                    + [f"{s['est']['defined']}/{s['est']['n']}"])
    text.append(format_table(["config", "EST", "QoF", "TtC", "defined"], rows))
    if sweep:
        text.append("\nLambda sweep (cutting-bound admissibility, median over folds)\n")
        text.append(sweep_table(sweep))
    _write(out_dir / "bench.txt", "".join(text))
    print(f"reports written to {out_dir}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _add_solver_flags(p):
    p.add_argument("--time-limit", type=float, default=60.0, help="seconds per solve")
    p.add_argument("--node-limit", type=int, default=None, help="search nodes per solve")
    p.add_argument("--solver-seed", type=int, default=0, help="tie-breaking seed")


def _add_train_flags(p):
    p.add_argument("--kind", choices=KINDS, default=GTB)
    p.add_argument("--loss", choices=("squared", "shifted"), default="shifted")
    p.add_argument("--a", type=float, default=-1.0, help="shift parameter of the shifted loss")
    p.add_argument("--lambda", dest="lam", type=float, default=0.2, help="label shift factor")
    p.add_argument("--scaling", choices=(STANDARDIZE, MINMAX), default=STANDARDIZE)
    p.add_argument("--param", action="append", metavar="KEY=JSON", help="model hyperparameter")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boundest", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate instance files")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--spec-file", help="JSON generator spec; flags override it")
    for name in ("items", "capacity", "weights", "jobs", "machines", "durations"):
        p.add_argument(f"--{name}", type=_range, metavar="LO:HI")
    p.add_argument("--formulation", choices=(LEQ_MAX, MAX_OF))
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("corpus", help="solve instances and write a corpus manifest")
    p.add_argument("instances", nargs="+", help="instance files or directories")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0, help="split seed")
    p.add_argument("--fractions", type=_floats, default=[0.8, 0.1, 0.1])
    p.add_argument("--jobs", type=int, default=1)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("train", help="train an estimator on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--include-dev", action="store_true")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("estimate", help="print the estimated objective bounds of an instance")
    p.add_argument("--model", required=True)
    p.add_argument("instance")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("solve", help="solve one instance, optionally with estimated bounds")
    p.add_argument("instance")
    p.add_argument("--model")
    p.add_argument("--bounds", choices=(BOTH, UPPER, NONE), default=BOTH)
    p.add_argument("--complement", choices=("upper", "literal"), default="upper")
    p.add_argument("--fixed-baseline", action="store_true")
    p.add_argument("--wall-time", action="store_true", help="include wall-clock times in the output")
    p.add_argument("--trust-lower", action="store_true",
                   help="skip the search below an estimated lower bound")
    p.add_argument("--out")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="four-configuration comparison and lambda sweep")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", help="trained estimator; trained from the corpus if omitted")
    p.add_argument("--split", choices=(TRAIN, DEV, TEST), default=TEST)
    p.add_argument("--report-dir", help=f"defaults to ${REPORT_DIR_ENV} or ./reports")
    p.add_argument("--clock", choices=(NODES, TIME), default=NODES)
    p.add_argument("--lambdas", type=_floats, default=None, help="sweep grid; empty string skips")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--trust-lower", action="store_true",
                   help="skip the search below an estimated lower bound in the 'both' runs")
    _add_train_flags(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.code == EXIT_USAGE:
            parser.print_usage(sys.stderr)
        return exc.code
    except FeatureSchemaError as exc:
        print(f"error: schema mismatch: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except InstanceError as exc:
        print(f"error: invalid instance: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
