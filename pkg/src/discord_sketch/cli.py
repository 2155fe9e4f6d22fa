"""Command-line interface.

Every run prints exactly one JSON document on stdout; diagnostics go to
stderr. Exit codes: 0 ok, 1 usage error, 2 data error, 3 internal check
failed.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import evaluation as ev
from .count_sketch import (
    add_dimension,
    delete_dimension,
    identity_plan,
    make_plan,
    sketch,
    update_point,
)
from .datagen import (
    SHAPES,
    PeriodicConfig,
    PlantSpec,
    WalkConfig,
    gen_periodic,
    gen_random_walk,
    plant_discord,
)
from .detection import DetectionConfig, detect_top_k, exact_discord
from .errors import DiscordError
from .io import dumps, load_csv, load_labels, load_sketch, save_csv, save_sketch
from .timeseries import global_stats, nn_dist

SEED_ENV = "DISCORD_SKETCH_SEED"

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class InternalError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _k_arg(s):
    if s == "auto":
        return 0
    try:
        k = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"k must be 'auto' or a positive integer, got {s!r}")
    if k < 1:
        raise argparse.ArgumentTypeError(f"k must be >= 1, got {k}")
    return k


def _pos_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _log(msg):
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------- commands

def _load_pair(args):
    t_train = load_csv(args.train, transpose=args.transpose)
    if args.mode == "self":
        return t_train, t_train
    if args.test is None:
        raise UsageError("--test is required unless --mode self")
    return t_train, load_csv(args.test, transpose=args.transpose)


def cmd_exact(args):
    t_train, t_test = _load_pair(args)
    rep = exact_discord(t_train, t_test, args.m, mode=args.mode, n_jobs=args.threads)
    return {"command": "exact", "config": _config(args), "report": rep.to_dict()}


def _check_report(rep, t_train, t_test, m, mode):
    """Recompute the reported score from raw data."""
    exclude = None
    if mode == "self":
        r = -(-m // 2)
        exclude = (rep.i_star - r, rep.i_star + r)
    w = t_test[rep.j_star][rep.i_star:rep.i_star + m]
    s, _ = nn_dist(w, t_train[rep.j_star], m, exclude)
    if abs(s - rep.score) > 1e-6:
        raise InternalError(
            f"reported score {rep.score} for ({rep.i_star}, {rep.j_star}) "
            f"does not match recomputed {s}")


def cmd_fast(args):
    t_train, t_test = _load_pair(args)
    plan = None
    if args.debug_identity_plan:
        _log("warning: --debug-identity-plan puts every dimension in its own group; "
             "for testing only, it gives no speedup")
        plan = identity_plan(t_train.names, args.seed)
    cfg = DetectionConfig(m=args.m, k=args.k, seed=args.seed, refine=args.refine,
                          mode=args.mode, top_k=args.top_k, n_jobs=args.threads, plan=plan)
    reps = detect_top_k(t_train, t_test, cfg)
    for r in reps:
        _check_report(r, t_train, t_test, args.m, args.mode)
    out = {"command": "fast", "config": _config(args)}
    if args.top_k == 1:
        out["report"] = reps[0].to_dict()
    else:
        out["reports"] = [r.to_dict() for r in reps]
    return out


def cmd_sketch_build(args):
    t = load_csv(args.input, transpose=args.transpose)
    stats = None
    if args.stats_from:
        ref = load_sketch(args.stats_from)
        plan = ref.plan
        stats = ref.stats
    else:
        plan = make_plan(t.names, args.k, args.seed)
    r = sketch(t, plan, stats)
    save_sketch(r, args.out)
    return {"command": "sketch build", "config": _config(args), "k": r.k, "d": plan.d,
            "n": r.n, "inert_groups": r.inert_groups(), "out": args.out}


def cmd_sketch_add(args):
    r = load_sketch(args.sketch)
    t = load_csv(args.input, transpose=args.transpose)
    ref = load_sketch(args.stats_from) if args.stats_from else None
    for nm in t.names:
        st = ref.stats[nm] if ref is not None and nm in ref.stats else None
        r = add_dimension(r, nm, t[nm], stats=st)
    save_sketch(r, args.out or args.sketch)
    return {"command": "sketch add", "config": _config(args), "added": list(t.names),
            "d": r.plan.d, "groups": {nm: r.plan.group_of(nm) for nm in t.names}}


def cmd_sketch_delete(args):
    r = load_sketch(args.sketch)
    t = load_csv(args.input, transpose=args.transpose)
    names = args.name or list(t.names)
    for nm in names:
        if nm not in t:
            raise DiscordError(f"dimension {nm!r} not in {args.input}")
        r = delete_dimension(r, nm, t[nm])
    save_sketch(r, args.out or args.sketch)
    return {"command": "sketch delete", "config": _config(args), "deleted": names,
            "d": r.plan.d}


def cmd_sketch_update(args):
    r = load_sketch(args.sketch)
    r = update_point(r, args.name, args.index, args.delta)
    save_sketch(r, args.out or args.sketch)
    return {"command": "sketch update", "config": _config(args),
            "group": r.plan.group_of(args.name), "value": float(r.groups[r.plan.group_of(args.name), args.index])}


def cmd_gen_walk(args):
    T = gen_random_walk(WalkConfig(args.d, args.n, args.step_std, args.seed))
    out = {"command": "gen walk", "config": _config(args)}
    if args.split is not None:
        if not 0 < args.split < T.n:
            raise UsageError(f"--split must be in (0, {T.n})")
        if not args.test_out:
            raise UsageError("--split needs --test-out")
        save_csv(T.slice(0, args.split), args.out)
        save_csv(T.slice(args.split, T.n), args.test_out)
        out["files"] = [args.out, args.test_out]
    else:
        save_csv(T, args.out)
        out["files"] = [args.out]
    return out


def cmd_gen_periodic(args):
    cfg = PeriodicConfig(d=args.d, period=args.period, num_periods=args.num_periods,
                         eta=args.eta, seed=args.seed, test_periods=args.test_periods)
    tr, te = gen_periodic(cfg)
    save_csv(tr, args.out)
    save_csv(te, args.test_out)
    return {"command": "gen periodic", "config": _config(args),
            "files": [args.out, args.test_out], "n_train": tr.n, "n_test": te.n}


def cmd_gen_plant(args):
    t = load_csv(args.input, transpose=args.transpose)
    stats = None
    if args.stats_from:
        ref = load_csv(args.stats_from, transpose=args.transpose)
        if args.dimension not in ref:
            raise DiscordError(f"dimension {args.dimension!r} not in {args.stats_from}")
        stats = global_stats(ref[args.dimension], args.dimension)
    spec = PlantSpec(args.dimension, args.start, args.length, args.delta_norm, args.shape)
    out_t = plant_discord(t, spec, stats=stats)
    save_csv(out_t, args.out, transpose=args.transpose)
    return {"command": "gen plant", "config": _config(args), "files": [args.out]}


def cmd_bench_success(args):
    def progress(d, oc):
        _log(f"d={d} trial={oc.trial} success={oc.success} "
             f"rank_fraction={oc.rank_fraction:.3g} speedup={oc.speedup:.1f}")

    res = ev.success_rate_experiment(
        args.dims, args.n, args.m, args.trials, args.threshold, args.seed, k=args.k,
        refine=not args.no_refine, identity=args.debug_identity_plan,
        n_jobs=args.threads, progress=progress if args.verbose else None)
    rows = list(res.values())
    if not args.keep_trials:
        for r in rows:
            r.pop("trials")
    out = {"command": "bench success-rate", "config": _config(args), "results": rows}
    if len(rows) == 1:
        out["success_rate"] = rows[0]["success_rate"]
        out["mean_speedup"] = rows[0]["mean_speedup"]
    return out


def cmd_bench_lemmas(args):
    rep = ev.lemma_suite(seed=args.seed, trials=args.trials, quick=args.quick)
    cheb = rep["chebyshev"]
    passed = rep["estimator"]["passed"] and all(c["passed"] for c in cheb) and rep["periodic"]["passed"]
    return {"command": "bench lemmas", "config": _config(args), "passed": passed, **rep}


def cmd_density(args):
    t_train, t_test = _load_pair(args)
    res = ev.score_density(t_train, t_test, args.m, args.trials, args.seed, k=args.k,
                           refine=args.refine, bins=args.bins, n_jobs=args.threads)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("bin_lo,bin_hi,all,exact,sketched\n")
            for row in ev.density_csv_rows(res):
                fh.write("%.17g,%.17g,%d,%d,%d\n" % tuple(row))
    return {"command": "density", "config": _config(args),
            "exact_deviation_sd": res["exact_deviation_sd"],
            "distributions": {key: {k: v for k, v in vars(res[key]).items()
                                    if k not in ("hist_edges", "hist_counts")}
                              for key in ("all", "exact", "sketched")},
            "csv": args.csv}


def cmd_score(args):
    t_train = load_csv(args.train, transpose=args.transpose)
    t_test = load_csv(args.test, transpose=args.transpose)
    scores = ev.anomaly_scores(t_train, t_test, args.dimension, args.m, n_jobs=args.threads)
    labels = load_labels(args.labels)
    if labels.size == t_test.n:
        labels = ev.window_labels(labels, args.m)
    elif labels.size != scores.size:
        raise DiscordError(
            f"{args.labels}: {labels.size} labels, expected {t_test.n} (per point) "
            f"or {scores.size} (per window)")
    auc = ev.roc_auc(scores, labels)
    out = {"command": "score", "config": _config(args), "auc": auc,
           "n_windows": int(scores.size), "n_positive": int(labels.sum())}
    if args.scores_out:
        np.savetxt(args.scores_out, np.column_stack([scores, labels]), fmt=["%.17g", "%d"],
                   delimiter=",", header="score,label", comments="")
        out["scores_csv"] = args.scores_out
    return out


def _config(args):
    skip = {"func", "command", "sub"}
    return {k: v for k, v in vars(args).items() if k not in skip}


# ------------------------------------------------------------------ parser

def build_parser(default_seed: int = 0) -> argparse.ArgumentParser:
    p = _Parser(prog="discord-sketch",
                description="Multidimensional time-series discords via count sketches.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--threads", type=_pos_int, default=1,
                        help="worker cap for joins (results do not depend on it)")
    common.add_argument("--transpose", action="store_true",
                        help="CSV rows are dimensions instead of time points")

    seeded = _Parser(add_help=False)
    seeded.add_argument("--seed", type=int, default=default_seed,
                        help=f"random seed (default from ${SEED_ENV} or 0)")

    def pair(sp, need_test=False):
        sp.add_argument("--train", required=True)
        sp.add_argument("--test", required=need_test)
        sp.add_argument("--m", type=_pos_int, required=True, help="window length")

    sp = sub.add_parser("exact", parents=[common], help="exact per-dimension discord")
    pair(sp)
    sp.add_argument("--mode", choices=("ab", "self"), default="ab")
    sp.set_defaults(func=cmd_exact)

    sp = sub.add_parser("fast", parents=[common, seeded], help="sketched discord detection")
    pair(sp)
    sp.add_argument("--k", type=_k_arg, default=0, help="groups, or 'auto' for ceil(sqrt(d))")
    sp.add_argument("--refine", action="store_true")
    sp.add_argument("--top-k", type=_pos_int, default=1)
    sp.add_argument("--mode", choices=("ab", "self"), default="ab")
    sp.add_argument("--debug-identity-plan", action="store_true",
                    help="NOT FOR PRODUCTION: one dimension per group")
    sp.set_defaults(func=cmd_fast)

    sk = sub.add_parser("sketch", help="build and update persisted sketches")
    sks = sk.add_subparsers(dest="sub", parser_class=_Parser)
    sp = sks.add_parser("build", parents=[common, seeded])
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--k", type=_k_arg, default=0)
    sp.add_argument("--stats-from", help="reuse plan and normalization of this sketch (e.g. train)")
    sp.set_defaults(func=cmd_sketch_build)
    sp = sks.add_parser("add", parents=[common])
    sp.add_argument("--sketch", required=True)
    sp.add_argument("--input", required=True, help="CSV of new dimensions")
    sp.add_argument("--out")
    sp.add_argument("--stats-from", help="take normalization of known dimensions from this sketch")
    sp.set_defaults(func=cmd_sketch_add)
    sp = sks.add_parser("delete", parents=[common])
    sp.add_argument("--sketch", required=True)
    sp.add_argument("--input", required=True, help="CSV holding the originally added data")
    sp.add_argument("--name", action="append", help="dimension to delete (repeatable)")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sketch_delete)
    sp = sks.add_parser("update")
    sp.add_argument("--sketch", required=True)
    sp.add_argument("--name", required=True)
    sp.add_argument("--index", type=int, required=True)
    sp.add_argument("--delta", type=float, required=True, help="change in normalized units")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sketch_update)

    gen = sub.add_parser("gen", help="synthetic data")
    gens = gen.add_subparsers(dest="sub", parser_class=_Parser)
    sp = gens.add_parser("walk", parents=[seeded])
    sp.add_argument("--d", type=_pos_int, required=True)
    sp.add_argument("--n", type=_pos_int, required=True)
    sp.add_argument("--step-std", type=float, default=1.0)
    sp.add_argument("--out", required=True)
    sp.add_argument("--split", type=int, help="write [0, split) to --out and the rest to --test-out")
    sp.add_argument("--test-out")
    sp.set_defaults(func=cmd_gen_walk)
    sp = gens.add_parser("periodic", parents=[seeded])
    sp.add_argument("--d", type=_pos_int, required=True)
    sp.add_argument("--period", type=_pos_int, default=48)
    sp.add_argument("--num-periods", type=_pos_int, default=20)
    sp.add_argument("--test-periods", type=_pos_int, default=2)
    sp.add_argument("--eta", type=float, default=0.05)
    sp.add_argument("--out", required=True)
    sp.add_argument("--test-out", required=True)
    sp.set_defaults(func=cmd_gen_periodic)
    sp = gens.add_parser("plant", parents=[common])
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--dimension", required=True)
    sp.add_argument("--start", type=int, required=True)
    sp.add_argument("--length", type=_pos_int, required=True)
    sp.add_argument("--delta-norm", type=float, required=True)
    sp.add_argument("--shape", choices=SHAPES, default="bump")
    sp.add_argument("--stats-from", help="measure the displacement in this CSV's scale (train)")
    sp.set_defaults(func=cmd_gen_plant)

    bench = sub.add_parser("bench", help="experiments")
    bs = bench.add_subparsers(dest="sub", parser_class=_Parser)
    sp = bs.add_parser("success-rate", parents=[common, seeded])
    sp.add_argument("--dims", type=_pos_int, nargs="+", required=True)
    sp.add_argument("--n", type=_pos_int, default=10000)
    sp.add_argument("--m", type=_pos_int, default=100)
    sp.add_argument("--k", type=_k_arg, default=0)
    sp.add_argument("--trials", type=_pos_int, default=100)
    sp.add_argument("--threshold", type=float, default=0.001)
    sp.add_argument("--no-refine", action="store_true")
    sp.add_argument("--debug-identity-plan", action="store_true",
                    help="NOT FOR PRODUCTION: one dimension per group")
    sp.add_argument("--keep-trials", action="store_true", help="include per-trial rows")
    sp.add_argument("--verbose", action="store_true")
    sp.set_defaults(func=cmd_bench_success)
    sp = bs.add_parser("lemmas", parents=[seeded])
    sp.add_argument("--trials", type=_pos_int, default=10000)
    sp.add_argument("--quick", action="store_true")
    sp.set_defaults(func=cmd_bench_lemmas)

    sp = sub.add_parser("density", parents=[common, seeded], help="score distributions")
    pair(sp, need_test=True)
    sp.add_argument("--mode", choices=("ab",), default="ab", help=argparse.SUPPRESS)
    sp.add_argument("--k", type=_k_arg, default=0)
    sp.add_argument("--trials", type=_pos_int, default=20)
    sp.add_argument("--refine", action="store_true")
    sp.add_argument("--bins", type=_pos_int, default=40)
    sp.add_argument("--csv", help="histogram CSV output")
    sp.set_defaults(func=cmd_density)

    sp = sub.add_parser("score", parents=[common], help="anomaly scores and ROC-AUC")
    pair(sp, need_test=True)
    sp.add_argument("--dimension", required=True)
    sp.add_argument("--labels", required=True, help="0/1 per test point or per window")
    sp.add_argument("--scores-out")
    sp.set_defaults(func=cmd_score)
    return p


def _validate(args):
    if getattr(args, "threshold", None) is not None and not 0 < args.threshold <= 1:
        raise UsageError(f"--threshold must be in (0, 1], got {args.threshold}")
    if getattr(args, "eta", None) is not None and args.eta < 0:
        raise UsageError("--eta must be >= 0")


def run(argv=None) -> tuple[int, dict | None]:
    t0 = time.perf_counter()
    try:
        parser = build_parser(_default_seed())
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            raise UsageError(parser.format_usage().strip())
        _validate(args)
        out = args.func(args)
        out["elapsed_ms"] = 1000.0 * (time.perf_counter() - t0)
        return EXIT_OK, out
    except UsageError as e:
        return EXIT_USAGE, {"error": "usage", "message": str(e)}
    except (DiscordError, OSError) as e:
        return EXIT_DATA, {"error": type(e).__name__, "message": str(e)}
    except ValueError as e:
        # config validation in library dataclasses
        return EXIT_USAGE, {"error": "usage", "message": str(e)}
    except InternalError as e:
        return EXIT_INTERNAL, {"error": "internal", "message": str(e)}
    except Exception as e:  # noqa: BLE001
        return EXIT_INTERNAL, {"error": "internal", "message": f"{type(e).__name__}: {e}"}


def main(argv=None) -> int:
    code, doc = run(argv)
    if code != EXIT_OK:
        _log(f"error: {doc['message']}")
    print(dumps(doc))
    return code


if __name__ == "__main__":
    sys.exit(main())
