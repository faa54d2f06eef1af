"""Command-line front end: ``approx``, ``ratio-sweep``, ``recover`` and ``bench``.

Instance ``k`` of any command draws its data from ``derive_seed(seed, k, 0)``
and its algorithmic randomness from ``derive_seed(seed, k, 1)``, so outputs do
not depend on how instances are scheduled across ``OTNS_THREADS`` workers.
Timing values live in fields/columns ending in ``_ms`` (plus the benchmark's
``speedup``) and are dropped entirely by ``--no-timing``.
"""
import argparse
import csv
import io as _io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .als import AlsConfig, refine
from .approx import ApproxConfig, approximate
from .bench import run_benchmark
from .io import read_tensor, save_instance, write_otns
from .metrics import (
    lambda_sq_sum, rank1_guarantee_holds, relative_error, theoretical_ratio,
)
from .rng import derive_seed
from .synth import gaussian_tensor, random_factor_set, structured_tensor

EXIT_ERROR = 1
EXIT_CHECK_FAILED = 3
TIMING_KEYS = ("speedup",)
SLACK = 1e-10


class CheckFailure(Exception):
    pass


def _int_list(text):
    text = text.strip()
    if ":" in text:
        lo, hi = (int(x) for x in text.split(":"))
        if hi < lo:
            raise argparse.ArgumentTypeError(f"empty range {text!r}")
        return list(range(lo, hi + 1))
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if not vals:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return vals


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _workers():
    raw = os.environ.get("OTNS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"OTNS_THREADS must be an integer, got {raw!r}") from None


def _pool_map(fn, items):
    items = list(items)
    n = min(_workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _is_timing(key):
    return key.endswith("_ms") or key in TIMING_KEYS


def _fmt(x):
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _emit_csv(rows, columns, out, timing):
    cols = [c for c in columns if timing or not _is_timing(c)]
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in cols])
    _write_text(buf.getvalue(), out)


def _write_text(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


# ---------------------------------------------------------------------------
# tensor sources
# ---------------------------------------------------------------------------

def _source(args):
    if args.input and args.gen:
        raise ValueError("give either --input or --gen, not both")
    if not args.input and not args.gen:
        raise ValueError("a tensor source is required: --input PATH or --gen {gaussian,structured}")
    if args.gen and not args.shape:
        raise ValueError("--gen needs --shape")
    return {"input": args.input, "gen": args.gen, "shape": args.shape, "beta": args.beta,
            "exact": args.exact, "incoherence": args.incoherence}


def _make_tensor(source, shape, R, t, data_seed):
    """Returns ``(A, truth_or_None)``."""
    if source["input"]:
        return read_tensor(source["input"]), None
    if source["gen"] == "gaussian":
        return gaussian_tensor(shape, data_seed), None
    return structured_tensor(shape, R, t, source["beta"], data_seed,
                             exact_mode=source["exact"], incoherence=source["incoherence"])


def _seeds(seed, k):
    return derive_seed(seed, k, 0), derive_seed(seed, k, 1)


# ---------------------------------------------------------------------------
# approx
# ---------------------------------------------------------------------------

def _bound_applies(shape, t, variant):
    return variant in ("A", "B") and (t == len(shape) or rank1_guarantee_holds(shape[:len(shape) - t]))


def _approx_record(A, cfg):
    t0 = time.perf_counter()
    res = approximate(A, cfg)
    elapsed = 1e3 * (time.perf_counter() - t0)
    lam = lambda_sq_sum(A, cfg.R)
    levels = []
    for j in sorted(res.level_norms, reverse=True):
        v_sq, m_sq = res.level_norms[j]
        prods = res.per_level_products[j]
        total_v = float(np.sum(v_sq))
        levels.append({
            "mode": j,
            "beta": 1.0 if j == 0 else 1.0 / A.shape[j],
            "products": prods.tolist(),
            "sum_sq_products": float(np.dot(prods, prods)),
            "split_ratios": [float(a / b) if b > 0 else 0.0 for a, b in zip(v_sq, m_sq)],
            "gather_ratio": float(np.dot(prods, prods) / total_v) if total_v > 0 else 0.0,
        })
    feas = res.factors.feasibility_residuals()
    ortho = [r for j, r in enumerate(feas) if res.factors.is_orthonormal_mode(j)]
    return res, {
        "objective": res.objective,
        "sigmas": res.factors.sigmas.tolist(),
        "lambda_sq_sum": lam,
        "achieved_ratio": res.objective / lam if lam > 0 else 0.0,
        "theoretical_ratio": theoretical_ratio(A.shape, cfg.R, cfg.t),
        "singular_values": res.singular_values.tolist(),
        "last_mode_sum_sq": float(np.dot(res.singular_values, res.singular_values)),
        "levels": levels,
        "feasibility_residuals": feas,
        "orthonormality_residual": max(ortho),
        "degenerate": bool(res.degenerate),
        "approx_ms": elapsed,
    }


def _approx_checks(res, rec, shape, cfg):
    failures = []
    try:
        res.factors.check()
    except ValueError as exc:
        failures.append(str(exc))
    lam = rec["lambda_sq_sum"]
    if rec["objective"] > lam * (1 + SLACK) + SLACK:
        failures.append(f"objective {rec['objective']!r} exceeds lambda_sq_sum {lam!r}")
    if _bound_applies(shape, cfg.t, cfg.variant) and not res.degenerate:
        if rec["objective"] < rec["theoretical_ratio"] * lam * (1 - SLACK):
            failures.append("objective below the guaranteed fraction of lambda_sq_sum")
        prev = rec["last_mode_sum_sq"]
        for lev in rec["levels"]:
            need = lev["beta"] / cfg.R * prev
            if lev["sum_sq_products"] < need * (1 - SLACK):
                failures.append(f"level {lev['mode']} below its chain bound")
            prev = lev["sum_sq_products"]
    return failures


def cmd_approx(args):
    source = _source(args)
    data_seed, algo_seed = _seeds(args.seed, 0)
    cfg = ApproxConfig(args.R, args.t, args.variant, algo_seed, args.power_iters)
    A, truth = _make_tensor(source, args.shape, args.R, args.t, data_seed)
    if args.save_instance:
        save_instance(args.save_instance, A, truth)
    res, rec = _approx_record(A, cfg)
    timing = {"approx_ms": rec.pop("approx_ms")}
    record = {
        "command": "approx",
        "shape": list(A.shape),
        "source": {k: v for k, v in source.items() if v not in (None, False)},
        "config": {"R": cfg.R, "t": cfg.t, "variant": cfg.variant, "seed": args.seed,
                   "rank1_power_iters": cfg.rank1_power_iters},
        **rec,
    }
    if truth is not None:
        record["relative_error"] = relative_error(truth.factors, res.factors,
                                                  global_perm=args.perm == "global")
    failures = _approx_checks(res, rec, A.shape, cfg) if args.check else []
    if args.check:
        record["checks"] = {"passed": not failures, "failures": failures}
    if args.timing:
        record["timing"] = timing
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for j, U in enumerate(res.factors.factors):
            write_otns(out / f"factor_{j}.otns", U)
        (out / "meta.json").write_text(_dump_json(record), encoding="utf-8")
    sys.stdout.write(_dump_json(record))
    if failures:
        raise CheckFailure("; ".join(failures))


# ---------------------------------------------------------------------------
# ratio-sweep
# ---------------------------------------------------------------------------

def _sweep_point(args, value):
    shape = list(args.shape)
    R = args.R
    if args.sweep == "n":
        shape = [value] * len(shape)
    else:
        R = value
    shape = tuple(shape)
    d = len(shape)
    t = args.t
    level = args.level if args.level is not None else d - 2
    if args.family == "split" and not max(1, d - t) <= level <= d - 2:
        raise ValueError(f"split family needs a level in [{max(1, d - t)}, {d - 2}], got {level}")
    if args.family == "gather" and not d - t <= level <= d - 2:
        raise ValueError(f"gather family needs a level in [{d - t}, {d - 2}], got {level}")
    return shape, R, level


def _sweep_instance(args, source, shape, R, level, k):
    data_seed, algo_seed = _seeds(args.seed, k)
    A, _ = _make_tensor(source, shape, R, args.t, data_seed)
    cfg = ApproxConfig(R, args.t, args.variant, algo_seed, args.power_iters)
    res, rec = _approx_record(A, cfg)
    if args.family == "objective":
        vals = [rec["achieved_ratio"]]
    else:
        lev = next(x for x in rec["levels"] if x["mode"] == level)
        vals = lev["split_ratios"] if args.family == "split" else [lev["gather_ratio"]]
    return vals, rec["approx_ms"], res.degenerate


def cmd_ratio_sweep(args):
    source = _source(args)
    if source["input"]:
        raise ValueError("ratio-sweep draws its own instances; use --gen")
    rows, failures = [], []
    for value in args.values:
        shape, R, level = _sweep_point(args, value)
        ApproxConfig(R, args.t, args.variant).validate(shape)
        outs = _pool_map(lambda k: _sweep_instance(args, source, shape, R, level, k), range(args.reps))
        per_inst = [float(np.mean(v)) for v, _, _ in outs]
        flat = [x for v, _, _ in outs for x in v]
        if args.family == "objective":
            theo = theoretical_ratio(shape, R, args.t)
        elif args.family == "split":
            theo = 1.0 if level == 0 else 1.0 / shape[level]
        else:
            theo = 1.0 / R
        row = {
            "sweep": args.sweep, "value": value, "family": args.family, "variant": args.variant,
            "shape": "x".join(map(str, shape)), "R": R, "t": args.t, "instances": args.reps,
            "mean_real_ratio": float(np.mean(per_inst)), "min_real_ratio": float(min(flat)),
            "theoretical_ratio": theo, "mean_approx_ms": float(np.mean([ms for _, ms, _ in outs])),
        }
        rows.append(row)
        guaranteed = args.family != "objective" or _bound_applies(shape, args.t, args.variant)
        if args.check and args.variant in ("A", "B") and guaranteed:
            if not any(deg for _, _, deg in outs) and row["min_real_ratio"] < theo * (1 - SLACK):
                failures.append(f"value {value}: real ratio {row['min_real_ratio']!r} < {theo!r}")
        if args.check and row["mean_real_ratio"] > 1 + SLACK:
            failures.append(f"value {value}: real ratio above 1")
    cols = ["sweep", "value", "family", "variant", "shape", "R", "t", "instances",
            "mean_real_ratio", "min_real_ratio", "theoretical_ratio", "mean_approx_ms"]
    _emit_csv(rows, cols, args.out, args.timing)
    if failures:
        raise CheckFailure("; ".join(failures))


# ---------------------------------------------------------------------------
# recover
# ---------------------------------------------------------------------------

def _monotone(residuals):
    return all(b <= a + SLACK for a, b in zip(residuals, residuals[1:]))


def _recover_instance(args, source, k):
    data_seed, algo_seed = _seeds(args.seed, k)
    shape = tuple(args.shape)
    A, truth = _make_tensor(source, shape, args.R, args.t, data_seed)
    glob = args.perm == "global"
    als_cfg = AlsConfig(max_iters=args.max_iters, rel_change_tol=args.tol)

    t0 = time.perf_counter()
    init = approximate(A, ApproxConfig(args.R, args.t, args.variant, algo_seed, args.power_iters))
    time0 = 1e3 * (time.perf_counter() - t0)
    refined, trace = refine(A, init.factors, als_cfg)
    row = {
        "instance": k,
        "relerr0": relative_error(truth.factors, init.factors, global_perm=glob),
        "relerr": relative_error(truth.factors, refined, global_perm=glob),
        "residual0": trace.residuals[0],
        "residual": trace.residuals[-1],
        "sweeps": trace.iterations,
        "converged": trace.converged,
        "time0_ms": time0,
        "time_ms": time0 + trace.wall_time_ms,
    }
    problems = []
    if args.check:
        for name, fs in (("initializer", init.factors), ("refined", refined)):
            try:
                fs.check()
            except ValueError as exc:
                problems.append(f"instance {k} {name}: {exc}")
        if not _monotone(trace.residuals):
            problems.append(f"instance {k}: residual increased during refinement")
    if args.random_init:
        start = random_factor_set(shape, args.R, args.t, derive_seed(args.seed, k, 2))
        rand_fs, rtrace = refine(A, start, als_cfg)
        row["relerr_random"] = relative_error(truth.factors, rand_fs, global_perm=glob)
        row["sweeps_random"] = rtrace.iterations
        row["time_random_ms"] = rtrace.wall_time_ms
        if args.check and not _monotone(rtrace.residuals):
            problems.append(f"instance {k}: residual increased during random-start refinement")
    return row, problems


def cmd_recover(args):
    source = _source(args)
    if source["gen"] != "structured":
        raise ValueError("recover needs a planted ground truth: use --gen structured")
    ApproxConfig(args.R, args.t, args.variant).validate(tuple(args.shape))
    outs = _pool_map(lambda k: _recover_instance(args, source, k), range(args.reps))
    rows = [r for r, _ in outs]
    failures = [p for _, ps in outs for p in ps]
    cols = ["instance", "relerr0", "relerr", "residual0", "residual", "sweeps", "converged"]
    if args.random_init:
        cols += ["relerr_random", "sweeps_random"]
    cols += ["time0_ms", "time_ms"] + (["time_random_ms"] if args.random_init else [])
    mean = {"instance": "mean"}
    for c in cols[1:]:
        mean[c] = float(np.mean([float(r[c]) for r in rows]))
    _emit_csv(rows + [mean], cols, args.out, args.timing)
    if failures:
        raise CheckFailure("; ".join(failures))


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def cmd_bench(args):
    rows = run_benchmark(args.sizes, args.reps, args.seed)
    cols = ["kernel", "n", "max_abs_diff", "numpy_ms", "numba_ms", "speedup"]
    _emit_csv(rows, cols, args.out, args.timing)
    if args.check:
        bad = [r for r in rows if not (r["max_abs_diff"] <= 1e-9 or math.isnan(r["max_abs_diff"]))]
        if bad:
            raise CheckFailure(f"backends disagree on {[(r['kernel'], r['n']) for r in bad]}")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_source(p):
    p.add_argument("--input", help="tensor file (.otns binary or .json nested arrays)")
    p.add_argument("--gen", choices=("gaussian", "structured"), help="generate the tensor")
    p.add_argument("--shape", type=_int_list, help="dimensions, e.g. 8,8,8")
    p.add_argument("--beta", type=float, default=0.0, help="noise level for --gen structured")
    p.add_argument("--exact", action="store_true", help="noiseless planted tensor (structured)")
    p.add_argument("--incoherence", type=float, default=None,
                   help="pairwise coherence cap for the unconstrained planted factors")


def _add_algo(p, R=True):
    if R:
        p.add_argument("--R", type=_positive, required=True, help="rank")
    p.add_argument("--t", type=_positive, required=True, help="number of orthonormal trailing modes")
    p.add_argument("--variant", choices=("A", "B", "C", "D"), default="A",
                   help="row extraction procedure")
    p.add_argument("--power-iters", type=int, default=0,
                   help="alternating sweeps polishing each rank-1 subproblem")


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path")
    p.add_argument("--check", action="store_true", help="verify invariants; exit 3 on failure")
    p.add_argument("--no-timing", dest="timing", action="store_false",
                   help="omit wall-clock fields")


def build_parser():
    parser = argparse.ArgumentParser(prog="orthocp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("approx", help="run the approximation algorithm on one tensor")
    _add_source(p)
    _add_algo(p)
    _add_common(p)
    p.add_argument("--perm", choices=("mode", "global"), default="mode")
    p.add_argument("--save-instance", help="write the input tensor (and ground truth) here")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("ratio-sweep", help="achieved vs guaranteed ratios over a sweep")
    _add_source(p)
    p.add_argument("--R", type=_positive, default=2)
    _add_algo(p, R=False)
    _add_common(p)
    p.add_argument("--sweep", choices=("n", "R"), default="n")
    p.add_argument("--values", type=_int_list, required=True, help="e.g. 4:12 or 2,3,4")
    p.add_argument("--family", choices=("objective", "split", "gather"), default="objective")
    p.add_argument("--level", type=int, default=None, help="mode for split/gather families")
    p.add_argument("--reps", type=_positive, default=20, help="instances per sweep point")
    p.set_defaults(func=cmd_ratio_sweep)

    p = sub.add_parser("recover", help="factor recovery before and after refinement")
    _add_source(p)
    _add_algo(p)
    _add_common(p)
    p.add_argument("--reps", type=_positive, default=20)
    p.add_argument("--perm", choices=("mode", "global"), default="mode")
    p.add_argument("--random-init", action="store_true", help="also refine from a random start")
    p.add_argument("--max-iters", type=_positive, default=2000)
    p.add_argument("--tol", type=float, default=1e-5)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("bench", help="numba vs numpy kernel timings")
    p.add_argument("--sizes", type=_int_list, default=[6, 10, 14])
    p.add_argument("--reps", type=_positive, default=5)
    _add_common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except (ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
