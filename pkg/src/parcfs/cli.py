"""Command-line surface: end-to-end selection, an engine/worker scaling
benchmark, and the standalone discretizer.

Exit codes: 0 ok, 1 bad flags, 2 unreadable or invalid data, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import statistics
import sys
import time

import numpy as np

from .correlation import CorrelationCache, InternalError
from .dataset import (
    DataError,
    DiscreteDataset,
    discretize_mdl,
    load_csv,
    write_discretized,
)
from .engines import EngineConfig, make_provider
from .search import (
    SearchTrace,
    add_locally_predictive,
    best_first_search,
    run_cfs,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser():
    parser = _Parser(prog="parcfs",
                     description="Correlation-based feature selection with "
                                 "sequential, row-partitioned, and "
                                 "column-partitioned engines.")
    sub = parser.add_subparsers(dest="command", required=True)

    sel = sub.add_parser("select", help="run feature selection end to end")
    sel.add_argument("--input", required=True, help="input CSV path")
    sel.add_argument("--class", dest="class_column", required=True,
                     help="class column name or index")
    sel.add_argument("--engine", default="sequential",
                     choices=["sequential", "horizontal", "vertical"])
    sel.add_argument("--partitions", type=int, default=None)
    sel.add_argument("--workers", type=int, default=1)
    sel.add_argument("--no-locally-predictive", action="store_true")
    sel.add_argument("--max-fails", type=int, default=5)
    sel.add_argument("--trace", default=None, help="write search trace TSV here")
    sel.add_argument("--output", default="json", choices=["json", "text"])
    sel.add_argument("--emit-timings", action="store_true",
                     help="include wall times and runtime knobs in the report "
                          "(off by default so identical inputs give identical "
                          "output bytes)")
    sel.add_argument("--no-header", action="store_true",
                     help="input CSV has no header row")

    ben = sub.add_parser("bench", help="benchmark engines and worker scaling")
    ben.add_argument("--input", required=True)
    ben.add_argument("--class", dest="class_column", required=True)
    ben.add_argument("--engines", default="horizontal",
                     help="comma list of sequential,horizontal,vertical")
    ben.add_argument("--workers", default="1",
                     help="comma list of worker counts")
    ben.add_argument("--fractions", default="1.0",
                     help="comma list of dataset fractions; values above 1.0 "
                          "duplicate rows (or features with --scale-features)")
    ben.add_argument("--repeat", type=int, default=1)
    ben.add_argument("--baseline-workers", type=int, default=1)
    ben.add_argument("--partitions", type=int, default=None)
    ben.add_argument("--scale-features", action="store_true")
    ben.add_argument("--output", default=None, help="CSV path (default stdout)")
    ben.add_argument("--no-header", action="store_true")

    dis = sub.add_parser("discretize", help="discretize a CSV and write codes")
    dis.add_argument("--input", required=True)
    dis.add_argument("--class", dest="class_column", required=True)
    dis.add_argument("--output", required=True, help="coded CSV path; a "
                     "<output>.json sidecar is written next to it")
    dis.add_argument("--no-header", action="store_true")
    return parser


def _load_discrete(args):
    raw = load_csv(args.input, args.class_column, header=not args.no_header)
    return discretize_mdl(raw)


# ---------------------------------------------------------------------------
# select
# ---------------------------------------------------------------------------

def cmd_select(args):
    timings = {}
    t0 = time.perf_counter()
    raw = load_csv(args.input, args.class_column, header=not args.no_header)
    timings["load"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    ds, _model = discretize_mdl(raw)
    timings["discretize"] = (time.perf_counter() - t0) * 1000.0

    cfg = EngineConfig(layout=args.engine, partitions=args.partitions,
                       workers=args.workers)
    with make_provider(ds, cfg) as provider:
        t0 = time.perf_counter()
        cache = CorrelationCache()
        trace = SearchTrace() if args.trace else None
        best = best_first_search(provider, ds.m, ds.class_index,
                                 max_fails=args.max_fails, cache=cache,
                                 trace=trace)
        timings["search"] = (time.perf_counter() - t0) * 1000.0

        t0 = time.perf_counter()
        if not args.no_locally_predictive:
            best = add_locally_predictive(best, provider, ds.m, ds.class_index,
                                          cache=cache)
        timings["post_process"] = (time.perf_counter() - t0) * 1000.0

        if trace is not None:
            trace.write(args.trace)

        indices = list(best.features)
        report = {
            "selected": [ds.feature_names[i] for i in indices],
            "indices": indices,
            "merit": best.merit,
            "pairs_computed": provider.pairs_computed,
            "config": {
                "engine": args.engine,
                "locally_predictive": not args.no_locally_predictive,
                "max_fails": args.max_fails,
            },
        }
        if args.emit_timings:
            report["timings_ms"] = {k: round(v, 3) for k, v in timings.items()}
            report["config"]["workers"] = provider.workers
            report["config"]["partitions"] = provider.partition_count
            report["engine_stats"] = provider.stats()

    if args.output == "json":
        print(json.dumps(report, indent=2))
    else:
        print(f"selected ({len(indices)}): " + ", ".join(report["selected"]))
        print("indices:  " + ", ".join(map(str, indices)))
        print(f"merit:    {best.merit:.6f}")
        print(f"pairs computed: {report['pairs_computed']}")
        print(f"engine: {args.engine}  workers: {args.workers}")
        for phase, ms in timings.items():
            print(f"  {phase:>12}: {ms:9.1f} ms")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def _scale_dataset(ds, fraction, scale_features):
    """Resize a dataset to a fraction of its rows (or features); oversizing
    duplicates rows/features cyclically, undersizing takes a prefix."""
    if fraction == 1.0:
        return ds
    if scale_features:
        m_new = max(1, round(ds.m * fraction))
        src = np.arange(m_new) % ds.m
        codes = np.column_stack([ds.codes[:, j] for j in src]
                                + [ds.codes[:, ds.class_index]])
        arities = [ds.arities[j] for j in src] + [ds.arities[-1]]
        names = [f"{ds.feature_names[j]}_r{i}" if i >= ds.m else ds.feature_names[j]
                 for i, j in enumerate(src)]
        return DiscreteDataset(codes=codes, arities=arities, feature_names=names,
                               class_name=ds.class_name)
    n_new = max(1, round(ds.n * fraction))
    rows = np.arange(n_new) % ds.n
    return DiscreteDataset(codes=ds.codes[rows], arities=list(ds.arities),
                           feature_names=list(ds.feature_names),
                           class_name=ds.class_name)


def _parse_list(text, conv, flag):
    try:
        return [conv(tok) for tok in text.split(",") if tok != ""]
    except ValueError:
        raise DataError(f"bad value in {flag}: {text!r}")


def run_bench(ds, engines, workers_list, fractions, repeat, baseline_workers,
              partitions=None, scale_features=False):
    """Time the full selection for every (engine, fraction, workers) combo
    and report medians plus speedup against the baseline worker count.
    Returns (rows, digest): rows as dicts in CSV column order."""
    if repeat < 1:
        raise DataError("--repeat must be >= 1")
    workers_all = list(workers_list)
    if baseline_workers not in workers_all:
        workers_all.append(baseline_workers)
    rows = []
    digest = ds.digest()
    for engine in engines:
        for fraction in fractions:
            scaled = _scale_dataset(ds, fraction, scale_features)
            medians = {}
            for workers in workers_all:
                cfg = EngineConfig(layout=engine, partitions=partitions,
                                   workers=workers)
                times = []
                for _ in range(repeat):
                    with make_provider(scaled, cfg) as provider:
                        # provision the worker pool outside the timed window,
                        # like cluster executors that exist before a job runs
                        provider.compute([(0, scaled.class_index)])
                        t0 = time.perf_counter()
                        run_cfs(provider, scaled.m, scaled.class_index)
                        times.append((time.perf_counter() - t0) * 1000.0)
                        stats = provider.stats()
                medians[workers] = (statistics.median(times), stats["partitions"])
            for workers in workers_list:
                med, parts = medians[workers]
                rows.append({
                    "engine": engine,
                    "workers": workers,
                    "partitions": parts,
                    "fraction": fraction,
                    "median_ms": round(med, 3),
                    "speedup": round(medians[baseline_workers][0] / med, 4),
                })
    return rows, digest


def cmd_bench(args):
    ds, _model = _load_discrete(args)
    engines = _parse_list(args.engines, str, "--engines")
    for engine in engines:
        if engine not in ("sequential", "horizontal", "vertical"):
            raise DataError(f"unknown engine {engine!r} in --engines")
    workers_list = _parse_list(args.workers, int, "--workers")
    fractions = _parse_list(args.fractions, float, "--fractions")
    rows, _digest = run_bench(ds, engines, workers_list, fractions,
                              args.repeat, args.baseline_workers,
                              partitions=args.partitions,
                              scale_features=args.scale_features)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["engine", "workers", "partitions",
                                             "fraction", "median_ms", "speedup"])
    writer.writeheader()
    writer.writerows(rows)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# ---------------------------------------------------------------------------
# discretize
# ---------------------------------------------------------------------------

def cmd_discretize(args):
    ds, model = _load_discrete(args)
    sidecar = write_discretized(ds, model, args.output)
    print(f"wrote {args.output} and {sidecar}")
    return EXIT_OK


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"select": cmd_select, "bench": cmd_bench,
                "discretize": cmd_discretize}
    try:
        return handlers[args.command](args)
    except (DataError, OSError) as exc:
        print(f"parcfs: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # parameter combinations the flag parser cannot see (partition and
        # worker counts vs dataset dimensions)
        print(f"parcfs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InternalError as exc:
        print(f"parcfs: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:
        print(f"parcfs: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
