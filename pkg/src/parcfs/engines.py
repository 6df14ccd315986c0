"""Interchangeable correlation providers over three data layouts.

All three engines answer the same question -- "score these feature pairs" --
and are guaranteed to return identical values: the sequential engine builds
each pair's contingency table in one pass over all rows; the horizontal
engine counts per row block and merges the integer tables; the vertical
engine pairs locally stored feature columns against one shared (broadcast)
column. Because merging is exact integer addition and scoring runs on the
merged table, results do not depend on partition count, worker count, or
scheduling.

Worker tasks run in a fixed-size pool of forked processes (the counting
kernel holds the GIL, so threads cannot deliver the required scaling);
forked workers read the dataset through module globals inherited at pool
creation, so nothing large is ever serialized. Where fork is unavailable the
pool degrades to threads, and a single worker runs tasks inline.
"""

from __future__ import annotations

import json
import multiprocessing as mp
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .correlation import (
    count_pair,
    local_ctables,
    merge_tables,
    pair_key,
    symmetrical_uncertainty,
)
from .dataset import columnar_transform, partition_rows

# payloads shared with forked workers; children snapshot this dict when a
# provider creates its pool, so a provider must register before pooling
_REGISTRY = {}
_NEXT_TOKEN = 0


def _register(payload):
    global _NEXT_TOKEN
    _NEXT_TOKEN += 1
    _REGISTRY[_NEXT_TOKEN] = payload
    return _NEXT_TOKEN


def _unregister(token):
    _REGISTRY.pop(token, None)


def all_pairs(m):
    """Every canonical column pair over m features plus the class column."""
    return [(i, j) for i in range(m + 1) for j in range(i + 1, m + 1)]


class _TaskPool:
    """Fixed-size worker pool with order-preserving map and pull-based
    scheduling (an idle worker takes the next task)."""

    def __init__(self, workers):
        self.workers = workers
        self._procs = None
        self._threads = None
        if workers > 1:
            try:
                self._procs = mp.get_context("fork").Pool(workers)
            except ValueError:
                self._threads = ThreadPoolExecutor(workers)

    def map(self, fn, items):
        items = list(items)
        if not items:
            return []
        if self._procs is not None:
            return self._procs.map(fn, items, chunksize=1)
        if self._threads is not None:
            return list(self._threads.map(fn, items))
        return [fn(item) for item in items]

    def close(self):
        if self._procs is not None:
            self._procs.terminate()
            self._procs.join()
            self._procs = None
        if self._threads is not None:
            self._threads.shutdown()
            self._threads = None


def _horizontal_task(args):
    token, start, stop, pairs = args
    codes, arities = _REGISTRY[token]
    return local_ctables(pairs, codes[start:stop], arities)


def _vertical_task(args):
    token, pid, broadcast, candidates = args
    payload = _REGISTRY[token]
    features, class_col = payload["parts"][pid]
    arities = payload["arities"]

    def column(idx):
        # the class replica is local to every partition; the broadcast
        # feature's column is shared read-only across all workers
        if idx == payload["class_index"]:
            return class_col
        if idx in features:
            return features[idx]
        owner = payload["owner"][idx]
        return payload["parts"][owner][0][idx]

    bcast_col = column(broadcast)
    out = {}
    for cand in candidates:
        lo, hi = pair_key(cand, broadcast)
        cand_col = column(cand)
        col_lo = cand_col if lo == cand else bcast_col
        col_hi = bcast_col if hi == broadcast else cand_col
        table = count_pair(col_lo, col_hi, arities[lo], arities[hi])
        out[(lo, hi)] = (table, symmetrical_uncertainty(table))
    return out


class CorrelationProvider:
    """Contract: compute(pairs) -> {canonical pair: correlation in [0, 1]}.

    Repeated requests for a pair return the identical value; results are
    independent of worker and partition counts. compute() blocks until the
    whole batch is resolved. last_tables holds the integer tables behind the
    most recent batch.
    """

    layout = "sequential"

    def __init__(self, ds, workers=1):
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.ds = ds
        self.workers = workers
        self.partition_count = 1
        self.rounds = 0
        self.round_times_ms = []
        self.last_tables = {}
        self._seen_pairs = set()
        self._pool = None
        self._token = None

    # -- pool / registry plumbing ------------------------------------------

    def _ensure_pool(self):
        if self._pool is None:
            self._pool = _TaskPool(self.workers)
        return self._pool

    def close(self):
        if self._pool is not None:
            self._pool.close()
            self._pool = None
        if self._token is not None:
            _unregister(self._token)
            self._token = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass

    # -- scoring ------------------------------------------------------------

    def compute(self, pairs):
        t0 = time.perf_counter()
        keys = []
        seen = set()
        for a, b in pairs:
            key = pair_key(a, b)
            if key not in seen:
                seen.add(key)
                keys.append(key)
        result = self._compute_batch(keys)
        self._seen_pairs.update(keys)
        self.rounds += 1
        self.round_times_ms.append((time.perf_counter() - t0) * 1000.0)
        return result

    def _compute_batch(self, keys):
        raise NotImplementedError

    # -- statistics -----------------------------------------------------------

    @property
    def pairs_computed(self):
        return len(self._seen_pairs)

    def stats(self):
        return {
            "layout": self.layout,
            "workers": self.workers,
            "partitions": self.partition_count,
            "rounds": self.rounds,
            "pairs_computed": self.pairs_computed,
            "round_times_ms": list(self.round_times_ms),
        }

    def stats_json(self):
        return json.dumps(self.stats(), sort_keys=True)


class SequentialProvider(CorrelationProvider):
    """Single-pass oracle: one table per pair over all rows."""

    layout = "sequential"

    def _compute_batch(self, keys):
        tables = local_ctables(keys, self.ds.codes, self.ds.arities)
        self.last_tables = tables
        return {k: symmetrical_uncertainty(t) for k, t in tables.items()}


class HorizontalProvider(CorrelationProvider):
    """Row-partitioned engine: per-block tables, merged in partition order."""

    layout = "horizontal"

    def __init__(self, ds, partitions=None, workers=1):
        super().__init__(ds, workers)
        if partitions is None:
            partitions = min(workers, ds.n)
        if isinstance(partitions, int):
            partitions = partition_rows(ds, partitions)
        self.partitions = partitions
        self.partition_count = len(partitions)
        self.rows_read = []
        self._token = _register((ds.codes, list(ds.arities)))

    def _compute_batch(self, keys):
        tasks = [(self._token, p.start, p.stop, keys) for p in self.partitions]
        results = self._ensure_pool().map(_horizontal_task, tasks)
        merged = results[0]
        for part_tables in results[1:]:
            merged = {k: merge_tables(merged[k], part_tables[k]) for k in merged}
        self.rows_read.append(sum(p.n_rows for p in self.partitions))
        self.last_tables = merged
        return {k: symmetrical_uncertainty(t) for k, t in merged.items()}

    def stats(self):
        s = super().stats()
        s["rows_read"] = list(self.rows_read)
        return s


class VerticalProvider(CorrelationProvider):
    """Column-partitioned engine. The layout is transposed once up front;
    each batch is grouped by shared endpoint, that endpoint's column is
    shared read-only with every worker (the broadcast), and each partition
    scores only its locally stored candidate features against it."""

    layout = "vertical"

    def __init__(self, ds, partitions=None, workers=1):
        super().__init__(ds, workers)
        if partitions is None:
            partitions = ds.m
        if isinstance(partitions, int):
            partitions = columnar_transform(ds, partitions)
        self.col_partitions = partitions
        self.partition_count = len(partitions)
        self.partitions_touched = []
        owner = {f: p.partition_id for p in partitions for f in p.feature_columns}
        if sorted(owner) != list(range(ds.m)):
            raise ValueError("column partitions must cover each feature exactly once")
        self._owner = owner
        self._token = _register({
            "parts": [(p.feature_columns, p.class_column) for p in partitions],
            "arities": list(ds.arities),
            "class_index": ds.class_index,
            "owner": owner,
        })

    def _compute_batch(self, keys):
        ci = self.ds.class_index
        result = {}
        tables = {}
        touched = 0
        pool = self._ensure_pool()
        for broadcast, candidates in _group_by_endpoint(keys):
            per_part = {}
            for cand in candidates:
                # a class-side pair rides along in the broadcast feature's
                # partition, against that partition's class replica
                owner = self._owner[cand] if cand != ci else self._owner[broadcast]
                per_part.setdefault(owner, []).append(cand)
            tasks = [(self._token, pid, broadcast, sorted(cands))
                     for pid, cands in sorted(per_part.items())]
            touched += len(tasks)
            for part_out in pool.map(_vertical_task, tasks):
                for key, (table, su) in part_out.items():
                    tables[key] = table
                    result[key] = su
        self.partitions_touched.append(touched)
        self.last_tables = tables
        return result

    def stats(self):
        s = super().stats()
        s["partitions_touched"] = list(self.partitions_touched)
        return s


def _group_by_endpoint(keys):
    """Greedy grouping of canonical pairs by shared endpoint, most common
    endpoint first (ties to the largest index, which prefers broadcasting
    the class column). Each group is served by one broadcast; a batch with
    no shared endpoint degrades to one group per pair. Yields
    (broadcast, [other endpoints])."""
    remaining = list(keys)
    while remaining:
        counts = {}
        for lo, hi in remaining:
            counts[lo] = counts.get(lo, 0) + 1
            counts[hi] = counts.get(hi, 0) + 1
        broadcast = max(counts, key=lambda e: (counts[e], e))
        group = [k for k in remaining if broadcast in k]
        remaining = [k for k in remaining if broadcast not in k]
        yield broadcast, [lo if hi == broadcast else hi for lo, hi in group]


# ---------------------------------------------------------------------------
# operation-style entry points and the provider factory
# ---------------------------------------------------------------------------

def sequential_compute(ds, pairs):
    """Score pairs with the single-pass oracle."""
    with SequentialProvider(ds) as prov:
        return prov.compute(pairs)


def horizontal_compute(ds, partitions, pairs, workers=1):
    """Score pairs over row partitions (a count or a RowPartition list)."""
    with HorizontalProvider(ds, partitions=partitions, workers=workers) as prov:
        return prov.compute(pairs)


def vertical_compute(col_partitions, broadcast_feature, candidates, *,
                     arities, class_index, workers=1):
    """Score each candidate feature against one broadcast column, locally per
    column partition. Candidates must not include the broadcast feature."""
    if broadcast_feature in candidates:
        raise ValueError("broadcast feature cannot be its own candidate")
    owner = {f: p.partition_id for p in col_partitions for f in p.feature_columns}
    for cand in candidates:
        if cand not in owner:
            raise ValueError(f"candidate {cand} not found in any partition")
    if broadcast_feature != class_index and broadcast_feature not in owner:
        raise ValueError(f"broadcast feature {broadcast_feature} not found")
    token = _register({
        "parts": [(p.feature_columns, p.class_column) for p in col_partitions],
        "arities": list(arities),
        "class_index": class_index,
        "owner": owner,
    })
    pool = _TaskPool(workers)
    try:
        per_part = {}
        for cand in candidates:
            per_part.setdefault(owner[cand], []).append(cand)
        tasks = [(token, pid, broadcast_feature, sorted(cands))
                 for pid, cands in sorted(per_part.items())]
        out = {}
        for part_out in pool.map(_vertical_task, tasks):
            for key, (_table, su) in part_out.items():
                out[key] = su
        return out
    finally:
        pool.close()
        _unregister(token)


@dataclass
class EngineConfig:
    layout: str = "sequential"
    partitions: int | None = None
    workers: int = 1


def make_provider(ds, cfg):
    """Bind an EngineConfig to a dataset. Defaults: horizontal partitions
    follow the worker count, vertical partitions equal the feature count."""
    if cfg.workers < 1:
        raise ValueError("workers must be >= 1")
    if cfg.partitions is not None and cfg.partitions < 1:
        raise ValueError("partitions must be >= 1")
    if cfg.layout == "sequential":
        return SequentialProvider(ds, workers=1)
    if cfg.layout == "horizontal":
        if cfg.partitions is not None and cfg.partitions > ds.n:
            raise ValueError(f"horizontal partitions {cfg.partitions} exceed {ds.n} rows")
        return HorizontalProvider(ds, partitions=cfg.partitions, workers=cfg.workers)
    if cfg.layout == "vertical":
        if cfg.partitions is not None and cfg.partitions > ds.m:
            raise ValueError(f"vertical partitions {cfg.partitions} exceed {ds.m} features")
        return VerticalProvider(ds, partitions=cfg.partitions, workers=cfg.workers)
    raise ValueError(f"unknown engine layout {cfg.layout!r}")
