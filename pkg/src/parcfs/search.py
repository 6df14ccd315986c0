"""Best-first subset search driven by on-demand correlation requests.

The search keeps a capacity-bounded priority queue of candidate subsets,
expands the best one by every single-feature addition, scores children with
the merit heuristic (class correlation in the numerator, inter-feature
redundancy in the denominator), and stops after five consecutive expansions
that fail to strictly improve the best merit. Correlations are requested
from a provider in one batch per expansion round and memoized, so only the
pairs the search actually visits are ever computed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .correlation import CorrelationCache


@dataclass
class FeatureSubset:
    """An ordered feature subset (insertion order preserved) and its merit.

    last_added drives the vertical engine's broadcast optimization: after
    expanding this subset, only pairs against last_added can be missing.
    """
    features: tuple = ()
    merit: float = 0.0
    last_added: int | None = None

    def with_feature(self, f):
        return FeatureSubset(self.features + (f,), merit=0.0, last_added=f)

    @property
    def size(self):
        return len(self.features)

    def sort_key(self):
        # total order: merit desc, size asc, sorted members, insertion order
        return (-self.merit, self.size, tuple(sorted(self.features)), self.features)


def merit(subset, cache, class_index):
    """Heuristic score k*mean_class_corr / sqrt(k + k(k-1)*mean_pair_corr).

    Every needed correlation must already be cached; a miss is a programming
    error (the search batches its requests before evaluating).
    """
    feats = subset.features if isinstance(subset, FeatureSubset) else tuple(subset)
    k = len(feats)
    if k == 0:
        return 0.0
    if class_index in feats:
        raise ValueError("the class column cannot be a subset member")
    r_cf = sum(cache.get(f, class_index) for f in feats) / k
    if k == 1:
        return r_cf
    n_pairs = k * (k - 1) // 2
    r_ff = sum(cache.get(feats[i], feats[j])
               for i in range(k) for j in range(i + 1, k)) / n_pairs
    return k * r_cf / math.sqrt(k + k * (k - 1) * r_ff)


def expand(subset, m):
    """All single-feature extensions of a subset, in ascending feature order.
    A full subset expands to nothing."""
    members = set(subset.features)
    return [subset.with_feature(f) for f in range(m) if f not in members]


def required_pairs(children, cache, class_index):
    """The not-yet-cached pairs needed to score an expansion's children:
    each new feature against the class, plus against every parent member.
    Deduplicated, in child order."""
    pairs = []
    for child in children:
        f = child.last_added
        pairs.append((f, class_index))
        for s in child.features[:-1]:
            pairs.append((f, s))
    return cache.missing(pairs)


class SearchTrace:
    """One tab-separated line per iteration: iteration number, dequeued
    subset, pairs requested, best merit, consecutive fails."""

    def __init__(self):
        self.lines = []

    def record(self, iteration, dequeued, n_requested, best_merit, n_fails):
        subset = ",".join(map(str, dequeued.features)) or "-"
        self.lines.append(
            f"{iteration}\t{subset}\t{n_requested}\t{best_merit:.10f}\t{n_fails}")

    def text(self):
        return "".join(line + "\n" for line in self.lines)

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.text())


class _BoundedQueue:
    """Max-priority queue of subsets with a hard capacity: when full, the
    globally lowest-priority entry is dropped, incumbent or incoming."""

    def __init__(self, capacity):
        self.capacity = capacity
        self.entries = []

    def add(self, subsets):
        self.entries.extend(subsets)
        self.entries.sort(key=FeatureSubset.sort_key)
        del self.entries[self.capacity:]

    def dequeue(self):
        return self.entries.pop(0)

    def head(self):
        return self.entries[0]

    def __len__(self):
        return len(self.entries)


def best_first_search(provider, m, class_index, max_fails=5, queue_capacity=5,
                      cache=None, trace=None):
    """Run the queue-driven search and return the best subset found.

    Starts from the empty subset (merit 0), requests each round's missing
    correlations from the provider in one batch, and stops after max_fails
    consecutive rounds in which the queue head does not strictly improve on
    the best merit, or when the queue empties (the full-subset path).
    """
    best, _reason = _search(provider, m, class_index, max_fails,
                            queue_capacity, cache, trace)
    return best


def _search(provider, m, class_index, max_fails, queue_capacity, cache, trace):
    if m < 1:
        raise ValueError("need at least one feature")
    if cache is None:
        cache = CorrelationCache()
    best = FeatureSubset()
    queue = _BoundedQueue(queue_capacity)
    queue.add([FeatureSubset()])
    n_fails = 0
    iteration = 0
    while n_fails < max_fails and len(queue):
        iteration += 1
        head = queue.dequeue()
        children = expand(head, m)
        needed = required_pairs(children, cache, class_index)
        if needed:
            cache.put_batch(provider.compute(needed))
        for child in children:
            child.merit = merit(child, cache, class_index)
        queue.add(children)
        if not len(queue):
            if trace is not None:
                trace.record(iteration, head, len(needed), best.merit, n_fails)
            return best, "exhausted"
        local_best = queue.head()
        if local_best.merit > best.merit:
            best = local_best
            n_fails = 0
        else:
            n_fails += 1
        if trace is not None:
            trace.record(iteration, head, len(needed), best.merit, n_fails)
    return best, ("fails" if n_fails >= max_fails else "exhausted")


def add_locally_predictive(best, provider, m, class_index, cache=None):
    """Append features whose class correlation strictly exceeds their
    correlation with every member of the (growing) subset.

    Candidates are visited in descending class-correlation order, ties to
    the lower index; missing correlations are requested in one batch per
    candidate. Returns a new subset with its merit recomputed.
    """
    if cache is None:
        cache = CorrelationCache()
    outside = [f for f in range(m) if f not in best.features]
    if not outside:
        return best
    needed = cache.missing([(f, class_index) for f in outside])
    if needed:
        cache.put_batch(provider.compute(needed))
    outside.sort(key=lambda f: (-cache.get(f, class_index), f))

    result = best
    for f in outside:
        needed = cache.missing([(f, s) for s in result.features])
        if needed:
            cache.put_batch(provider.compute(needed))
        su_class = cache.get(f, class_index)
        if all(su_class > cache.get(f, s) for s in result.features):
            result = result.with_feature(f)
    if result is best:
        return best
    result.merit = merit(result, cache, class_index)
    return result


@dataclass
class SelectionResult:
    subset: FeatureSubset
    searched: FeatureSubset          # before the locally-predictive pass
    cache: CorrelationCache
    trace: SearchTrace | None = None
    stopped_by_fails: bool = field(default=True)


def run_cfs(provider, m, class_index, locally_predictive=True, max_fails=5,
            queue_capacity=5, trace=False, eager=False):
    """Full selection pipeline: optional eager precompute (tests only),
    best-first search, then the optional locally-predictive pass, all
    sharing one correlation cache."""
    from .engines import all_pairs

    cache = CorrelationCache()
    if eager:
        cache.put_batch(provider.compute(all_pairs(m)))
    tr = SearchTrace() if trace else None
    searched, reason = _search(provider, m, class_index, max_fails,
                               queue_capacity, cache, tr)
    stopped_by_fails = reason == "fails"
    final = searched
    if locally_predictive:
        final = add_locally_predictive(searched, provider, m, class_index,
                                       cache=cache)
    return SelectionResult(subset=final, searched=searched, cache=cache,
                           trace=tr, stopped_by_fails=stopped_by_fails)
