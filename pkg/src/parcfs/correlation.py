"""Contingency tables and the information-theoretic correlation measure.

A contingency table (plain 2-D int64 array) is the sufficient statistic for
every quantity here: entropies, conditional entropy, and the symmetrical
uncertainty score in [0, 1]. Tables from disjoint row blocks merge by exact
integer addition, so any partitioning and any merge order yield the identical
table, and therefore bit-identical correlation values.
"""

from __future__ import annotations

import csv

import numpy as np


class InternalError(AssertionError):
    """An invariant the implementation must uphold was violated."""


def pair_key(a, b):
    """Canonical unordered pair: (lo, hi) with lo < hi."""
    if a == b:
        raise ValueError(f"a feature cannot pair with itself: {a}")
    return (a, b) if a < b else (b, a)


_COUNT_BLOCK = 1 << 16     # rows per chunk; keeps the joint buffer in L2


def count_pair(col_lo, col_hi, arity_lo, arity_hi):
    """Joint count matrix of two code columns, sized by declared arities."""
    size = arity_lo * arity_hi
    n = col_lo.shape[0]
    if col_lo.dtype != np.int32 or col_hi.dtype != np.int32 or size > 2 ** 31 - 1:
        joint = col_lo.astype(np.int64) * arity_hi + col_hi
        counts = np.bincount(joint.ravel(), minlength=size)
        return counts.reshape(arity_lo, arity_hi)
    counts = np.zeros(size, dtype=np.intp)
    buf = np.empty(min(n, _COUNT_BLOCK), dtype=np.int32)
    for start in range(0, n, _COUNT_BLOCK):
        stop = min(start + _COUNT_BLOCK, n)
        chunk = buf[:stop - start]
        np.multiply(col_lo[start:stop], np.int32(arity_hi), out=chunk)
        chunk += col_hi[start:stop]
        counts += np.bincount(chunk, minlength=size)
    return counts.reshape(arity_lo, arity_hi)


def local_ctables(pairs, rows, arities):
    """Per-pair contingency tables over one block of rows.

    rows is a 2-D code matrix (a row-partition view of the dataset); tables
    are sized by the global arities so blocks merge cleanly.
    """
    ncols = rows.shape[1]
    out = {}
    for a, b in pairs:
        lo, hi = pair_key(a, b)
        if not (0 <= lo < ncols and 0 <= hi < ncols):
            raise IndexError(f"pair ({a}, {b}) out of range for {ncols} columns")
        out[(lo, hi)] = count_pair(rows[:, lo], rows[:, hi],
                                   arities[lo], arities[hi])
    return out


def merge_tables(a, b):
    """Element-wise sum of two same-shape tables (exact integer addition)."""
    if a.shape != b.shape:
        raise ValueError(f"table shapes differ: {a.shape} vs {b.shape}")
    return a + b


def entropy(marginal, total=None):
    """Shannon entropy in bits of a count vector (or any count array).

    Zero counts contribute nothing; an all-zero marginal has entropy 0.
    Counts are summed in a canonical (sorted) order so that any two arrays
    holding the same multiset of counts produce the bit-identical result.
    """
    counts = np.asarray(marginal, dtype=np.int64).ravel()
    s = int(counts.sum())
    if total is None:
        total = s
    elif total != s:
        raise ValueError(f"total {total} does not match counts sum {s}")
    if total == 0:
        return 0.0
    pos = np.sort(counts[counts > 0])
    p = pos / total
    h = float(-(p * np.log2(p)).sum())
    return 0.0 if h == 0.0 else h


def conditional_entropy(table, given_axis=1):
    """H(X|Y) in bits: the average entropy of the table's slices along the
    conditioning axis, weighted by the slice totals. Slices with zero
    marginal contribute 0."""
    t = np.asarray(table, dtype=np.int64)
    total = int(t.sum())
    if total == 0:
        return 0.0
    if given_axis not in (0, 1):
        raise ValueError("given_axis must be 0 or 1")
    slices = t.T if given_axis == 1 else t
    acc = 0.0
    for sl in slices:
        w = int(sl.sum())
        if w:
            acc += (w / total) * entropy(sl)
    return acc


def symmetrical_uncertainty(table):
    """Normalized mutual information 2*(H(X) - H(X|Y)) / (H(X) + H(Y)).

    Computed through the identity H(X) - H(X|Y) = H(X) + H(Y) - H(X,Y), which
    together with canonical-order entropy makes the result exactly invariant
    under transposition. Two constant variables share no information: when
    H(X) + H(Y) = 0 the result is 0. Round-off is clamped into [0, 1];
    overshoot beyond 1e-9 signals a broken table and raises.
    """
    t = np.asarray(table, dtype=np.int64)
    total = int(t.sum())
    if total == 0:
        raise ValueError("cannot score an empty table (total = 0)")
    hx = entropy(t.sum(axis=1))
    hy = entropy(t.sum(axis=0))
    if hx + hy == 0.0:
        return 0.0
    hxy = entropy(t)
    su = 2.0 * (hx + hy - hxy) / (hx + hy)
    if su < 0.0:
        if su < -1e-9:
            raise InternalError(f"symmetrical uncertainty {su} below 0")
        su = 0.0
    elif su > 1.0:
        if su > 1.0 + 1e-9:
            raise InternalError(f"symmetrical uncertainty {su} above 1")
        su = 1.0
    return su


class CorrelationCache:
    """Symmetric, write-once store of correlation values keyed by canonical
    feature pairs. Values are filled in batches by the (single) search driver
    between rounds; reads may come from anywhere."""

    def __init__(self):
        self._values = {}

    def __len__(self):
        return len(self._values)

    def __contains__(self, pair):
        return pair_key(*pair) in self._values

    @property
    def n_computed(self):
        return len(self._values)

    def get(self, a, b):
        return self._values[pair_key(a, b)]

    def missing(self, pairs):
        """The canonicalized pairs not yet cached, deduplicated, in request
        order."""
        seen = set()
        out = []
        for a, b in pairs:
            key = pair_key(a, b)
            if key not in self._values and key not in seen:
                seen.add(key)
                out.append(key)
        return out

    def put_batch(self, values):
        staged = dict(self._values)
        for pair, su in values.items():
            key = pair_key(*pair)
            old = staged.get(key)
            if old is not None and old != su:
                raise InternalError(
                    f"cache overwrite for {key}: {old} -> {su}")
            staged[key] = su
        # single reference swap: a concurrent reader sees the batch fully
        # applied or not at all
        self._values = staged

    def dump_csv(self, path):
        """Debug dump as (lo, hi, su) rows sorted by pair."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lo", "hi", "su"])
            for (lo, hi) in sorted(self._values):
                w.writerow([lo, hi, repr(self._values[(lo, hi)])])


def cache_get_missing(cache, pairs):
    """Functional alias for CorrelationCache.missing."""
    return cache.missing(pairs)
