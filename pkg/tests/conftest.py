"""Shared test fixtures: independent brute-force oracles and a fixed-value
provider stub. The oracles deliberately avoid the library's table/entropy
code paths (pure-python dict counting) so golden values are derived twice."""

import math
from collections import Counter

import pytest

from parcfs.correlation import pair_key


class StubProvider:
    """CorrelationProvider contract backed by fixed values: class
    correlations per feature plus explicit pair overrides (default 1.0)."""

    def __init__(self, class_su, class_index, zero_pairs=(), pair_su=None):
        self.class_su = list(class_su)
        self.class_index = class_index
        self.pair_su = dict(pair_su or {})
        for p in zero_pairs:
            self.pair_su[pair_key(*p)] = 0.0
        self.computed = set()
        self.rounds = 0

    @property
    def pairs_computed(self):
        return len(self.computed)

    def compute(self, pairs):
        self.rounds += 1
        out = {}
        for a, b in pairs:
            lo, hi = pair_key(a, b)
            self.computed.add((lo, hi))
            if hi == self.class_index:
                out[(lo, hi)] = self.class_su[lo]
            else:
                out[(lo, hi)] = self.pair_su.get((lo, hi), 1.0)
        return out


# ---------------------------------------------------------------------------
# independent oracles (pure python, no numpy table math)
# ---------------------------------------------------------------------------

def entropy_oracle(counts):
    total = sum(counts)
    if total == 0:
        return 0.0
    return -sum((c / total) * math.log2(c / total) for c in counts if c > 0)


def cond_entropy_oracle(table, given_axis=1):
    rows = len(table)
    cols = len(table[0])
    total = sum(sum(r) for r in table)
    if total == 0:
        return 0.0
    acc = 0.0
    if given_axis == 1:
        for y in range(cols):
            col = [table[x][y] for x in range(rows)]
            w = sum(col)
            if w:
                acc += (w / total) * entropy_oracle(col)
    else:
        for x in range(rows):
            w = sum(table[x])
            if w:
                acc += (w / total) * entropy_oracle(table[x])
    return acc


def su_oracle_from_table(table):
    rows = len(table)
    cols = len(table[0])
    hx = entropy_oracle([sum(table[x]) for x in range(rows)])
    hy = entropy_oracle([sum(table[x][y] for x in range(rows)) for y in range(cols)])
    if hx + hy == 0:
        return 0.0
    hx_given_y = cond_entropy_oracle(table, given_axis=1)
    return 2.0 * (hx - hx_given_y) / (hx + hy)


def su_oracle_from_columns(x, y):
    pairs = Counter(zip(map(int, x), map(int, y)))
    xs = sorted({a for a, _ in pairs})
    ys = sorted({b for _, b in pairs})
    table = [[pairs.get((a, b), 0) for b in ys] for a in xs]
    return su_oracle_from_table(table)


def merit_oracle(class_sus, pair_sus):
    """Direct formula: class_sus per member, pair_sus over the k(k-1)/2
    member pairs."""
    k = len(class_sus)
    if k == 0:
        return 0.0
    rcf = sum(class_sus) / k
    if k == 1:
        return rcf
    rff = sum(pair_sus) / len(pair_sus)
    return k * rcf / math.sqrt(k + k * (k - 1) * rff)


def cuts_oracle(values, labels):
    """Brute-force recursive cut search: enumerate boundary midpoints, take
    max gain (ties to the lower threshold), test the description-length rule,
    recurse. Independent of the vectorized implementation."""
    rows = sorted(zip(values, labels), key=lambda t: t[0])

    def boundary_mids(rows):
        groups = []
        for v, lab in rows:
            if groups and groups[-1][0] == v:
                groups[-1][1].append(lab)
            else:
                groups.append((v, [lab]))
        mids = []
        for (v1, g1), (v2, g2) in zip(groups, groups[1:]):
            pure_same = len(set(g1)) == 1 and set(g1) == set(g2)
            if not pure_same:
                mids.append((v1 + v2) / 2)
        return mids

    def rec(rows):
        n = len(rows)
        if n < 2:
            return []
        labs = [l for _, l in rows]
        ent_s = entropy_oracle(Counter(labs).values())
        k = len(set(labs))
        best = None
        for t in boundary_mids(rows):
            left = [r for r in rows if r[0] <= t]
            right = [r for r in rows if r[0] > t]
            e1 = entropy_oracle(Counter(l for _, l in left).values())
            e2 = entropy_oracle(Counter(l for _, l in right).values())
            gain = ent_s - len(left) / n * e1 - len(right) / n * e2
            if best is None or gain > best[0] + 1e-15:
                best = (gain, t, left, right, e1, e2)
        if best is None:
            return []
        gain, t, left, right, e1, e2 = best
        k1 = len(set(l for _, l in left))
        k2 = len(set(l for _, l in right))
        delta = math.log2(3 ** k - 2) - (k * ent_s - k1 * e1 - k2 * e2)
        if gain <= math.log2(n - 1) / n + delta / n:
            return []
        return rec(left) + [t] + rec(right)

    return rec(rows)


@pytest.fixture
def stub_provider_cls():
    return StubProvider
