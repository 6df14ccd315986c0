"""Contingency tables are the only statistic the correlation math needs.

A table for a feature pair is a joint count matrix. Entropies, conditional
entropy, and the symmetrical uncertainty score all derive from it, and
tables counted over disjoint row blocks merge by plain integer addition --
which is why any partitioning of the data gives bit-identical correlations.
"""

import numpy as np

from parcfs import (
    conditional_entropy,
    entropy,
    local_ctables,
    merge_tables,
    symmetrical_uncertainty,
)

# the worked example: X rows, Y columns
table = np.array([[1, 1],
                  [0, 2]])
print("joint counts:\n", table)
print("H(X)      =", entropy(table.sum(axis=1)))          # 1.0
print("H(Y)      =", entropy(table.sum(axis=0)))          # 0.8113
print("H(X|Y)    =", conditional_entropy(table, given_axis=1))  # 0.6887
print("SU(X,Y)   =", symmetrical_uncertainty(table))      # 0.3437

print("\nperfectly correlated:", symmetrical_uncertainty(np.array([[2, 0], [0, 2]])))
print("independent uniform: ", symmetrical_uncertainty(np.array([[1, 1], [1, 1]])))

# --- partition independence ---------------------------------------------------
rng = np.random.default_rng(1)
rows = rng.integers(0, 3, (1000, 2)).astype(np.int32)
arities = [3, 3]

whole = local_ctables([(0, 1)], rows, arities)[(0, 1)]
merged = None
for block in np.array_split(rows, 7):
    part = local_ctables([(0, 1)], block, arities)[(0, 1)]
    merged = part if merged is None else merge_tables(merged, part)

print("\n7-block merge equals one pass:", np.array_equal(whole, merged))
print("SU from either path:", symmetrical_uncertainty(whole),
      "==", symmetrical_uncertainty(merged))
