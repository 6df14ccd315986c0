"""Dataset ingestion, supervised MDL discretization, and partition layouts.

Everything downstream works on small-integer category codes. This module
turns raw CSV data (numeric and categorical columns, possibly with missing
entries) into a dense code matrix, and produces the two physical layouts the
correlation engines consume: contiguous row blocks and per-feature column
partitions with a replicated class column.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

MISSING_TOKENS = ("", "?")


class DataError(ValueError):
    """Unreadable, malformed, or degenerate input data."""


# ---------------------------------------------------------------------------
# raw (pre-discretization) data
# ---------------------------------------------------------------------------

@dataclass
class RawColumn:
    name: str
    kind: str                      # "numeric" | "categorical"
    numeric: np.ndarray | None = None    # float64, NaN marks missing
    labels: list | None = None           # str entries, None marks missing

    @property
    def n(self):
        return len(self.numeric) if self.kind == "numeric" else len(self.labels)


@dataclass
class RawDataset:
    columns: list
    class_index: int
    n_rows: int

    @property
    def class_column(self):
        return self.columns[self.class_index]


def _is_missing(token):
    return token in MISSING_TOKENS


def _parses_numeric(token):
    try:
        return math.isfinite(float(token))
    except ValueError:
        return False


def load_csv(path, class_column, header=True):
    """Read a CSV file into a RawDataset.

    A column is numeric iff every non-missing token parses as a finite
    number; anything else is categorical. "" and "?" are missing. The class
    column (referenced by name or positional index) is always categorical.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty file")

    if header:
        names = [t.strip() for t in rows[0]]
        data_rows = rows[1:]
        first_line = 2
    else:
        names = [f"c{i}" for i in range(len(rows[0]))]
        data_rows = rows
        first_line = 1
    if not data_rows:
        raise DataError(f"{path}: no data rows")

    width = len(names)
    for i, row in enumerate(data_rows):
        if len(row) != width:
            raise DataError(
                f"{path}: line {first_line + i} has {len(row)} fields, expected {width}")

    if isinstance(class_column, int) or (isinstance(class_column, str)
                                         and class_column.lstrip("-").isdigit()
                                         and class_column not in names):
        idx = int(class_column)
        if not 0 <= idx < width:
            raise DataError(f"class column index {idx} out of range (0..{width - 1})")
        class_index = idx
    else:
        if class_column not in names:
            raise DataError(f"class column {class_column!r} not found in {names}")
        class_index = names.index(class_column)

    columns = []
    for j, name in enumerate(names):
        tokens = [row[j].strip() for row in data_rows]
        non_missing = [t for t in tokens if not _is_missing(t)]
        if j == class_index:
            if not non_missing:
                raise DataError(f"class column {name!r} is entirely missing")
            if len(set(non_missing)) < 2:
                raise DataError(
                    f"class column {name!r} has a single distinct label; "
                    "need at least 2 classes")
            columns.append(RawColumn(name, "categorical",
                                     labels=[None if _is_missing(t) else t for t in tokens]))
        elif non_missing and all(_parses_numeric(t) for t in non_missing):
            vals = np.array([math.nan if _is_missing(t) else float(t) for t in tokens])
            columns.append(RawColumn(name, "numeric", numeric=vals))
        else:
            columns.append(RawColumn(name, "categorical",
                                     labels=[None if _is_missing(t) else t for t in tokens]))

    return RawDataset(columns=columns, class_index=class_index, n_rows=len(data_rows))


# ---------------------------------------------------------------------------
# discrete data
# ---------------------------------------------------------------------------

@dataclass
class DiscreteDataset:
    """n x (m+1) matrix of category codes; the class is always the last column.

    arities[j] is the declared number of codes for column j (codes run
    0..arities[j]-1 whether or not every code occurs). Code matrices are
    frozen after construction and safe to share across worker tasks.
    """
    codes: np.ndarray
    arities: list
    feature_names: list
    class_name: str = "class"

    def __post_init__(self):
        # column-major so per-column scans (the counting hot path) stay
        # contiguous for any row range
        self.codes = np.asfortranarray(self.codes, dtype=np.int32)
        self.codes.flags.writeable = False
        if self.codes.ndim != 2:
            raise DataError("codes must be a 2-D matrix")
        n, width = self.codes.shape
        if n < 1 or width < 2:
            raise DataError("need at least 1 row and 1 feature plus the class")
        if len(self.arities) != width:
            raise DataError("arities length must match column count")
        if len(self.feature_names) != width - 1:
            raise DataError("feature_names length must be m")
        if any(a < 1 for a in self.arities):
            raise DataError("arities must be >= 1")
        if self.arities[-1] < 2:
            raise DataError("class arity must be >= 2")
        if self.codes.min() < 0 or (self.codes >= np.array(self.arities)).any():
            raise DataError("codes out of range for declared arities")

    @property
    def n(self):
        return self.codes.shape[0]

    @property
    def m(self):
        return self.codes.shape[1] - 1

    @property
    def class_index(self):
        return self.m

    def digest(self):
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.codes).tobytes())
        h.update(",".join(map(str, self.arities)).encode())
        return h.hexdigest()[:16]


@dataclass
class RowPartition:
    """Contiguous block of dataset rows handled by one worker task."""
    partition_id: int
    start: int
    stop: int

    @property
    def n_rows(self):
        return self.stop - self.start

    def view(self, ds):
        return ds.codes[self.start:self.stop]


@dataclass
class ColumnPartition:
    """A group of whole feature columns plus a replica of the class column."""
    partition_id: int
    feature_columns: dict          # feature index -> full column of n codes
    class_column: np.ndarray


@dataclass
class ColumnCodec:
    """How one output column was encoded (sidecar metadata)."""
    name: str
    kind: str                      # "numeric" | "categorical"
    arity: int
    cut_points: list = field(default_factory=list)    # numeric only
    categories: list = field(default_factory=list)    # categorical only
    missing_code: int | None = None
    uninformative: bool = False    # arity 1: carries no information


@dataclass
class DiscretizationModel:
    """Per-column codecs, in output column order (features first, class last)."""
    columns: list

    @property
    def cut_points(self):
        return {c.name: list(c.cut_points) for c in self.columns if c.kind == "numeric"}

    def to_json_dict(self):
        cols = []
        for c in self.columns:
            d = {"name": c.name, "kind": c.kind, "arity": c.arity,
                 "missing_code": c.missing_code, "uninformative": c.uninformative}
            if c.kind == "numeric":
                d["cut_points"] = list(c.cut_points)
            else:
                d["categories"] = list(c.categories)
            cols.append(d)
        return {"columns": cols}


# ---------------------------------------------------------------------------
# MDL discretization
# ---------------------------------------------------------------------------

def _entropy_bits(counts):
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    h = float(-(p * np.log2(p)).sum())
    return 0.0 if h == 0.0 else h


def mdl_accepts_cut(n, base_entropy, left, right, k):
    """Minimum-description-length acceptance test for one binary split.

    left and right are (size, entropy_bits, class_count) for the two halves.
    Accept iff the split's information gain strictly exceeds
    log2(n-1)/n + delta/n, with
    delta = log2(3^k - 2) - (k*Ent(S) - k1*Ent(S1) - k2*Ent(S2)).
    """
    n1, e1, k1 = left
    n2, e2, k2 = right
    if n != n1 + n2 or n < 2:
        raise ValueError("partition sizes inconsistent")
    gain = base_entropy - (n1 / n) * e1 - (n2 / n) * e2
    delta = math.log2(3 ** k - 2) - (k * base_entropy - k1 * e1 - k2 * e2)
    return gain > math.log2(n - 1) / n + delta / n


def find_cut_points(values, labels):
    """Recursive entropy-minimizing binary splitting with the MDL stop rule.

    Candidate thresholds are midpoints between adjacent distinct values,
    restricted to class boundary points (a midpoint between two runs that are
    both pure in the same class can never be optimal and is skipped). Ties in
    gain go to the lower threshold. Returns strictly increasing thresholds;
    empty when no cut is ever accepted.
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels)
    if values.shape != labels.shape:
        raise ValueError("values and labels must have the same length")
    if len(values) == 0:
        return []

    order = np.argsort(values, kind="stable")
    sv = values[order]
    _, sl = np.unique(labels, return_inverse=True)
    sl = sl[order]
    k_global = int(sl.max()) + 1

    # collapse to runs of equal value; all candidate cuts sit between runs
    run_starts = np.concatenate(([0], np.flatnonzero(np.diff(sv)) + 1))
    n_runs = len(run_starts)
    if n_runs < 2:
        return []
    run_values = sv[run_starts]
    run_ends = np.concatenate((run_starts[1:], [len(sv)]))

    # per-run class counts and their prefix sums (prefix[r] covers runs[:r])
    run_counts = np.zeros((n_runs, k_global), dtype=np.int64)
    run_ids = np.repeat(np.arange(n_runs), run_ends - run_starts)
    np.add.at(run_counts, (run_ids, sl), 1)
    prefix = np.zeros((n_runs + 1, k_global), dtype=np.int64)
    np.cumsum(run_counts, axis=0, out=prefix[1:])

    # boundary-point restriction, evaluated once per adjacent run pair
    pure = (run_counts > 0).sum(axis=1) == 1
    pure_class = run_counts.argmax(axis=1)
    boundary = ~(pure[:-1] & pure[1:] & (pure_class[:-1] == pure_class[1:]))

    def ent_rows(count_rows):
        # entropy of each row of class-count vectors, in bits
        totals = count_rows.sum(axis=1, keepdims=True).astype(np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            p = count_rows / totals
            terms = np.where(count_rows > 0, p * np.log2(p), 0.0)
        return -terms.sum(axis=1)

    cuts = []
    stack = [(0, n_runs)]      # half-open run ranges
    while stack:
        rlo, rhi = stack.pop()
        if rhi - rlo < 2:
            continue
        seg = prefix[rhi] - prefix[rlo]
        n_seg = int(seg.sum())
        ent_seg = _entropy_bits(seg)
        k_seg = int((seg > 0).sum())

        # cut index b splits runs [rlo, b) | [b, rhi); boundary[b-1] guards it
        cand = rlo + 1 + np.flatnonzero(boundary[rlo:rhi - 1])
        if len(cand) == 0:
            continue
        left_counts = prefix[cand] - prefix[rlo]
        right_counts = seg - left_counts
        n_left = left_counts.sum(axis=1)
        n_right = right_counts.sum(axis=1)
        e_left = ent_rows(left_counts)
        e_right = ent_rows(right_counts)
        gains = ent_seg - (n_left / n_seg) * e_left - (n_right / n_seg) * e_right
        best = int(np.argmax(gains))      # first maximum = lowest threshold
        b = int(cand[best])

        accepted = mdl_accepts_cut(
            n_seg, ent_seg,
            (int(n_left[best]), float(e_left[best]), int((left_counts[best] > 0).sum())),
            (int(n_right[best]), float(e_right[best]), int((right_counts[best] > 0).sum())),
            k_seg)
        if not accepted:
            continue
        cuts.append(float((run_values[b - 1] + run_values[b]) / 2.0))
        stack.append((rlo, b))
        stack.append((b, rhi))

    return sorted(cuts)


def _code_categorical(labels):
    """First-appearance code map over non-missing labels; missing gets the
    last code. Returns (codes, categories, missing_code)."""
    mapping = {}
    categories = []
    for lab in labels:
        if lab is not None and lab not in mapping:
            mapping[lab] = len(categories)
            categories.append(lab)
    has_missing = any(lab is None for lab in labels)
    missing_code = len(categories) if has_missing else None
    codes = np.fromiter(
        (missing_code if lab is None else mapping[lab] for lab in labels),
        dtype=np.int32, count=len(labels))
    return codes, categories, missing_code


def discretize_mdl(raw):
    """Discretize a RawDataset: numeric columns by MDL cut points against the
    class, categorical columns by first-appearance coding. Missing values in
    any column become a dedicated extra code. The class moves to the last
    output column. Returns (DiscreteDataset, DiscretizationModel)."""
    cls_col = raw.class_column
    cls_codes, cls_cats, cls_missing = _code_categorical(cls_col.labels)
    cls_arity = len(cls_cats) + (1 if cls_missing is not None else 0)

    out_cols, codecs, names = [], [], []
    for j, col in enumerate(raw.columns):
        if j == raw.class_index:
            continue
        if col.kind == "numeric":
            vals = col.numeric
            present = ~np.isnan(vals)
            cuts = find_cut_points(vals[present], cls_codes[present])
            codes = np.zeros(raw.n_rows, dtype=np.int32)
            codes[present] = np.searchsorted(np.asarray(cuts), vals[present],
                                             side="left").astype(np.int32)
            n_bins = len(cuts) + 1
            missing_code = None
            if not present.all():
                missing_code = n_bins
                codes[~present] = missing_code
            arity = n_bins + (1 if missing_code is not None else 0)
            codecs.append(ColumnCodec(col.name, "numeric", arity, cut_points=list(cuts),
                                      missing_code=missing_code,
                                      uninformative=arity == 1))
        else:
            codes, cats, missing_code = _code_categorical(col.labels)
            arity = len(cats) + (1 if missing_code is not None else 0)
            codecs.append(ColumnCodec(col.name, "categorical", arity, categories=cats,
                                      missing_code=missing_code,
                                      uninformative=arity == 1))
        out_cols.append(codes)
        names.append(col.name)

    out_cols.append(cls_codes)
    codecs.append(ColumnCodec(cls_col.name, "categorical", cls_arity,
                              categories=cls_cats, missing_code=cls_missing))
    ds = DiscreteDataset(codes=np.column_stack(out_cols),
                         arities=[c.arity for c in codecs],
                         feature_names=names, class_name=cls_col.name)
    return ds, DiscretizationModel(columns=codecs)


# ---------------------------------------------------------------------------
# partition layouts
# ---------------------------------------------------------------------------

def _block_sizes(total, parts):
    base, extra = divmod(total, parts)
    return [base + 1 if i < extra else base for i in range(parts)]


def partition_rows(ds, p):
    """Split the dataset into p contiguous row blocks with sizes differing by
    at most one."""
    if not 1 <= p <= ds.n:
        raise ValueError(f"partition count {p} out of range 1..{ds.n}")
    parts, start = [], 0
    for pid, size in enumerate(_block_sizes(ds.n, p)):
        parts.append(RowPartition(pid, start, start + size))
        start += size
    return parts


def columnar_transform(ds, q):
    """Transpose the layout: assign features to q partitions in contiguous
    index blocks, replicating the class column into every partition."""
    if not 1 <= q <= ds.m:
        raise ValueError(f"column partition count {q} out of range 1..{ds.m}")
    class_col = ds.codes[:, ds.class_index]
    parts, start = [], 0
    for pid, size in enumerate(_block_sizes(ds.m, q)):
        feats = {j: ds.codes[:, j] for j in range(start, start + size)}
        parts.append(ColumnPartition(pid, feats, class_col))
        start += size
    return parts


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------

def generate_synthetic(n, m, arity, class_arity, relevant, redundant, seed,
                       noise=0.25):
    """Deterministic synthetic dataset with known structure: `relevant`
    features are noisy encodings of the class, `redundant` features are exact
    copies of relevant ones (cycled), and the rest are uniform noise.

    arity may be a single int or a per-feature sequence of length m.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    if class_arity < 2:
        raise ValueError("class_arity must be >= 2")
    if relevant < 0 or redundant < 0 or relevant + redundant > m:
        raise ValueError("need relevant + redundant <= m and both >= 0")
    if redundant > 0 and relevant == 0:
        raise ValueError("redundant features require at least one relevant feature")
    arities = [int(arity)] * m if np.isscalar(arity) else [int(a) for a in arity]
    if len(arities) != m:
        raise ValueError("per-feature arity list must have length m")
    if any(a < 1 for a in arities):
        raise ValueError("feature arities must be >= 1")

    rng = np.random.default_rng(seed)
    cls = rng.integers(0, class_arity, n, dtype=np.int32)
    cols = []
    for j in range(m):
        a = arities[j]
        if j < relevant:
            base = (cls % a).astype(np.int32)
            flip = rng.random(n) < noise
            rand = rng.integers(0, a, n, dtype=np.int32)
            cols.append(np.where(flip, rand, base))
        elif j < relevant + redundant:
            src = (j - relevant) % relevant
            arities[j] = arities[src]      # an exact copy inherits its arity
            cols.append(cols[src].copy())
        else:
            cols.append(rng.integers(0, a, n, dtype=np.int32))
    cols.append(cls)
    return DiscreteDataset(codes=np.column_stack(cols),
                           arities=arities + [class_arity],
                           feature_names=[f"x{j}" for j in range(m)])


# ---------------------------------------------------------------------------
# coded output
# ---------------------------------------------------------------------------

def write_discretized(ds, model, csv_path):
    """Write the coded dataset as integer CSV plus a `<csv_path>.json` sidecar
    carrying cut points, category code maps, arities, and missing codes."""
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ds.feature_names + [ds.class_name])
        for row in np.asarray(ds.codes):
            w.writerow([int(v) for v in row])
    sidecar = str(csv_path) + ".json"
    with open(sidecar, "w") as fh:
        json.dump(model.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sidecar
