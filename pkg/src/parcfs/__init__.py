"""Correlation-based feature selection with interchangeable sequential,
row-partitioned (horizontal), and column-partitioned (vertical) correlation
engines that return identical results."""

from .correlation import (
    CorrelationCache,
    conditional_entropy,
    entropy,
    local_ctables,
    merge_tables,
    pair_key,
    symmetrical_uncertainty,
)
from .dataset import (
    ColumnPartition,
    DataError,
    DiscreteDataset,
    RawDataset,
    RowPartition,
    columnar_transform,
    discretize_mdl,
    find_cut_points,
    generate_synthetic,
    load_csv,
    mdl_accepts_cut,
    partition_rows,
    write_discretized,
)
from .engines import (
    CorrelationProvider,
    EngineConfig,
    HorizontalProvider,
    SequentialProvider,
    VerticalProvider,
    all_pairs,
    make_provider,
)
from .search import (
    FeatureSubset,
    SearchTrace,
    add_locally_predictive,
    best_first_search,
    expand,
    merit,
    required_pairs,
    run_cfs,
)

__version__ = "0.1.0"
