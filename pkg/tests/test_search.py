import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parcfs.correlation import CorrelationCache
from parcfs.dataset import DiscreteDataset, generate_synthetic
from parcfs.engines import (
    HorizontalProvider,
    SequentialProvider,
    VerticalProvider,
)
from parcfs.search import (
    FeatureSubset,
    SearchTrace,
    _BoundedQueue,
    add_locally_predictive,
    best_first_search,
    expand,
    merit,
    required_pairs,
    run_cfs,
)

from conftest import StubProvider, merit_oracle

GOLDENS = Path(__file__).parent / "goldens"


def cache_of(values):
    cache = CorrelationCache()
    cache.put_batch(values)
    return cache


def class_copy_ds():
    # a = class copy, b = independent noise, c = copy of a
    codes = np.array([
        [0, 0, 0, 0],
        [1, 0, 1, 1],
        [0, 1, 0, 0],
        [1, 1, 1, 1],
    ], dtype=np.int32)
    return DiscreteDataset(codes, [2, 2, 2, 2], ["a", "b", "c"])


class TestMerit:
    def test_single_feature_is_class_correlation(self):
        cache = cache_of({(0, 5): 0.6})
        assert merit(FeatureSubset((0,)), cache, 5) == 0.6

    def test_two_feature_hand_value(self):
        cache = cache_of({(0, 2): 0.8, (1, 2): 0.8, (0, 1): 0.4})
        got = merit(FeatureSubset((0, 1)), cache, 2)
        assert got == pytest.approx(merit_oracle([0.8, 0.8], [0.4]), abs=1e-12)
        assert got == pytest.approx(0.9562, abs=1e-4)

    def test_redundant_copy_gains_nothing(self):
        cache = cache_of({(0, 2): 1.0, (1, 2): 1.0, (0, 1): 1.0})
        assert merit(FeatureSubset((0, 1)), cache, 2) == 1.0
        assert merit(FeatureSubset((0,)), cache, 2) == 1.0

    def test_empty_subset_is_zero(self):
        assert merit(FeatureSubset(), CorrelationCache(), 3) == 0.0

    def test_missing_correlation_is_programming_error(self):
        with pytest.raises(KeyError):
            merit(FeatureSubset((0,)), CorrelationCache(), 3)

    def test_class_member_rejected(self):
        cache = cache_of({(0, 3): 0.5})
        with pytest.raises(ValueError):
            merit(FeatureSubset((0, 3)), cache, 3)


class TestExpand:
    def test_empty_to_singletons(self):
        kids = expand(FeatureSubset(), 3)
        assert [k.features for k in kids] == [(0,), (1,), (2,)]
        assert [k.last_added for k in kids] == [0, 1, 2]

    def test_skips_members(self):
        kids = expand(FeatureSubset((1,)), 3)
        assert [k.features for k in kids] == [(1, 0), (1, 2)]

    def test_full_subset_empty(self):
        assert expand(FeatureSubset((0, 1, 2)), 3) == []


class TestRequiredPairs:
    def test_first_expansion_class_pairs(self):
        kids = expand(FeatureSubset(), 3)
        assert required_pairs(kids, CorrelationCache(), 3) == \
            [(0, 3), (1, 3), (2, 3)]

    def test_after_first_round_only_new_pairs(self):
        cache = cache_of({(0, 3): 0.1, (1, 3): 0.5, (2, 3): 0.2})
        kids = expand(FeatureSubset((1,), last_added=1), 3)
        assert required_pairs(kids, cache, 3) == [(0, 1), (1, 2)]

    def test_everything_cached(self):
        cache = cache_of({(0, 3): 0.1, (1, 3): 0.5, (2, 3): 0.2,
                          (0, 1): 0.0, (1, 2): 0.0})
        kids = expand(FeatureSubset((1,), last_added=1), 3)
        assert required_pairs(kids, cache, 3) == []


class TestBoundedQueue:
    def test_capacity_enforced_drop_lowest(self):
        q = _BoundedQueue(3)
        subs = [FeatureSubset((i,), merit=m) for i, m in
                enumerate([0.5, 0.9, 0.1, 0.7, 0.3])]
        q.add(subs)
        assert len(q) == 3
        assert [s.merit for s in q.entries] == [0.9, 0.7, 0.5]

    def test_tie_break_size_then_members(self):
        q = _BoundedQueue(5)
        a = FeatureSubset((2,), merit=0.5)
        b = FeatureSubset((0, 1), merit=0.5)
        c = FeatureSubset((1,), merit=0.5)
        q.add([a, b, c])
        assert [s.features for s in q.entries] == [(1,), (2,), (0, 1)]

    def test_duplicate_sets_ordered_by_insertion_tuple(self):
        q = _BoundedQueue(5)
        a = FeatureSubset((2, 0), merit=0.5)
        b = FeatureSubset((0, 2), merit=0.5)
        q.add([a, b])
        assert [s.features for s in q.entries] == [(0, 2), (2, 0)]

    @given(st.lists(st.tuples(st.floats(0, 1), st.integers(0, 9)), max_size=30))
    @settings(max_examples=60, deadline=None)
    def test_never_exceeds_capacity_keeps_best(self, items):
        q = _BoundedQueue(5)
        for mval, f in items:
            q.add([FeatureSubset((f,), merit=mval)])
            assert len(q) <= 5
        if items:
            best = max(m for m, _ in items)
            assert q.head().merit == best


class TestBestFirstSearch:
    def test_class_copy_dataset_selects_copy(self):
        ds = class_copy_ds()
        with SequentialProvider(ds) as prov:
            best = best_first_search(prov, ds.m, ds.class_index)
        assert best.features == (0,)
        assert best.merit == 1.0

    def test_trace_matches_hand_golden_all_engines(self):
        ds = class_copy_ds()
        want = (GOLDENS / "trace_class_copy.tsv").read_text()
        providers = [SequentialProvider(ds),
                     HorizontalProvider(ds, partitions=2),
                     VerticalProvider(ds, partitions=3)]
        for prov in providers:
            with prov:
                trace = SearchTrace()
                best = best_first_search(prov, ds.m, ds.class_index, trace=trace)
            assert best.features == (0,)
            assert trace.text() == want

    def test_single_feature_queue_exhaustion(self):
        stub = StubProvider([0.3], class_index=1)
        best = best_first_search(stub, 1, 1)
        assert best.features == (0,)
        assert best.merit == 0.3

    def test_all_constant_features_select_nothing(self):
        codes = np.zeros((6, 4), dtype=np.int32)
        codes[:, 3] = [0, 1, 0, 1, 0, 1]
        ds = DiscreteDataset(codes, [1, 1, 1, 2], ["a", "b", "c"])
        with SequentialProvider(ds) as prov:
            trace = SearchTrace()
            best = best_first_search(prov, ds.m, ds.class_index, trace=trace)
        assert best.features == ()
        assert best.merit == 0.0
        assert trace.lines[-1].endswith("\t5")     # stopped by the fail counter

    def test_five_fail_guard_matches_hand_golden(self):
        # class correlations in exact 128ths; every pair fully redundant
        # except (1, 3), whose combination would beat the incumbent
        v = [80 / 128, 76 / 128, 73 / 128, 38 / 128]
        stub = StubProvider(v, class_index=4, zero_pairs=[(1, 3)])
        trace = SearchTrace()
        best = best_first_search(stub, 4, 4, trace=trace)
        assert best.features == (0,)
        assert best.merit == 0.625
        assert trace.text() == (GOLDENS / "trace_five_fails.tsv").read_text()

    def test_sixth_expansion_would_improve(self):
        # identical setup: one more allowed fail reaches the better subset
        v = [80 / 128, 76 / 128, 73 / 128, 38 / 128]
        stub = StubProvider(v, class_index=4, zero_pairs=[(1, 3)])
        best6 = best_first_search(stub, 4, 4, max_fails=6)
        assert best6.features == (1, 3)
        assert best6.merit == pytest.approx((114 / 128) / math.sqrt(2), abs=1e-12)
        assert best6.merit > 0.625

    def test_monotone_best_and_fail_resets(self):
        ds = generate_synthetic(400, 10, 3, 2, relevant=3, redundant=1, seed=11)
        with SequentialProvider(ds) as prov:
            trace = SearchTrace()
            best_first_search(prov, ds.m, ds.class_index, trace=trace)
        merits = [float(line.split("\t")[3]) for line in trace.lines]
        fails = [int(line.split("\t")[4]) for line in trace.lines]
        assert merits == sorted(merits)
        for prev, cur, m_prev, m_cur in zip(fails, fails[1:], merits, merits[1:]):
            if m_cur > m_prev:
                assert cur == 0
            else:
                assert cur == prev + 1 or cur == 0


class TestLocallyPredictive:
    def test_appends_when_class_beats_members(self):
        stub = StubProvider([0.6, 0.5], class_index=2,
                            pair_su={(0, 1): 0.2})
        best = FeatureSubset((0,), merit=0.6, last_added=0)
        cache = cache_of({(0, 2): 0.6})
        out = add_locally_predictive(best, stub, 2, 2, cache=cache)
        assert out.features == (0, 1)
        assert out.merit == pytest.approx(merit_oracle([0.6, 0.5], [0.2]), abs=1e-12)

    def test_copy_of_selected_rejected(self):
        ds = class_copy_ds()
        with SequentialProvider(ds) as prov:
            cache = CorrelationCache()
            best = best_first_search(prov, ds.m, ds.class_index, cache=cache)
            out = add_locally_predictive(best, prov, ds.m, ds.class_index,
                                         cache=cache)
        assert out.features == (0,)        # c and b both vetoed

    def test_no_outside_features(self):
        stub = StubProvider([0.6], class_index=1)
        best = FeatureSubset((0,), merit=0.6, last_added=0)
        out = add_locally_predictive(best, stub, 1, 1, cache=cache_of({(0, 1): 0.6}))
        assert out is best

    def test_visit_order_by_class_correlation(self):
        # f2 visited first (higher class SU), appended; f1 then vetoed by f2
        stub = StubProvider([0.9, 0.3, 0.5], class_index=3,
                            pair_su={(0, 1): 0.0, (0, 2): 0.1, (1, 2): 0.9})
        best = FeatureSubset((0,), merit=0.9, last_added=0)
        out = add_locally_predictive(best, stub, 3, 3,
                                     cache=cache_of({(0, 3): 0.9}))
        assert out.features == (0, 2)


class TestRunPipeline:
    def test_on_demand_economy(self):
        ds = generate_synthetic(300, 20, 3, 2, relevant=3, redundant=2, seed=5)
        with SequentialProvider(ds) as prov:
            res = run_cfs(prov, ds.m, ds.class_index)
            total = ds.m * (ds.m + 1) // 2
            rounds = prov.rounds
            assert prov.pairs_computed <= ds.m + rounds * ds.m
            if res.stopped_by_fails:
                assert prov.pairs_computed < total

    def test_eager_equals_on_demand(self):
        for seed in (1, 2, 3):
            ds = generate_synthetic(200, 8, 3, 2, relevant=2, redundant=1,
                                    seed=seed)
            with SequentialProvider(ds) as p1:
                lazy = run_cfs(p1, ds.m, ds.class_index)
            with SequentialProvider(ds) as p2:
                eager = run_cfs(p2, ds.m, ds.class_index, eager=True)
                assert p2.pairs_computed == ds.m * (ds.m + 1) // 2
            assert eager.subset.features == lazy.subset.features
            assert eager.subset.merit == lazy.subset.merit

    def test_provider_independence_with_post_processing(self):
        for seed in (21, 22):
            ds = generate_synthetic(250, 9, 4, 3, relevant=3, redundant=2,
                                    seed=seed)
            results = []
            for prov in (SequentialProvider(ds),
                         HorizontalProvider(ds, partitions=3, workers=2),
                         VerticalProvider(ds, partitions=4)):
                with prov:
                    res = run_cfs(prov, ds.m, ds.class_index)
                results.append((res.subset.features, res.subset.merit))
            assert len(set(results)) == 1

    def test_trace_flag_produces_trace(self):
        ds = class_copy_ds()
        with SequentialProvider(ds) as prov:
            res = run_cfs(prov, ds.m, ds.class_index, trace=True)
        assert res.trace is not None and len(res.trace.lines) == 6
