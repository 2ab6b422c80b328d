import numpy as np
import pytest

from survefs.data import (
    CvPlan,
    Schema,
    SurvivalDataset,
    impute,
    load_csv,
    make_cv_plan,
    make_probes,
    normalize,
)
from survefs.errors import ConfigError, DataError

from conftest import random_dataset


def write_csv(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


BASIC_SCHEMA = Schema("t", "e", [("x", "continuous")])


class TestLoadCsv:
    def test_three_row_numeric(self, tmp_path):
        path = write_csv(tmp_path, "t,e,x\n1,1,0.5\n2,0,1.5\n3,1,2.5\n")
        d = load_csv(path, BASIC_SCHEMA)
        assert d.n == 3 and d.p == 1
        assert list(d.time) == [1, 2, 3]
        assert list(d.event) == [1, 0, 1]

    def test_categorical_expands_k_minus_one(self, tmp_path):
        # 3 levels -> 2 indicator columns; most frequent level is reference
        rows = "t,e,c\n1,1,a\n2,0,b\n3,1,b\n4,0,c\n5,1,b\n"
        schema = Schema("t", "e", [("c", "categorical")])
        d = load_csv(write_csv(tmp_path, rows), schema)
        assert d.p == 2
        assert d.feature_names == ("c=a", "c=c")
        assert d.feature_kinds == ("binary", "binary")
        assert list(d.features[:, 0]) == [1, 0, 0, 0, 0]

    def test_nonpositive_time_names_row(self, tmp_path):
        body = "".join(f"{t},1,0.1\n" for t in [1, 2, 3, 4, 5, 6])
        path = write_csv(tmp_path, "t,e,x\n" + body + "0,1,0.5\n")
        with pytest.raises(DataError, match="row 7"):
            load_csv(path, BASIC_SCHEMA)

    def test_event_outside_01_rejected(self, tmp_path):
        path = write_csv(tmp_path, "t,e,x\n1,1,0.5\n2,2,1.0\n")
        with pytest.raises(DataError, match="event"):
            load_csv(path, BASIC_SCHEMA)

    def test_duplicate_feature_names_rejected(self, tmp_path):
        path = write_csv(tmp_path, "t,e,x\n1,1,0.5\n2,0,1.0\n")
        schema = Schema("t", "e", [("x", "continuous"), ("x", "continuous")])
        with pytest.raises(DataError, match="duplicate"):
            load_csv(path, schema)

    def test_zero_events_rejected(self, tmp_path):
        path = write_csv(tmp_path, "t,e,x\n1,0,0.5\n2,0,1.0\n")
        with pytest.raises(DataError, match="zero observed events"):
            load_csv(path, BASIC_SCHEMA)

    def test_missing_cells_masked(self, tmp_path):
        path = write_csv(tmp_path, "t,e,x,y\n1,1,,3\n2,0,NA,4\n3,1,1.5,\n")
        schema = Schema("t", "e", [("x", "continuous"), ("y", "continuous")])
        d = load_csv(path, schema)
        assert d.missing is not None
        assert d.missing[:, 0].tolist() == [True, True, False]
        assert d.missing[:, 1].tolist() == [False, False, True]

    def test_probe_namespace_reserved(self, tmp_path):
        path = write_csv(tmp_path, "t,e,__probe__0\n1,1,0.5\n2,0,1.0\n")
        schema = Schema("t", "e", [("__probe__0", "continuous")])
        with pytest.raises(DataError, match="probe"):
            load_csv(path, schema)

    def test_aggregate_pre_combines_sources(self, tmp_path):
        path = write_csv(tmp_path, "t,e,bp1,bp2\n1,1,10,20\n2,0,30,\n3,1,,\n")
        schema = Schema(
            "t", "e", [("bp", "continuous")], aggregate=[("bp", ["bp1", "bp2"])]
        )
        d = load_csv(path, schema)
        assert d.features[0, 0] == 15.0
        assert d.features[1, 0] == 30.0
        assert d.missing[2, 0]


class TestImpute:
    def _with_missing(self):
        X = np.array([[1.0, 0.0], [np.nan, 0.0], [3.0, np.nan]])
        mask = np.isnan(X)
        return SurvivalDataset(
            np.where(mask, 0.0, X),
            [1.0, 2.0, 3.0],
            [1, 0, 1],
            ("a", "b"),
            ("continuous", "binary"),
            mask,
        )

    def test_median_fill(self):
        d, stats = impute(self._with_missing())
        assert d.features[1, 0] == 2.0  # median of {1, 3}
        assert d.missing is None

    def test_binary_mode_fill(self):
        d, _ = impute(self._with_missing())
        assert d.features[2, 1] == 0.0

    def test_all_missing_column_errors(self):
        mask = np.array([[True], [True], [True]])
        d = SurvivalDataset(
            np.zeros((3, 1)), [1.0, 2, 3], [1, 0, 1], ("only",), ("continuous",), mask
        )
        with pytest.raises(DataError, match="'only'"):
            impute(d)

    def test_training_stats_reused_on_test(self):
        train = self._with_missing()
        _, stats = impute(train)
        X = np.array([[np.nan, 1.0], [5.0, np.nan]])
        mask = np.isnan(X)
        test = SurvivalDataset(
            np.where(mask, 0.0, X), [1.0, 2], [1, 0], ("a", "b"),
            ("continuous", "binary"), mask,
        )
        filled, _ = impute(test, stats)
        assert filled.features[0, 0] == 2.0  # training median, not test value
        assert filled.features[1, 1] == 0.0  # training mode


class TestNormalize:
    def test_123_maps_to_unit_steps(self):
        d = SurvivalDataset(
            [[1.0], [2.0], [3.0]], [1.0, 2, 3], [1, 0, 1], ("x",), ("continuous",)
        )
        out, stats = normalize(d)
        assert np.allclose(out.features[:, 0], [-1, 0, 1])
        assert stats.sd_convention == "sample (ddof=1)"

    def test_idempotent_up_to_float(self, rng):
        d = random_dataset(rng, 50, 3)
        once, _ = normalize(d)
        twice, stats2 = normalize(once)
        assert np.allclose(once.features, twice.features, atol=1e-12)
        assert np.allclose(stats2.mean, 0, atol=1e-12)
        assert np.allclose(stats2.sd[~stats2.constant], 1, atol=1e-12)

    def test_constant_column_zeroed_and_flagged(self):
        d = SurvivalDataset(
            [[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]],
            [1.0, 2, 3], [1, 0, 1], ("c", "x"), ("continuous", "continuous"),
        )
        out, stats = normalize(d)
        assert stats.constant.tolist() == [True, False]
        assert np.all(out.features[:, 0] == 0.0)

    def test_binary_untouched(self):
        d = SurvivalDataset(
            [[0.0], [1.0], [1.0]], [1.0, 2, 3], [1, 0, 1], ("b",), ("binary",)
        )
        out, _ = normalize(d)
        assert out.features[:, 0].tolist() == [0, 1, 1]

    def test_training_stats_reused_on_test(self, rng):
        d = random_dataset(rng, 40, 2)
        train, test = d.rows(np.arange(30)), d.rows(np.arange(30, 40))
        _, stats = normalize(train)
        out, _ = normalize(test, stats)
        expect = (test.features - stats.mean) / stats.sd
        assert np.allclose(out.features, expect)

    def test_requires_imputed(self):
        mask = np.array([[True], [False], [False]])
        d = SurvivalDataset(
            np.zeros((3, 1)), [1.0, 2, 3], [1, 0, 1], ("x",), ("continuous",), mask
        )
        with pytest.raises(DataError, match="impute"):
            normalize(d)


class TestProbes:
    def test_multiset_preserved(self, rng):
        d = random_dataset(rng, 30, 1)
        probes = make_probes(d, 1, seed=5)
        assert np.allclose(
            np.sort(probes.probe_values[:, 0]), np.sort(d.features[:, 0])
        )

    def test_deterministic(self, rng):
        d = random_dataset(rng, 30, 4)
        a = make_probes(d, 6, seed=9)
        b = make_probes(d, 6, seed=9)
        assert np.array_equal(a.probe_values, b.probe_values)
        assert a.probe_names == b.probe_names

    def test_origins_cycle(self, rng):
        d = random_dataset(rng, 25, 3)
        probes = make_probes(d, 10, seed=1)
        expect = tuple(d.feature_names[j % 3] for j in range(10))
        assert probes.origin == expect

    def test_q_must_be_positive(self, rng):
        with pytest.raises(DataError):
            make_probes(random_dataset(rng, 20, 2), 0, seed=1)


class TestCvPlan:
    def _dataset(self, n, n_events, seed=0):
        r = np.random.default_rng(seed)
        event = np.zeros(n, dtype=int)
        event[r.choice(n, n_events, replace=False)] = 1
        time = r.exponential(1, n) + 1e-3
        X = r.standard_normal((n, 1))
        return SurvivalDataset(X, time, event, ("x",), ("continuous",))

    def test_exact_stratification(self):
        d = self._dataset(100, 20)
        plan = make_cv_plan(d, seed=3)
        for rep in range(plan.repeats):
            for fold in range(1, 6):
                mask = plan.assignments[rep] == fold
                assert d.event[mask].sum() == 4
                assert mask.sum() == 20

    def test_deterministic(self):
        d = self._dataset(57, 13)
        a = make_cv_plan(d, seed=11)
        b = make_cv_plan(d, seed=11)
        assert np.array_equal(a.assignments, b.assignments)

    def test_every_subject_in_one_test_fold(self):
        d = self._dataset(41, 9)
        plan = make_cv_plan(d, seed=2)
        for rep in range(plan.repeats):
            assert set(plan.assignments[rep]) <= {1, 2, 3, 4, 5}
            assert np.all(plan.assignments[rep] >= 1)

    def test_too_few_events(self):
        d = self._dataset(20, 3)
        with pytest.raises(DataError, match="events"):
            make_cv_plan(d, seed=0)

    def test_event_rate_within_one_subject(self):
        # |events_in_fold - global_rate * fold_size| <= 1 across random shapes
        r = np.random.default_rng(7)
        for _ in range(60):
            n = int(r.integers(12, 120))
            n_events = int(r.integers(5, max(6, n // 2)))
            d = self._dataset(n, n_events, seed=int(r.integers(1e6)))
            plan = make_cv_plan(d, seed=int(r.integers(1e6)))
            rate = n_events / n
            for rep in range(plan.repeats):
                for fold in range(1, 6):
                    mask = plan.assignments[rep] == fold
                    dev = abs(d.event[mask].sum() - rate * mask.sum())
                    assert dev <= 1.0 + 1e-9
