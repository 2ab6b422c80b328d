import numpy as np
import pytest

from survefs.cox import fit_ridge_cox, fit_univariate_cox
from survefs.data import SurvivalDataset, make_probes, normalize
from survefs.errors import DataError
from survefs.selectors import (
    ScoredFeatures,
    elastic_net_lambda_max,
    fit_elastic_net_cox,
    select_coxboost,
    select_enet,
    select_glmboost,
    select_lasso,
    select_rsf,
    select_uni,
)
from survefs.syndata import SynthSpec, generate

from conftest import random_dataset


def planted(seed, n=150, p=8, beta=1.2, censor=0.3, idx=0):
    spec = SynthSpec(n=n, p=p, relevant={idx: beta}, target_censoring=censor, seed=seed)
    data, _ = generate(spec)
    dn, _ = normalize(data)
    return dn


def with_duplicate(data, col=0):
    X = np.column_stack([data.features, data.features[:, col]])
    return SurvivalDataset(
        X, data.time, data.event,
        data.feature_names + ("dup",),
        data.feature_kinds + (data.feature_kinds[col],), None,
    )


class TestScoredFeatures:
    def test_ranks_follow_descending_scores(self):
        sf = ScoredFeatures.build(("a", "b", "c"), [0.2, 0.9, 0.2], "UNI")
        assert sf.ranks[1] == 1.0
        assert sf.ranks[0] == sf.ranks[2] == 2.5  # tied mean rank

    def test_sparse_selected_iff_positive(self):
        sf = ScoredFeatures.build(("a", "b"), [0.0, 0.4], "LASSO")
        assert sf.selected.tolist() == [False, True]

    def test_negative_scores_rejected(self):
        with pytest.raises(DataError):
            ScoredFeatures.build(("a",), [-0.1], "UNI")


class TestUni:
    def test_true_driver_scores_highest(self):
        dn = planted(seed=1, beta=1.5)
        sf = select_uni(dn)
        assert int(np.argmax(sf.scores[: dn.p])) == 0

    def test_identical_columns_same_score(self, rng):
        d = random_dataset(rng, 50, 2)
        dup = with_duplicate(d, col=0)
        sf = select_uni(dup)
        assert sf.scores[0] == sf.scores[-1]

    def test_probes_scored_like_features(self, rng):
        d = random_dataset(rng, 40, 3)
        dn, _ = normalize(d)
        probes = make_probes(dn, 4, seed=8)
        sf = select_uni(dn, probes)
        assert sf.m == 7
        assert sf.selected.all()  # filter: everything stays in until thresholding


class TestPenalized:
    def test_lambda_max_gives_empty_model(self, rng):
        d = random_dataset(rng, 60, 4, censor=0.3)
        dn, _ = normalize(d)
        lam_max = elastic_net_lambda_max(dn.features, dn.outcome, 1.0)
        beta = fit_elastic_net_cox(dn.features, dn.outcome, lam_max, 1.0)
        assert np.all(beta == 0.0)

    def test_lambda_zero_matches_newton(self, rng):
        d = random_dataset(rng, 50, 2, censor=0.3)
        dn, _ = normalize(d)
        newton = fit_ridge_cox(dn.features, dn.outcome, 0.0).coefficients
        cd = fit_elastic_net_cox(dn.features, dn.outcome, 0.0, 1.0,
                                 max_outer=400, tol=1e-9)
        assert np.allclose(cd, newton, atol=1e-3)

    def test_duplicate_pair_mass_concentrates_on_one(self):
        # an exact copy of the signal column: the fitted pair mass should
        # sit almost entirely on a single member (arbitrary which)
        dominant = 0
        for seed in range(7):
            dn = planted(seed, n=100, p=10, beta=1.0, censor=0.5)
            dup = with_duplicate(dn, col=0)
            sf = select_lasso(dup)
            pair = np.array([sf.scores[0], sf.scores[-1]])
            if pair.max() > 0 and pair.min() / pair.max() <= 0.05:
                dominant += 1
        assert dominant >= 5

    def test_enet_runs_and_records_alpha(self, rng):
        d = random_dataset(rng, 60, 5, censor=0.3)
        dn, _ = normalize(d)
        sf = select_enet(dn)
        assert sf.meta["alpha"] == 0.5
        assert sf.selector_id == "ENET"


class TestGlmboost:
    def test_zero_steps_zero_scores(self, rng):
        d = random_dataset(rng, 40, 3)
        dn, _ = normalize(d)
        sf = select_glmboost(dn, mstop=0)
        assert np.all(sf.scores == 0.0)
        assert not sf.selected.any()

    def test_nonzero_count_bounded_by_mstop(self, rng):
        d = random_dataset(rng, 60, 20, censor=0.3)
        dn, _ = normalize(d)
        sf = select_glmboost(dn, mstop=5)
        assert int(np.count_nonzero(sf.scores)) <= 5

    def test_single_feature_converges_to_newton(self):
        dn = planted(seed=5, n=200, p=1, beta=0.8)
        sf = select_glmboost(dn, mstop=500)
        uni = fit_univariate_cox(dn.features[:, 0], dn.outcome)
        assert abs(sf.scores[0] - abs(uni.beta)) < 0.05


class TestCoxboost:
    def test_zero_steps_zero_scores(self, rng):
        d = random_dataset(rng, 40, 3)
        dn, _ = normalize(d)
        sf = select_coxboost(dn, steps=0)
        assert np.all(sf.scores == 0.0)

    def test_total_mass_decreases_with_penalty(self):
        dn = planted(seed=9, n=200, p=8, beta=1.5, idx=2)
        lo = select_coxboost(dn, steps=60, penalty=50.0)
        hi = select_coxboost(dn, steps=60, penalty=5000.0)
        assert hi.scores.sum() < lo.scores.sum()

    def test_first_update_hits_dominant_feature(self):
        dn = planted(seed=9, n=200, p=8, beta=1.5, idx=2)
        one = select_coxboost(dn, steps=1)
        assert np.flatnonzero(one.scores).tolist() == [2]

    def test_default_penalty_is_nine_times_events(self, rng):
        d = random_dataset(rng, 50, 3, censor=0.3)
        dn, _ = normalize(d)
        sf = select_coxboost(dn, steps=1)
        assert sf.meta["penalty"] == 9.0 * dn.n_events


class TestRsf:
    def test_deterministic(self, rng):
        d = random_dataset(rng, 60, 4, censor=0.3)
        dn, _ = normalize(d)
        a = select_rsf(dn, n_trees=20, seed=3)
        b = select_rsf(dn, n_trees=20, seed=3)
        assert np.array_equal(a.scores, b.scores)

    def test_noise_importances_near_zero(self):
        spec = SynthSpec(n=150, p=8, target_censoring=0.3, seed=2)
        data, _ = generate(spec)
        dn, _ = normalize(data)
        probes = make_probes(dn, 40, seed=3)
        sf = select_rsf(dn, probes, n_trees=40, seed=4)
        real, probe = sf.scores[:8], sf.scores[8:]
        assert real.max() < 0.05
        assert real.max() <= np.quantile(probe, 0.99) + 0.02

    def test_minimum_sample_size(self, rng):
        d = random_dataset(rng, 15, 2)
        with pytest.raises(DataError):
            select_rsf(d)

    def test_too_few_events_degenerate(self, rng):
        d = random_dataset(rng, 30, 2, censor=0.97)
        dn, _ = normalize(d)
        sf = select_rsf(dn, n_trees=5, min_node=15, seed=1)
        if sf.meta["degenerate"]:
            assert np.all(sf.scores == 0.0)


class TestRowOrderInvariance:
    @pytest.mark.parametrize(
        "select",
        [select_uni, select_lasso, select_enet, select_glmboost, select_coxboost],
        ids=["UNI", "LASSO", "ENET", "GLMBOOST", "COXBOOST"],
    )
    def test_scores_unchanged_by_row_permutation(self, rng, select):
        d = random_dataset(rng, 50, 4, censor=0.3)  # continuous times: no ties
        dn, _ = normalize(d)
        perm = rng.permutation(50)
        shuffled = SurvivalDataset(
            dn.features[perm], dn.time[perm], dn.event[perm],
            dn.feature_names, dn.feature_kinds, None,
        )
        a = select(dn)
        b = select(shuffled)
        assert np.allclose(a.scores, b.scores, atol=1e-10)
