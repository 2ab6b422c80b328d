import numpy as np
import pytest

from survefs.cox import fit_univariate_cox
from survefs.data import KIND_BINARY
from survefs.errors import ConfigError
from survefs.syndata import SynthSpec, generate


class TestGenerate:
    def test_deterministic(self):
        spec = SynthSpec(n=50, p=6, groups=[(3, 0.8)], relevant={0: 1.0},
                         target_censoring=0.3, seed=7)
        a, _ = generate(spec)
        b, _ = generate(spec)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.time, b.time)
        assert np.array_equal(a.event, b.event)

    def test_intra_group_spearman_strong(self):
        from survefs.cluster import spearman_matrix

        for seed in range(3):
            spec = SynthSpec(n=500, p=8, groups=[(5, 0.9)], seed=seed)
            data, _ = generate(spec)
            corr, _ = spearman_matrix(data.features[:, :5])
            off = corr[np.triu_indices(5, 1)]
            assert off.min() >= 0.7

    def test_null_model_univariate_scores_near_half(self):
        spec = SynthSpec(n=600, p=6, target_censoring=0.3, seed=11)
        data, _ = generate(spec)
        scores = [
            fit_univariate_cox(data.features[:, j], data.outcome).score
            for j in range(6)
        ]
        assert np.mean(scores) == pytest.approx(0.5, abs=0.03)

    def test_censoring_calibration(self):
        spec = SynthSpec(n=800, p=4, relevant={0: 0.5},
                         target_censoring=0.47, seed=3)
        _, truth = generate(spec)
        assert 0.44 <= truth.realized_censoring <= 0.50

    def test_relevant_feature_beats_noise(self):
        spec = SynthSpec(n=600, p=10, relevant={0: 1.2}, target_censoring=0.3, seed=5)
        data, truth = generate(spec)
        scores = [
            fit_univariate_cox(data.features[:, j], data.outcome).score
            for j in range(10)
        ]
        assert scores[0] == max(scores)

    def test_binarize_fraction(self):
        spec = SynthSpec(n=100, p=10, binarize_fraction=0.3, seed=2)
        data, _ = generate(spec)
        n_binary = sum(k == KIND_BINARY for k in data.feature_kinds)
        assert n_binary == 3
        for j, kind in enumerate(data.feature_kinds):
            if kind == KIND_BINARY:
                assert set(np.unique(data.features[:, j])) <= {0.0, 1.0}

    def test_weibull_option(self):
        spec = SynthSpec(n=80, p=3, weibull_shape=1.5, target_censoring=0.2, seed=4)
        data, _ = generate(spec)
        assert data.n == 80

    def test_group_sizes_validated(self):
        spec = SynthSpec(n=50, p=4, groups=[(3, 0.8), (3, 0.8)])
        with pytest.raises(ConfigError):
            generate(spec)

    def test_censoring_domain_validated(self):
        with pytest.raises(ConfigError):
            generate(SynthSpec(n=50, p=4, target_censoring=1.0))

    def test_ground_truth_names(self):
        spec = SynthSpec(n=60, p=5, groups=[(2, 0.9)], relevant={0: 1.0}, seed=1)
        _, truth = generate(spec)
        assert truth.relevant == {"f000": 1.0}
        assert truth.group_members == [["f000", "f001"]]
