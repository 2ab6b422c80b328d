"""Homogeneous bootstrap ensembles: resample, select, aggregate, threshold.

One configuration fixes a base selector, an aggregator and a threshold.
The selector runs on ``n_bootstraps`` resamples of the training data (real
features and probe columns together), the per-run score vectors are
aggregated into one score per column, and the threshold cuts the aggregated
real-feature scores into the final subset.  Probes participate in scoring
and in probe-referenced thresholds but can never be selected.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta as beta_dist
from scipy.stats import gaussian_kde

from .data import ProbeSet, SurvivalDataset
from .errors import ConfigError, DataError
from .seeding import ROLE_BOOT, ROLE_ENSEMBLE, child_seed
from .selectors import ScoredFeatures, is_sparse, run_selector

AGGREGATORS = ("MEAN_SCORE", "MEDIAN_RANK", "FREQ", "RRA")
THRESHOLDS = (
    "FIX_10",
    "FIX_25",
    "FIX_33",
    "Q75",
    "BEST_PROBE",
    "KDE",
    "MEDRANK",
    "RRA_P",
    "FREQ_HALF",
)
FIX_FRACTIONS = {"FIX_10": 0.10, "FIX_25": 0.25, "FIX_33": 0.33}


@dataclass
class EnsembleConfig:
    selector_id: str
    selector_params: dict = field(default_factory=dict)
    n_bootstraps: int = 50
    aggregator: str = "MEAN_SCORE"
    threshold: str = "FREQ_HALF"
    seed: int = 0

    def validate(self):
        from .selectors import SELECTOR_IDS

        if self.selector_id not in SELECTOR_IDS:
            raise ConfigError(f"unknown selector id {self.selector_id!r}")
        if self.aggregator not in AGGREGATORS:
            raise ConfigError(f"unknown aggregator {self.aggregator!r}")
        if self.threshold not in THRESHOLDS:
            raise ConfigError(f"unknown threshold {self.threshold!r}")
        if self.n_bootstraps < 1:
            raise ConfigError("n_bootstraps must be >= 1")


def bootstrap_sample(data: SurvivalDataset, index: int, seed: int) -> SurvivalDataset:
    """Resample n rows with replacement, deterministic in (seed, index).

    Draws containing zero events are rejected and redrawn; one hundred
    consecutive rejections signal pathological censoring.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, ROLE_BOOT, index]))
    for _ in range(100):
        rows = rng.integers(0, data.n, size=data.n)
        if int(np.sum(data.event[rows])) > 0:
            return data.rows(rows)
    raise DataError("100 consecutive bootstrap draws without any event")


def _with_probes(data: SurvivalDataset, probes: ProbeSet) -> SurvivalDataset:
    if probes is None:
        return data
    return SurvivalDataset(
        np.hstack([data.features, probes.probe_values]),
        data.time,
        data.event,
        data.feature_names + probes.probe_names,
        data.feature_kinds + probes.kinds,
        None,
    )


def collect_bootstrap_runs(
    data: SurvivalDataset,
    probes: ProbeSet,
    selector_id: str,
    selector_params: dict,
    n_bootstraps: int,
    seed: int,
):
    """Run the base selector on each bootstrap of (features | probes).

    This is the expensive half of an ensemble; aggregation and thresholds
    reuse one collection across configurations.
    """
    combined = _with_probes(data, probes)
    runs = []
    for b in range(n_bootstraps):
        sample = bootstrap_sample(combined, b, seed)
        sel_seed = child_seed(seed, ROLE_ENSEMBLE, b)
        runs.append(run_selector(selector_id, sample, None, selector_params, sel_seed))
    return runs


def rra_pvalues(rank_lists) -> np.ndarray:
    """Robust rank aggregation p-value per name.

    ``rank_lists`` holds one normalized rank vector (rank/m, in (0, 1])
    per run, all over the same name universe.  For each name the sorted
    ranks r(1) <= ... <= r(n) give rho = min_k BetaCDF(r(k); k, n-k+1),
    Bonferroni-corrected to p = min(1, rho * n); smaller means stronger.
    """
    R = np.asarray(rank_lists, dtype=float)
    if R.ndim != 2:
        raise DataError("rank lists must form an (n_runs, m) matrix")
    n, m = R.shape
    if np.any(R <= 0) or np.any(R > 1):
        raise DataError("normalized ranks must lie in (0, 1]")
    R_sorted = np.sort(R, axis=0)
    k = np.arange(1, n + 1)
    cdf = beta_dist.cdf(R_sorted, k[:, None], (n - k + 1)[:, None])
    rho = cdf.min(axis=0)
    return np.minimum(1.0, rho * n)


def aggregate(runs, method: str) -> np.ndarray:
    """Combine per-run score vectors into one score per name (larger = better).

    MEAN_SCORE: arithmetic mean of scores.  MEDIAN_RANK: median rank
    converted to (m - median + 1)/m.  FREQ: fraction of runs where the
    name was selected (sparse selectors) or ranked in the top half
    (filters).  RRA: 1 - robust-rank-aggregation p-value.
    """
    if not runs:
        raise DataError("no selector runs to aggregate")
    names = runs[0].names
    for r in runs:
        if r.names != names:
            raise DataError("selector runs disagree on the name universe")
    m = len(names)
    if method == "MEAN_SCORE":
        return np.mean([r.scores for r in runs], axis=0)
    if method == "MEDIAN_RANK":
        med = np.median([r.ranks for r in runs], axis=0)
        return (m - med + 1.0) / m
    if method == "FREQ":
        return selection_frequency(runs)
    if method == "RRA":
        norm_ranks = np.array([r.ranks for r in runs]) / m
        return 1.0 - rra_pvalues(norm_ranks)
    raise ConfigError(f"unknown aggregator {method!r}")


def selection_frequency(runs) -> np.ndarray:
    """Fraction of runs in which each name counts as selected.

    Sparse selectors select natively; a filter "selects" a name in a run
    when its rank lands in the top half (rank <= m/2).
    """
    m = runs[0].m
    events = []
    for r in runs:
        if is_sparse(r.selector_id):
            events.append(r.selected.astype(float))
        else:
            events.append((r.ranks <= m / 2.0).astype(float))
    return np.mean(events, axis=0)


@dataclass
class AggregatedScores:
    """Everything a threshold may consult, split into real and probe parts."""

    feature_names: tuple
    probe_names: tuple
    agg_features: np.ndarray
    agg_probes: np.ndarray
    median_norm_rank: np.ndarray  # real features only
    rra_p: np.ndarray  # real features only
    sel_freq: np.ndarray  # real features only


def summarize_runs(runs, aggregator: str, n_features: int) -> AggregatedScores:
    """Aggregate once and precompute the rank/frequency statistics."""
    agg = aggregate(runs, aggregator)
    names = runs[0].names
    m = len(names)
    ranks = np.array([r.ranks for r in runs])
    med_norm = np.median(ranks, axis=0) / m
    rra_p = rra_pvalues(ranks / m)
    freq = selection_frequency(runs)
    return AggregatedScores(
        feature_names=names[:n_features],
        probe_names=names[n_features:],
        agg_features=agg[:n_features],
        agg_probes=agg[n_features:],
        median_norm_rank=med_norm[:n_features],
        rra_p=rra_p[:n_features],
        sel_freq=freq[:n_features],
    )


def _kde_cut(scores):
    """Deepest interior valley of a Gaussian KDE over the scores.

    Returns (cut, ok); ok False means the density was unimodal or
    degenerate and the caller should fall back to Q75.
    """
    scores = np.asarray(scores, dtype=float)
    if np.ptp(scores) <= 0 or len(scores) < 3:
        return 0.0, False
    try:
        kde = gaussian_kde(scores, bw_method="silverman")
    except np.linalg.LinAlgError:
        return 0.0, False
    grid = np.linspace(scores.min(), scores.max(), 512)
    dens = kde(grid)
    interior = (dens[1:-1] < dens[:-2]) & (dens[1:-1] < dens[2:])
    valleys = np.flatnonzero(interior) + 1
    if valleys.size == 0:
        return 0.0, False
    deepest = valleys[int(np.argmin(dens[valleys]))]
    return float(grid[deepest]), True


def apply_threshold(stats: AggregatedScores, method: str, p_total: int):
    """Cut the aggregated real-feature scores into the final subset.

    Returns (subset names, realized threshold value, meta dict).  Ties at a
    fixed-fraction cut are all kept; probes are never returned; an empty
    subset is legal.
    """
    scores = stats.agg_features
    if not np.all(np.isfinite(scores)) or not np.all(np.isfinite(stats.agg_probes)):
        raise DataError("non-finite aggregated scores")
    names = stats.feature_names
    meta = {}

    if method in FIX_FRACTIONS:
        k = int(np.ceil(FIX_FRACTIONS[method] * p_total))
        k = min(k, len(names))
        if k == 0:
            return [], float("inf"), meta
        cut = np.sort(scores)[::-1][k - 1]
        keep = scores >= cut
        value = float(cut)
    elif method == "Q75":
        value = float(np.percentile(scores, 75))
        keep = scores > value
    elif method == "BEST_PROBE":
        value = float(np.max(stats.agg_probes)) if len(stats.agg_probes) else -np.inf
        keep = scores > value
    elif method == "KDE":
        cut, ok = _kde_cut(scores)
        if not ok:
            meta["kde_fallback"] = "Q75"
            value = float(np.percentile(scores, 75))
            keep = scores > value
        else:
            value = cut
            keep = scores > value
    elif method == "MEDRANK":
        value = 0.5
        keep = stats.median_norm_rank <= value
    elif method == "RRA_P":
        value = 0.05
        keep = stats.rra_p < value
    elif method == "FREQ_HALF":
        value = 0.5
        keep = stats.sel_freq >= value
    else:
        raise ConfigError(f"unknown threshold {method!r}")

    order = np.flatnonzero(keep)
    order = order[np.lexsort((np.array(names, dtype=object)[order], -scores[order]))]
    return [names[i] for i in order], value, meta


@dataclass
class EnsembleResult:
    config: EnsembleConfig
    aggregated: dict  # name -> aggregated score (features and probes)
    per_bootstrap: list  # ScoredFeatures per bootstrap
    final_subset: list
    threshold_value: float
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "config": {
                "selector": self.config.selector_id,
                "selector_params": self.config.selector_params,
                "n_bootstraps": self.config.n_bootstraps,
                "aggregator": self.config.aggregator,
                "threshold": self.config.threshold,
                "seed": self.config.seed,
            },
            "aggregated": {k: float(v) for k, v in sorted(self.aggregated.items())},
            "threshold_value": float(self.threshold_value),
            "final_subset": list(self.final_subset),
            "meta": self.meta,
        }


def run_ensemble(
    data: SurvivalDataset,
    probes: ProbeSet,
    config: EnsembleConfig,
    runs=None,
) -> EnsembleResult:
    """Full ensemble for one configuration.

    ``runs`` may carry a previously collected list of bootstrap selector
    runs for the same (selector, data, probes, seed); aggregation and
    thresholding are cheap, so sweeps share collections across many
    (aggregator, threshold) pairs.
    """
    config.validate()
    if runs is None:
        runs = collect_bootstrap_runs(
            data,
            probes,
            config.selector_id,
            config.selector_params,
            config.n_bootstraps,
            config.seed,
        )
    stats = summarize_runs(runs, config.aggregator, data.p)
    subset, value, meta = apply_threshold(stats, config.threshold, data.p)
    aggregated = dict(zip(stats.feature_names, stats.agg_features))
    aggregated.update(zip(stats.probe_names, stats.agg_probes))
    return EnsembleResult(config, aggregated, runs, subset, value, meta)
