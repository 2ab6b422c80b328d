"""Selection stability over a system of feature subsets, and config scoring.

The stability measure is the relative weighted consistency of the subsets
produced across cross-validation folds: 1 means every fold selected the
same features, 0 means the selections were spread as thinly as possible
over the candidate universe.  Each configuration is then summarized as a
point (stability, mean C-index) whose Euclidean distance from the origin
ranks configurations.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


@dataclass
class SubsetSystem:
    """Feature subsets (one per fold x repeat) over a universe of d candidates."""

    subsets: list  # list of sets/iterables of feature names
    universe_size: int

    def __post_init__(self):
        self.subsets = [frozenset(s) for s in self.subsets]
        if self.universe_size < 1:
            raise DataError("universe size must be >= 1")
        if len(self.subsets) < 2:
            raise DataError("need at least two subsets")
        distinct = set().union(*self.subsets) if self.subsets else set()
        if len(distinct) > self.universe_size:
            raise DataError("subsets mention more features than the universe holds")


def _weighted_consistency(freqs, n_subsets, total):
    """CW = sum_f (F_f/N) * ((F_f - 1)/(n - 1)) over a frequency profile."""
    freqs = np.asarray(freqs, dtype=float)
    if total <= 0:
        return 0.0
    return float(np.sum((freqs / total) * ((freqs - 1.0) / (n_subsets - 1.0))))


def _min_profile(total, n_subsets, d):
    """Spread ``total`` occurrences as evenly as possible over d features."""
    base, extra = divmod(total, d)
    profile = np.full(d, base, dtype=float)
    profile[:extra] += 1.0
    return profile


def _max_profile(total, n_subsets, d):
    """Concentrate occurrences: fill features to frequency n one at a time."""
    full, rest = divmod(total, n_subsets)
    profile = [float(n_subsets)] * full
    if rest:
        profile.append(float(rest))
    return np.asarray(profile, dtype=float)


def relative_weighted_consistency(system: SubsetSystem):
    """Normalized consistency of the subset system, in [0, 1].

    The raw weighted consistency CW of the observed frequency profile is
    rescaled between the CW of the maximally spread profile and the CW of
    the maximally concentrated profile, both built constructively for the
    same total occurrence count.  Returns (value, degenerate); degenerate
    systems (no occurrences at all, or no room between the bounds) report
    1.0.
    """
    n = len(system.subsets)
    d = system.universe_size
    counts = {}
    for s in system.subsets:
        for f in s:
            counts[f] = counts.get(f, 0) + 1
    total = sum(counts.values())
    if total == 0:
        warnings.warn("every subset is empty; stability degenerate", stacklevel=2)
        return 1.0, True
    freqs = np.array(sorted(counts.values()), dtype=float)
    cw = _weighted_consistency(freqs, n, total)
    cw_min = _weighted_consistency(_min_profile(total, n, d), n, total)
    cw_max = _weighted_consistency(_max_profile(total, n, d), n, total)
    if cw_max <= cw_min:
        return 1.0, True
    value = (cw - cw_min) / (cw_max - cw_min)
    return float(min(1.0, max(0.0, value))), False


@dataclass
class EvaluationPoint:
    """One configuration's accuracy-vs-stability summary."""

    config_id: str
    stability: float
    mean_cindex: float
    distance: float
    mean_subset_size: float
    degenerate: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "config_id": self.config_id,
            "stability": self.stability,
            "mean_cindex": self.mean_cindex,
            "distance": self.distance,
            "mean_subset_size": self.mean_subset_size,
            "degenerate": self.degenerate,
            **self.extra,
        }


def evaluate_configuration(config_id, subsets, cindices, universe_size) -> EvaluationPoint:
    """Fold subsets + fold test C-indices -> (stability, accuracy, distance)."""
    if len(subsets) != len(cindices):
        raise DataError("need one C-index per subset")
    system = SubsetSystem(list(subsets), universe_size)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        stability, degenerate = relative_weighted_consistency(system)
    mean_c = float(np.mean(cindices))
    distance = math.hypot(stability, mean_c)
    sizes = [len(s) for s in subsets]
    return EvaluationPoint(
        config_id, stability, mean_c, distance, float(np.mean(sizes)), degenerate
    )


def consensus_features(points, config_subsets, top_k: int = 10):
    """Features backed by at least half of the top-k configurations.

    Configurations are ranked by distance (descending, ties by id).  A
    feature belongs to one configuration when it appears in more than half
    of that configuration's fold subsets; it enters the consensus when it
    belongs to at least ceil(top_k / 2) of the top-k configurations.
    Returns (consensus feature list, top-k config ids, short flag).
    """
    ranked = sorted(points, key=lambda pt: (-pt.distance, pt.config_id))
    short = len(ranked) < top_k
    if short:
        warnings.warn(
            f"only {len(ranked)} configurations available for a top-{top_k} consensus",
            stacklevel=2,
        )
    top = ranked[:top_k]
    need = math.ceil(len(top) / 2)
    votes = {}
    for pt in top:
        subsets = config_subsets[pt.config_id]
        half = len(subsets) / 2.0
        members = {}
        for s in subsets:
            for f in s:
                members[f] = members.get(f, 0) + 1
        majority = {f for f, c in members.items() if c > half}
        for f in majority:
            votes[f] = votes.get(f, 0) + 1
    consensus = sorted(f for f, v in votes.items() if v >= need)
    return consensus, [pt.config_id for pt in top], short
