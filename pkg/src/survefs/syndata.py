"""Synthetic survival data with planted correlated groups and known signals.

Features come from a Gaussian factor model: each member of a group with
intra-correlation rho is sqrt(rho) * shared factor + sqrt(1-rho) * noise.
Event times are exponential with rate baseline * exp(x beta*); censoring
times are independent exponentials whose rate is calibrated by bisection so
the expected censoring fraction over the drawn sample hits the target.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import KIND_BINARY, KIND_CONTINUOUS, SurvivalDataset
from .errors import ConfigError, DataError
from .seeding import ROLE_SYNTH, rng_for


@dataclass
class SynthSpec:
    """Recipe for one synthetic dataset.

    groups: (size, intra_rho) pairs; group members occupy the leading
    feature columns in order.  relevant: {feature index: true coefficient}.
    binarize_fraction: share of columns thresholded at 0 into 0/1 features.
    """

    n: int
    p: int
    groups: list = field(default_factory=list)
    relevant: dict = field(default_factory=dict)
    baseline: float = 0.1
    target_censoring: float = 0.3
    binarize_fraction: float = 0.0
    weibull_shape: Optional[float] = None  # None = exponential baseline
    seed: int = 0

    def validate(self):
        if self.n < 2 or self.p < 1:
            raise ConfigError("need n >= 2 and p >= 1")
        if sum(size for size, _ in self.groups) > self.p:
            raise ConfigError("group sizes exceed the number of features")
        for size, rho in self.groups:
            if size < 1 or not (0.0 <= rho < 1.0):
                raise ConfigError("each group needs size >= 1 and rho in [0, 1)")
        if not (0.0 <= self.target_censoring < 1.0):
            raise ConfigError("target censoring must lie in [0, 1)")
        if not (0.0 <= self.binarize_fraction <= 1.0):
            raise ConfigError("binarize fraction must lie in [0, 1]")
        for idx in self.relevant:
            if not (0 <= idx < self.p):
                raise ConfigError(f"relevant index {idx} out of range")


@dataclass
class GroundTruth:
    relevant: dict  # feature name -> true coefficient
    group_members: list  # list of name lists, one per planted group
    censor_rate: float
    realized_censoring: float


def _calibrate_censor_rate(hazards, target, max_steps=50):
    """Bisection on the independent-exponential censoring rate.

    P(censored | hazard h) = c / (c + h); the mean over the sample is
    monotone in c, so bisection brackets the target exactly.
    """

    def expected(c):
        return float(np.mean(c / (c + hazards)))

    lo, hi = 0.0, float(np.median(hazards)) + 1e-9
    steps = 0
    while expected(hi) < target:
        hi *= 4.0
        steps += 1
        if steps > max_steps:
            raise DataError(f"censoring target {target} unattainable")
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        if expected(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def generate(spec: SynthSpec):
    """Draw one dataset from the recipe; returns (SurvivalDataset, GroundTruth)."""
    spec.validate()
    rng = rng_for(spec.seed, ROLE_SYNTH)
    n, p = spec.n, spec.p

    X = np.empty((n, p))
    col = 0
    group_cols = []
    for size, rho in spec.groups:
        factor = rng.standard_normal(n)
        members = []
        for _ in range(size):
            X[:, col] = np.sqrt(rho) * factor + np.sqrt(1.0 - rho) * rng.standard_normal(n)
            members.append(col)
            col += 1
        group_cols.append(members)
    while col < p:
        X[:, col] = rng.standard_normal(n)
        col += 1

    kinds = [KIND_CONTINUOUS] * p
    n_bin = int(round(spec.binarize_fraction * p))
    if n_bin > 0:
        bin_cols = rng.choice(p, size=n_bin, replace=False)
        for j in bin_cols:
            X[:, j] = (X[:, j] > 0).astype(float)
            kinds[j] = KIND_BINARY

    beta = np.zeros(p)
    for idx, b in spec.relevant.items():
        beta[idx] = b
    hazards = spec.baseline * np.exp(X @ beta)

    if spec.weibull_shape is None:
        t_event = rng.exponential(1.0 / hazards)
    else:
        k = spec.weibull_shape
        u = rng.uniform(size=n)
        t_event = (-np.log(u) / hazards) ** (1.0 / k)

    if spec.target_censoring == 0.0:
        time = t_event
        event = np.ones(n, dtype=np.int8)
        censor_rate = 0.0
    else:
        censor_rate = _calibrate_censor_rate(hazards, spec.target_censoring)
        t_censor = rng.exponential(1.0 / censor_rate, size=n)
        time = np.minimum(t_event, t_censor)
        event = (t_event <= t_censor).astype(np.int8)
    time = np.maximum(time, 1e-12)

    names = tuple(f"f{j:03d}" for j in range(p))
    data = SurvivalDataset(X, time, event, names, tuple(kinds), None)
    truth = GroundTruth(
        relevant={names[i]: float(b) for i, b in spec.relevant.items()},
        group_members=[[names[c] for c in cols] for cols in group_cols],
        censor_rate=float(censor_rate),
        realized_censoring=float(np.mean(event == 0)),
    )
    return data, truth
