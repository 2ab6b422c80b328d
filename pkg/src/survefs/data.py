"""Survival dataset representation, CSV ingestion and fold-safe preprocessing.

The dataset couples an ``n x p`` feature matrix with per-subject observed
time and event indicator.  Categorical columns are one-hot expanded at load
time, missing cells are tracked in a mask until imputation, and all
preprocessing statistics (medians, modes, means, standard deviations) can be
computed on a training fold and re-applied to a test fold so that nothing
leaks across the cross-validation boundary.
"""

import csv
import json
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .seeding import ROLE_CV, ROLE_PROBES, rng_for

# Reserved prefix for random-probe columns; real features may not use it.
PROBE_PREFIX = "__probe__"

KIND_CONTINUOUS = "continuous"
KIND_BINARY = "binary"
KIND_CATEGORICAL = "categorical"

MISSING_TOKENS = ("", "NA")


class Outcome(NamedTuple):
    """View of the censored outcome: observed time and event indicator."""

    time: np.ndarray
    event: np.ndarray


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass
class SurvivalDataset:
    """Feature matrix plus right-censored outcome.

    Parameters
    ----------
    features : (n, p) float array; continuous features as reals, binary
        features coded 0/1.  Cells flagged in ``missing`` hold NaN.
    time : (n,) positive reals, time to event or censoring.
    event : (n,) 0/1 indicators, 1 = event observed.
    feature_names : p unique identifiers.
    feature_kinds : p entries, each ``"continuous"`` or ``"binary"``.
    missing : optional (n, p) boolean mask of missing cells; ``None`` once
        the dataset is fully observed or imputed.
    """

    features: np.ndarray
    time: np.ndarray
    event: np.ndarray
    feature_names: tuple
    feature_kinds: tuple
    missing: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        t = np.asarray(self.time, dtype=float)
        e = np.asarray(self.event)
        if X.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        n, p = X.shape
        if n < 2:
            raise DataError(f"need at least 2 subjects, got {n}")
        if p < 1:
            raise DataError("need at least 1 feature")
        if t.shape != (n,) or e.shape != (n,):
            raise DataError("time/event length must match the number of rows")
        if not np.all(np.isfinite(t)) or np.any(t <= 0):
            bad = int(np.flatnonzero(~(np.isfinite(t) & (t > 0)))[0])
            raise DataError(f"nonpositive or non-finite time in row {bad + 1}")
        if not np.all(np.isin(e, (0, 1))):
            bad = int(np.flatnonzero(~np.isin(e, (0, 1)))[0])
            raise DataError(f"event outside {{0,1}} in row {bad + 1}")
        if int(np.sum(e)) < 1:
            raise DataError("dataset has zero observed events")
        names = tuple(self.feature_names)
        kinds = tuple(self.feature_kinds)
        if len(names) != p or len(kinds) != p:
            raise DataError("feature_names/feature_kinds length must equal p")
        if len(set(names)) != p:
            raise DataError("duplicate feature names")
        for k in kinds:
            if k not in (KIND_CONTINUOUS, KIND_BINARY):
                raise DataError(f"unknown feature kind {k!r}")
        if self.missing is not None:
            m = np.asarray(self.missing, dtype=bool)
            if m.shape != (n, p):
                raise DataError("missing mask shape must match features")
            if not m.any():
                m = None
            self.missing = None if m is None else _frozen(m)
        if self.missing is None and not np.all(np.isfinite(X)):
            raise DataError("non-finite feature values without a missing mask")
        self.features = _frozen(X)
        self.time = _frozen(t)
        self.event = _frozen(e.astype(np.int8))
        self.feature_names = names
        self.feature_kinds = kinds

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def n_events(self) -> int:
        return int(np.sum(self.event))

    @property
    def outcome(self) -> Outcome:
        return Outcome(self.time, self.event)

    def rows(self, idx) -> "SurvivalDataset":
        """Dataset restricted to the given row indices."""
        idx = np.asarray(idx)
        return SurvivalDataset(
            self.features[idx],
            self.time[idx],
            self.event[idx],
            self.feature_names,
            self.feature_kinds,
            None if self.missing is None else self.missing[idx],
        )

    def restrict(self, names: Sequence[str]) -> "SurvivalDataset":
        """Dataset restricted to the named feature columns, in the given order."""
        pos = {nm: j for j, nm in enumerate(self.feature_names)}
        try:
            cols = [pos[nm] for nm in names]
        except KeyError as exc:
            raise DataError(f"unknown feature {exc.args[0]!r}") from None
        return SurvivalDataset(
            self.features[:, cols],
            self.time,
            self.event,
            tuple(names),
            tuple(self.feature_kinds[j] for j in cols),
            None if self.missing is None else self.missing[:, cols],
        )


@dataclass
class Schema:
    """Column-role configuration for CSV ingestion.

    ``features`` maps column name to kind (continuous, binary or
    categorical).  ``aggregate`` optionally pre-averages repeated
    measurements: each entry creates one continuous feature as the
    row-wise mean of its source columns before anything else happens.
    """

    time_col: str
    event_col: str
    features: list  # list of (name, kind)
    aggregate: list = field(default_factory=list)  # list of (name, [sources])


def load_schema(path) -> Schema:
    with open(path) as fh:
        raw = json.load(fh)
    try:
        feats = [(f["name"], f["kind"]) for f in raw["features"]]
        agg = [(a["name"], list(a["sources"])) for a in raw.get("aggregate", [])]
        return Schema(raw["time_col"], raw["event_col"], feats, agg)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed schema: {exc}") from None


def _parse_cell(text: str, kind: str, col: str, row: int):
    """Returns (value, is_missing)."""
    if text.strip() in MISSING_TOKENS:
        return np.nan, True
    if kind == KIND_BINARY:
        v = text.strip()
        if v not in ("0", "1"):
            raise DataError(f"binary column {col!r} has value {text!r} in row {row}")
        return float(v), False
    try:
        return float(text), False
    except ValueError:
        raise DataError(
            f"column {col!r} has unparseable value {text!r} in row {row}"
        ) from None


def load_csv(path, schema: Schema) -> SurvivalDataset:
    """Read a survival dataset from CSV under the given schema.

    Categorical columns with k observed levels expand to k-1 indicator
    columns named ``col=level``; the reference level is the most frequent
    one (ties broken toward the lexicographically smallest level).  Missing
    cells (empty string or "NA") are recorded in the mask.  Row numbers in
    error messages are 1-based data rows, excluding the header.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty CSV") from None
        rows = [r for r in reader if r]

    col_idx = {name: i for i, name in enumerate(header)}
    for required in (schema.time_col, schema.event_col):
        if required not in col_idx:
            raise ConfigError(f"column {required!r} not in CSV header")

    n = len(rows)
    if n == 0:
        raise DataError("CSV has no data rows")

    def cell(r, name):
        i = col_idx[name]
        return rows[r][i] if i < len(rows[r]) else ""

    # outcome columns
    time = np.empty(n)
    event = np.empty(n, dtype=np.int8)
    for r in range(n):
        raw_t = cell(r, schema.time_col).strip()
        try:
            t = float(raw_t)
        except ValueError:
            raise DataError(f"time value {raw_t!r} unparseable in row {r + 1}") from None
        if not np.isfinite(t) or t <= 0:
            raise DataError(f"nonpositive time in row {r + 1}")
        time[r] = t
        raw_e = cell(r, schema.event_col).strip()
        if raw_e not in ("0", "1"):
            raise DataError(f"event value {raw_e!r} outside {{0,1}} in row {r + 1}")
        event[r] = int(raw_e)

    # pre-aggregation of repeated measurements: mean over present sources
    synth_cols = {}
    for agg_name, sources in schema.aggregate:
        for s in sources:
            if s not in col_idx:
                raise ConfigError(f"aggregate source column {s!r} not in CSV header")
        vals = np.full(n, np.nan)
        for r in range(n):
            present = []
            for s in sources:
                v, miss = _parse_cell(cell(r, s), KIND_CONTINUOUS, s, r + 1)
                if not miss:
                    present.append(v)
            if present:
                vals[r] = float(np.mean(present))
        synth_cols[agg_name] = vals

    columns = []  # (name, kind, values, missing)
    for name, kind in schema.features:
        if kind not in (KIND_CONTINUOUS, KIND_BINARY, KIND_CATEGORICAL):
            raise ConfigError(f"unknown kind {kind!r} for column {name!r}")
        if name in synth_cols:
            vals = synth_cols[name]
            columns.append((name, KIND_CONTINUOUS, vals, np.isnan(vals)))
            continue
        if name not in col_idx:
            raise ConfigError(f"column {name!r} not in CSV header")
        if kind == KIND_CATEGORICAL:
            raw = [cell(r, name).strip() for r in range(n)]
            miss = np.array([v in MISSING_TOKENS for v in raw])
            levels = sorted({v for v, m in zip(raw, miss) if not m})
            if not levels:
                raise DataError(f"categorical column {name!r} is entirely missing")
            counts = {lv: sum(1 for v in raw if v == lv) for lv in levels}
            reference = min(levels, key=lambda lv: (-counts[lv], lv))
            for lv in levels:
                if lv == reference:
                    continue
                vals = np.array([1.0 if v == lv else 0.0 for v in raw])
                vals[miss] = np.nan
                columns.append((f"{name}={lv}", KIND_BINARY, vals, miss.copy()))
        else:
            vals = np.empty(n)
            miss = np.zeros(n, dtype=bool)
            for r in range(n):
                vals[r], miss[r] = _parse_cell(cell(r, name), kind, name, r + 1)
            columns.append((name, kind, vals, miss))

    names = [c[0] for c in columns]
    if len(set(names)) != len(names):
        dup = sorted({nm for nm in names if names.count(nm) > 1})
        raise DataError(f"duplicate feature names after expansion: {dup}")
    for nm in names:
        if nm.startswith(PROBE_PREFIX):
            raise DataError(f"feature name {nm!r} uses the reserved probe namespace")

    X = np.column_stack([c[2] for c in columns])
    mask = np.column_stack([c[3] for c in columns])
    kinds = tuple(c[1] for c in columns)
    return SurvivalDataset(X, time, event, tuple(names), kinds, mask)


# ---------------------------------------------------------------------------
# imputation and normalization
# ---------------------------------------------------------------------------


@dataclass
class ImputeStats:
    """Per-column fill values: median for continuous, mode for binary."""

    fill: np.ndarray
    feature_names: tuple


def impute(data: SurvivalDataset, stats: Optional[ImputeStats] = None):
    """Fill missing cells with training-fold median (continuous) or mode (binary).

    When ``stats`` is omitted the statistics come from the full data; mode
    ties resolve to 0.  Returns the imputed dataset together with the
    statistics actually used, so a test fold can reuse them.
    """
    if stats is not None and stats.feature_names != data.feature_names:
        raise DataError("imputation statistics come from a different schema")
    if stats is None:
        fill = np.empty(data.p)
        mask = (
            data.missing
            if data.missing is not None
            else np.zeros((data.n, data.p), dtype=bool)
        )
        for j, kind in enumerate(data.feature_kinds):
            present = data.features[~mask[:, j], j]
            if present.size == 0:
                raise DataError(
                    f"column {data.feature_names[j]!r} entirely missing in training fold"
                )
            if kind == KIND_BINARY:
                ones = int(np.sum(present == 1))
                fill[j] = 1.0 if ones * 2 > present.size else 0.0
            else:
                fill[j] = float(np.median(present))
        stats = ImputeStats(_frozen(fill), data.feature_names)

    if data.missing is None:
        return data, stats
    X = np.array(data.features, copy=True)
    mask = data.missing
    X[mask] = np.broadcast_to(stats.fill, X.shape)[mask]
    out = SurvivalDataset(
        X, data.time, data.event, data.feature_names, data.feature_kinds, None
    )
    return out, stats


@dataclass
class NormalizeStats:
    """Per-column mean/sd (sample sd, ddof=1) plus constant-column flags.

    Binary columns are passed through untouched and carry mean 0, sd 1
    here so that re-applying the transform is a no-op for them.
    """

    mean: np.ndarray
    sd: np.ndarray
    constant: np.ndarray
    feature_names: tuple
    sd_convention: str = "sample (ddof=1)"


def normalize(data: SurvivalDataset, stats: Optional[NormalizeStats] = None):
    """Center and scale continuous columns; binary columns untouched.

    Columns with zero spread map to all zeros and are flagged constant so
    downstream selection can exclude them.  Returns (dataset, stats).
    """
    if data.missing is not None:
        raise DataError("normalize requires fully observed data; impute first")
    if stats is not None and stats.feature_names != data.feature_names:
        raise DataError("normalization statistics come from a different schema")
    if stats is None:
        mean = np.zeros(data.p)
        sd = np.ones(data.p)
        constant = np.zeros(data.p, dtype=bool)
        for j, kind in enumerate(data.feature_kinds):
            col = data.features[:, j]
            if kind == KIND_BINARY:
                constant[j] = np.all(col == col[0])
                continue
            m = float(np.mean(col))
            s = float(np.std(col, ddof=1)) if col.size > 1 else 0.0
            if s == 0.0:
                constant[j] = True
                mean[j] = m
                sd[j] = 1.0
            else:
                mean[j] = m
                sd[j] = s
        stats = NormalizeStats(_frozen(mean), _frozen(sd), _frozen(constant), data.feature_names)

    X = np.array(data.features, copy=True)
    cont = np.array([k == KIND_CONTINUOUS for k in data.feature_kinds])
    X[:, cont] = (X[:, cont] - stats.mean[cont]) / stats.sd[cont]
    const_cont = stats.constant & cont
    X[:, const_cont] = 0.0
    out = SurvivalDataset(
        X, data.time, data.event, data.feature_names, data.feature_kinds, None
    )
    return out, stats


# ---------------------------------------------------------------------------
# random probes
# ---------------------------------------------------------------------------


@dataclass
class ProbeSet:
    """Permuted copies of real feature columns, used as a null reference.

    Probe j permutes real column ``j mod p`` (cycling), so each probe
    preserves a real column's marginal distribution while destroying its
    association with the outcome.  Names live in a reserved namespace.
    """

    probe_values: np.ndarray
    probe_names: tuple
    origin: tuple
    kinds: tuple

    @property
    def q(self) -> int:
        return self.probe_values.shape[1]


def default_probe_count(p: int) -> int:
    return max(10, int(np.ceil(0.1 * p)))


def make_probes(data: SurvivalDataset, q: int, seed: int) -> ProbeSet:
    """q probe columns, each a seeded permutation of a real column."""
    if q < 1:
        raise DataError("probe count must be >= 1")
    if data.missing is not None:
        raise DataError("probes require fully observed data")
    rng = rng_for(seed, ROLE_PROBES)
    cols = np.empty((data.n, q))
    names = []
    origin = []
    kinds = []
    for j in range(q):
        src = j % data.p
        perm = rng.permutation(data.n)
        cols[:, j] = data.features[perm, src]
        names.append(f"{PROBE_PREFIX}{j:03d}")
        origin.append(data.feature_names[src])
        kinds.append(data.feature_kinds[src])
    return ProbeSet(_frozen(cols), tuple(names), tuple(origin), tuple(kinds))


# ---------------------------------------------------------------------------
# cross-validation plan
# ---------------------------------------------------------------------------

N_FOLDS = 5
N_REPEATS = 5


@dataclass
class CvPlan:
    """Stratified fold assignments: one length-n label vector per repeat.

    Labels run 1..folds.  Within each repeat every fold's event count is
    within one of every other fold's, so fold event rates track the global
    rate to within one subject.
    """

    folds: int
    repeats: int
    assignments: np.ndarray  # (repeats, n) int, values 1..folds
    master_seed: int

    def train_test(self, repeat: int, fold: int):
        labels = self.assignments[repeat]
        test = np.flatnonzero(labels == fold)
        train = np.flatnonzero(labels != fold)
        return train, test


def make_cv_plan(data: SurvivalDataset, seed: int) -> CvPlan:
    """Build the 5x5 stratified plan, deterministic in (seed, n, event)."""
    if data.n < 10:
        raise DataError(f"need at least 10 subjects for cross-validation, got {data.n}")
    if data.n_events < N_FOLDS:
        raise DataError(
            f"need at least {N_FOLDS} events for {N_FOLDS}-fold stratification, "
            f"got {data.n_events}"
        )
    n = data.n
    assignments = np.zeros((N_REPEATS, n), dtype=np.int8)
    events = np.flatnonzero(data.event == 1)
    censored = np.flatnonzero(data.event == 0)
    for rep in range(N_REPEATS):
        rng = rng_for(seed, ROLE_CV, rep)
        ev = rng.permutation(events)
        ce = rng.permutation(censored)
        labels = np.zeros(n, dtype=np.int8)
        ev_count = np.zeros(N_FOLDS, dtype=int)
        for i, idx in enumerate(ev):
            f = i % N_FOLDS
            labels[idx] = f + 1
            ev_count[f] += 1
        # stripe censored subjects over folds ordered so that folds holding
        # an extra event receive their extra censored subject last
        order = sorted(range(N_FOLDS), key=lambda f: (ev_count[f], f))
        for i, idx in enumerate(ce):
            labels[idx] = order[i % N_FOLDS] + 1
        assignments[rep] = labels
    return CvPlan(N_FOLDS, N_REPEATS, _frozen(assignments), seed)
