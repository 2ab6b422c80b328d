"""The six base feature selectors.

Every selector maps a (normalized, fully observed) training dataset plus a
probe set to one ``ScoredFeatures``: a nonnegative importance score and a
rank for every column, probes included.  Sparse selectors (LASSO, ENET,
GLMBOOST, COXBOOST) mark a feature selected exactly when its coefficient is
nonzero; the two filters (UNI, RSF) score every column and leave selection
to a downstream threshold.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .cox import (
    CoxData,
    Outcome,
    _eta_stats,
    _suffix_over_groups,
    concordance_index,
    stratified_fold_labels,
    univariate_newton_many,
)
from .data import ProbeSet, SurvivalDataset
from .errors import ConfigError, DataError
from .forest import rsf_importance

SELECTOR_IDS = ("UNI", "LASSO", "ENET", "GLMBOOST", "COXBOOST", "RSF")
SPARSE_SELECTORS = frozenset({"LASSO", "ENET", "GLMBOOST", "COXBOOST"})
FILTER_SELECTORS = frozenset({"UNI", "RSF"})


def is_sparse(selector_id: str) -> bool:
    return selector_id in SPARSE_SELECTORS


@dataclass
class ScoredFeatures:
    """Per-column importance scores and derived ranks from one selector run."""

    names: tuple
    scores: np.ndarray
    selected: np.ndarray
    ranks: np.ndarray
    selector_id: str
    meta: dict = field(default_factory=dict)

    @classmethod
    def build(cls, names, scores, selector_id, selected=None, meta=None):
        scores = np.asarray(scores, dtype=float)
        if np.any(scores < 0) or not np.all(np.isfinite(scores)):
            raise DataError("importance scores must be finite and nonnegative")
        if selector_id in SPARSE_SELECTORS:
            selected = scores > 0
        elif selected is None:
            selected = np.ones(len(scores), dtype=bool)
        ranks = rankdata(-scores, method="average")
        return cls(tuple(names), scores, np.asarray(selected, bool), ranks,
                   selector_id, meta or {})

    @property
    def m(self) -> int:
        return len(self.names)


def combine_with_probes(data: SurvivalDataset, probes: ProbeSet):
    """Stack real features and probe columns into one scoring matrix."""
    if probes is None:
        return np.asarray(data.features, dtype=float), data.feature_names
    M = np.hstack([data.features, probes.probe_values])
    return M, data.feature_names + probes.probe_names


# ---------------------------------------------------------------------------
# UNI: univariate Cox filter
# ---------------------------------------------------------------------------


def select_uni(data: SurvivalDataset, probes: ProbeSet = None) -> ScoredFeatures:
    """Score every column by the concordance of its own univariate Cox fit.

    Constant columns score 0.5 (no information either way).
    """
    M, names = combine_with_probes(data, probes)
    outcome = data.outcome
    beta, degen = univariate_newton_many(M, outcome)
    scores = np.empty(M.shape[1])
    for j in range(M.shape[1]):
        if degen[j] and beta[j] == 0.0:
            scores[j] = 0.5
        else:
            scores[j] = concordance_index(beta[j] * M[:, j], outcome)
    return ScoredFeatures.build(names, scores, "UNI",
                                meta={"degenerate_columns": int(degen.sum())})


# ---------------------------------------------------------------------------
# LASSO / ELASTIC-NET: penalized Cox via cyclic coordinate descent
# ---------------------------------------------------------------------------


def fit_elastic_net_cox(
    X,
    outcome: Outcome,
    lam: float,
    alpha: float = 1.0,
    beta0=None,
    max_outer: int = 100,
    tol: float = 1e-7,
    cox_data: CoxData = None,
    screen_rounds: int = 40,
) -> np.ndarray:
    """Minimize (1/n)*nlpl + lam*(alpha*||b||_1 + (1-alpha)/2*||b||^2).

    Outer loop: quadratic (diagonal-curvature) approximation of the partial
    likelihood at the current linear predictor.  Inner loop: cyclic
    soft-threshold coordinate updates on the working least-squares problem.
    The diagonal curvature majorizes the true Hessian, so the outer
    iteration descends without a line search.
    """
    X = np.asfortranarray(X, dtype=float)
    n, p = X.shape
    cd = cox_data if cox_data is not None else CoxData(outcome)
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=float)
    l1 = lam * alpha
    l2 = lam * (1.0 - alpha)
    eta = X @ beta
    Xsq = X**2
    for _ in range(max_outer):
        _, g, hd = _eta_stats(eta, cd)
        w = hd
        # weighted residual of the working response: w*(z - eta) with
        # z = eta + g/w reduces to g, so no division by w is ever needed
        ws = g.copy()
        wX = X * w[:, None]
        a = (w @ Xsq) / n
        denom = a + l2
        beta_prev = beta.copy()

        def sweep(indices):
            max_move = 0.0
            for j in indices:
                dj = denom[j]
                if dj <= 0.0:
                    continue
                rho = (X[:, j] @ ws) / n + a[j] * beta[j]
                if rho > l1:
                    bj = (rho - l1) / dj
                elif rho < -l1:
                    bj = (rho + l1) / dj
                else:
                    bj = 0.0
                diff = bj - beta[j]
                if diff != 0.0:
                    np.subtract(ws, wX[:, j] * diff, out=ws)
                    beta[j] = bj
                    if abs(diff) > max_move:
                        max_move = abs(diff)
            return max_move

        # vectorized KKT screen finds candidate coordinates, a sequential
        # sweep updates them; re-screen until no screened violator moves.
        # The screen is one matrix-vector product, so full-dimension passes
        # cost next to nothing; per-outer work stays bounded because the
        # outer IRLS loop re-linearizes anyway.
        for _ in range(screen_rounds):
            rhos = (ws @ X) / n + a * beta
            cand = np.flatnonzero((np.abs(rhos) > l1) | (beta != 0.0))
            if cand.size == 0 or sweep(cand) < tol:
                break
        eta = X @ beta
        if float(np.max(np.abs(beta - beta_prev), initial=0.0)) < tol:
            break
    return beta


def elastic_net_lambda_max(X, outcome: Outcome, alpha: float) -> float:
    """Smallest penalty at which the solution is exactly zero."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    cd = CoxData(outcome)
    _, g, _ = _eta_stats(np.zeros(n), cd)
    return float(np.max(np.abs(X.T @ g)) / (n * max(alpha, 1e-12)))


def _choose_lambda_cv(X, outcome, alpha, n_folds=5, n_points=50):
    """Penalty path CV: held-out partial-likelihood deviance per candidate.

    The path runs 50 log-spaced points from lam_max down to 0.01*lam_max;
    folds are stratified on the event indicator with a canonical,
    row-order-invariant assignment.  The held-out deviance of a fold is the
    full-data partial likelihood minus the training-fold partial likelihood
    at the fold's coefficients, which stays well-defined even when the held
    out rows alone carry few events.  Ties resolve to the stronger penalty.
    """
    lam_max = elastic_net_lambda_max(X, outcome, alpha)
    if lam_max <= 0:
        return 0.0, np.array([0.0])
    path = np.geomspace(lam_max, 0.01 * lam_max, n_points)
    labels = stratified_fold_labels(outcome, n_folds)
    dev = np.zeros(n_points)
    cd_all = CoxData(outcome)
    for fold in range(n_folds):
        tr = labels != fold
        if int(np.sum(outcome.event[tr])) == 0 or int(np.sum(~tr)) < 2:
            continue
        out_tr = Outcome(outcome.time[tr], outcome.event[tr])
        cd_tr = CoxData(out_tr)
        X_tr = np.asfortranarray(X[tr])
        beta = None
        for i, lam in enumerate(path):
            beta = fit_elastic_net_cox(X_tr, out_tr, lam, alpha, beta0=beta,
                                       max_outer=10, tol=1e-6, cox_data=cd_tr,
                                       screen_rounds=4)
            full = _eta_stats(X @ beta, cd_all)[0]
            train = _eta_stats(X_tr @ beta, cd_tr)[0]
            dev[i] += 2.0 * (full - train)
    best = int(np.argmin(dev))
    return float(path[best]), path


def _select_penalized(data, probes, alpha, selector_id, n_folds=5, n_points=50):
    M, names = combine_with_probes(data, probes)
    M = np.asfortranarray(M)
    outcome = data.outcome
    lam, path = _choose_lambda_cv(M, outcome, alpha, n_folds, n_points)
    cd = CoxData(outcome)
    beta = None
    for l in path:  # warm-started refit on the full data down to lam
        beta = fit_elastic_net_cox(M, outcome, float(l), alpha, beta0=beta,
                                   max_outer=50, cox_data=cd)
        if l <= lam:
            break
    scores = np.abs(beta)
    return ScoredFeatures.build(names, scores, selector_id,
                                meta={"lambda": lam, "alpha": alpha})


def select_lasso(data: SurvivalDataset, probes: ProbeSet = None,
                 alpha: float = 1.0) -> ScoredFeatures:
    """L1-penalized Cox; importance scores are |coefficients| at the CV penalty."""
    return _select_penalized(data, probes, alpha, "LASSO")


def select_enet(data: SurvivalDataset, probes: ProbeSet = None,
                alpha: float = 0.5) -> ScoredFeatures:
    """Elastic-net-penalized Cox with mixing weight alpha (default 0.5)."""
    return _select_penalized(data, probes, alpha, "ENET")


# ---------------------------------------------------------------------------
# GLMBOOST: component-wise gradient boosting
# ---------------------------------------------------------------------------


def select_glmboost(data: SurvivalDataset, probes: ProbeSet = None,
                    mstop: int = 100, nu: float = 0.1) -> ScoredFeatures:
    """Component-wise gradient boosting on the Cox loss.

    Each iteration fits a simple least-squares coefficient of the negative
    loss gradient on every column and advances only the best-fitting
    column's coefficient by nu times that fit.
    """
    M, names = combine_with_probes(data, probes)
    n, p = M.shape
    cd = CoxData(data.outcome)
    colsq = (M**2).sum(axis=0)
    coef = np.zeros(p)
    eta = np.zeros(n)
    for _ in range(mstop):
        _, g, _ = _eta_stats(eta, cd)
        num = M.T @ g
        with np.errstate(divide="ignore", invalid="ignore"):
            crit = np.where(colsq > 0, num**2 / colsq, -np.inf)
        j = int(np.argmax(crit))
        if not np.isfinite(crit[j]) or crit[j] <= 0:
            break
        b = nu * num[j] / colsq[j]
        coef[j] += b
        eta += b * M[:, j]
    return ScoredFeatures.build(names, np.abs(coef), "GLMBOOST",
                                meta={"mstop": mstop, "nu": nu})


# ---------------------------------------------------------------------------
# COXBOOST: likelihood-based boosting
# ---------------------------------------------------------------------------


def select_coxboost(data: SurvivalDataset, probes: ProbeSet = None,
                    steps: int = 100, penalty: float = None) -> ScoredFeatures:
    """Likelihood-based boosting with penalized one-dimensional updates.

    Per step, every column gets the exact penalized Newton update for a
    univariate offset around the current linear predictor; the column with
    the largest penalized score statistic U^2/(I + penalty) is advanced by
    U/(I + penalty).  Default penalty is 9 times the event count.
    """
    M, names = combine_with_probes(data, probes)
    n, p = M.shape
    outcome = data.outcome
    if penalty is None:
        penalty = 9.0 * float(np.sum(outcome.event))
    cd = CoxData(outcome)
    Ms = M[cd.order]
    has_events = cd.d > 0
    d_ev = cd.d[has_events]
    coef = np.zeros(p)
    eta = np.zeros(n)
    for _ in range(steps):
        _, g, _ = _eta_stats(eta, cd)
        U = M.T @ g
        h = eta[cd.order]
        m = float(h.max())
        w = np.exp(h - m)
        W = _suffix_over_groups(w, cd)[has_events]
        Sx = _suffix_over_groups(w[:, None] * Ms, cd)[has_events]
        Sxx = _suffix_over_groups(w[:, None] * Ms**2, cd)[has_events]
        info = (d_ev[:, None] * (Sxx / W[:, None] - (Sx / W[:, None]) ** 2)).sum(axis=0)
        denom = np.maximum(info, 0.0) + penalty
        with np.errstate(divide="ignore", invalid="ignore"):
            crit = np.where(denom > 0, U**2 / denom, -np.inf)
        j = int(np.argmax(crit))
        if not np.isfinite(crit[j]) or crit[j] <= 0:
            break
        delta = U[j] / denom[j]
        coef[j] += delta
        eta += delta * M[:, j]
    return ScoredFeatures.build(names, np.abs(coef), "COXBOOST",
                                meta={"steps": steps, "penalty": penalty})


# ---------------------------------------------------------------------------
# RSF: random survival forest filter
# ---------------------------------------------------------------------------


def select_rsf(data: SurvivalDataset, probes: ProbeSet = None,
               n_trees: int = 100, mtry: int = 0, min_node: int = 10,
               seed: int = 0) -> ScoredFeatures:
    """Random survival forest permutation importance (out-of-bag C-index drop)."""
    if data.n < 20:
        raise DataError("random survival forest needs at least 20 subjects")
    M, names = combine_with_probes(data, probes)
    importance, degenerate = rsf_importance(
        M, data.outcome, n_trees=n_trees, mtry=mtry, min_node=min_node, seed=seed
    )
    return ScoredFeatures.build(names, importance, "RSF",
                                meta={"degenerate": degenerate,
                                      "n_trees": n_trees, "min_node": min_node})


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def run_selector(selector_id: str, data: SurvivalDataset, probes: ProbeSet,
                 params: dict = None, seed: int = 0) -> ScoredFeatures:
    """Run one selector by id with its hyperparameter dict."""
    params = dict(params or {})
    if selector_id == "UNI":
        return select_uni(data, probes)
    if selector_id == "LASSO":
        return select_lasso(data, probes, **params)
    if selector_id == "ENET":
        return select_enet(data, probes, **params)
    if selector_id == "GLMBOOST":
        return select_glmboost(data, probes, **params)
    if selector_id == "COXBOOST":
        return select_coxboost(data, probes, **params)
    if selector_id == "RSF":
        params.setdefault("seed", seed)
        return select_rsf(data, probes, **params)
    raise ConfigError(f"unknown selector id {selector_id!r}")
