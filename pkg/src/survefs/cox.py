"""Cox partial-likelihood machinery shared by the selectors and the evaluator.

Everything here works on the negative log partial likelihood with Breslow
handling of tied event times:

    nlpl(beta) = - sum_{i: event_i=1} [ eta_i - log sum_{j: t_j >= t_i} exp(eta_j) ]

with eta = X beta.  Risk-set sums are computed once per call from a sorted
view of (time, event); all functions are deterministic and free of
randomness.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .data import Outcome
from .errors import DataError

COEF_CLAMP = 50.0


class CoxData:
    """Sorted risk-set structure for one (time, event) outcome.

    Rows are sorted ascending by time and grouped by tied times; ``d`` holds
    the event count of each tie group.  Building this once and reusing it
    across likelihood evaluations is what makes the iterative fits cheap.
    """

    def __init__(self, outcome: Outcome):
        time = np.asarray(outcome.time, dtype=float)
        event = np.asarray(outcome.event)
        self.n = time.shape[0]
        order = np.argsort(time, kind="stable")
        self.order = order
        t = time[order]
        self.e_sorted = event[order].astype(float)
        new_group = np.r_[True, t[1:] != t[:-1]]
        self.group_starts = np.flatnonzero(new_group)
        self.group_of = np.cumsum(new_group) - 1
        self.d = np.add.reduceat(self.e_sorted, self.group_starts)
        self.n_events = float(self.e_sorted.sum())
        self.event_mask = self.e_sorted == 1


def _suffix_over_groups(values, cd: CoxData):
    """Sum of ``values`` (already in sorted row order) over each risk set.

    Returns one entry per tie group: the sum over all rows with time >= that
    group's time.  Works on (n,) vectors and (n, p) matrices alike.
    """
    seg = np.add.reduceat(values, cd.group_starts, axis=0)
    return np.cumsum(seg[::-1], axis=0)[::-1]


def _eta_stats(eta, cd: CoxData):
    """nlpl, per-sample gradient and curvature of the log PL w.r.t. eta.

    Gradient and curvature are returned in original row order; the
    curvature is the diagonal of the negative Hessian w.r.t. eta.
    """
    h = eta[cd.order]
    m = float(h.max())
    w = np.exp(h - m)
    W = _suffix_over_groups(w, cd)
    has_events = cd.d > 0
    a_terms = np.where(has_events, cd.d / W, 0.0)
    b_terms = np.where(has_events, cd.d / W**2, 0.0)
    A = np.cumsum(a_terms)[cd.group_of]
    B = np.cumsum(b_terms)[cd.group_of]
    g_sorted = cd.e_sorted - w * A
    hdiag_sorted = w * A - w**2 * B
    nlpl = -(
        float(h[cd.event_mask].sum())
        - float(np.sum(cd.d[has_events] * (m + np.log(W[has_events]))))
    )
    g = np.empty_like(g_sorted)
    g[cd.order] = g_sorted
    hd = np.empty_like(hdiag_sorted)
    hd[cd.order] = np.maximum(hdiag_sorted, 0.0)
    return nlpl, g, hd


def _check_beta(beta):
    beta = np.asarray(beta, dtype=float)
    if not np.all(np.isfinite(beta)):
        raise DataError("non-finite coefficient vector")
    return beta


def neg_log_partial_likelihood(beta, X, outcome: Outcome) -> float:
    """Negative Cox log partial likelihood at ``beta`` (Breslow ties)."""
    beta = _check_beta(beta)
    X = np.asarray(X, dtype=float)
    cd = CoxData(outcome)
    nlpl, _, _ = _eta_stats(X @ beta, cd)
    return nlpl


def gradient_nlpl(beta, X, outcome: Outcome) -> np.ndarray:
    """Exact analytic gradient of :func:`neg_log_partial_likelihood`."""
    beta = _check_beta(beta)
    X = np.asarray(X, dtype=float)
    cd = CoxData(outcome)
    _, g, _ = _eta_stats(X @ beta, cd)
    return -(X.T @ g)


def _hessian_beta(eta, X, cd: CoxData) -> np.ndarray:
    """Exact (p, p) Hessian of nlpl w.r.t. beta at the given eta.

    The moment term sum_g d_g * M2_g / W_g collapses to X' diag(w * A) X
    with A_r the cumulative d_g / W_g over event times up to t_r, so both
    terms reduce to dense matrix products.
    """
    Xs = X[cd.order]
    h = eta[cd.order]
    m = float(h.max())
    w = np.exp(h - m)
    W = _suffix_over_groups(w, cd)
    ev = cd.d > 0
    a_terms = np.where(ev, cd.d / W, 0.0)
    A = np.cumsum(a_terms)[cd.group_of]
    H = (Xs * (w * A)[:, None]).T @ Xs
    M1 = _suffix_over_groups(w[:, None] * Xs, cd)
    mu = M1[ev] / W[ev][:, None]
    scaled = mu * np.sqrt(cd.d[ev])[:, None]
    return H - scaled.T @ scaled


@dataclass
class CoxModel:
    """Fitted proportional-hazards coefficients plus fit diagnostics."""

    coefficients: np.ndarray
    feature_names: tuple
    lam: float
    converged: bool
    iterations: int
    degenerate: bool = False

    def predict_risk(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.coefficients.size == 0:
            return np.zeros(X.shape[0])
        return X @ self.coefficients


def fit_ridge_cox(
    X,
    outcome: Outcome,
    lam: float,
    feature_names: Optional[tuple] = None,
    beta0=None,
    max_iter: int = 200,
    tol: float = 1e-6,
    cox_data: Optional[CoxData] = None,
) -> CoxModel:
    """Newton fit of the L2-penalized Cox model: nlpl + (lam/2)*||beta||^2.

    An empty feature set is legal and yields a null model with constant
    risk.  Coefficients are clamped at |beta| <= 50 with a degeneracy flag
    (monotone-likelihood / separation safeguard).  ``cox_data`` lets a
    caller fitting many penalties on the same rows reuse the sorted
    risk-set structure.
    """
    if lam < 0:
        raise DataError("ridge penalty must be nonnegative")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        X = X.reshape(len(X), -1)
    p = X.shape[1]
    if feature_names is None:
        feature_names = tuple(f"x{j}" for j in range(p))
    if p == 0:
        return CoxModel(np.zeros(0), feature_names, lam, True, 0)

    cd = cox_data if cox_data is not None else CoxData(outcome)
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=float)
    degenerate = False

    def objective(b):
        nlpl, g, _ = _eta_stats(X @ b, cd)
        return nlpl + 0.5 * lam * float(b @ b), -(X.T @ g) + lam * b

    obj, grad = objective(beta)
    it = 0
    converged = float(np.max(np.abs(grad))) < tol
    while not converged and it < max_iter:
        it += 1
        H = _hessian_beta(X @ beta, X, cd) + lam * np.eye(p)
        try:
            delta = np.linalg.solve(H, -grad)
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(H + 1e-8 * np.eye(p), -grad, rcond=None)[0]
        step = 1.0
        for _ in range(30):
            cand = beta + step * delta
            cand_obj, cand_grad = objective(cand)
            if cand_obj <= obj + 1e-12:
                break
            step *= 0.5
        else:
            break  # no descent direction left
        beta = cand
        if np.any(np.abs(beta) > COEF_CLAMP):
            beta = np.clip(beta, -COEF_CLAMP, COEF_CLAMP)
            degenerate = True
            obj, grad = objective(beta)
        else:
            obj, grad = cand_obj, cand_grad
        converged = float(np.max(np.abs(grad))) < tol
    return CoxModel(beta, feature_names, lam, converged, it, degenerate)


class UnivariateFit(NamedTuple):
    beta: float
    score: float
    degenerate: bool


def univariate_newton_many(X, outcome: Outcome, max_iter: int = 25, tol: float = 1e-8):
    """One-dimensional Newton fit of every column of X simultaneously.

    Returns (beta, degenerate) arrays of length p.  Constant columns get
    beta 0 and a degeneracy flag; coefficients diverging past |beta| > 50
    are clamped and flagged.  Step-halving guards each Newton update.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    cd = CoxData(outcome)
    Xs = X[cd.order]
    const = np.ptp(X, axis=0) == 0
    beta = np.zeros(p)
    degenerate = const.copy()
    active = ~const
    has_events = cd.d > 0
    d_ev = cd.d[has_events]
    x_event_sum = Xs[cd.event_mask].sum(axis=0)

    def stats(b):
        """Per-column loss, gradient and information at coefficients b."""
        E = Xs * b[None, :]
        m = E.max(axis=0)
        w = np.exp(E - m[None, :])
        W = _suffix_over_groups(w, cd)
        Sx = _suffix_over_groups(w * Xs, cd)
        Sxx = _suffix_over_groups(w * Xs**2, cd)
        We, Sxe, Sxxe = W[has_events], Sx[has_events], Sxx[has_events]
        loss = -(
            (Xs[cd.event_mask] * b[None, :]).sum(axis=0)
            - (d_ev[:, None] * (m[None, :] + np.log(We))).sum(axis=0)
        )
        grad = -(x_event_sum - (d_ev[:, None] * Sxe / We).sum(axis=0))
        info = (d_ev[:, None] * (Sxxe / We - (Sxe / We) ** 2)).sum(axis=0)
        return loss, grad, info

    loss, grad, info = stats(beta)
    for _ in range(max_iter):
        if not active.any():
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            delta = np.where(active & (info > 1e-12), -grad / info, 0.0)
        if not np.any(np.abs(delta) > 0):
            break
        step = np.where(active, 1.0, 0.0)
        cand = beta + step * delta
        for _ in range(30):
            cand_loss = stats(cand)[0]
            worse = active & (cand_loss > loss + 1e-12)
            if not worse.any():
                break
            step[worse] *= 0.5
            cand = beta + step * delta
        moved = np.abs(cand - beta)
        beta = cand
        over = np.abs(beta) > COEF_CLAMP
        if over.any():
            beta = np.clip(beta, -COEF_CLAMP, COEF_CLAMP)
            degenerate |= over
            active &= ~over
        active &= moved >= tol
        loss, grad, info = stats(beta)
    beta[const] = 0.0
    return beta, degenerate


def fit_univariate_cox(x, outcome: Outcome) -> UnivariateFit:
    """Single-feature Cox fit; score is the concordance of beta*x.

    A constant feature is degenerate: beta 0, score 0.5.
    """
    x = np.asarray(x, dtype=float).reshape(-1, 1)
    beta, degen = univariate_newton_many(x, outcome)
    b = float(beta[0])
    if degen[0] and b == 0.0:
        return UnivariateFit(0.0, 0.5, True)
    score = concordance_index(b * x[:, 0], outcome)
    return UnivariateFit(b, score, bool(degen[0]))


def concordance_index(risk, outcome: Outcome) -> float:
    """Harrell concordance of a risk score against censored outcomes.

    Comparable pairs are exactly those (i, j) with time_i < time_j and
    event_i = 1; within a pair the higher-risk earlier event counts 1 and a
    risk tie counts 0.5.  Pairs with tied times are incomparable.  With no
    comparable pairs at all the value is 0.5 by convention.
    """
    risk = np.asarray(risk, dtype=float)
    time = np.asarray(outcome.time, dtype=float)
    event = np.asarray(outcome.event)
    n = len(risk)
    if time.shape != (n,) or event.shape != (n,):
        raise DataError("risk/outcome length mismatch")
    concordant = 0.0
    comparable = 0
    block = 512
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        t_i = time[lo:hi, None]
        r_i = risk[lo:hi, None]
        e_i = event[lo:hi, None] == 1
        comp = (t_i < time[None, :]) & e_i
        concordant += float(np.sum(comp & (r_i > risk[None, :])))
        concordant += 0.5 * float(np.sum(comp & (r_i == risk[None, :])))
        comparable += int(np.sum(comp))
    if comparable == 0:
        return 0.5
    return concordant / comparable


# ---------------------------------------------------------------------------
# ridge penalty selection for the evaluator
# ---------------------------------------------------------------------------


def stratified_fold_labels(outcome: Outcome, k: int) -> np.ndarray:
    """Deterministic, row-order-invariant k-fold labels stratified on event.

    Rows are ranked by a canonical key (time, then event) so that permuting
    the input rows permutes the labels identically; events and censored
    subjects are striped over folds separately.
    """
    time = np.asarray(outcome.time, dtype=float)
    event = np.asarray(outcome.event)
    order = np.lexsort((event, time))
    labels = np.zeros(len(time), dtype=int)
    counter = 0
    for stratum in (1, 0):
        for idx in order:
            if event[idx] == stratum:
                labels[idx] = counter % k
                counter += 1
    return labels


def ridge_lambda_grid(X, outcome: Outcome, n_points: int = 20) -> np.ndarray:
    """Log grid of n_points from lam_max/1000 up to lam_max.

    lam_max is the largest absolute component of the unpenalized gradient
    at beta = 0.
    """
    g0 = gradient_nlpl(np.zeros(X.shape[1]), X, outcome)
    lam_max = float(np.max(np.abs(g0)))
    if lam_max <= 0:
        lam_max = 1.0
    return np.geomspace(lam_max / 1000.0, lam_max, n_points)


def fit_ridge_cox_cv(
    X,
    outcome: Outcome,
    feature_names: Optional[tuple] = None,
    n_folds: int = 5,
    n_points: int = 20,
) -> CoxModel:
    """Ridge fit with the penalty chosen by internal cross-validation.

    The grid runs from lam_max/1000 to lam_max; each candidate is scored by
    held-out partial-likelihood deviance summed over stratified folds, ties
    resolving toward the stronger penalty.  The returned model is refit on
    all rows at the winning penalty.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        X = X.reshape(len(X), -1)
    if X.shape[1] == 0:
        return fit_ridge_cox(X, outcome, 0.0, feature_names)
    grid = ridge_lambda_grid(X, outcome, n_points)[::-1]  # strongest first
    labels = stratified_fold_labels(outcome, n_folds)
    dev = np.zeros(len(grid))
    for fold in range(n_folds):
        tr = labels != fold
        va = ~tr
        if int(np.sum(outcome.event[tr])) == 0 or int(np.sum(va)) < 2:
            continue
        out_tr = Outcome(outcome.time[tr], outcome.event[tr])
        out_va = Outcome(outcome.time[va], outcome.event[va])
        if int(np.sum(out_va.event)) == 0:
            continue
        cd_tr = CoxData(out_tr)
        cd_va = CoxData(out_va)
        X_tr, X_va = X[tr], X[va]
        beta_prev = None
        for i, lam in enumerate(grid):
            # grid fits only rank penalties; warm starts keep a tight
            # iteration cap accurate enough for the deviance comparison
            model = fit_ridge_cox(
                X_tr, out_tr, lam, beta0=beta_prev, max_iter=4, tol=1e-5,
                cox_data=cd_tr,
            )
            beta_prev = model.coefficients
            dev[i] += 2.0 * _eta_stats(X_va @ model.coefficients, cd_va)[0]
    best = int(np.argmin(dev))  # argmin takes the first = largest lam on ties
    return fit_ridge_cox(X, outcome, float(grid[best]), feature_names)
