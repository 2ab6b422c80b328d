"""Random survival forest with log-rank splitting and permutation importance.

Each tree grows on a bootstrap of the rows; candidate splits are scored by
the two-sample log-rank statistic; leaves predict the total Nelson-Aalen
cumulative hazard of their in-bag rows.  Feature importance is the mean
drop in out-of-bag concordance when a feature's out-of-bag values are
permuted, one permutation per tree.
"""

from dataclasses import dataclass

import numpy as np

from .cox import concordance_index
from .data import Outcome
from .seeding import ROLE_PERM, ROLE_TREE, rng_for

MAX_THRESHOLDS = 32


@dataclass
class _Node:
    feature: int  # -1 for a leaf
    threshold: float
    left: int
    right: int
    risk: float


def _node_outcome_layout(time, event):
    """Sort rows of one node by time; return tie-group structure."""
    order = np.argsort(time, kind="stable")
    t = time[order]
    e = event[order].astype(float)
    new_group = np.r_[True, t[1:] != t[:-1]]
    starts = np.flatnonzero(new_group)
    d = np.add.reduceat(e, starts)
    n = len(t)
    at_risk = n - starts  # number with time >= group time
    return order, starts, d, at_risk


def _leaf_risk(time, event) -> float:
    """Total Nelson-Aalen cumulative hazard of the node's rows."""
    _, _, d, at_risk = _node_outcome_layout(time, event)
    ev = d > 0
    return float(np.sum(d[ev] / at_risk[ev]))


def _candidate_thresholds(values):
    uniq = np.unique(values)
    if len(uniq) < 2:
        return None
    mids = 0.5 * (uniq[:-1] + uniq[1:])
    if len(mids) > MAX_THRESHOLDS:
        pick = np.linspace(0, len(mids) - 1, MAX_THRESHOLDS).round().astype(int)
        mids = mids[np.unique(pick)]
    return mids


def _logrank_stats(membership, event_sorted, starts, d, at_risk):
    """|log-rank| statistic for each candidate split, vectorized over splits.

    ``membership`` is (n_node, T) boolean (already in node time order);
    groups with fewer than 2 at risk contribute no variance.
    """
    mem = membership.astype(float)
    # numbers at risk in the left child per tie group: suffix counts
    seg = np.add.reduceat(mem, starts, axis=0)
    y_left = np.cumsum(seg[::-1], axis=0)[::-1]
    # events in the left child per tie group
    d_left = np.add.reduceat(mem * event_sorted[:, None], starts, axis=0)
    ev = d > 0
    y = at_risk[ev].astype(float)[:, None]
    dd = d[ev][:, None]
    yl = y_left[ev]
    num = (d_left[ev] - dd * yl / y).sum(axis=0)
    frac = yl / y
    with np.errstate(invalid="ignore", divide="ignore"):
        var_terms = np.where(
            y > 1, dd * frac * (1.0 - frac) * (y - dd) / (y - 1.0), 0.0
        )
    var = var_terms.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        stat = np.where(var > 0, np.abs(num) / np.sqrt(var), 0.0)
    return stat


def _grow_tree(X, time, event, rows, mtry, min_node, rng):
    nodes = []
    # queue of (row indices, slot in nodes); children always appended after
    # their parent so a single forward pass can route predictions
    nodes.append(None)
    queue = [(rows, 0)]
    m = X.shape[1]
    while queue:
        idx, slot = queue.pop(0)
        t_node = time[idx]
        e_node = event[idx]
        leaf = _Node(-1, 0.0, -1, -1, _leaf_risk(t_node, e_node))
        if len(idx) < 2 * min_node or int(e_node.sum()) < 1:
            nodes[slot] = leaf
            continue
        order, starts, d, at_risk = _node_outcome_layout(t_node, e_node)
        e_sorted = e_node[order].astype(float)
        candidates = rng.choice(m, size=min(mtry, m), replace=False)
        best = (0.0, -1, 0.0)  # (stat, feature, threshold)
        for f in candidates:
            vals = X[idx, f]
            thr = _candidate_thresholds(vals)
            if thr is None:
                continue
            membership = vals[order][:, None] <= thr[None, :]
            counts = membership.sum(axis=0)
            valid = (counts >= min_node) & (len(idx) - counts >= min_node)
            if not valid.any():
                continue
            stats = _logrank_stats(membership, e_sorted, starts, d, at_risk)
            stats = np.where(valid, stats, -np.inf)
            k = int(np.argmax(stats))
            if stats[k] > best[0]:
                best = (float(stats[k]), int(f), float(thr[k]))
        if best[1] < 0:
            nodes[slot] = leaf
            continue
        _, f, thr = best
        go_left = X[idx, f] <= thr
        left_slot = len(nodes)
        nodes.append(None)
        right_slot = len(nodes)
        nodes.append(None)
        nodes[slot] = _Node(f, thr, left_slot, right_slot, 0.0)
        queue.append((idx[go_left], left_slot))
        queue.append((idx[~go_left], right_slot))
    return nodes


def _apply_tree(nodes, X):
    node_of = np.zeros(len(X), dtype=int)
    risk = np.zeros(len(X))
    for ni, node in enumerate(nodes):
        sel = np.flatnonzero(node_of == ni)
        if sel.size == 0:
            continue
        if node.feature < 0:
            risk[sel] = node.risk
        else:
            left = X[sel, node.feature] <= node.threshold
            node_of[sel[left]] = node.left
            node_of[sel[~left]] = node.right
    return risk


def _used_features(nodes):
    return sorted({nd.feature for nd in nodes if nd.feature >= 0})


def rsf_importance(
    X,
    outcome: Outcome,
    n_trees: int = 100,
    mtry: int = 0,
    min_node: int = 10,
    seed: int = 0,
):
    """Permutation importances of every column, plus a degeneracy flag.

    Returns (importance, degenerate): importance is the per-feature mean
    out-of-bag concordance drop over all trees with a usable out-of-bag
    sample, floored at zero; degenerate is True when no tree managed a
    single split.
    """
    X = np.asarray(X, dtype=float)
    time = np.asarray(outcome.time, dtype=float)
    event = np.asarray(outcome.event)
    n, m = X.shape
    if mtry <= 0:
        mtry = max(1, int(np.ceil(np.sqrt(m))))
    drops = np.zeros(m)
    n_valid = 0
    any_split = False
    for ti in range(n_trees):
        rng = rng_for(seed, ROLE_TREE, ti)
        bag = rng.integers(0, n, size=n)
        oob = np.setdiff1d(np.arange(n), bag)
        nodes = _grow_tree(X, time, event, bag, mtry, min_node, rng)
        used = _used_features(nodes)
        if used:
            any_split = True
        if oob.size < 2 or int(event[oob].sum()) == 0:
            continue
        oob_out = Outcome(time[oob], event[oob])
        X_oob = X[oob]
        c_orig = concordance_index(_apply_tree(nodes, X_oob), oob_out)
        n_valid += 1
        for f in used:
            perm_rng = rng_for(seed, ROLE_PERM, ti, f)
            X_perm = X_oob.copy()
            X_perm[:, f] = X_perm[perm_rng.permutation(len(oob)), f]
            c_perm = concordance_index(_apply_tree(nodes, X_perm), oob_out)
            drops[f] += c_orig - c_perm
    if n_valid > 0:
        drops /= n_valid
    importance = np.maximum(drops, 0.0)
    return importance, not any_split
