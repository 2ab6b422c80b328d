"""Correlation-based feature clustering and representative selection.

Pipeline: Spearman correlation matrix -> Euclidean distances between its
rows -> complete-linkage agglomeration -> height-guided recursive tree cut
-> one representative per cluster (highest univariate Cox score).
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform
from scipy.stats import rankdata

from .errors import DataError


def spearman_matrix(X):
    """Pairwise Spearman correlations of the columns of X.

    Columns are rank-transformed (ties get mean ranks) and correlated with
    Pearson's formula.  Constant columns correlate 0 with everything and 1
    with themselves; the returned mask flags them.

    Returns (corr, constant_mask).
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if n < 3:
        raise DataError("Spearman correlation needs at least 3 rows")
    const = np.ptp(X, axis=0) == 0
    ranks = np.empty_like(X)
    for j in range(p):
        ranks[:, j] = rankdata(X[:, j], method="average")
    sd = ranks.std(axis=0, ddof=0)
    sd[const] = 1.0
    Z = (ranks - ranks.mean(axis=0)) / sd
    corr = (Z.T @ Z) / n
    corr[const, :] = 0.0
    corr[:, const] = 0.0
    np.fill_diagonal(corr, 1.0)
    corr = np.clip(corr, -1.0, 1.0)
    return corr, const


def feature_distance_matrix(corr, variant: str = "rows"):
    """Distances between features derived from their correlation structure.

    variant "rows" (default): Euclidean distance between rows of the
    correlation matrix, so two features are close when they relate to all
    other features the same way.  variant "scalar": 1 - |corr_ij|.
    """
    corr = np.asarray(corr, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise DataError("correlation matrix must be square")
    if variant == "rows":
        dist = squareform(pdist(corr, metric="euclidean"))
    elif variant == "scalar":
        dist = 1.0 - np.abs(corr)
    else:
        raise DataError(f"unknown distance variant {variant!r}")
    np.fill_diagonal(dist, 0.0)
    return dist


@dataclass
class Dendrogram:
    """Merge tree over p leaves.

    Leaf ids are 1..p; the k-th merge creates internal id p+k.  Each merge
    record is (left id, right id, height) with left < right; complete
    linkage makes heights nondecreasing.
    """

    n_leaves: int
    merges: list  # [(left, right, height)]

    @property
    def root_height(self) -> float:
        return self.merges[-1][2] if self.merges else 0.0

    def leaves_under(self, node_id: int):
        """All leaf ids in the subtree rooted at node_id."""
        stack = [node_id]
        leaves = []
        while stack:
            nid = stack.pop()
            if nid <= self.n_leaves:
                leaves.append(nid)
            else:
                left, right, _ = self.merges[nid - self.n_leaves - 1]
                stack.extend((left, right))
        return leaves

    def to_dict(self):
        return {
            "n_leaves": self.n_leaves,
            "merges": [[int(a), int(b), float(h)] for a, b, h in self.merges],
        }


def agglomerate_complete(dist) -> Dendrogram:
    """Complete-linkage agglomerative clustering of a distance matrix.

    Merge height is the maximum pairwise distance between the merged
    groups; among equally close pairs the one with the smallest (left id,
    right id) merges first.
    """
    D = np.array(dist, dtype=float)
    p = D.shape[0]
    if D.shape != (p, p):
        raise DataError("distance matrix must be square")
    if p == 1:
        return Dendrogram(1, [])
    work = D.copy()
    np.fill_diagonal(work, np.inf)
    alive = np.ones(p, dtype=bool)
    ids = np.arange(1, p + 1)  # current cluster id per matrix slot
    merges = []
    next_id = p + 1
    for _ in range(p - 1):
        masked = np.where(alive[:, None] & alive[None, :], work, np.inf)
        d_min = float(masked.min())
        cand = np.argwhere(masked == d_min)
        cand = cand[cand[:, 0] < cand[:, 1]]
        _, _, i, j = min(
            (min(ids[i], ids[j]), max(ids[i], ids[j]), i, j) for i, j in cand
        )
        merges.append((int(min(ids[i], ids[j])), int(max(ids[i], ids[j])), d_min))
        # complete linkage: distance to the union is the max of the parts
        work[i, :] = np.maximum(work[i, :], work[j, :])
        work[:, i] = work[i, :]
        work[i, i] = np.inf
        alive[j] = False
        ids[i] = next_id
        next_id += 1
    return Dendrogram(p, merges)


@dataclass
class ClusterAssignment:
    """Cluster labels (1..C, every feature assigned) and representatives.

    ``promoted`` marks features whose branch fell below the minimum size
    and became a singleton cluster of its own.
    """

    labels: np.ndarray
    min_cluster_size: int
    tau: float
    promoted: np.ndarray
    representatives: dict = None  # cluster id -> feature index

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max())

    def members(self, cluster_id: int):
        return np.flatnonzero(self.labels == cluster_id)

    def to_dict(self, feature_names=None):
        out = {
            "labels": [int(v) for v in self.labels],
            "min_cluster_size": self.min_cluster_size,
            "tau": self.tau,
            "promoted_singletons": int(self.promoted.sum()),
        }
        if self.representatives is not None:
            reps = {}
            for cid, j in self.representatives.items():
                reps[str(cid)] = feature_names[j] if feature_names else int(j)
            out["representatives"] = reps
        return out


def dynamic_tree_cut(
    dendro: Dendrogram, min_size: int = 3, tau: float = 0.99, gap: float = 0.7
) -> ClusterAssignment:
    """Height-guided top-down cut of a complete-linkage dendrogram.

    Stage 1 removes every merge higher than ``tau`` times the root height;
    the surviving components are the initial branches.  Stage 2 refines
    each branch recursively: a branch splits at its top merge while that
    top sits above ``gap`` times the height of the merge just above it
    (the join is nearly as high as its surroundings, so the branch is not
    a coherent cluster); a drop of more than the gap fraction fixes the
    branch as a cluster.  Branches that end up smaller than ``min_size``
    are promoted: each of their leaves becomes a singleton cluster.  The
    number of clusters is an output, never an input.
    """
    if min_size < 2:
        raise DataError("min_size must be >= 2")
    if not (0.0 < tau < 1.0):
        raise DataError("tau must lie in (0, 1)")
    if not (0.0 < gap < 1.0):
        raise DataError("gap must lie in (0, 1)")
    p = dendro.n_leaves
    labels = np.zeros(p, dtype=int)
    promoted = np.zeros(p, dtype=bool)
    if not dendro.merges:
        labels[:] = 1
        return ClusterAssignment(labels, min_size, tau, promoted)

    threshold = tau * dendro.root_height
    heights = {p + k + 1: h for k, (_, _, h) in enumerate(dendro.merges)}
    children = {p + k + 1: (l, r) for k, (l, r, _) in enumerate(dendro.merges)}
    sizes = {leaf: 1 for leaf in range(1, p + 1)}
    for k, (l, r, _) in enumerate(dendro.merges):
        sizes[p + k + 1] = sizes[l] + sizes[r]

    # stage 1: merges above the static threshold dissolve; their children
    # become candidate branches that remember the height above them
    branches = []  # (node id, height of the merge above it)
    root = p + len(dendro.merges)
    stack = [(root, dendro.root_height)]
    while stack:
        node, above = stack.pop()
        if node > p and heights[node] > threshold:
            h = heights[node]
            l, r = children[node]
            stack.append((l, h))
            stack.append((r, h))
        else:
            branches.append((node, above))

    # stage 2: recursive refinement of each surviving branch
    final = []
    stack = branches
    while stack:
        node, above = stack.pop()
        if node <= p or sizes[node] < min_size:
            final.append(node)
            continue
        h = heights[node]
        if h > gap * above:
            l, r = children[node]
            stack.append((l, h))
            stack.append((r, h))
        else:
            final.append(node)

    next_label = 1
    for node in sorted(final, key=lambda nd: min(dendro.leaves_under(nd))):
        leaves = sorted(dendro.leaves_under(node))
        if len(leaves) >= min_size:
            for leaf in leaves:
                labels[leaf - 1] = next_label
            next_label += 1
        else:
            for leaf in leaves:
                labels[leaf - 1] = next_label
                promoted[leaf - 1] = True
                next_label += 1
    return ClusterAssignment(labels, min_size, tau, promoted)


def pick_representatives(assignment: ClusterAssignment, uni_scores, feature_names) -> ClusterAssignment:
    """Choose the highest-scoring feature of every cluster.

    Ties break toward the lexicographically smallest feature name, so the
    choice never depends on column order.
    """
    uni_scores = np.asarray(uni_scores, dtype=float)
    if len(uni_scores) != len(assignment.labels):
        raise DataError("univariate scores must cover every feature")
    reps = {}
    for cid in range(1, assignment.n_clusters + 1):
        members = assignment.members(cid)
        best = min(members, key=lambda j: (-uni_scores[j], feature_names[j]))
        reps[cid] = int(best)
    return ClusterAssignment(
        assignment.labels,
        assignment.min_cluster_size,
        assignment.tau,
        assignment.promoted,
        reps,
    )
