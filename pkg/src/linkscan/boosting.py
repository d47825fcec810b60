"""AdaBoost over Gini-split, depth-limited decision trees (default: stumps).

Everything here is deterministic: tree growth is greedy with ties broken by
(lowest feature index, lowest threshold), and boosting involves no RNG, so a
fit is a pure function of the labeled split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .frames import LabeledSplit

EPS_CLAMP = 1e-10  # keeps alpha finite when a round classifies perfectly


def gini(class_fractions) -> float:
    """Gini impurity 1 - sum(p_i^2) of a class-fraction vector.

    Fractions must be nonnegative and sum to 1 within 1e-9.
    """
    p = np.asarray(class_fractions, dtype=np.float64)
    if (p < 0).any():
        raise ValueError(f"class fractions must be nonnegative: {class_fractions}")
    if abs(float(p.sum()) - 1.0) > 1e-9:
        raise ValueError(f"class fractions must sum to 1: {class_fractions}")
    return float(1.0 - np.sum(p * p))


@dataclass
class TreeNode:
    """Either a leaf (feature is None) or a binary split node.

    ``class_score`` is the weighted positive fraction of the training rows
    that reached the node; for leaves it is the node's vote. Split nodes
    send x[feature] <= threshold left and record ``gain``, the weighted
    impurity decrease in root-mass units (used for feature importances).
    """

    class_score: float
    feature: int | None = None
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    gain: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass
class BoostedModel:
    estimators: list[TreeNode] = field(default_factory=list)
    alphas: list[float] = field(default_factory=list)
    n_series: int = 0
    max_depth: int = 1
    n_estimators: int = 50


def _best_split(x, y, w, orders):
    """Scan every feature/midpoint pair for the lowest weighted child Gini.

    ``orders`` holds, per feature, the node's row indices sorted by that
    feature. Returns (child_impurity, feature, threshold, split_pos) or
    None when no feature has two distinct values. Ties go to the lowest
    feature index, then the lowest threshold (argmin keeps the first and
    positions scan ascending thresholds).
    """
    best = None
    for f, order in enumerate(orders):
        xs = x[order, f]
        valid = xs[:-1] != xs[1:]
        if not valid.any():
            continue
        ws = w[order]
        wy = ws * y[order]
        cw = np.cumsum(ws)
        cp = np.cumsum(wy)
        # suffix sums computed directly: subtracting from the total can
        # cancel to exactly 0 when boosting drives weights tiny
        cw_r = np.cumsum(ws[::-1])[::-1]
        cp_r = np.cumsum(wy[::-1])[::-1]
        w_tot = cw[-1]
        wl, pl = cw[:-1][valid], cp[:-1][valid]
        wr, pr = cw_r[1:][valid], cp_r[1:][valid]
        child = 2.0 * (pl * (wl - pl) / wl + pr * (wr - pr) / wr) / w_tot
        j = int(np.argmin(child))
        if best is None or child[j] < best[0]:
            pos = int(np.nonzero(valid)[0][j])
            thr = (xs[pos] + xs[pos + 1]) / 2.0
            best = (float(child[j]), f, thr, pos)
    return best


def _grow(x, y, w, orders, depth_left, w_root):
    members = orders[0]
    w_node = float(w[members].sum())
    p_node = float((w[members] * y[members]).sum())
    score = p_node / w_node
    node = TreeNode(class_score=score)
    if depth_left == 0 or p_node == 0.0 or p_node == w_node:
        return node

    found = _best_split(x, y, w, orders)
    if found is None:
        return node
    child_imp, f, thr, _ = found
    parent_imp = 2.0 * score * (1.0 - score)
    if not child_imp < parent_imp:
        return node

    node.feature = f
    node.threshold = thr
    node.gain = w_node * (parent_imp - child_imp) / w_root
    left_orders = [o[x[o, f] <= thr] for o in orders]
    right_orders = [o[x[o, f] > thr] for o in orders]
    node.left = _grow(x, y, w, left_orders, depth_left - 1, w_root)
    node.right = _grow(x, y, w, right_orders, depth_left - 1, w_root)
    return node


def fit_tree(x, y, w, max_depth: int = 1, _orders=None) -> TreeNode:
    """Grow a depth-limited tree by greedy weighted-Gini splitting.

    Candidate thresholds are midpoints between consecutive distinct sorted
    feature values; recursion stops at ``max_depth``, on a pure node, or
    when no split reduces impurity. Leaf scores are weighted positive
    fractions. ``_orders`` lets a caller reuse presorted per-feature row
    orders across repeated fits on the same x.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if not (len(x) == len(y) == len(w) >= 1):
        raise ValueError("x, y, w must be equal-length and non-empty")
    if (w <= 0).any():
        raise ValueError("sample weights must be positive")
    if max_depth < 1:
        raise ValueError(f"max_depth must be >= 1, got {max_depth}")
    if _orders is None:
        _orders = [np.argsort(x[:, f], kind="stable") for f in range(x.shape[1])]
    return _grow(x, y, w, _orders, max_depth, float(w.sum()))


def _tree_scores(node: TreeNode, x: np.ndarray) -> np.ndarray:
    out = np.empty(len(x))
    stack = [(node, np.arange(len(x)))]
    while stack:
        n, idx = stack.pop()
        if n.is_leaf:
            out[idx] = n.class_score
            continue
        mask = x[idx, n.feature] <= n.threshold
        stack.append((n.left, idx[mask]))
        stack.append((n.right, idx[~mask]))
    return out


def fit_adaboost(
    split: LabeledSplit,
    n_estimators: int = 50,
    max_depth: int = 1,
) -> BoostedModel:
    """Classic discrete AdaBoost over Gini trees of depth ``max_depth``.

    Starts from uniform weights; each round fits a tree, computes its
    weighted error eps_t over hard votes, sets alpha_t = 0.5*ln((1-eps)/eps)
    and reweights samples by exp(+-alpha). Stops early (after recording the
    round) once eps_t hits 0 or 0.5.
    """
    x = np.asarray(split.train_x, dtype=np.float64)
    y = np.asarray(split.train_y, dtype=np.float64)
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("training data must contain both classes")
    n = len(y)
    w = np.full(n, 1.0 / n)
    orders = [np.argsort(x[:, f], kind="stable") for f in range(x.shape[1])]
    model = BoostedModel(
        n_series=x.shape[1], max_depth=max_depth, n_estimators=n_estimators
    )
    for _ in range(n_estimators):
        tree = fit_tree(x, y, w, max_depth, _orders=orders)
        mis = (_tree_scores(tree, x) > 0.5) != (y == 1.0)
        err = float(w[mis].sum())
        eps = min(max(err, EPS_CLAMP), 1.0 - EPS_CLAMP)
        alpha = 0.5 * math.log((1.0 - eps) / eps)
        model.estimators.append(tree)
        model.alphas.append(alpha)
        if err == 0.0 or err >= 0.5:
            break
        w = w * np.exp(np.where(mis, alpha, -alpha))
        w /= w.sum()
    return model


def predict_scores(model: BoostedModel, x: np.ndarray) -> np.ndarray:
    """Alpha-weighted mean of leaf scores, one value in [0, 1] per row.

    The hard label is score > 0.5, equivalent to the sign of the weighted
    sum of (2*score - 1) votes.
    """
    if not model.estimators:
        raise ValueError("model has no estimators")
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    total = float(sum(model.alphas))
    if total <= 0.0:
        return np.full(len(x), 0.5)
    acc = np.zeros(len(x))
    for tree, alpha in zip(model.estimators, model.alphas):
        if alpha != 0.0:
            acc += alpha * _tree_scores(tree, x)
    return acc / total


def predict_score(model: BoostedModel, x_row) -> float:
    return float(predict_scores(model, np.asarray(x_row, dtype=np.float64)[None, :])[0])


def auc(scores, labels) -> float:
    """Rank-based (Mann-Whitney) AUC with ties counting one half.

    Equals the fraction of (positive, negative) pairs where the positive
    scores strictly higher, plus half the tied pairs.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = s.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc needs both classes present")
    order = np.argsort(s, kind="mergesort")
    s_sorted = s[order]
    new_group = np.r_[True, s_sorted[1:] != s_sorted[:-1]]
    group = np.cumsum(new_group) - 1
    counts = np.bincount(group)
    starts = np.concatenate(([0], np.cumsum(counts[:-1]))) + 1.0
    group_rank = starts + (counts - 1) / 2.0
    ranks = np.empty(s.size)
    ranks[order] = group_rank[group]
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def feature_importances(model: BoostedModel) -> np.ndarray:
    """Alpha-weighted, per-tree-normalized impurity decrease per feature.

    Each tree's split gains are summed per feature and normalized to unit
    total, then trees are combined with their alphas and the result
    normalized to sum to 1. For stump ensembles this reduces to
    sum(alpha_t over stumps on f) / sum(alpha_t). A model that never split
    returns the zero vector.
    """
    if not model.estimators:
        raise ValueError("model has no estimators")
    if sum(model.alphas) <= 0.0:
        raise ValueError("model alphas sum to zero")
    total = np.zeros(model.n_series)
    for tree, alpha in zip(model.estimators, model.alphas):
        per_tree = np.zeros(model.n_series)
        stack = [tree]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                continue
            per_tree[node.feature] += node.gain
            stack.extend((node.left, node.right))
        tree_total = per_tree.sum()
        if tree_total > 0.0 and alpha > 0.0:
            total += alpha * per_tree / tree_total
    grand = total.sum()
    return total / grand if grand > 0.0 else total


def dump_tree(node: TreeNode, series_names=None, indent: str = "") -> str:
    """Render a tree as indented text, for eyeballing only."""
    if node.is_leaf:
        return f"{indent}leaf score={node.class_score:.4f}\n"
    name = series_names[node.feature] if series_names else f"x[{node.feature}]"
    out = f"{indent}{name} <= {node.threshold:.6g}  (gain {node.gain:.4g})\n"
    out += dump_tree(node.left, series_names, indent + "  ")
    out += dump_tree(node.right, series_names, indent + "  ")
    return out
