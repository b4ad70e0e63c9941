"""Seeded per-sample-weighted random forest core.

Sample weights act everywhere a sample is counted: bootstrap draw
probabilities, split impurity, and leaf votes.  Two consequences are relied
on by callers and tests:

- Determinism: identical (X, y, weights, params, seed) give an identical
  serialized model.  Per-tree generators derive from (seed, tree_index).
- Weight-zero equivalence: samples with weight 0 are never drawn (the
  bootstrap inverts the weighted CDF and draws one sample per
  positive-weight row), so training with them present is identical to
  training without them under the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 5
    max_depth: int = 25
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    # features examined per split: round(sqrt(n_features)), the forest default
    max_features: str = "sqrt"


@dataclass
class TreeNode:
    # Leaf: counts is the weighted class-count vector; feature is None.
    feature: int | None = None
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    counts: np.ndarray | None = None

    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        if self.is_leaf():
            return {"counts": [float(c) for c in self.counts]}
        return {"feature": int(self.feature), "threshold": float(self.threshold),
                "left": self.left.to_dict(), "right": self.right.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        if "counts" in d:
            return cls(counts=np.asarray(d["counts"], dtype=float))
        return cls(feature=int(d["feature"]), threshold=float(d["threshold"]),
                   left=cls.from_dict(d["left"]), right=cls.from_dict(d["right"]))


def _entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    if total <= 0.0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _weighted_bootstrap(rng: np.random.Generator, weights: np.ndarray) -> np.ndarray:
    """Draw one index per positive-weight sample, probability ~ weight."""
    n_draws = int(np.count_nonzero(weights > 0))
    cdf = np.cumsum(weights, dtype=float)
    cdf /= cdf[-1]
    u = rng.random(n_draws)
    return np.searchsorted(cdf, u, side="right")


class WeightedForest:
    """Bootstrap ensemble of weighted-entropy decision trees.

    Classes are consecutive integers 0..n_classes-1.  Prediction is the
    majority of per-tree votes; vote counts are exposed so callers can
    apply their own tie rules or class groupings.
    """

    def __init__(self, params: ForestParams, seed: int):
        self.params = params
        self.seed = int(seed)
        self.trees: list[TreeNode] = []
        self.n_classes = 0
        self.n_features = 0
        self.degenerate_class: int | None = None
        self._importance_raw: np.ndarray | None = None

    # -- training ---------------------------------------------------------

    def fit(self, X: np.ndarray, y: np.ndarray,
            weights: np.ndarray | None = None,
            n_classes: int | None = None) -> "WeightedForest":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        if X.ndim != 2 or len(X) != len(y):
            raise ValueError(f"bad shapes X{X.shape} y{y.shape}")
        if np.isnan(X).any():
            raise ValueError("NaN feature values")
        if weights is None:
            weights = np.ones(len(y))
        weights = np.asarray(weights, dtype=float)
        if len(weights) != len(y) or np.any(weights < 0):
            raise ValueError("weights must be nonnegative, one per sample")
        if not np.any(weights > 0):
            raise ValueError("all sample weights are zero")
        self.n_features = X.shape[1]
        self.n_classes = int(n_classes if n_classes is not None else y.max() + 1)
        self._importance_raw = np.zeros(self.n_features)

        effective = np.unique(y[weights > 0])
        if len(effective) < 2:
            # Single-class data: constant model, flagged.
            self.degenerate_class = int(effective[0])
            self.trees = []
            return self

        self.degenerate_class = None
        self.trees = []
        for t in range(self.params.n_trees):
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, t])))
            idx = _weighted_bootstrap(rng, weights)
            tree = self._grow(X[idx], y[idx], weights[idx], depth=0, rng=rng)
            self.trees.append(tree)
        return self

    def _grow(self, X: np.ndarray, y: np.ndarray, w: np.ndarray,
              depth: int, rng: np.random.Generator) -> TreeNode:
        counts = np.zeros(self.n_classes)
        np.add.at(counts, y, w)
        if (depth >= self.params.max_depth
                or len(y) < self.params.min_samples_split
                or np.count_nonzero(counts) < 2):
            return TreeNode(counts=counts)
        k = max(1, int(round(np.sqrt(self.n_features))))
        feats = np.sort(rng.permutation(self.n_features)[:k])
        best = self._best_split(X, y, w, counts, feats)
        if best is None:
            return TreeNode(counts=counts)
        f, thr = best
        mask = X[:, f] < thr
        left = self._grow(X[mask], y[mask], w[mask], depth + 1, rng)
        right = self._grow(X[~mask], y[~mask], w[~mask], depth + 1, rng)
        # Impurity-decrease importance, accumulated in bootstrap-weight units.
        lc = np.zeros(self.n_classes); np.add.at(lc, y[mask], w[mask])
        rc = counts - lc
        self._importance_raw[f] += (counts.sum() * _entropy(counts)
                                    - lc.sum() * _entropy(lc)
                                    - rc.sum() * _entropy(rc))
        return TreeNode(feature=int(f), threshold=float(thr), left=left, right=right)

    def _best_split(self, X, y, w, counts, feats):
        n = len(y)
        msl = self.params.min_samples_leaf
        parent_h = _entropy(counts)
        total_w = counts.sum()
        best_gain = 0.0
        best = None
        for f in feats:
            vals = X[:, f]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            # cumulative weighted class counts after each prefix
            cw = np.zeros((n + 1, self.n_classes))
            np.add.at(cw[1:], (np.arange(n), y[order]), w[order])
            cw = np.cumsum(cw, axis=0)
            # split between positions i and i+1 where the value changes
            pos = np.nonzero(sv[:-1] < sv[1:])[0]
            pos = pos[(pos + 1 >= msl) & (n - (pos + 1) >= msl)]
            if len(pos) == 0:
                continue
            lcounts = cw[pos + 1]
            rcounts = counts[None, :] - lcounts
            lw = lcounts.sum(axis=1)
            rw = rcounts.sum(axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                lp = np.where(lcounts > 0, lcounts / lw[:, None], 1.0)
                rp = np.where(rcounts > 0, rcounts / rw[:, None], 1.0)
                lh = -(np.where(lcounts > 0, lp * np.log2(lp), 0.0)).sum(axis=1)
                rh = -(np.where(rcounts > 0, rp * np.log2(rp), 0.0)).sum(axis=1)
            gain = parent_h - (lw * lh + rw * rh) / total_w
            i = int(np.argmax(gain))
            if gain[i] > best_gain + 1e-12:
                best_gain = float(gain[i])
                best = (int(f), float((sv[pos[i]] + sv[pos[i] + 1]) / 2.0))
        return best

    # -- prediction -------------------------------------------------------

    def vote_counts(self, X: np.ndarray) -> np.ndarray:
        """Per-sample per-class tree vote counts, shape (n, n_classes)."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        votes = np.zeros((len(X), self.n_classes))
        if self.degenerate_class is not None:
            votes[:, self.degenerate_class] = max(1, self.params.n_trees)
            return votes
        for tree in self.trees:
            for i, x in enumerate(X):
                node = tree
                while not node.is_leaf():
                    node = node.left if x[node.feature] < node.threshold else node.right
                votes[i, int(np.argmax(node.counts))] += 1
        return votes

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Majority vote; ties go to the smallest class index."""
        return np.argmax(self.vote_counts(X), axis=1)

    # -- introspection ----------------------------------------------------

    def importances(self) -> np.ndarray:
        """Mean impurity decrease per feature, normalized to sum 1."""
        if self.degenerate_class is not None or self._importance_raw is None:
            raise ValueError("model is untrained or degenerate")
        raw = self._importance_raw / max(1, len(self.trees))
        total = raw.sum()
        if total <= 0.0:
            return np.full(self.n_features, 1.0 / self.n_features)
        return raw / total

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "params": {
                "n_trees": self.params.n_trees,
                "max_depth": self.params.max_depth,
                "min_samples_split": self.params.min_samples_split,
                "min_samples_leaf": self.params.min_samples_leaf,
                "max_features": self.params.max_features,
            },
            "seed": self.seed,
            "n_classes": self.n_classes,
            "n_features": self.n_features,
            "degenerate_class": self.degenerate_class,
            "importance_raw": ([float(v) for v in self._importance_raw]
                               if self._importance_raw is not None else None),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WeightedForest":
        model = cls(ForestParams(**d["params"]), seed=d["seed"])
        model.n_classes = d["n_classes"]
        model.n_features = d["n_features"]
        model.degenerate_class = d["degenerate_class"]
        model._importance_raw = (np.asarray(d["importance_raw"], dtype=float)
                                 if d["importance_raw"] is not None else None)
        model.trees = [TreeNode.from_dict(t) for t in d["trees"]]
        return model
