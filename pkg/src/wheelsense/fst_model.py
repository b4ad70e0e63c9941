"""FST/NFST classification forest with importance analysis and pruning.

Two shipped presets mirror the grid the detection model was tuned on:
``pre_prune`` (entropy, depth 25, 5 trees) before feature pruning and
``post_prune`` (entropy, depth 20, 15 trees) after.  Prediction ties go to
FST: in a safety system a false alarm beats a miss.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import FST_FEATURE_NAMES
from .forest import ForestParams, WeightedForest
from .io_config import FST, NFST, FOREST_PRESETS

MODEL_FORMAT_VERSION = 1

# class encoding for the binary forest
_CLS = {NFST: 0, FST: 1}


def params_for_preset(preset: str) -> ForestParams:
    if preset not in FOREST_PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(FOREST_PRESETS)}")
    p = FOREST_PRESETS[preset]
    return ForestParams(n_trees=p["n_trees"], max_depth=p["max_depth"])


@dataclass
class ImportanceReport:
    """Normalized per-feature importances, descending, with cumulative sums."""

    feature_indices: np.ndarray   # original indices, importance-descending
    importances: np.ndarray       # aligned with feature_indices
    cumulative: np.ndarray
    feature_names: tuple

    def as_rows(self) -> list[tuple]:
        return [(int(i), self.feature_names[i], float(v), float(c))
                for i, v, c in zip(self.feature_indices, self.importances, self.cumulative)]


class FstForestModel:
    """Seeded weighted forest over second-layer feature rows."""

    def __init__(self, params: ForestParams, seed: int,
                 feature_names: tuple = FST_FEATURE_NAMES):
        self.forest = WeightedForest(params, seed)
        self.feature_names = tuple(feature_names)

    @property
    def is_degenerate(self) -> bool:
        return self.forest.degenerate_class is not None

    def fit(self, X: np.ndarray, y: list, weights: np.ndarray | None = None) -> "FstForestModel":
        codes = np.array([_CLS[label] for label in y], dtype=int)
        self.forest.fit(np.asarray(X, dtype=float), codes, weights, n_classes=2)
        return self

    def predict(self, X: np.ndarray) -> tuple[list, np.ndarray]:
        """(labels, fst_vote_fraction per row); ties predict FST."""
        votes = self.forest.vote_counts(X)
        frac = votes[:, 1] / np.maximum(1, votes.sum(axis=1))
        labels = [FST if f >= 0.5 else NFST for f in frac]
        return labels, frac

    def feature_importances(self) -> ImportanceReport:
        imp = self.forest.importances()
        order = np.argsort(-imp, kind="stable")
        ordered = imp[order]
        return ImportanceReport(feature_indices=order,
                                importances=ordered,
                                cumulative=np.cumsum(ordered),
                                feature_names=self.feature_names)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {"format_version": MODEL_FORMAT_VERSION,
                "kind": "fst_forest",
                "feature_names": list(self.feature_names),
                "forest": self.forest.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "FstForestModel":
        if d.get("kind") != "fst_forest":
            raise ValueError(f"not an fst_forest document: kind={d.get('kind')!r}")
        forest = WeightedForest.from_dict(d["forest"])
        model = cls.__new__(cls)
        model.forest = forest
        model.feature_names = tuple(d["feature_names"])
        return model

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "FstForestModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def train_forest(X: np.ndarray, y: list, weights: np.ndarray | None = None,
                 params: ForestParams | None = None, seed: int = 0) -> FstForestModel:
    """Train the FST/NFST forest on second-layer feature rows."""
    if params is None:
        params = params_for_preset("pre_prune")
    return FstForestModel(params, seed).fit(X, y, weights)


def cumulative_prune(report: ImportanceReport, threshold: float) -> list[int]:
    """Smallest importance-descending prefix whose cumulative sum reaches
    ``threshold``; returns original feature indices.

    ``threshold == 1.0`` keeps every feature with nonzero importance.
    """
    if not (0.0 < threshold <= 1.0):
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    if threshold == 1.0:
        keep = report.importances > 0.0
        return [int(i) for i in report.feature_indices[keep]]
    cut = int(np.searchsorted(report.cumulative, threshold - 1e-12)) + 1
    return [int(i) for i in report.feature_indices[:cut]]


def pearson_matrix(X: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Pairwise Pearson coefficients and the zero-variance column indices.

    Zero-variance columns yield 0 everywhere (including the diagonal) by
    convention, and are returned so callers can flag them.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or len(X) < 2:
        raise ValueError("need a 2-D matrix with at least 2 rows")
    stds = X.std(axis=0)
    flagged = [int(i) for i in np.nonzero(stds == 0.0)[0]]
    n = X.shape[1]
    out = np.zeros((n, n))
    ok = stds > 0.0
    if ok.any():
        sub = np.corrcoef(X[:, ok], rowvar=False)
        sub = np.atleast_2d(sub)
        ii = np.nonzero(ok)[0]
        out[np.ix_(ii, ii)] = sub
    return out, flagged
