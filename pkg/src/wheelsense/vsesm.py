"""Valid-sample selection machine: semi-supervised separation of valid
sEMG sub-windows from noise.

Stage one mines reliable pseudo-labels from the unlabeled pool: sub-windows
that are easy to isolate (high isolation score) become pseudo-noise, and
sub-windows that are both hard to isolate and similar to some cluster of
labeled valid samples become pseudo-valid.  Stage two trains a per-sample
weighted tree ensemble over the classes {noise, cluster_1..cluster_k};
labeled positives carry weight 1, pseudo-labels carry their mining
confidence.  At inference the cluster classes collapse to Valid.

Descriptors are the 14 base features of a sub-window, z-scored against the
labeled-positive population.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.cluster import KMeans
from sklearn.ensemble import IsolationForest
from sklearn.metrics import silhouette_score

from .features import base_features
from .forest import ForestParams, WeightedForest
from .io_config import PipelineConfig
from .segmentation import SubWindow, Validity

log = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ZScore:
    mean: np.ndarray
    std: np.ndarray  # zero stds are stored as 1 so scaling is a no-op there

    @classmethod
    def fit(cls, X: np.ndarray) -> "ZScore":
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        return cls(mean=mean, std=np.where(std > 0, std, 1.0))

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.std


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray  # (k, n_features)

    def nearest(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(cluster index, Euclidean distance to that centroid) per row."""
        d = np.linalg.norm(X[:, None, :] - self.centroids[None, :, :], axis=2)
        idx = np.argmin(d, axis=1)
        return idx, d[np.arange(len(X)), idx]


def compute_descriptors(windows: list[SubWindow], fs: float,
                        cfg: PipelineConfig) -> np.ndarray:
    """Raw (un-normalized) 14-feature descriptor per sub-window."""
    return np.array([
        base_features(w.samples, fs, cfg.sampen_m, cfg.sampen_r_factor, cfg.sampen_max_n)
        for w in windows
    ])


def cluster_positives(descriptors: np.ndarray, k_range: tuple[int, int],
                      seed: int) -> ClusterModel:
    """K-means over labeled positives; k picked by maximum mean silhouette.

    Degenerate geometry (fewer distinct points than the smallest k) falls
    back to the smallest k.
    """
    X = np.asarray(descriptors, dtype=float)
    k_lo, k_hi = k_range
    if len(X) < max(k_range):
        raise ValueError(f"need at least {max(k_range)} descriptors, got {len(X)}")
    n_distinct = len(np.unique(X, axis=0))
    best = None
    for k in range(k_lo, k_hi + 1):
        if k > n_distinct:
            break
        km = KMeans(n_clusters=k, n_init=10, random_state=seed).fit(X)
        if len(np.unique(km.labels_)) < 2:
            score = -1.0
        else:
            score = float(silhouette_score(X, km.labels_))
        if best is None or score > best[0]:
            best = (score, k, km.cluster_centers_)
    if best is None:
        # all points identical: one effective cluster at the smallest k
        centroids = np.repeat(X[:1], k_lo, axis=0)
        return ClusterModel(k=k_lo, centroids=centroids)
    return ClusterModel(k=best[1], centroids=best[2])


def fit_isolation(pooled: np.ndarray, n_trees: int, subsample: int,
                  seed: int) -> IsolationForest:
    """Isolation forest over the pooled labeled + unlabeled descriptors."""
    model = IsolationForest(n_estimators=n_trees,
                            max_samples=min(subsample, len(pooled)),
                            random_state=seed)
    return model.fit(pooled)


def isolation_scores(model: IsolationForest, descriptors: np.ndarray) -> np.ndarray:
    """Path-length anomaly score in (0, 1]; higher = more isolated."""
    return -model.score_samples(descriptors)


def similarity_scores(clusters: ClusterModel, descriptors: np.ndarray) -> np.ndarray:
    """Negated distance to the nearest centroid; 0 is the maximum."""
    _, dist = clusters.nearest(np.asarray(descriptors, dtype=float))
    return -dist


@dataclass
class PseudoLabeled:
    """Mined pseudo-labels: class 0 = noise, 1..k = valid clusters."""

    X: np.ndarray
    classes: np.ndarray
    confidence: np.ndarray

    def __len__(self) -> int:
        return len(self.classes)


def _margin_confidence(values: np.ndarray, threshold: float) -> np.ndarray:
    """Margin above threshold normalized into (0, 1]."""
    margin = values - threshold
    span = margin.max()
    if span <= 0.0:
        return np.ones(len(values))
    return np.clip(margin / span, 1e-6, 1.0)


def filter_reliable(unlabeled: np.ndarray, iso: np.ndarray, sim: np.ndarray,
                    clusters: ClusterModel, cfg: PipelineConfig) -> PseudoLabeled:
    """Keep only the confidently-noise and confidently-valid unlabeled rows.

    Thresholds are percentiles over the unlabeled batch: pseudo-noise above
    the iso_hi percentile of isolation score, pseudo-valid below the iso_lo
    percentile *and* above the sim_hi percentile of similarity.  Everything
    between is discarded.
    """
    unlabeled = np.asarray(unlabeled, dtype=float)
    if len(unlabeled) == 0:
        raise ValueError("empty unlabeled set")
    iso_hi = float(np.percentile(iso, cfg.vsesm_iso_hi_pct))
    iso_lo = float(np.percentile(iso, cfg.vsesm_iso_lo_pct))
    sim_hi = float(np.percentile(sim, cfg.vsesm_sim_hi_pct))

    noise_mask = iso >= iso_hi
    valid_mask = (iso <= iso_lo) & (sim >= sim_hi)
    valid_mask &= ~noise_mask  # disjoint even if percentiles collapse

    Xs, classes, confs = [], [], []
    if noise_mask.any():
        Xs.append(unlabeled[noise_mask])
        classes.append(np.zeros(noise_mask.sum(), dtype=int))
        confs.append(_margin_confidence(iso[noise_mask], iso_hi))
    if valid_mask.any():
        cluster_idx, _ = clusters.nearest(unlabeled[valid_mask])
        Xs.append(unlabeled[valid_mask])
        classes.append(cluster_idx + 1)
        confs.append(_margin_confidence(sim[valid_mask], sim_hi))
    if not Xs:
        return PseudoLabeled(X=np.empty((0, unlabeled.shape[1])),
                             classes=np.empty(0, dtype=int),
                             confidence=np.empty(0))
    return PseudoLabeled(X=np.concatenate(Xs),
                        classes=np.concatenate(classes),
                        confidence=np.concatenate(confs))


class VsesmModel:
    """Trained valid-sample selector (stage-2 model plus scalers)."""

    def __init__(self, zscore: ZScore, clusters: ClusterModel,
                 forest: WeightedForest | None, seed: int,
                 fallback_sim_threshold: float | None = None):
        self.zscore = zscore
        self.clusters = clusters
        self.forest = forest
        self.seed = seed
        # set when no pseudo-noise could be mined: one-class similarity rule
        self.fallback_sim_threshold = fallback_sim_threshold

    @property
    def is_fallback(self) -> bool:
        return self.forest is None

    def predict_valid(self, descriptors_raw: np.ndarray) -> np.ndarray:
        """Boolean valid/noise decision per raw descriptor row."""
        X = self.zscore.apply(descriptors_raw)
        if self.is_fallback:
            return similarity_scores(self.clusters, X) >= self.fallback_sim_threshold
        votes = self.forest.vote_counts(X)
        return votes[:, 1:].sum(axis=1) > votes[:, 0]

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "vsesm",
            "seed": self.seed,
            "zscore": {"mean": self.zscore.mean.tolist(),
                       "std": self.zscore.std.tolist()},
            "clusters": {"k": self.clusters.k,
                         "centroids": self.clusters.centroids.tolist()},
            "fallback_sim_threshold": self.fallback_sim_threshold,
            "forest": self.forest.to_dict() if self.forest is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VsesmModel":
        if d.get("kind") != "vsesm":
            raise ValueError(f"not a vsesm document: kind={d.get('kind')!r}")
        return cls(
            zscore=ZScore(mean=np.asarray(d["zscore"]["mean"]),
                          std=np.asarray(d["zscore"]["std"])),
            clusters=ClusterModel(k=d["clusters"]["k"],
                                  centroids=np.asarray(d["clusters"]["centroids"])),
            forest=(WeightedForest.from_dict(d["forest"])
                    if d["forest"] is not None else None),
            seed=d["seed"],
            fallback_sim_threshold=d["fallback_sim_threshold"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "VsesmModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def train_vsesm(labeled_z: np.ndarray, pseudo: PseudoLabeled,
                zscore: ZScore, clusters: ClusterModel,
                cfg: PipelineConfig, seed: int) -> VsesmModel:
    """Stage-2 training on labeled positives plus mined pseudo-labels.

    Labeled positives get weight 1 and their assigned cluster as class.
    Without any pseudo-noise the model degenerates to a one-class
    similarity threshold (flagged on the model).
    """
    labeled_z = np.asarray(labeled_z, dtype=float)
    if len(labeled_z) == 0:
        raise ValueError("no labeled positives")
    if len(pseudo) == 0 or not np.any(pseudo.classes == 0):
        log.warning("no pseudo-noise mined; falling back to one-class similarity rule")
        sims = similarity_scores(clusters, labeled_z)
        return VsesmModel(zscore, clusters, forest=None, seed=seed,
                          fallback_sim_threshold=float(sims.min()))

    pos_cluster, _ = clusters.nearest(labeled_z)
    X = np.concatenate([labeled_z, pseudo.X])
    y = np.concatenate([pos_cluster + 1, pseudo.classes])
    w = np.concatenate([np.ones(len(labeled_z)), pseudo.confidence])
    forest = WeightedForest(
        ForestParams(n_trees=cfg.vsesm_trees, max_depth=cfg.vsesm_max_depth),
        seed=seed,
    ).fit(X, y, w, n_classes=clusters.k + 1)
    return VsesmModel(zscore, clusters, forest=forest, seed=seed)


def build_vsesm(labeled_raw: np.ndarray, unlabeled_raw: np.ndarray,
                cfg: PipelineConfig, seed: int) -> VsesmModel:
    """Full two-stage construction from raw descriptor matrices."""
    zscore = ZScore.fit(np.asarray(labeled_raw, dtype=float))
    labeled_z = zscore.apply(labeled_raw)
    unlabeled_z = zscore.apply(unlabeled_raw)
    clusters = cluster_positives(labeled_z, (cfg.vsesm_k_min, cfg.vsesm_k_max), seed)
    iso_model = fit_isolation(np.concatenate([labeled_z, unlabeled_z]),
                              cfg.vsesm_iso_trees, cfg.vsesm_iso_subsample, seed)
    iso = isolation_scores(iso_model, unlabeled_z)
    sim = similarity_scores(clusters, unlabeled_z)
    pseudo = filter_reliable(unlabeled_z, iso, sim, clusters, cfg)
    return train_vsesm(labeled_z, pseudo, zscore, clusters, cfg, seed)


def select_valid(model: VsesmModel, windows: list[SubWindow], fs: float,
                 cfg: PipelineConfig) -> list[SubWindow]:
    """Resolve every Unknown sub-window to Valid or Noise, in place."""
    unknown = [w for w in windows if w.validity is Validity.UNKNOWN]
    if not unknown:
        return windows
    desc = compute_descriptors(unknown, fs, cfg)
    is_valid = model.predict_valid(desc)
    for w, ok in zip(unknown, is_valid):
        w.validity = Validity.VALID if ok else Validity.NOISE
    return windows
