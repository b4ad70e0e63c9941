"""End-to-end stage glue: sessions in, predictions out.

A session is one continuous recording with its SOFI self-reports and
(for synthetic data) ground truth.  The pipeline per session is:

    filter -> frames -> sub-windows -> descriptors -> validity (VsESM)
    -> detection points -> feature series -> pair features -> FST forest

Sub-window descriptors double as the base feature vectors at detection
points, so they are computed once per session and reused everywhere.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import dsp, evalkit, fst_model, segmentation, vsesm
from .features import FeatureSeries, fst_features
from .io_config import (DataError, FrameLabels, PipelineConfig, SignalRecord,
                        SofiTimeline, derive_fst_labels)
from .segmentation import (DetectionPoint, SubWindow, Validity,
                           first_detection_point, select_detection_points,
                           valid_sets_from_subwindows)
from .synth import GroundTruth

log = logging.getLogger(__name__)


@dataclass
class Session:
    session_id: str
    record: SignalRecord
    sofi: SofiTimeline | None = None
    truth: GroundTruth | None = None


@dataclass
class PreparedSession:
    """Filtered, segmented, descriptor-extracted session."""

    session: Session
    windows: list[SubWindow]
    descriptors: np.ndarray  # (n_windows, 14), raw feature units

    @property
    def fs(self) -> float:
        return self.session.record.sampling_rate_hz

    def window_row(self, frame_index: int, sub_index: int) -> int:
        return self._index[(frame_index, sub_index)]

    def __post_init__(self):
        self._index = {(w.frame_index, w.sub_index): i
                       for i, w in enumerate(self.windows)}


def filter_record(record: SignalRecord, cfg: PipelineConfig) -> SignalRecord:
    spec = dsp.FilterSpec(order=cfg.filter_order,
                          low_cut_hz=cfg.filter_low_hz,
                          high_cut_hz=cfg.filter_high_hz,
                          sampling_rate_hz=record.sampling_rate_hz)
    filtered = dsp.apply_filter(dsp.design_bandpass(spec), record.samples)
    return SignalRecord(session_id=record.session_id,
                        sampling_rate_hz=record.sampling_rate_hz,
                        samples=filtered,
                        start_time_s=record.start_time_s)


def segment_record(record: SignalRecord, cfg: PipelineConfig) -> list[SubWindow]:
    frames = segmentation.segment_frames(record, cfg.frame_s)
    windows: list[SubWindow] = []
    for frame in frames:
        windows.extend(segmentation.segment_subwindows(
            frame, cfg.sub_window_s, cfg.overlap_fraction))
    if cfg.drop_transient and windows:
        fs = int(record.sampling_rate_hz)
        windows[0].samples = windows[0].samples[fs:]
    return windows


def prepare_session(session: Session, cfg: PipelineConfig) -> PreparedSession:
    filtered = filter_record(session.record, cfg)
    windows = segment_record(filtered, cfg)
    desc = vsesm.compute_descriptors(windows, filtered.sampling_rate_hz, cfg)
    return PreparedSession(session=session, windows=windows, descriptors=desc)


@dataclass
class DetectionResult:
    windows: list[SubWindow]
    detection_points: list[DetectionPoint]
    series: FeatureSeries | None
    pair_features: np.ndarray | None   # (n_pairs, 28)
    pair_frames: list[int]             # frame index of the later point per row


def detect_session(prep: PreparedSession, model: vsesm.VsesmModel,
                   cfg: PipelineConfig) -> DetectionResult:
    """Validity, detection points and second-layer features for one session."""
    is_valid = model.predict_valid(prep.descriptors)
    for w, ok in zip(prep.windows, is_valid):
        if w.validity is Validity.UNKNOWN:
            w.validity = Validity.VALID if ok else Validity.NOISE
    valid_sets = valid_sets_from_subwindows(prep.windows)
    nonempty = [fv for fv in valid_sets if fv.valid_indices]
    if not nonempty:
        raise DataError(f"session {prep.session.session_id}: no valid sub-windows at all")
    skipped = len(valid_sets) - len(nonempty)
    if skipped:
        log.warning("session %s: %d frame(s) with no valid sub-windows skipped",
                    prep.session.session_id, skipped)
    first = first_detection_point(nonempty, cfg.frame_s, cfg.step_s)
    dps = select_detection_points(nonempty, first, cfg.frame_s, cfg.step_s)
    series = None
    pair_X = None
    pair_frames: list[int] = []
    if len(dps) >= 2:
        rows = np.array([prep.descriptors[prep.window_row(dp.frame_index, dp.sub_index)]
                         for dp in dps])
        series = FeatureSeries(times_s=np.array([dp.time_s for dp in dps]),
                               values=rows)
        pair_X = fst_features(series)
        pair_frames = [dp.frame_index for dp in dps[1:]]
    return DetectionResult(windows=prep.windows, detection_points=dps,
                           series=series, pair_features=pair_X,
                           pair_frames=pair_frames)


def session_labels(session: Session, cfg: PipelineConfig) -> FrameLabels:
    if session.sofi is not None:
        return derive_fst_labels(session.sofi, cfg.min_delta)
    if session.truth is not None:
        return derive_fst_labels(session.truth.sofi_timeline(), cfg.min_delta)
    raise DataError(f"session {session.session_id} has no labels")


def labeled_pairs(det: DetectionResult, labels: FrameLabels) -> tuple[np.ndarray, list]:
    """(X, y) for the pair rows whose later frame carries a label."""
    if det.pair_features is None:
        return np.empty((0, 28)), []
    keep, y = [], []
    for i, frame in enumerate(det.pair_frames):
        if 1 <= frame <= len(labels.labels):
            keep.append(i)
            y.append(labels.labels[frame - 1])
    return det.pair_features[keep], y


def labeled_positive_descriptors(preps: list[PreparedSession],
                                 cfg: PipelineConfig) -> np.ndarray:
    """Calibration positives: truth-valid windows of the first session that
    carries ground truth (the stand-in for a controlled collection run)."""
    for prep in preps:
        truth = prep.session.truth
        if truth is None:
            continue
        noise = truth.subwindow_noise_truth(cfg.sub_window_s, cfg.overlap_fraction)
        rows = [i for i, w in enumerate(prep.windows)
                if not noise[w.frame_index, w.sub_index]]
        if rows:
            return prep.descriptors[rows]
    raise DataError("no training session carries valid-sample ground truth; "
                    "a calibration session with *_truth_valid.csv is required")


def fit_sessions(train_preps: list[PreparedSession], cfg: PipelineConfig,
                 seed: int) -> tuple[vsesm.VsesmModel, fst_model.FstForestModel]:
    """Train the valid-sample selector and the FST forest on whole sessions."""
    labeled = labeled_positive_descriptors(train_preps, cfg)
    unlabeled = np.concatenate([p.descriptors for p in train_preps])
    selector = vsesm.build_vsesm(labeled, unlabeled, cfg, seed)

    Xs, ys = [], []
    for prep in train_preps:
        det = detect_session(prep, selector, cfg)
        X, y = labeled_pairs(det, session_labels(prep.session, cfg))
        if len(y):
            Xs.append(X)
            ys.extend(y)
    if not ys:
        raise DataError("no labeled detection-point pairs in the training sessions")
    X = np.concatenate(Xs)
    params = fst_model.params_for_preset(cfg.forest_preset)
    classifier = fst_model.train_forest(X, ys, params=params, seed=seed + 1)
    return selector, classifier


def predict_sessions(test_preps: list[PreparedSession],
                     selector: vsesm.VsesmModel,
                     classifier: fst_model.FstForestModel,
                     cfg: PipelineConfig) -> list[dict]:
    """Per labeled pair row: session, frame, truth label, prediction, vote."""
    rows = []
    for prep in test_preps:
        det = detect_session(prep, selector, cfg)
        labels = session_labels(prep.session, cfg)
        X, y = labeled_pairs(det, labels)
        if not len(y):
            continue
        pred, frac = classifier.predict(X)
        kept = [f for f in det.pair_frames if 1 <= f <= len(labels.labels)]
        for frame, t, p, v in zip(kept, y, pred, frac):
            rows.append({"session_id": prep.session.session_id,
                         "frame_index": frame,
                         "label_true": t,
                         "label_pred": p,
                         "fst_vote_fraction": float(v)})
    return rows


def confusion_from_rows(rows: list[dict]) -> evalkit.ConfusionMatrix:
    return evalkit.confusion([r["label_true"] for r in rows],
                             [r["label_pred"] for r in rows])


def train_test_run(sessions: list[Session], test_ids: list[str],
                   cfg: PipelineConfig, seed: int) -> tuple[evalkit.ConfusionMatrix, list[dict]]:
    """Train on every session not in ``test_ids``, predict the rest."""
    preps = [prepare_session(s, cfg) for s in sessions]
    train = [p for p in preps if p.session.session_id not in test_ids]
    test = [p for p in preps if p.session.session_id in test_ids]
    if not train or not test:
        raise DataError(f"bad split: {len(train)} train / {len(test)} test sessions")
    selector, classifier = fit_sessions(train, cfg, seed)
    rows = predict_sessions(test, selector, classifier, cfg)
    return confusion_from_rows(rows), rows


def cross_validate_sessions(sessions: list[Session], cfg: PipelineConfig,
                            seed: int) -> evalkit.ConfusionMatrix:
    """Leave-one-session-out; confusion counts pooled over folds."""
    preps = [prepare_session(s, cfg) for s in sessions]
    all_rows: list[dict] = []
    for i in range(len(preps)):
        train = preps[:i] + preps[i + 1:]
        for p in train + [preps[i]]:
            for w in p.windows:
                w.validity = Validity.UNKNOWN  # reset between folds
        selector, classifier = fit_sessions(train, cfg, seed)
        all_rows.extend(predict_sessions([preps[i]], selector, classifier, cfg))
    return confusion_from_rows(all_rows)
