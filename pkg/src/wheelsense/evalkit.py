"""Confusion matrices, weighted-average F1, and the sub-window-size sweep.

The sweep re-runs the full pipeline per sub-window size under a fixed seed
and scores with leave-one-session-out splits, which avoids temporal leakage
across overlapping windows.
"""

from __future__ import annotations

from dataclasses import dataclass

from .io_config import FST, NFST


@dataclass(frozen=True)
class ConfusionMatrix:
    """Binary NFST/FST confusion counts.

    tn: NFST predicted NFST; fp: NFST predicted FST;
    fn: FST predicted NFST; tp: FST predicted FST.
    """

    tn: int
    fp: int
    fn: int
    tp: int

    def __post_init__(self):
        if min(self.tn, self.fp, self.fn, self.tp) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp

    @property
    def support_nfst(self) -> int:
        return self.tn + self.fp

    @property
    def support_fst(self) -> int:
        return self.fn + self.tp

    def __str__(self) -> str:
        return ("              pred NFST  pred FST\n"
                f"actual NFST   {self.tn:9d} {self.fp:9d}\n"
                f"actual FST    {self.fn:9d} {self.tp:9d}")


def confusion(y_true: list, y_pred: list) -> ConfusionMatrix:
    """Exact cell counts; order of inputs does not matter."""
    if len(y_true) != len(y_pred):
        raise ValueError(f"length mismatch: {len(y_true)} vs {len(y_pred)}")
    if not y_true:
        raise ValueError("empty label sequences")
    tn = fp = fn = tp = 0
    for t, p in zip(y_true, y_pred):
        if t == NFST:
            if p == NFST:
                tn += 1
            else:
                fp += 1
        elif t == FST:
            if p == FST:
                tp += 1
            else:
                fn += 1
        else:
            raise ValueError(f"unknown label {t!r}")
    return ConfusionMatrix(tn=tn, fp=fp, fn=fn, tp=tp)


def _f1(tp: int, fp: int, fn: int) -> float:
    # zero-denominator precision or recall gives class F1 = 0
    if tp + fp == 0 or tp + fn == 0:
        return 0.0
    prec = tp / (tp + fp)
    rec = tp / (tp + fn)
    if prec + rec == 0.0:
        return 0.0
    return 2.0 * prec * rec / (prec + rec)


def class_f1(cm: ConfusionMatrix) -> tuple[float, float]:
    """(nfst_f1, fst_f1).  NFST's F1 treats NFST as the positive class."""
    return _f1(cm.tn, cm.fn, cm.fp), _f1(cm.tp, cm.fp, cm.fn)


def weighted_f1(cm: ConfusionMatrix) -> float:
    """Per-class F1 averaged with class-support weights."""
    if cm.support_nfst == 0 or cm.support_fst == 0:
        raise ValueError("weighted F1 undefined with a zero-support class")
    nfst, fst = class_f1(cm)
    return (cm.support_nfst * nfst + cm.support_fst * fst) / cm.total


def sweep_subwindow(sessions: list, sizes: list[float], config, seed: int) -> list[dict]:
    """Re-run the pipeline per sub-window size; leave-one-session-out scores.

    ``sessions`` is a list of :class:`wheelsense.pipeline.Session`.  Returns
    one row per size: ``{"size_s", "weighted_f1", "fst_f1", "nfst_f1"}``.
    """
    from .pipeline import cross_validate_sessions  # deferred: avoids cycle

    rows = []
    for size in sizes:
        if size > config.frame_s:
            raise ValueError(f"sub-window size {size} exceeds frame length {config.frame_s}")
        cfg = config.with_overrides(sub_window_s=float(size))
        cm = cross_validate_sessions(sessions, cfg, seed)
        nfst, fst = class_f1(cm)
        rows.append({"size_s": float(size),
                     "weighted_f1": weighted_f1(cm),
                     "fst_f1": fst,
                     "nfst_f1": nfst})
    return rows
