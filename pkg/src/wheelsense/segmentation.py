"""Dual-layer sliding-window segmentation and detection-point tracking.

The outer layer cuts the signal into consecutive non-overlapping frames
(default 5 minutes).  The inner layer cuts each frame into overlapping
sub-windows (default 30 s, 50% overlap).  One valid sub-window per frame is
then chosen as the fatigue detection point: the valid index nearest (by
absolute index distance) to the previously chosen point, ties broken toward
the smaller index.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .io_config import SignalRecord

log = logging.getLogger(__name__)


class Validity(Enum):
    UNKNOWN = "Unknown"
    VALID = "Valid"
    NOISE = "Noise"


@dataclass(frozen=True)
class Frame:
    index: int
    start_time_s: float
    samples: np.ndarray
    sampling_rate_hz: float


@dataclass
class SubWindow:
    frame_index: int
    sub_index: int
    start_time_s: float
    samples: np.ndarray
    validity: Validity = Validity.UNKNOWN


@dataclass(frozen=True)
class FrameValidSet:
    """Sub-window indices of one frame judged valid, strictly increasing."""

    frame_index: int
    valid_indices: tuple

    def __post_init__(self):
        idx = self.valid_indices
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"valid_indices must be strictly increasing, got {idx}")


@dataclass(frozen=True)
class DetectionPoint:
    frame_index: int
    sub_index: int
    time_s: float


def frame_count(duration_s: float, frame_s: float) -> int:
    return int(math.floor(duration_s / frame_s + 1e-9))


def subwindow_count(frame_s: float, sub_window_s: float, overlap_fraction: float) -> int:
    step_s = sub_window_s * (1.0 - overlap_fraction)
    return int(math.floor((frame_s - sub_window_s) / step_s + 1e-9)) + 1


def segment_frames(signal: SignalRecord, frame_s: float) -> list[Frame]:
    """Cut into consecutive frames of exactly ``frame_s``; a trailing
    remainder shorter than one frame is discarded."""
    n_per_frame = int(round(frame_s * signal.sampling_rate_hz))
    n_frames = len(signal.samples) // n_per_frame
    if n_frames == 0:
        raise ValueError(
            f"signal duration {signal.duration_s:.1f} s shorter than one frame ({frame_s} s)")
    return [
        Frame(index=k,
              start_time_s=signal.start_time_s + k * frame_s,
              samples=signal.samples[k * n_per_frame:(k + 1) * n_per_frame],
              sampling_rate_hz=signal.sampling_rate_hz)
        for k in range(n_frames)
    ]


def segment_subwindows(frame: Frame, sub_window_s: float,
                       overlap_fraction: float) -> list[SubWindow]:
    """Overlapping sub-windows starting at k*step_s, each holding
    sub_window_s * fs samples."""
    fs = frame.sampling_rate_hz
    n_sub = int(round(sub_window_s * fs))
    step_s = sub_window_s * (1.0 - overlap_fraction)
    step_n = int(round(step_s * fs))
    frame_s = len(frame.samples) / fs
    count = subwindow_count(frame_s, sub_window_s, overlap_fraction)
    out = []
    for k in range(count):
        lo = k * step_n
        out.append(SubWindow(frame_index=frame.index,
                             sub_index=k,
                             start_time_s=frame.start_time_s + k * step_s,
                             samples=frame.samples[lo:lo + n_sub]))
    return out


def select_detection_points(frames: list[FrameValidSet],
                            first: DetectionPoint,
                            frame_s: float,
                            step_s: float) -> list[DetectionPoint]:
    """Chain detection points across frames by nearest valid index.

    ``first`` must address a valid index of the first entry of ``frames``.
    For every following frame the chosen index minimizes the absolute
    distance to the previously *chosen* point (not merely the previous
    frame), ties toward the smaller index.  A frame with an empty valid set
    is skipped with a warning; the next frame compares against the last
    chosen point.
    """
    if not frames:
        return []
    if first.sub_index not in frames[0].valid_indices:
        raise ValueError(
            f"first point index {first.sub_index} not in frame "
            f"{frames[0].frame_index} valid set {frames[0].valid_indices}")
    chosen = [first]
    for fv in frames[1:]:
        if not fv.valid_indices:
            log.warning("frame %d has no valid sub-windows; skipped", fv.frame_index)
            continue
        prev = chosen[-1].sub_index
        best = min(fv.valid_indices, key=lambda i: (abs(i - prev), i))
        chosen.append(DetectionPoint(
            frame_index=fv.frame_index,
            sub_index=best,
            time_s=fv.frame_index * frame_s + best * step_s))
    return chosen


def first_detection_point(frames: list[FrameValidSet],
                          frame_s: float, step_s: float) -> DetectionPoint:
    """Earliest valid index of the first frame (deterministic starting rule)."""
    if not frames or not frames[0].valid_indices:
        raise ValueError("first frame has no valid sub-windows")
    idx = frames[0].valid_indices[0]
    return DetectionPoint(frame_index=frames[0].frame_index, sub_index=idx,
                          time_s=frames[0].frame_index * frame_s + idx * step_s)


def valid_sets_from_subwindows(subwindows: list[SubWindow]) -> list[FrameValidSet]:
    """Group sub-windows by frame and keep indices flagged Valid."""
    by_frame: dict[int, list[int]] = {}
    for w in subwindows:
        by_frame.setdefault(w.frame_index, [])
        if w.validity is Validity.VALID:
            by_frame[w.frame_index].append(w.sub_index)
    return [FrameValidSet(frame_index=f, valid_indices=tuple(sorted(idx)))
            for f, idx in sorted(by_frame.items())]
