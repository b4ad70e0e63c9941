"""Signal/label file I/O, pipeline configuration, and FST label derivation.

File schemas (column order is the contract):

- signal CSV: header ``time_s,emg_uv``; strictly increasing, uniformly
  spaced times.  Sampling rate is inferred, not declared, so corrupt files
  are caught at load time.
- label CSV:  header ``time_s,sofi_score``; one aggregate SOFI score per
  frame boundary.
- config:     flat YAML key/value file; every key has a documented default
  (see :class:`PipelineConfig`).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

NFST = "NFST"
FST = "FST"


class DataError(Exception):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class SignalRecord:
    """One channel of sampled sEMG voltage."""

    session_id: str
    sampling_rate_hz: float
    samples: np.ndarray  # microvolts
    start_time_s: float = 0.0

    def __post_init__(self):
        if len(self.samples) == 0:
            raise DataError("no samples")
        if self.sampling_rate_hz <= 0:
            raise DataError(f"sampling_rate_hz must be > 0, got {self.sampling_rate_hz}")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sampling_rate_hz


@dataclass(frozen=True)
class SofiTimeline:
    """Per-frame aggregate SOFI fatigue self-reports.

    ``entries`` is a sequence of ``(time_s, score)`` with strictly
    increasing times and scores in [0, 10].
    """

    entries: tuple

    def __post_init__(self):
        times = [t for t, _ in self.entries]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DataError("SOFI times must be strictly increasing")
        for t, s in self.entries:
            if not (0.0 <= s <= 10.0):
                raise DataError(f"SOFI score {s} at t={t} outside [0, 10]")

    @property
    def scores(self) -> np.ndarray:
        return np.array([s for _, s in self.entries], dtype=float)


@dataclass(frozen=True)
class FrameLabels:
    """NFST/FST labels aligned to frames 1..N-1 (first frame has no label)."""

    labels: tuple  # of NFST / FST strings

    def __post_init__(self):
        bad = set(self.labels) - {NFST, FST}
        if bad:
            raise DataError(f"unknown labels: {sorted(bad)}")


# Forest hyperparameter presets: a small deep ensemble for runs that prune
# features afterwards, and a larger capped one for pre-pruned inputs.
FOREST_PRESETS = {
    "pre_prune": {"n_trees": 5, "max_depth": 25},
    "post_prune": {"n_trees": 15, "max_depth": 20},
}


@dataclass
class PipelineConfig:
    """All pipeline knobs with their defaults.

    Windowing
        frame_s: outer frame length in seconds.
        sub_window_s: inner sub-window length in seconds.
        overlap_fraction: sub-window overlap in [0, 1).
    Filtering
        filter_order: overall band-pass order (even).
        filter_low_hz / filter_high_hz: band edges.
        drop_transient: exclude the first second of filtered output from the
            first sub-window (settling transient).
    Features
        sampen_m / sampen_r_factor: sample-entropy template length and
            tolerance as a fraction of the window std.
        sampen_max_n: windows longer than this are stride-decimated before
            the sample-entropy computation (cost control; other features
            always see the full window).
    Valid-sample selection
        vsesm_k_min / vsesm_k_max: cluster-count search range.
        vsesm_iso_trees / vsesm_iso_subsample: isolation forest size.
        vsesm_iso_hi_pct / vsesm_iso_lo_pct / vsesm_sim_hi_pct: percentile
            thresholds for reliable-sample mining.
        vsesm_trees / vsesm_max_depth: size of the weighted tree ensemble.
    Classifier
        forest_preset: one of ``pre_prune`` (5 trees, depth 25) or
            ``post_prune`` (15 trees, depth 20).
        prune_threshold: cumulative-importance cutoff for feature pruning.
    Labels
        min_delta: minimum SOFI score increase that counts as an FST.
    """

    frame_s: float = 300.0
    sub_window_s: float = 30.0
    overlap_fraction: float = 0.5
    filter_order: int = 4
    filter_low_hz: float = 10.0
    filter_high_hz: float = 300.0
    drop_transient: bool = False
    sampen_m: int = 2
    sampen_r_factor: float = 0.2
    sampen_max_n: int = 1500
    vsesm_k_min: int = 2
    vsesm_k_max: int = 8
    vsesm_iso_trees: int = 100
    vsesm_iso_subsample: int = 256
    vsesm_iso_hi_pct: float = 90.0
    vsesm_iso_lo_pct: float = 50.0
    vsesm_sim_hi_pct: float = 75.0
    vsesm_trees: int = 50
    vsesm_max_depth: int = 12
    forest_preset: str = "pre_prune"
    prune_threshold: float = 0.9
    min_delta: float = 1.0
    rng_seed: int = 0
    test_sessions: list = field(default_factory=list)

    def __post_init__(self):
        if not (0.0 <= self.overlap_fraction < 1.0):
            raise DataError(f"overlap_fraction must be in [0,1), got {self.overlap_fraction}")
        if self.sub_window_s > self.frame_s:
            raise DataError("sub_window_s must not exceed frame_s")
        if self.forest_preset not in FOREST_PRESETS:
            raise DataError(f"unknown forest_preset {self.forest_preset!r}")

    @property
    def step_s(self) -> float:
        return self.sub_window_s * (1.0 - self.overlap_fraction)

    def with_overrides(self, **kwargs) -> "PipelineConfig":
        return replace(self, **kwargs)


def load_config(path: str | Path) -> PipelineConfig:
    """Load a YAML config file; unknown keys are an error."""
    raw = yaml.safe_load(Path(path).read_text())
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise DataError(f"config {path}: expected a key/value mapping")
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(raw) - known
    if unknown:
        raise DataError(f"config {path}: unknown keys {sorted(unknown)}")
    return PipelineConfig(**raw)


def dump_config(cfg: PipelineConfig) -> str:
    """Resolved config as YAML text (stable key order)."""
    d = {f.name: getattr(cfg, f.name) for f in fields(PipelineConfig)}
    return yaml.safe_dump(d, sort_keys=True)


def load_signal_csv(path: str | Path, session_id: str | None = None,
                    jitter_tol: float = 0.01) -> SignalRecord:
    """Load a ``time_s,emg_uv`` CSV and infer its sampling rate.

    The rate is 1/median(dt) rounded to the nearest integer Hz.  Spacing
    deviating from the median by more than ``jitter_tol`` (relative) is
    rejected.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"signal file not found: {path}")
    times = []
    values = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["time_s", "emg_uv"]:
            raise DataError(f"{path}: expected header 'time_s,emg_uv', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                t, v = float(row[0]), float(row[1])
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}:{lineno}: malformed row {row!r}") from exc
            times.append(t)
            values.append(v)
    if not values:
        raise DataError(f"{path}: no samples")
    times = np.asarray(times)
    if len(times) < 2:
        raise DataError(f"{path}: need at least 2 samples to infer sampling rate")
    dt = np.diff(times)
    if np.any(dt <= 0):
        bad = int(np.argmax(dt <= 0)) + 3  # +2 header/offset, +1 second row of the pair
        raise DataError(f"{path}:{bad}: times not strictly increasing")
    med = float(np.median(dt))
    if np.any(np.abs(dt - med) > jitter_tol * med):
        bad = int(np.argmax(np.abs(dt - med) > jitter_tol * med)) + 3
        raise DataError(f"{path}:{bad}: non-uniform sample spacing (beyond {jitter_tol:.0%} jitter)")
    fs = round(1.0 / med)
    return SignalRecord(session_id=session_id or path.stem,
                        sampling_rate_hz=float(fs),
                        samples=np.asarray(values, dtype=float),
                        start_time_s=float(times[0]))


def save_signal_csv(path: str | Path, record: SignalRecord) -> None:
    """Write a SignalRecord in the signal CSV schema."""
    dt = 1.0 / record.sampling_rate_hz
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "emg_uv"])
        for i, v in enumerate(record.samples):
            w.writerow([repr(record.start_time_s + i * dt), repr(float(v))])


def load_sofi_csv(path: str | Path) -> SofiTimeline:
    """Load a ``time_s,sofi_score`` CSV."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"label file not found: {path}")
    entries = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["time_s", "sofi_score"]:
            raise DataError(f"{path}: expected header 'time_s,sofi_score', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                entries.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}:{lineno}: malformed row {row!r}") from exc
    return SofiTimeline(entries=tuple(entries))


def derive_fst_labels(timeline: SofiTimeline, min_delta: float = 1.0) -> FrameLabels:
    """Label frame n (n >= 1) FST iff score(n) - score(n-1) >= min_delta.

    The first frame has no predecessor and is dropped, so the output length
    is one less than the number of entries.  Invariant under adding a
    constant to all scores.
    """
    if len(timeline.entries) < 2:
        raise DataError("need at least 2 SOFI entries to derive labels")
    s = timeline.scores
    return FrameLabels(labels=tuple(
        FST if s[n] - s[n - 1] >= min_delta else NFST for n in range(1, len(s))
    ))
