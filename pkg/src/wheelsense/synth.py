"""Seeded synthetic sEMG session generator with ground truth.

The signal model is deliberately simple: a band-limited noise carrier whose
amplitude and band toggle between a "relaxed" and a "tense" grip state at
each fatigue transition frame, plus injected noise events (flat signal
loss, low-frequency motion-artifact bursts, finger-rub spikes).  Acceptance
rests on pipeline properties, not physiological realism.

Ground truth is derived from event coverage: a sub-window is Noise truth
iff at least a configurable fraction (default 25%) of it overlaps a noise
event, and frame n is FST truth iff n is a transition frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .io_config import DataError, SignalRecord, SofiTimeline
from .segmentation import subwindow_count


@dataclass(frozen=True)
class NoiseEvent:
    """kind: 'flat' (signal loss), 'artifact' (motion burst) or 'spike'."""

    kind: str
    start_s: float
    duration_s: float
    amplitude: float = 3.0  # std multiplier for artifact/spike content

    def __post_init__(self):
        if self.kind not in ("flat", "artifact", "spike"):
            raise DataError(f"unknown noise event kind {self.kind!r}")
        if self.duration_s <= 0:
            raise DataError("event duration must be positive")

    @property
    def end_s(self) -> float:
        return self.start_s + self.duration_s


@dataclass(frozen=True)
class SynthConfig:
    session_id: str = "synth"
    duration_s: float = 3000.0
    fs: float = 1000.0
    frame_s: float = 300.0
    carrier_low_hz: float = 20.0
    carrier_high_hz: float = 150.0
    carrier_amp_uv: float = 50.0
    tense_amp_scale: float = 1.8
    tense_low_hz: float = 20.0
    tense_high_hz: float = 80.0
    fst_frames: tuple = ()          # frame indices >= 1 where a transition occurs
    noise_events: tuple = ()        # NoiseEvent instances
    noise_truth_overlap: float = 0.25
    seed: int = 0

    def __post_init__(self):
        n_frames = int(self.duration_s // self.frame_s)
        for f in self.fst_frames:
            if not (1 <= f < n_frames):
                raise DataError(f"FST frame {f} outside 1..{n_frames - 1}")
        if any(b <= a for a, b in zip(self.fst_frames, self.fst_frames[1:])):
            raise DataError("fst_frames must be strictly increasing")
        events = sorted(self.noise_events, key=lambda e: e.start_s)
        for e in events:
            if e.end_s > self.duration_s or e.start_s < 0:
                raise DataError(f"noise event [{e.start_s}, {e.end_s}) outside session")
        for a, b in zip(events, events[1:]):
            if a.kind == b.kind and b.start_s < a.end_s:
                raise DataError(f"overlapping {a.kind} events at {b.start_s}")

    @property
    def n_frames(self) -> int:
        return int(self.duration_s // self.frame_s)


@dataclass(frozen=True)
class GroundTruth:
    """Event-derived truth; windowing-dependent tables are computed on demand
    so the sweep harness can re-derive them per sub-window size."""

    fst_frames: tuple
    noise_events: tuple
    frame_s: float
    n_frames: int
    noise_truth_overlap: float

    def frame_fst_truth(self) -> tuple:
        """Per frame n in 1..n_frames-1: True iff n is a transition frame."""
        return tuple(n in self.fst_frames for n in range(1, self.n_frames))

    def subwindow_noise_truth(self, sub_window_s: float,
                              overlap_fraction: float) -> np.ndarray:
        """Boolean (n_frames, n_sub) table; True = Noise truth."""
        step_s = sub_window_s * (1.0 - overlap_fraction)
        n_sub = subwindow_count(self.frame_s, sub_window_s, overlap_fraction)
        out = np.zeros((self.n_frames, n_sub), dtype=bool)
        for fi in range(self.n_frames):
            for si in range(n_sub):
                lo = fi * self.frame_s + si * step_s
                hi = lo + sub_window_s
                covered = sum(max(0.0, min(hi, e.end_s) - max(lo, e.start_s))
                              for e in self.noise_events)
                out[fi, si] = covered >= self.noise_truth_overlap * sub_window_s
        return out

    def sofi_timeline(self, base_score: float = 2.0, step: float = 2.0) -> SofiTimeline:
        """One entry per frame; the score steps up at every transition frame."""
        entries = []
        for n in range(self.n_frames):
            score = base_score + step * sum(1 for f in self.fst_frames if f <= n)
            entries.append((n * self.frame_s, min(10.0, score)))
        return SofiTimeline(entries=tuple(entries))


def _band_noise(rng: np.random.Generator, n: int, fs: float,
                low_hz: float, high_hz: float) -> np.ndarray:
    """Unit-std band-limited Gaussian noise."""
    sos = sps.butter(2, [low_hz, high_hz], btype="bandpass", output="sos", fs=fs)
    x = sps.sosfilt(sos, rng.standard_normal(n))
    return x / x.std()


def inject_noise(samples: np.ndarray, events: list[NoiseEvent],
                 fs: float) -> np.ndarray:
    """Apply noise events to a copy of the signal.

    flat: overwrite with a constant 0 (sensor reads a flat line).
    artifact: add a large sub-20 Hz oscillation scaled by the event
    amplitude times the clean signal std.
    spike: add a short decaying high-amplitude transient.
    """
    out = np.asarray(samples, dtype=float).copy()
    n = len(out)
    sigma = float(out.std())
    for e in events:
        lo = int(round(e.start_s * fs))
        hi = int(round(e.end_s * fs))
        if lo < 0 or hi > n:
            raise DataError(f"event [{e.start_s}, {e.end_s}) s outside signal")
        t = np.arange(hi - lo) / fs
        if e.kind == "flat":
            out[lo:hi] = 0.0
        elif e.kind == "artifact":
            # phase tied to event start so the overwrite is deterministic
            out[lo:hi] += e.amplitude * sigma * np.sin(
                2.0 * np.pi * 5.0 * (t + e.start_s))
        else:  # spike
            out[lo:hi] += e.amplitude * sigma * np.exp(-t / max(1e-3, e.duration_s / 5.0)) \
                * np.sign(np.sin(2.0 * np.pi * 40.0 * t) + 1e-12)
    return out


def generate_session(cfg: SynthConfig) -> tuple[SignalRecord, GroundTruth]:
    """Deterministic synthetic session for the given config and seed."""
    rng = np.random.default_rng(cfg.seed)
    n = int(round(cfg.duration_s * cfg.fs))
    relaxed = _band_noise(rng, n, cfg.fs, cfg.carrier_low_hz, cfg.carrier_high_hz)
    tense = _band_noise(rng, n, cfg.fs, cfg.tense_low_hz, cfg.tense_high_hz)

    # grip state toggles at each transition frame
    n_per_frame = int(round(cfg.frame_s * cfg.fs))
    state = np.zeros(n, dtype=bool)
    current = False
    for frame in range(cfg.n_frames):
        if frame in cfg.fst_frames:
            current = not current
        state[frame * n_per_frame:(frame + 1) * n_per_frame] = current
    samples = cfg.carrier_amp_uv * np.where(
        state, cfg.tense_amp_scale * tense, relaxed)

    samples = inject_noise(samples, list(cfg.noise_events), cfg.fs)
    record = SignalRecord(session_id=cfg.session_id,
                          sampling_rate_hz=cfg.fs,
                          samples=samples)
    truth = GroundTruth(fst_frames=tuple(cfg.fst_frames),
                        noise_events=tuple(cfg.noise_events),
                        frame_s=cfg.frame_s,
                        n_frames=cfg.n_frames,
                        noise_truth_overlap=cfg.noise_truth_overlap)
    return record, truth


def random_session_config(session_id: str, seed: int,
                          duration_s: float = 3000.0,
                          frame_s: float = 300.0,
                          n_fst: int = 2,
                          n_flat: int = 2,
                          n_artifact: int = 2,
                          n_spike: int = 0,
                          event_duration_s: float = 45.0,
                          grid_s: float = 15.0) -> SynthConfig:
    """Randomized event placement for the test harness.

    Noise events land in distinct frames, snapped to a ``grid_s`` grid
    (the default matches a 30 s / 50% sub-window step, so overlapping
    sub-windows overlap by at least half a step and the 25% noise-truth
    rule never produces borderline windows).  Transition frames are spaced
    at least two frames apart.
    """
    rng = np.random.default_rng(seed)
    n_frames = int(duration_s // frame_s)
    candidates = list(range(1, n_frames))
    rng.shuffle(candidates)
    fst = []
    for f in candidates:
        if all(abs(f - g) >= 2 for g in fst):
            fst.append(f)
        if len(fst) == n_fst:
            break
    events = []
    frames_for_noise = rng.permutation(n_frames)
    kinds = ["flat"] * n_flat + ["artifact"] * n_artifact + ["spike"] * n_spike
    for kind, frame in zip(kinds, frames_for_noise):
        dur = event_duration_s if kind != "spike" else 2.0
        max_slot = int((frame_s - dur) // grid_s)
        offset = float(rng.integers(0, max(1, max_slot))) * grid_s
        events.append(NoiseEvent(kind=kind, start_s=frame * frame_s + offset,
                                 duration_s=dur,
                                 amplitude=float(rng.uniform(3.0, 6.0))))
    return SynthConfig(session_id=session_id, duration_s=duration_s,
                       frame_s=frame_s, fst_frames=tuple(sorted(fst)),
                       noise_events=tuple(sorted(events, key=lambda e: e.start_s)),
                       seed=seed)
