"""Two-layer feature generation.

Layer one: 14 features per sub-window, in this fixed order::

    mean, std, median, max, min, max_min, sma, skewness, kurtosis,
    time_over_zero, mean_frequency, median_frequency, sample_entropy,
    lz_complexity

Layer two: for each base feature over consecutive detection points, the
slope (value_{n+1} - value_n) / (time_{n+1} - time_n) and the absolute
distance |value_{n+1} - value_n|, giving 28 numbers attached to the later
point of each pair.

Conventions pinned here to avoid silent ambiguity:

- std is the sample (n-1) estimate; kurtosis is excess (normal -> 0);
  skewness/kurtosis of a constant window are 0 so flat signal-loss windows
  still produce finite descriptors.
- time_over_zero counts strict sign changes.
- sample entropy uses Chebyshev template matching with self-matches
  excluded; the Lempel-Ziv complexity is the LZ76 exhaustive-history phrase
  count of the median-binarized window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps
from scipy import stats
from scipy.spatial.distance import cdist

BASE_FEATURE_NAMES = (
    "mean", "std", "median", "max", "min", "max_min", "sma",
    "skewness", "kurtosis", "time_over_zero",
    "mean_frequency", "median_frequency",
    "sample_entropy", "lz_complexity",
)

FST_FEATURE_NAMES = tuple(
    f"{name}_{kind}" for name in BASE_FEATURE_NAMES for kind in ("slope", "absdist")
)


def sample_entropy(x: np.ndarray, m: int, r: float) -> float:
    """SampEn(m, r) = -ln(A / B) with Chebyshev matching, no self-matches.

    A counts template pairs of length m+1 within tolerance r, B of length m.
    If no length-(m+1) pair matches (A = 0), returns the finite cap
    ln(B) + ln(len(x)).  r must be positive; callers that derive r from a
    zero std should short-circuit to 0 (a constant series has entropy 0).
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n <= m + 1:
        raise ValueError(f"series of length {n} too short for m={m}")
    if r <= 0:
        raise ValueError(f"tolerance r must be > 0, got {r}")
    b = _template_match_count(x, m, r)
    a = _template_match_count(x, m + 1, r)
    if b == 0:
        # No matches at all; the series is maximally irregular at this r.
        return math.log(n)
    if a == 0:
        return math.log(b) + math.log(n)
    return -math.log(a / b)


def _template_match_count(x: np.ndarray, m: int, r: float) -> int:
    """Ordered pairs (i != j) of length-m templates within Chebyshev r."""
    n = len(x) - m + 1
    emb = np.lib.stride_tricks.sliding_window_view(x, m)
    count = 0
    # Chunk rows to bound the pairwise-distance workspace.
    chunk = max(1, int(4e6 // max(n, 1)))
    for lo in range(0, n, chunk):
        block = emb[lo:lo + chunk]  # (c, m)
        d = cdist(block, emb, "chebyshev")  # (c, n)
        within = d <= r
        count += int(within.sum()) - len(block)  # drop self-matches
    return count


def lz_complexity(x: np.ndarray) -> int:
    """LZ76 exhaustive-history phrase count of the median-binarized series.

    Samples >= median map to 1.  Empty input -> 0, single sample -> 1.
    """
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return 0
    bits = (x >= np.median(x)).astype(np.uint8)
    return lz76_phrase_count(bits.tobytes())


def lz76_phrase_count(s: bytes) -> int:
    """Phrase count of the LZ76 exhaustive parse of a symbol string.

    A phrase starting at p is extended while it can be reproduced from the
    history s[:p + L - 1] (self-overlap allowed); the first non-reproducible
    extension closes the phrase.  The trailing phrase counts even if still
    reproducible when the input ends.
    """
    n = len(s)
    if n == 0:
        return 0
    c = 0
    p = 0
    while p < n:
        length = 1
        while p + length <= n and s.find(s[p:p + length], 0, p + length - 1) != -1:
            length += 1
        c += 1
        p += length
    return c


def spectral_frequencies(x: np.ndarray, fs: float) -> tuple[float, float]:
    """(mean_frequency, median_frequency) of the Hann-windowed averaged
    periodogram (segment 1024, 50% overlap; shorter inputs use one segment).

    MNF is the power-weighted frequency centroid; MDF the smallest
    frequency where cumulative power reaches half the total.
    """
    x = np.asarray(x, dtype=float)
    if len(x) < 64:
        raise ValueError(f"series of length {len(x)} too short for spectral features")
    nperseg = min(1024, len(x))
    f, p = sps.welch(x, fs=fs, window="hann", nperseg=nperseg, noverlap=nperseg // 2)
    total = float(p.sum())
    if total <= 0.0:
        return 0.0, 0.0
    mnf = float((f * p).sum() / total)
    cum = np.cumsum(p)
    mdf = float(f[int(np.searchsorted(cum, total / 2.0))])
    return mnf, mdf


def zero_crossings(x: np.ndarray) -> int:
    """Strict sign changes between consecutive samples."""
    s = np.sign(x)
    return int(np.sum(s[:-1] * s[1:] < 0))


def base_features(samples: np.ndarray, fs: float,
                  sampen_m: int = 2, sampen_r_factor: float = 0.2,
                  sampen_max_n: int = 1500) -> np.ndarray:
    """The 14-entry base feature vector of one sub-window.

    Sample entropy and the Lempel-Ziv count see a stride-decimated copy when
    the window exceeds ``sampen_max_n`` points (their cost grows much faster
    than linearly); every other feature uses the full window.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("empty sub-window")
    mean = float(x.mean())
    xmax = float(x.max())
    xmin = float(x.min())
    std = 0.0 if len(x) < 2 else float(x.std(ddof=1))
    # filtered signal-loss spans hold denormal residue whose variance
    # underflows to zero; treat those like an exactly constant window
    constant = xmax == xmin or std == 0.0
    if constant:
        skew = 0.0
        kurt = 0.0
    else:
        skew = float(stats.skew(x))
        kurt = float(stats.kurtosis(x))  # excess
    mnf, mdf = spectral_frequencies(x, fs)

    xs = x
    if len(xs) > sampen_max_n:
        stride = int(math.ceil(len(xs) / sampen_max_n))
        xs = xs[::stride]
    r = sampen_r_factor * (float(xs.std(ddof=1)) if len(xs) > 1 else 0.0)
    sampen = sample_entropy(xs, sampen_m, r) if not constant and r > 0.0 else 0.0

    return np.array([
        mean, std, float(np.median(x)), xmax, xmin, xmax - xmin,
        float(np.mean(np.abs(x))), skew, kurt, float(zero_crossings(x)),
        mnf, mdf, sampen, float(lz_complexity(xs)),
    ])


@dataclass(frozen=True)
class FeatureSeries:
    """Base feature values at successive detection points.

    ``times_s``: strictly increasing detection-point times, shape (n,).
    ``values``: shape (n, 14), rows aligned with times.
    """

    times_s: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.times_s) != len(self.values):
            raise ValueError("times and values length mismatch")
        if np.any(np.diff(self.times_s) <= 0):
            raise ValueError("detection-point times must be strictly increasing")


def fst_features(series: FeatureSeries) -> np.ndarray:
    """Second-layer features per consecutive detection-point pair.

    Returns shape (n_points - 1, 28): for each base feature, slope then
    absolute distance, in base-feature order.  Row k describes the pair
    (k, k+1) and is attached to the later point.
    """
    t = np.asarray(series.times_s, dtype=float)
    v = np.asarray(series.values, dtype=float)
    if len(t) < 2:
        raise ValueError("need at least 2 detection points")
    dt = np.diff(t)[:, None]
    dv = np.diff(v, axis=0)
    out = np.empty((len(t) - 1, 2 * v.shape[1]))
    out[:, 0::2] = dv / dt
    out[:, 1::2] = np.abs(dv)
    return out
