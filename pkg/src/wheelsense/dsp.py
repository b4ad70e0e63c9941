"""Band-pass de-noising filter.

The sEMG band is 10-300 Hz, removed outside with a 4th-order Butterworth
band-pass ("order 4" meaning a 4th-order, two-pole-pair band-pass overall).
The design goes through the analog prototype + bilinear transform with
frequency pre-warping and is realized as cascaded second-order sections for
numerical robustness with a 10 Hz edge at fs = 1000 Hz.

Filtering is causal single-pass with zero initial state: it matches a
deployable streaming system, and group delay does not matter for
window-level features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps


class FilterDesignError(ValueError):
    """Invalid filter specification."""


@dataclass(frozen=True)
class FilterSpec:
    order: int = 4
    low_cut_hz: float = 10.0
    high_cut_hz: float = 300.0
    sampling_rate_hz: float = 1000.0

    def __post_init__(self):
        if self.order <= 0 or self.order % 2 != 0:
            raise FilterDesignError(f"order must be a positive even integer, got {self.order}")
        if not (0.0 < self.low_cut_hz < self.high_cut_hz):
            raise FilterDesignError(
                f"need 0 < low_cut < high_cut, got {self.low_cut_hz}, {self.high_cut_hz}")
        if self.high_cut_hz >= self.sampling_rate_hz / 2.0:
            raise FilterDesignError(
                f"high cutoff {self.high_cut_hz} Hz violates Nyquist "
                f"({self.sampling_rate_hz / 2.0} Hz at fs={self.sampling_rate_hz})")


@dataclass(frozen=True)
class FilterCoefficients:
    """Cascaded second-order sections, rows (b0, b1, b2, a1, a2), a0 = 1."""

    sections: np.ndarray

    def __post_init__(self):
        if self.sections.ndim != 2 or self.sections.shape[1] != 5:
            raise FilterDesignError(f"sections must be (n, 5), got {self.sections.shape}")

    def as_sos(self) -> np.ndarray:
        """Sections in (b0, b1, b2, 1, a1, a2) layout."""
        n = len(self.sections)
        sos = np.empty((n, 6))
        sos[:, 0:3] = self.sections[:, 0:3]
        sos[:, 3] = 1.0
        sos[:, 4:6] = self.sections[:, 3:5]
        return sos

    def poles(self) -> np.ndarray:
        """Poles of every section, concatenated."""
        return np.concatenate([
            np.roots([1.0, a1, a2]) for _, _, _, a1, a2 in self.sections
        ])

    def is_stable(self) -> bool:
        return bool(np.all(np.abs(self.poles()) < 1.0))


def design_bandpass(spec: FilterSpec) -> FilterCoefficients:
    """Design the Butterworth band-pass for ``spec``.

    A band-pass of overall order N has N/2 pole pairs on each skirt, so the
    prototype low-pass order is N/2.
    """
    sos = sps.butter(spec.order // 2,
                     [spec.low_cut_hz, spec.high_cut_hz],
                     btype="bandpass", output="sos",
                     fs=spec.sampling_rate_hz)
    coeffs = FilterCoefficients(sections=np.column_stack([sos[:, 0:3], sos[:, 4:6]]))
    if not coeffs.is_stable():
        raise FilterDesignError("designed filter is unstable")  # pragma: no cover
    return coeffs


def apply_filter(coeffs: FilterCoefficients, x: np.ndarray) -> np.ndarray:
    """Causal forward pass through the cascaded sections, zero initial state."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("empty input")
    return sps.sosfilt(coeffs.as_sos(), x)


def frequency_response(coeffs: FilterCoefficients, f_hz: float, fs_hz: float) -> float:
    """Gain in dB at ``f_hz``: 20*log10 |H(e^{j 2 pi f / fs})|.

    Evaluated exactly from the section product; -inf at an exact zero of
    the transfer function (e.g. DC for a band-pass).
    """
    if not (0.0 <= f_hz <= fs_hz / 2.0):
        raise ValueError(f"frequency {f_hz} outside [0, {fs_hz / 2.0}]")
    zinv = np.exp(-2j * np.pi * f_hz / fs_hz)
    h = 1.0 + 0j
    for b0, b1, b2, a1, a2 in coeffs.sections:
        h *= (b0 + b1 * zinv + b2 * zinv**2) / (1.0 + a1 * zinv + a2 * zinv**2)
    mag = abs(h)
    if mag == 0.0:
        return float("-inf")
    return 20.0 * float(np.log10(mag))


def response_curve(coeffs: FilterCoefficients, freqs_hz: np.ndarray, fs_hz: float) -> np.ndarray:
    """Vectorized :func:`frequency_response` over a frequency grid."""
    return np.array([frequency_response(coeffs, float(f), fs_hz) for f in freqs_hz])
