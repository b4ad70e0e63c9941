import numpy as np
import pytest

from wheelsense.dsp import (FilterDesignError, FilterSpec, apply_filter,
                            design_bandpass, frequency_response,
                            response_curve)

FS = 1000.0


@pytest.fixture(scope="module")
def coeffs():
    return design_bandpass(FilterSpec(4, 10.0, 300.0, FS))


@pytest.fixture(scope="module")
def passband_peak_db(coeffs):
    grid = np.arange(1.0, FS / 2)
    return response_curve(coeffs, grid, FS).max()


class TestDesign:
    def test_band_center_near_peak(self, coeffs, passband_peak_db):
        center = np.sqrt(10.0 * 300.0)  # ~54.8 Hz
        assert abs(frequency_response(coeffs, center, FS) - passband_peak_db) < 0.1

    def test_cutoffs_at_minus_3db(self, coeffs, passband_peak_db):
        for f in (10.0, 300.0):
            drop = passband_peak_db - frequency_response(coeffs, f, FS)
            assert drop == pytest.approx(3.0, abs=0.5)

    def test_nyquist_violation(self):
        with pytest.raises(FilterDesignError, match="Nyquist"):
            design_bandpass(FilterSpec(4, 10.0, 600.0, FS))

    def test_stability(self, coeffs):
        assert coeffs.is_stable()
        assert np.all(np.abs(coeffs.poles()) < 1.0)

    def test_odd_order_rejected(self):
        with pytest.raises(FilterDesignError):
            FilterSpec(3, 10.0, 300.0, FS)


class TestApply:
    def test_dc_rejected(self, coeffs):
        y = apply_filter(coeffs, np.full(5000, 5.0))
        assert np.max(np.abs(y[1000:])) < 1e-3

    def test_steady_state_matches_analytic_gain(self, coeffs):
        t = np.arange(int(5 * FS)) / FS
        x = np.sin(2 * np.pi * 100.0 * t)
        y = apply_filter(coeffs, x)
        tail = y[len(y) // 2:]
        predicted = 10 ** (frequency_response(coeffs, 100.0, FS) / 20.0)
        assert np.max(np.abs(tail)) == pytest.approx(predicted, rel=0.02)

    def test_zeros_stay_zeros(self, coeffs):
        assert np.all(apply_filter(coeffs, np.zeros(100)) == 0.0)

    def test_empty_input_rejected(self, coeffs):
        with pytest.raises(ValueError):
            apply_filter(coeffs, np.array([]))

    def test_linearity(self, coeffs):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(2000)
        y = rng.standard_normal(2000)
        lhs = apply_filter(coeffs, 2.5 * x - 1.25 * y)
        rhs = 2.5 * apply_filter(coeffs, x) - 1.25 * apply_filter(coeffs, y)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-12)

    def test_output_length_preserved(self, coeffs):
        assert len(apply_filter(coeffs, np.ones(1234))) == 1234


class TestResponse:
    def test_dc_blocked(self, coeffs):
        assert frequency_response(coeffs, 0.0, FS) <= -60.0

    def test_450hz_rolloff(self, coeffs):
        assert frequency_response(coeffs, 450.0, FS) <= -20.0

    def test_band_center_tops_1hz_grid(self, coeffs):
        grid = np.arange(1.0, FS / 2)
        center_gain = frequency_response(coeffs, np.sqrt(10.0 * 300.0), FS)
        assert center_gain >= response_curve(coeffs, grid, FS).max() - 1e-3

    def test_out_of_range_frequency(self, coeffs):
        with pytest.raises(ValueError):
            frequency_response(coeffs, 501.0, FS)

    def test_monotone_stopbands(self, coeffs):
        below = response_curve(coeffs, np.arange(1.0, 10.0), FS)
        assert np.all(np.diff(below) > 0)  # rising toward the passband
        above = response_curve(coeffs, np.arange(301.0, 500.0), FS)
        assert np.all(np.diff(above) < 0)
