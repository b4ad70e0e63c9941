import numpy as np
import pytest

from wheelsense.io_config import (NFST, FST, DataError, PipelineConfig,
                                  SofiTimeline, derive_fst_labels, dump_config,
                                  load_config, load_signal_csv, load_sofi_csv,
                                  save_signal_csv, SignalRecord)


def write_signal(path, times, values):
    with open(path, "w") as fh:
        fh.write("time_s,emg_uv\n")
        for t, v in zip(times, values):
            fh.write(f"{t},{v}\n")


class TestLoadSignal:
    def test_rate_inferred_from_spacing(self, tmp_path):
        p = tmp_path / "s.csv"
        t = np.arange(10_000) * 0.001
        write_signal(p, t, np.sin(t))
        rec = load_signal_csv(p)
        assert rec.sampling_rate_hz == 1000
        assert len(rec.samples) == 10_000

    def test_empty_data_section(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("time_s,emg_uv\n")
        with pytest.raises(DataError, match="no samples"):
            load_signal_csv(p)

    def test_alternating_spacing_rejected(self, tmp_path):
        p = tmp_path / "s.csv"
        times = np.cumsum([0.001, 0.002] * 50)
        write_signal(p, times, np.zeros(100))
        with pytest.raises(DataError, match="non-uniform"):
            load_signal_csv(p)

    def test_malformed_row_reports_line(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("time_s,emg_uv\n0.0,1.0\n0.001,notanumber\n")
        with pytest.raises(DataError, match=":3"):
            load_signal_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_signal_csv(tmp_path / "nope.csv")

    def test_roundtrip(self, tmp_path):
        rec = SignalRecord("x", 1000.0, np.linspace(-1, 1, 500))
        p = tmp_path / "out.csv"
        save_signal_csv(p, rec)
        back = load_signal_csv(p)
        assert back.sampling_rate_hz == 1000
        np.testing.assert_allclose(back.samples, rec.samples)


class TestSofi:
    def test_scores_bounded(self):
        with pytest.raises(DataError):
            SofiTimeline(entries=((0.0, 11.0),))

    def test_times_increasing(self):
        with pytest.raises(DataError):
            SofiTimeline(entries=((0.0, 1.0), (0.0, 2.0)))

    def test_roundtrip(self, tmp_path):
        p = tmp_path / "sofi.csv"
        p.write_text("time_s,sofi_score\n0,2\n300,4\n")
        tl = load_sofi_csv(p)
        assert tl.entries == ((0.0, 2.0), (300.0, 4.0))


class TestDeriveLabels:
    def test_step_up_is_fst(self):
        tl = SofiTimeline(entries=tuple((300.0 * i, s) for i, s in enumerate([2, 2, 4, 4])))
        assert derive_fst_labels(tl, 1).labels == (NFST, FST, NFST)

    def test_flat_scores(self):
        tl = SofiTimeline(entries=tuple((300.0 * i, s) for i, s in enumerate([0, 0, 0])))
        assert derive_fst_labels(tl, 1).labels == (NFST, NFST)

    def test_min_delta_two(self):
        tl = SofiTimeline(entries=tuple((300.0 * i, s) for i, s in enumerate([3, 5, 4, 6])))
        assert derive_fst_labels(tl, 2).labels == (FST, NFST, FST)

    def test_too_few_entries(self):
        with pytest.raises(DataError):
            derive_fst_labels(SofiTimeline(entries=((0.0, 2.0),)), 1)

    def test_length_is_frames_minus_one(self):
        tl = SofiTimeline(entries=tuple((300.0 * i, float(i % 5)) for i in range(9)))
        assert len(derive_fst_labels(tl, 1).labels) == 8

    def test_shift_invariant(self):
        scores = [1, 3, 2, 5, 5, 6]
        a = SofiTimeline(entries=tuple((300.0 * i, s) for i, s in enumerate(scores)))
        b = SofiTimeline(entries=tuple((300.0 * i, s + 4) for i, s in enumerate(scores)))
        assert derive_fst_labels(a, 1).labels == derive_fst_labels(b, 1).labels


class TestConfig:
    def test_defaults(self):
        cfg = PipelineConfig()
        assert cfg.frame_s == 300.0
        assert cfg.step_s == 15.0

    def test_overlap_bounds(self):
        with pytest.raises(DataError):
            PipelineConfig(overlap_fraction=1.0)

    def test_sub_window_bounded_by_frame(self):
        with pytest.raises(DataError):
            PipelineConfig(sub_window_s=301.0)

    def test_yaml_roundtrip(self, tmp_path):
        cfg = PipelineConfig(sub_window_s=10.0, rng_seed=7)
        p = tmp_path / "c.yaml"
        p.write_text(dump_config(cfg))
        assert load_config(p) == cfg

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("frame_s: 300\nnot_a_key: 1\n")
        with pytest.raises(DataError, match="not_a_key"):
            load_config(p)
