import numpy as np
import pytest

from wheelsense.evalkit import weighted_f1
from wheelsense.io_config import (DataError, FrameLabels, PipelineConfig,
                                  SignalRecord, FST, NFST)
from wheelsense.pipeline import (DetectionResult, Session, cross_validate_sessions,
                                 filter_record, labeled_pairs, prepare_session,
                                 segment_record, session_labels, train_test_run)
from wheelsense.segmentation import Validity

CFG = PipelineConfig()


def noise_record(duration_s=1500.0, seed=0, fs=1000.0):
    rng = np.random.default_rng(seed)
    return SignalRecord("r", fs, rng.standard_normal(int(duration_s * fs)) * 40)


class TestStages:
    def test_filter_preserves_shape_and_identity(self):
        rec = noise_record(duration_s=400.0)
        out = filter_record(rec, CFG)
        assert len(out.samples) == len(rec.samples)
        assert out.session_id == rec.session_id
        assert out.sampling_rate_hz == rec.sampling_rate_hz

    def test_segment_counts(self):
        rec = noise_record(duration_s=900.0)
        windows = segment_record(rec, CFG)
        assert len(windows) == 3 * 19
        assert windows[0].validity is Validity.UNKNOWN

    def test_transient_trim_shortens_first_window(self):
        rec = noise_record(duration_s=300.0)
        trimmed = segment_record(rec, CFG.with_overrides(drop_transient=True))
        full = segment_record(rec, CFG)
        assert len(trimmed[0].samples) == len(full[0].samples) - 1000
        assert len(trimmed[1].samples) == len(full[1].samples)

    def test_prepare_session_descriptor_shape(self, small_corpus):
        prep = prepare_session(small_corpus[0], CFG)
        assert prep.descriptors.shape == (len(prep.windows), 14)
        assert np.all(np.isfinite(prep.descriptors))

    def test_window_row_lookup(self, small_corpus):
        prep = prepare_session(small_corpus[0], CFG)
        for i, w in enumerate(prep.windows):
            assert prep.window_row(w.frame_index, w.sub_index) == i


class TestLabels:
    def test_sofi_preferred_over_truth(self, small_corpus):
        s = small_corpus[0]
        labels = session_labels(s, CFG)
        assert len(labels.labels) == s.truth.n_frames - 1
        # transitions in the score timeline line up with truth frames
        fst_frames = [i + 1 for i, v in enumerate(labels.labels) if v == FST]
        assert fst_frames == list(s.truth.fst_frames)

    def test_unlabeled_session_raises(self):
        s = Session("bare", noise_record(duration_s=600.0))
        with pytest.raises(DataError):
            session_labels(s, CFG)

    def test_labeled_pairs_filters_out_of_range_frames(self):
        X = np.arange(3 * 28, dtype=float).reshape(3, 28)
        det = DetectionResult(windows=[], detection_points=[], series=None,
                              pair_features=X, pair_frames=[1, 2, 9])
        labels = FrameLabels(labels=(NFST, FST))
        kept, y = labeled_pairs(det, labels)
        assert kept.shape == (2, 28)
        assert y == [NFST, FST]

    def test_labeled_pairs_empty_detection(self):
        det = DetectionResult(windows=[], detection_points=[], series=None,
                              pair_features=None, pair_frames=[])
        kept, y = labeled_pairs(det, FrameLabels((NFST,)))
        assert kept.shape == (0, 28) and y == []


class TestEndToEnd:
    def test_train_test_run(self, small_corpus):
        cm, rows = train_test_run(small_corpus, ["s03"], CFG, seed=0)
        assert cm.total == len(rows) > 0
        assert all(r["session_id"] == "s03" for r in rows)
        assert all(0.0 <= r["fst_vote_fraction"] <= 1.0 for r in rows)

    def test_train_test_run_deterministic(self, small_corpus):
        _, a = train_test_run(small_corpus, ["s03"], CFG, seed=0)
        _, b = train_test_run(small_corpus, ["s03"], CFG, seed=0)
        assert a == b

    def test_bad_split_rejected(self, small_corpus):
        with pytest.raises(DataError):
            train_test_run(small_corpus, [s.session_id for s in small_corpus],
                           CFG, seed=0)
        with pytest.raises(DataError):
            train_test_run(small_corpus, ["nope"], CFG, seed=0)

    def test_cross_validation_pools_all_sessions(self, small_corpus):
        cm = cross_validate_sessions(small_corpus, CFG, seed=0)
        # every session contributes its labeled pairs exactly once
        per_session = sum(
            train_test_run(small_corpus, [s.session_id], CFG, seed=0)[0].total
            for s in small_corpus)
        assert cm.total == per_session
        assert 0.0 <= weighted_f1(cm) <= 1.0
