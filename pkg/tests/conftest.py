"""Shared synthetic-session builders for the pipeline-level tests."""

import pytest

from wheelsense.pipeline import Session
from wheelsense.synth import generate_session, random_session_config


def build_sessions(n, seed0=100, duration_s=1500.0, **kw):
    sessions = []
    for i in range(n):
        cfg = random_session_config(f"s{i:02d}", seed=seed0 + i,
                                    duration_s=duration_s, **kw)
        record, truth = generate_session(cfg)
        sessions.append(Session(session_id=cfg.session_id, record=record,
                                sofi=truth.sofi_timeline(), truth=truth))
    return sessions


@pytest.fixture(scope="session")
def small_corpus():
    # 4 short sessions, enough for a train/test split
    return build_sessions(4, seed0=100, duration_s=1500.0,
                          n_fst=2, n_flat=1, n_artifact=1)
