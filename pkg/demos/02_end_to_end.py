"""Walkthrough: full pipeline on a small synthetic corpus.

Builds four seeded sessions with injected signal-loss and motion-artifact
events, trains the valid-sample selector and the fatigue-transition forest
on three of them, and scores the held-out session.

Run from the repo root:  python3 demos/02_end_to_end.py
"""

from wheelsense.evalkit import weighted_f1
from wheelsense.io_config import PipelineConfig
from wheelsense.pipeline import Session, train_test_run
from wheelsense.synth import generate_session, random_session_config

cfg = PipelineConfig()

sessions = []
for i in range(4):
    scfg = random_session_config(f"demo{i}", seed=40 + i, duration_s=1500.0,
                                 n_fst=2, n_flat=1, n_artifact=1)
    record, truth = generate_session(scfg)
    sessions.append(Session(session_id=scfg.session_id, record=record,
                            sofi=truth.sofi_timeline(), truth=truth))
    print(f"{scfg.session_id}: transitions at frames {scfg.fst_frames}, "
          f"{len(scfg.noise_events)} noise events")

print("\ntraining on demo0..demo2, testing on demo3 ...")
cm, rows = train_test_run(sessions, ["demo3"], cfg, seed=0)
print(cm)
print(f"weighted F1: {weighted_f1(cm):.4f}")

print("\nper-frame predictions for the held-out session:")
for r in rows:
    mark = "" if r["label_true"] == r["label_pred"] else "   <- miss"
    print(f"  frame {r['frame_index']}: truth {r['label_true']:4s} "
          f"pred {r['label_pred']:4s} "
          f"(vote {r['fst_vote_fraction']:.2f}){mark}")
