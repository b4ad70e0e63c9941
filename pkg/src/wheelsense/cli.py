"""Single executable exposing every pipeline stage.

Subcommands: filter, segment, select-valid, train-vsesm, features,
detect-points, train, detect, eval, sweep, synth, run-all.  Every
subcommand accepts ``--config`` (YAML, flat keys) and ``--seed``; flags
override config keys.  All randomness derives from the single seed, so
reruns are byte-identical.

Exit codes: 0 success, 1 data error, 2 usage error.

Session directories hold, per session NAME:

    NAME_signal.csv       time_s,emg_uv
    NAME_sofi.csv         time_s,sofi_score
    NAME_truth_valid.csv  frame_index,sub_index,valid_truth   (synth only)
    NAME_truth_fst.csv    frame_index,fst_truth               (synth only)
    NAME_events.json      event log (synth only; source for re-deriving
                          truth tables at other sub-window sizes)
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import dsp, evalkit, fst_model, pipeline, segmentation, synth, vsesm
from .features import BASE_FEATURE_NAMES, FST_FEATURE_NAMES
from .io_config import (DataError, PipelineConfig, dump_config, load_config,
                        load_signal_csv, load_sofi_csv, save_signal_csv)
from .segmentation import Validity


def _setup_logging():
    level = os.environ.get("WHEELSENSE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _resolve_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    overrides = {}
    if getattr(args, "sub_window_s", None) is not None:
        overrides["sub_window_s"] = args.sub_window_s
    if getattr(args, "threshold", None) is not None:
        overrides["prune_threshold"] = args.threshold
    if getattr(args, "preset", None) is not None:
        overrides["forest_preset"] = args.preset
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    return cfg.with_overrides(**overrides) if overrides else cfg


def _out_dir(args) -> Path:
    out = Path(args.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out: Path, cfg: PipelineConfig, inputs: list[Path],
                    artifacts: list[Path], timings: dict) -> None:
    doc = {
        "config": dump_config(cfg),
        "seed": cfg.rng_seed,
        "inputs": [str(p) for p in inputs],
        "artifacts": {p.name: _sha256(p) for p in artifacts},
        "stage_timings_s": timings,
    }
    tmp = out / "manifest.json.tmp"
    tmp.write_text(json.dumps(doc, indent=1, sort_keys=True))
    tmp.replace(out / "manifest.json")


# -- session loading ------------------------------------------------------

def _load_truth(events_path: Path) -> synth.GroundTruth:
    d = json.loads(events_path.read_text())
    return synth.GroundTruth(
        fst_frames=tuple(d["fst_frames"]),
        noise_events=tuple(synth.NoiseEvent(**e) for e in d["noise_events"]),
        frame_s=d["frame_s"],
        n_frames=d["n_frames"],
        noise_truth_overlap=d["noise_truth_overlap"])


def load_sessions(session_dir: Path) -> list[pipeline.Session]:
    paths = sorted(session_dir.glob("*_signal.csv"))
    if not paths:
        raise DataError(f"no *_signal.csv files in {session_dir}")
    sessions = []
    for sig in paths:
        name = sig.name[:-len("_signal.csv")]
        record = load_signal_csv(sig, session_id=name)
        sofi_path = session_dir / f"{name}_sofi.csv"
        events_path = session_dir / f"{name}_events.json"
        sessions.append(pipeline.Session(
            session_id=name,
            record=record,
            sofi=load_sofi_csv(sofi_path) if sofi_path.exists() else None,
            truth=_load_truth(events_path) if events_path.exists() else None))
    return sessions


# -- subcommand handlers --------------------------------------------------

def cmd_filter(args, cfg):
    record = load_signal_csv(args.input)
    filtered = pipeline.filter_record(record, cfg)
    out = _out_dir(args) / f"{Path(args.input).stem}_filtered.csv"
    save_signal_csv(out, filtered)
    print(out)
    return 0


def cmd_segment(args, cfg):
    record = load_signal_csv(args.input)
    windows = pipeline.segment_record(record, cfg)
    out = _out_dir(args) / f"{Path(args.input).stem}_segments.csv"
    _write_csv(out, ["frame_index", "sub_index", "start_time_s", "validity"],
               [(w.frame_index, w.sub_index, repr(w.start_time_s), w.validity.value)
                for w in windows])
    print(out)
    return 0


def cmd_select_valid(args, cfg):
    if not args.model:
        raise DataError("select-valid requires --model (a vsesm model JSON)")
    model = vsesm.VsesmModel.load(args.model)
    record = load_signal_csv(args.input)
    prep = pipeline.prepare_session(pipeline.Session(record.session_id, record), cfg)
    is_valid = model.predict_valid(prep.descriptors)
    for w, ok in zip(prep.windows, is_valid):
        w.validity = Validity.VALID if ok else Validity.NOISE
    out = _out_dir(args) / f"{Path(args.input).stem}_validity.csv"
    _write_csv(out, ["frame_index", "sub_index", "start_time_s", "validity"],
               [(w.frame_index, w.sub_index, repr(w.start_time_s), w.validity.value)
                for w in prep.windows])
    print(out)
    return 0


def cmd_train_vsesm(args, cfg):
    sessions = load_sessions(Path(args.input))
    preps = [pipeline.prepare_session(s, cfg) for s in sessions]
    labeled = pipeline.labeled_positive_descriptors(preps, cfg)
    unlabeled = np.concatenate([p.descriptors for p in preps])
    model = vsesm.build_vsesm(labeled, unlabeled, cfg, cfg.rng_seed)
    out = _out_dir(args) / "vsesm_model.json"
    model.save(out)
    print(out)
    return 0


def cmd_detect_points(args, cfg):
    # input: a validity manifest CSV (from segment or select-valid)
    valid_by_frame: dict[int, list[int]] = {}
    with open(args.input, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            f, s = int(row["frame_index"]), int(row["sub_index"])
            valid_by_frame.setdefault(f, [])
            if row["validity"] == Validity.VALID.value:
                valid_by_frame[f].append(s)
    sets = [segmentation.FrameValidSet(f, tuple(sorted(v)))
            for f, v in sorted(valid_by_frame.items()) if v]
    if not sets:
        raise DataError("no valid sub-windows in manifest")
    first = segmentation.first_detection_point(sets, cfg.frame_s, cfg.step_s)
    dps = segmentation.select_detection_points(sets, first, cfg.frame_s, cfg.step_s)
    out = _out_dir(args) / "detection_points.csv"
    _write_csv(out, ["frame_index", "sub_index", "time_s"],
               [(dp.frame_index, dp.sub_index, repr(dp.time_s)) for dp in dps])
    print(out)
    return 0


def cmd_features(args, cfg):
    record = load_signal_csv(args.input)
    prep = pipeline.prepare_session(pipeline.Session(record.session_id, record), cfg)
    out_dir = _out_dir(args)
    base_out = out_dir / f"{Path(args.input).stem}_features.csv"
    _write_csv(base_out,
               ["frame_index", "sub_index", *BASE_FEATURE_NAMES],
               [(w.frame_index, w.sub_index, *[repr(float(v)) for v in row])
                for w, row in zip(prep.windows, prep.descriptors)])
    print(base_out)
    if args.points:
        dps = []
        with open(args.points, newline="") as fh:
            for row in csv.DictReader(fh):
                dps.append(segmentation.DetectionPoint(
                    int(row["frame_index"]), int(row["sub_index"]),
                    float(row["time_s"])))
        if len(dps) < 2:
            raise DataError("need at least 2 detection points for pair features")
        from .features import FeatureSeries, fst_features
        rows = np.array([prep.descriptors[prep.window_row(dp.frame_index, dp.sub_index)]
                         for dp in dps])
        series = FeatureSeries(times_s=np.array([dp.time_s for dp in dps]), values=rows)
        X = fst_features(series)
        fst_out = out_dir / f"{Path(args.input).stem}_fst_features.csv"
        _write_csv(fst_out, ["frame_index", *FST_FEATURE_NAMES],
                   [(dp.frame_index, *[repr(float(v)) for v in x])
                    for dp, x in zip(dps[1:], X)])
        print(fst_out)
    return 0


def cmd_train(args, cfg):
    sessions = load_sessions(Path(args.input))
    train = [s for s in sessions if s.session_id not in cfg.test_sessions]
    preps = [pipeline.prepare_session(s, cfg) for s in train]
    selector, classifier = pipeline.fit_sessions(preps, cfg, cfg.rng_seed)
    out = _out_dir(args)
    selector.save(out / "vsesm_model.json")
    classifier.save(out / "fst_model.json")
    print(out / "vsesm_model.json")
    print(out / "fst_model.json")
    return 0


def cmd_detect(args, cfg):
    if not args.model_dir:
        raise DataError("detect requires --model-dir with vsesm_model.json and fst_model.json")
    model_dir = Path(args.model_dir)
    selector = vsesm.VsesmModel.load(model_dir / "vsesm_model.json")
    classifier = fst_model.FstForestModel.load(model_dir / "fst_model.json")
    sessions = load_sessions(Path(args.input))
    preps = [pipeline.prepare_session(s, cfg) for s in sessions]
    rows = pipeline.predict_sessions(preps, selector, classifier, cfg)
    out = _out_dir(args) / "predictions.csv"
    _write_predictions(out, rows)
    print(out)
    return 0


def _write_predictions(path: Path, rows: list[dict]) -> None:
    _write_csv(path,
               ["session_id", "frame_index", "label_true", "label_pred",
                "fst_vote_fraction"],
               [(r["session_id"], r["frame_index"], r["label_true"],
                 r["label_pred"], repr(r["fst_vote_fraction"])) for r in rows])


def cmd_eval(args, cfg):
    with open(args.input, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DataError(f"{args.input}: no prediction rows")
    cm = evalkit.confusion([r["label_true"] for r in rows],
                           [r["label_pred"] for r in rows])
    wf1 = evalkit.weighted_f1(cm)
    print(cm)
    print(f"weighted F1: {wf1:.2f} ({wf1:.6f})")
    return 0


def cmd_sweep(args, cfg):
    sessions = load_sessions(Path(args.input))
    sizes = [float(s) for s in args.sizes.split(",")]
    rows = evalkit.sweep_subwindow(sessions, sizes, cfg, cfg.rng_seed)
    out = _out_dir(args) / "sweep.csv"
    _write_csv(out, ["size_s", "weighted_f1", "fst_f1", "nfst_f1"],
               [(f"{r['size_s']:g}", f"{r['weighted_f1']:.4f}",
                 f"{r['fst_f1']:.4f}", f"{r['nfst_f1']:.4f}") for r in rows])
    print(out)
    return 0


def cmd_synth(args, cfg):
    out = _out_dir(args)
    for i in range(args.sessions):
        name = f"{args.prefix}{i:02d}"
        scfg = synth.random_session_config(
            name, seed=cfg.rng_seed + i,
            duration_s=args.duration_s, frame_s=cfg.frame_s)
        record, truth = synth.generate_session(scfg)
        save_signal_csv(out / f"{name}_signal.csv", record)
        sofi = truth.sofi_timeline()
        _write_csv(out / f"{name}_sofi.csv", ["time_s", "sofi_score"],
                   [(repr(t), repr(s)) for t, s in sofi.entries])
        noise = truth.subwindow_noise_truth(cfg.sub_window_s, cfg.overlap_fraction)
        _write_csv(out / f"{name}_truth_valid.csv",
                   ["frame_index", "sub_index", "valid_truth"],
                   [(f, s, int(not noise[f, s]))
                    for f in range(noise.shape[0]) for s in range(noise.shape[1])])
        fst_truth = truth.frame_fst_truth()
        _write_csv(out / f"{name}_truth_fst.csv", ["frame_index", "fst_truth"],
                   [(n + 1, int(v)) for n, v in enumerate(fst_truth)])
        (out / f"{name}_events.json").write_text(json.dumps({
            "fst_frames": list(truth.fst_frames),
            "noise_events": [vars(e) for e in truth.noise_events],
            "frame_s": truth.frame_s,
            "n_frames": truth.n_frames,
            "noise_truth_overlap": truth.noise_truth_overlap,
        }, indent=1, sort_keys=True))
    print(dump_config(cfg), end="")
    return 0


def cmd_run_all(args, cfg):
    t0 = time.perf_counter()
    timings = {}
    session_dir = Path(args.input)
    sessions = load_sessions(session_dir)
    test_ids = list(cfg.test_sessions) or [sessions[-1].session_id]
    timings["load"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    cm, rows = pipeline.train_test_run(sessions, test_ids, cfg, cfg.rng_seed)
    timings["pipeline"] = time.perf_counter() - t1

    out = _out_dir(args)
    pred_path = out / "predictions.csv"
    _write_predictions(pred_path, rows)
    print(cm)
    print(f"weighted F1: {evalkit.weighted_f1(cm):.2f} "
          f"({evalkit.weighted_f1(cm):.6f})")
    artifacts = [pred_path]
    _write_manifest(out, cfg, sorted(session_dir.glob("*.csv")), artifacts, timings)
    print(pred_path)
    return 0


# -- entry point ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wheelsense",
        description="Steering-wheel sEMG fatigue detection pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, **extra):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--input", default=None)
        p.add_argument("--output-dir", default=None)
        p.add_argument("--sub-window-s", type=float, default=None)
        p.add_argument("--threshold", type=float, default=None)
        p.add_argument("--preset", choices=["pre_prune", "post_prune"], default=None)
        for flag, kw in extra.items():
            p.add_argument(flag, **kw)
        p.set_defaults(handler=handler)
        return p

    add("filter", cmd_filter)
    add("segment", cmd_segment)
    add("select-valid", cmd_select_valid, **{"--model": {"default": None}})
    add("train-vsesm", cmd_train_vsesm)
    add("features", cmd_features, **{"--points": {"default": None}})
    add("detect-points", cmd_detect_points)
    add("train", cmd_train)
    add("detect", cmd_detect, **{"--model-dir": {"default": None}})
    add("eval", cmd_eval)
    add("sweep", cmd_sweep, **{"--sizes": {"default": "10,20,30,40,50,60"}})
    add("synth", cmd_synth, **{"--sessions": {"type": int, "default": 1},
                               "--duration-s": {"type": float, "default": 3000.0},
                               "--prefix": {"default": "session"}})
    add("run-all", cmd_run_all)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        if args.input is None and args.command not in ("synth",):
            raise DataError(f"{args.command} requires --input")
        return args.handler(args, cfg)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, dsp.FilterDesignError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
