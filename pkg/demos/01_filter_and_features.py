"""Walkthrough: band-pass filtering and per-window feature extraction.

Generates a short synthetic grip recording, pushes it through the 10-300 Hz
band-pass, segments it into overlapping sub-windows, and prints the
14-entry descriptor of a few windows.

Run from the repo root:  python3 demos/01_filter_and_features.py
"""

from wheelsense.dsp import FilterSpec, design_bandpass, frequency_response
from wheelsense.features import BASE_FEATURE_NAMES
from wheelsense.io_config import PipelineConfig
from wheelsense.pipeline import prepare_session, Session
from wheelsense.synth import SynthConfig, generate_session

cfg = PipelineConfig()

# The filter on its own: check the response at a few landmark frequencies.
coeffs = design_bandpass(FilterSpec(cfg.filter_order, cfg.filter_low_hz,
                                    cfg.filter_high_hz, 1000.0))
print("filter response (dB):")
for f in (0.0, 10.0, 55.0, 300.0, 450.0):
    print(f"  {f:6.1f} Hz  {frequency_response(coeffs, f, 1000.0):8.2f}")

# One 5-minute frame of synthetic signal, no noise events.
record, _ = generate_session(SynthConfig(session_id="demo", duration_s=300.0,
                                         fst_frames=(), seed=1))
prep = prepare_session(Session("demo", record), cfg)
print(f"\n{len(prep.windows)} sub-windows of "
      f"{cfg.sub_window_s:.0f} s at {cfg.overlap_fraction:.0%} overlap")

print("\nfirst three descriptors:")
header = "  ".join(f"{n[:10]:>10}" for n in BASE_FEATURE_NAMES[:7])
print(f"   {header} ...")
for row in prep.descriptors[:3]:
    cells = "  ".join(f"{v:10.3f}" for v in row[:7])
    print(f"   {cells} ...")
