"""Steering-wheel sEMG fatigue detection pipeline.

Subpackage map:

- ``io_config``     signal/label file loading, pipeline configuration, FST labels
- ``dsp``           band-pass de-noising filter and its frequency response
- ``segmentation``  frames, overlapping sub-windows, detection-point tracking
- ``features``      14 base features and the 28 slope/distance pair features
- ``forest``        seeded per-sample-weighted decision-tree ensemble core
- ``vsesm``         semi-supervised valid-sample selection machine
- ``fst_model``     FST/NFST forest wrapper, importances, pruning, correlation
- ``evalkit``       confusion matrices, weighted F1, sub-window sweep
- ``synth``         seeded synthetic sEMG session generator with ground truth
- ``pipeline``      stage glue used by the CLI and the sweep harness
"""

__version__ = "0.1.0"
