"""Tunable parameters for every metric, with key=value file overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field


@dataclass
class QualityConfig:
    # block decomposition / segmentation
    block_size: int = 16          # pixels per side at 500 dpi
    seg_std_min: float = 12.0     # foreground needs intensity std >= this
    seg_mean_max: float = 220.0   # ... and mean < this (ridge ink present)
    weight_sigma: float = 0.0     # 0 -> quarter of foreground bbox diagonal

    # Hong recoverability thresholds
    hong_amp_min: float = 15.0
    hong_freq_min: float = 1.0 / 25.0
    hong_freq_max: float = 1.0 / 3.0
    hong_var_rel_max: float = 0.25    # variance <= this * amplitude^2
    hong_reject_frac: float = 0.4

    # Lim block-label thresholds
    lim_ocl_min: float = 0.35
    lim_freq_min: float = 1.0 / 25.0
    lim_freq_max: float = 1.0 / 3.0
    lim_thick_min: float = 1.5
    lim_thick_max: float = 15.0
    lim_rv_min: float = 0.3
    lim_rv_max: float = 3.0

    # Gabor bank
    gabor_orientations: int = 8
    gabor_wavelength: float = 9.0
    gabor_sigma: float = 4.0
    gabor_spread_min: float = 0.5   # response std / mean above this -> good block
    gabor_reject_qi: float = 0.4

    # directional histogram probe
    dir_orientations: int = 8
    dir_probe_len: int = 13
    dir_prominent_frac: float = 0.7
    dir_hist_bins: int = 16

    # global metrics
    go_discont_scale: float = 0.7853981633974483   # pi/4
    gr_std_scale: float = 0.5
    roi_freq_min: float = 1.0 / 25.0
    roi_freq_max: float = 1.0 / 3.0
    roi_bands: int = 10

    # minutiae extraction
    minutiae_spur_len: int = 5
    minutiae_border_px: int = 8

    # Q_C fusion weights (S_L, S_GO, S_GR)
    qc_weights: tuple[float, float, float] = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)

    def replace(self, **kwargs) -> "QualityConfig":
        return dataclasses.replace(self, **kwargs)


def load_config(path) -> QualityConfig:
    """Parse a simple key=value file into a QualityConfig.

    Lines starting with '#' and blank lines are ignored. Unknown keys
    raise ValueError. qc_weights takes three comma-separated values.
    """
    cfg = QualityConfig()
    fields = {f.name: f for f in dataclasses.fields(QualityConfig)}
    overrides = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in fields:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            if key == "qc_weights":
                parts = [float(p) for p in val.split(",")]
                if len(parts) != 3:
                    raise ValueError(f"{path}:{lineno}: qc_weights needs 3 values")
                overrides[key] = tuple(parts)
            elif fields[key].type == "int" or isinstance(getattr(cfg, key), int):
                overrides[key] = int(val)
            else:
                overrides[key] = float(val)
    return cfg.replace(**overrides)
