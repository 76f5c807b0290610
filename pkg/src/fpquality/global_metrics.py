"""Global quality measures: orientation continuity, ridge uniformity and
spectral ring-energy concentration."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .config import QualityConfig
from .local_metrics import QualityScore


@dataclass(frozen=True)
class SpectrumROI:
    """Annular frequency region split into equal-width rings.

    f_min/f_max are in cycles/pixel (f_max <= 0.5); energies holds the
    power captured by each ring once spectrum_quality has run.
    """

    f_min: float
    f_max: float
    bands: int
    energies: np.ndarray | None = None

    def __post_init__(self):
        if not (0.0 < self.f_min < self.f_max <= 0.5):
            raise ValueError("need 0 < f_min < f_max <= 0.5")
        if self.bands < 2:
            raise ValueError("need at least 2 bands")

    def band_edges(self) -> np.ndarray:
        return np.linspace(self.f_min, self.f_max, self.bands + 1)


def angular_distance(a, b):
    """Distance between undirected orientations, in [0, pi/2]."""
    d = np.abs(a - b) % math.pi
    return np.minimum(d, math.pi - d)


def orientation_continuity(fld, grid, cfg: QualityConfig | None = None) -> QualityScore:
    """S_GO: mean orientation jump between 4-neighbor foreground blocks,
    mapped through a linear clamp.

    raw = mean over adjacent pairs of min(|dtheta|, pi - |dtheta|);
    S_GO = max(0, 1 - raw / scale). Raises when no adjacent pair exists.
    """
    cfg = cfg or QualityConfig()
    fg = grid.foreground
    if fg is None:
        raise ValueError("grid has no foreground mask")
    deltas = []
    right = fg[:, :-1] & fg[:, 1:]
    down = fg[:-1, :] & fg[1:, :]
    if right.any():
        deltas.append(angular_distance(fld.theta[:, :-1], fld.theta[:, 1:])[right])
    if down.any():
        deltas.append(angular_distance(fld.theta[:-1, :], fld.theta[1:, :])[down])
    if not deltas:
        raise ValueError("fewer than one adjacent foreground pair")
    raw = float(np.concatenate(deltas).mean())
    return QualityScore("S_GO", max(0.0, 1.0 - raw / cfg.go_discont_scale))


def ridge_uniformity(stats, cfg: QualityConfig | None = None) -> QualityScore:
    """S_GR = exp(-std(rv_ratio) / scale), sample std over valid blocks."""
    cfg = cfg or QualityConfig()
    ratios = stats.rv_ratio[np.isfinite(stats.rv_ratio)]
    if ratios.size < 2:
        raise ValueError("need at least 2 blocks with a valid ridge/valley ratio")
    sd = float(np.std(ratios, ddof=1))
    return QualityScore("S_GR", math.exp(-sd / cfg.gr_std_scale))


def spectrum_quality(img, roi: SpectrumROI | None = None,
                     cfg: QualityConfig | None = None):
    """Q_F: energy concentration in ring bands of the 2-D power spectrum.

    The mean-removed, Hann-windowed image is transformed; power falling in
    the [f_min, f_max] annulus is split into equal-width rings. With
    p_k = E_k / sum(E), Q_F = 1 - H(p)/log(bands); a single energized band
    gives 1, a flat spectrum about 0. Returns (QualityScore, SpectrumROI
    with energies). Raises on an empty ROI spectrum.
    """
    cfg = cfg or QualityConfig()
    if roi is None:
        roi = SpectrumROI(cfg.roi_freq_min, cfg.roi_freq_max, cfg.roi_bands)
    h, w = img.pixels.shape
    if h < 32 or w < 32:
        raise ValueError("image must be at least 32x32 for spectral analysis")
    px = img.pixels.astype(np.float64)
    px = px - px.mean()
    win = np.outer(np.hanning(h), np.hanning(w))
    power = np.abs(np.fft.fft2(px * win)) ** 2
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    radius = np.hypot(fy, fx)
    edges = roi.band_edges()
    in_roi = (radius >= roi.f_min) & (radius <= roi.f_max)
    total = float(power[in_roi].sum())
    if total <= 0:
        raise ValueError("no spectral energy inside the ROI annulus")
    energies = np.empty(roi.bands)
    for k in range(roi.bands):
        hi_cmp = radius <= edges[k + 1] if k == roi.bands - 1 else radius < edges[k + 1]
        ring = (radius >= edges[k]) & hi_cmp & in_roi
        energies[k] = float(power[ring].sum())
    qf = concentration_index(energies / total)
    return (QualityScore("Q_F", qf),
            SpectrumROI(roi.f_min, roi.f_max, roi.bands, energies=energies))


def concentration_index(p) -> float:
    """1 - H(p)/log(n) for a probability vector p: 1 for a point mass,
    0 for a uniform distribution."""
    p = np.asarray(p, dtype=np.float64)
    nz = p[p > 0]
    entropy = float(-(nz * np.log(nz)).sum())
    return min(1.0, max(0.0, 1.0 - entropy / math.log(len(p))))


def write_spectrum_profile(roi: SpectrumROI, path) -> None:
    """CSV export of the per-band energy split: band, f_low, f_high, energy, p."""
    if roi.energies is None:
        raise ValueError("ROI has no energies; run spectrum_quality first")
    edges = roi.band_edges()
    total = float(roi.energies.sum())
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["band", "f_low", "f_high", "energy", "p"])
        for k, e in enumerate(roi.energies):
            wr.writerow([k, repr(edges[k]), repr(edges[k + 1]), repr(float(e)),
                         repr(float(e) / total if total else 0.0)])
