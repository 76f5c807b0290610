"""Local (block-feature) quality measures.

Four families: recoverability classification from the sinusoid model,
four-feature block labeling with the S_L score, distance-weighted coherence
Q_S, Gabor response spread QI, and the directional-histogram score Q_dir.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.ndimage as ndi

from .config import QualityConfig

# Lim-style block labels
BLANK, BAD, UNDETERMINED, GOOD = 0, 1, 2, 3
LABEL_NAMES = {BLANK: "blank", BAD: "bad", UNDETERMINED: "undetermined", GOOD: "good"}


@dataclass(frozen=True)
class QualityScore:
    metric: str
    value: float
    level: int | None = None

    def __post_init__(self):
        if not (0.0 <= self.value <= 1.0):
            raise ValueError(f"{self.metric} value {self.value} outside [0, 1]")


@dataclass(frozen=True)
class HongResult:
    recoverable: np.ndarray      # bool per block, meaningful on foreground
    unrecoverable_frac: float
    rejected: bool
    reason: str = ""


@dataclass(frozen=True)
class LimResult:
    labels: np.ndarray           # int per block: BLANK/BAD/UNDETERMINED/GOOD
    score: QualityScore          # S_L


@dataclass(frozen=True)
class GaborResult:
    good: np.ndarray             # bool per block
    responses: np.ndarray        # (rows, cols, m) mean filter magnitudes
    score: QualityScore          # QI
    rejected: bool


@dataclass(frozen=True)
class DirectionalResult:
    directional: np.ndarray      # bool per block
    score: QualityScore          # Q_dir


def weighted_fraction(weights, members, foreground) -> float:
    """sum of weights over member blocks / sum over foreground blocks."""
    wsum = float(weights[foreground].sum())
    if wsum <= 0:
        raise ValueError("foreground weights sum to zero")
    return float(weights[members & foreground].sum()) / wsum


def weighted_mean(weights, values, foreground) -> float:
    """Weighted average of per-block values over the foreground."""
    wsum = float(weights[foreground].sum())
    if wsum <= 0:
        raise ValueError("foreground weights sum to zero")
    return float((weights[foreground] * values[foreground]).sum()) / wsum


def hong_classify(stats, grid, cfg: QualityConfig | None = None) -> HongResult:
    """Recoverable/unrecoverable split on (amplitude, frequency, variance).

    A block is recoverable iff amplitude >= amp_min, frequency lies in
    [freq_min, freq_max] and variance <= var_rel_max * amplitude^2. The
    image is rejected when the unrecoverable fraction exceeds the
    configured threshold. Invalid-stat blocks count as unrecoverable.
    """
    cfg = cfg or QualityConfig()
    if grid.foreground is None or not grid.foreground.any():
        return HongResult(recoverable=np.zeros(1, bool).reshape(1, 1) if grid.foreground is None
                          else np.zeros_like(grid.foreground),
                          unrecoverable_frac=1.0, rejected=True,
                          reason="no foreground blocks")
    with np.errstate(invalid="ignore"):
        ok = ((stats.amplitude >= cfg.hong_amp_min)
              & (stats.frequency >= cfg.hong_freq_min)
              & (stats.frequency <= cfg.hong_freq_max)
              & (stats.variance <= cfg.hong_var_rel_max * stats.amplitude ** 2))
    ok = np.where(np.isfinite(stats.frequency), ok, False) & grid.foreground
    n_fg = int(grid.foreground.sum())
    frac = 1.0 - float(ok.sum()) / n_fg
    return HongResult(recoverable=ok, unrecoverable_frac=frac,
                      rejected=frac > cfg.hong_reject_frac,
                      reason="unrecoverable fraction above threshold"
                      if frac > cfg.hong_reject_frac else "")


def lim_local_score(stats, fld, grid, cfg: QualityConfig | None = None) -> LimResult:
    """Four-feature block labels and the S_L score.

    Features per block: orientation certainty (coherence), ridge frequency,
    ridge thickness, ridge-to-valley ratio. All pass -> good, >= 2 fail ->
    bad, else undetermined; background blocks are blank. Invalid stats
    count as failed features. S_L = (G + 0.5*U) / (G + U + B), 0 with no
    foreground.
    """
    cfg = cfg or QualityConfig()
    labels = np.full((grid.rows, grid.cols), BLANK, dtype=int)
    if grid.foreground is None or not grid.foreground.any():
        return LimResult(labels=labels, score=QualityScore("S_L", 0.0))
    with np.errstate(invalid="ignore"):
        fails = ((~(fld.coherence >= cfg.lim_ocl_min)).astype(int)
                 + (~((stats.frequency >= cfg.lim_freq_min)
                      & (stats.frequency <= cfg.lim_freq_max))).astype(int)
                 + (~((stats.ridge_thickness >= cfg.lim_thick_min)
                      & (stats.ridge_thickness <= cfg.lim_thick_max))).astype(int)
                 + (~((stats.rv_ratio >= cfg.lim_rv_min)
                      & (stats.rv_ratio <= cfg.lim_rv_max))).astype(int))
    fg = grid.foreground
    labels[fg & (fails == 0)] = GOOD
    labels[fg & (fails == 1)] = UNDETERMINED
    labels[fg & (fails >= 2)] = BAD
    g = int((labels == GOOD).sum())
    u = int((labels == UNDETERMINED).sum())
    b = int((labels == BAD).sum())
    score = (g + 0.5 * u) / (g + u + b) if (g + u + b) else 0.0
    return LimResult(labels=labels, score=QualityScore("S_L", score))


def chen_local_index(fld, grid) -> QualityScore:
    """Q_S: coherence averaged over foreground blocks, centroid-weighted.

    Q_S = sum_F w_i * coh_i / sum_F w_i.
    """
    if grid.weights is None or grid.foreground is None or not grid.foreground.any():
        raise ValueError("grid needs foreground and weights")
    q = weighted_mean(grid.weights, fld.coherence, grid.foreground)
    return QualityScore("Q_S", min(1.0, max(0.0, q)))


def gabor_kernel(theta: float, wavelength: float, sigma: float) -> np.ndarray:
    """Complex Gabor kernel with a circular Gaussian envelope.

    The carrier oscillates along the axis at angle theta; kernel radius is
    3 sigma. The real part is zero-mean so flat regions give no response.
    """
    radius = int(math.ceil(3.0 * sigma))
    yy, xx = np.mgrid[-radius:radius + 1, -radius:radius + 1].astype(np.float64)
    rot = xx * math.cos(theta) + yy * math.sin(theta)
    env = np.exp(-(xx ** 2 + yy ** 2) / (2.0 * sigma ** 2))
    carrier = np.exp(1j * 2.0 * math.pi * rot / wavelength)
    # subtract the envelope-weighted carrier mean so the kernel has no DC gain
    dc = (env * carrier.real).sum() / env.sum()
    return env * (carrier - dc)


def _gabor_bank_responses(img, grid, cfg: QualityConfig):
    """Mean filter-response magnitude per block for each bank orientation."""
    px = img.pixels.astype(np.float64)
    m = cfg.gabor_orientations
    resp = np.zeros((grid.rows, grid.cols, m))
    for k in range(m):
        theta = k * math.pi / m
        kern = gabor_kernel(theta, cfg.gabor_wavelength, cfg.gabor_sigma)
        real = ndi.convolve(px, kern.real, mode="nearest")
        imag = ndi.convolve(px, kern.imag, mode="nearest")
        mag = np.hypot(real, imag)
        for r in range(grid.rows):
            for c in range(grid.cols):
                y0, y1, x0, x1 = grid.block_bounds(r, c)
                resp[r, c, k] = mag[y0:y1, x0:x1].mean()
    return resp


def gabor_quality(img, grid, cfg: QualityConfig | None = None) -> GaborResult:
    """QI: fraction of foreground blocks with a spread of Gabor responses.

    A block with clear ridge flow answers strongly to the aligned filter
    and weakly to the rest, so the spread over the m orientation responses
    is large; flat or noisy blocks answer uniformly. Good iff the response
    std, normalized by the mean response to stay contrast-invariant,
    exceeds the threshold; QI = good / foreground; image rejected when QI
    falls below the configured floor.
    """
    cfg = cfg or QualityConfig()
    if grid.foreground is None or not grid.foreground.any():
        raise ValueError("no foreground blocks")
    resp = _gabor_bank_responses(img, grid, cfg)
    std = resp.std(axis=2, ddof=1)
    mean = resp.mean(axis=2)
    spread = std / np.where(mean > 0, mean, 1.0)
    # a response floor keeps numerically-flat blocks from passing on dust
    good = (spread > cfg.gabor_spread_min) & (mean > 1e-3) & grid.foreground
    qi = float(good.sum()) / float(grid.foreground.sum())
    return GaborResult(good=good, responses=resp,
                       score=QualityScore("QI", qi),
                       rejected=qi < cfg.gabor_reject_qi)


def _directional_sums(px, n: int, probe_len: int):
    """D_d per pixel for n probe directions.

    D_d(i, j) = sum over the probe_len sample points of the length-probe_len
    segment centered at (i, j) at angle d*pi/n of |I(p) - I(i, j)|. Probe
    points are sampled bilinearly so the segment tracks off-axis angles;
    edge pixels reuse the nearest border value.
    """
    half = probe_len // 2
    pad = np.pad(px, half + 1, mode="edge")
    h, w = px.shape
    out = np.zeros((n, h, w))
    for d in range(n):
        ang = d * math.pi / n
        dx, dy = math.cos(ang), math.sin(ang)
        acc = np.zeros((h, w))
        for k in range(-half, half + 1):
            ox, oy = k * dx, k * dy
            ix, iy = math.floor(ox), math.floor(oy)
            fx, fy = ox - ix, oy - iy
            by, bx = half + 1 + iy, half + 1 + ix
            s = ((1 - fy) * (1 - fx) * pad[by:by + h, bx:bx + w]
                 + (1 - fy) * fx * pad[by:by + h, bx + 1:bx + 1 + w]
                 + fy * (1 - fx) * pad[by + 1:by + 1 + h, bx:bx + w]
                 + fy * fx * pad[by + 1:by + 1 + h, bx + 1:bx + 1 + w])
            acc += np.abs(s - px)
        out[d] = acc
    return out


def directional_quality(img, grid, cfg: QualityConfig | None = None) -> DirectionalResult:
    """Q_dir from the directional-histogram test.

    Per block and direction, the histogram of D_d values over the block's
    pixels is taken, binned over the block's value range shared across
    directions so "concentrated near zero" is visible. The block is
    directional iff exactly one direction concentrates more than the
    prominent fraction of its pixels into a single bin. Q_dir = sum of
    directional-block weights over the sum of foreground-block weights.
    """
    cfg = cfg or QualityConfig()
    if grid.weights is None or grid.foreground is None or not grid.foreground.any():
        raise ValueError("grid needs foreground and weights")
    px = img.pixels.astype(np.float64)
    sums = _directional_sums(px, cfg.dir_orientations, cfg.dir_probe_len)
    directional = np.zeros((grid.rows, grid.cols), dtype=bool)
    for r, c in zip(*np.nonzero(grid.foreground)):
        y0, y1, x0, x1 = grid.block_bounds(r, c)
        vals = sums[:, y0:y1, x0:x1].reshape(cfg.dir_orientations, -1)
        npix = vals.shape[1]
        lo, hi = vals.min(), vals.max()
        if hi <= lo:
            continue  # identical response in every direction
        edges = np.linspace(lo, hi, cfg.dir_hist_bins + 1)
        prominent = 0
        for d in range(cfg.dir_orientations):
            counts, _ = np.histogram(vals[d], bins=edges)
            if counts.max() > cfg.dir_prominent_frac * npix:
                prominent += 1
        directional[r, c] = prominent == 1
    q = weighted_fraction(grid.weights, directional, grid.foreground)
    return DirectionalResult(directional=directional,
                             score=QualityScore("Q_dir", min(1.0, q)))


def labels_to_json(grid, label_maps: dict) -> str:
    """Serialize per-block label maps for debugging heatmaps.

    label_maps maps a metric name to a (rows, cols) array of ints, bools or
    strings; output is {"rows", "cols", "blocks": {"r,c": {metric: label}}}.
    """
    blocks = {}
    for r in range(grid.rows):
        for c in range(grid.cols):
            entry = {}
            for name, arr in label_maps.items():
                v = arr[r, c]
                entry[name] = v.item() if hasattr(v, "item") else v
            blocks[f"{r},{c}"] = entry
    return json.dumps({"rows": grid.rows, "cols": grid.cols, "blocks": blocks},
                      sort_keys=True)
