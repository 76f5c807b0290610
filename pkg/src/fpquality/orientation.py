"""Block-wise orientation field, gradient coherence and ridge wave statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.ndimage as ndi


@dataclass(frozen=True)
class OrientationField:
    """Per-block dominant angle (radians, [0, pi)) and coherence ([0, 1]).

    Entries are meaningful only where valid is True (foreground blocks);
    elsewhere both arrays hold 0.
    """

    theta: np.ndarray
    coherence: np.ndarray
    valid: np.ndarray


@dataclass(frozen=True)
class RidgeStats:
    """Per-block sinusoid model and run-length statistics.

    Arrays are NaN where the block is background or the estimate is marked
    invalid (signature too short, degenerate runs).
    """

    amplitude: np.ndarray
    frequency: np.ndarray
    variance: np.ndarray
    ridge_thickness: np.ndarray
    valley_thickness: np.ndarray
    rv_ratio: np.ndarray

    def valid_wave(self) -> np.ndarray:
        return np.isfinite(self.frequency)

    def valid_thickness(self) -> np.ndarray:
        return np.isfinite(self.rv_ratio)


def _nan_grid(grid) -> np.ndarray:
    return np.full((grid.rows, grid.cols), np.nan)


def _structure_sums(img, grid):
    """Per-block (Gxx, Gyy, Gxy) from 3x3 Sobel gradients over real pixels."""
    px = img.pixels.astype(np.float64)
    gx = ndi.sobel(px, axis=1, mode="nearest")
    gy = ndi.sobel(px, axis=0, mode="nearest")
    gxx = np.zeros((grid.rows, grid.cols))
    gyy = np.zeros((grid.rows, grid.cols))
    gxy = np.zeros((grid.rows, grid.cols))
    for r in range(grid.rows):
        for c in range(grid.cols):
            y0, y1, x0, x1 = grid.block_bounds(r, c)
            bx = gx[y0:y1, x0:x1]
            by = gy[y0:y1, x0:x1]
            gxx[r, c] = np.sum(bx * bx)
            gyy[r, c] = np.sum(by * by)
            gxy[r, c] = np.sum(bx * by)
    return gxx, gyy, gxy


def block_orientation(img, grid) -> OrientationField:
    """Dominant gradient-axis angle per foreground block.

    theta = 0.5 * atan2(2*Gxy, Gxx - Gyy) folded into [0, pi). For a
    pattern whose intensity varies only along x this yields theta = 0.
    Zero-gradient blocks get the theta = 0 sentinel (their coherence is 0).
    """
    if grid.foreground is None or not grid.foreground.any():
        raise ValueError("no foreground blocks")
    gxx, gyy, gxy = _structure_sums(img, grid)
    theta = 0.5 * np.arctan2(2.0 * gxy, gxx - gyy)
    theta = np.mod(theta, math.pi)
    theta[theta >= math.pi] = 0.0
    theta[~grid.foreground] = 0.0
    return OrientationField(theta=theta,
                            coherence=np.zeros_like(theta),
                            valid=grid.foreground.copy())


def orientation_coherence(img, grid) -> OrientationField:
    """Orientation field with the structure-tensor coherence filled in.

    coherence = sqrt((Gxx-Gyy)^2 + 4*Gxy^2) / (Gxx+Gyy), which equals the
    eigenvalue contrast (l1-l2)/(l1+l2) of the 2x2 structure tensor; 0 for
    zero-gradient blocks.
    """
    base = block_orientation(img, grid)
    gxx, gyy, gxy = _structure_sums(img, grid)
    trace = gxx + gyy
    num = np.sqrt((gxx - gyy) ** 2 + 4.0 * gxy ** 2)
    coh = np.where(trace > 0, num / np.where(trace > 0, trace, 1.0), 0.0)
    coh = np.clip(coh, 0.0, 1.0)
    coh[~grid.foreground] = 0.0
    return OrientationField(theta=base.theta, coherence=coh, valid=base.valid)


def _block_signature(px, grid, r, c, theta):
    """Project block pixels onto the oscillation axis (angle theta).

    Returns (signature, u) where signature[i] is the mean intensity of the
    pixels whose projection rounds to offset u[i]; u is strictly increasing
    with unit steps between populated bins (empty bins are dropped).
    """
    y0, y1, x0, x1 = grid.block_bounds(r, c)
    blk = px[y0:y1, x0:x1]
    h, w = blk.shape
    yy, xx = np.mgrid[0:h, 0:w]
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    u = (xx - cx) * math.cos(theta) + (yy - cy) * math.sin(theta)
    bins = np.floor(u + 0.5).astype(int)  # rint would merge half-integer bins
    bins -= bins.min()
    counts = np.bincount(bins.ravel())
    sums = np.bincount(bins.ravel(), weights=blk.ravel())
    keep = counts > 0
    sig = sums[keep] / counts[keep]
    upos = np.nonzero(keep)[0].astype(float)
    return sig, upos, u, blk


def _zero_crossings(d):
    """Linearly interpolated zero-crossing positions of a 1-D signal."""
    s = np.sign(d)
    # treat exact zeros as carrying the previous sign so a touch is one crossing
    for i in range(1, len(s)):
        if s[i] == 0:
            s[i] = s[i - 1]
    if len(s) and s[0] == 0:
        nz = np.nonzero(s)[0]
        s[0] = s[nz[0]] if nz.size else 1
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    return idx + d[idx] / (d[idx] - d[idx + 1])


def sinusoid_params(img, grid, fld: OrientationField) -> RidgeStats:
    """Amplitude, frequency and residual variance of the per-block ridge wave.

    The block is collapsed to a 1-D signature along the oscillation axis.
    Frequency comes from interpolated zero crossings of the mean-removed,
    lightly smoothed signature (crossing count / (2 * signature span) when
    fewer than two crossings exist). Amplitude is half the signature
    peak-to-peak range. Variance is the mean squared residual of the block
    pixels from the best same-frequency sinusoid, fit by least squares.
    Blocks with signatures shorter than 4 samples are marked invalid (NaN).
    """
    px = img.pixels.astype(np.float64)
    amp = _nan_grid(grid)
    freq = _nan_grid(grid)
    var = _nan_grid(grid)
    for r, c in zip(*np.nonzero(fld.valid)):
        sig, upos, u, blk = _block_signature(px, grid, r, c, fld.theta[r, c])
        if len(sig) < 4:
            continue
        smooth = ndi.uniform_filter1d(sig, 3, mode="nearest")
        a = (sig.max() - sig.min()) / 2.0
        # midpoint level: the plain mean is biased over a fractional number
        # of periods, which skews the crossing spacing
        level = (smooth.max() + smooth.min()) / 2.0
        cross = _zero_crossings(smooth - level)
        if len(cross) >= 2:
            # populated bins are unit-spaced, so index spacing is pixel spacing
            f = (len(cross) - 1) / (2.0 * (cross[-1] - cross[0]))
        elif len(cross) == 1:
            f = 1.0 / (2.0 * (upos[-1] - upos[0] + 1.0))
        else:
            f = 0.0
        amp[r, c] = a
        freq[r, c] = f
        var[r, c] = _sinusoid_residual(blk, u, f)
    return RidgeStats(amplitude=amp, frequency=freq, variance=var,
                      ridge_thickness=_nan_grid(grid),
                      valley_thickness=_nan_grid(grid),
                      rv_ratio=_nan_grid(grid))


def _sinusoid_residual(blk, u, f):
    """Mean squared residual of block pixels from c + a*cos + b*sin at freq f."""
    z = blk.ravel()
    if f <= 0:
        return float(np.mean((z - z.mean()) ** 2))
    w = 2.0 * math.pi * f * u.ravel()
    design = np.column_stack([np.ones_like(w), np.cos(w), np.sin(w)])
    coef, *_ = np.linalg.lstsq(design, z, rcond=None)
    resid = z - design @ coef
    return float(np.mean(resid ** 2))


def ridge_valley_stats(img, grid, fld: OrientationField) -> RidgeStats:
    """Mean ridge/valley run lengths of the mean-binarized signature.

    Pixels below the signature mean count as ridge (dark ink), above as
    valley. Blocks whose signature never crosses its mean (all-ridge or
    all-valley) are invalid.
    """
    px = img.pixels.astype(np.float64)
    rt = _nan_grid(grid)
    vt = _nan_grid(grid)
    rv = _nan_grid(grid)
    for r, c in zip(*np.nonzero(fld.valid)):
        sig, upos, _, _ = _block_signature(px, grid, r, c, fld.theta[r, c])
        if len(sig) < 4:
            continue
        smooth = ndi.uniform_filter1d(sig, 3, mode="nearest")
        below = smooth < smooth.mean()
        runs = _labeled_runs(below)
        if len(runs) >= 4:
            runs = runs[1:-1]   # first/last runs are clipped by the block edge
        ridge_runs = [n for is_ridge, n in runs if is_ridge]
        valley_runs = [n for is_ridge, n in runs if not is_ridge]
        if not ridge_runs or not valley_runs:
            continue
        rt[r, c] = float(np.mean(ridge_runs))
        vt[r, c] = float(np.mean(valley_runs))
        rv[r, c] = rt[r, c] / vt[r, c]
    return RidgeStats(amplitude=_nan_grid(grid), frequency=_nan_grid(grid),
                      variance=_nan_grid(grid), ridge_thickness=rt,
                      valley_thickness=vt, rv_ratio=rv)


def _labeled_runs(mask):
    """Consecutive (value, length) runs of a boolean sequence."""
    runs = []
    for v in mask:
        if runs and runs[-1][0] == bool(v):
            runs[-1][1] += 1
        else:
            runs.append([bool(v), 1])
    return [(v, n) for v, n in runs]


def compute_ridge_stats(img, grid, fld: OrientationField) -> RidgeStats:
    """Sinusoid parameters and run-length statistics combined."""
    wave = sinusoid_params(img, grid, fld)
    runs = ridge_valley_stats(img, grid, fld)
    return RidgeStats(amplitude=wave.amplitude, frequency=wave.frequency,
                      variance=wave.variance,
                      ridge_thickness=runs.ridge_thickness,
                      valley_thickness=runs.valley_thickness,
                      rv_ratio=runs.rv_ratio)
