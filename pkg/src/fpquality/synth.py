"""Deterministic synthetic ridge-pattern generation for tests and benchmarks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.ndimage as ndi

from .image import GrayImage


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic ridge image.

    orientation is the oscillation-axis angle in radians for a straight
    pattern, or the string "whorl" for concentric rings (smoothly varying
    orientation). Noise is additive Gaussian, applied after the blur.
    """

    width: int = 256
    height: int = 256
    period: float = 9.0
    contrast: float = 200.0
    noise: float = 0.0
    blur: float = 0.0
    seed: int = 0
    orientation: float | str = 0.0

    def validate(self):
        if self.width < 8 or self.height < 8:
            raise ValueError("image must be at least 8x8")
        if self.period < 3:
            raise ValueError("period must be >= 3 px")
        if not 0 <= self.contrast <= 255:
            raise ValueError("contrast must be in [0, 255]")
        if self.noise < 0 or self.blur < 0:
            raise ValueError("noise and blur must be nonnegative")


def generate_synthetic(spec: SynthSpec) -> GrayImage:
    """Render I = 128 + (contrast/2) * cos(2*pi*proj/period), blur, add noise.

    proj is the projection onto the oscillation axis for straight patterns,
    or the distance to the image center for "whorl". Deterministic for a
    fixed seed.
    """
    spec.validate()
    yy, xx = np.mgrid[0:spec.height, 0:spec.width].astype(np.float64)
    if spec.orientation == "whorl":
        proj = np.hypot(xx - spec.width / 2.0, yy - spec.height / 2.0)
    else:
        th = float(spec.orientation)
        proj = xx * math.cos(th) + yy * math.sin(th)
    img = 128.0 + (spec.contrast / 2.0) * np.cos(2.0 * math.pi * proj / spec.period)
    if spec.blur > 0:
        img = ndi.gaussian_filter(img, spec.blur)
    if spec.noise > 0:
        rng = np.random.default_rng(spec.seed)
        img = img + rng.normal(0.0, spec.noise, img.shape)
    return GrayImage(pixels=np.clip(np.rint(img), 0, 255).astype(np.uint8))
