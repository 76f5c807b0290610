import math

import numpy as np
import pytest

from fpquality import (GrayImage, SynthSpec, generate_synthetic,
                       orientation_continuity, ridge_uniformity,
                       spectrum_quality)
from fpquality.global_metrics import (SpectrumROI, angular_distance,
                                      concentration_index,
                                      write_spectrum_profile)
from fpquality.image import BlockGrid
from fpquality.orientation import OrientationField, RidgeStats


def make_grid(fg, block_size=16):
    rows, cols = fg.shape
    return BlockGrid(block_size=block_size, cols=cols, rows=rows,
                     width=cols * block_size, height=rows * block_size,
                     foreground=fg)


def field_from(theta):
    theta = np.asarray(theta, float)
    return OrientationField(theta=theta, coherence=np.ones_like(theta),
                            valid=np.ones(theta.shape, bool))


def sgo_oracle(theta, fg, scale=math.pi / 4):
    """Exhaustive 4-neighbor pair enumeration."""
    rows, cols = theta.shape
    deltas = []
    for r in range(rows):
        for c in range(cols):
            if not fg[r, c]:
                continue
            for dr, dc in ((0, 1), (1, 0)):
                rr, cc = r + dr, c + dc
                if rr < rows and cc < cols and fg[rr, cc]:
                    d = abs(theta[r, c] - theta[rr, cc]) % math.pi
                    deltas.append(min(d, math.pi - d))
    raw = sum(deltas) / len(deltas)
    return max(0.0, 1.0 - raw / scale)


class TestOrientationContinuity:
    def test_constant_field(self):
        fg = np.ones((3, 3), bool)
        s = orientation_continuity(field_from(np.full((3, 3), 0.7)), make_grid(fg))
        assert s.value == 1.0

    def test_checkerboard_clamps_to_zero(self):
        fg = np.ones((4, 4), bool)
        theta = np.indices((4, 4)).sum(axis=0) % 2 * (math.pi / 2)
        s = orientation_continuity(field_from(theta), make_grid(fg))
        assert s.value == 0.0

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            fg = rng.random((5, 6)) < 0.8
            fg[0, 0] = fg[0, 1] = True
            theta = rng.uniform(0, math.pi, (5, 6))
            s = orientation_continuity(field_from(theta), make_grid(fg))
            assert s.value == pytest.approx(sgo_oracle(theta, fg), abs=1e-12)

    def test_invariant_to_global_rotation(self):
        rng = np.random.default_rng(4)
        fg = np.ones((4, 4), bool)
        theta = rng.uniform(0, math.pi, (4, 4))
        a = orientation_continuity(field_from(theta), make_grid(fg))
        b = orientation_continuity(field_from((theta + 0.9) % math.pi), make_grid(fg))
        assert a.value == pytest.approx(b.value, abs=1e-9)

    def test_isolated_block_errors(self):
        fg = np.zeros((3, 3), bool)
        fg[1, 1] = True
        with pytest.raises(ValueError):
            orientation_continuity(field_from(np.zeros((3, 3))), make_grid(fg))


def stats_with_ratios(ratios):
    n = len(ratios)
    nanarr = np.full((1, n), np.nan)
    return RidgeStats(amplitude=nanarr, frequency=nanarr, variance=nanarr,
                      ridge_thickness=nanarr, valley_thickness=nanarr,
                      rv_ratio=np.asarray(ratios, float).reshape(1, n))


class TestRidgeUniformity:
    def test_identical_ratios(self):
        assert ridge_uniformity(stats_with_ratios([1.2] * 5)).value == 1.0

    def test_two_point_oracle(self):
        s = ridge_uniformity(stats_with_ratios([0.5, 1.5]))
        assert s.value == pytest.approx(math.exp(-math.sqrt(0.5) / 0.5), abs=1e-9)
        assert s.value == pytest.approx(0.2431, abs=1e-3)

    def test_monotone_in_spread(self):
        tight = ridge_uniformity(stats_with_ratios([1, 1, 1, 1.5]))
        loose = ridge_uniformity(stats_with_ratios([1, 1, 1, 5]))
        assert loose.value < tight.value

    def test_too_few_valid(self):
        with pytest.raises(ValueError):
            ridge_uniformity(stats_with_ratios([1.0]))


class TestSpectrumQuality:
    def test_ring_energies_partition_roi(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            img = GrayImage(rng.integers(0, 256, (64, 64)).astype(np.uint8))
            _, roi = spectrum_quality(img)
            px = img.pixels.astype(float)
            px -= px.mean()
            win = np.outer(np.hanning(64), np.hanning(64))
            power = np.abs(np.fft.fft2(px * win)) ** 2
            radius = np.hypot(np.fft.fftfreq(64)[:, None], np.fft.fftfreq(64)[None, :])
            e_roi = power[(radius >= roi.f_min) & (radius <= roi.f_max)].sum()
            assert abs(roi.energies.sum() - e_roi) <= 1e-6 * e_roi

    def test_sinusoid_concentrates_in_its_ring(self):
        roi = SpectrumROI(1 / 25, 1 / 3, 10)
        edges = roi.band_edges()
        fc = (edges[3] + edges[4]) / 2
        img = generate_synthetic(SynthSpec(width=128, height=128, period=1 / fc,
                                           contrast=200))
        q, out = spectrum_quality(img, roi)
        p = out.energies / out.energies.sum()
        assert p[3] > 0.9
        assert q.value > 0.6

    def test_white_noise_flat_spectrum(self):
        vals = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            img = GrayImage(rng.integers(0, 256, (128, 128)).astype(np.uint8))
            vals.append(spectrum_quality(img)[0].value)
        assert np.median(vals) < 0.1

    def test_rotation_90_invariance(self):
        img = generate_synthetic(SynthSpec(width=128, height=128, period=9,
                                           orientation=0.4))
        a = spectrum_quality(img)[0].value
        b = spectrum_quality(GrayImage(np.rot90(img.pixels).copy()))[0].value
        assert abs(a - b) < 1e-6

    def test_too_small_image(self):
        with pytest.raises(ValueError):
            spectrum_quality(GrayImage(np.zeros((16, 16), np.uint8)))

    def test_roi_validation(self):
        with pytest.raises(ValueError):
            SpectrumROI(0.4, 0.3, 10)
        with pytest.raises(ValueError):
            SpectrumROI(0.1, 0.3, 1)


class TestConcentration:
    def test_point_mass_is_one(self):
        assert concentration_index([0, 0, 1, 0, 0]) == 1.0

    def test_uniform_is_zero(self):
        assert concentration_index([0.25] * 4) == pytest.approx(0.0, abs=1e-12)

    def test_profile_csv(self, tmp_path):
        img = generate_synthetic(SynthSpec(width=64, height=64, period=9))
        _, roi = spectrum_quality(img)
        path = tmp_path / "profile.csv"
        write_spectrum_profile(roi, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "band,f_low,f_high,energy,p"
        assert len(lines) == 1 + roi.bands
        ps = [float(ln.split(",")[4]) for ln in lines[1:]]
        assert sum(ps) == pytest.approx(1.0)


class TestAngularDistance:
    def test_wraps_at_pi(self):
        assert angular_distance(0.05, math.pi - 0.05) == pytest.approx(0.1)

    def test_max_is_half_pi(self):
        assert angular_distance(0.0, math.pi / 2) == pytest.approx(math.pi / 2)
