"""Classifier-based quality: minutiae features, separation target and a
small trainable network producing the discrete five-level score."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.ndimage as ndi
from skimage.morphology import skeletonize

from .config import QualityConfig
from .local_metrics import BAD, BLANK, GOOD, UNDETERMINED, QualityScore

MINUTIA_Q_THRESHOLDS = (0.5, 0.6, 0.75, 0.8, 0.9)
MODEL_MAGIC = b"FPQN1"


@dataclass(frozen=True)
class Minutia:
    x: int
    y: int
    kind: str          # "ending" or "bifurcation"
    quality: float

    def __post_init__(self):
        if not (0.0 <= self.quality <= 1.0):
            raise ValueError("minutia quality outside [0, 1]")


def _crossing_number(skel: np.ndarray) -> np.ndarray:
    """Half the 0->1 transitions around each skeleton pixel's 8-ring."""
    p = np.pad(skel.astype(np.int32), 1)
    # ring order: clockwise starting east
    ring = [p[1:-1, 2:], p[2:, 2:], p[2:, 1:-1], p[2:, :-2],
            p[1:-1, :-2], p[:-2, :-2], p[:-2, 1:-1], p[:-2, 2:]]
    cn = np.zeros(skel.shape, dtype=int)
    for i in range(8):
        cn += np.abs(ring[i] - ring[(i + 1) % 8])
    return cn // 2


def _prune_spurs(skel: np.ndarray, max_len: int) -> np.ndarray:
    """Remove skeleton branches shorter than max_len hanging off junctions."""
    skel = skel.copy()
    for _ in range(2):
        cn = _crossing_number(skel)
        endpoints = list(zip(*np.nonzero(skel & (cn == 1))))
        removed = False
        for ey, ex in endpoints:
            path = [(ey, ex)]
            py, px = -1, -1
            cy, cx = ey, ex
            for _ in range(max_len):
                nbrs = [(cy + dy, cx + dx)
                        for dy in (-1, 0, 1) for dx in (-1, 0, 1)
                        if (dy or dx)
                        and 0 <= cy + dy < skel.shape[0]
                        and 0 <= cx + dx < skel.shape[1]
                        and skel[cy + dy, cx + dx]
                        and (cy + dy, cx + dx) != (py, px)
                        and (cy + dy, cx + dx) not in path]
                if len(nbrs) != 1:
                    break
                py, px = cy, cx
                cy, cx = nbrs[0]
                if _crossing_number(skel)[cy, cx] >= 3:
                    for qy, qx in path:
                        skel[qy, qx] = False
                    removed = True
                    break
                path.append((cy, cx))
        if not removed:
            break
    return skel


def extract_minutiae_lite(img, grid, fld, cfg: QualityConfig | None = None):
    """Endings and bifurcations from a thinned binary ridge map.

    Foreground blocks are binarized at their own mean (dark pixels are
    ridge), the ridge map is thinned to a 1-px skeleton, and skeleton
    pixels are classified by crossing number (1 -> ending, >= 3 ->
    bifurcation). Short spurs and detections near the foreground boundary
    are discarded. Minutia quality is the block coherence scaled by a local
    contrast factor (block std / 64, clamped to 1).
    """
    cfg = cfg or QualityConfig()
    if grid.foreground is None or not grid.foreground.any():
        raise ValueError("no foreground blocks")
    px = img.pixels.astype(np.float64)
    ridge = np.zeros(px.shape, dtype=bool)
    fg_mask = np.zeros(px.shape, dtype=bool)
    stds = np.zeros((grid.rows, grid.cols))
    for r, c in zip(*np.nonzero(grid.foreground)):
        y0, y1, x0, x1 = grid.block_bounds(r, c)
        blk = px[y0:y1, x0:x1]
        ridge[y0:y1, x0:x1] = blk < blk.mean()
        fg_mask[y0:y1, x0:x1] = True
        stds[r, c] = blk.std()
    skel = skeletonize(ridge)
    skel = _prune_spurs(skel, cfg.minutiae_spur_len)
    cn = _crossing_number(skel)
    border_dist = ndi.distance_transform_edt(fg_mask)
    b = grid.block_size
    out = []
    for y, x in zip(*np.nonzero(skel & ((cn == 1) | (cn >= 3)))):
        if border_dist[y, x] < cfg.minutiae_border_px:
            continue
        r, c = y // b, x // b
        if not grid.foreground[r, c]:
            continue
        contrast = min(1.0, stds[r, c] / 64.0)
        q = float(fld.coherence[r, c]) * contrast
        kind = "ending" if cn[y, x] == 1 else "bifurcation"
        out.append(Minutia(x=int(x), y=int(y), kind=kind,
                           quality=min(1.0, max(0.0, q))))
    return out


@dataclass(frozen=True)
class FeatureVector:
    """11 numbers: foreground block count, minutiae count, five strict
    quality-threshold counts and four block-quality-level fractions."""

    foreground: int
    minutiae: int
    q_above: tuple[int, int, int, int, int]
    block_q_pct: tuple[float, float, float, float]

    def __post_init__(self):
        if any(a < b for a, b in zip(self.q_above, self.q_above[1:])):
            raise ValueError("q_above counts must be non-increasing")
        if any(not 0 <= p <= 1 for p in self.block_q_pct) or sum(self.block_q_pct) > 1 + 1e-9:
            raise ValueError("block_q_pct entries in [0,1] with sum <= 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.foreground, self.minutiae, *self.q_above,
                         *self.block_q_pct], dtype=np.float64)


def block_quality_levels(lim_labels, fld, grid) -> np.ndarray:
    """Quantize block labels into levels 1..4 (0 for background).

    bad -> 1, undetermined -> 2, good with coherence < 0.7 -> 3, good with
    coherence >= 0.7 -> 4.
    """
    levels = np.zeros(lim_labels.shape, dtype=int)
    levels[lim_labels == BAD] = 1
    levels[lim_labels == UNDETERMINED] = 2
    good = lim_labels == GOOD
    levels[good & (fld.coherence < 0.7)] = 3
    levels[good & (fld.coherence >= 0.7)] = 4
    return levels


def build_feature_vector(grid, minutiae, levels) -> FeatureVector:
    """Assemble the 11-feature vector; threshold counting is strict (>)."""
    n_fg = int(grid.foreground.sum()) if grid.foreground is not None else 0
    quals = np.array([m.quality for m in minutiae]) if minutiae else np.empty(0)
    q_above = tuple(int((quals > t).sum()) for t in MINUTIA_Q_THRESHOLDS)
    if n_fg:
        pct = tuple(float((levels == lv).sum()) / n_fg for lv in (1, 2, 3, 4))
    else:
        pct = (0.0, 0.0, 0.0, 0.0)
    return FeatureVector(foreground=n_fg, minutiae=len(minutiae),
                         q_above=q_above, block_q_pct=pct)


@dataclass(frozen=True)
class ScoreSet:
    """One genuine similarity score and the impostor scores against it."""

    genuine: float
    impostors: tuple

    def __post_init__(self):
        if len(self.impostors) < 2:
            raise ValueError("need at least 2 impostor scores")


def target_separation(scores: ScoreSet) -> float:
    """Normalized distance of the genuine score from the impostor
    distribution: (s_m - mean(impostors)) / std(impostors), sample std."""
    imp = np.asarray(scores.impostors, dtype=np.float64)
    sd = float(imp.std(ddof=1))
    if sd <= 0:
        raise ValueError("impostor scores have zero spread")
    return (float(scores.genuine) - float(imp.mean())) / sd


class QualityNet:
    """Fully connected tanh network mapping the 11 features to a predicted
    separation. Inputs are z-scored with statistics stored on the model;
    bin edges discretize the prediction into levels 1..5."""

    def __init__(self, layer_sizes=(11, 16, 8, 1), seed: int = 0):
        if layer_sizes[0] != 11 or layer_sizes[-1] != 1:
            raise ValueError("network must map 11 inputs to 1 output")
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        rng = np.random.default_rng(seed)
        self.weights = [rng.uniform(-0.5, 0.5, (a, b))
                        for a, b in zip(self.layer_sizes, self.layer_sizes[1:])]
        self.biases = [rng.uniform(-0.5, 0.5, b) for b in self.layer_sizes[1:]]
        self.feat_mean = np.zeros(11)
        self.feat_std = np.ones(11)
        self.bin_edges = np.array([-2.0, 0.0, 2.0, 4.0])

    # -- forward / training ------------------------------------------------

    def _forward(self, x):
        acts = [x]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w + b
            acts.append(z if i == len(self.weights) - 1 else np.tanh(z))
        return acts

    def predict_raw(self, features: np.ndarray) -> np.ndarray:
        """Predicted separation for (n, 11) or (11,) raw feature rows."""
        x = np.atleast_2d(np.asarray(features, dtype=np.float64))
        x = (x - self.feat_mean) / self.feat_std
        return self._forward(x)[-1][:, 0]

    def loss_and_grads(self, x, y):
        """MSE loss and analytic gradients; x is standardized (n, 11)."""
        n = x.shape[0]
        acts = self._forward(x)
        out = acts[-1][:, 0]
        loss = float(np.mean((out - y) ** 2))
        delta = (2.0 / n) * (out - y)[:, None]
        gw, gb = [None] * len(self.weights), [None] * len(self.biases)
        for i in reversed(range(len(self.weights))):
            gw[i] = acts[i].T @ delta
            gb[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (1.0 - acts[i] ** 2)
        return loss, gw, gb


def train_quality_net(dataset, layer_sizes=(11, 16, 8, 1), learning_rate=0.05,
                      epochs=2000, seed=0):
    """Fit a QualityNet to (FeatureVector, target) pairs by full-batch
    gradient descent on MSE. Deterministic for a fixed seed. Returns
    (net, final_loss); bin edges are set to the quintiles of the training
    targets. Raises on fewer than 10 samples, non-finite targets or a
    diverging loss.
    """
    if len(dataset) < 10:
        raise ValueError("need at least 10 training samples")
    x = np.array([fv.as_array() if isinstance(fv, FeatureVector) else np.asarray(fv)
                  for fv, _ in dataset], dtype=np.float64)
    y = np.array([t for _, t in dataset], dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise ValueError("targets must be finite")
    net = QualityNet(layer_sizes, seed=seed)
    net.feat_mean = x.mean(axis=0)
    net.feat_std = x.std(axis=0)
    net.feat_std[net.feat_std == 0] = 1.0
    xs = (x - net.feat_mean) / net.feat_std
    loss = math.inf
    for _ in range(epochs):
        loss, gw, gb = net.loss_and_grads(xs, y)
        if not math.isfinite(loss):
            raise ValueError("training diverged (non-finite loss)")
        for i in range(len(net.weights)):
            net.weights[i] -= learning_rate * gw[i]
            net.biases[i] -= learning_rate * gb[i]
    net.bin_edges = np.quantile(y, [0.2, 0.4, 0.6, 0.8])
    return net, loss


def predict_quality(net: QualityNet, fv, bin_edges=None) -> QualityScore:
    """Discrete quality level 1..5 from the predicted separation.

    level = 1 + number of bin edges below the prediction; value = level/5.
    """
    edges = np.asarray(net.bin_edges if bin_edges is None else bin_edges,
                       dtype=np.float64)
    if len(edges) != 4 or np.any(np.diff(edges) <= 0):
        raise ValueError("need 4 strictly increasing bin edges")
    raw = float(net.predict_raw(fv.as_array() if isinstance(fv, FeatureVector) else fv)[0])
    level = 1 + int((edges < raw).sum())
    return QualityScore("Q_N", level / 5.0, level=level)


# -- persistence -----------------------------------------------------------

def save_model(net: QualityNet, path) -> None:
    """Single-file little-endian format: magic, layer sizes, feature
    statistics, bin edges, then per-layer weights and biases as float64."""
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", len(net.layer_sizes)))
        fh.write(struct.pack(f"<{len(net.layer_sizes)}I", *net.layer_sizes))
        for arr in (net.feat_mean, net.feat_std, net.bin_edges):
            fh.write(np.asarray(arr, dtype="<f8").tobytes())
        for w, b in zip(net.weights, net.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_model(path) -> QualityNet:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:5] != MODEL_MAGIC:
        raise ValueError("not a quality-net model file (bad magic)")
    off = 5
    (n_layers,) = struct.unpack_from("<I", data, off)
    off += 4
    sizes = struct.unpack_from(f"<{n_layers}I", data, off)
    off += 4 * n_layers
    net = QualityNet.__new__(QualityNet)
    net.layer_sizes = tuple(sizes)

    def take(n):
        nonlocal off
        arr = np.frombuffer(data, dtype="<f8", count=n, offset=off).copy()
        off += 8 * n
        return arr

    net.feat_mean = take(11)
    net.feat_std = take(11)
    net.bin_edges = take(4)
    net.weights, net.biases = [], []
    for a, b in zip(sizes, sizes[1:]):
        net.weights.append(take(a * b).reshape(a, b))
        net.biases.append(take(b))
    if off != len(data):
        raise ValueError("model file has trailing or missing bytes")
    return net
