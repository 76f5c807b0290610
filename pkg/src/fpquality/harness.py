"""Dataset comparison harness: metric orchestration, score fusion, ranking
into equal-size quality subsets and normalized per-subset statistics."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import classifier, global_metrics, local_metrics, orientation
from .config import QualityConfig
from .image import load_image, prepare_grid
from .local_metrics import QualityScore

ALL_METRICS = ("Q_M", "Q_C", "Q_S", "Q_F", "Q_N", "QI", "Q_dir", "S_L", "S_GO", "S_GR")


class DataError(Exception):
    """Malformed manifest, score file or other input data."""


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    subject: str
    finger: str
    qm: int | None = None
    scores: classifier.ScoreSet | None = None


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple

    def __post_init__(self):
        paths = [e.path for e in self.entries]
        if len(set(paths)) != len(paths):
            raise DataError("manifest contains duplicate image paths")
        for e in self.entries:
            if e.qm is not None and not 0 <= e.qm <= 9:
                raise DataError(f"manual quality {e.qm} outside 0..9 for {e.path}")


def load_manifest(path) -> DatasetManifest:
    """Read a dataset manifest.

    CSV with header path,subject,finger,qm (qm column optional, blank cells
    allowed) or a JSON list of objects with the same keys plus an optional
    "scores": {"genuine": g, "impostors": [...]}.
    """
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read manifest: {exc}") from exc
    if text.lstrip().startswith("["):
        return _manifest_from_json(text)
    return _manifest_from_csv(text)


def _manifest_from_csv(text) -> DatasetManifest:
    rows = list(csv.DictReader(text.splitlines()))
    if not rows:
        raise DataError("manifest is empty")
    required = {"path", "subject", "finger"}
    if not required <= set(rows[0].keys()):
        raise DataError("manifest CSV needs header path,subject,finger[,qm]")
    entries = []
    for row in rows:
        qm = row.get("qm")
        qm = int(qm) if qm not in (None, "") else None
        entries.append(ManifestEntry(path=row["path"], subject=row["subject"],
                                     finger=row["finger"], qm=qm))
    return DatasetManifest(entries=tuple(entries))


def _manifest_from_json(text) -> DatasetManifest:
    try:
        items = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"bad manifest JSON: {exc}") from exc
    entries = []
    for it in items:
        scores = None
        if "scores" in it and it["scores"] is not None:
            scores = classifier.ScoreSet(genuine=float(it["scores"]["genuine"]),
                                         impostors=tuple(it["scores"]["impostors"]))
        entries.append(ManifestEntry(path=it["path"], subject=str(it["subject"]),
                                     finger=str(it["finger"]),
                                     qm=it.get("qm"), scores=scores))
    return DatasetManifest(entries=tuple(entries))


def combined_quality(s_l, s_go, s_gr, weights=None) -> QualityScore:
    """Q_C: convex combination of S_L, S_GO, S_GR."""
    w = np.asarray(weights if weights is not None else (1 / 3, 1 / 3, 1 / 3),
                   dtype=np.float64)
    if w.shape != (3,) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("weights must be 3 nonnegative values summing to 1")
    vals = [s.value if isinstance(s, QualityScore) else float(s)
            for s in (s_l, s_go, s_gr)]
    return QualityScore("Q_C", float(np.dot(w, vals)))


def compute_metrics(img, metrics, cfg: QualityConfig | None = None,
                    model: classifier.QualityNet | None = None) -> dict:
    """Per-image scores for the requested metric names.

    Shares the block grid, orientation field and ridge statistics across
    metrics. Q_N needs a trained model; Q_M is a manifest label and cannot
    be computed here.
    """
    cfg = cfg or QualityConfig()
    bad = set(metrics) - set(ALL_METRICS)
    if bad:
        raise ValueError(f"unknown metrics: {sorted(bad)}")
    if "Q_M" in metrics:
        raise ValueError("Q_M is an external label, not computable from pixels")
    metrics = set(metrics)
    need_field = metrics & {"Q_S", "S_GO", "S_L", "Q_C", "Q_N"}
    need_stats = metrics & {"S_L", "S_GR", "Q_C", "Q_N"}
    grid = prepare_grid(img, cfg)
    out = {}
    fld = stats = lim = None
    if need_field or need_stats:
        fld = orientation.orientation_coherence(img, grid)
    if need_stats:
        stats = orientation.compute_ridge_stats(img, grid, fld)
    if metrics & {"S_L", "Q_C", "Q_N"}:
        lim = local_metrics.lim_local_score(stats, fld, grid, cfg)
        if "S_L" in metrics:
            out["S_L"] = lim.score.value
    if "Q_S" in metrics:
        out["Q_S"] = local_metrics.chen_local_index(fld, grid).value
    if "QI" in metrics:
        out["QI"] = local_metrics.gabor_quality(img, grid, cfg).score.value
    if "Q_dir" in metrics:
        out["Q_dir"] = local_metrics.directional_quality(img, grid, cfg).score.value
    if metrics & {"S_GO", "Q_C"}:
        s_go = global_metrics.orientation_continuity(fld, grid, cfg)
        if "S_GO" in metrics:
            out["S_GO"] = s_go.value
    if metrics & {"S_GR", "Q_C"}:
        s_gr = global_metrics.ridge_uniformity(stats, cfg)
        if "S_GR" in metrics:
            out["S_GR"] = s_gr.value
    if "Q_C" in metrics:
        out["Q_C"] = combined_quality(lim.score, s_go, s_gr, cfg.qc_weights).value
    if "Q_F" in metrics:
        out["Q_F"] = global_metrics.spectrum_quality(img, cfg=cfg)[0].value
    if "Q_N" in metrics:
        if model is None:
            raise ValueError("Q_N requires a trained model")
        minutiae = classifier.extract_minutiae_lite(img, grid, fld, cfg)
        levels = classifier.block_quality_levels(lim.labels, fld, grid)
        fv = classifier.build_feature_vector(grid, minutiae, levels)
        out["Q_N"] = classifier.predict_quality(model, fv).value
    return out


def rank_and_partition(scores, m: int = 5):
    """Stable ascending sort by score, split into m contiguous groups.

    Ties keep input order. Group sizes are ceil(N/m) or floor(N/m) with the
    larger groups first. Returns a list of m lists of input indices.
    """
    n = len(scores)
    if n < m:
        raise ValueError(f"need at least {m} images, got {n}")
    order = sorted(range(n), key=lambda i: (scores[i], i))
    big = n % m
    size_hi = math.ceil(n / m)
    size_lo = n // m
    subsets, pos = [], 0
    for i in range(m):
        size = size_hi if i < big else size_lo
        subsets.append(order[pos:pos + size])
        pos += size
    return subsets


def subset_mean(values) -> float:
    """Mean score of a subset.

    The multiplicity-weighted sum over distinct values divided by the
    subset size reduces to the plain arithmetic mean.
    """
    values = list(values)
    if not values:
        raise ValueError("empty subset")
    return float(np.mean(values))


def normalize_subsets(means):
    """Map subset means affinely so the first becomes 0 and the last 1.

    Returns (normalized_means, (offset, scale)) where any individual score
    s normalizes as (s - offset) / scale. Raises on a degenerate range.
    """
    means = np.asarray(means, dtype=np.float64)
    lo, hi = means[0], means[-1]
    if hi <= lo:
        raise ValueError("degenerate subset-mean range (last <= first)")
    return (means - lo) / (hi - lo), (float(lo), float(hi - lo))


@dataclass(frozen=True)
class SubsetReport:
    metric: str
    subsets: list            # per subset: list of image paths, ascending score
    raw_means: list
    norm_means: list
    norm_min: list
    norm_max: list
    norm_std: list


def run_comparison(manifest: DatasetManifest, metrics, cfg: QualityConfig | None = None,
                   model: classifier.QualityNet | None = None, subsets: int = 5,
                   workers: int = 1, base_dir: str = "."):
    """Score every image, rank per metric and build subset reports.

    Returns (reports, per_image_scores, errors): reports maps metric ->
    SubsetReport, per_image_scores maps metric -> list of floats in
    manifest order, errors maps metric -> message for metrics that could
    not be evaluated (the rest still run). Deterministic regardless of the
    worker count.
    """
    cfg = cfg or QualityConfig()
    metrics = list(dict.fromkeys(metrics))
    errors = {}
    computable = [m for m in metrics if m != "Q_M"]
    if "Q_N" in computable and model is None:
        errors["Q_N"] = "no model file supplied"
        computable.remove("Q_N")

    per_image = {}
    if computable:
        def work(entry):
            img = load_image(os.path.join(base_dir, entry.path)
                             if not os.path.isabs(entry.path) else entry.path)
            return compute_metrics(img, computable, cfg, model)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(work, manifest.entries))
        else:
            results = [work(e) for e in manifest.entries]
        for k in computable:
            per_image[k] = [res[k] for res in results]

    if "Q_M" in metrics:
        if all(e.qm is not None for e in manifest.entries):
            per_image["Q_M"] = [e.qm / 9.0 for e in manifest.entries]
        else:
            errors["Q_M"] = "manifest has entries without a manual quality label"

    reports = {}
    for k, vals in per_image.items():
        try:
            reports[k] = _build_report(k, vals, manifest, subsets)
        except ValueError as exc:
            errors[k] = str(exc)
    return reports, per_image, errors


def _build_report(metric, vals, manifest, m) -> SubsetReport:
    groups = rank_and_partition(vals, m)
    raw_means = [subset_mean([vals[i] for i in g]) for g in groups]
    norm_means, (off, scale) = normalize_subsets(raw_means)
    norm_min, norm_max, norm_std = [], [], []
    for g in groups:
        nv = (np.array([vals[i] for i in g]) - off) / scale
        norm_min.append(float(nv.min()))
        norm_max.append(float(nv.max()))
        norm_std.append(float(nv.std(ddof=1)) if len(nv) > 1 else 0.0)
    return SubsetReport(metric=metric,
                        subsets=[[manifest.entries[i].path for i in g] for g in groups],
                        raw_means=[float(v) for v in raw_means],
                        norm_means=[float(v) for v in norm_means],
                        norm_min=norm_min, norm_max=norm_max, norm_std=norm_std)


REPORT_SCHEMA_VERSION = 1


def write_reports(outdir, reports, per_image, manifest, cfg: QualityConfig,
                  subsets: int) -> None:
    """Persist report_<metric>.json, scores.csv and subsets.csv.

    Output is byte-deterministic for identical inputs: keys are sorted and
    floats serialized with repr.
    """
    os.makedirs(outdir, exist_ok=True)
    cfg_dict = {k: (list(v) if isinstance(v, tuple) else v)
                for k, v in vars(cfg).items()}
    for k, rep in sorted(reports.items()):
        doc = {"schema_version": REPORT_SCHEMA_VERSION, "metric": k,
               "subset_count": subsets, "config": cfg_dict,
               "raw_means": rep.raw_means, "norm_means": rep.norm_means,
               "norm_min": rep.norm_min, "norm_max": rep.norm_max,
               "norm_std": rep.norm_std, "subsets": rep.subsets}
        with open(os.path.join(outdir, f"report_{k}.json"), "w") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
            fh.write("\n")
    names = sorted(per_image)
    with open(os.path.join(outdir, "scores.csv"), "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["path"] + names)
        for i, e in enumerate(manifest.entries):
            wr.writerow([e.path] + [repr(per_image[k][i]) for k in names])
    with open(os.path.join(outdir, "subsets.csv"), "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["metric", "subset", "size", "raw_mean", "norm_mean",
                     "norm_min", "norm_max", "norm_std"])
        for k in sorted(reports):
            rep = reports[k]
            for i in range(len(rep.subsets)):
                wr.writerow([k, i + 1, len(rep.subsets[i]), repr(rep.raw_means[i]),
                             repr(rep.norm_means[i]), repr(rep.norm_min[i]),
                             repr(rep.norm_max[i]), repr(rep.norm_std[i])])
