"""Command line front end: per-image scoring, dataset comparison, model
training and synthetic set generation.

Exit codes: 0 success, 1 usage error, 2 data error, 3 partial per-metric
failure (some requested metrics could not be evaluated).
"""

from __future__ import annotations

import json
import math
import os
import sys

import click

from . import classifier, harness, synth
from .config import QualityConfig, load_config
from .harness import DataError
from .image import ImageFormatError, load_image, save_pgm


class PartialFailure(Exception):
    pass


def _config_from(config_path, block_size):
    cfg = load_config(config_path) if config_path else QualityConfig()
    if block_size is not None:
        cfg = cfg.replace(block_size=block_size)
    return cfg


@click.group()
def cli():
    """Fingerprint image quality metrics and benchmark harness."""


@cli.command()
@click.argument("image_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--metrics", default="S_L,Q_S,S_GO,S_GR,Q_F,Q_C",
              help="Comma-separated metric names.")
@click.option("--block-size", type=int, default=None)
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of lines.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None,
              help="Trained model file, required for Q_N.")
def quality(image_path, metrics, block_size, as_json, config_path, model_path):
    """Compute quality scores for one image."""
    names = [m.strip() for m in metrics.split(",") if m.strip()]
    bad = set(names) - set(harness.ALL_METRICS)
    if bad or "Q_M" in names:
        raise click.UsageError(f"unknown or non-computable metrics: {sorted(bad) or ['Q_M']}")
    cfg = _config_from(config_path, block_size)
    model = classifier.load_model(model_path) if model_path else None
    try:
        img = load_image(image_path)
        scores = harness.compute_metrics(img, names, cfg, model)
    except (ImageFormatError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    if as_json:
        click.echo(json.dumps({k: scores[k] for k in sorted(scores)}, sort_keys=True))
    else:
        for k in names:
            click.echo(f"{k}\t{scores[k]:.6f}")


@cli.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--metrics", default="Q_C,Q_S,Q_F")
@click.option("--subsets", type=int, default=5, show_default=True)
@click.option("--out", "outdir", required=True, type=click.Path(file_okay=False))
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
def compare(manifest_path, metrics, subsets, outdir, workers, config_path, model_path):
    """Rank a dataset per metric and write subset reports."""
    names = [m.strip() for m in metrics.split(",") if m.strip()]
    bad = set(names) - set(harness.ALL_METRICS)
    if bad:
        raise click.UsageError(f"unknown metrics: {sorted(bad)}")
    if subsets < 2:
        raise click.UsageError("--subsets must be at least 2")
    cfg = _config_from(config_path, None)
    model = classifier.load_model(model_path) if model_path else None
    manifest = harness.load_manifest(manifest_path)
    base_dir = os.path.dirname(os.path.abspath(manifest_path))
    try:
        reports, per_image, errors = harness.run_comparison(
            manifest, names, cfg, model, subsets=subsets, workers=workers,
            base_dir=base_dir)
    except (ImageFormatError, ValueError, OSError) as exc:
        raise DataError(str(exc)) from exc
    harness.write_reports(outdir, reports, per_image, manifest, cfg, subsets)
    for k, msg in sorted(errors.items()):
        click.echo(f"metric {k} failed: {msg}", err=True)
    if errors and not reports:
        raise DataError("no requested metric could be evaluated")
    if errors:
        raise PartialFailure()
    click.echo(f"wrote {len(reports)} report(s) to {outdir}")


@cli.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--scores", "scores_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON: image path -> {genuine, impostors}.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--epochs", type=int, default=2000, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def train(manifest_path, scores_path, out_path, seed, epochs, config_path):
    """Train the classifier-based quality model from matcher score sets."""
    from . import local_metrics, orientation
    from .image import prepare_grid

    cfg = _config_from(config_path, None)
    manifest = harness.load_manifest(manifest_path)
    base_dir = os.path.dirname(os.path.abspath(manifest_path))
    with open(scores_path) as fh:
        try:
            score_map = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"bad scores JSON: {exc}") from exc
    dataset = []
    for e in manifest.entries:
        if e.path not in score_map:
            raise DataError(f"no score set for {e.path}")
        rec = score_map[e.path]
        sset = classifier.ScoreSet(genuine=float(rec["genuine"]),
                                   impostors=tuple(rec["impostors"]))
        target = classifier.target_separation(sset)
        img = load_image(os.path.join(base_dir, e.path)
                         if not os.path.isabs(e.path) else e.path)
        grid = prepare_grid(img, cfg)
        fld = orientation.orientation_coherence(img, grid)
        stats = orientation.compute_ridge_stats(img, grid, fld)
        lim = local_metrics.lim_local_score(stats, fld, grid, cfg)
        minutiae = classifier.extract_minutiae_lite(img, grid, fld, cfg)
        levels = classifier.block_quality_levels(lim.labels, fld, grid)
        fv = classifier.build_feature_vector(grid, minutiae, levels)
        dataset.append((fv, target))
    try:
        net, loss = classifier.train_quality_net(dataset, seed=seed, epochs=epochs)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    classifier.save_model(net, out_path)
    click.echo(f"trained on {len(dataset)} samples, final MSE {loss:.6f}, "
               f"model written to {out_path}")


@cli.command("synth")
@click.option("--spec", "spec_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="key=value file: count, width, height, period, contrast, "
                   "noise (single value or comma ladder), blur, seed, "
                   "orientation (degrees or 'whorl').")
@click.option("--out", "outdir", required=True, type=click.Path(file_okay=False))
def synth_cmd(spec_path, outdir):
    """Generate a deterministic synthetic image set plus manifest.csv."""
    params = {"count": "10", "width": "128", "height": "128", "period": "9",
              "contrast": "200", "noise": "0", "blur": "0", "seed": "0",
              "orientation": "0"}
    with open(spec_path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(f"{spec_path}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in params:
                raise DataError(f"{spec_path}:{lineno}: unknown key {key!r}")
            params[key] = val.strip()
    count = int(params["count"])
    noises = [float(v) for v in params["noise"].split(",")]
    orient = params["orientation"]
    os.makedirs(outdir, exist_ok=True)
    rows = ["path,subject,finger,qm"]
    for i in range(count):
        if orient == "whorl":
            o = "whorl"
        else:
            o = math.radians(float(orient))
        try:
            spec = synth.SynthSpec(width=int(params["width"]),
                                   height=int(params["height"]),
                                   period=float(params["period"]),
                                   contrast=float(params["contrast"]),
                                   noise=noises[i % len(noises)],
                                   blur=float(params["blur"]),
                                   seed=int(params["seed"]) + i,
                                   orientation=o)
            img = synth.generate_synthetic(spec)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
        name = f"img{i:04d}.pgm"
        save_pgm(img, os.path.join(outdir, name))
        rows.append(f"{name},{i},0,")
    with open(os.path.join(outdir, "manifest.csv"), "w") as fh:
        fh.write("\n".join(rows) + "\n")
    click.echo(f"wrote {count} image(s) and manifest.csv to {outdir}")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.exceptions.Abort:
        sys.exit(1)
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(2)
    except PartialFailure:
        sys.exit(3)
    sys.exit(0)


if __name__ == "__main__":
    main()
