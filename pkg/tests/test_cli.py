"""End-to-end tests of the fpq console script via subprocess."""

import json
import subprocess
import sys

import numpy as np
import pytest

from fpquality import SynthSpec, generate_synthetic, save_pgm


def run(*args, cwd=None):
    return subprocess.run(["fpq", *args], capture_output=True, text=True, cwd=cwd)


@pytest.fixture
def image(tmp_path):
    p = tmp_path / "probe.pgm"
    save_pgm(generate_synthetic(SynthSpec(width=96, height=96, period=9,
                                          contrast=200)), p)
    return p


class TestQualityCommand:
    def test_default_metrics(self, image):
        r = run("quality", str(image))
        assert r.returncode == 0
        lines = r.stdout.strip().splitlines()
        assert [ln.split("\t")[0] for ln in lines] == \
            ["S_L", "Q_S", "S_GO", "S_GR", "Q_F", "Q_C"]
        for ln in lines:
            assert 0.0 <= float(ln.split("\t")[1]) <= 1.0

    def test_json_output(self, image):
        r = run("quality", str(image), "--metrics", "Q_S,Q_F", "--json")
        assert r.returncode == 0
        doc = json.loads(r.stdout)
        assert set(doc) == {"Q_S", "Q_F"}

    def test_unknown_metric_usage_error(self, image):
        r = run("quality", str(image), "--metrics", "Q_WRONG")
        assert r.returncode == 1

    def test_qm_rejected(self, image):
        r = run("quality", str(image), "--metrics", "Q_M")
        assert r.returncode == 1

    def test_missing_file_is_usage_error(self, tmp_path):
        r = run("quality", str(tmp_path / "missing.pgm"))
        assert r.returncode == 1

    def test_corrupt_image_is_data_error(self, tmp_path):
        p = tmp_path / "bad.pgm"
        p.write_bytes(b"P5\n96 96\n255\nshort")
        r = run("quality", str(p))
        assert r.returncode == 2
        assert "data error" in r.stderr


class TestSynthCommand:
    def test_generates_set_and_manifest(self, tmp_path):
        spec = tmp_path / "spec.txt"
        spec.write_text("count=4\nwidth=64\nheight=64\nnoise=0,20\n")
        out = tmp_path / "ds"
        r = run("synth", "--spec", str(spec), "--out", str(out))
        assert r.returncode == 0
        assert sorted(p.name for p in out.glob("*.pgm")) == \
            [f"img{i:04d}.pgm" for i in range(4)]
        lines = (out / "manifest.csv").read_text().splitlines()
        assert lines[0] == "path,subject,finger,qm"
        assert len(lines) == 5

    def test_unknown_key_is_data_error(self, tmp_path):
        spec = tmp_path / "spec.txt"
        spec.write_text("counts=4\n")
        r = run("synth", "--spec", str(spec), "--out", str(tmp_path / "o"))
        assert r.returncode == 2

    def test_invalid_value_is_data_error(self, tmp_path):
        spec = tmp_path / "spec.txt"
        spec.write_text("count=2\nperiod=1\n")
        r = run("synth", "--spec", str(spec), "--out", str(tmp_path / "o"))
        assert r.returncode == 2


def make_dataset(tmp_path, n=10):
    out = tmp_path / "ds"
    spec = tmp_path / "spec.txt"
    noises = ",".join(str(8 * i) for i in range(n))
    spec.write_text(f"count={n}\nwidth=96\nheight=96\nnoise={noises}\n")
    r = run("synth", "--spec", str(spec), "--out", str(out))
    assert r.returncode == 0
    return out


class TestCompareCommand:
    def test_full_run(self, tmp_path):
        ds = make_dataset(tmp_path)
        out = tmp_path / "rep"
        r = run("compare", "--manifest", str(ds / "manifest.csv"),
                "--metrics", "Q_S,Q_F", "--out", str(out))
        assert r.returncode == 0
        assert (out / "report_Q_S.json").exists()
        assert (out / "scores.csv").exists()
        assert (out / "subsets.csv").exists()

    def test_worker_count_does_not_change_bytes(self, tmp_path):
        ds = make_dataset(tmp_path)
        o1, o2 = tmp_path / "r1", tmp_path / "r2"
        a = run("compare", "--manifest", str(ds / "manifest.csv"),
                "--metrics", "Q_S,Q_F", "--out", str(o1), "--workers", "1")
        b = run("compare", "--manifest", str(ds / "manifest.csv"),
                "--metrics", "Q_S,Q_F", "--out", str(o2), "--workers", "8")
        assert a.returncode == b.returncode == 0
        for name in ("report_Q_S.json", "report_Q_F.json", "scores.csv",
                     "subsets.csv"):
            assert (o1 / name).read_bytes() == (o2 / name).read_bytes()

    def test_partial_failure_exit_3(self, tmp_path):
        # synth manifests carry no manual labels, so Q_M fails per-metric
        ds = make_dataset(tmp_path)
        r = run("compare", "--manifest", str(ds / "manifest.csv"),
                "--metrics", "Q_M,Q_S", "--out", str(tmp_path / "rep"))
        assert r.returncode == 3
        assert "Q_M" in r.stderr

    def test_all_failed_exit_2(self, tmp_path):
        ds = make_dataset(tmp_path)
        r = run("compare", "--manifest", str(ds / "manifest.csv"),
                "--metrics", "Q_M", "--out", str(tmp_path / "rep"))
        assert r.returncode == 2

    def test_bad_metric_exit_1(self, tmp_path):
        ds = make_dataset(tmp_path)
        r = run("compare", "--manifest", str(ds / "manifest.csv"),
                "--metrics", "BOGUS", "--out", str(tmp_path / "rep"))
        assert r.returncode == 1


class TestTrainCommand:
    def test_train_then_score_qn(self, tmp_path):
        ds = make_dataset(tmp_path, n=12)
        rng = np.random.default_rng(0)
        score_map = {}
        for i in range(12):
            g = max(0.05, 0.95 - 0.07 * i)
            score_map[f"img{i:04d}.pgm"] = {
                "genuine": g,
                "impostors": list(rng.uniform(0.0, 0.3, 8)),
            }
        scores = tmp_path / "scores.json"
        scores.write_text(json.dumps(score_map))
        model = tmp_path / "model.fpqn"
        r = run("train", "--manifest", str(ds / "manifest.csv"),
                "--scores", str(scores), "--out", str(model),
                "--epochs", "300")
        assert r.returncode == 0, r.stderr
        assert model.read_bytes()[:5] == b"FPQN1"
        q = run("quality", str(ds / "img0000.pgm"), "--metrics", "Q_N",
                "--model", str(model))
        assert q.returncode == 0
        val = float(q.stdout.split("\t")[1])
        assert val in {0.2, 0.4, 0.6, 0.8, 1.0}

    def test_missing_score_set_exit_2(self, tmp_path):
        ds = make_dataset(tmp_path, n=5)
        scores = tmp_path / "scores.json"
        scores.write_text("{}")
        r = run("train", "--manifest", str(ds / "manifest.csv"),
                "--scores", str(scores), "--out", str(tmp_path / "m.fpqn"))
        assert r.returncode == 2


class TestTopLevel:
    def test_no_args_usage_error(self):
        r = run()
        assert r.returncode == 1

    def test_help_exits_zero(self):
        r = run("--help")
        assert r.returncode == 0
        for cmd in ("quality", "compare", "train", "synth"):
            assert cmd in r.stdout
