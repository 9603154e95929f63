import filecmp
import os
import subprocess
import sys

import pytest

from leftluggage import pnm
from leftluggage.cascade import FEATURE_DIM, load_model
from leftluggage.cli import main

SMALL_SCENE = """\
scene width=120 height=90 duration=160 noise=2 seed=3 background=station
object bag kind=luggage template=builtin:suitcase
waypoint bag 10 0 60
waypoint bag 40 50 60
waypoint bag 159 50 60
abandon bag 40
"""


@pytest.fixture
def scene_dir(tmp_path):
    script = tmp_path / "scene.txt"
    script.write_text(SMALL_SCENE)
    out = tmp_path / "frames"
    assert main(["synth", "--script", str(script), "--out", str(out), "--truth", str(tmp_path / "truth.txt")]) == 0
    return out


def test_print_config(capsys):
    assert main(["run", "--print-config", "--set", "sod.min_area=12"]) == 0
    out = capsys.readouterr().out
    assert "bg.alpha = 0.002" in out and "sod.min_area = 12" in out


def test_bad_config_exit_code(tmp_path, capsys):
    assert main(["run", "--oracle", "--input", str(tmp_path), "--set", "bg.alpha=7"]) == 3
    (tmp_path / "c.conf").write_text("what is this\n")
    assert main(["run", "--oracle", "--input", str(tmp_path), "--config", str(tmp_path / "c.conf")]) == 3
    assert "leftluggage:" in capsys.readouterr().err


def test_missing_model_exit_code(tmp_path, capsys):
    code = main(["run", "--input", str(tmp_path), "--stage1", str(tmp_path / "a.json"), "--stage2", str(tmp_path / "b.json")])
    assert code == 4
    assert "cannot load model" in capsys.readouterr().err
    assert main(["run", "--input", str(tmp_path)]) == 4


def test_bad_input_exit_code(tmp_path):
    assert main(["run", "--oracle", "--input", str(tmp_path / "missing")]) == 2
    assert main(["run", "--oracle", "--input", str(tmp_path)]) == 2  # no frames
    (tmp_path / "000000.ppm").write_bytes(b"P6\n4 4\n255\n" + bytes(10))
    assert main(["run", "--oracle", "--input", str(tmp_path)]) == 2


def test_empty_scene_gives_empty_detections(tmp_path):
    script = tmp_path / "empty.txt"
    script.write_text("scene width=64 height=48 duration=40 noise=3 background=100\n")
    assert main(["synth", "--script", str(script), "--out", str(tmp_path / "f")]) == 0
    assert len(os.listdir(tmp_path / "f")) == 40
    out = tmp_path / "dets.txt"
    assert main(["run", "--oracle", "--input", str(tmp_path / "f"), "--output", str(out)]) == 0
    assert out.read_text() == ""


def test_run_eval_and_overlays(scene_dir, tmp_path, capsys):
    dets = tmp_path / "dets.txt"
    args = ["run", "--oracle", "--input", str(scene_dir), "--output", str(dets), "--overlay-dir", str(tmp_path / "ov")]
    assert main(args) == 0
    assert dets.read_text().strip()
    assert len(os.listdir(tmp_path / "ov")) == 160
    first = pnm.load(tmp_path / "ov" / "000000.ppm")
    assert first.shape == (90, 120, 3)
    capsys.readouterr()
    assert main(["eval", "--detections", str(dets), "--annotations", str(tmp_path / "truth.txt"),
                 "--frames", "160", "--grace", "60"]) == 0
    report = capsys.readouterr().out
    assert report.startswith("level") and "frame" in report and "pixel" in report


def test_eval_missing_annotations(tmp_path):
    (tmp_path / "d.txt").write_text("")
    assert main(["eval", "--detections", str(tmp_path / "d.txt"), "--annotations", str(tmp_path / "nope"),
                 "--frames", "5"]) == 2


def test_reruns_are_byte_identical(scene_dir, tmp_path):
    for name in ("a.txt", "b.txt"):
        assert main(["run", "--oracle", "--input", str(scene_dir), "--output", str(tmp_path / name)]) == 0
    assert filecmp.cmp(tmp_path / "a.txt", tmp_path / "b.txt", shallow=False)


def test_stdin_stream_matches_directory(scene_dir, tmp_path):
    assert main(["run", "--oracle", "--input", str(scene_dir), "--output", str(tmp_path / "dir.txt")]) == 0
    stream = b"".join((scene_dir / n).read_bytes() for n in sorted(os.listdir(scene_dir)))
    proc = subprocess.run(
        [sys.executable, "-m", "leftluggage", "run", "--oracle", "--input", "-"],
        input=stream, capture_output=True, check=True,
    )
    assert proc.stdout.decode() == (tmp_path / "dir.txt").read_text()


def test_gen_samples_and_train(tmp_path, capsys):
    for d in ("s1", "s2"):
        assert main(["gen-samples", "--background", "station", "--n-pos", "20", "--n-neg", "20",
                     "--seed", "4", "--out", str(tmp_path / d)]) == 0
    assert filecmp.dircmp(tmp_path / "s1", tmp_path / "s2").diff_files == []
    for m in ("m1.json", "m2.json"):
        assert main(["train", "--samples", str(tmp_path / "s1"), "--out", str(tmp_path / m), "--epochs", "3"]) == 0
    assert filecmp.cmp(tmp_path / "m1.json", tmp_path / "m2.json", shallow=False)
    assert load_model(tmp_path / "m1.json").input_dim == FEATURE_DIM
    assert "held-out accuracy" in capsys.readouterr().out


def test_gen_samples_stage2_with_template_files(tmp_path):
    from leftluggage import synth

    synth.suitcase().save(tmp_path / "bag.pam")
    synth.attended_templates()[0].save(tmp_path / "att.pam")
    assert main(["gen-samples", "--background", "station", "--stage", "stage2", "--size", "72x36",
                 "--luggage", str(tmp_path / "bag.pam"), "--attended", str(tmp_path / "att.pam"),
                 "--n-pos", "3", "--n-neg", "3", "--out", str(tmp_path / "s")]) == 0
    assert len((tmp_path / "s" / "manifest.txt").read_text().splitlines()) == 6


def test_gen_samples_oversized_request(tmp_path):
    assert main(["gen-samples", "--background", "station", "--size", "999x10", "--out", str(tmp_path / "s")]) == 3


def test_bench_reports(capsys):
    assert main(["bench", "--frames", "20", "--min-fps", "0"]) == 0
    assert "frames/second" in capsys.readouterr().out
