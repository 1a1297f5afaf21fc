"""End-to-end command-line runs via ``main(argv)``."""

from __future__ import annotations

import os

import numpy as np
import pytest

from evdeblur.cli import main
from evdeblur.events import standardize_frames
from evdeblur.frameio import quantize_unit, read_manifest, write_pgm

SMALL_SCENE = ["--size", "32", "--radius", "4", "--step", "1", "1",
               "--frames", "5"]


def dir_bytes(root: str) -> dict[str, bytes]:
    """Map of path-relative-to-root to file contents."""
    found: dict[str, bytes] = {}
    for base, _, names in os.walk(root):
        for name in names:
            path = os.path.join(base, name)
            with open(path, "rb") as fh:
                found[os.path.relpath(path, root)] = fh.read()
    return found


def simulate_small(tmp_path, name: str, extra: list[str] | None = None) -> str:
    out = str(tmp_path / name)
    argv = ["simulate", "--out", out] + SMALL_SCENE + (extra or [])
    assert main(argv) == 0
    return out


def events_from_output(capsys) -> int:
    for line in capsys.readouterr().out.splitlines():
        if line.startswith("n_events="):
            return int(line.split("=", 1)[1])
    raise AssertionError("simulate did not report n_events")


def write_constant_dataset(root) -> tuple[str, str]:
    """Two flat frames and an event file holding only comments."""
    root.mkdir()
    write_pgm(str(root / "a.pgm"), np.full((4, 4), 60, dtype=np.uint8))
    write_pgm(str(root / "b.pgm"), np.full((4, 4), 200, dtype=np.uint8))
    manifest = root / "frames.txt"
    manifest.write_text("a.pgm 0.0 0.5\nb.pgm 1.0 0.5\n")
    events = root / "events.txt"
    events.write_text("# no events recorded\n\n# end\n")
    return str(manifest), str(events)


# ---------------------------------------------------------------------------
# simulate


def test_simulate_is_deterministic(tmp_path, capsys):
    first = simulate_small(tmp_path, "one")
    second = simulate_small(tmp_path, "two")
    capsys.readouterr()
    assert dir_bytes(first) == dir_bytes(second)


def test_simulate_threshold_controls_event_count(tmp_path, capsys):
    simulate_small(tmp_path, "coarse", ["--threshold", "0.2"])
    coarse = events_from_output(capsys)
    simulate_small(tmp_path, "fine", ["--threshold", "0.1"])
    fine = events_from_output(capsys)
    assert fine >= 2 * coarse


def test_simulate_out_collides_with_file(tmp_path, capsys):
    blocker = tmp_path / "taken"
    blocker.write_text("")
    rc = main(["simulate", "--out", str(blocker)] + SMALL_SCENE)
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_config_file_and_flag_precedence(tmp_path, capsys):
    simulate_small(tmp_path, "plain_02", ["--threshold", "0.2"])
    plain_02 = events_from_output(capsys)
    simulate_small(tmp_path, "plain_04", ["--threshold", "0.4"])
    plain_04 = events_from_output(capsys)
    assert plain_02 != plain_04

    cfg = tmp_path / "opts.cfg"
    cfg.write_text("# simulator options\nthreshold = 0.4\n")

    out = str(tmp_path / "from_config")
    assert main(["--config", str(cfg), "simulate", "--out", out]
                + SMALL_SCENE) == 0
    assert events_from_output(capsys) == plain_04

    out = str(tmp_path / "flag_wins")
    assert main(["--config", str(cfg), "simulate", "--out", out]
                + SMALL_SCENE + ["--threshold", "0.2"]) == 0
    assert events_from_output(capsys) == plain_02


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "opts.cfg"
    cfg.write_text("velocity = 3\n")
    rc = main(["--config", str(cfg), "simulate", "--out",
               str(tmp_path / "out")] + SMALL_SCENE)
    assert rc == 2
    assert "unknown option 'velocity'" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# deblur


def test_deblur_without_events_passes_frames_through(tmp_path, capsys):
    manifest, events = write_constant_dataset(tmp_path / "data")
    out = tmp_path / "out"
    rc = main(["deblur", "--events", events, "--manifest", manifest,
               "--out", str(out)])
    assert rc == 0
    stdout = capsys.readouterr().out
    assert "pixels_solved=0" in stdout
    assert "pixels_skipped=16" in stdout

    expected = quantize_unit(
        standardize_frames(read_manifest(manifest).frames))
    for i in range(2):
        ref = tmp_path / f"ref_{i}.pgm"
        write_pgm(str(ref), expected[i])
        produced = (out / f"v_{i + 1}.pgm").read_bytes()
        assert produced == ref.read_bytes()

    z_map = np.load(str(out / "z_map.npy"))
    assert z_map.shape == (2, 4, 4)
    assert np.all(z_map == 0.0)


def test_deblur_thread_count_does_not_change_output(tmp_path, capsys):
    data = simulate_small(tmp_path, "data")
    manifest = os.path.join(data, "manifest.txt")
    events = os.path.join(data, "events.txt")
    outs = []
    for threads in ("1", "8"):
        out = str(tmp_path / f"threads_{threads}")
        rc = main(["deblur", "--events", events, "--manifest", manifest,
                   "--out", out, "--threads", threads, "--trace"])
        assert rc == 0
        outs.append(out)
    capsys.readouterr()
    assert dir_bytes(outs[0]) == dir_bytes(outs[1])

    trace = (tmp_path / "threads_1" / "trace.csv").read_text().splitlines()
    assert trace[0] == "pixel_x,pixel_y,iteration,grad_norm,objective"
    assert len(trace) > 1
    first = trace[1].split(",")
    assert len(first) == 5
    assert first[2] == "0"


# ---------------------------------------------------------------------------
# metrics


def test_metrics_reports_and_writes_csv(tmp_path, capsys):
    rng = np.random.default_rng(3)
    a = rng.integers(0, 256, (16, 16)).astype(np.uint8)
    noisy = np.clip(a.astype(int) + rng.integers(-9, 10, a.shape),
                    0, 255).astype(np.uint8)
    ref = tmp_path / "ref.pgm"
    test = tmp_path / "test.pgm"
    write_pgm(str(ref), a)
    write_pgm(str(test), noisy)

    csv_path = tmp_path / "metrics.csv"
    rc = main(["metrics", "--reference", str(ref), "--test", str(test),
               "--csv", str(csv_path)])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    values = dict(line.split("=", 1) for line in lines)
    assert 0.0 < float(values["ssim"]) < 1.0
    assert 20.0 < float(values["psnr"]) < 60.0

    rows = csv_path.read_text().splitlines()
    assert rows[0] == "metric,value"
    assert rows[1] == f"ssim,{float(values['ssim']):.6f}"


def test_metrics_identical_images_report_inf(tmp_path, capsys):
    img = tmp_path / "img.pgm"
    write_pgm(str(img), np.full((8, 8), 77, dtype=np.uint8))
    rc = main(["metrics", "--reference", str(img), "--test", str(img)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "ssim=1.000000" in out
    assert "psnr=inf" in out


def test_metrics_missing_file_is_usage_error(tmp_path, capsys):
    img = tmp_path / "img.pgm"
    write_pgm(str(img), np.zeros((4, 4), dtype=np.uint8))
    rc = main(["metrics", "--reference", str(img),
               "--test", str(tmp_path / "nope.pgm")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# bench


def test_bench_gate_fails_when_oversmoothed(capsys):
    # A huge ridge drives every z toward zero, which cannot reach the
    # quality gate; Newton then converges in a couple of steps per pixel,
    # keeping this run cheap.
    rc = main(["bench", "--lambda1", "1e6", "--threads", "1"])
    assert rc == 1
    out = capsys.readouterr().out
    values = dict(line.split("=", 1) for line in out.splitlines())
    assert float(values["ssim"]) < 0.90
    assert values["bench"].startswith("fail")
    assert float(values["medi_ssim"]) > float(values["ssim"])
