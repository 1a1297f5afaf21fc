"""Synthetic benchmark: a moving bright disk and its simulated event stream.

The benchmark scene is a white disk on a black background translating by a
fixed step between frames.  The blurry observation is the mean of the sharp
frames; the middle sharp frame is the ground-truth the reconstruction is
scored against.  Events are generated with the standard threshold model: per
pixel, a reference intensity emits an event whenever the log ratio of current
to reference intensity crosses the contrast threshold, and the reference
jumps by one threshold per event.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .events import EventStream, FrameSequence
from .frameio import (quantize_unit, write_event_file, write_manifest,
                      write_pgm)


@dataclass(frozen=True)
class BumpScene:
    """Moving-disk scene parameters.

    With the defaults the disk travels 2 pixels right and 2 down per frame
    over 9 frames of a 64x64 grid; ``start_center`` of ``None`` centers the
    whole motion in the image.
    """

    size: int = 64
    radius: int = 8
    step: tuple[float, float] = (2.0, 2.0)
    num_frames: int = 9
    background: float = 0.0
    foreground: float = 1.0
    frame_interval: float = 0.1
    start_center: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.size < 1 or self.radius <= 0 or self.num_frames < 2:
            raise ValueError("scene dimensions must be positive (>= 2 frames)")
        if self.frame_interval <= 0:
            raise ValueError("frame interval must be positive")
        if self.background < 0 or self.foreground <= self.background:
            raise ValueError("need 0 <= background < foreground")

    def centers(self) -> np.ndarray:
        """(num_frames, 2) array of (cx, cy) disk centers."""
        step = np.asarray(self.step, dtype=np.float64)
        if self.start_center is None:
            span = (self.num_frames - 1) * step
            start = np.array([self.size / 2.0, self.size / 2.0]) - span / 2.0
        else:
            start = np.asarray(self.start_center, dtype=np.float64)
        return start[None, :] + np.arange(self.num_frames)[:, None] * step[None, :]


@dataclass(frozen=True)
class SimulatorConfig:
    """Threshold-model event simulator settings."""

    threshold: float = 0.2
    substeps: int = 20
    epsilon_log: float = 1e-3

    def __post_init__(self) -> None:
        if self.threshold <= 0:
            raise ValueError("contrast threshold must be positive")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if self.epsilon_log <= 0:
            raise ValueError("epsilon_log must be positive")


@dataclass(frozen=True)
class BumpDataset:
    """Sharp frame sequence plus the derived blurry and baseline frames."""

    sharp: FrameSequence
    blurry: np.ndarray
    baseline: np.ndarray


def disk_frame(size: int, cx: float, cy: float, radius: float,
               background: float, foreground: float) -> np.ndarray:
    """Binary disk image: foreground where (x, y) is within ``radius``."""
    yy, xx = np.mgrid[0:size, 0:size]
    inside = (xx - cx) ** 2 + (yy - cy) ** 2 <= radius ** 2
    return np.where(inside, float(foreground), float(background))


def generate_bump_sequence(scene: BumpScene) -> BumpDataset:
    """Render the sharp frames, their mean (blurry), and the middle frame.

    Raises if the disk would leave the image in any frame.
    """
    centers = scene.centers()
    lo = centers.min(axis=0) - scene.radius
    hi = centers.max(axis=0) + scene.radius
    if np.any(lo < 0) or np.any(hi > scene.size - 1):
        raise ValueError("disk leaves the frame; shrink radius, step, or count")
    frames = np.stack([
        disk_frame(scene.size, cx, cy, scene.radius, scene.background,
                   scene.foreground)
        for cx, cy in centers
    ])
    times = np.arange(scene.num_frames) * scene.frame_interval
    exposures = np.full(scene.num_frames, scene.frame_interval)
    sharp = FrameSequence(frames=frames, times=times, exposures=exposures)
    blurry = frames.mean(axis=0)
    baseline = frames[(scene.num_frames - 1) // 2]
    return BumpDataset(sharp=sharp, blurry=blurry, baseline=baseline)


def model_frames(dataset: BumpDataset) -> FrameSequence:
    """Three-frame deblurring input built from a bump dataset.

    The middle slot holds the blurry frame with an exposure spanning the full
    sharp sequence; its neighbors are the sharp frames one step on either
    side of the baseline frame, each with a single inter-frame gap as
    exposure.
    """
    n = dataset.sharp.n_frames
    if n < 3 or n % 2 == 0:
        raise ValueError("model frames need an odd sharp-frame count >= 3")
    times = dataset.sharp.times
    mid = (n - 1) // 2
    left, right = mid - 1, mid + 1
    frames = np.stack([dataset.sharp.frames[left], dataset.blurry,
                       dataset.sharp.frames[right]])
    ref_times = np.array([times[left], times[mid], times[right]])
    span = float(times[-1] - times[0])
    gap_left = float(times[left + 1] - times[left])
    gap_right = float(times[right] - times[right - 1])
    exposures = np.array([gap_left, span, gap_right])
    return FrameSequence(frames=frames, times=ref_times, exposures=exposures)


def simulate_events(frames: np.ndarray, times: np.ndarray,
                    config: SimulatorConfig | None = None) -> EventStream:
    """Run the threshold event model over a linearly interpolated sequence.

    Between consecutive frames the intensity is interpolated at
    ``config.substeps`` evenly spaced times (and floored at
    ``config.epsilon_log`` before taking logs).  At each substep a pixel
    emits one event per full threshold crossing of ``log(q / q_ref)``, with
    the reference scaled by ``exp(+-threshold)`` per event; all events of a
    substep share its timestamp.  Pixel order within a substep is row-major,
    so the output is deterministic.
    """
    cfg = config or SimulatorConfig()
    stack = np.asarray(frames, dtype=np.float64)
    t = np.asarray(times, dtype=np.float64)
    if stack.ndim != 3 or stack.shape[0] < 2:
        raise ValueError("need a (n, n_y, n_x) stack of at least 2 frames")
    if t.shape != (stack.shape[0],) or np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing, one per frame")
    if np.any(stack < 0):
        raise ValueError("intensities must be non-negative")
    n_y, n_x = stack.shape[1:]
    c = cfg.threshold
    log_ref = np.log(np.maximum(stack[0], cfg.epsilon_log))

    ts: list[np.ndarray] = []
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    ps: list[np.ndarray] = []
    for j in range(1, stack.shape[0]):
        for s in range(1, cfg.substeps + 1):
            frac = s / cfg.substeps
            q = stack[j - 1] + frac * (stack[j] - stack[j - 1])
            t_cur = t[j - 1] + frac * (t[j] - t[j - 1])
            diff = np.log(np.maximum(q, cfg.epsilon_log)) - log_ref
            counts = np.trunc(diff / c)
            if not np.any(counts):
                continue
            log_ref = log_ref + counts * c
            rows, cols = np.nonzero(counts)
            per_pixel = counts[rows, cols].astype(np.int64)
            reps = np.abs(per_pixel)
            xs.append(np.repeat(cols, reps))
            ys.append(np.repeat(rows, reps))
            ps.append(np.repeat(np.sign(per_pixel), reps))
            ts.append(np.full(int(reps.sum()), t_cur))

    if ts:
        t_all = np.concatenate(ts)
        x_all = np.concatenate(xs)
        y_all = np.concatenate(ys)
        p_all = np.concatenate(ps)
    else:
        t_all = np.zeros(0)
        x_all = np.zeros(0, dtype=np.int64)
        y_all = np.zeros(0, dtype=np.int64)
        p_all = np.zeros(0, dtype=np.int64)
    return EventStream(t=t_all, x=x_all, y=y_all, p=p_all, n_x=n_x, n_y=n_y)


def write_bump_dataset(dataset: BumpDataset, events: EventStream,
                       out_dir: str) -> dict[str, str]:
    """Write the benchmark dataset as PGM frames, an event file, a manifest.

    The manifest describes the three-frame deblurring input (sharp neighbor,
    blurry, sharp neighbor).  Returns the paths of the pieces.  All outputs
    are deterministic byte-for-byte.
    """
    os.makedirs(out_dir, exist_ok=True)
    sharp = dataset.sharp
    sharp_names = []
    for i in range(sharp.n_frames):
        name = f"sharp_{i + 1}.pgm"
        write_pgm(os.path.join(out_dir, name), quantize_unit(sharp.frames[i]))
        sharp_names.append(name)
    write_pgm(os.path.join(out_dir, "blurry.pgm"), quantize_unit(dataset.blurry))
    write_pgm(os.path.join(out_dir, "baseline.pgm"), quantize_unit(dataset.baseline))
    events_path = os.path.join(out_dir, "events.txt")
    write_event_file(events_path, events.t, events.x, events.y, events.p)

    model = model_frames(dataset)
    mid = (sharp.n_frames - 1) // 2
    entries = [
        (sharp_names[mid - 1], float(model.times[0]), float(model.exposures[0])),
        ("blurry.pgm", float(model.times[1]), float(model.exposures[1])),
        (sharp_names[mid + 1], float(model.times[2]), float(model.exposures[2])),
    ]
    manifest_path = os.path.join(out_dir, "manifest.txt")
    write_manifest(manifest_path, entries)
    return {
        "manifest": manifest_path,
        "events": events_path,
        "blurry": os.path.join(out_dir, "blurry.pgm"),
        "baseline": os.path.join(out_dir, "baseline.pgm"),
    }
