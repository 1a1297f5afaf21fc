"""Input validation helpers shared by the estimator and the CLI."""

from __future__ import annotations

import numpy as np

from .events import EventStream, FrameSequence


def check_positive(name: str, value: float, strict: bool = True) -> float:
    value = float(value)
    if strict and value <= 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    if not strict and value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return value


def check_count(name: str, value: int, minimum: int = 1) -> int:
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_frame_sequence(frames) -> FrameSequence:
    if not isinstance(frames, FrameSequence):
        raise TypeError(
            f"expected a FrameSequence, got {type(frames).__name__}; build one "
            "with evdeblur.events.FrameSequence or frameio.read_manifest"
        )
    return frames


def check_event_stream(events, frames: FrameSequence) -> EventStream:
    if not isinstance(events, EventStream):
        raise TypeError(
            f"expected an EventStream, got {type(events).__name__}; build one "
            "with evdeblur.events.parse_event_file or synth.simulate_events"
        )
    n_rows, n_cols = frames.shape
    if (events.n_x, events.n_y) != (n_cols, n_rows):
        raise ValueError(
            f"event sensor {events.n_x}x{events.n_y} does not match the "
            f"{n_cols}x{n_rows} frames"
        )
    return events


def check_unit_image(name: str, img: np.ndarray) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D image")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"{name} values must lie in [0, 1]")
    return arr
