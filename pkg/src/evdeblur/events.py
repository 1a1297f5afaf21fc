"""Event streams, frame sequences, and the compressed event cube.

An event camera reports asynchronous per-pixel brightness changes as tuples
``(t, x, y, p)`` with polarity ``p`` in {-1, +1}.  This module holds the
in-memory containers for event data and conventional frames, plus the
operations that turn a raw stream into the per-pixel quantities the deblurring
solver consumes:

* time compression of the stream into a cube of polarity sums,
* per-pixel cumulative event trajectories over an exposure interval,
* affine standardization of frames into (0, 1) and their log transform.

Arrays are indexed ``[row, column] == [y, x]``; public signatures take pixel
coordinates in ``(x, y)`` order.  All containers are immutable after
construction (their numpy buffers are marked read-only), so they can be shared
freely across worker threads.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np


class EventFileError(ValueError):
    """Raised when an event text file cannot be parsed."""


class Event(NamedTuple):
    """A single camera event: timestamp (seconds), pixel, polarity (+-1)."""

    t: float
    x: int
    y: int
    p: int


class Trajectory(NamedTuple):
    """Sampled cumulative event sum over one exposure interval.

    ``times`` are strictly increasing and span the interval; ``values`` hold
    the signed event count accumulated from the frame's reference time, so the
    value at the reference time itself is 0.
    """

    times: np.ndarray
    values: np.ndarray


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class EventStream:
    """Time-ordered event data in columnar form.

    Attributes
    ----------
    t, x, y, p : np.ndarray
        Parallel 1-D arrays; ``t`` is non-decreasing, ``p`` in {-1, +1}.
    n_x, n_y : int
        Sensor width and height; coordinates are validated against them.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    n_x: int
    n_y: int

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=np.float64)
        x = np.asarray(self.x, dtype=np.int64)
        y = np.asarray(self.y, dtype=np.int64)
        p = np.asarray(self.p, dtype=np.int64)
        if not (t.ndim == x.ndim == y.ndim == p.ndim == 1):
            raise ValueError("event columns must be 1-D arrays")
        if not (t.size == x.size == y.size == p.size):
            raise ValueError("event columns must have equal length")
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError("sensor size must be positive")
        if t.size:
            if not np.all(np.isfinite(t)):
                raise ValueError("event timestamps must be finite")
            if np.any(t < 0):
                raise ValueError("event timestamps must be non-negative")
            if np.any(np.diff(t) < 0):
                raise ValueError("events must be sorted by timestamp")
            if np.any((x < 0) | (x >= self.n_x) | (y < 0) | (y >= self.n_y)):
                raise ValueError("event coordinates outside the sensor")
            if np.any(np.abs(p) != 1):
                raise ValueError("polarities must be -1 or +1")
        for name, arr in (("t", t), ("x", x), ("y", y), ("p", p)):
            object.__setattr__(self, name, _freeze(arr))

    def __len__(self) -> int:
        return int(self.t.size)

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self)):
            yield Event(float(self.t[i]), int(self.x[i]), int(self.y[i]), int(self.p[i]))

    @property
    def sensor_size(self) -> tuple[int, int]:
        return (self.n_x, self.n_y)


@dataclass(frozen=True)
class FrameSequence:
    """Stack of grayscale frames with reference times and exposure lengths.

    ``frames`` has shape (n_frames, n_y, n_x); ``times`` are the per-frame
    reference timestamps (strictly increasing) and ``exposures`` the strictly
    positive exposure durations.  The exposure interval of frame ``i`` is
    centered on ``times[i]``.
    """

    frames: np.ndarray
    times: np.ndarray
    exposures: np.ndarray

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames, dtype=np.float64)
        times = np.asarray(self.times, dtype=np.float64)
        exposures = np.asarray(self.exposures, dtype=np.float64)
        if frames.ndim != 3:
            raise ValueError("frames must be a (n_frames, n_y, n_x) stack")
        n = frames.shape[0]
        if n < 2:
            raise ValueError("a frame sequence needs at least 2 frames")
        if times.shape != (n,) or exposures.shape != (n,):
            raise ValueError("times and exposures must have one entry per frame")
        if not np.all(np.isfinite(frames)):
            raise ValueError("frame values must be finite")
        if np.any(np.diff(times) <= 0):
            raise ValueError("frame times must be strictly increasing")
        if np.any(exposures <= 0):
            raise ValueError("exposure durations must be positive")
        object.__setattr__(self, "frames", _freeze(frames))
        object.__setattr__(self, "times", _freeze(times))
        object.__setattr__(self, "exposures", _freeze(exposures))

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        """(n_y, n_x) pixel grid shape."""
        return (int(self.frames.shape[1]), int(self.frames.shape[2]))

    def interval(self, index: int) -> tuple[float, float]:
        """Exposure interval (start, end) of frame ``index``."""
        half = float(self.exposures[index]) / 2.0
        mid = float(self.times[index])
        return (mid - half, mid + half)


@dataclass(frozen=True)
class CompressedCube:
    """Time-compressed event cube.

    Each slice ``values[b]`` is the per-pixel sum of polarities of one group
    of ``k`` consecutive events; ``times[b]`` is the mean timestamp of the
    group's events.  Bin times are strictly increasing.
    """

    values: np.ndarray
    times: np.ndarray
    k: int

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        times = np.asarray(self.times, dtype=np.float64)
        if values.ndim != 3:
            raise ValueError("cube values must be a (n_bins, n_y, n_x) stack")
        if times.shape != (values.shape[0],):
            raise ValueError("cube needs one timestamp per bin")
        if self.k < 1:
            raise ValueError("compression factor k must be >= 1")
        if times.size and np.any(np.diff(times) <= 0):
            raise ValueError("bin times must be strictly increasing")
        object.__setattr__(self, "values", _freeze(values))
        object.__setattr__(self, "times", _freeze(times))

    @property
    def n_bins(self) -> int:
        return int(self.values.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.values.shape[1]), int(self.values.shape[2]))


@dataclass(frozen=True)
class LogFrames:
    """Log of the standardized frame stack; values are <= 0 by construction."""

    values: np.ndarray
    epsilon: float

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise ValueError("log frames must be a (n_frames, n_y, n_x) stack")
        if not np.all(np.isfinite(values)):
            raise ValueError("log frame values must be finite")
        if np.any(values > 0):
            raise ValueError("log frames of standardized input must be <= 0")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        object.__setattr__(self, "values", _freeze(values))

    @property
    def n_frames(self) -> int:
        return int(self.values.shape[0])


def parse_event_file(path: str, n_x: int, n_y: int) -> EventStream:
    """Read a text event file into an :class:`EventStream`.

    Each data line holds ``t x y p`` separated by whitespace; ``#`` starts a
    comment.  Two polarity encodings are accepted: {-1, +1} literally, or
    {0, 1} which is mapped to {-1, +1}.  The encoding is auto-detected from
    the values present; a file containing only ``1`` polarities is ambiguous
    and is read as the {0, 1} encoding with a warning (both readings agree).
    Timestamps must be non-negative; out-of-order lines are stably sorted with
    a warning.
    """
    ts: list[float] = []
    xs: list[int] = []
    ys: list[int] = []
    ps: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise EventFileError(
                    f"{path}:{lineno}: expected 4 fields 't x y p', got {len(parts)}"
                )
            try:
                t = float(parts[0])
                x = int(parts[1])
                y = int(parts[2])
                p = int(parts[3])
            except ValueError as exc:
                raise EventFileError(f"{path}:{lineno}: {exc}") from exc
            if not np.isfinite(t) or t < 0:
                raise EventFileError(
                    f"{path}:{lineno}: timestamp must be finite and non-negative"
                )
            if not (0 <= x < n_x and 0 <= y < n_y):
                raise EventFileError(
                    f"{path}:{lineno}: pixel ({x}, {y}) outside sensor "
                    f"{n_x}x{n_y}"
                )
            if p not in (-1, 0, 1):
                raise EventFileError(f"{path}:{lineno}: polarity must be -1, 0 or 1")
            ts.append(t)
            xs.append(x)
            ys.append(y)
            ps.append(p)

    t_arr = np.asarray(ts, dtype=np.float64)
    p_arr = np.asarray(ps, dtype=np.int64)
    has_neg = bool(np.any(p_arr == -1))
    has_zero = bool(np.any(p_arr == 0))
    if has_neg and has_zero:
        raise EventFileError(f"{path}: mixes the 0/1 and -1/+1 polarity encodings")
    if not has_neg:
        if not has_zero and p_arr.size:
            warnings.warn(
                f"{path}: only positive polarities present; assuming the 0/1 "
                "encoding",
                stacklevel=2,
            )
        p_arr = np.where(p_arr == 0, -1, 1)

    x_arr = np.asarray(xs, dtype=np.int64)
    y_arr = np.asarray(ys, dtype=np.int64)
    if t_arr.size and np.any(np.diff(t_arr) < 0):
        warnings.warn(f"{path}: events not sorted by timestamp; sorting", stacklevel=2)
        order = np.argsort(t_arr, kind="stable")
        t_arr, x_arr, y_arr, p_arr = t_arr[order], x_arr[order], y_arr[order], p_arr[order]
    return EventStream(t=t_arr, x=x_arr, y=y_arr, p=p_arr, n_x=n_x, n_y=n_y)


def standardize_frames(stack: np.ndarray, epsilon: float = 1e-3) -> np.ndarray:
    """Affinely map each frame into (0, 1).

    Frame ``i`` is mapped with the range ``[min_i - epsilon, max_i + epsilon]``
    so the output avoids exact 0 and 1 and the subsequent log stays finite.  A
    constant frame maps to 0.5 everywhere.  Accepts a single (n_y, n_x) frame
    or a (n, n_y, n_x) stack; the map is monotone per frame.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    arr = np.asarray(stack, dtype=np.float64)
    single = arr.ndim == 2
    if single:
        arr = arr[None]
    if arr.ndim != 3:
        raise ValueError("expected a frame or a stack of frames")
    if not np.all(np.isfinite(arr)):
        raise ValueError("frame values must be finite")
    lo = arr.min(axis=(1, 2), keepdims=True) - epsilon
    hi = arr.max(axis=(1, 2), keepdims=True) + epsilon
    out = (arr - lo) / (hi - lo)
    return out[0] if single else out


def build_log_frames(frames: FrameSequence, epsilon: float = 1e-3) -> LogFrames:
    """Standardize a frame sequence and take the elementwise log."""
    return LogFrames(values=np.log(standardize_frames(frames.frames, epsilon)),
                     epsilon=epsilon)


def build_compressed_cube(stream: EventStream, k: int) -> CompressedCube:
    """Compress the stream into per-pixel polarity sums over groups of ``k``.

    Events are grouped ``k`` at a time in stream order; the final partial
    group is kept.  Each bin's timestamp is the mean of its events' times.
    Consecutive bins that end up with identical timestamps (possible when many
    events share a timestamp) are merged so bin times stay strictly
    increasing.
    """
    if k < 1:
        raise ValueError("compression factor k must be >= 1")
    n = len(stream)
    n_y, n_x = stream.n_y, stream.n_x
    if n == 0:
        return CompressedCube(values=np.zeros((0, n_y, n_x)),
                              times=np.zeros(0), k=k)
    bin_idx = np.arange(n) // k
    r = int(bin_idx[-1]) + 1
    counts = np.bincount(bin_idx, minlength=r)
    times = np.bincount(bin_idx, weights=stream.t, minlength=r) / counts
    values = np.zeros((r, n_y, n_x))
    np.add.at(values, (bin_idx, stream.y, stream.x), stream.p)
    if r > 1 and np.any(np.diff(times) <= 0):
        uniq, inverse = np.unique(times, return_inverse=True)
        merged = np.zeros((uniq.size, n_y, n_x))
        np.add.at(merged, inverse, values)
        values, times = merged, uniq
    return CompressedCube(values=values, times=times, k=k)


def has_events(cube: CompressedCube, x: int, y: int) -> bool:
    """True if any bin at pixel (x, y) carries a nonzero polarity sum."""
    return bool(np.any(cube.values[:, y, x] != 0))


def active_pixel_mask(cube: CompressedCube) -> np.ndarray:
    """Boolean (n_y, n_x) mask of pixels with at least one nonzero bin."""
    return np.any(cube.values != 0, axis=0)


def _pixel_prefix(cube: CompressedCube, x: int, y: int,
                  j0: int, j1: int) -> tuple[np.ndarray, np.ndarray]:
    bin_times = cube.times[j0:j1]
    prefix = np.concatenate([[0.0], np.cumsum(cube.values[j0:j1, y, x])])
    return bin_times, prefix


def pixel_event_trajectory(cube: CompressedCube, frames: FrameSequence,
                           x: int, y: int, index: int) -> Trajectory:
    """Cumulative event sum at pixel (x, y) over frame ``index``'s exposure.

    The sample times are the cube bin times falling inside the exposure
    interval, together with the interval endpoints and the frame's reference
    time.  The value at a sample ``s`` is the signed sum of the pixel's bin
    values between the reference time and ``s``: bins in ``(t_ref, s]`` for
    ``s`` after the reference time, and the negated sum of bins in
    ``[s, t_ref)`` for ``s`` before it.  The value at the reference time is 0,
    and a bin's contribution switches on exactly at its own timestamp.  With no
    bins in the interval the trajectory is identically zero on the three
    anchor samples.
    """
    if cube.n_bins and cube.shape != frames.shape:
        raise ValueError("cube and frame grids disagree")
    if not (0 <= x < frames.shape[1] and 0 <= y < frames.shape[0]):
        raise ValueError(f"pixel ({x}, {y}) outside the frame grid")
    if not (0 <= index < frames.n_frames):
        raise ValueError(f"frame index {index} out of range")
    lo, hi = frames.interval(index)
    t_ref = float(frames.times[index])
    j0 = int(np.searchsorted(cube.times, lo, side="left"))
    j1 = int(np.searchsorted(cube.times, hi, side="right"))
    bin_times, prefix = _pixel_prefix(cube, x, y, j0, j1)
    samples = np.unique(np.concatenate([[lo, t_ref, hi], bin_times]))
    right = prefix[np.searchsorted(bin_times, samples, side="right")]
    left = prefix[np.searchsorted(bin_times, samples, side="left")]
    ref_right = prefix[np.searchsorted(bin_times, t_ref, side="right")]
    ref_left = prefix[np.searchsorted(bin_times, t_ref, side="left")]
    values = np.where(samples >= t_ref, right - ref_right, left - ref_left)
    return Trajectory(times=samples, values=values)


def gap_event_sums(cube: CompressedCube, ref_times: np.ndarray,
                   x: int, y: int) -> np.ndarray:
    """Signed event sums at pixel (x, y) between consecutive reference times.

    Entry ``i`` sums the pixel's bin values with timestamps in
    ``(ref_times[i], ref_times[i + 1]]``.
    """
    ref = np.asarray(ref_times, dtype=np.float64)
    if ref.ndim != 1 or ref.size < 2:
        raise ValueError("need at least two reference times")
    if np.any(np.diff(ref) <= 0):
        raise ValueError("reference times must be strictly increasing")
    bin_times, prefix = _pixel_prefix(cube, x, y, 0, cube.n_bins)
    marks = prefix[np.searchsorted(bin_times, ref, side="right")]
    return np.diff(marks)
