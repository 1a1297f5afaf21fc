"""Grayscale image and manifest I/O.

Supported image formats: PGM (both the ASCII ``P2`` and binary ``P5``
variants, written as ``P5``) and grayscale PNG via Pillow.  A frame manifest
is a text file with one ``path reference_time exposure_duration`` line per
frame; paths are resolved relative to the manifest's directory.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from .events import FrameSequence

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _read_pgm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    # Header tokens (magic, width, height, maxval) may be separated by any
    # whitespace and interleaved with '#' comments.
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as exc:
        raise ValueError(f"{path}: malformed PGM header") from exc
    if width < 1 or height < 1 or not (0 < maxval < 65536):
        raise ValueError(f"{path}: invalid PGM dimensions or maxval")
    if magic == b"P2":
        try:
            raster = np.array(data[pos:].split(), dtype=np.int64)
        except ValueError as exc:
            raise ValueError(f"{path}: malformed P2 raster") from exc
    elif magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raster = np.frombuffer(data, dtype=dtype, offset=pos,
                               count=width * height).astype(np.int64)
    else:
        raise ValueError(f"{path}: not a PGM file")
    if raster.size != width * height:
        raise ValueError(f"{path}: PGM raster size mismatch")
    if np.any((raster < 0) | (raster > maxval)):
        raise ValueError(f"{path}: PGM sample outside [0, maxval]")
    return raster.reshape(height, width).astype(np.float64) / maxval


def read_image(path: str) -> np.ndarray:
    """Read a PGM or grayscale PNG image as a float (n_y, n_x) array in [0, 1].

    Stored samples are divided by the format's maxval (PGM header value; 255
    or 65535 for 8- and 16-bit PNG).  The format is sniffed from the file's
    magic bytes.
    """
    with open(path, "rb") as fh:
        head = fh.read(8)
    if head[:2] in (b"P2", b"P5"):
        return _read_pgm(path)
    if head == _PNG_MAGIC:
        with Image.open(path) as img:
            if img.mode not in ("L", "I;16"):
                raise ValueError(
                    f"{path}: PNG must be 8- or 16-bit grayscale, got mode "
                    f"{img.mode}"
                )
            scale = 255.0 if img.mode == "L" else 65535.0
            return np.asarray(img, dtype=np.float64) / scale
    raise ValueError(f"{path}: unsupported image format (expect PGM or PNG)")


def quantize_unit(img: np.ndarray) -> np.ndarray:
    """Map a [0, 1] float image to uint8 by rounding."""
    return np.rint(np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def write_pgm(path: str, img: np.ndarray) -> None:
    """Write a uint8 image as binary PGM (P5, maxval 255)."""
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValueError("PGM writer expects a 2-D image")
    if arr.dtype != np.uint8:
        raise ValueError("PGM writer expects uint8 data; quantize first")
    height, width = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(arr.tobytes())


def write_png(path: str, img: np.ndarray) -> None:
    """Write a uint8 image as grayscale PNG."""
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.dtype != np.uint8:
        raise ValueError("PNG writer expects a 2-D uint8 image")
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def read_manifest(path: str) -> FrameSequence:
    """Load the frame sequence described by a manifest file."""
    base = os.path.dirname(os.path.abspath(path))
    frames: list[np.ndarray] = []
    times: list[float] = []
    exposures: list[float] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(
                    f"{path}:{lineno}: expected 'path time exposure', got "
                    f"{len(parts)} fields"
                )
            img_path = parts[0]
            if not os.path.isabs(img_path):
                img_path = os.path.join(base, img_path)
            try:
                t = float(parts[1])
                exposure = float(parts[2])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            frames.append(read_image(img_path))
            times.append(t)
            exposures.append(exposure)
    if len(frames) < 2:
        raise ValueError(f"{path}: manifest must list at least 2 frames")
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise ValueError(f"{path}: manifest frames disagree in shape: {sorted(shapes)}")
    return FrameSequence(frames=np.stack(frames), times=np.asarray(times),
                         exposures=np.asarray(exposures))


def write_manifest(path: str, entries: list[tuple[str, float, float]]) -> None:
    """Write manifest lines ``(relative_path, time, exposure)``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# path reference_time exposure_duration\n")
        for rel, t, exposure in entries:
            fh.write(f"{rel} {t:.9f} {exposure:.9f}\n")


def write_event_file(path: str, t: np.ndarray, x: np.ndarray, y: np.ndarray,
                     p: np.ndarray) -> None:
    """Write events as ``t x y p`` lines with -1/+1 polarities."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# t x y p\n")
        for i in range(len(t)):
            fh.write(f"{t[i]:.9f} {int(x[i])} {int(y[i])} {int(p[i])}\n")
