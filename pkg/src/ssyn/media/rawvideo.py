"""Raw RGB video fixture format.

Layout: one ASCII header line ``RVID1 T H W FPS_NUM FPS_DEN\\n`` followed by
T*H*W*3 bytes of interleaved 8-bit RGB, frame after frame.  Lossless, so it
round-trips bit-exactly; handy for tests and tiny datasets.
"""

from fractions import Fraction
from pathlib import Path

import numpy as np

from ..errors import MediaParseError
from ..ioutil import atomic_write_bytes
from .clips import VideoClip

_MAGIC = b"RVID1"


def read_rvid(path) -> VideoClip:
    data = Path(path).read_bytes()
    eol = data.find(b"\n")
    if eol < 0:
        raise MediaParseError("rvid header line is unterminated (no newline found)")
    fields = data[:eol].split(b" ")
    if fields[0] != _MAGIC:
        raise MediaParseError(f"not an RVID1 stream (bad magic at byte offset 0: {fields[0][:16]!r})")
    if len(fields) != 6:
        raise MediaParseError(f"rvid header needs 5 numbers after the magic, got {len(fields) - 1}")
    try:
        t, h, w, num, den = (int(f) for f in fields[1:])
    except ValueError:
        raise MediaParseError(f"rvid header contains a non-integer field: {data[:eol]!r}") from None
    if t < 1:
        raise MediaParseError(f"rvid frame count must be >= 1, got {t}")
    if h < 1 or w < 1:
        raise MediaParseError(f"rvid frame size must be positive, got {h}x{w}")
    if num < 1 or den < 1:
        raise MediaParseError(f"rvid frame rate must be positive, got {num}/{den}")

    expected = t * h * w * 3
    payload = len(data) - (eol + 1)
    if payload != expected:
        raise MediaParseError(
            f"rvid payload length mismatch at byte offset {eol + 1}: "
            f"expected {expected} bytes for {t} frames, got {payload}"
        )
    raw = np.frombuffer(data, dtype=np.uint8, offset=eol + 1).reshape(t, h, w, 3)
    frames = raw.transpose(0, 3, 1, 2).astype(np.float32) / 255.0
    return VideoClip(frames=frames, fps=Fraction(num, den))


def write_rvid(clip: VideoClip, path):
    fps = clip.fps
    header = f"RVID1 {clip.num_frames} {clip.height} {clip.width} {fps.numerator} {fps.denominator}\n"
    pixels = np.clip(np.round(clip.frames * 255.0), 0, 255).astype(np.uint8)
    payload = np.ascontiguousarray(pixels.transpose(0, 2, 3, 1)).tobytes()
    atomic_write_bytes(path, header.encode("ascii") + payload)
