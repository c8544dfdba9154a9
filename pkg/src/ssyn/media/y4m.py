"""YUV4MPEG2 reader and writer.

Supports progressive 4:2:0 and 4:4:4 streams with BT.601 limited-range
conversion to and from RGB.  Errors carry the byte offset where parsing
stopped so corrupt files are easy to diagnose.
"""

from fractions import Fraction
from pathlib import Path

import numpy as np

from ..errors import MediaParseError, UnsupportedFormatError
from ..ioutil import atomic_write_bytes
from .clips import VideoClip

_MAGIC = b"YUV4MPEG2"

# BT.601 limited range: luma spans [16, 235], chroma [16, 240].
_KR, _KG, _KB = 0.299, 0.587, 0.114
_Y_SCALE = 255.0 / 219.0  # 1.164383...
_CR_R = 1.596027
_CB_G = -0.391762
_CR_G = -0.812968
_CB_B = 2.017232


def _parse_header(line: bytes):
    fields = line.split(b" ")
    if fields[0] != _MAGIC:
        raise MediaParseError(f"not a YUV4MPEG2 stream (bad magic at byte offset 0: {fields[0][:16]!r})")
    width = height = None
    fps = None
    chroma = "420jpeg"
    for token in fields[1:]:
        if not token:
            continue
        tag, value = token[:1], token[1:].decode("ascii", "replace")
        if tag == b"W":
            width = int(value)
        elif tag == b"H":
            height = int(value)
        elif tag == b"F":
            num, _, den = value.partition(":")
            fps = Fraction(int(num), int(den))
        elif tag == b"C":
            chroma = value
        elif tag == b"I":
            if value not in ("p", "P"):
                raise UnsupportedFormatError(f"interlaced y4m streams are not supported (I{value})")
        # A (aspect) and X (extension) tags carry no pixel data; ignore them.
    if width is None or height is None or fps is None:
        raise MediaParseError("y4m header must declare W, H, and F tags")
    if width <= 0 or height <= 0:
        raise MediaParseError(f"y4m frame size must be positive, got {width}x{height}")
    if fps <= 0:
        raise MediaParseError(f"y4m frame rate must be positive, got {fps}")
    if chroma.startswith("420"):
        subsampled = True
        if width % 2 or height % 2:
            raise MediaParseError(f"4:2:0 y4m requires even dimensions, got {width}x{height}")
    elif chroma == "444":
        subsampled = False
    else:
        raise UnsupportedFormatError(f"unsupported y4m colourspace C{chroma} (only 4:2:0 and 4:4:4)")
    return width, height, fps, subsampled


def _yuv_to_rgb(y: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    c = y.astype(np.float32) - 16.0
    d = u.astype(np.float32) - 128.0
    e = v.astype(np.float32) - 128.0
    r = _Y_SCALE * c + _CR_R * e
    g = _Y_SCALE * c + _CB_G * d + _CR_G * e
    b = _Y_SCALE * c + _CB_B * d
    rgb = np.stack([r, g, b], axis=0) / 255.0
    return np.clip(rgb, 0.0, 1.0, out=rgb)


def read_y4m(path) -> VideoClip:
    data = Path(path).read_bytes()
    eol = data.find(b"\n")
    if eol < 0:
        raise MediaParseError("y4m header line is unterminated (no newline before byte offset "
                              f"{len(data)})")
    width, height, fps, subsampled = _parse_header(data[:eol])

    luma_size = width * height
    if subsampled:
        chroma_w, chroma_h = width // 2, height // 2
    else:
        chroma_w, chroma_h = width, height
    chroma_size = chroma_w * chroma_h
    frame_bytes = luma_size + 2 * chroma_size

    frames = []
    pos = eol + 1
    while pos < len(data):
        marker_end = data.find(b"\n", pos)
        if marker_end < 0 or not data[pos:marker_end].startswith(b"FRAME"):
            raise MediaParseError(f"expected FRAME marker at byte offset {pos}")
        pos = marker_end + 1
        if pos + frame_bytes > len(data):
            raise MediaParseError(
                f"truncated frame payload at byte offset {pos}: "
                f"need {frame_bytes} bytes, have {len(data) - pos}"
            )
        raw = np.frombuffer(data, dtype=np.uint8, count=frame_bytes, offset=pos)
        y = raw[:luma_size].reshape(height, width)
        u = raw[luma_size:luma_size + chroma_size].reshape(chroma_h, chroma_w)
        v = raw[luma_size + chroma_size:].reshape(chroma_h, chroma_w)
        if subsampled:
            u = np.repeat(np.repeat(u, 2, axis=0), 2, axis=1)
            v = np.repeat(np.repeat(v, 2, axis=0), 2, axis=1)
        frames.append(_yuv_to_rgb(y, u, v))
        pos += frame_bytes

    if not frames:
        raise MediaParseError(f"y4m stream contains no frames (ended at byte offset {pos})")
    return VideoClip(frames=np.stack(frames, axis=0), fps=fps)


def _rgb_to_yuv(frame: np.ndarray, subsampled: bool):
    r, g, b = frame[0], frame[1], frame[2]
    ey = _KR * r + _KG * g + _KB * b
    y = 16.0 + 219.0 * ey
    cb = 128.0 + 224.0 * (b - ey) / (2.0 * (1.0 - _KB))
    cr = 128.0 + 224.0 * (r - ey) / (2.0 * (1.0 - _KR))
    if subsampled:
        h, w = cb.shape
        cb = cb.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))
        cr = cr.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))

    def quantize(plane):
        return np.clip(np.round(plane), 0, 255).astype(np.uint8)

    return quantize(y), quantize(cb), quantize(cr)


def write_y4m(clip: VideoClip, path, chroma: str = "444"):
    if chroma not in ("444", "420jpeg"):
        raise UnsupportedFormatError(f"unsupported y4m colourspace C{chroma} for writing")
    subsampled = chroma.startswith("420")
    if subsampled and (clip.height % 2 or clip.width % 2):
        raise MediaParseError(f"4:2:0 y4m requires even dimensions, got {clip.width}x{clip.height}")
    fps = clip.fps
    parts = [
        f"YUV4MPEG2 W{clip.width} H{clip.height} "
        f"F{fps.numerator}:{fps.denominator} Ip A1:1 C{chroma}\n".encode("ascii")
    ]
    for t in range(clip.num_frames):
        y, u, v = _rgb_to_yuv(clip.frames[t], subsampled)
        parts.append(b"FRAME\n")
        parts.append(y.tobytes())
        parts.append(u.tobytes())
        parts.append(v.tobytes())
    atomic_write_bytes(path, b"".join(parts))
