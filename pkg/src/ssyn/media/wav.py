"""Minimal RIFF/WAVE codec for 16-bit PCM.

Reading accepts mono or stereo (stereo is averaged down to mono); writing
always emits mono.  Sample scaling is chosen so write -> read -> write
reproduces the int16 payload byte for byte.
"""

import struct
from pathlib import Path

import numpy as np

from ..errors import MediaParseError, UnsupportedFormatError
from ..ioutil import atomic_write_bytes
from .clips import AudioClip

_INT16_SCALE = 32768.0


def read_wav(path) -> AudioClip:
    data = Path(path).read_bytes()
    if len(data) < 12:
        raise MediaParseError(f"file too short for a RIFF header ({len(data)} bytes)")
    if data[0:4] != b"RIFF":
        raise MediaParseError(f"not a RIFF file (bad magic at byte offset 0: {data[0:4]!r})")
    if data[8:12] != b"WAVE":
        raise MediaParseError(f"not a WAVE file (bad form type at byte offset 8: {data[8:12]!r})")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        if body_start + chunk_size > len(data):
            raise MediaParseError(
                f"truncated {chunk_id!r} chunk at byte offset {pos}: "
                f"declares {chunk_size} bytes, {len(data) - body_start} remain"
            )
        body = data[body_start:body_start + chunk_size]
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise MediaParseError(f"fmt chunk at byte offset {pos} is too short ({chunk_size} bytes)")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            payload = body
        pos = body_start + chunk_size + (chunk_size & 1)

    if fmt is None:
        raise MediaParseError("no fmt chunk found")
    if payload is None:
        raise MediaParseError("no data chunk found")
    audio_format, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if audio_format != 1:
        raise UnsupportedFormatError(f"only PCM wav is supported, got format tag {audio_format}")
    if bits != 16:
        raise UnsupportedFormatError(f"only 16-bit wav is supported, got {bits}-bit")
    if channels not in (1, 2):
        raise UnsupportedFormatError(f"only mono or stereo wav is supported, got {channels} channels")
    if len(payload) % (2 * channels):
        raise MediaParseError(
            f"data chunk length {len(payload)} is not a multiple of the {2 * channels}-byte frame size"
        )

    ints = np.frombuffer(payload, dtype="<i2")
    samples = ints.astype(np.float32) / _INT16_SCALE
    if channels == 2:
        samples = (samples[0::2] + samples[1::2]) * 0.5
    if samples.shape[0] < 1:
        raise MediaParseError("data chunk contains no samples")
    return AudioClip(samples=samples, sample_rate=int(sample_rate))


def encode_pcm16(samples: np.ndarray) -> np.ndarray:
    """Map float samples in [-1, 1] to int16; exact inverse of the read scaling."""
    scaled = np.round(np.clip(samples, -1.0, 1.0).astype(np.float64) * _INT16_SCALE)
    return np.clip(scaled, -32768, 32767).astype("<i2")


def write_wav(clip: AudioClip, path):
    ints = encode_pcm16(clip.samples)
    payload = ints.tobytes()
    sr = clip.sample_rate
    header = b"".join([
        b"RIFF",
        struct.pack("<I", 36 + len(payload)),
        b"WAVE",
        b"fmt ",
        struct.pack("<IHHIIHH", 16, 1, 1, sr, sr * 2, 2, 16),
        b"data",
        struct.pack("<I", len(payload)),
    ])
    atomic_write_bytes(path, header + payload)
