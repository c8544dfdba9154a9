"""Preprocessing: spatial resize, frame-rate resampling, fixed-length
segmentation, batching, and the tanh companding applied to audio targets.

Frame-rate arithmetic uses Fractions throughout so index selection is exact
and platform independent.
"""

import math
from fractions import Fraction
from typing import List, Optional

import numpy as np

from ..errors import AlignmentError, ConfigurationError, ContractError
from .clips import AudioClip, Batch, SegmentPair, VideoClip


def resize_bilinear(clip: VideoClip, width: int, height: int) -> VideoClip:
    """Resize every frame with bilinear interpolation (half-pixel centers)."""
    if width < 8 or height < 8:
        raise ConfigurationError(f"target size must be at least 8x8, got {width}x{height}")
    src_h, src_w = clip.height, clip.width
    if (width, height) == (src_w, src_h):
        return VideoClip(frames=clip.frames.copy(), fps=clip.fps)

    def axis_weights(n_out, n_in):
        pos = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        lo = np.floor(pos).astype(np.int64)
        frac = (pos - lo).astype(np.float32)
        # Positions past either edge clamp to the border pixel.
        frac[lo < 0] = 0.0
        lo = np.clip(lo, 0, n_in - 1)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, frac

    y0, y1, wy = axis_weights(height, src_h)
    x0, x1, wx = axis_weights(width, src_w)
    wy = wy[:, None]
    wx = wx[None, :]

    f = clip.frames
    p00 = f[:, :, y0[:, None], x0[None, :]]
    p01 = f[:, :, y0[:, None], x1[None, :]]
    p10 = f[:, :, y1[:, None], x0[None, :]]
    p11 = f[:, :, y1[:, None], x1[None, :]]
    top = p00 * (1.0 - wx) + p01 * wx
    bot = p10 * (1.0 - wx) + p11 * wx
    out = top * (1.0 - wy) + bot * wy
    np.clip(out, 0.0, 1.0, out=out)
    return VideoClip(frames=out, fps=clip.fps)


def resample_fps(clip: VideoClip, target_fps) -> VideoClip:
    """Resample to a new frame rate by nearest-frame selection.

    Output frame j takes source frame floor(j * src/tgt + 1/2); duration is
    preserved to within one frame period.
    """
    target = target_fps if isinstance(target_fps, Fraction) else Fraction(target_fps)
    if target <= 0:
        raise ConfigurationError(f"target fps must be positive, got {target}")
    if target == clip.fps:
        return VideoClip(frames=clip.frames.copy(), fps=clip.fps)

    t_in = clip.num_frames
    n_out = int(Fraction(t_in) * target / clip.fps + Fraction(1, 2))
    n_out = max(1, n_out)
    ratio = clip.fps / target
    indices = np.empty(n_out, dtype=np.int64)
    for j in range(n_out):
        indices[j] = min(t_in - 1, int(Fraction(j) * ratio + Fraction(1, 2)))
    return VideoClip(frames=clip.frames[indices].copy(), fps=target)


def _frames_per_segment(fps: Fraction, segment_seconds: int) -> int:
    count = Fraction(segment_seconds) * fps
    if count.denominator != 1 or count.numerator < 1:
        raise ConfigurationError(
            f"segment of {segment_seconds}s at {fps} fps is not a whole number of frames"
        )
    return count.numerator


def segment(video: VideoClip, audio: Optional[AudioClip], segment_seconds: int,
            mode: str) -> List[SegmentPair]:
    """Cut a clip into fixed-length windows.

    ``train`` keeps only complete windows and requires aligned audio;
    ``infer`` ignores audio, keeps every frame, and zero-pads the final
    window, recording how much of it is real in ``valid_seconds``.
    """
    if mode not in ("train", "infer"):
        raise ContractError(f"segmentation mode must be 'train' or 'infer', got {mode!r}")
    f_per = _frames_per_segment(video.fps, segment_seconds)
    t = video.num_frames

    if mode == "infer":
        n_seg = math.ceil(t / f_per)
        pairs = []
        for i in range(n_seg):
            chunk = video.frames[i * f_per:(i + 1) * f_per]
            valid = float(segment_seconds)
            if chunk.shape[0] < f_per:
                valid = float(Fraction(chunk.shape[0]) / video.fps)
                pad = np.zeros((f_per - chunk.shape[0],) + chunk.shape[1:], dtype=np.float32)
                chunk = np.concatenate([chunk, pad], axis=0)
            pairs.append(SegmentPair(
                video=VideoClip(frames=chunk.copy(), fps=video.fps),
                audio=None,
                segment_seconds=segment_seconds,
                valid_seconds=valid,
            ))
        return pairs

    if audio is None:
        raise ContractError("train-mode segmentation requires an audio track")
    s_per = segment_seconds * audio.sample_rate
    vid_secs = float(video.duration_seconds)
    aud_secs = float(audio.duration_seconds)
    if abs(vid_secs - aud_secs) > 0.5:
        raise AlignmentError(
            f"video spans {vid_secs:.3f}s but audio spans {aud_secs:.3f}s; "
            "paired streams must agree to within 0.5s"
        )
    n_seg = min(t // f_per, audio.num_samples // s_per)
    pairs = []
    for i in range(n_seg):
        pairs.append(SegmentPair(
            video=VideoClip(frames=video.frames[i * f_per:(i + 1) * f_per].copy(), fps=video.fps),
            audio=AudioClip(samples=audio.samples[i * s_per:(i + 1) * s_per].copy(),
                            sample_rate=audio.sample_rate),
            segment_seconds=segment_seconds,
        ))
    return pairs


def make_batches(pairs: List[SegmentPair], batch_max: int = 2) -> List[Batch]:
    """Group consecutive segment pairs into batches of at most ``batch_max``."""
    if batch_max < 1:
        raise ConfigurationError(f"batch_max must be >= 1, got {batch_max}")
    return [Batch(pairs=list(pairs[i:i + batch_max])) for i in range(0, len(pairs), batch_max)]


def tanh_normalize(samples: np.ndarray) -> np.ndarray:
    return np.tanh(samples).astype(np.float32)


_ARTANH_LIMIT = 1.0 - 1e-6


def artanh_denormalize(values: np.ndarray) -> np.ndarray:
    # arctanh diverges at +-1; clamp inputs just inside, and clamp the result
    # back to legal waveform range since the companded domain only covers
    # tanh([-1, 1]).
    squeezed = np.clip(values, -_ARTANH_LIMIT, _ARTANH_LIMIT)
    return np.clip(np.arctanh(squeezed), -1.0, 1.0).astype(np.float32)


def normalize_audio(clip: AudioClip) -> AudioClip:
    """Compress the waveform with tanh; the training target space."""
    return AudioClip(samples=tanh_normalize(clip.samples), sample_rate=clip.sample_rate)


def denormalize_audio(clip: AudioClip) -> AudioClip:
    """Invert :func:`normalize_audio` (inputs clamped inside +-1)."""
    return AudioClip(samples=artanh_denormalize(clip.samples), sample_rate=clip.sample_rate)
