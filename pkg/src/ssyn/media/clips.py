"""Validated containers for decoded media.

Video frames are float32 (T, 3, H, W) in [0, 1]; audio is float32 1-D in
[-1, 1].  Frame rate is a Fraction so resampling arithmetic stays exact.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from ..errors import ContractError, ValidationError


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value).limit_denominator(1_000_000)
    raise ValidationError(f"fps must be a Fraction, int, or float, got {type(value).__name__}")


@dataclass
class VideoClip:
    """A decoded video: frames (T, 3, H, W) float32 in [0, 1] plus frame rate."""

    frames: np.ndarray
    fps: Fraction

    def __post_init__(self):
        self.frames = np.ascontiguousarray(self.frames, dtype=np.float32)
        if self.frames.ndim != 4:
            raise ValidationError(f"video frames must be 4-D (T, 3, H, W), got {self.frames.ndim}-D")
        t, c, h, w = self.frames.shape
        if c != 3:
            raise ValidationError(f"video frames must have 3 channels, got {c}")
        if t < 1:
            raise ValidationError("video must contain at least one frame")
        if h < 8 or w < 8:
            raise ValidationError(f"frame size must be at least 8x8, got {h}x{w}")
        lo = float(self.frames.min())
        hi = float(self.frames.max())
        if lo < 0.0 or hi > 1.0:
            raise ValidationError(f"frame values must lie in [0, 1], got range [{lo:g}, {hi:g}]")
        self.fps = _as_fraction(self.fps)
        if self.fps <= 0:
            raise ValidationError(f"fps must be positive, got {self.fps}")

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[2]

    @property
    def width(self) -> int:
        return self.frames.shape[3]

    @property
    def duration_seconds(self) -> Fraction:
        return Fraction(self.num_frames) / self.fps


@dataclass
class AudioClip:
    """A mono waveform: float32 samples in [-1, 1] plus sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float32)
        if self.samples.ndim != 1:
            raise ValidationError(f"audio samples must be 1-D, got {self.samples.ndim}-D")
        if self.samples.shape[0] < 1:
            raise ValidationError("audio must contain at least one sample")
        lo = float(self.samples.min())
        hi = float(self.samples.max())
        if lo < -1.0 or hi > 1.0:
            raise ValidationError(f"audio samples must lie in [-1, 1], got range [{lo:g}, {hi:g}]")
        if not isinstance(self.sample_rate, int) or self.sample_rate <= 0:
            raise ValidationError(f"sample_rate must be a positive int, got {self.sample_rate!r}")

    @property
    def num_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_seconds(self) -> Fraction:
        return Fraction(self.num_samples, self.sample_rate)


@dataclass
class SegmentPair:
    """One fixed-length window of video with (optionally) its aligned audio.

    ``valid_seconds`` < ``segment_seconds`` marks a trailing window that was
    zero-padded to full length; downstream consumers trim outputs to it.
    """

    video: VideoClip
    audio: Optional[AudioClip]
    segment_seconds: int
    audio_normalized: bool = False
    valid_seconds: float = field(default=None)

    def __post_init__(self):
        if self.segment_seconds < 1:
            raise ValidationError(f"segment_seconds must be >= 1, got {self.segment_seconds}")
        if self.valid_seconds is None:
            self.valid_seconds = float(self.segment_seconds)
        if not (0.0 < self.valid_seconds <= self.segment_seconds):
            raise ValidationError(
                f"valid_seconds must lie in (0, {self.segment_seconds}], got {self.valid_seconds}"
            )
        vid_secs = self.video.duration_seconds
        if round(vid_secs) != self.segment_seconds:
            raise ValidationError(
                f"segment video spans {float(vid_secs):g}s, expected {self.segment_seconds}s"
            )
        if self.audio is not None:
            aud_secs = self.audio.duration_seconds
            if round(aud_secs) != self.segment_seconds:
                raise ValidationError(
                    f"segment audio spans {float(aud_secs):g}s, expected {self.segment_seconds}s"
                )


@dataclass
class Batch:
    """A small group of segment pairs with identical video and audio shapes."""

    pairs: list

    def __post_init__(self):
        if len(self.pairs) < 1:
            raise ContractError("a batch must contain at least one segment pair")
        first = self.pairs[0]
        for pair in self.pairs[1:]:
            if pair.video.frames.shape != first.video.frames.shape:
                raise ContractError(
                    "all segments in a batch must share one video shape, got "
                    f"{pair.video.frames.shape} vs {first.video.frames.shape}"
                )
            a, b = pair.audio, first.audio
            if (a is None) != (b is None):
                raise ContractError("segments in a batch must all have audio or all lack it")
            if a is not None and a.samples.shape != b.samples.shape:
                raise ContractError(
                    "all segments in a batch must share one audio length, got "
                    f"{a.samples.shape[0]} vs {b.samples.shape[0]}"
                )

    def __len__(self) -> int:
        return len(self.pairs)

    def video_array(self) -> np.ndarray:
        """Stack the segment videos into one (B, 3, T, H, W) float32 array."""
        # Frames are stored (T, 3, H, W) per clip; conv kernels want channels first.
        stacked = np.stack([p.video.frames for p in self.pairs], axis=0)
        return np.ascontiguousarray(stacked.transpose(0, 2, 1, 3, 4))

    def audio_array(self) -> np.ndarray:
        """Stack the segment waveforms into one (B, S) float32 array."""
        if self.pairs[0].audio is None:
            raise ContractError("batch has no audio to stack")
        return np.stack([p.audio.samples for p in self.pairs], axis=0)
