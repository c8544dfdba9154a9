"""Media containers and codecs: video clips, audio clips, segment pairing,
Y4M / raw-video / WAV readers and writers, and the preprocessing steps that
turn raw footage into training-ready segments.
"""

from .clips import AudioClip, Batch, SegmentPair, VideoClip
from .images import export_code_image, write_pgm, write_ppm
from .preprocess import (
    denormalize_audio,
    make_batches,
    normalize_audio,
    resample_fps,
    resize_bilinear,
    segment,
)
from .rawvideo import read_rvid, write_rvid
from .wav import read_wav, write_wav
from .y4m import read_y4m, write_y4m

__all__ = [
    "AudioClip",
    "Batch",
    "SegmentPair",
    "VideoClip",
    "read_y4m",
    "write_y4m",
    "read_rvid",
    "write_rvid",
    "read_wav",
    "write_wav",
    "resize_bilinear",
    "resample_fps",
    "segment",
    "make_batches",
    "normalize_audio",
    "denormalize_audio",
    "write_pgm",
    "write_ppm",
    "export_code_image",
]
