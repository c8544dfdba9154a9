"""Inference, evaluation, and figure-style artifact export.

Inference never reads any audio that may accompany the input video: the
supported containers carry pixels only, and no sibling file is opened.
"""

from pathlib import Path

import numpy as np

from ..audiodec import synthesize, synthesize_long
from ..errors import (
    CheckpointStageError,
    MediaParseError,
    UnsupportedFormatError,
    ValidationError,
)
from ..media import export_code_image, read_rvid, read_y4m, write_ppm, write_wav
from ..media.clips import VideoClip
from ..media.images import frame_to_ppm_array
from ..media.preprocess import segment
from ..ndtensor import no_grad
from ..vqvae import encode_for_inference, reconstruct
from .checkpoint import load_checkpoint
from .config import Config
from .models import restore_audiodec, restore_vqvae
from .training import load_training_pairs, preprocess_clip

FFMPEG_HINT = ("compressed inputs must be transcoded first, e.g. "
               "`ffmpeg -i input.mp4 -pix_fmt yuv420p clip.y4m` and "
               "`ffmpeg -i input.mp4 -ac 1 -ar 8000 clip.wav`")


def read_video(path) -> VideoClip:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"video file not found: {path}")
    suffix = path.suffix.lower()
    try:
        if suffix == ".y4m":
            return read_y4m(path)
        if suffix == ".rvid":
            return read_rvid(path)
    except MediaParseError as exc:
        raise type(exc)(f"{path}: {exc}") from None
    raise UnsupportedFormatError(f"{path}: unsupported video container {suffix!r}; {FFMPEG_HINT}")


def infer(config: Config, ckpt_path, video_path, out_wav_path):
    """Silent video in, synthesized WAV out."""
    state = load_checkpoint(ckpt_path, expected_stage="full")
    nets, codebook = restore_vqvae(config, state.tensors, source=str(ckpt_path))
    decoder = restore_audiodec(config, state.tensors, source=str(ckpt_path))
    clip = preprocess_clip(config, read_video(video_path))
    audio = synthesize_long(decoder, nets.encoder, codebook, clip,
                            segment_seconds=config.segment_seconds,
                            sample_rate=config.sample_rate)
    write_wav(audio, out_wav_path)
    return audio


def evaluate(config: Config, ckpt_path, data_dir) -> dict:
    """Mean per-segment audio MSE (tanh space), video reconstruction MSE, and
    fraction of the codebook in use across the dataset."""
    state = load_checkpoint(ckpt_path, expected_stage="full")
    nets, codebook = restore_vqvae(config, state.tensors, source=str(ckpt_path))
    decoder = restore_audiodec(config, state.tensors, source=str(ckpt_path))

    pairs = load_training_pairs(config, data_dir)
    if not pairs:
        raise ValidationError(f"no evaluable segments in {data_dir}")

    audio_mses = []
    video_mses = []
    used = set()
    for pair in pairs:
        frames = np.ascontiguousarray(pair.video.frames.transpose(1, 0, 2, 3))[None]
        _, indices, z_q = encode_for_inference(nets.encoder, codebook, frames)
        with no_grad():
            pred = synthesize(decoder, z_q)
            recon = reconstruct(nets.recon, z_q)
        diff = pred.data[0].astype(np.float64) - pair.audio.samples.astype(np.float64)
        audio_mses.append(float(np.mean(diff * diff)))
        vdiff = recon.data.astype(np.float64) - frames.astype(np.float64)
        video_mses.append(float(np.mean(vdiff * vdiff)))
        used.update(np.unique(indices).tolist())

    return {
        "segments": len(pairs),
        "audio_mse": float(np.mean(audio_mses)),
        "video_recon_mse": float(np.mean(video_mses)),
        "codebook_usage": len(used) / config.codebook_size,
    }


def export_artifacts(config: Config, ckpt_path, video_path, out_dir):
    """Write, per segment: the first preprocessed frame, its reconstruction,
    and the discrete code grid as grayscale time slices."""
    state = load_checkpoint(ckpt_path)
    if state.stage not in ("encoder", "full"):
        raise CheckpointStageError(
            f"{ckpt_path}: stage is {state.stage!r}; artifact export needs "
            "'encoder' or 'full' weights"
        )
    nets, codebook = restore_vqvae(config, state.tensors, source=str(ckpt_path))
    clip = preprocess_clip(config, read_video(video_path))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, pair in enumerate(segment(clip, None, config.segment_seconds, "infer")):
        frames = np.ascontiguousarray(pair.video.frames.transpose(1, 0, 2, 3))[None]
        _, indices, z_q = encode_for_inference(nets.encoder, codebook, frames)
        with no_grad():
            recon = reconstruct(nets.recon, z_q)
        input_path = out / f"segment_{i:02d}_input.ppm"
        recon_path = out / f"segment_{i:02d}_recon.ppm"
        write_ppm(frame_to_ppm_array(pair.video.frames[0]), input_path)
        write_ppm(frame_to_ppm_array(np.clip(recon.data[0, :, 0], 0.0, 1.0)), recon_path)
        written.extend([input_path, recon_path])
        written.extend(export_code_image(indices[0], config.codebook_size,
                                         out / f"segment_{i:02d}_codes.pgm"))
    return written
