"""Shared helpers: desk-size configs and synthetic datasets that train in
seconds on one CPU core."""

import numpy as np

from ssyn.media import AudioClip, VideoClip, write_rvid, write_wav
from ssyn.pipeline.config import Config


def tiny_config(**overrides):
    base = dict(width=8, height=8, fps=4, segment_seconds=1, sample_rate=80,
                batch_max=2, codebook_size=8, embed_dim=4, hidden_channels=4,
                decoder_hidden=[8], epochs=2, seed=0)
    base.update(overrides)
    return Config(**base).validate()


def synth_video(rng, config, seconds=None) -> VideoClip:
    """Smooth moving gradient plus a little noise; easy to reconstruct."""
    seconds = config.segment_seconds if seconds is None else seconds
    t = int(round(config.fps * seconds))
    ys = np.linspace(0.0, 1.0, config.height, dtype=np.float32)[None, None, :, None]
    xs = np.linspace(0.0, 1.0, config.width, dtype=np.float32)[None, None, None, :]
    phase = rng.random((t, 3, 1, 1), dtype=np.float32)
    frames = 0.5 * ys + 0.3 * xs + 0.2 * phase
    frames += rng.random(frames.shape, dtype=np.float32) * 0.05
    return VideoClip(frames=np.clip(frames, 0.0, 1.0), fps=config.fps)


def synth_audio(rng, config, seconds=None) -> AudioClip:
    seconds = config.segment_seconds if seconds is None else seconds
    n = int(round(config.sample_rate * seconds))
    freq = float(rng.uniform(1.0, config.sample_rate / 4.0))
    t = np.arange(n, dtype=np.float64) / config.sample_rate
    samples = 0.7 * np.sin(2.0 * np.pi * freq * t)
    return AudioClip(samples=samples.astype(np.float32), sample_rate=config.sample_rate)


def write_dataset(root, config, n_clips, seed=0, seconds=None):
    """Write n paired .rvid/.wav clips; returns the directory."""
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for i in range(n_clips):
        write_rvid(synth_video(rng, config, seconds), root / f"clip_{i:02d}.rvid")
        write_wav(synth_audio(rng, config, seconds), root / f"clip_{i:02d}.wav")
    return root
