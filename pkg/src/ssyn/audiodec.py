"""Audio decoder: quantized video embeddings in, waveform out.

The latent grid is flattened site-major (each site's D values contiguous) and
pushed through fully connected ReLU layers with a final Tanh, producing one
fixed-length segment of tanh-companded audio.  Training freezes the video
encoder and codebook; only the linear stack learns.
"""

from fractions import Fraction
from typing import List, Sequence

import numpy as np

from .errors import AlignmentError, ConfigurationError, ContractError, DimensionError, NumericError
from .media.clips import AudioClip, VideoClip
from .media.preprocess import artanh_denormalize, segment
from .ndtensor import Tensor, backward, no_grad, ops
from .vqvae import Codebook, EncoderNet, encode_for_inference


class AudioDecoderNet:
    """Linear stack: N*D inputs -> hidden widths (ReLU) -> S samples (Tanh)."""

    def __init__(self, rng: np.random.Generator, input_width: int,
                 hidden_widths: Sequence[int], output_width: int):
        if input_width < 1 or output_width < 1:
            raise ConfigurationError(
                f"input and output widths must be >= 1, got {input_width} and {output_width}"
            )
        widths = [input_width] + [int(w) for w in hidden_widths] + [output_width]
        if any(w < 1 for w in widths):
            raise ConfigurationError(f"hidden widths must all be >= 1, got {list(hidden_widths)}")
        self.input_width = input_width
        self.output_width = output_width
        self.hidden_widths = [int(w) for w in hidden_widths]
        self.layers: List[tuple] = []
        for i, (n_in, n_out) in enumerate(zip(widths[:-1], widths[1:])):
            w = Tensor(rng.uniform(-np.sqrt(1.0 / n_in), np.sqrt(1.0 / n_in),
                                   size=(n_out, n_in)).astype(np.float32),
                       requires_grad=True, name=f"audiodec.w{i}")
            b = Tensor(np.zeros(n_out, np.float32), requires_grad=True, name=f"audiodec.b{i}")
            self.layers.append((w, b))

    def named_parameters(self):
        out = []
        for i, (w, b) in enumerate(self.layers):
            out.append((f"audiodec.w{i}", w))
            out.append((f"audiodec.b{i}", b))
        return out


def flatten_latent(z_q) -> Tensor:
    """(B, D, T', H', W') -> (B, N*D), sites in T'H'W' order, D contiguous."""
    x = z_q if isinstance(z_q, Tensor) else Tensor(z_q)
    if x.data.ndim != 5:
        raise DimensionError(f"latent grid must be 5-D, got {x.data.ndim}-D")
    b, d = x.shape[0], x.shape[1]
    n = x.shape[2] * x.shape[3] * x.shape[4]
    return ops.reshape(ops.moveaxis(x, 1, 4), (b, n * d))


def unflatten_latent(flat, grid_shape) -> Tensor:
    """Inverse of :func:`flatten_latent` for a known (B, D, T', H', W')."""
    x = flat if isinstance(flat, Tensor) else Tensor(flat)
    b, d, t, h, w = grid_shape
    return ops.moveaxis(ops.reshape(x, (b, t, h, w, d)), 4, 1)


def synthesize(net: AudioDecoderNet, z_q) -> Tensor:
    """Decode a quantized latent grid into (B, S) samples in (-1, 1)."""
    flat = flatten_latent(z_q)
    if flat.shape[1] != net.input_width:
        raise ConfigurationError(
            f"decoder trained for flattened width {net.input_width}, "
            f"got {flat.shape[1]} from latent shape {tuple(z_q.shape)}"
        )
    h = flat
    for w, b in net.layers[:-1]:
        h = ops.relu(ops.linear(h, w, b))
    w, b = net.layers[-1]
    return ops.tanh(ops.linear(h, w, b))


def audiodec_train_step(net: AudioDecoderNet, frozen_encoder: EncoderNet,
                        frozen_codebook: Codebook, batch, optimizer) -> dict:
    """One decoder step against tanh-companded audio; encoder and codebook are
    read under no_grad and stay bitwise untouched."""
    for pair in batch.pairs:
        if pair.audio is None:
            raise ContractError("decoder training requires audio in every segment pair")
        if not pair.audio_normalized:
            raise ContractError("decoder training expects tanh-normalized audio targets")
    frames = batch.video_array()
    _, _, z_q = encode_for_inference(frozen_encoder, frozen_codebook, frames)

    target = batch.audio_array()
    if target.shape[1] != net.output_width:
        raise AlignmentError(
            f"audio target has {target.shape[1]} samples per segment, "
            f"decoder emits {net.output_width}"
        )
    pred = synthesize(net, z_q)
    loss = ops.mse(pred, Tensor(target))
    value = loss.item()
    if not np.isfinite(value):
        raise NumericError(f"aborting training step: non-finite audio mse {value}")
    backward(loss)
    optimizer.step()
    return {"audio_mse": value}


def synthesize_long(net: AudioDecoderNet, encoder: EncoderNet, codebook: Codebook,
                    video: VideoClip, segment_seconds: int, sample_rate: int) -> AudioClip:
    """Window a video of any length into segments, synthesize each, invert the
    tanh companding, and trim the concatenation to the true duration."""
    if video.num_frames < 1:
        raise ContractError("cannot synthesize audio for an empty video")
    pieces = []
    for pair in segment(video, None, segment_seconds, "infer"):
        frames = np.ascontiguousarray(pair.video.frames.transpose(1, 0, 2, 3))[None]
        _, _, z_q = encode_for_inference(encoder, codebook, frames)
        with no_grad():
            wave = synthesize(net, z_q)
        pieces.append(artanh_denormalize(wave.data[0]))
    total = np.concatenate(pieces)
    n_true = int(Fraction(video.num_frames) * sample_rate / video.fps + Fraction(1, 2))
    n_true = max(1, min(n_true, total.shape[0]))
    return AudioClip(samples=total[:n_true].copy(), sample_rate=sample_rate)
