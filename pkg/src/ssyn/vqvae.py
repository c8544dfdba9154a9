"""Video discretizer: a 3-D convolutional encoder, a nearest-neighbor vector
quantizer with its two training losses, and a transposed-conv reconstruction
decoder used to validate what the codes retain.

Gradient routing is the heart of this module: the quantization loss updates
only the codebook, the commitment loss only the encoder, and the
straight-through estimator copies quantized values forward while passing
reconstruction gradients back to the encoder unchanged.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ConfigurationError, ContractError, DimensionError, NumericError
from .ndtensor import Tensor, backward, no_grad, ops

_KERNEL = 4
_STRIDE = 2
_PAD = 1


def _scaled_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    # variance-preserving scale for ReLU stacks; too-small latents otherwise
    # collapse into a single code at the quantizer
    std = float(np.sqrt(2.0 / fan_in))
    return (rng.standard_normal(size=shape) * std).astype(np.float32)


class EncoderNet:
    """Two stride-2 conv3d+ReLU blocks, 3 -> hidden -> D channels."""

    def __init__(self, rng: np.random.Generator, embed_dim: int, hidden_channels: int = 32,
                 in_channels: int = 3):
        if embed_dim < 1:
            raise ConfigurationError(f"embed_dim must be >= 1, got {embed_dim}")
        if hidden_channels < 1:
            raise ConfigurationError(f"hidden_channels must be >= 1, got {hidden_channels}")
        self.in_channels = in_channels
        self.hidden_channels = hidden_channels
        self.embed_dim = embed_dim
        k3 = _KERNEL ** 3
        self.conv1_w = Tensor(_scaled_init(rng, (hidden_channels, in_channels) + (_KERNEL,) * 3,
                                            in_channels * k3),
                              requires_grad=True, name="encoder.conv1_w")
        self.conv1_b = Tensor(np.zeros(hidden_channels, np.float32), requires_grad=True,
                              name="encoder.conv1_b")
        self.conv2_w = Tensor(_scaled_init(rng, (embed_dim, hidden_channels) + (_KERNEL,) * 3,
                                            hidden_channels * k3),
                              requires_grad=True, name="encoder.conv2_w")
        self.conv2_b = Tensor(np.zeros(embed_dim, np.float32), requires_grad=True,
                              name="encoder.conv2_b")

    def named_parameters(self):
        return [("encoder.conv1_w", self.conv1_w), ("encoder.conv1_b", self.conv1_b),
                ("encoder.conv2_w", self.conv2_w), ("encoder.conv2_b", self.conv2_b)]


class Codebook:
    """K learnable D-dimensional latent vectors."""

    def __init__(self, rng: np.random.Generator, size: int, embed_dim: int):
        if size < 2:
            raise ConfigurationError(f"codebook size must be >= 2, got {size}")
        if embed_dim < 1:
            raise ConfigurationError(f"embed_dim must be >= 1, got {embed_dim}")
        # ReLU latents are non-negative; spreading rows across [0, 1) keeps
        # initial assignments diverse instead of funneling into one near-origin row
        init = rng.uniform(0.0, 1.0, size=(size, embed_dim)).astype(np.float32)
        self.embeddings = Tensor(init, requires_grad=True, name="codebook.embeddings")

    @property
    def size(self) -> int:
        return self.embeddings.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.embeddings.shape[1]

    def named_parameters(self):
        return [("codebook.embeddings", self.embeddings)]


class ReconDecoderNet:
    """Two stride-2 transposed-conv blocks, D -> hidden -> 3, ReLU between and
    Sigmoid at the end so reconstructions live in (0, 1)."""

    def __init__(self, rng: np.random.Generator, embed_dim: int, hidden_channels: int = 32,
                 out_channels: int = 3):
        # Transposed kernels are stored (C_in, C_out, kT, kH, kW).  With
        # stride s, each output position receives C_in * (k/s)^3 taps, so the
        # fan is k^3 / s^3 per input channel.
        fan_taps = _KERNEL ** 3 // _STRIDE ** 3
        self.deconv1_w = Tensor(_scaled_init(rng, (embed_dim, hidden_channels) + (_KERNEL,) * 3,
                                              embed_dim * fan_taps),
                                requires_grad=True, name="recon.deconv1_w")
        self.deconv1_b = Tensor(np.zeros(hidden_channels, np.float32), requires_grad=True,
                                name="recon.deconv1_b")
        self.deconv2_w = Tensor(_scaled_init(rng, (hidden_channels, out_channels) + (_KERNEL,) * 3,
                                              hidden_channels * fan_taps),
                                requires_grad=True, name="recon.deconv2_w")
        self.deconv2_b = Tensor(np.zeros(out_channels, np.float32), requires_grad=True,
                                name="recon.deconv2_b")
        self.embed_dim = embed_dim
        self.hidden_channels = hidden_channels
        self.out_channels = out_channels

    def named_parameters(self):
        return [("recon.deconv1_w", self.deconv1_w), ("recon.deconv1_b", self.deconv1_b),
                ("recon.deconv2_w", self.deconv2_w), ("recon.deconv2_b", self.deconv2_b)]


@dataclass
class VqvaeNets:
    encoder: EncoderNet
    recon: ReconDecoderNet

    def named_parameters(self):
        return self.encoder.named_parameters() + self.recon.named_parameters()


def encode(net: EncoderNet, video) -> Tensor:
    """Map (B, 3, T, H, W) video to the latent grid (B, D, T/4, H/4, W/4)."""
    x = video if isinstance(video, Tensor) else Tensor(video)
    if x.data.ndim != 5:
        raise DimensionError(f"encoder input must be 5-D (B, C, T, H, W), got {x.data.ndim}-D")
    if x.shape[1] != net.in_channels:
        raise DimensionError(f"encoder expects {net.in_channels} channels, got {x.shape[1]}")
    for axis, name in ((2, "T"), (3, "H"), (4, "W")):
        extent = x.shape[axis]
        if extent < 4 or extent % 4:
            raise ConfigurationError(
                f"encoder input axis {name}={extent} must be >= 4 and divisible by 4"
            )
    h = ops.relu(ops.conv3d(x, net.conv1_w, net.conv1_b, stride=_STRIDE, padding=_PAD))
    return ops.relu(ops.conv3d(h, net.conv2_w, net.conv2_b, stride=_STRIDE, padding=_PAD))


# Distance buffers are chunked to keep peak memory flat at any grid size.
_QUANT_CHUNK_FLOATS = 4_000_000


def nearest_code_indices(flat: np.ndarray, embeddings: np.ndarray) -> np.ndarray:
    """Argmin-of-squared-distance over codebook rows for (n, D) float sites.

    Distances are accumulated in float64 from the raw differences, so exact
    ties resolve to the lowest index with no cancellation surprises.
    """
    n, _ = flat.shape
    k = embeddings.shape[0]
    e64 = embeddings.astype(np.float64)
    f64 = flat.astype(np.float64)
    out = np.empty(n, dtype=np.int64)
    chunk = max(1, _QUANT_CHUNK_FLOATS // max(1, k * embeddings.shape[1]))
    for start in range(0, n, chunk):
        block = f64[start:start + chunk]
        d = block[:, None, :] - e64[None, :, :]
        np.square(d, out=d)
        out[start:start + chunk] = d.sum(axis=2).argmin(axis=1)
    return out


def quantize(z_e: Tensor, codebook: Codebook) -> Tuple[np.ndarray, Tensor]:
    """Snap every latent site to its nearest codebook row.

    Returns the integer code grid (B, T', H', W') and z_q as a tensor wired to
    the codebook, so losses on z_q update the embeddings.
    """
    if z_e.shape[1] != codebook.embed_dim:
        raise DimensionError(
            f"latent dimension {z_e.shape[1]} does not match codebook dimension {codebook.embed_dim}"
        )
    if not np.isfinite(z_e.data).all():
        raise NumericError("latent grid contains non-finite values")
    b, d = z_e.shape[0], z_e.shape[1]
    spatial = z_e.shape[2:]
    flat = np.moveaxis(z_e.data, 1, 4).reshape(-1, d)
    idx = nearest_code_indices(flat, codebook.embeddings.data)
    indices = idx.reshape((b,) + spatial)

    rows = ops.embedding_rows(codebook.embeddings, idx)
    z_q = ops.moveaxis(ops.reshape(rows, (b,) + spatial + (d,)), 4, 1)
    return indices, z_q


def vq_losses(z_e: Tensor, z_q: Tensor, beta: float) -> Tuple[Tensor, Tensor]:
    """The two quantizer losses, both returned unweighted.

    The quantization loss compares z_q against frozen encodings (gradient
    reaches only the codebook); the commitment loss compares z_e against
    frozen codes (gradient reaches only the encoder).  The caller applies the
    ``beta`` weight to the commitment term when composing the total.
    """
    if z_e.shape != z_q.shape:
        raise DimensionError(f"z_e shape {z_e.shape} does not match z_q shape {z_q.shape}")
    if beta < 0:
        raise ConfigurationError(f"beta must be >= 0, got {beta}")
    quantization = ops.mse(z_q, ops.detach(z_e))
    commitment = ops.mse(z_e, ops.detach(z_q))
    return quantization, commitment


def straight_through(z_e: Tensor, z_q: Tensor) -> Tensor:
    """Forward exactly z_q; backward the identity into z_e."""
    if z_e.shape != z_q.shape:
        raise DimensionError(f"z_e shape {z_e.shape} does not match z_q shape {z_q.shape}")
    return ops.straight_through(z_e, z_q)


def reconstruct(net: ReconDecoderNet, z_q: Tensor) -> Tensor:
    """Upsample the (quantized) latent grid back to (B, 3, T, H, W) pixels."""
    x = z_q if isinstance(z_q, Tensor) else Tensor(z_q)
    if x.data.ndim != 5:
        raise DimensionError(f"reconstruction input must be 5-D, got {x.data.ndim}-D")
    if x.shape[1] != net.embed_dim:
        raise DimensionError(f"reconstruction expects {net.embed_dim} channels, got {x.shape[1]}")
    h = ops.relu(ops.conv3d_transpose(x, net.deconv1_w, net.deconv1_b,
                                      stride=_STRIDE, padding=_PAD))
    return ops.sigmoid(ops.conv3d_transpose(h, net.deconv2_w, net.deconv2_b,
                                            stride=_STRIDE, padding=_PAD))


def vqvae_train_step(nets: VqvaeNets, codebook: Codebook, batch, optimizer,
                     beta: float = 0.25) -> dict:
    """One full training step: forward, three-term loss, backward, update.

    total = recon_mse + quantization + beta * commitment.  When beta == 0 the
    commitment term is left out of the graph entirely so gradients match a
    commitment-free run bit for bit.
    """
    x = Tensor(batch.video_array())
    z_e = encode(nets.encoder, x)
    indices, z_q = quantize(z_e, codebook)
    quantization, commitment = vq_losses(z_e, z_q, beta)
    st = straight_through(z_e, z_q)
    recon = reconstruct(nets.recon, st)
    recon_loss = ops.mse(recon, x)

    total = ops.add(recon_loss, quantization)
    if beta != 0.0:
        total = ops.add(total, ops.mul(commitment, float(beta)))

    record = {
        "recon": recon_loss.item(),
        "quant": quantization.item(),
        "commit": commitment.item(),
        "total": total.item(),
    }
    bad = [k for k, v in record.items() if not np.isfinite(v)]
    if bad:
        raise NumericError(
            "aborting training step: non-finite loss component(s) "
            + ", ".join(f"{k}={record[k]}" for k in bad)
        )
    backward(total)
    optimizer.step()
    record["indices"] = indices
    return record


def pad_frames_to_multiple(frames: np.ndarray, multiple: int = 4) -> np.ndarray:
    """Repeat the final frame of a (B, C, T, H, W) array until T divides evenly."""
    t = frames.shape[2]
    rem = t % multiple
    if rem == 0:
        return frames
    tail = np.repeat(frames[:, :, -1:], multiple - rem, axis=2)
    return np.concatenate([frames, tail], axis=2)


def encode_for_inference(encoder: EncoderNet, codebook: Codebook, frames: np.ndarray):
    """Encode and quantize pixels with no gradient graph; pads the frame count
    by repeating the last frame when it does not divide by 4."""
    if frames.ndim != 5:
        raise ContractError(f"inference input must be 5-D (B, C, T, H, W), got {frames.ndim}-D")
    with no_grad():
        z_e = encode(encoder, Tensor(pad_frames_to_multiple(frames)))
        indices, z_q = quantize(z_e, codebook)
    return z_e, indices, z_q
