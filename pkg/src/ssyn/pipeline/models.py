"""Model construction, seed fan-out, and checkpoint (de)serialization glue."""

import numpy as np

from ..audiodec import AudioDecoderNet
from ..errors import CheckpointError
from ..vqvae import Codebook, EncoderNet, ReconDecoderNet, VqvaeNets
from .config import Config

# One master seed fans out to fixed, named substreams so each component's
# initialization is reproducible independently of the others.
_STREAMS = ("encoder", "recon", "codebook", "audiodec", "data")


def spawn_rngs(seed: int) -> dict:
    children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
    return {name: np.random.default_rng(child) for name, child in zip(_STREAMS, children)}


def build_vqvae(config: Config, rngs: dict):
    nets = VqvaeNets(
        encoder=EncoderNet(rngs["encoder"], embed_dim=config.embed_dim,
                           hidden_channels=config.hidden_channels),
        recon=ReconDecoderNet(rngs["recon"], embed_dim=config.embed_dim,
                              hidden_channels=config.hidden_channels),
    )
    codebook = Codebook(rngs["codebook"], config.codebook_size, config.embed_dim)
    return nets, codebook


def build_audiodec(config: Config, rng) -> AudioDecoderNet:
    return AudioDecoderNet(rng, input_width=config.flattened_width,
                           hidden_widths=config.decoder_hidden,
                           output_width=config.samples_per_segment)


def vqvae_tensor_table(nets: VqvaeNets, codebook: Codebook) -> dict:
    return {name: p.data for name, p in nets.named_parameters() + codebook.named_parameters()}


def audiodec_tensor_table(net: AudioDecoderNet) -> dict:
    return {name: p.data for name, p in net.named_parameters()}


def _apply_tensors(named_params, tensors: dict, source: str):
    for name, param in named_params:
        if name not in tensors:
            raise CheckpointError(f"{source}: missing tensor {name!r}")
        arr = tensors[name]
        if tuple(arr.shape) != param.shape:
            raise CheckpointError(
                f"{source}: tensor {name!r} has shape {tuple(arr.shape)}, "
                f"model expects {param.shape}"
            )
        param.data = np.ascontiguousarray(arr, dtype=np.float32)


def restore_vqvae(config: Config, tensors: dict, source: str = "checkpoint"):
    """Rebuild encoder, reconstruction decoder, and codebook from a table."""
    nets, codebook = build_vqvae(config, spawn_rngs(0))
    _apply_tensors(nets.named_parameters() + codebook.named_parameters(), tensors, source)
    return nets, codebook


def restore_audiodec(config: Config, tensors: dict, source: str = "checkpoint") -> AudioDecoderNet:
    net = build_audiodec(config, spawn_rngs(0)["audiodec"])
    _apply_tensors(net.named_parameters(), tensors, source)
    return net
