"""The two training stages and their shared dataset plumbing.

A dataset directory pairs videos with audio by filename stem:
``clip01.y4m`` (or ``.rvid``) + ``clip01.wav``.  Stage one fits the video
discretizer; stage two freezes it and fits the audio decoder.  Both write one
checkpoint per epoch plus a ``*_latest`` copy, and a CSV log of per-step loss
components.
"""

import dataclasses
import time
from pathlib import Path
from typing import List, Optional, Tuple

from ..audiodec import audiodec_train_step
from ..errors import (
    AlignmentError,
    CheckpointStageError,
    ContractError,
    NumericError,
    ValidationError,
)
from ..media import (
    make_batches,
    normalize_audio,
    read_rvid,
    read_wav,
    read_y4m,
    resample_fps,
    resize_bilinear,
    segment,
)
from ..ioutil import atomic_write_text
from ..media.clips import SegmentPair, VideoClip
from ..ndtensor import Optimizer
from ..vqvae import vqvae_train_step
from .checkpoint import CheckpointState, load_checkpoint, save_checkpoint
from .config import Config
from .models import (
    audiodec_tensor_table,
    build_audiodec,
    build_vqvae,
    restore_vqvae,
    spawn_rngs,
    vqvae_tensor_table,
)

_VIDEO_READERS = {".y4m": read_y4m, ".rvid": read_rvid}


class TrainLog:
    """Per-step loss records, serialized as CSV.

    The ``ms`` wall-time column is observational; determinism comparisons use
    :meth:`canonical`, which excludes it.
    """

    COLUMNS = ("step", "recon", "quant", "commit", "audio_mse", "total", "ms")

    def __init__(self):
        self.rows: List[dict] = []

    def append(self, **fields):
        row = {col: fields.get(col) for col in self.COLUMNS}
        if self.rows and row["step"] <= self.rows[-1]["step"]:
            raise ContractError("log step indices must be strictly increasing")
        self.rows.append(row)

    @staticmethod
    def _cell(value) -> str:
        if value is None:
            return ""
        if isinstance(value, float):
            return repr(value)
        return str(value)

    def to_csv_text(self) -> str:
        lines = [",".join(self.COLUMNS)]
        for row in self.rows:
            lines.append(",".join(self._cell(row[col]) for col in self.COLUMNS))
        return "\n".join(lines) + "\n"

    def write(self, path):
        atomic_write_text(path, self.to_csv_text())

    def canonical(self) -> List[tuple]:
        return [tuple(row[col] for col in self.COLUMNS if col != "ms") for row in self.rows]


def discover_dataset(data_dir) -> List[Tuple[Path, Optional[Path]]]:
    """List (video, wav-or-None) pairs, sorted by video filename."""
    root = Path(data_dir)
    if not root.is_dir():
        raise ValidationError(f"dataset directory not found: {root}")
    entries = []
    for path in sorted(root.iterdir()):
        if path.suffix.lower() in _VIDEO_READERS:
            wav = path.with_suffix(".wav")
            entries.append((path, wav if wav.exists() else None))
    return entries


def preprocess_clip(config: Config, clip: VideoClip) -> VideoClip:
    clip = resize_bilinear(clip, config.width, config.height)
    return resample_fps(clip, config.fps)


def load_training_pairs(config: Config, data_dir) -> List[SegmentPair]:
    """Read, preprocess, segment, and tanh-normalize every dataset pair."""
    pairs: List[SegmentPair] = []
    for video_path, wav_path in discover_dataset(data_dir):
        if wav_path is None:
            raise AlignmentError(f"{video_path}: no matching audio track "
                                 f"({video_path.stem}.wav not found)")
        clip = _VIDEO_READERS[video_path.suffix.lower()](video_path)
        audio = read_wav(wav_path)
        clip = preprocess_clip(config, clip)
        try:
            segmented = segment(clip, audio, config.segment_seconds, "train")
        except AlignmentError as exc:
            raise AlignmentError(f"{video_path}: {exc}") from None
        for pair in segmented:
            pairs.append(dataclasses.replace(
                pair, audio=normalize_audio(pair.audio), audio_normalized=True))
    return pairs


def _prepare(config: Config, data_dir):
    pairs = load_training_pairs(config, data_dir)
    if not pairs:
        raise ValidationError(
            f"no usable training segments in {data_dir}; need at least one "
            f"video/audio pair spanning {config.segment_seconds}s"
        )
    return make_batches(pairs, config.batch_max)


def _run_epochs(config: Config, batches, step_fn, out_dir: Path, stage_prefix: str,
                snapshot_fn, log_row_fn):
    """Shared epoch loop: steps, per-epoch checkpoints, abort-on-non-finite."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log = TrainLog()
    log_path = out_dir / f"train_{stage_prefix}_log.csv"
    state = None
    step = 0
    try:
        for epoch in range(1, config.epochs + 1):
            for batch in batches:
                if len(batch) > config.batch_max:
                    raise ContractError(
                        f"batch of {len(batch)} exceeds batch_max={config.batch_max}"
                    )
                t0 = time.perf_counter()
                record = step_fn(batch)
                elapsed_ms = int((time.perf_counter() - t0) * 1000)
                step += 1
                log.append(step=step, ms=elapsed_ms, **log_row_fn(record))
            state = snapshot_fn()
            save_checkpoint(state, out_dir / f"{stage_prefix}_epoch_{epoch:03d}.ssyn")
            save_checkpoint(state, out_dir / f"{stage_prefix}_latest.ssyn")
    except NumericError:
        # Leave previously written epoch checkpoints in place as the last
        # good state; persist the log for the post-mortem.
        log.write(log_path)
        raise
    log.write(log_path)
    return state, log


def train_encoder(config: Config, data_dir, out_dir) -> Tuple[CheckpointState, TrainLog]:
    """Stage one: fit encoder, codebook, and reconstruction decoder."""
    batches = _prepare(config, data_dir)
    rngs = spawn_rngs(config.seed)
    nets, codebook = build_vqvae(config, rngs)
    params = [p for _, p in nets.named_parameters() + codebook.named_parameters()]
    opt = Optimizer(params, lr=config.lr_encoder, mode="adaptive")

    def step_fn(batch):
        return vqvae_train_step(nets, codebook, batch, opt, beta=config.beta)

    def snapshot_fn():
        return CheckpointState(stage="encoder", config=config.to_mapping(),
                               tensors=vqvae_tensor_table(nets, codebook))

    def log_row_fn(record):
        return {"recon": record["recon"], "quant": record["quant"],
                "commit": record["commit"], "total": record["total"]}

    return _run_epochs(config, batches, step_fn, out_dir, "encoder", snapshot_fn, log_row_fn)


def train_decoder(config: Config, data_dir, encoder_ckpt, out_dir
                  ) -> Tuple[CheckpointState, TrainLog]:
    """Stage two: freeze the stage-one weights and fit the audio decoder.

    Writes per-epoch decoder checkpoints plus ``full_latest.ssyn`` combining
    both stages for inference.
    """
    enc_state = load_checkpoint(encoder_ckpt)
    if enc_state.stage not in ("encoder", "full"):
        raise CheckpointStageError(
            f"{encoder_ckpt}: stage is {enc_state.stage!r}; decoder training "
            "needs 'encoder' or 'full' weights"
        )
    nets, codebook = restore_vqvae(config, enc_state.tensors, source=str(encoder_ckpt))

    batches = _prepare(config, data_dir)
    rngs = spawn_rngs(config.seed)
    decoder = build_audiodec(config, rngs["audiodec"])
    opt = Optimizer([p for _, p in decoder.named_parameters()],
                    lr=config.lr_decoder, mode="adaptive")

    def step_fn(batch):
        return audiodec_train_step(decoder, nets.encoder, codebook, batch, opt)

    def snapshot_fn():
        full = dict(vqvae_tensor_table(nets, codebook))
        full.update(audiodec_tensor_table(decoder))
        save_checkpoint(CheckpointState(stage="full", config=config.to_mapping(),
                                        tensors=full),
                        Path(out_dir) / "full_latest.ssyn")
        return CheckpointState(stage="decoder", config=config.to_mapping(),
                               tensors=audiodec_tensor_table(decoder))

    def log_row_fn(record):
        return {"audio_mse": record["audio_mse"], "total": record["audio_mse"]}

    return _run_epochs(config, batches, step_fn, out_dir, "decoder", snapshot_fn, log_row_fn)
