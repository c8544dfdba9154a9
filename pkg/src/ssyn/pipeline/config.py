"""Run configuration: a flat `key = value` text format with hash comments.

Unset keys take the defaults below.  Validation enforces the structural
invariants the models rely on (dimensions divisible by 4, sane ranges).
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List

from ..errors import ConfigurationError, ValidationError


@dataclass
class Config:
    width: int = 256
    height: int = 144
    fps: int = 10
    segment_seconds: int = 10
    sample_rate: int = 8000
    batch_max: int = 2
    codebook_size: int = 128
    embed_dim: int = 64
    hidden_channels: int = 32
    decoder_hidden: List[int] = field(default_factory=lambda: [512, 512])
    beta: float = 0.25
    lr_encoder: float = 1e-3
    lr_decoder: float = 1e-3
    epochs: int = 1
    seed: int = 0

    # -------------------------------------------------- derived quantities

    @property
    def frames_per_segment(self) -> int:
        return self.fps * self.segment_seconds

    @property
    def samples_per_segment(self) -> int:
        return self.sample_rate * self.segment_seconds

    def latent_grid_shape(self) -> tuple:
        """(D, T', H', W') for one segment after the two stride-2 blocks."""
        return (self.embed_dim, self.frames_per_segment // 4,
                self.height // 4, self.width // 4)

    @property
    def flattened_width(self) -> int:
        d, t, h, w = self.latent_grid_shape()
        return d * t * h * w

    def validate(self):
        if self.width < 8 or self.width % 4:
            raise ValidationError(f"width must be >= 8 and divisible by 4, got {self.width}")
        if self.height < 8 or self.height % 4:
            raise ValidationError(f"height must be >= 8 and divisible by 4, got {self.height}")
        if self.fps < 1:
            raise ValidationError(f"fps must be >= 1, got {self.fps}")
        if self.segment_seconds < 1:
            raise ValidationError(f"segment_seconds must be >= 1, got {self.segment_seconds}")
        if self.frames_per_segment % 4:
            raise ValidationError(
                f"fps * segment_seconds = {self.frames_per_segment} must be divisible by 4"
            )
        if self.sample_rate < 1:
            raise ValidationError(f"sample_rate must be >= 1, got {self.sample_rate}")
        if self.batch_max < 1:
            raise ValidationError(f"batch_max must be >= 1, got {self.batch_max}")
        if self.codebook_size < 2:
            raise ValidationError(f"K must be >= 2, got {self.codebook_size}")
        if self.embed_dim < 1:
            raise ValidationError(f"D must be >= 1, got {self.embed_dim}")
        if self.hidden_channels < 1:
            raise ValidationError(f"hidden_channels must be >= 1, got {self.hidden_channels}")
        if any(w < 1 for w in self.decoder_hidden):
            raise ValidationError(f"decoder_hidden widths must be >= 1, got {self.decoder_hidden}")
        if self.beta < 0:
            raise ValidationError(f"beta must be >= 0, got {self.beta}")
        if self.lr_encoder <= 0 or self.lr_decoder <= 0:
            raise ValidationError("learning rates must be positive, got "
                                  f"{self.lr_encoder} and {self.lr_decoder}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.seed < 0:
            raise ValidationError(f"seed must be >= 0, got {self.seed}")
        return self

    def to_mapping(self) -> dict:
        """JSON-safe snapshot using the external key names."""
        out = {}
        for name in sorted(_KEY_TO_FIELD):
            value = getattr(self, _KEY_TO_FIELD[name])
            out[name] = list(value) if isinstance(value, list) else value
        return out

    @classmethod
    def from_mapping(cls, mapping: dict) -> "Config":
        cfg = cls()
        for key, value in mapping.items():
            if key not in _KEY_TO_FIELD:
                raise ConfigurationError(f"unknown config key {key!r}")
            setattr(cfg, _KEY_TO_FIELD[key], _COERCERS[key](value))
        return cfg.validate()


# External key names; K and D follow the conventional codebook notation.
_KEY_TO_FIELD = {
    "width": "width",
    "height": "height",
    "fps": "fps",
    "segment_seconds": "segment_seconds",
    "sample_rate": "sample_rate",
    "batch_max": "batch_max",
    "K": "codebook_size",
    "D": "embed_dim",
    "hidden_channels": "hidden_channels",
    "decoder_hidden": "decoder_hidden",
    "beta": "beta",
    "lr_encoder": "lr_encoder",
    "lr_decoder": "lr_decoder",
    "epochs": "epochs",
    "seed": "seed",
}

def _coerce_int(key):
    def conv(value):
        if isinstance(value, bool):
            raise ConfigurationError(f"config key {key!r} expects an integer, got {value!r}")
        if isinstance(value, int):
            return value
        try:
            return int(str(value).strip())
        except ValueError:
            raise ConfigurationError(f"config key {key!r} expects an integer, "
                                     f"got {value!r}") from None
    return conv


def _coerce_float(key):
    def conv(value):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        try:
            return float(str(value).strip())
        except ValueError:
            raise ConfigurationError(f"config key {key!r} expects a number, "
                                     f"got {value!r}") from None
    return conv


def _coerce_int_list(key):
    base = _coerce_int(key)

    def conv(value):
        if isinstance(value, (list, tuple)):
            return [base(v) for v in value]
        text = str(value).strip().strip("[]").strip()
        if not text:
            return []
        return [base(part) for part in text.split(",")]
    return conv


_COERCERS = {}
for _key, _field in _KEY_TO_FIELD.items():
    if _field == "decoder_hidden":
        _COERCERS[_key] = _coerce_int_list(_key)
    elif _field == "beta" or _field.startswith("lr_"):
        _COERCERS[_key] = _coerce_float(_key)
    else:
        _COERCERS[_key] = _coerce_int(_key)


def parse_config(text: str) -> Config:
    cfg = Config()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEY_TO_FIELD:
            raise ConfigurationError(f"line {lineno}: unknown config key {key!r}")
        setattr(cfg, _KEY_TO_FIELD[key], _COERCERS[key](value))
    return cfg.validate()


def load_config(path) -> Config:
    return parse_config(Path(path).read_text(encoding="utf-8"))
