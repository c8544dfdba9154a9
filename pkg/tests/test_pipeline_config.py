"""Config parsing, defaults, and invariant validation."""

import dataclasses

import pytest

from ssyn.errors import ConfigurationError, ValidationError
from ssyn.pipeline.config import Config, load_config, parse_config


def test_empty_file_gives_full_defaults(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("")
    cfg = load_config(path)
    assert cfg == Config()


def test_defaults_are_the_documented_values():
    cfg = Config()
    assert (cfg.width, cfg.height, cfg.fps) == (256, 144, 10)
    assert (cfg.segment_seconds, cfg.sample_rate) == (10, 8000)
    assert cfg.batch_max == 2
    assert (cfg.codebook_size, cfg.embed_dim, cfg.hidden_channels) == (128, 64, 32)
    assert cfg.decoder_hidden == [512, 512]
    assert cfg.beta == 0.25
    assert cfg.epochs == 1 and cfg.seed == 0


def test_width_not_divisible_by_4_rejected():
    with pytest.raises(ValidationError):
        parse_config("width = 50")


def test_width_divisible_by_4_accepted():
    # 100 = 4 * 25: both stride-2 halvings land exactly
    assert parse_config("width = 100").latent_grid_shape()[3] == 25


def test_minimal_codebook_accepted():
    cfg = parse_config("K = 2")
    assert cfg.codebook_size == 2


def test_codebook_of_one_rejected():
    with pytest.raises(ValidationError):
        parse_config("K = 1")


def test_unknown_key_error_names_it():
    with pytest.raises(ConfigurationError, match="learning_rate"):
        parse_config("learning_rate = 0.1")


def test_parse_error_carries_line_number():
    with pytest.raises(ConfigurationError, match="line 3"):
        parse_config("width = 256\nheight = 144\nnot a key value line\n")


def test_comments_and_blank_lines_ignored():
    text = "# full-line comment\n\nwidth = 8\nheight = 8  # trailing comment\n"
    cfg = parse_config(text)
    assert (cfg.width, cfg.height) == (8, 8)


@pytest.mark.parametrize("literal", ["[16, 32]", "16, 32", "16,32"])
def test_decoder_hidden_list_forms(literal):
    cfg = parse_config(f"decoder_hidden = {literal}")
    assert cfg.decoder_hidden == [16, 32]


def test_k_and_d_map_to_codebook_fields():
    cfg = parse_config("K = 16\nD = 8")
    assert cfg.codebook_size == 16
    assert cfg.embed_dim == 8


def test_non_integer_value_rejected_with_key():
    with pytest.raises(ConfigurationError, match="fps"):
        parse_config("fps = fast")


def test_frames_per_segment_must_be_divisible_by_4():
    # 3 fps * 10 s = 30 frames, not a multiple of 4
    with pytest.raises(ValidationError):
        parse_config("fps = 3")
    cfg = parse_config("fps = 4\nsegment_seconds = 1")
    assert cfg.frames_per_segment == 4


def test_latent_grid_shape_matches_stride_arithmetic():
    cfg = Config()
    assert cfg.latent_grid_shape() == (64, 25, 36, 64)
    assert cfg.flattened_width == 64 * 25 * 36 * 64


def test_mapping_round_trip_preserves_every_field():
    cfg = parse_config("K = 16\nD = 8\ndecoder_hidden = 4, 4\nbeta = 0.5\nseed = 7")
    clone = Config.from_mapping(cfg.to_mapping())
    assert clone == cfg


def test_from_mapping_rejects_unknown_key():
    with pytest.raises(ConfigurationError, match="codebook"):
        Config.from_mapping({"codebook": 8})


def test_last_duplicate_key_wins():
    cfg = parse_config("seed = 1\nseed = 2\n")
    assert cfg.seed == 2


@pytest.mark.parametrize("line", [
    "height = 0", "fps = 0", "segment_seconds = 0", "sample_rate = 0",
    "batch_max = 0", "D = 0", "hidden_channels = 0", "beta = -0.1",
    "lr_encoder = 0", "epochs = 0", "seed = -1", "decoder_hidden = 0",
])
def test_out_of_range_values_rejected(line):
    with pytest.raises(ValidationError):
        parse_config(line)


def test_validate_returns_self_for_chaining():
    cfg = Config()
    assert cfg.validate() is cfg


def test_config_is_a_plain_dataclass():
    names = {f.name for f in dataclasses.fields(Config)}
    assert {"width", "height", "fps", "codebook_size", "embed_dim"} <= names
