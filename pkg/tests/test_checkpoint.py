"""Checkpoint serialization: bitwise round trips and corruption detection."""

import json
import struct

import numpy as np
import pytest

from ssyn.errors import (
    CheckpointChecksumError,
    CheckpointError,
    CheckpointStageError,
    CheckpointTruncatedError,
    CheckpointVersionError,
)
from ssyn.pipeline.checkpoint import CheckpointState, load_checkpoint, save_checkpoint

_MAGIC = b"SSYN1\n"


def _random_state(rng, stage="encoder"):
    tensors = {
        "encoder.conv0.kernel": rng.standard_normal((4, 3, 4, 4, 4)).astype(np.float32),
        "encoder.conv0.bias": rng.standard_normal(4).astype(np.float32),
        "codebook.embeddings": rng.standard_normal((8, 4)).astype(np.float32),
    }
    return CheckpointState(stage=stage, config={"K": 8, "D": 4}, tensors=tensors)


def _rewrite_header(blob: bytes, mutate) -> bytes:
    (header_len,) = struct.unpack_from("<I", blob, len(_MAGIC))
    start = len(_MAGIC) + 4
    header = json.loads(blob[start:start + header_len].decode("utf-8"))
    mutate(header)
    new = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return _MAGIC + struct.pack("<I", len(new)) + new + blob[start + header_len:]


def test_round_trip_bitwise(tmp_path):
    rng = np.random.default_rng(0)
    state = _random_state(rng)
    path = tmp_path / "enc.ssyn"
    save_checkpoint(state, path)
    loaded = load_checkpoint(path)
    assert loaded.stage == "encoder"
    assert loaded.config == {"K": 8, "D": 4}
    assert list(loaded.tensors) == list(state.tensors)
    for name in state.tensors:
        assert loaded.tensors[name].dtype == np.float32
        assert np.array_equal(
            loaded.tensors[name].view(np.uint32), state.tensors[name].view(np.uint32)
        )


def test_save_load_save_is_byte_identical(tmp_path):
    rng = np.random.default_rng(1)
    a = tmp_path / "a.ssyn"
    b = tmp_path / "b.ssyn"
    save_checkpoint(_random_state(rng), a)
    save_checkpoint(load_checkpoint(a), b)
    assert a.read_bytes() == b.read_bytes()


def test_round_trip_fuzzed_shapes(tmp_path):
    rng = np.random.default_rng(2)
    for trial in range(20):
        tensors = {}
        for i in range(rng.integers(0, 6)):
            ndim = int(rng.integers(0, 5))
            shape = tuple(int(rng.integers(1, 5)) for _ in range(ndim))
            tensors[f"t{i}"] = rng.standard_normal(shape).astype(np.float32)
        state = CheckpointState(stage="full", config={"trial": trial}, tensors=tensors)
        path = tmp_path / f"fuzz_{trial}.ssyn"
        save_checkpoint(state, path)
        loaded = load_checkpoint(path)
        assert list(loaded.tensors) == list(tensors)
        for name, arr in tensors.items():
            got = loaded.tensors[name]
            assert got.shape == arr.shape
            assert np.array_equal(got, arr)


def test_empty_tensor_table_round_trips(tmp_path):
    path = tmp_path / "empty.ssyn"
    save_checkpoint(CheckpointState(stage="decoder", config={}, tensors={}), path)
    loaded = load_checkpoint(path)
    assert loaded.tensors == {}
    assert loaded.stage == "decoder"


def test_truncated_payload_raises_truncation(tmp_path):
    path = tmp_path / "t.ssyn"
    save_checkpoint(_random_state(np.random.default_rng(3)), path)
    blob = path.read_bytes()
    path.write_bytes(blob[:-10])
    with pytest.raises(CheckpointTruncatedError):
        load_checkpoint(path)


def test_truncated_header_raises_truncation(tmp_path):
    path = tmp_path / "t.ssyn"
    save_checkpoint(_random_state(np.random.default_rng(4)), path)
    blob = path.read_bytes()
    path.write_bytes(blob[:len(_MAGIC) + 4 + 5])
    with pytest.raises(CheckpointTruncatedError):
        load_checkpoint(path)


def test_trailing_garbage_rejected(tmp_path):
    path = tmp_path / "t.ssyn"
    save_checkpoint(_random_state(np.random.default_rng(5)), path)
    path.write_bytes(path.read_bytes() + b"\x00\x01")
    with pytest.raises(CheckpointTruncatedError):
        load_checkpoint(path)


def test_flipped_payload_byte_raises_checksum(tmp_path):
    path = tmp_path / "c.ssyn"
    save_checkpoint(_random_state(np.random.default_rng(6)), path)
    blob = bytearray(path.read_bytes())
    blob[-20] ^= 0xFF  # inside the payload, well before the CRC
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointChecksumError):
        load_checkpoint(path)


def test_wrong_magic_raises_version(tmp_path):
    path = tmp_path / "v.ssyn"
    save_checkpoint(_random_state(np.random.default_rng(7)), path)
    blob = bytearray(path.read_bytes())
    blob[0] = ord("X")
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointVersionError):
        load_checkpoint(path)


def test_future_version_raises_version(tmp_path):
    path = tmp_path / "v2.ssyn"
    save_checkpoint(_random_state(np.random.default_rng(8)), path)
    path.write_bytes(_rewrite_header(path.read_bytes(),
                                     lambda h: h.__setitem__("version", 2)))
    with pytest.raises(CheckpointVersionError):
        load_checkpoint(path)


def test_unknown_stage_tag_raises_stage(tmp_path):
    path = tmp_path / "s.ssyn"
    save_checkpoint(_random_state(np.random.default_rng(9)), path)
    path.write_bytes(_rewrite_header(path.read_bytes(),
                                     lambda h: h.__setitem__("stage", "warmup")))
    with pytest.raises(CheckpointStageError):
        load_checkpoint(path)


def test_expected_stage_mismatch_raises_stage(tmp_path):
    path = tmp_path / "enc.ssyn"
    save_checkpoint(_random_state(np.random.default_rng(10), stage="encoder"), path)
    with pytest.raises(CheckpointStageError, match="full"):
        load_checkpoint(path, expected_stage="full")
    # the matching stage loads fine
    assert load_checkpoint(path, expected_stage="encoder").stage == "encoder"


def test_save_refuses_non_finite(tmp_path):
    bad = CheckpointState(
        stage="encoder", config={},
        tensors={"w": np.array([1.0, np.nan], dtype=np.float32)},
    )
    path = tmp_path / "bad.ssyn"
    with pytest.raises(CheckpointError, match="w"):
        save_checkpoint(bad, path)
    assert not path.exists()


def test_save_refuses_unknown_stage(tmp_path):
    with pytest.raises(CheckpointStageError):
        save_checkpoint(CheckpointState(stage="bootstrapping", config={}, tensors={}),
                        tmp_path / "x.ssyn")


def test_header_is_deterministic_json(tmp_path):
    # same state saved twice, even with different dict insertion history,
    # serializes identically
    rng = np.random.default_rng(11)
    w = rng.standard_normal((2, 2)).astype(np.float32)
    a = CheckpointState(stage="full", config={"b": 2, "a": 1}, tensors={"w": w})
    b = CheckpointState(stage="full", config={"a": 1, "b": 2}, tensors={"w": w})
    pa, pb = tmp_path / "a.ssyn", tmp_path / "b.ssyn"
    save_checkpoint(a, pa)
    save_checkpoint(b, pb)
    assert pa.read_bytes() == pb.read_bytes()


def test_scalar_tensor_round_trips(tmp_path):
    state = CheckpointState(stage="full", config={},
                            tensors={"s": np.float32(3.5)})
    path = tmp_path / "s.ssyn"
    save_checkpoint(state, path)
    loaded = load_checkpoint(path)
    assert loaded.tensors["s"].shape == ()
    assert float(loaded.tensors["s"]) == 3.5
