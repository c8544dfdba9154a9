"""Binary checkpoint format.

Layout: magic ``SSYN1\\n``, a 4-byte little-endian length, a UTF-8 JSON header
(format version, stage tag, config snapshot, tensor directory), the tensor
payloads as row-major little-endian float32 concatenated in directory order,
and a trailing CRC32 of the payload bytes.  Loading then saving reproduces a
file byte for byte.
"""

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict

import numpy as np

from ..errors import (
    CheckpointChecksumError,
    CheckpointError,
    CheckpointStageError,
    CheckpointTruncatedError,
    CheckpointVersionError,
)
from ..ioutil import atomic_write_bytes

_MAGIC = b"SSYN1\n"
_VERSION = 1
STAGES = ("encoder", "decoder", "full")


@dataclass
class CheckpointState:
    stage: str
    config: dict
    tensors: Dict[str, np.ndarray] = field(default_factory=dict)


def save_checkpoint(state: CheckpointState, path):
    if state.stage not in STAGES:
        raise CheckpointStageError(f"stage must be one of {STAGES}, got {state.stage!r}")
    directory = []
    payload = bytearray()
    for name, tensor in state.tensors.items():
        # ascontiguousarray would promote 0-d tensors to 1-d; keep shapes exact
        arr = np.asarray(tensor, dtype="<f4")
        if arr.ndim and not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)
        if not np.isfinite(arr).all():
            raise CheckpointError(f"tensor {name!r} contains non-finite values; refusing to save")
        directory.append({"name": name, "shape": list(arr.shape)})
        payload.extend(arr.tobytes())
    header = json.dumps(
        {"version": _VERSION, "stage": state.stage, "config": state.config,
         "tensors": directory},
        sort_keys=True, separators=(",", ":"),
    ).encode("utf-8")
    blob = b"".join([
        _MAGIC,
        struct.pack("<I", len(header)),
        header,
        bytes(payload),
        struct.pack("<I", zlib.crc32(bytes(payload)) & 0xFFFFFFFF),
    ])
    atomic_write_bytes(path, blob)


def load_checkpoint(path, expected_stage: str = None) -> CheckpointState:
    data = Path(path).read_bytes()
    if len(data) < len(_MAGIC) + 4 or data[:len(_MAGIC)] != _MAGIC:
        raise CheckpointVersionError(
            f"{path}: not a recognized checkpoint (expected magic {_MAGIC!r})"
        )
    (header_len,) = struct.unpack_from("<I", data, len(_MAGIC))
    header_start = len(_MAGIC) + 4
    header_end = header_start + header_len
    if header_end > len(data):
        raise CheckpointTruncatedError(f"{path}: header declares {header_len} bytes, file ends early")
    try:
        header = json.loads(data[header_start:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: malformed header ({exc})") from None
    version = header.get("version")
    if version != _VERSION:
        raise CheckpointVersionError(f"{path}: format version {version}, this build reads {_VERSION}")
    stage = header.get("stage")
    if stage not in STAGES:
        raise CheckpointStageError(f"{path}: unknown stage tag {stage!r}")

    directory = header.get("tensors", [])
    names = [entry["name"] for entry in directory]
    if len(set(names)) != len(names):
        raise CheckpointError(f"{path}: duplicate tensor names in directory")
    payload_len = sum(int(np.prod(entry["shape"], dtype=np.int64)) for entry in directory) * 4
    payload_end = header_end + payload_len
    if payload_end + 4 > len(data):
        raise CheckpointTruncatedError(
            f"{path}: need {payload_len} payload bytes + checksum, "
            f"only {len(data) - header_end} present"
        )
    if payload_end + 4 != len(data):
        raise CheckpointTruncatedError(
            f"{path}: {len(data) - payload_end - 4} unexpected trailing bytes"
        )
    payload = data[header_end:payload_end]
    (stored_crc,) = struct.unpack_from("<I", data, payload_end)
    actual_crc = zlib.crc32(payload) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise CheckpointChecksumError(
            f"{path}: payload checksum mismatch (stored {stored_crc:#010x}, "
            f"computed {actual_crc:#010x})"
        )

    tensors = {}
    offset = 0
    for entry in directory:
        shape = tuple(int(s) for s in entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
        tensors[entry["name"]] = arr.reshape(shape).copy()
        offset += count * 4

    if expected_stage is not None and stage != expected_stage:
        raise CheckpointStageError(
            f"{path}: stage is {stage!r}, but {expected_stage!r} weights are required"
        )
    return CheckpointState(stage=stage, config=header.get("config", {}), tensors=tensors)
