"""Binary PGM/PPM writers and the code-grid visualizer."""

from pathlib import Path

import numpy as np

from ..errors import ContractError
from ..ioutil import atomic_write_bytes


def write_pgm(array: np.ndarray, path):
    """Write a 2-D uint8 array as a binary (P5) PGM image."""
    if array.ndim != 2:
        raise ContractError(f"PGM image must be 2-D, got {array.ndim}-D")
    arr = np.ascontiguousarray(array, dtype=np.uint8)
    h, w = arr.shape
    atomic_write_bytes(path, f"P5\n{w} {h}\n255\n".encode("ascii") + arr.tobytes())


def write_ppm(array: np.ndarray, path):
    """Write an (H, W, 3) uint8 array as a binary (P6) PPM image."""
    if array.ndim != 3 or array.shape[2] != 3:
        raise ContractError(f"PPM image must be (H, W, 3), got {array.shape}")
    arr = np.ascontiguousarray(array, dtype=np.uint8)
    h, w, _ = arr.shape
    atomic_write_bytes(path, f"P6\n{w} {h}\n255\n".encode("ascii") + arr.tobytes())


def frame_to_ppm_array(frame: np.ndarray) -> np.ndarray:
    """Convert a (3, H, W) float frame in [0, 1] to an (H, W, 3) uint8 array."""
    if frame.ndim != 3 or frame.shape[0] != 3:
        raise ContractError(f"frame must be (3, H, W), got {frame.shape}")
    scaled = np.clip(np.round(frame.astype(np.float64) * 255.0), 0, 255)
    return scaled.astype(np.uint8).transpose(1, 2, 0)


def export_code_image(codes: np.ndarray, codebook_size: int, path):
    """Render code indices as grayscale PGMs, index 0 black and K-1 white.

    A 2-D grid writes exactly ``path``; a 3-D (T, H, W) grid writes one file
    per time slice, suffixing ``_t000`` style tags onto the stem.  Returns the
    list of paths written.
    """
    if codebook_size < 1:
        raise ContractError(f"codebook_size must be >= 1, got {codebook_size}")
    codes = np.asarray(codes)
    if codes.size and (codes.min() < 0 or codes.max() >= codebook_size):
        raise ContractError(
            f"code indices must lie in [0, {codebook_size - 1}], "
            f"got range [{codes.min()}, {codes.max()}]"
        )
    if codebook_size == 1:
        gray = np.zeros(codes.shape, dtype=np.uint8)
    else:
        gray = np.round(codes.astype(np.float64) * (255.0 / (codebook_size - 1))).astype(np.uint8)

    path = Path(path)
    if codes.ndim == 2:
        write_pgm(gray, path)
        return [path]
    if codes.ndim != 3:
        raise ContractError(f"code grid must be 2-D or 3-D, got {codes.ndim}-D")
    written = []
    for t in range(gray.shape[0]):
        slice_path = path.with_name(f"{path.stem}_t{t:03d}{path.suffix or '.pgm'}")
        write_pgm(gray[t], slice_path)
        written.append(slice_path)
    return written
