"""LOGF file format: one utterance of per-frame log-likelihoods.

Layout: magic "LOGF", then little-endian u32 version (1), u32 num_frames,
u32 num_tokens, followed by num_frames x num_tokens float32 values in
frame-major order. Values are natural-log likelihoods.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import CtcWfstError

MAGIC = b"LOGF"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


class LogfError(CtcWfstError):
    pass


def write_loglik(path: str | Path, loglik: np.ndarray) -> None:
    mat = np.ascontiguousarray(loglik, dtype="<f4")
    if mat.ndim != 2:
        raise LogfError("log-likelihoods must be a (frames, tokens) matrix")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, mat.shape[0], mat.shape[1]))
        fh.write(mat.tobytes())


def read_loglik(path: str | Path) -> np.ndarray:
    """Read a LOGF file as a float64 (frames, tokens) matrix."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise LogfError(f"{path}: truncated header")
        magic, version, num_frames, num_tokens = _HEADER.unpack(header)
        if magic != MAGIC:
            raise LogfError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise LogfError(f"{path}: unsupported version {version}")
        payload = fh.read(4 * num_frames * num_tokens)
        if len(payload) != 4 * num_frames * num_tokens:
            raise LogfError(f"{path}: truncated payload")
        if fh.read(1):
            raise LogfError(f"{path}: trailing bytes after payload")
    mat = np.frombuffer(payload, dtype="<f4").reshape(num_frames, num_tokens)
    if not np.all(np.isfinite(mat) | np.isneginf(mat)):
        raise LogfError(f"{path}: non-finite log-likelihoods (NaN or +inf)")
    return mat.astype(np.float64)
