"""Binary containers for matrices and network checkpoints.

Matrix files carry a 4-byte magic ("DMGD" for distances, "DMGS" for
similarities), a little-endian u64 node count, then n*n row-major float64
values.  Checkpoints ("DMGW" plus a version byte) store the layer specs and
their weight/bias tensors.  All writes go through a temp file and an atomic
rename, so readers never observe a partial file.
"""

from __future__ import annotations

import hashlib
import os
import struct
import tempfile

import numpy as np

from .network import LayerSpec, NetworkParams

__all__ = [
    "MAGIC_DISTANCE",
    "MAGIC_SIMILARITY",
    "MAGIC_CHECKPOINT",
    "ContainerFormatError",
    "atomic_write_bytes",
    "atomic_write_text",
    "save_matrix",
    "load_matrix",
    "save_checkpoint",
    "load_checkpoint",
    "content_hash",
]

MAGIC_DISTANCE = b"DMGD"
MAGIC_SIMILARITY = b"DMGS"
MAGIC_CHECKPOINT = b"DMGW"
CHECKPOINT_VERSION = 1

_KINDS = ("fc", "fca")
_ACTIVATIONS = ("linear", "relu", "leaky_relu")
_FCA_VARIANTS = ("gcn", "verbatim")


class ContainerFormatError(ValueError):
    """File does not conform to the expected binary layout."""


def atomic_write_bytes(path, data: bytes):
    """Write bytes so the destination is either absent or complete."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def save_matrix(path, matrix: np.ndarray, magic: bytes = MAGIC_DISTANCE):
    """Persist a square float64 matrix under the given magic."""
    if magic not in (MAGIC_DISTANCE, MAGIC_SIMILARITY):
        raise ValueError(f"unknown matrix magic {magic!r}")
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    n = matrix.shape[0]
    payload = magic + struct.pack("<Q", n) + matrix.tobytes(order="C")
    atomic_write_bytes(path, payload)


def load_matrix(path, expect_magic: bytes | None = None):
    """Load a matrix container; returns ``(matrix, magic)``."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 12:
        raise ContainerFormatError(f"{path}: truncated header")
    magic, data = data[:4], data[4:]
    if magic not in (MAGIC_DISTANCE, MAGIC_SIMILARITY):
        raise ContainerFormatError(f"{path}: unknown magic {magic!r}")
    if expect_magic is not None and magic != expect_magic:
        raise ContainerFormatError(f"{path}: expected magic {expect_magic!r}, found {magic!r}")
    (n,) = struct.unpack("<Q", data[:8])
    body = data[8:]
    if len(body) != n * n * 8:
        raise ContainerFormatError(
            f"{path}: expected {n * n * 8} payload bytes for n={n}, found {len(body)}"
        )
    matrix = np.frombuffer(body, dtype="<f8").reshape(n, n).copy()
    return matrix, magic


def save_checkpoint(path, params: NetworkParams):
    """Persist layer specs plus weight/bias tensors."""
    parts = [MAGIC_CHECKPOINT, struct.pack("<BqQ", CHECKPOINT_VERSION, params.seed, len(params.specs))]
    for spec, W, B in zip(params.specs, params.weights, params.biases):
        parts.append(
            struct.pack(
                "<BQQBBB",
                _KINDS.index(spec.kind),
                spec.in_dim,
                spec.out_dim,
                _ACTIVATIONS.index(spec.activation),
                _FCA_VARIANTS.index(spec.fca_variant),
                int(spec.self_loops),
            )
        )
        parts.append(np.ascontiguousarray(W, dtype=np.float64).tobytes(order="C"))
        parts.append(np.ascontiguousarray(B, dtype=np.float64).tobytes(order="C"))
    atomic_write_bytes(path, b"".join(parts))


def load_checkpoint(path) -> NetworkParams:
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != MAGIC_CHECKPOINT:
        raise ContainerFormatError(f"{path}: not a checkpoint file")
    offset = 4
    version, seed, n_layers = struct.unpack_from("<BqQ", data, offset)
    offset += struct.calcsize("<BqQ")
    if version != CHECKPOINT_VERSION:
        raise ContainerFormatError(f"{path}: unsupported checkpoint version {version}")
    specs, weights, biases = [], [], []
    head = struct.Struct("<BQQBBB")
    for _ in range(n_layers):
        try:
            kind_i, in_dim, out_dim, act_i, var_i, loops = head.unpack_from(data, offset)
            offset += head.size
            specs.append(
                LayerSpec(
                    _KINDS[kind_i],
                    int(in_dim),
                    int(out_dim),
                    _ACTIVATIONS[act_i],
                    _FCA_VARIANTS[var_i],
                    bool(loops),
                )
            )
            w_bytes = in_dim * out_dim * 8
            weights.append(
                np.frombuffer(data, dtype="<f8", count=in_dim * out_dim, offset=offset)
                .reshape(in_dim, out_dim)
                .copy()
            )
            offset += w_bytes
            biases.append(np.frombuffer(data, dtype="<f8", count=out_dim, offset=offset).copy())
            offset += out_dim * 8
        except (struct.error, ValueError, IndexError) as e:
            raise ContainerFormatError(f"{path}: truncated or corrupt layer block: {e}") from e
    if offset != len(data):
        raise ContainerFormatError(f"{path}: {len(data) - offset} trailing bytes")
    return NetworkParams(tuple(specs), weights, biases, int(seed))


def content_hash(*chunks) -> str:
    """SHA-256 over a sequence of byte chunks, arrays, and strings."""
    h = hashlib.sha256()
    for c in chunks:
        if isinstance(c, np.ndarray):
            h.update(np.ascontiguousarray(c).tobytes(order="C"))
        elif isinstance(c, bytes):
            h.update(c)
        else:
            h.update(str(c).encode("utf-8"))
        h.update(b"\x1f")
    return h.hexdigest()
