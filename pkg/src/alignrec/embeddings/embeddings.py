import json
import os
import struct
from typing import Union

import numpy as np

from ..exceptions import CheckpointCorruptError, CheckpointFormatError
from ..types import EmbeddingState
from ..utils import atomic_write, require_path, write_json

MAGIC = b"AURLCKPT"
VERSION = 1
HEADER = struct.Struct("<8sIIII")
PAYLOAD_DTYPE = np.dtype("<f4")


def init_xavier(rows: int, dim: int, seed: int) -> np.ndarray:
    """Xavier-uniform table with fan_in = fan_out = dim, i.e. bound sqrt(3 / dim)."""
    if rows < 1 or dim < 1:
        raise ValueError(f"rows and dim must be >= 1, got {rows}x{dim}")
    bound = np.sqrt(3.0 / dim)
    rng = np.random.default_rng(seed)
    return rng.uniform(-bound, bound, size=(rows, dim))


def init_state(num_users: int, num_items: int, dim: int, seed: int) -> EmbeddingState:
    return EmbeddingState(
        user_emb=init_xavier(num_users, dim, seed),
        item_emb=init_xavier(num_items, dim, seed + 1),
    )


def l2_normalize_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    return m / safe


def l2_normalize_rows_backward(m: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Pulls a gradient taken w.r.t. normalized rows back to the raw rows.

    For x = v / |v| the Jacobian-vector product is (g - (g.x) x) / |v|;
    zero rows receive a zero gradient.
    """
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    x = m / safe
    projected = grad - np.sum(grad * x, axis=1, keepdims=True) * x
    return np.where(norms > 0, projected / safe, 0.0)


def _meta_path(path) -> str:
    return f"{path}.meta.json"


def save_checkpoint(state: EmbeddingState, path, metadata: Union[dict, None] = None):
    """Writes the binary checkpoint and its `<path>.meta.json` sidecar atomically."""
    header = HEADER.pack(MAGIC, VERSION, state.num_users, state.num_items, state.dim)
    payload = (
        np.ascontiguousarray(state.user_emb, dtype=PAYLOAD_DTYPE).tobytes()
        + np.ascontiguousarray(state.item_emb, dtype=PAYLOAD_DTYPE).tobytes()
    )
    atomic_write(path, header + payload)
    if metadata is not None:
        write_json(_meta_path(path), metadata)


def load_checkpoint(path) -> EmbeddingState:
    require_path(path)
    with open(path, "rb") as f:
        blob = f.read()

    if len(blob) < HEADER.size:
        raise CheckpointCorruptError(f"{path}: file shorter than the checkpoint header")
    magic, version, num_users, num_items, dim = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointFormatError(f"{path}: unsupported version {version}")

    expected = (num_users + num_items) * dim * PAYLOAD_DTYPE.itemsize
    if len(blob) - HEADER.size != expected:
        raise CheckpointCorruptError(
            f"{path}: payload has {len(blob) - HEADER.size} bytes, "
            f"expected {expected} for M={num_users} N={num_items} D={dim}"
        )

    values = np.frombuffer(blob, dtype=PAYLOAD_DTYPE, offset=HEADER.size).astype(np.float64)
    split_at = num_users * dim
    return EmbeddingState(
        user_emb=values[:split_at].reshape(num_users, dim),
        item_emb=values[split_at:].reshape(num_items, dim),
    )


def load_checkpoint_meta(path) -> dict:
    meta_path = _meta_path(path)
    if not os.path.exists(meta_path):
        return {}
    with open(meta_path, "r", encoding="utf-8") as f:
        return json.load(f)


