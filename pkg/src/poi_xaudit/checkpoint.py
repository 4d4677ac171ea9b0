"""Binary tensor checkpoints with a JSON sidecar.

Layout (all integers unsigned 32-bit little-endian)::

    b"PXCK" | version | tensor count
    per tensor: name length | UTF-8 name | rank | dims... | float32 LE values
    CRC32 of every preceding byte

The sidecar (``<name>.json``) carries the config, master seed and id maps.
"""
from __future__ import annotations

import hashlib
import json
import os
import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import CheckpointError, MissingCheckpoint

MAGIC = b"PXCK"
VERSION = 1


def encode(tensors: dict[str, np.ndarray]) -> bytes:
    parts = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, value in tensors.items():
        raw = name.encode("utf-8")
        arr = np.ascontiguousarray(value, dtype="<f4")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
        parts.append(struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape))
        parts.append(arr.tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def decode(blob: bytes) -> dict[str, np.ndarray]:
    if len(blob) < 16 or blob[:4] != MAGIC:
        raise CheckpointError("not a PXCK checkpoint")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) != crc:
        raise CheckpointError("checkpoint CRC mismatch")
    version, count = struct.unpack_from("<II", body, 4)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    pos = 12
    out: dict[str, np.ndarray] = {}
    try:
        for _ in range(count):
            (n,) = struct.unpack_from("<I", body, pos)
            pos += 4
            name = body[pos : pos + n].decode("utf-8")
            pos += n
            (rank,) = struct.unpack_from("<I", body, pos)
            pos += 4
            dims = struct.unpack_from(f"<{rank}I", body, pos)
            pos += 4 * rank
            size = int(np.prod(dims, dtype=np.int64))
            out[name] = np.frombuffer(body, dtype="<f4", count=size, offset=pos).reshape(dims).astype(np.float32)
            pos += 4 * size
    except (struct.error, ValueError) as exc:
        raise CheckpointError(f"truncated checkpoint: {exc}") from exc
    if pos != len(body):
        raise CheckpointError("trailing bytes after the last tensor")
    return out


def sidecar_path(path: str | os.PathLike) -> Path:
    return Path(path).with_suffix(".json")


def save(path: str | os.PathLike, tensors: dict[str, np.ndarray], meta: dict) -> str:
    """Write checkpoint and sidecar; returns the checkpoint's sha256."""
    blob = encode(tensors)
    Path(path).write_bytes(blob)
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return hashlib.sha256(blob).hexdigest()


def load(path: str | os.PathLike) -> tuple[dict[str, np.ndarray], dict, str]:
    """Tensors, sidecar metadata and the checkpoint's sha256."""
    p = Path(path)
    side = sidecar_path(p)
    if not p.exists() or not side.exists():
        raise MissingCheckpoint(f"checkpoint {p} (or its sidecar) not found")
    blob = p.read_bytes()
    meta = json.loads(side.read_text(encoding="utf-8"))
    return decode(blob), meta, hashlib.sha256(blob).hexdigest()
