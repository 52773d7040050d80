"""Binary checkpoint format (little-endian).

::

    b"GMRF"  u32 version (=1)
    u32 metadata length, UTF-8 JSON metadata
    u32 tensor count
    per tensor: u16 name length, name, u8 rank, u32 dim * rank, float32 data

Parameters are held as float64 in memory and stored as float32, so a
save/load round trip is bit-exact on the float32 payload.
"""
from __future__ import annotations

import io
import json
import os
import struct
from pathlib import Path

import numpy as np

from gametransfer.nn.network import Network, NetworkConfig

MAGIC = b"GMRF"
VERSION = 1


class CheckpointError(Exception):
    """Malformed checkpoint; ``field`` names the offending part of the file."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


def _tensors(net: Network):
    yield from net.params.items()
    yield from net.buffers.items()


def to_bytes(net: Network, metadata: dict | None = None) -> bytes:
    meta = dict(metadata or {})
    meta["network"] = net.config.to_dict()
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<II", VERSION, len(meta_bytes)))
    buf.write(meta_bytes)
    items = list(_tensors(net))
    buf.write(struct.pack("<I", len(items)))
    for name, arr in items:
        nb = name.encode("utf-8")
        buf.write(struct.pack("<H", len(nb)))
        buf.write(nb)
        buf.write(struct.pack("<B", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        buf.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return buf.getvalue()


def save_checkpoint(net: Network, path, metadata: dict | None = None) -> Path:
    path = Path(path)
    data = to_bytes(net, metadata)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)
    return path


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, field: str) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError(field, f"file truncated at byte {len(self.data)} "
                                         f"(needed {n} bytes at offset {self.pos})")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, field: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), field))


def from_bytes(data: bytes) -> tuple[Network, dict]:
    r = _Reader(data)
    if r.take(4, "magic") != MAGIC:
        raise CheckpointError("magic", f"expected {MAGIC!r}")
    (version,) = r.unpack("<I", "version")
    if version != VERSION:
        raise CheckpointError("version", f"unsupported version {version} (expected {VERSION})")
    (meta_len,) = r.unpack("<I", "metadata")
    try:
        meta = json.loads(r.take(meta_len, "metadata").decode("utf-8"))
        config = NetworkConfig.from_dict(meta["network"])
    except CheckpointError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise CheckpointError("metadata", f"unreadable metadata ({exc})") from None
    expected = Network.initialize(config, np.random.default_rng(0))
    (count,) = r.unpack("<I", "shape table")
    tensors = {}
    for _ in range(count):
        (name_len,) = r.unpack("<H", "shape table")
        name = r.take(name_len, "shape table").decode("utf-8", errors="replace")
        (rank,) = r.unpack("<B", "shape table")
        dims = r.unpack(f"<{rank}I", "shape table")
        n = int(np.prod(dims, dtype=np.int64))
        try:
            raw = r.take(4 * n, "shape table")
        except CheckpointError as exc:
            raise CheckpointError("shape table", f"tensor {name!r}: {exc.message}") from None
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float64)
    if r.pos != len(data):
        raise CheckpointError("shape table", f"{len(data) - r.pos} trailing bytes")
    params, buffers = {}, {}
    for group, target in ((expected.params, params), (expected.buffers, buffers)):
        for name, ref in group.items():
            if name not in tensors:
                raise CheckpointError("shape table", f"missing tensor {name!r}")
            if tensors[name].shape != ref.shape:
                raise CheckpointError("shape table", f"{name}: shape {tensors[name].shape} "
                                                     f"does not match config {ref.shape}")
            target[name] = tensors.pop(name)
    if tensors:
        raise CheckpointError("shape table", f"unexpected tensors {sorted(tensors)}")
    return Network(config, params, buffers), meta


def load_checkpoint(path) -> tuple[Network, dict]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError("file", str(exc)) from None
    return from_bytes(data)


def payload_bytes(net: Network) -> bytes:
    """Concatenated float32 parameter/buffer payload, for bitwise comparisons."""
    return b"".join(np.ascontiguousarray(a, dtype="<f4").tobytes() for _, a in _tensors(net))
