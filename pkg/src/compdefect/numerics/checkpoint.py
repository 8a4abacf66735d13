"""Self-describing binary checkpoint container.

Layout: ``b"CDCKPT\\0\\0"`` magic, little-endian uint64 header length, a UTF-8
JSON header, then the raw little-endian tensor bytes back to back in header
order.  The header carries the format version, model configuration,
vocabulary and, per tensor, name/shape/dtype/offset/nbytes.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any

import numpy as np

MAGIC = b"CDCKPT\0\0"
FORMAT_VERSION = 1


class CheckpointError(Exception):
    pass


def dumps(config: dict[str, Any], vocab: list[str], tensors: dict[str, np.ndarray], extra: dict | None = None) -> bytes:
    entries = []
    blobs = []
    offset = 0
    for name, arr in tensors.items():
        a = np.ascontiguousarray(arr)
        dt = a.dtype.newbyteorder("<")
        raw = a.astype(dt, copy=False).tobytes()
        entries.append(
            {"name": name, "shape": list(a.shape), "dtype": a.dtype.name, "offset": offset, "nbytes": len(raw)}
        )
        blobs.append(raw)
        offset += len(raw)
    header = {
        "format_version": FORMAT_VERSION,
        "config": config,
        "vocab": vocab,
        "tensors": entries,
        "extra": extra or {},
    }
    hb = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<Q", len(hb)) + hb + b"".join(blobs)


def loads(buf: bytes) -> tuple[dict, list[str], dict[str, np.ndarray], dict]:
    if not buf.startswith(MAGIC):
        raise CheckpointError("not a checkpoint file (bad magic)")
    (hlen,) = struct.unpack_from("<Q", buf, len(MAGIC))
    start = len(MAGIC) + 8
    try:
        header = json.loads(buf[start : start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt header: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported format version {header.get('format_version')}")
    base = start + hlen
    tensors = {}
    for e in header["tensors"]:
        dt = np.dtype(e["dtype"]).newbyteorder("<")
        lo = base + e["offset"]
        raw = buf[lo : lo + e["nbytes"]]
        if len(raw) != e["nbytes"]:
            raise CheckpointError(f"truncated tensor {e['name']}")
        tensors[e["name"]] = np.frombuffer(raw, dtype=dt).astype(np.dtype(e["dtype"])).reshape(e["shape"])
    return header["config"], header["vocab"], tensors, header.get("extra", {})


def save(path: str | Path, config, vocab, tensors, extra=None) -> None:
    Path(path).write_bytes(dumps(config, vocab, tensors, extra))


def load(path: str | Path):
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(str(exc)) from exc
    return loads(buf)
