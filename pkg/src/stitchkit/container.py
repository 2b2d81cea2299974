"""Flat binary container: a JSON header followed by raw arrays.

Layout: the magic bytes, an 8-byte little-endian header length, the UTF-8
JSON header, then each array's bytes in C order. The header records each
array's name, dtype and shape, plus free-form metadata.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"STITCHKIT\x00"
FORMAT_VERSION = 1


def write_container(path, kind: str, arrays: dict, meta: dict | None = None) -> Path:
    """Write named arrays and metadata to ``path``."""
    entries = []
    blobs = []
    for name, arr in arrays.items():
        a = np.ascontiguousarray(arr)
        dtype = a.dtype.newbyteorder("<") if a.dtype.byteorder == ">" else a.dtype
        a = a.astype(dtype, copy=False)
        entries.append({"name": name, "dtype": a.dtype.str, "shape": list(a.shape)})
        blobs.append(a.tobytes())
    header = {"kind": kind, "version": FORMAT_VERSION, "arrays": entries, "meta": meta or {}}
    raw = json.dumps(header, sort_keys=True).encode()
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(raw)))
        fh.write(raw)
        for b in blobs:
            fh.write(b)
    return path


def read_container(path, kind: str | None = None) -> tuple[dict, dict]:
    """Read a container; returns ``(arrays, header)``.

    Raises
    ------
    ValueError
        On a bad magic string, unsupported version, or wrong ``kind``.
    """
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise ValueError(f"{path}: not a stitchkit container")
    off = len(MAGIC)
    (n,) = struct.unpack("<Q", data[off : off + 8])
    off += 8
    header = json.loads(data[off : off + n].decode())
    off += n
    if header.get("version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported container version {header.get('version')}")
    if kind is not None and header.get("kind") != kind:
        raise ValueError(f"{path}: expected kind {kind!r}, found {header.get('kind')!r}")
    arrays = {}
    for e in header["arrays"]:
        dt = np.dtype(e["dtype"])
        count = int(np.prod(e["shape"], dtype=np.int64))
        size = count * dt.itemsize
        arrays[e["name"]] = np.frombuffer(data, dtype=dt, count=count, offset=off).reshape(e["shape"]).copy()
        off += size
    return arrays, header
