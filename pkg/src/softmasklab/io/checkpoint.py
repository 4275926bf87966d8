"""Checkpoint archives: a text manifest plus raw little-endian tensor payloads.

Layout inside the zip container:

* ``header.json``  — schema tag, format version, and trainer metadata
  (domain count, loss weights, step counter, ...).
* ``manifest.tsv`` — one line per tensor: name, shape, dtype, byte offset,
  byte length into the payload blob.
* ``tensors.bin``  — concatenated raw little-endian array payloads.

Entries are stored uncompressed with a fixed timestamp so identical state
produces byte-identical files.
"""

from __future__ import annotations

import json
import zipfile
from pathlib import Path

import numpy as np

from ..exceptions import DataError

FORMAT_VERSION = 1

_DTYPES = {
    "float32": "<f4",
    "float64": "<f8",
    "int64": "<i8",
    "int32": "<i4",
    "uint8": "|u1",
}

_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


def _dtype_name(arr: np.ndarray) -> str:
    name = arr.dtype.name
    if name not in _DTYPES:
        raise ValueError(f"unsupported tensor dtype {name}")
    return name


def save_checkpoint(path, header: dict, tensors: dict) -> None:
    """Write ``tensors`` (name -> ndarray) with ``header`` metadata to ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    head = dict(header)
    head["format_version"] = FORMAT_VERSION

    manifest_lines = []
    payload = bytearray()
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name])
        dtype = _dtype_name(arr)
        raw = arr.astype(_DTYPES[dtype], copy=False).tobytes()
        shape = ",".join(str(s) for s in arr.shape)
        manifest_lines.append(
            f"{name}\t{shape}\t{dtype}\t{len(payload)}\t{len(raw)}"
        )
        payload.extend(raw)

    tmp = path.with_suffix(path.suffix + ".tmp")
    with zipfile.ZipFile(tmp, "w", compression=zipfile.ZIP_STORED) as zf:
        for member, data in (
            ("header.json", json.dumps(head, indent=2, sort_keys=True).encode()),
            ("manifest.tsv", ("\n".join(manifest_lines) + "\n").encode()),
            ("tensors.bin", bytes(payload)),
        ):
            info = zipfile.ZipInfo(member, date_time=_ZIP_DATE)
            zf.writestr(info, data)
    tmp.replace(path)


def load_checkpoint(path, expected_schema=None):
    """Read a checkpoint archive; returns ``(header, tensors)``."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint {path} does not exist")
    with zipfile.ZipFile(path) as zf:
        header = json.loads(zf.read("header.json"))
        manifest = zf.read("manifest.tsv").decode().splitlines()
        payload = zf.read("tensors.bin")
    if header.get("format_version") != FORMAT_VERSION:
        raise DataError(
            f"checkpoint {path} has format version {header.get('format_version')}, "
            f"expected {FORMAT_VERSION}"
        )
    if expected_schema is not None and header.get("schema") != expected_schema:
        raise DataError(
            f"checkpoint {path} has schema {header.get('schema')!r}, "
            f"expected {expected_schema!r}"
        )
    tensors = {}
    for line in manifest:
        if not line.strip():
            continue
        name, shape, dtype, offset, nbytes = line.split("\t")
        shape = tuple(int(s) for s in shape.split(",")) if shape else ()
        offset, nbytes = int(offset), int(nbytes)
        arr = np.frombuffer(payload[offset:offset + nbytes], dtype=_DTYPES[dtype])
        tensors[name] = arr.reshape(shape).astype(dtype, copy=False)
    return header, tensors
