"""Checkpoint container: a single binary blob of named entries.

Layout: magic ``SWTK``, version byte, ``u32`` entry count, then per
entry a ``u16``-length-prefixed UTF-8 name, a type tag byte and the
payload.  Tensors are stored as little-endian float32 with explicit
dims, so parameters, Adam moments and the EMA shadow round-trip exactly
and a resumed run continues bit-for-bit.

Entry types: 0 = float32 tensor, 1 = int scalar, 2 = raw bytes,
3 = UTF-8 text.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import torch

from .errors import FormatError, ValidationError

MAGIC = b"SWTK"
VERSION = 1

_TENSOR, _INT, _BYTES, _TEXT = 0, 1, 2, 3


def _pack_entry(name: str, value) -> bytes:
    raw_name = name.encode("utf-8")
    head = struct.pack("<H", len(raw_name)) + raw_name
    if isinstance(value, torch.Tensor) and value.is_floating_point():
        arr = value.detach().cpu().to(torch.float32).numpy().astype("<f4")
        dims = struct.pack("<B", arr.ndim) + struct.pack(
            f"<{arr.ndim}I", *arr.shape)
        return head + bytes([_TENSOR]) + dims + arr.tobytes()
    if isinstance(value, int):
        return head + bytes([_INT]) + struct.pack("<q", value)
    if isinstance(value, bytes):
        return head + bytes([_BYTES]) + struct.pack("<I", len(value)) + value
    if isinstance(value, str):
        raw = value.encode("utf-8")
        return head + bytes([_TEXT]) + struct.pack("<I", len(raw)) + raw
    raise ValidationError(f"cannot serialize entry {name!r} of type "
                          f"{type(value).__name__}")


def save_entries(entries: dict, path: str | Path) -> None:
    blob = bytearray()
    blob += MAGIC
    blob.append(VERSION)
    blob += struct.pack("<I", len(entries))
    for name in sorted(entries):
        blob += _pack_entry(name, entries[name])
    Path(path).write_bytes(bytes(blob))


class _Reader:
    def __init__(self, blob: bytes, path: str):
        self.blob = blob
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise FormatError(f"{self.path}: truncated checkpoint")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_entries(path: str | Path) -> dict:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    r = _Reader(blob, str(path))
    if r.take(4) != MAGIC:
        raise FormatError(f"{path}: bad checkpoint magic")
    (version,) = r.unpack("<B")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    (count,) = r.unpack("<I")
    entries: dict = {}
    for _ in range(count):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        (tag,) = r.unpack("<B")
        if tag == _TENSOR:
            (ndim,) = r.unpack("<B")
            dims = r.unpack(f"<{ndim}I") if ndim else ()
            n = int(np.prod(dims, dtype=np.int64)) if dims else 1
            arr = np.frombuffer(r.take(n * 4), dtype="<f4").reshape(dims)
            entries[name] = torch.from_numpy(arr.copy())
        elif tag == _INT:
            (entries[name],) = r.unpack("<q")
        elif tag == _BYTES:
            (n,) = r.unpack("<I")
            entries[name] = r.take(n)
        elif tag == _TEXT:
            (n,) = r.unpack("<I")
            entries[name] = r.take(n).decode("utf-8")
        else:
            raise FormatError(f"{path}: unknown entry tag {tag}")
    if r.pos != len(blob):
        raise FormatError(f"{path}: trailing bytes after last entry")
    return entries
