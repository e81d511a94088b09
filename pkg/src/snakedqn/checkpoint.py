"""Binary checkpoint container: named tensor records with a CRC32 trailer.

Layout (little-endian throughout):

    magic "SNKDQN01"
    u32 record count
    records:
        u16 name length, name (utf-8)
        u8 dtype code (0=f32, 1=f64, 2=i64, 3=u8)
        u8 rank, u32 dim per axis
        raw array bytes
    u32 CRC32 over everything between the magic and the checksum
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

MAGIC = b"SNKDQN01"

_CODE_TO_DTYPE = {0: "<f4", 1: "<f8", 2: "<i8", 3: "|u1"}
_KIND_TO_CODE = {("f", 4): 0, ("f", 8): 1, ("i", 8): 2, ("u", 1): 3}


class CheckpointError(Exception):
    """Raised for unreadable, corrupt, or incompatible checkpoint files."""


def _encode_record(name: str, arr: np.ndarray) -> bytes:
    code = _KIND_TO_CODE.get((arr.dtype.kind, arr.dtype.itemsize))
    if code is None:
        raise ValueError(f"unsupported dtype {arr.dtype} for record {name!r}")
    raw = np.ascontiguousarray(arr, dtype=_CODE_TO_DTYPE[code])
    name_bytes = name.encode("utf-8")
    head = struct.pack("<H", len(name_bytes)) + name_bytes
    head += struct.pack("<BB", code, arr.ndim)
    head += struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + raw.tobytes()


def write_records(path, records: dict[str, np.ndarray]) -> None:
    payload = struct.pack("<I", len(records))
    for name, arr in records.items():
        payload += _encode_record(name, np.asarray(arr))
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CheckpointError("truncated checkpoint")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_records(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 8 or blob[: len(MAGIC)] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    payload, (stored_crc,) = blob[len(MAGIC) : -4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(payload) != stored_crc:
        raise CheckpointError("checksum mismatch (corrupt checkpoint)")
    rd = _Reader(payload)
    (count,) = rd.unpack("<I")
    records: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = rd.unpack("<H")
        name = rd.take(name_len).decode("utf-8")
        code, rank = rd.unpack("<BB")
        if code not in _CODE_TO_DTYPE:
            raise CheckpointError(f"unknown dtype code {code}")
        shape = rd.unpack(f"<{rank}I") if rank else ()
        dtype = np.dtype(_CODE_TO_DTYPE[code])
        n_bytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize if rank else dtype.itemsize
        arr = np.frombuffer(rd.take(n_bytes), dtype=dtype).reshape(shape)
        records[name] = arr.copy()
    if rd.pos != len(payload):
        raise CheckpointError("trailing bytes after last record")
    return records
