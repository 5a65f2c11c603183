"""Small file helpers: atomic writes and length-checked binary reads."""

from __future__ import annotations

import os
import struct
import tempfile

from .errors import DataFormatError


def atomic_write_bytes(path, data: bytes) -> None:
    """Write bytes to a temp file in the target directory, then rename over path."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def read_exact(fh, n: int, path=None) -> bytes:
    """Read exactly n bytes or raise a truncation error."""
    data = fh.read(n)
    if len(data) != n:
        raise DataFormatError(f"truncated file: expected {n} more bytes, got {len(data)}", path=path)
    return data


def read_u32(fh, path=None) -> int:
    return struct.unpack("<I", read_exact(fh, 4, path))[0]


def read_u64(fh, path=None) -> int:
    return struct.unpack("<Q", read_exact(fh, 8, path))[0]


def pack_u32(value: int) -> bytes:
    return struct.pack("<I", value)


def pack_u64(value: int) -> bytes:
    return struct.pack("<Q", value)


def pack_str(text: str) -> bytes:
    raw = text.encode("utf-8")
    return pack_u32(len(raw)) + raw


def read_str(fh, path=None) -> str:
    length = read_u32(fh, path)
    return read_exact(fh, length, path).decode("utf-8")
