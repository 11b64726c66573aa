"""Canonical binary encoding shared by every hashed or signed structure.

All integers are big-endian fixed width. Strings are u32 byte-length
prefixed UTF-8. Lists are u32 count prefixed. Decoding is strict: any
trailing byte, truncation, or non-canonical UTF-8 raises EncodingError,
so encode(decode(b)) == b whenever decode succeeds.
"""

from __future__ import annotations

import struct


class EncodingError(ValueError):
    """Bytes do not form a canonical encoding, or a field is out of bounds."""


U8_MAX = 0xFF
U16_MAX = 0xFFFF
U32_MAX = 0xFFFF_FFFF
U64_MAX = 0xFFFF_FFFF_FFFF_FFFF
I64_MIN = -(1 << 63)
I64_MAX = (1 << 63) - 1


def enc_u8(v: int) -> bytes:
    if not 0 <= v <= U8_MAX:
        raise EncodingError(f"u8 out of range: {v}")
    return bytes([v])


def enc_u16(v: int) -> bytes:
    if not 0 <= v <= U16_MAX:
        raise EncodingError(f"u16 out of range: {v}")
    return struct.pack(">H", v)


def enc_u32(v: int) -> bytes:
    if not 0 <= v <= U32_MAX:
        raise EncodingError(f"u32 out of range: {v}")
    return struct.pack(">I", v)


def enc_u64(v: int) -> bytes:
    if not 0 <= v <= U64_MAX:
        raise EncodingError(f"u64 out of range: {v}")
    return struct.pack(">Q", v)


def enc_i64(v: int) -> bytes:
    if not I64_MIN <= v <= I64_MAX:
        raise EncodingError(f"i64 out of range: {v}")
    return struct.pack(">q", v)


def enc_fixed(b: bytes, size: int) -> bytes:
    if len(b) != size:
        raise EncodingError(f"expected {size} bytes, got {len(b)}")
    return bytes(b)


def enc_bytes(b: bytes) -> bytes:
    if len(b) > U32_MAX:
        raise EncodingError("byte string too long")
    return enc_u32(len(b)) + bytes(b)


def enc_str(s: str, max_bytes: int | None = None) -> bytes:
    raw = s.encode("utf-8")
    if max_bytes is not None and len(raw) > max_bytes:
        raise EncodingError(f"string exceeds {max_bytes} bytes")
    return enc_bytes(raw)


class Reader:
    """Strict sequential reader over one canonical byte string."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    @property
    def remaining(self) -> int:
        return len(self._data) - self._pos

    def take(self, n: int) -> bytes:
        if n < 0 or self.remaining < n:
            raise EncodingError(
                f"truncated input: need {n} bytes at offset {self._pos}, have {self.remaining}"
            )
        out = self._data[self._pos : self._pos + n]
        self._pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack(">H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]

    def i64(self) -> int:
        return struct.unpack(">q", self.take(8))[0]

    def var_bytes(self) -> bytes:
        return self.take(self.u32())

    def string(self) -> str:
        raw = self.var_bytes()
        try:
            s = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EncodingError(f"invalid UTF-8 string: {exc}") from exc
        # Reject non-canonical representations the codec round-trips lossily.
        if s.encode("utf-8") != raw:
            raise EncodingError("non-canonical UTF-8 string")
        return s

    def expect_eof(self) -> None:
        if self.remaining:
            raise EncodingError(f"{self.remaining} trailing bytes after structure")
