import struct

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pipechain.encoding import (
    EncodingError,
    Reader,
    enc_bytes,
    enc_i64,
    enc_str,
    enc_u8,
    enc_u32,
    enc_u64,
)


def test_integers_are_big_endian_fixed_width():
    assert enc_u8(0xAB) == b"\xab"
    assert enc_u32(1) == b"\x00\x00\x00\x01"
    assert enc_u64(2**40) == struct.pack(">Q", 2**40)
    assert enc_i64(-1) == b"\xff" * 8


def test_string_is_length_prefixed_utf8():
    assert enc_str("C") == b"\x00\x00\x00\x01C"
    assert enc_str("") == b"\x00\x00\x00\x00"
    assert enc_str("°C") == b"\x00\x00\x00\x03" + "°C".encode("utf-8")


def test_out_of_range_integers_rejected():
    with pytest.raises(EncodingError):
        enc_u8(256)
    with pytest.raises(EncodingError):
        enc_u32(-1)
    with pytest.raises(EncodingError):
        enc_i64(2**63)


def test_reader_rejects_truncation_and_trailing_bytes():
    r = Reader(b"\x00\x00\x00\x05hello")
    assert r.var_bytes() == b"hello"
    r.expect_eof()

    with pytest.raises(EncodingError):
        Reader(b"\x00\x00\x00\x05hell").var_bytes()

    r = Reader(b"\x00\x01extra")
    r.u16()
    with pytest.raises(EncodingError):
        r.expect_eof()


def test_reader_rejects_invalid_utf8():
    bad = enc_bytes(b"\xff\xfe")
    with pytest.raises(EncodingError):
        Reader(bad).string()


@given(st.integers(min_value=0, max_value=2**64 - 1))
def test_u64_round_trip(v):
    assert Reader(enc_u64(v)).u64() == v


@given(st.integers(min_value=-(2**63), max_value=2**63 - 1))
def test_i64_round_trip(v):
    assert Reader(enc_i64(v)).i64() == v


@given(st.text(max_size=64))
def test_string_round_trip(s):
    r = Reader(enc_str(s))
    assert r.string() == s
    r.expect_eof()


@given(st.binary(max_size=256))
def test_bytes_round_trip(b):
    r = Reader(enc_bytes(b))
    assert r.var_bytes() == b
    r.expect_eof()
