"""Ledger entries: the signed pipeline transactions batched into blocks."""

from __future__ import annotations

from dataclasses import dataclass

from . import crypto
from .encoding import EncodingError, Reader, enc_bytes, enc_fixed, enc_i64, enc_str, enc_u8, enc_u64

ENTRY_ID_SIZE = 16
CONTRACT_ID_MAX_BYTES = 64

ACTION_REGISTER_SENSOR = 0
ACTION_ADD_READING = 1
_ACTIONS = (ACTION_REGISTER_SENSOR, ACTION_ADD_READING)

# Measured parameter codes; anything else is an "other" parameter.
PARAM_TEMPERATURE = 0
PARAM_PRESSURE = 1
PARAM_MOISTURE = 2
PARAM_HUMIDITY = 3

_PARAM_NAMES = {
    PARAM_TEMPERATURE: "temperature",
    PARAM_PRESSURE: "pressure",
    PARAM_MOISTURE: "moisture",
    PARAM_HUMIDITY: "humidity",
}
_PARAM_CODES = {name: code for code, name in _PARAM_NAMES.items()}

# Headroom bound against overflow in downstream aggregation.
VALUE_SCALED_MIN = -(1 << 62)
VALUE_SCALED_MAX = 1 << 62


def parameter_name(code: int) -> str:
    return _PARAM_NAMES.get(code, f"other-{code}")


def parameter_code(name: str) -> int:
    if name in _PARAM_CODES:
        return _PARAM_CODES[name]
    if name.startswith("other-"):
        try:
            code = int(name[len("other-") :])
        except ValueError:
            raise EncodingError(f"unknown parameter name: {name!r}") from None
        if 0 <= code <= 255:
            return code
    raise EncodingError(f"unknown parameter name: {name!r}")


@dataclass(frozen=True)
class LedgerEntry:
    entry_id: bytes
    contract_id: str
    action: int
    payload: bytes
    submitter_id: str
    submitter_nonce: int
    submitter_signature: bytes


def entry_preimage(entry: LedgerEntry) -> bytes:
    """Canonical bytes the submitter signs (every field but the signature)."""
    if entry.action not in _ACTIONS:
        raise EncodingError(f"unknown action code: {entry.action}")
    return b"".join(
        (
            enc_fixed(entry.entry_id, ENTRY_ID_SIZE),
            enc_str(entry.contract_id, max_bytes=CONTRACT_ID_MAX_BYTES),
            enc_u8(entry.action),
            enc_bytes(entry.payload),
            enc_str(entry.submitter_id),
            enc_u64(entry.submitter_nonce),
        )
    )


def encode_entry(entry: LedgerEntry) -> bytes:
    return entry_preimage(entry) + enc_fixed(
        entry.submitter_signature, crypto.SIGNATURE_SIZE
    )


def decode_entry(reader: Reader) -> LedgerEntry:
    entry_id = reader.take(ENTRY_ID_SIZE)
    contract_id = reader.string()
    if len(contract_id.encode("utf-8")) > CONTRACT_ID_MAX_BYTES:
        raise EncodingError("contract_id exceeds 64 bytes")
    action = reader.u8()
    if action not in _ACTIONS:
        raise EncodingError(f"unknown action code: {action}")
    payload = reader.var_bytes()
    submitter_id = reader.string()
    nonce = reader.u64()
    signature = reader.take(crypto.SIGNATURE_SIZE)
    return LedgerEntry(
        entry_id=entry_id,
        contract_id=contract_id,
        action=action,
        payload=payload,
        submitter_id=submitter_id,
        submitter_nonce=nonce,
        submitter_signature=signature,
    )


def decode_entry_bytes(data: bytes) -> LedgerEntry:
    r = Reader(data)
    entry = decode_entry(r)
    r.expect_eof()
    return entry


def hash_entry(entry: LedgerEntry) -> bytes:
    """Leaf digest: sha256(0x00 || canonical entry bytes)."""
    return crypto.leaf_hash(encode_entry(entry))


def sign_entry(
    entry_id: bytes,
    contract_id: str,
    action: int,
    payload: bytes,
    submitter_id: str,
    submitter_nonce: int,
    key: crypto.SigningKey,
) -> LedgerEntry:
    unsigned = LedgerEntry(
        entry_id=entry_id,
        contract_id=contract_id,
        action=action,
        payload=payload,
        submitter_id=submitter_id,
        submitter_nonce=submitter_nonce,
        submitter_signature=b"\x00" * crypto.SIGNATURE_SIZE,
    )
    signature = key.sign(entry_preimage(unsigned))
    return LedgerEntry(
        entry_id=entry_id,
        contract_id=contract_id,
        action=action,
        payload=payload,
        submitter_id=submitter_id,
        submitter_nonce=submitter_nonce,
        submitter_signature=signature,
    )


def verify_entry_signature(entry: LedgerEntry, public_key: bytes) -> bool:
    try:
        preimage = entry_preimage(entry)
    except EncodingError:
        return False
    return crypto.verify_signature(public_key, entry.submitter_signature, preimage)


# Action payload encodings (External Interfaces).


def make_register_payload(sensor_principal_id: str) -> bytes:
    return enc_str(sensor_principal_id)


def parse_register_payload(payload: bytes) -> str:
    r = Reader(payload)
    sensor = r.string()
    r.expect_eof()
    return sensor


@dataclass(frozen=True)
class ReadingPayload:
    parameter: int
    value_scaled: int
    unit: str
    source_timestamp: int


def make_reading_payload(
    parameter: int, value_scaled: int, unit: str, source_timestamp: int
) -> bytes:
    if not VALUE_SCALED_MIN <= value_scaled <= VALUE_SCALED_MAX:
        raise EncodingError(f"value_scaled out of range: {value_scaled}")
    return (
        enc_u8(parameter)
        + enc_i64(value_scaled)
        + enc_str(unit)
        + enc_u64(source_timestamp)
    )


def parse_reading_payload(payload: bytes) -> ReadingPayload:
    r = Reader(payload)
    parameter = r.u8()
    value_scaled = r.i64()
    unit = r.string()
    source_timestamp = r.u64()
    r.expect_eof()
    if not VALUE_SCALED_MIN <= value_scaled <= VALUE_SCALED_MAX:
        raise EncodingError(f"value_scaled out of range: {value_scaled}")
    return ReadingPayload(
        parameter=parameter,
        value_scaled=value_scaled,
        unit=unit,
        source_timestamp=source_timestamp,
    )
