"""Signed replication wire messages.

Frame layout on any transport: u32 length || canonical message bytes.
Message bytes: kind u8 || term u64 || sender string || payload var-bytes
|| sender signature (64, over everything before it). The term field is
static in v1, reserved for leader elections.
"""

from __future__ import annotations

from dataclasses import dataclass

from .. import crypto
from ..encoding import EncodingError, Reader, enc_bytes, enc_fixed, enc_str, enc_u8, enc_u32, enc_u64

KIND_PROPOSE_BLOCK = 0
KIND_ACK = 1
KIND_COMMIT = 2
KIND_CATCH_UP_REQUEST = 3
KIND_CATCH_UP_RESPONSE = 4
KIND_AUDIT_REQUEST = 5
KIND_AUDIT_RESPONSE = 6

KIND_NAMES = {
    KIND_PROPOSE_BLOCK: "ProposeBlock",
    KIND_ACK: "Ack",
    KIND_COMMIT: "Commit",
    KIND_CATCH_UP_REQUEST: "CatchUpRequest",
    KIND_CATCH_UP_RESPONSE: "CatchUpResponse",
    KIND_AUDIT_REQUEST: "AuditRequest",
    KIND_AUDIT_RESPONSE: "AuditResponse",
}

# Read-only query kinds may come from senders outside the peer set
# (the offline audit CLI); everything else requires a registered key.
READ_ONLY_KINDS = {KIND_CATCH_UP_REQUEST, KIND_AUDIT_REQUEST}

TERM_V1 = 0


@dataclass(frozen=True)
class Message:
    kind: int
    term: int
    sender_id: str
    payload: bytes
    signature: bytes


def message_preimage(kind: int, term: int, sender_id: str, payload: bytes) -> bytes:
    return enc_u8(kind) + enc_u64(term) + enc_str(sender_id) + enc_bytes(payload)


def encode_message(msg: Message) -> bytes:
    return message_preimage(msg.kind, msg.term, msg.sender_id, msg.payload) + enc_fixed(
        msg.signature, crypto.SIGNATURE_SIZE
    )


def decode_message(data: bytes) -> Message:
    r = Reader(data)
    kind = r.u8()
    if kind not in KIND_NAMES:
        raise EncodingError(f"unknown message kind: {kind}")
    term = r.u64()
    sender_id = r.string()
    payload = r.var_bytes()
    signature = r.take(crypto.SIGNATURE_SIZE)
    r.expect_eof()
    return Message(kind, term, sender_id, payload, signature)


def sign_message(kind: int, sender_id: str, payload: bytes, key: crypto.SigningKey | None) -> Message:
    preimage = message_preimage(kind, TERM_V1, sender_id, payload)
    signature = key.sign(preimage) if key else b"\x00" * crypto.SIGNATURE_SIZE
    return Message(kind, TERM_V1, sender_id, payload, signature)


def verify_message(msg: Message, public_key: bytes) -> bool:
    preimage = message_preimage(msg.kind, msg.term, msg.sender_id, msg.payload)
    return crypto.verify_signature(public_key, msg.signature, preimage)


# -- kind-specific payloads -------------------------------------------------


def propose_payload(ledger_name: str, block_bytes: bytes) -> bytes:
    return enc_str(ledger_name) + enc_bytes(block_bytes)


def parse_propose(payload: bytes) -> tuple[str, bytes]:
    r = Reader(payload)
    out = (r.string(), r.var_bytes())
    r.expect_eof()
    return out


def ack_payload(
    ledger_name: str, height: int, header_hash: bytes, accepted: bool, reason: str = ""
) -> bytes:
    return (
        enc_str(ledger_name)
        + enc_u64(height)
        + enc_fixed(header_hash, crypto.DIGEST_SIZE)
        + enc_u8(1 if accepted else 0)
        + enc_str(reason)
    )


def parse_ack(payload: bytes) -> tuple[str, int, bytes, bool, str]:
    r = Reader(payload)
    out = (r.string(), r.u64(), r.take(crypto.DIGEST_SIZE), r.u8() == 1, r.string())
    r.expect_eof()
    return out


def commit_payload(ledger_name: str, height: int, header_hash: bytes) -> bytes:
    return enc_str(ledger_name) + enc_u64(height) + enc_fixed(header_hash, crypto.DIGEST_SIZE)


def parse_commit(payload: bytes) -> tuple[str, int, bytes]:
    r = Reader(payload)
    out = (r.string(), r.u64(), r.take(crypto.DIGEST_SIZE))
    r.expect_eof()
    return out


def catch_up_request_payload(ledger_name: str, first_height: int) -> bytes:
    return enc_str(ledger_name) + enc_u64(first_height)


def parse_catch_up_request(payload: bytes) -> tuple[str, int]:
    r = Reader(payload)
    out = (r.string(), r.u64())
    r.expect_eof()
    return out


def catch_up_response_payload(
    ledger_name: str, peer_head: int, peer_committed: int, blocks: list[bytes]
) -> bytes:
    parts = [
        enc_str(ledger_name),
        enc_u64(peer_head),
        enc_u64(peer_committed + 1),  # stored +1 so "nothing committed" fits in a u64
        enc_u32(len(blocks)),
    ]
    parts.extend(enc_bytes(b) for b in blocks)
    return b"".join(parts)


def parse_catch_up_response(payload: bytes) -> tuple[str, int, int, list[bytes]]:
    r = Reader(payload)
    ledger_name = r.string()
    peer_head = r.u64()
    peer_committed = r.u64() - 1
    blocks = [r.var_bytes() for _ in range(r.u32())]
    r.expect_eof()
    return ledger_name, peer_head, peer_committed, blocks


def audit_request_payload(ledger_name: str, start: int, end: int) -> bytes:
    return enc_str(ledger_name) + enc_u64(start) + enc_u64(end)


def parse_audit_request(payload: bytes) -> tuple[str, int, int]:
    r = Reader(payload)
    out = (r.string(), r.u64(), r.u64())
    r.expect_eof()
    return out


def audit_response_payload(
    ledger_name: str, head_height: int, hashes: list[tuple[int, bytes | None]]
) -> bytes:
    parts = [enc_str(ledger_name), enc_u64(head_height + 1), enc_u32(len(hashes))]
    for height, digest in hashes:
        parts.append(enc_u64(height))
        if digest is None:
            parts.append(enc_u8(0))
        else:
            parts.append(enc_u8(1))
            parts.append(enc_fixed(digest, crypto.DIGEST_SIZE))
    return b"".join(parts)


def parse_audit_response(payload: bytes) -> tuple[str, int, list[tuple[int, bytes | None]]]:
    r = Reader(payload)
    ledger_name = r.string()
    head_height = r.u64() - 1
    hashes: list[tuple[int, bytes | None]] = []
    for _ in range(r.u32()):
        height = r.u64()
        present = r.u8()
        hashes.append((height, r.take(crypto.DIGEST_SIZE) if present else None))
    r.expect_eof()
    return ledger_name, head_height, hashes


def frame(data: bytes) -> bytes:
    return enc_u32(len(data)) + data
