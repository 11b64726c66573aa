"""Receipts: portable Merkle inclusion proofs bound to a signed header.

A receipt is verifiable offline with nothing but the leader public key:
recompute the root from the entry hash along the audit path, compare with
the header's Merkle root, then check the leader signature over the header.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import crypto
from .blocks import BlockHeader, decode_header, encode_header, verify_header_signature
from .encoding import EncodingError, Reader, enc_fixed, enc_u8, enc_u32
from .entries import hash_entry
from .merkle import SIDE_LEFT, SIDE_RIGHT, audit_path, path_root
from .store import LedgerStore

RECEIPT_FORMAT_VERSION = 1

REJECT_PATH_MISMATCH = "PathMismatch"
REJECT_BAD_SIGNATURE = "BadSignature"
REJECT_MALFORMED = "Malformed"

_SIDE_NAMES = {SIDE_LEFT: "left", SIDE_RIGHT: "right"}
_SIDE_CODES = {"left": SIDE_LEFT, "right": SIDE_RIGHT}


@dataclass(frozen=True)
class Receipt:
    entry_hash: bytes
    leaf_index: int
    audit_path: tuple[tuple[bytes, int], ...]
    header: BlockHeader


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: str | None = None

    @staticmethod
    def accept() -> "Verdict":
        return Verdict(True)

    @staticmethod
    def reject(reason: str) -> "Verdict":
        return Verdict(False, reason)


class IndexOutOfRange(ValueError):
    pass


def make_receipt(store: LedgerStore, height: int, leaf_index: int) -> Receipt:
    block = store.read_block(height)
    if not 0 <= leaf_index < block.header.entry_count:
        raise IndexOutOfRange(
            f"leaf {leaf_index} out of range for block {height} "
            f"({block.header.entry_count} entries)"
        )
    leaves = [hash_entry(e) for e in block.entries]
    return Receipt(
        entry_hash=leaves[leaf_index],
        leaf_index=leaf_index,
        audit_path=tuple(audit_path(leaves, leaf_index)),
        header=block.header,
    )


def verify_receipt(receipt: Receipt, trusted_leader_key: bytes) -> Verdict:
    """Pure verification, safe on arbitrary input; no storage access."""
    try:
        recomputed = path_root(receipt.entry_hash, receipt.audit_path)
        if recomputed != receipt.header.merkle_root:
            return Verdict.reject(REJECT_PATH_MISMATCH)
        if not verify_header_signature(receipt.header, trusted_leader_key):
            return Verdict.reject(REJECT_BAD_SIGNATURE)
    except Exception:
        return Verdict.reject(REJECT_MALFORMED)
    return Verdict.accept()


# -- binary form (fixture corpus, offline files) ---------------------------


def encode_receipt(receipt: Receipt) -> bytes:
    parts = [
        enc_u8(RECEIPT_FORMAT_VERSION),
        enc_fixed(receipt.entry_hash, crypto.DIGEST_SIZE),
        enc_u32(receipt.leaf_index),
        enc_u32(len(receipt.audit_path)),
    ]
    for sibling, side in receipt.audit_path:
        parts.append(enc_u8(side))
        parts.append(enc_fixed(sibling, crypto.DIGEST_SIZE))
    parts.append(encode_header(receipt.header))
    return b"".join(parts)


def decode_receipt(data: bytes) -> Receipt:
    r = Reader(data)
    version = r.u8()
    if version != RECEIPT_FORMAT_VERSION:
        raise EncodingError(f"unsupported receipt version: {version}")
    entry_hash = r.take(crypto.DIGEST_SIZE)
    leaf_index = r.u32()
    count = r.u32()
    path = []
    for _ in range(count):
        side = r.u8()
        if side not in (SIDE_LEFT, SIDE_RIGHT):
            raise EncodingError(f"invalid path side: {side}")
        sibling = r.take(crypto.DIGEST_SIZE)
        path.append((sibling, side))
    header = decode_header(r)
    r.expect_eof()
    return Receipt(
        entry_hash=entry_hash,
        leaf_index=leaf_index,
        audit_path=tuple(path),
        header=header,
    )


# -- JSON wire form (gateway responses; hex digests) ------------------------


def receipt_to_json_dict(receipt: Receipt) -> dict:
    return {
        "entryHash": receipt.entry_hash.hex(),
        "leafIndex": receipt.leaf_index,
        "auditPath": [
            {"sibling": sibling.hex(), "side": _SIDE_NAMES[side]}
            for sibling, side in receipt.audit_path
        ],
        "header": {
            "height": receipt.header.height,
            "prevHash": receipt.header.prev_hash.hex(),
            "merkleRoot": receipt.header.merkle_root.hex(),
            "timestamp": receipt.header.timestamp,
            "entryCount": receipt.header.entry_count,
            "stateDigest": receipt.header.state_digest.hex(),
            "leaderSignature": receipt.header.leader_signature.hex(),
        },
    }


def receipt_from_json_dict(data: dict) -> Receipt:
    try:
        header = data["header"]
        path = tuple(
            (bytes.fromhex(node["sibling"]), _SIDE_CODES[node["side"]])
            for node in data["auditPath"]
        )
        receipt = Receipt(
            entry_hash=bytes.fromhex(data["entryHash"]),
            leaf_index=int(data["leafIndex"]),
            audit_path=path,
            header=BlockHeader(
                height=int(header["height"]),
                prev_hash=bytes.fromhex(header["prevHash"]),
                merkle_root=bytes.fromhex(header["merkleRoot"]),
                timestamp=int(header["timestamp"]),
                entry_count=int(header["entryCount"]),
                state_digest=bytes.fromhex(header["stateDigest"]),
                leader_signature=bytes.fromhex(header["leaderSignature"]),
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise EncodingError(f"malformed receipt JSON: {exc}") from exc
    # Round-trip through the canonical encoder to enforce field sizes.
    return decode_receipt(encode_receipt(receipt))


def load_receipt(data: bytes) -> Receipt:
    """Accept either wire form: JSON (hex digests) or canonical binary."""
    stripped = data.lstrip()
    if stripped[:1] == b"{":
        try:
            parsed = json.loads(stripped.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise EncodingError(f"malformed receipt JSON: {exc}") from exc
        return receipt_from_json_dict(parsed)
    return decode_receipt(data)


def verify_receipt_bytes(data: bytes, trusted_leader_key: bytes) -> Verdict:
    """Verdict for untrusted receipt bytes; malformed input rejects, never raises."""
    try:
        receipt = load_receipt(data)
    except Exception:
        return Verdict.reject(REJECT_MALFORMED)
    return verify_receipt(receipt, trusted_leader_key)
