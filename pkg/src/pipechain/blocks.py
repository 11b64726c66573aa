"""Block headers, blocks, and the on-disk block file format."""

from __future__ import annotations

from dataclasses import dataclass

from . import crypto
from .encoding import EncodingError, Reader, enc_fixed, enc_u16, enc_u32, enc_u64
from .entries import LedgerEntry, decode_entry, encode_entry

BLOCK_MAGIC = b"PCHN"
BLOCK_FORMAT_VERSION = 1

HEADER_PREIMAGE_SIZE = 8 + 32 + 32 + 8 + 4 + 32  # 116
HEADER_SIZE = HEADER_PREIMAGE_SIZE + crypto.SIGNATURE_SIZE  # 180


@dataclass(frozen=True)
class BlockHeader:
    height: int
    prev_hash: bytes
    merkle_root: bytes
    timestamp: int
    entry_count: int
    state_digest: bytes
    leader_signature: bytes


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    entries: tuple[LedgerEntry, ...]


def header_preimage(header: BlockHeader) -> bytes:
    """Canonical bytes the leader signs (every field but the signature)."""
    return b"".join(
        (
            enc_u64(header.height),
            enc_fixed(header.prev_hash, crypto.DIGEST_SIZE),
            enc_fixed(header.merkle_root, crypto.DIGEST_SIZE),
            enc_u64(header.timestamp),
            enc_u32(header.entry_count),
            enc_fixed(header.state_digest, crypto.DIGEST_SIZE),
        )
    )


def encode_header(header: BlockHeader) -> bytes:
    return header_preimage(header) + enc_fixed(
        header.leader_signature, crypto.SIGNATURE_SIZE
    )


def decode_header(reader: Reader) -> BlockHeader:
    return BlockHeader(
        height=reader.u64(),
        prev_hash=reader.take(crypto.DIGEST_SIZE),
        merkle_root=reader.take(crypto.DIGEST_SIZE),
        timestamp=reader.u64(),
        entry_count=reader.u32(),
        state_digest=reader.take(crypto.DIGEST_SIZE),
        leader_signature=reader.take(crypto.SIGNATURE_SIZE),
    )


def header_hash(header: BlockHeader) -> bytes:
    """Chain-link digest: sha256(0x02 || full header bytes incl. signature)."""
    return crypto.header_digest(encode_header(header))


def sign_header(
    height: int,
    prev_hash: bytes,
    merkle_root: bytes,
    timestamp: int,
    entry_count: int,
    state_digest: bytes,
    key: crypto.SigningKey,
) -> BlockHeader:
    unsigned = BlockHeader(
        height=height,
        prev_hash=prev_hash,
        merkle_root=merkle_root,
        timestamp=timestamp,
        entry_count=entry_count,
        state_digest=state_digest,
        leader_signature=b"\x00" * crypto.SIGNATURE_SIZE,
    )
    signature = key.sign(header_preimage(unsigned))
    return BlockHeader(
        height=height,
        prev_hash=prev_hash,
        merkle_root=merkle_root,
        timestamp=timestamp,
        entry_count=entry_count,
        state_digest=state_digest,
        leader_signature=signature,
    )


def verify_header_signature(header: BlockHeader, leader_public_key: bytes) -> bool:
    return crypto.verify_signature(
        leader_public_key, header.leader_signature, header_preimage(header)
    )


def encode_block(block: Block) -> bytes:
    """Bit-exact block file bytes: magic || version || header || entry list."""
    parts = [
        BLOCK_MAGIC,
        enc_u16(BLOCK_FORMAT_VERSION),
        encode_header(block.header),
        enc_u32(len(block.entries)),
    ]
    parts.extend(encode_entry(e) for e in block.entries)
    return b"".join(parts)


def decode_block(data: bytes) -> Block:
    r = Reader(data)
    if r.take(4) != BLOCK_MAGIC:
        raise EncodingError("bad block magic")
    version = r.u16()
    if version != BLOCK_FORMAT_VERSION:
        raise EncodingError(f"unsupported block format version: {version}")
    header = decode_header(r)
    count = r.u32()
    if count != header.entry_count:
        raise EncodingError(
            f"entry list count {count} disagrees with header entry_count {header.entry_count}"
        )
    entries = tuple(decode_entry(r) for _ in range(count))
    r.expect_eof()
    block = Block(header=header, entries=entries)
    # Canonicality: re-encoding must reproduce the stored bytes exactly.
    if encode_block(block) != data:
        raise EncodingError("non-canonical block bytes")
    return block
