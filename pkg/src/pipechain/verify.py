"""Full-chain verification: every failure is reported, nothing throws.

Checks, per block: strict canonical decoding, prev-hash linkage, Merkle
root recomputation, leader signature, timestamp monotonicity, and (unless
disabled) contract replay against the recorded state digest. The manifest
must agree with the block files. Any single corrupted byte anywhere in a
block file surfaces as at least one failure at that height.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from pathlib import Path

from . import crypto
from .blocks import decode_block, verify_header_signature
from .contract import ContractError, ContractStore
from .encoding import EncodingError
from .entries import hash_entry
from .merkle import merkle_root
from .store import LedgerStore, StorageCorrupt as StorageCorruptError, StoreError, block_filename


class FailureKind(enum.Enum):
    PREV_HASH_MISMATCH = "PrevHashMismatch"
    MERKLE_MISMATCH = "MerkleMismatch"
    BAD_SIGNATURE = "BadSignature"
    BAD_TIMESTAMP = "BadTimestamp"
    STORAGE_CORRUPT = "StorageCorrupt"
    STATE_DIGEST_MISMATCH = "StateDigestMismatch"


@dataclass(frozen=True)
class Failure:
    height: int
    kind: FailureKind
    detail: str


@dataclass
class ChainVerificationReport:
    ok: bool
    head_height: int
    failures: list[Failure] = field(default_factory=list)

    def heights_with(self, kind: FailureKind) -> set[int]:
        return {f.height for f in self.failures if f.kind is kind}

    def failed_heights(self) -> set[int]:
        return {f.height for f in self.failures}


def verify_chain(
    path: str | os.PathLike,
    leader_public_key: bytes,
    replay: bool = True,
) -> ChainVerificationReport:
    """Verify every block in a ledger directory; read-only."""
    path = Path(path)
    failures: list[Failure] = []

    try:
        store = LedgerStore.open(path)
        head_height = store.head_height
        manifest_head_hash = store.head_hash
    except (StoreError, StorageCorruptError) as exc:
        # Without a trustworthy manifest, fall back to the block files present.
        failures.append(Failure(0, FailureKind.STORAGE_CORRUPT, f"manifest: {exc}"))
        heights = _scan_block_heights(path)
        head_height = max(heights) if heights else -1
        manifest_head_hash = None
        store = None

    contracts = ContractStore() if replay else None
    seen_nonces: set[tuple[str, int]] = set()
    seen_entry_ids: set[bytes] = set()
    prev_raw_header: bytes | None = None
    prev_timestamp: int | None = None
    head_raw_hash: bytes | None = None

    for height in range(head_height + 1):
        file_path = path / block_filename(height)
        try:
            raw = file_path.read_bytes()
        except OSError as exc:
            failures.append(
                Failure(height, FailureKind.STORAGE_CORRUPT, f"unreadable block file: {exc}")
            )
            prev_raw_header = None
            prev_timestamp = None
            continue

        # Raw header slice exists even when deeper decoding fails, so the
        # next block's linkage check never blames the wrong height.
        raw_header = raw[6 : 6 + 180] if len(raw) >= 186 else None
        this_hash = crypto.header_digest(raw_header) if raw_header else None

        try:
            block = decode_block(raw)
        except EncodingError as exc:
            failures.append(Failure(height, FailureKind.STORAGE_CORRUPT, str(exc)))
            prev_raw_header = raw_header
            prev_timestamp = None
            if height == head_height:
                head_raw_hash = this_hash
            continue

        header = block.header
        if header.height != height:
            failures.append(
                Failure(
                    height,
                    FailureKind.STORAGE_CORRUPT,
                    f"file {file_path.name} carries header height {header.height}",
                )
            )

        # prev-hash linkage
        if height == 0:
            if header.prev_hash != crypto.ZERO_DIGEST:
                failures.append(
                    Failure(0, FailureKind.PREV_HASH_MISMATCH, "genesis prev_hash not zero")
                )
        elif prev_raw_header is not None:
            expected = crypto.header_digest(prev_raw_header)
            if header.prev_hash != expected:
                failures.append(
                    Failure(
                        height,
                        FailureKind.PREV_HASH_MISMATCH,
                        f"prev_hash {header.prev_hash.hex()[:16]}.. != hash of header {height - 1}",
                    )
                )

        # Merkle root over entry leaf hashes
        if height == 0:
            if header.entry_count != 0 or block.entries:
                failures.append(
                    Failure(0, FailureKind.STORAGE_CORRUPT, "genesis block must be empty")
                )
            elif header.merkle_root != crypto.ZERO_DIGEST:
                failures.append(
                    Failure(0, FailureKind.MERKLE_MISMATCH, "genesis merkle_root not zero")
                )
        else:
            if not block.entries:
                failures.append(
                    Failure(height, FailureKind.STORAGE_CORRUPT, "empty non-genesis block")
                )
            else:
                computed = merkle_root([hash_entry(e) for e in block.entries])
                if computed != header.merkle_root:
                    failures.append(
                        Failure(
                            height,
                            FailureKind.MERKLE_MISMATCH,
                            "recomputed merkle root disagrees with header",
                        )
                    )

        # leader signature over the header preimage
        if not verify_header_signature(header, leader_public_key):
            failures.append(
                Failure(height, FailureKind.BAD_SIGNATURE, "leader signature does not verify")
            )

        # timestamp monotonicity
        if prev_timestamp is not None and header.timestamp < prev_timestamp:
            failures.append(
                Failure(
                    height,
                    FailureKind.BAD_TIMESTAMP,
                    f"timestamp {header.timestamp} < previous {prev_timestamp}",
                )
            )

        # contract replay
        if contracts is not None:
            replay_failure = None
            for entry in block.entries:
                if entry.entry_id in seen_entry_ids:
                    replay_failure = f"duplicate entry id {entry.entry_id.hex()}"
                    break
                if (entry.submitter_id, entry.submitter_nonce) in seen_nonces:
                    replay_failure = (
                        f"replayed nonce {entry.submitter_nonce} for {entry.submitter_id!r}"
                    )
                    break
                seen_entry_ids.add(entry.entry_id)
                seen_nonces.add((entry.submitter_id, entry.submitter_nonce))
            if replay_failure is None:
                try:
                    contracts.apply_block_entries(block.entries, header.timestamp)
                except ContractError as exc:
                    replay_failure = f"entry rejected during replay: {exc}"
            if replay_failure is not None:
                failures.append(
                    Failure(height, FailureKind.STATE_DIGEST_MISMATCH, replay_failure)
                )
                contracts = None  # state unknown from here on
            elif contracts.state_digest() != header.state_digest:
                failures.append(
                    Failure(
                        height,
                        FailureKind.STATE_DIGEST_MISMATCH,
                        "replayed state digest disagrees with header",
                    )
                )

        prev_raw_header = raw_header
        prev_timestamp = header.timestamp
        if height == head_height:
            head_raw_hash = this_hash

    # Manifest head hash must match the head block actually on disk.
    if (
        manifest_head_hash is not None
        and head_raw_hash is not None
        and manifest_head_hash != head_raw_hash
    ):
        failures.append(
            Failure(
                head_height,
                FailureKind.STORAGE_CORRUPT,
                "manifest head hash disagrees with stored head block",
            )
        )

    # Block files beyond the manifest head would mean a truncated manifest.
    extra = [h for h in _scan_block_heights(path) if h > head_height]
    for h in extra:
        failures.append(
            Failure(h, FailureKind.STORAGE_CORRUPT, "block file beyond manifest head")
        )

    return ChainVerificationReport(
        ok=not failures,
        head_height=max(head_height, 0),
        failures=failures,
    )


def _scan_block_heights(path: Path) -> list[int]:
    heights = []
    try:
        names = os.listdir(path)
    except OSError:
        return []
    for name in names:
        if name.startswith("block_") and name.endswith(".bin"):
            try:
                heights.append(int(name[len("block_") : -len(".bin")]))
            except ValueError:
                continue
    return sorted(heights)
