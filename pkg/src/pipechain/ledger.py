"""The append path: entries in, signed chained blocks out.

A Ledger owns one block store plus the contract state at head, the
replay-protection registries (entry ids, submitter nonces), the leader
signing key, and an injected clock. All appends are serialized through
one lock; everything returned to callers is immutable.
"""

from __future__ import annotations

import os
import threading
import time
from typing import Callable, Mapping, Optional

from . import crypto
from .blocks import Block, BlockHeader, header_hash, sign_header
from .contract import ContractError, ContractStore
from .entries import LedgerEntry, hash_entry, verify_entry_signature
from .merkle import merkle_root
from .store import LedgerStore, StoreError

KeyResolver = Callable[[str], Optional[bytes]]
Clock = Callable[[], int]


class AppendError(Exception):
    pass


class EmptyBlock(AppendError):
    pass


class DuplicateNonce(AppendError):
    def __init__(self, submitter_id: str, nonce: int):
        super().__init__(f"replayed nonce {nonce} for submitter {submitter_id}")
        self.submitter_id = submitter_id
        self.nonce = nonce


class DuplicateEntryId(AppendError):
    def __init__(self, entry_id: bytes):
        super().__init__(f"duplicate entry id {entry_id.hex()}")
        self.entry_id = entry_id


class BadEntrySignature(AppendError):
    def __init__(self, entry_id: bytes, detail: str = "signature does not verify"):
        super().__init__(f"entry {entry_id.hex()}: {detail}")
        self.entry_id = entry_id


def resolver_from_mapping(keys: Mapping[str, bytes]) -> KeyResolver:
    return lambda principal_id: keys.get(principal_id)


class Ledger:
    def __init__(
        self,
        store: LedgerStore,
        signing_key: crypto.SigningKey | None,
        key_resolver: KeyResolver,
        clock: Clock = lambda: int(time.time()),
    ):
        self.store = store
        self.signing_key = signing_key
        self.key_resolver = key_resolver
        self.clock = clock
        self.contracts = ContractStore()
        self._seen_entry_ids: set[bytes] = set()
        self._seen_nonces: set[tuple[str, int]] = set()
        self._append_lock = threading.Lock()

    # -- construction ----------------------------------------------------

    @classmethod
    def create(
        cls,
        path: str | os.PathLike,
        signing_key: crypto.SigningKey,
        key_resolver: KeyResolver = lambda _pid: None,
        clock: Clock = lambda: int(time.time()),
    ) -> "Ledger":
        """Initialize a fresh ledger directory with a signed genesis block."""
        genesis_header = sign_header(
            height=0,
            prev_hash=crypto.ZERO_DIGEST,
            merkle_root=crypto.ZERO_DIGEST,
            timestamp=clock(),
            entry_count=0,
            state_digest=ContractStore().state_digest(),
            key=signing_key,
        )
        genesis = Block(header=genesis_header, entries=())
        store = LedgerStore.create(path, genesis)
        return cls(store, signing_key, key_resolver, clock)

    @classmethod
    def adopt_genesis(
        cls,
        path: str | os.PathLike,
        genesis: Block,
        key_resolver: KeyResolver = lambda _pid: None,
        clock: Clock = lambda: int(time.time()),
    ) -> "Ledger":
        """Initialize storage from a leader-built genesis block (followers)."""
        store = LedgerStore.create(path, genesis)
        return cls(store, None, key_resolver, clock)

    @classmethod
    def open(
        cls,
        path: str | os.PathLike,
        signing_key: crypto.SigningKey | None = None,
        key_resolver: KeyResolver = lambda _pid: None,
        clock: Clock = lambda: int(time.time()),
    ) -> "Ledger":
        """Open an existing directory, rebuilding state by replaying all blocks."""
        store = LedgerStore.open(path)
        ledger = cls(store, signing_key, key_resolver, clock)
        for block in store.iter_blocks():
            if block.header.height == 0:
                continue
            ledger._track_block(block)
        return ledger

    def _track_block(self, block: Block) -> None:
        """Fold a persisted block into contract state and replay registries."""
        try:
            self.contracts.apply_block_entries(block.entries, block.header.timestamp)
        except ContractError as exc:
            raise StoreError(
                f"block {block.header.height} does not replay cleanly: {exc}"
            ) from exc
        for entry in block.entries:
            self._seen_entry_ids.add(entry.entry_id)
            self._seen_nonces.add((entry.submitter_id, entry.submitter_nonce))

    # -- reads -----------------------------------------------------------

    @property
    def head_height(self) -> int:
        return self.store.head_height

    @property
    def head_header(self) -> BlockHeader:
        return self.store.read_block(self.store.head_height).header

    def read_block(self, height: int) -> Block:
        return self.store.read_block(height)

    def nonce_seen(self, submitter_id: str, nonce: int) -> bool:
        return (submitter_id, nonce) in self._seen_nonces

    def max_nonce(self, submitter_id: str) -> int:
        return max(
            (n for pid, n in self._seen_nonces if pid == submitter_id), default=0
        )

    # -- append ----------------------------------------------------------

    def validate_entry(self, entry: LedgerEntry) -> None:
        """Signature + uniqueness checks an entry must pass before batching."""
        if entry.entry_id in self._seen_entry_ids:
            raise DuplicateEntryId(entry.entry_id)
        if (entry.submitter_id, entry.submitter_nonce) in self._seen_nonces:
            raise DuplicateNonce(entry.submitter_id, entry.submitter_nonce)
        public_key = self.key_resolver(entry.submitter_id)
        if public_key is None:
            raise BadEntrySignature(entry.entry_id, f"no registered key for {entry.submitter_id!r}")
        if not verify_entry_signature(entry, public_key):
            raise BadEntrySignature(entry.entry_id)

    def append_block(self, pending: list[LedgerEntry]) -> Block:
        """Batch pending entries into the next signed, persisted block.

        Entries must all validate and all apply cleanly against the contract
        state (rejecting entries are filtered out upstream at proposal time);
        any failure leaves the ledger unchanged.
        """
        if self.signing_key is None:
            raise AppendError("ledger opened without a leader signing key")
        if not pending:
            raise EmptyBlock("a block must carry at least one entry")
        with self._append_lock:
            seen_ids: set[bytes] = set()
            seen_nonces: set[tuple[str, int]] = set()
            for entry in pending:
                self.validate_entry(entry)
                if entry.entry_id in seen_ids:
                    raise DuplicateEntryId(entry.entry_id)
                if (entry.submitter_id, entry.submitter_nonce) in seen_nonces:
                    raise DuplicateNonce(entry.submitter_id, entry.submitter_nonce)
                seen_ids.add(entry.entry_id)
                seen_nonces.add((entry.submitter_id, entry.submitter_nonce))

            prev_header = self.head_header
            timestamp = max(self.clock(), prev_header.timestamp)
            journal = self.contracts.apply_block_entries(list(pending), timestamp)
            try:
                header = sign_header(
                    height=prev_header.height + 1,
                    prev_hash=header_hash(prev_header),
                    merkle_root=merkle_root([hash_entry(e) for e in pending]),
                    timestamp=timestamp,
                    entry_count=len(pending),
                    state_digest=self.contracts.state_digest(),
                    key=self.signing_key,
                )
                block = Block(header=header, entries=tuple(pending))
                self.store.append(block)
            except Exception:
                self.contracts.undo(journal)
                raise
            self._seen_entry_ids |= seen_ids
            self._seen_nonces |= seen_nonces
            return block

    def adopt_block(self, block: Block) -> None:
        """Persist a block built elsewhere (follower path; already verified)."""
        with self._append_lock:
            journal = self.contracts.apply_block_entries(
                block.entries, block.header.timestamp
            )
            try:
                self.store.append(block)
            except Exception:
                self.contracts.undo(journal)
                raise
            for entry in block.entries:
                self._seen_entry_ids.add(entry.entry_id)
                self._seen_nonces.add((entry.submitter_id, entry.submitter_nonce))
