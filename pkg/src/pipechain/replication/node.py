"""Leader-based quorum replication node.

Each node is one logical event loop: handle_raw() processes one wire
message at a time under a lock and returns the messages to send next, so
any transport (in-process simulator or TCP) can drive it. The static
leader appends locally, proposes, collects acks, and commits on majority;
followers verify every proposal (chain linkage, Merkle root, leader
signature, contract replay) before persisting, and catch up over gaps.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .. import crypto
from ..blocks import Block, decode_block, header_hash
from ..contract import ContractError, ContractStore
from ..encoding import EncodingError
from ..entries import hash_entry
from ..ledger import Ledger
from ..merkle import merkle_root
from ..store import MANIFEST_NAME, StoreError
from . import messages as m
from .audit import collect_stored_hashes
from .config import NodeConfig, ROLE_LEADER

REJECT_CHAIN_MISMATCH = "ChainMismatch"
REJECT_BAD_SIGNATURE = "BadSignature"
REJECT_STATE_DIGEST_MISMATCH = "StateDigestMismatch"
REJECT_MERKLE_MISMATCH = "MerkleMismatch"

RETRY_INTERVAL = 0.75
CATCH_UP_CHUNK = 50
AUDIT_MAX_SPAN = 10_000

Outgoing = list[tuple[str, bytes]]


class NotLeader(Exception):
    pass


class GapInChain(Exception):
    pass


class LedgerExists(Exception):
    pass


class UnknownLedger(Exception):
    pass


@dataclass
class PendingProposal:
    height: int
    block_bytes: bytes
    header_hash: bytes
    acks: set[str]
    last_send: float = 0.0


@dataclass
class ReplicaState:
    ledger: Ledger
    committed_height: int = -1
    committed_contracts: ContractStore = field(default_factory=ContractStore)
    pending: Optional[PendingProposal] = None
    # persisted-but-uncommitted blocks, so the commit path skips disk reads
    block_cache: dict[int, Block] = field(default_factory=dict)


class Node:
    def __init__(
        self,
        config: NodeConfig,
        clock: Callable[[], int],
        key_resolver: Callable[[str], Optional[bytes]] = lambda _pid: None,
        on_commit: Callable[[str, Block], None] | None = None,
        schedule_timer: Callable[[float, object], None] | None = None,
    ):
        self.config = config
        self.node_id = config.node_id
        self.is_leader = config.role == ROLE_LEADER
        self.clock = clock
        self.key_resolver = key_resolver
        self.on_commit = on_commit
        self.schedule_timer = schedule_timer or (lambda _delay, _tag: None)
        self.msg_key = crypto.SigningKey(config.secret_seed)
        self.block_key = (
            crypto.SigningKey(config.leader_block_seed)
            if config.leader_block_seed
            else None
        )
        self.leader_public_key = config.leader_public_key
        self.peer_keys = {p.node_id: p.public_key for p in config.peers}
        self.follower_ids = [
            p.node_id for p in config.peers if p.node_id != self.node_id
        ]
        self.quorum = len(config.peers) // 2 + 1
        self.data_dir = Path(config.data_dir)
        self.replicas: dict[str, ReplicaState] = {}
        self.reject_log: list[tuple[str, int, str]] = []
        self.commit_log: list[tuple[str, int, bytes]] = []
        self.catch_up_failures: list[tuple[str, int, str]] = []
        self._lock = threading.RLock()
        self._open_existing_replicas()

    # -- construction / restart ---------------------------------------

    def _open_existing_replicas(self) -> None:
        if not self.data_dir.is_dir():
            return
        for child in sorted(self.data_dir.iterdir()):
            if child.is_dir() and (child / MANIFEST_NAME).exists():
                ledger = Ledger.open(
                    child,
                    signing_key=self.block_key,
                    key_resolver=self.key_resolver,
                    clock=self.clock,
                )
                # committed point is not persisted; it is re-learned from
                # the cluster (leader re-proposes, follower catches up)
                self.replicas[child.name] = ReplicaState(ledger=ledger)

    def bootstrap(self) -> Outgoing:
        """Re-join the cluster after a (re)start."""
        with self._lock:
            out: Outgoing = []
            for name, state in self.replicas.items():
                if self.is_leader:
                    head = state.ledger.head_height
                    raw = state.ledger.store.read_raw(head)
                    state.pending = PendingProposal(
                        height=head,
                        block_bytes=raw,
                        header_hash=state.ledger.store.head_hash,
                        acks={self.node_id},
                        last_send=float(self.clock()),
                    )
                    out.extend(self._broadcast_propose(name, state))
                    out.extend(self._maybe_commit(name, state))
                else:
                    out.extend(self._request_catch_up(name, state.ledger.head_height + 1))
            return out

    # -- leader API ----------------------------------------------------

    def ledger_names(self) -> list[str]:
        return sorted(self.replicas)

    def replica(self, name: str) -> ReplicaState:
        try:
            return self.replicas[name]
        except KeyError:
            raise UnknownLedger(name) from None

    def ready(self, name: str) -> bool:
        """Leader can propose a new block (nothing pending, head committed)."""
        state = self.replica(name)
        return state.pending is None and state.committed_height == state.ledger.head_height

    def create_ledger(self, name: str) -> Outgoing:
        if not self.is_leader:
            raise NotLeader("only the leader creates ledgers")
        with self._lock:
            if name in self.replicas:
                raise LedgerExists(name)
            ledger = Ledger.create(
                self.data_dir / name,
                signing_key=self.block_key,
                key_resolver=self.key_resolver,
                clock=self.clock,
            )
            state = ReplicaState(ledger=ledger)
            state.block_cache[0] = ledger.read_block(0)
            self.replicas[name] = state
            raw = ledger.store.read_raw(0)
            state.pending = PendingProposal(
                height=0,
                block_bytes=raw,
                header_hash=ledger.store.head_hash,
                acks={self.node_id},
                last_send=float(self.clock()),
            )
            out = self._broadcast_propose(name, state)
            out.extend(self._maybe_commit(name, state))
            return out

    def drop_ledger(self, name: str) -> None:
        """Forget the service registration; block files stay on disk."""
        with self._lock:
            self.replicas.pop(name, None)

    def submit_block(self, name: str, entries) -> tuple[Block, Outgoing]:
        """Append a block of validated entries locally and propose it."""
        if not self.is_leader:
            raise NotLeader("only the leader appends")
        with self._lock:
            state = self.replica(name)
            if state.pending is not None or state.committed_height != state.ledger.head_height:
                raise GapInChain(
                    f"cannot extend: head {state.ledger.head_height}, "
                    f"committed {state.committed_height}"
                )
            block = state.ledger.append_block(list(entries))
            state.block_cache[block.header.height] = block
            out = self.propose_block(name, block)
            return block, out

    def propose_block(self, name: str, block: Block) -> Outgoing:
        """Broadcast a proposal for a block extending the committed head."""
        if not self.is_leader:
            raise NotLeader("only the leader proposes")
        with self._lock:
            state = self.replica(name)
            if block.header.height != state.committed_height + 1:
                raise GapInChain(
                    f"proposal at height {block.header.height} does not extend "
                    f"committed head {state.committed_height}"
                )
            raw = state.ledger.store.read_raw(block.header.height)
            state.pending = PendingProposal(
                height=block.header.height,
                block_bytes=raw,
                header_hash=header_hash(block.header),
                acks={self.node_id},
                last_send=float(self.clock()),
            )
            out = self._broadcast_propose(name, state)
            out.extend(self._maybe_commit(name, state))
            return out

    def _broadcast_propose(self, name: str, state: ReplicaState) -> Outgoing:
        assert state.pending is not None
        msg = m.sign_message(
            m.KIND_PROPOSE_BLOCK,
            self.node_id,
            m.propose_payload(name, state.pending.block_bytes),
            self.msg_key,
        )
        data = m.encode_message(msg)
        self.schedule_timer(RETRY_INTERVAL, ("retry", name, state.pending.height))
        return [(peer, data) for peer in self.follower_ids if peer not in state.pending.acks]

    # -- timers ----------------------------------------------------------

    def on_timer(self, tag) -> Outgoing:
        with self._lock:
            if not (isinstance(tag, tuple) and tag and tag[0] == "retry"):
                return []
            _, name, height = tag
            state = self.replicas.get(name)
            if not state or not state.pending or state.pending.height != height:
                return []
            state.pending.last_send = float(self.clock())
            return self._broadcast_propose(name, state)

    # -- wire dispatch -----------------------------------------------------

    def handle_raw(self, data: bytes) -> Outgoing:
        try:
            msg = m.decode_message(data)
        except EncodingError:
            return []
        peer_key = self.peer_keys.get(msg.sender_id)
        if peer_key is not None:
            if not m.verify_message(msg, peer_key):
                return []
        elif msg.kind not in m.READ_ONLY_KINDS:
            return []  # state-changing kinds only from registered peers
        with self._lock:
            if msg.kind == m.KIND_PROPOSE_BLOCK:
                return self._handle_propose(msg)
            if msg.kind == m.KIND_ACK:
                return self._handle_ack(msg)
            if msg.kind == m.KIND_COMMIT:
                return self._handle_commit(msg)
            if msg.kind == m.KIND_CATCH_UP_REQUEST:
                return self._handle_catch_up_request(msg)
            if msg.kind == m.KIND_CATCH_UP_RESPONSE:
                return self._handle_catch_up_response(msg)
            if msg.kind == m.KIND_AUDIT_REQUEST:
                return self._handle_audit_request(msg)
            return []

    def _send(self, dst: str, kind: int, payload: bytes) -> tuple[str, bytes]:
        msg = m.sign_message(kind, self.node_id, payload, self.msg_key)
        return (dst, m.encode_message(msg))

    # -- proposals (follower side) ----------------------------------------

    def verify_block_against_replica(
        self, state: ReplicaState | None, block: Block
    ) -> str | None:
        """The follower checks from the spec, in order; None means valid.

        Contract replay is performed by the caller (it needs the journal).
        """
        header = block.header
        if state is None:
            if header.height != 0:
                return REJECT_CHAIN_MISMATCH
            if header.prev_hash != crypto.ZERO_DIGEST or header.entry_count != 0:
                return REJECT_CHAIN_MISMATCH
            if header.merkle_root != crypto.ZERO_DIGEST:
                return REJECT_MERKLE_MISMATCH
            if not self._leader_signed(block):
                return REJECT_BAD_SIGNATURE
            if header.state_digest != ContractStore().state_digest():
                return REJECT_STATE_DIGEST_MISMATCH
            return None
        if header.height != state.ledger.head_height + 1:
            return REJECT_CHAIN_MISMATCH
        if header.prev_hash != state.ledger.store.head_hash:
            return REJECT_CHAIN_MISMATCH
        if not block.entries:
            return REJECT_CHAIN_MISMATCH
        if merkle_root([hash_entry(e) for e in block.entries]) != header.merkle_root:
            return REJECT_MERKLE_MISMATCH
        if not self._leader_signed(block):
            return REJECT_BAD_SIGNATURE
        return None

    def _leader_signed(self, block: Block) -> bool:
        from ..blocks import verify_header_signature

        return verify_header_signature(block.header, self.leader_public_key)

    def _apply_and_persist(self, name: str, state: ReplicaState | None, block: Block) -> str | None:
        """Replay-check then persist a structurally verified block."""
        if state is None:
            ledger = Ledger.adopt_genesis(
                self.data_dir / name, block, key_resolver=self.key_resolver, clock=self.clock
            )
            self.replicas[name] = ReplicaState(ledger=ledger)
            self.replicas[name].block_cache[0] = block
            return None
        ledger = state.ledger
        try:
            journal = ledger.contracts.apply_block_entries(
                block.entries, block.header.timestamp
            )
        except ContractError as exc:
            self.reject_log.append((name, block.header.height, str(exc)))
            return REJECT_STATE_DIGEST_MISMATCH
        if ledger.contracts.state_digest() != block.header.state_digest:
            ledger.contracts.undo(journal)
            return REJECT_STATE_DIGEST_MISMATCH
        try:
            ledger.store.append(block)
        except StoreError:
            ledger.contracts.undo(journal)
            return REJECT_CHAIN_MISMATCH
        for entry in block.entries:
            ledger._seen_entry_ids.add(entry.entry_id)
            ledger._seen_nonces.add((entry.submitter_id, entry.submitter_nonce))
        state.block_cache[block.header.height] = block
        return None

    def _handle_propose(self, msg: m.Message) -> Outgoing:
        try:
            name, block_bytes = m.parse_propose(msg.payload)
            block = decode_block(block_bytes)
        except EncodingError:
            return []  # undecodable proposal carries no height to reject
        height = block.header.height
        state = self.replicas.get(name)

        def ack(accepted: bool, reason: str = "") -> Outgoing:
            if not accepted:
                self.reject_log.append((name, height, reason))
            return [
                self._send(
                    msg.sender_id,
                    m.KIND_ACK,
                    m.ack_payload(name, height, header_hash(block.header), accepted, reason),
                )
            ]

        if state is not None and height <= state.ledger.head_height:
            stored = state.ledger.store.read_raw(height)
            if stored == block_bytes:
                out = ack(True)  # idempotent re-ack of a block we hold
                if height < state.ledger.head_height:
                    # strictly behind our head: the leader served successors,
                    # so this height reached quorum long ago
                    self._commit_up_to(name, state, height)
                return out
            return ack(False, REJECT_CHAIN_MISMATCH)

        if state is not None and height > state.ledger.head_height + 1:
            return self._request_catch_up(name, state.ledger.head_height + 1, msg.sender_id)
        if state is None and height > 0:
            return self._request_catch_up(name, 0, msg.sender_id)

        reason = self.verify_block_against_replica(state, block)
        if reason is None:
            reason = self._apply_and_persist(name, state, block)
        if reason is not None:
            return ack(False, reason)
        state = self.replicas[name]
        out = ack(True)
        # the leader proposes height h only after h-1 reached quorum
        if height > 0:
            self._commit_up_to(name, state, height - 1)
        return out

    # -- acks and commit (leader side) --------------------------------------

    def _handle_ack(self, msg: m.Message) -> Outgoing:
        if not self.is_leader:
            return []
        try:
            name, height, digest, accepted, reason = m.parse_ack(msg.payload)
        except EncodingError:
            return []
        state = self.replicas.get(name)
        if not state or not state.pending or state.pending.height != height:
            return []
        if not accepted:
            self.reject_log.append((name, height, f"{msg.sender_id}: {reason}"))
            return []
        if digest != state.pending.header_hash:
            return []
        state.pending.acks.add(msg.sender_id)
        return self._maybe_commit(name, state)

    def _maybe_commit(self, name: str, state: ReplicaState) -> Outgoing:
        if not state.pending or len(state.pending.acks) < self.quorum:
            return []
        height = state.pending.height
        digest = state.pending.header_hash
        state.pending = None
        self._commit_up_to(name, state, height)
        payload = m.commit_payload(name, height, digest)
        return [self._send(peer, m.KIND_COMMIT, payload) for peer in self.follower_ids]

    def _handle_commit(self, msg: m.Message) -> Outgoing:
        try:
            name, height, digest = m.parse_commit(msg.payload)
        except EncodingError:
            return []
        state = self.replicas.get(name)
        if state is None:
            return self._request_catch_up(name, 0, msg.sender_id)
        if height > state.ledger.head_height:
            return self._request_catch_up(
                name, state.ledger.head_height + 1, msg.sender_id
            )
        if height == state.ledger.head_height:
            stored_hash = state.ledger.store.head_hash
        else:
            cached = state.block_cache.get(height)
            stored_hash = header_hash(
                cached.header if cached else state.ledger.read_block(height).header
            )
        if stored_hash == digest:
            self._commit_up_to(name, state, height)
        return []

    def _commit_up_to(self, name: str, state: ReplicaState, height: int) -> None:
        while state.committed_height < height:
            h = state.committed_height + 1
            block = state.block_cache.pop(h, None)
            if block is None:
                block = state.ledger.read_block(h)
            state.committed_contracts.apply_block_entries(
                block.entries, block.header.timestamp
            )
            state.committed_height = h
            self.commit_log.append((name, h, header_hash(block.header)))
            if self.on_commit is not None:
                self.on_commit(name, block)

    # -- catch-up --------------------------------------------------------

    def _request_catch_up(
        self, name: str, first_height: int, peer: str | None = None
    ) -> Outgoing:
        target = peer or self.config.leader_id
        if target == self.node_id:
            return []
        return [
            self._send(
                target, m.KIND_CATCH_UP_REQUEST, m.catch_up_request_payload(name, first_height)
            )
        ]

    def _handle_catch_up_request(self, msg: m.Message) -> Outgoing:
        try:
            name, first = m.parse_catch_up_request(msg.payload)
        except EncodingError:
            return []
        state = self.replicas.get(name)
        if state is None:
            return []
        head = state.ledger.head_height
        last = min(head, first + CATCH_UP_CHUNK - 1)
        blocks = [
            state.ledger.store.read_raw(h) for h in range(first, last + 1)
        ]
        payload = m.catch_up_response_payload(
            name, head, state.committed_height, blocks
        )
        return [self._send(msg.sender_id, m.KIND_CATCH_UP_RESPONSE, payload)]

    def _handle_catch_up_response(self, msg: m.Message) -> Outgoing:
        try:
            name, peer_head, peer_committed, raw_blocks = m.parse_catch_up_response(
                msg.payload
            )
        except EncodingError:
            return []
        for raw in raw_blocks:
            try:
                block = decode_block(raw)
            except EncodingError:
                state = self.replicas.get(name)
                bad = state.ledger.head_height + 1 if state else 0
                self.catch_up_failures.append((name, bad, "undecodable block"))
                break
            state = self.replicas.get(name)
            if state is not None and block.header.height <= state.ledger.head_height:
                continue  # duplicate delivery
            if state is not None and block.header.height > state.ledger.head_height + 1:
                break  # out-of-order chunk; re-request below
            reason = self.verify_block_against_replica(state, block)
            if reason is None:
                reason = self._apply_and_persist(name, state, block)
            if reason is not None:
                self.catch_up_failures.append((name, block.header.height, reason))
                break
        state = self.replicas.get(name)
        if state is None:
            return []
        self._commit_up_to(
            name, state, min(state.ledger.head_height, peer_committed)
        )
        if state.ledger.head_height < peer_head and not self.catch_up_failures:
            return self._request_catch_up(
                name, state.ledger.head_height + 1, msg.sender_id
            )
        return []

    # -- audit -----------------------------------------------------------

    def _handle_audit_request(self, msg: m.Message) -> Outgoing:
        try:
            name, start, end = m.parse_audit_request(msg.payload)
        except EncodingError:
            return []
        if end < start or end - start > AUDIT_MAX_SPAN:
            return []
        state = self.replicas.get(name)
        head = state.ledger.head_height if state else -1
        hashes = collect_stored_hashes(self.data_dir / name, start, end)
        payload = m.audit_response_payload(name, head, hashes)
        return [self._send(msg.sender_id, m.KIND_AUDIT_RESPONSE, payload)]
