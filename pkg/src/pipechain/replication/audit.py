"""Cross-replica consistency audit with majority-hash tamper localization."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .. import crypto
from ..blocks import decode_block
from ..encoding import EncodingError
from ..entries import hash_entry
from ..merkle import merkle_root
from ..store import block_filename


class InsufficientNodes(Exception):
    pass


class PeerUnreachable(Exception):
    pass


def collect_stored_hashes(
    ledger_dir: str | Path, start: int, end: int
) -> list[tuple[int, bytes | None]]:
    """Per-height audit values read fresh from disk.

    A clean block reports its header hash. A block whose stored bytes fail
    self-verification (strict decode, height match, Merkle recomputation)
    reports a digest of the raw file bytes instead, so any mutation anywhere
    in the file shows up as a divergent value. Missing blocks report None.
    """
    ledger_dir = Path(ledger_dir)
    out: list[tuple[int, bytes | None]] = []
    for height in range(start, end + 1):
        path = ledger_dir / block_filename(height)
        try:
            raw = path.read_bytes()
        except OSError:
            out.append((height, None))
            continue
        out.append((height, _stored_block_value(raw, height)))
    return out


def _stored_block_value(raw: bytes, height: int) -> bytes:
    corrupt_marker = crypto.header_digest(raw)
    try:
        block = decode_block(raw)
    except EncodingError:
        return corrupt_marker
    header = block.header
    if header.height != height:
        return corrupt_marker
    if height == 0:
        if header.entry_count != 0 or header.merkle_root != crypto.ZERO_DIGEST:
            return corrupt_marker
    else:
        if not block.entries:
            return corrupt_marker
        if merkle_root([hash_entry(e) for e in block.entries]) != header.merkle_root:
            return corrupt_marker
    return crypto.header_digest(raw[6 : 6 + 180])


class AuditPeer(Protocol):
    """One audited replica; unreachable peers raise PeerUnreachable."""

    node_id: str

    def head_height(self, ledger_name: str) -> int: ...

    def fetch_hashes(
        self, ledger_name: str, start: int, end: int
    ) -> list[tuple[int, bytes | None]]: ...


@dataclass
class DivergenceReport:
    per_height: dict[int, list[tuple[str, bytes | None]]]
    divergent: list[int] = field(default_factory=list)
    missing: list[tuple[str, int]] = field(default_factory=list)
    unreachable: list[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.divergent and not self.missing

    def minority_nodes(self, height: int) -> list[str]:
        """Nodes whose audit value disagrees with the height's majority."""
        values = [(n, d) for n, d in self.per_height.get(height, []) if d is not None]
        if not values:
            return []
        counts: dict[bytes, int] = {}
        for _, digest in values:
            counts[digest] = counts.get(digest, 0) + 1
        majority = max(counts.items(), key=lambda kv: kv[1])[0]
        return sorted(n for n, d in values if d != majority)


def audit_consistency(
    peers: list[AuditPeer],
    ledger_name: str,
    start: int | None = None,
    end: int | None = None,
) -> DivergenceReport:
    """Collect per-height audit values from each reachable peer and compare."""
    reachable: list[AuditPeer] = []
    unreachable: list[str] = []
    heads: dict[str, int] = {}
    for peer in peers:
        try:
            heads[peer.node_id] = peer.head_height(ledger_name)
            reachable.append(peer)
        except PeerUnreachable:
            unreachable.append(peer.node_id)
    if len(reachable) < 2:
        raise InsufficientNodes(
            f"need at least 2 reachable nodes, have {len(reachable)}"
        )

    lo = 0 if start is None else start
    hi = max(heads.values()) if end is None else end

    per_height: dict[int, list[tuple[str, bytes | None]]] = {
        h: [] for h in range(lo, hi + 1)
    }
    for peer in reachable:
        try:
            rows = peer.fetch_hashes(ledger_name, lo, hi)
        except PeerUnreachable:
            unreachable.append(peer.node_id)
            continue
        for height, digest in rows:
            if lo <= height <= hi:
                per_height[height].append((peer.node_id, digest))

    divergent: list[int] = []
    missing: list[tuple[str, int]] = []
    for height in range(lo, hi + 1):
        rows = per_height[height]
        present = {digest for _, digest in rows if digest is not None}
        if len(present) > 1:
            divergent.append(height)
        for node_id, digest in rows:
            if digest is None:
                missing.append((node_id, height))
    for node_id in unreachable:
        missing.extend((node_id, h) for h in range(lo, hi + 1))

    return DivergenceReport(
        per_height=per_height,
        divergent=divergent,
        missing=sorted(missing),
        unreachable=sorted(set(unreachable)),
    )


@dataclass
class LocalPeer:
    """Audit a replica through its node object (simulation / in-process)."""

    node_id: str
    data_dir: Path
    reachable: bool = True

    def head_height(self, ledger_name: str) -> int:
        if not self.reachable:
            raise PeerUnreachable(self.node_id)
        hashes = _scan_head(Path(self.data_dir) / ledger_name)
        return hashes

    def fetch_hashes(self, ledger_name: str, start: int, end: int):
        if not self.reachable:
            raise PeerUnreachable(self.node_id)
        return collect_stored_hashes(Path(self.data_dir) / ledger_name, start, end)


def _scan_head(ledger_dir: Path) -> int:
    best = -1
    try:
        names = [p.name for p in ledger_dir.iterdir()]
    except OSError:
        return -1
    for name in names:
        if name.startswith("block_") and name.endswith(".bin"):
            try:
                best = max(best, int(name[len("block_") : -len(".bin")]))
            except ValueError:
                continue
    return best
