"""Binary Merkle tree over block entries.

Leaves arrive already domain-separated (0x00 applied by hash_entry);
interior nodes are sha256(0x01 || left || right). An odd node at any
level is promoted unpaired to the next level, so no digest is ever
duplicated and every audit path is unambiguous.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .crypto import node_hash

SIDE_LEFT = 0
SIDE_RIGHT = 1


class EmptyLeafSet(ValueError):
    """Merkle root of zero leaves is undefined."""


def _next_level(level: Sequence[bytes]) -> list[bytes]:
    out = []
    for i in range(0, len(level) - 1, 2):
        out.append(node_hash(level[i], level[i + 1]))
    if len(level) % 2:
        out.append(level[-1])
    return out


def merkle_root(leaf_digests: Iterable[bytes]) -> bytes:
    level = list(leaf_digests)
    if not level:
        raise EmptyLeafSet("merkle root requires at least one leaf")
    while len(level) > 1:
        level = _next_level(level)
    return level[0]


def audit_path(leaf_digests: Sequence[bytes], index: int) -> list[tuple[bytes, int]]:
    """Sibling digests with sides, bottom-up, for the leaf at index."""
    if not leaf_digests:
        raise EmptyLeafSet("merkle root requires at least one leaf")
    if not 0 <= index < len(leaf_digests):
        raise IndexError(f"leaf index {index} out of range")
    path: list[tuple[bytes, int]] = []
    level = list(leaf_digests)
    pos = index
    while len(level) > 1:
        if pos == len(level) - 1 and len(level) % 2:
            pass  # promoted unpaired; no sibling at this level
        elif pos % 2 == 0:
            path.append((level[pos + 1], SIDE_RIGHT))
        else:
            path.append((level[pos - 1], SIDE_LEFT))
        pos //= 2
        level = _next_level(level)
    return path


def path_root(entry_hash: bytes, path: Iterable[tuple[bytes, int]]) -> bytes:
    """Recompute the root implied by an audit path."""
    digest = entry_hash
    for sibling, side in path:
        if side == SIDE_LEFT:
            digest = node_hash(sibling, digest)
        elif side == SIDE_RIGHT:
            digest = node_hash(digest, sibling)
        else:
            raise ValueError(f"invalid path side: {side}")
    return digest
