"""Append-only block persistence: one directory per ledger.

Layout: block_<height, 20-digit zero-padded>.bin files plus a `manifest`
text file recording head height and head hash. Blocks are never rewritten
or deleted; the manifest is replaced atomically on append.
"""

from __future__ import annotations

import os
import re
import threading
from pathlib import Path

from .blocks import Block, decode_block, encode_block, header_hash
from .encoding import EncodingError

MANIFEST_NAME = "manifest"
MANIFEST_MAGIC = "pipechain-manifest-v1"


class StoreError(Exception):
    pass


class NotFound(StoreError):
    def __init__(self, height: int):
        super().__init__(f"no block at height {height}")
        self.height = height


class StorageCorrupt(StoreError):
    def __init__(self, detail: str, height: int | None = None):
        super().__init__(detail)
        self.height = height
        self.detail = detail


class StorageFull(StoreError):
    pass


def block_filename(height: int) -> str:
    return f"block_{height:020d}.bin"


class LedgerStore:
    """Single-writer, many-reader block directory."""

    def __init__(self, path: Path, head_height: int, head_hash: bytes):
        self.path = Path(path)
        self._head_height = head_height
        self._head_hash = head_hash
        self._write_lock = threading.Lock()

    # -- lifecycle -----------------------------------------------------

    @classmethod
    def create(cls, path: str | os.PathLike, genesis: Block) -> "LedgerStore":
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        if (path / MANIFEST_NAME).exists():
            raise StoreError(f"ledger already exists at {path}")
        if genesis.header.height != 0:
            raise StoreError("genesis block must have height 0")
        store = cls(path, head_height=0, head_hash=header_hash(genesis.header))
        store._write_block_file(genesis)
        store._write_manifest()
        return store

    @classmethod
    def open(cls, path: str | os.PathLike) -> "LedgerStore":
        path = Path(path)
        manifest = path / MANIFEST_NAME
        if not manifest.exists():
            raise StoreError(f"no ledger manifest at {path}")
        head_height, head_hash = cls._read_manifest(manifest)
        return cls(path, head_height=head_height, head_hash=head_hash)

    # -- manifest ------------------------------------------------------

    @staticmethod
    def _read_manifest(manifest_path: Path) -> tuple[int, bytes]:
        """Strict byte-level parse: any single-byte change must be visible."""
        try:
            raw = manifest_path.read_bytes()
        except OSError as exc:
            raise StorageCorrupt(f"unreadable manifest: {exc}") from exc
        lines = raw.split(b"\n")
        if len(lines) != 4 or lines[3] != b"" or lines[0] != MANIFEST_MAGIC.encode():
            raise StorageCorrupt("malformed manifest")
        height_match = re.fullmatch(rb"head_height=(\d+)", lines[1])
        hash_match = re.fullmatch(rb"head_hash=([0-9a-f]{64})", lines[2])
        if not height_match or not hash_match:
            raise StorageCorrupt("malformed manifest")
        return int(height_match.group(1)), bytes.fromhex(hash_match.group(1).decode())

    def _write_manifest(self) -> None:
        text = (
            f"{MANIFEST_MAGIC}\n"
            f"head_height={self._head_height}\n"
            f"head_hash={self._head_hash.hex()}\n"
        )
        tmp = self.path / (MANIFEST_NAME + ".tmp")
        try:
            tmp.write_text(text, encoding="utf-8")
            os.replace(tmp, self.path / MANIFEST_NAME)
        except OSError as exc:
            raise StorageFull(f"manifest write failed: {exc}") from exc

    # -- reads ---------------------------------------------------------

    @property
    def head_height(self) -> int:
        return self._head_height

    @property
    def head_hash(self) -> bytes:
        return self._head_hash

    def block_path(self, height: int) -> Path:
        return self.path / block_filename(height)

    def read_raw(self, height: int) -> bytes:
        if height < 0 or height > self._head_height:
            raise NotFound(height)
        path = self.block_path(height)
        try:
            return path.read_bytes()
        except FileNotFoundError:
            raise StorageCorrupt(f"missing block file {path.name}", height) from None
        except OSError as exc:
            raise StorageCorrupt(f"unreadable block file {path.name}: {exc}", height) from exc

    def read_block(self, height: int) -> Block:
        """Strictly decoded block, with stored-byte integrity checks.

        Any single-byte corruption of the stored file surfaces here: the
        structure must decode canonically, the Merkle root must recompute
        from the stored entries, and the header bytes must hash to what
        the successor block (or, for the head, the manifest) recorded.
        """
        raw = self.read_raw(height)
        try:
            block = decode_block(raw)
        except EncodingError as exc:
            raise StorageCorrupt(f"block {height} fails decoding: {exc}", height) from exc
        if block.header.height != height:
            raise StorageCorrupt(
                f"block file {height} carries header height {block.header.height}", height
            )
        if height == 0:
            if block.header.merkle_root != b"\x00" * 32 or block.entries:
                raise StorageCorrupt("genesis block must be empty", height)
        else:
            from .entries import hash_entry
            from .merkle import merkle_root

            if not block.entries:
                raise StorageCorrupt(f"block {height} has no entries", height)
            if merkle_root([hash_entry(e) for e in block.entries]) != block.header.merkle_root:
                raise StorageCorrupt(
                    f"block {height} entries do not recompute the stored merkle root", height
                )
        expected_hash = self._expected_header_hash(height)
        if expected_hash is not None and header_hash(block.header) != expected_hash:
            raise StorageCorrupt(
                f"block {height} header bytes fail the stored hash check", height
            )
        return block

    def _expected_header_hash(self, height: int) -> bytes | None:
        """Header hash recorded by the successor block, or by the manifest."""
        if height == self._head_height:
            return self._head_hash
        successor = self.block_path(height + 1)
        try:
            with successor.open("rb") as fh:
                prefix = fh.read(6 + 8)  # magic, version, height
                prev_hash = fh.read(32)
        except OSError:
            return None  # successor trouble is reported when reading it
        if len(prefix) != 14 or len(prev_hash) != 32:
            return None
        return prev_hash

    def iter_blocks(self):
        for height in range(self._head_height + 1):
            yield self.read_block(height)

    # -- append --------------------------------------------------------

    def append(self, block: Block) -> None:
        """Persist a block already validated to extend the head."""
        with self._write_lock:
            if block.header.height != self._head_height + 1:
                raise StoreError(
                    f"append height {block.header.height}, head is {self._head_height}"
                )
            if block.header.prev_hash != self._head_hash:
                raise StoreError("append block does not chain from head")
            self._write_block_file(block)
            self._head_height = block.header.height
            self._head_hash = header_hash(block.header)
            self._write_manifest()

    def _write_block_file(self, block: Block) -> None:
        path = self.block_path(block.header.height)
        if path.exists():
            raise StoreError(f"refusing to overwrite {path.name}")
        try:
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(encode_block(block))
            os.replace(tmp, path)
        except OSError as exc:
            raise StorageFull(f"block write failed: {exc}") from exc
