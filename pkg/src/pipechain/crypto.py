"""Hash and signature primitives.

SHA-256 with one-byte domain separation keeps leaf, interior-node, header,
and state preimages disjoint. Signing is Ed25519 (deterministic, 32-byte
public keys, 64-byte signatures); each key role in the system signs exactly
one preimage shape, so no cross-domain confusion is possible.
"""

from __future__ import annotations

import hashlib

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

DIGEST_SIZE = 32
SIGNATURE_SIZE = 64
PUBLIC_KEY_SIZE = 32
SEED_SIZE = 32

DOMAIN_LEAF = b"\x00"
DOMAIN_NODE = b"\x01"
DOMAIN_HEADER = b"\x02"
DOMAIN_STATE = b"\x03"

ZERO_DIGEST = b"\x00" * DIGEST_SIZE


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def leaf_hash(data: bytes) -> bytes:
    return sha256(DOMAIN_LEAF + data)


def node_hash(left: bytes, right: bytes) -> bytes:
    return sha256(DOMAIN_NODE + left + right)


def header_digest(header_bytes: bytes) -> bytes:
    return sha256(DOMAIN_HEADER + header_bytes)


def state_hash(encoded_state: bytes) -> bytes:
    return sha256(DOMAIN_STATE + encoded_state)


class SigningKey:
    """Ed25519 private key wrapper; the 32-byte seed is the portable form."""

    def __init__(self, seed: bytes):
        if len(seed) != SEED_SIZE:
            raise ValueError(f"Ed25519 seed must be {SEED_SIZE} bytes")
        self._seed = bytes(seed)
        self._key = Ed25519PrivateKey.from_private_bytes(self._seed)
        self._public = self._key.public_key().public_bytes_raw()

    @classmethod
    def from_hex(cls, seed_hex: str) -> "SigningKey":
        return cls(bytes.fromhex(seed_hex))

    @property
    def seed(self) -> bytes:
        return self._seed

    @property
    def public_bytes(self) -> bytes:
        return self._public

    def sign(self, message: bytes) -> bytes:
        return self._key.sign(message)


# parsed public keys recur constantly (leader, peers, submitters); cache them
_PUBLIC_KEY_CACHE: dict[bytes, Ed25519PublicKey] = {}
_PUBLIC_KEY_CACHE_MAX = 4096


def verify_signature(public_key: bytes, signature: bytes, message: bytes) -> bool:
    """True iff signature is a valid Ed25519 signature; never raises."""
    if len(public_key) != PUBLIC_KEY_SIZE or len(signature) != SIGNATURE_SIZE:
        return False
    key_bytes = bytes(public_key)
    parsed = _PUBLIC_KEY_CACHE.get(key_bytes)
    if parsed is None:
        try:
            parsed = Ed25519PublicKey.from_public_bytes(key_bytes)
        except ValueError:
            return False
        if len(_PUBLIC_KEY_CACHE) >= _PUBLIC_KEY_CACHE_MAX:
            _PUBLIC_KEY_CACHE.clear()
        _PUBLIC_KEY_CACHE[key_bytes] = parsed
    try:
        parsed.verify(bytes(signature), message)
        return True
    except InvalidSignature:
        return False


def derive_seed(master_seed: bytes, label: str) -> bytes:
    """Deterministic per-label child seed (service-side submitter keys)."""
    return sha256(master_seed + label.encode("utf-8"))
