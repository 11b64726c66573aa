import json

import pytest

from pipechain import crypto
from pipechain.blocks import BlockHeader
from pipechain.crypto import node_hash
from pipechain.entries import hash_entry
from pipechain.merkle import SIDE_LEFT, SIDE_RIGHT
from pipechain.receipts import (
    IndexOutOfRange,
    Receipt,
    decode_receipt,
    encode_receipt,
    load_receipt,
    make_receipt,
    receipt_from_json_dict,
    receipt_to_json_dict,
    verify_receipt,
    verify_receipt_bytes,
)
from pipechain.store import NotFound

from conftest import LedgerBuilder


def independent_root(entry_hash, path):
    """Oracle: fold the path by hand, separate from merkle.path_root."""
    import hashlib

    digest = entry_hash
    for sibling, side in path:
        pair = (sibling + digest) if side == SIDE_LEFT else (digest + sibling)
        digest = hashlib.sha256(b"\x01" + pair).digest()
    return digest


@pytest.fixture
def populated(tmp_path):
    builder = LedgerBuilder(tmp_path / "ledger")
    builder.populate(blocks=8, entries_per_block=5)
    return builder


def test_single_entry_block_has_empty_path(tmp_path):
    builder = LedgerBuilder(tmp_path / "ledger")
    builder.ledger.append_block([builder.register_entry("c1", "sensor-A")])
    receipt = make_receipt(builder.ledger.store, 1, 0)
    assert receipt.audit_path == ()
    assert receipt.entry_hash == receipt.header.merkle_root


def test_two_entry_block_path_is_right_sibling(tmp_path):
    builder = LedgerBuilder(tmp_path / "ledger")
    entries = [
        builder.register_entry("c1", "sensor-A"),
        builder.register_entry("c2", "sensor-B"),
    ]
    builder.ledger.append_block(entries)
    receipt = make_receipt(builder.ledger.store, 1, 0)
    assert receipt.audit_path == ((hash_entry(entries[1]), SIDE_RIGHT),)
    assert receipt.header.merkle_root == node_hash(
        hash_entry(entries[0]), hash_entry(entries[1])
    )


def test_receipt_bounds(populated):
    with pytest.raises(IndexOutOfRange):
        make_receipt(populated.ledger.store, 1, 99)
    with pytest.raises(NotFound):
        make_receipt(populated.ledger.store, 999, 0)


def test_every_receipt_in_ledger_verifies(populated):
    """Exhaustive sweep, with the root independently recomputed per receipt."""
    store = populated.ledger.store
    leader_pub = populated.leader_key.public_bytes
    checked = 0
    for h in range(store.head_height + 1):
        block = store.read_block(h)
        for i in range(block.header.entry_count):
            receipt = make_receipt(store, h, i)
            assert verify_receipt(receipt, leader_pub).accepted
            assert (
                independent_root(receipt.entry_hash, receipt.audit_path)
                == receipt.header.merkle_root
            )
            checked += 1
    assert checked == sum(
        store.read_block(h).header.entry_count for h in range(store.head_height + 1)
    )


def test_wrong_entry_hash_rejected(populated):
    receipt = make_receipt(populated.ledger.store, 2, 1)
    bad = Receipt(
        entry_hash=bytes(32),
        leaf_index=receipt.leaf_index,
        audit_path=receipt.audit_path,
        header=receipt.header,
    )
    verdict = verify_receipt(bad, populated.leader_key.public_bytes)
    assert not verdict.accepted
    assert verdict.reason == "PathMismatch"


def test_resigned_header_rejected(populated):
    from pipechain.blocks import sign_header

    receipt = make_receipt(populated.ledger.store, 2, 1)
    imposter = crypto.SigningKey(b"\x99" * 32)
    h = receipt.header
    forged = sign_header(
        h.height, h.prev_hash, h.merkle_root, h.timestamp, h.entry_count, h.state_digest,
        key=imposter,
    )
    bad = Receipt(receipt.entry_hash, receipt.leaf_index, receipt.audit_path, forged)
    verdict = verify_receipt(bad, populated.leader_key.public_bytes)
    assert not verdict.accepted
    assert verdict.reason == "BadSignature"


def test_verify_is_pure_and_offline(populated):
    receipt = make_receipt(populated.ledger.store, 1, 0)
    encoded = encode_receipt(receipt)
    # destroying the ledger directory must not affect verification
    import shutil

    shutil.rmtree(populated.ledger.store.path)
    assert verify_receipt_bytes(encoded, populated.leader_key.public_bytes).accepted


def test_binary_round_trip(populated):
    receipt = make_receipt(populated.ledger.store, 3, 2)
    assert decode_receipt(encode_receipt(receipt)) == receipt


def test_json_round_trip(populated):
    receipt = make_receipt(populated.ledger.store, 3, 2)
    wire = json.dumps(receipt_to_json_dict(receipt)).encode()
    assert load_receipt(wire) == receipt
    assert receipt_from_json_dict(receipt_to_json_dict(receipt)) == receipt


def test_malformed_bytes_reject_not_raise(populated):
    leader_pub = populated.leader_key.public_bytes
    receipt = make_receipt(populated.ledger.store, 1, 0)
    encoded = encode_receipt(receipt)
    for data in (b"", b"\x00", encoded[:-1], b"{not json", b"{}", b"\xff" * 300):
        verdict = verify_receipt_bytes(data, leader_pub)
        assert not verdict.accepted

    # arbitrary Receipt objects with wrong-size fields reject too
    junk = Receipt(b"short", 0, ((b"x", 5),), receipt.header)
    assert not verify_receipt(junk, leader_pub).accepted


def test_every_single_field_mutation_rejected(populated):
    store = populated.ledger.store
    leader_pub = populated.leader_key.public_bytes
    receipt = make_receipt(store, 4, 3)
    assert verify_receipt(receipt, leader_pub).accepted

    def flip(b: bytes) -> bytes:
        return bytes([b[0] ^ 0x01]) + b[1:]

    h = receipt.header
    mutated_headers = [
        BlockHeader(h.height + 1, h.prev_hash, h.merkle_root, h.timestamp, h.entry_count, h.state_digest, h.leader_signature),
        BlockHeader(h.height, flip(h.prev_hash), h.merkle_root, h.timestamp, h.entry_count, h.state_digest, h.leader_signature),
        BlockHeader(h.height, h.prev_hash, flip(h.merkle_root), h.timestamp, h.entry_count, h.state_digest, h.leader_signature),
        BlockHeader(h.height, h.prev_hash, h.merkle_root, h.timestamp + 1, h.entry_count, h.state_digest, h.leader_signature),
        BlockHeader(h.height, h.prev_hash, h.merkle_root, h.timestamp, h.entry_count + 1, h.state_digest, h.leader_signature),
        BlockHeader(h.height, h.prev_hash, h.merkle_root, h.timestamp, h.entry_count, flip(h.state_digest), h.leader_signature),
        BlockHeader(h.height, h.prev_hash, h.merkle_root, h.timestamp, h.entry_count, h.state_digest, flip(h.leader_signature)),
    ]
    for header in mutated_headers:
        bad = Receipt(receipt.entry_hash, receipt.leaf_index, receipt.audit_path, header)
        assert not verify_receipt(bad, leader_pub).accepted

    bad = Receipt(flip(receipt.entry_hash), receipt.leaf_index, receipt.audit_path, h)
    assert not verify_receipt(bad, leader_pub).accepted

    for i in range(len(receipt.audit_path)):
        path = list(receipt.audit_path)
        sibling, side = path[i]
        path[i] = (flip(sibling), side)
        bad = Receipt(receipt.entry_hash, receipt.leaf_index, tuple(path), h)
        assert not verify_receipt(bad, leader_pub).accepted
        path[i] = (sibling, 1 - side)
        bad = Receipt(receipt.entry_hash, receipt.leaf_index, tuple(path), h)
        assert not verify_receipt(bad, leader_pub).accepted
