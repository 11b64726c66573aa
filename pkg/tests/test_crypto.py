import hashlib

from pipechain import crypto


def test_domain_separated_hashes_differ():
    payload = b"same payload"
    digests = {
        crypto.leaf_hash(payload),
        crypto.node_hash(payload[:16].ljust(32, b"\x00"), payload[:16].ljust(32, b"\x00")),
        crypto.header_digest(payload),
        crypto.state_hash(payload),
    }
    assert len(digests) == 4


def test_leaf_hash_matches_plain_sha256_with_prefix():
    data = b"entry bytes"
    assert crypto.leaf_hash(data) == hashlib.sha256(b"\x00" + data).digest()


def test_rfc8032_test_vector_1():
    # RFC 8032 §7.1 TEST 1: empty message.
    seed = bytes.fromhex(
        "9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60"
    )
    expected_pub = bytes.fromhex(
        "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a"
    )
    expected_sig = bytes.fromhex(
        "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e06522490155"
        "5fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b"
    )
    key = crypto.SigningKey(seed)
    assert key.public_bytes == expected_pub
    assert key.sign(b"") == expected_sig
    assert crypto.verify_signature(expected_pub, expected_sig, b"")


def test_verify_signature_never_raises():
    key = crypto.SigningKey(b"\x01" * 32)
    sig = key.sign(b"msg")
    assert crypto.verify_signature(key.public_bytes, sig, b"msg")
    assert not crypto.verify_signature(key.public_bytes, sig, b"other")
    assert not crypto.verify_signature(b"\x00" * 32, sig, b"msg")
    assert not crypto.verify_signature(key.public_bytes, b"short", b"msg")
    assert not crypto.verify_signature(b"", b"", b"")


def test_signing_is_deterministic():
    key = crypto.SigningKey(b"\x07" * 32)
    assert key.sign(b"abc") == key.sign(b"abc")


def test_derive_seed_is_stable_and_label_sensitive():
    master = b"\x42" * 32
    a = crypto.derive_seed(master, "sensor-1")
    b = crypto.derive_seed(master, "sensor-2")
    assert a == crypto.derive_seed(master, "sensor-1")
    assert a != b
    assert len(a) == 32
