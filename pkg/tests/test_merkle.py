import hashlib

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pipechain.crypto import node_hash
from pipechain.merkle import (
    SIDE_LEFT,
    SIDE_RIGHT,
    EmptyLeafSet,
    audit_path,
    merkle_root,
    path_root,
)

D = [bytes([i]) * 32 for i in range(1, 17)]

# root of [0x11*32, 0x22*32, 0x33*32] under the promote-odd-node rule,
# frozen from an independent hashlib computation.
GOLDEN_THREE_LEAF_ROOT = "adc505e99f1e9887777a6aa5d140106fcc012a2e4430875f3c2e135124145842"


def brute_force_root(leaves):
    """Independent recomputation straight from the promotion rule."""
    level = list(leaves)
    while len(level) > 1:
        nxt = []
        while len(level) >= 2:
            left, right = level.pop(0), level.pop(0)
            nxt.append(hashlib.sha256(b"\x01" + left + right).digest())
        if level:
            nxt.append(level.pop())
        level = nxt
    return level[0]


def test_single_leaf_is_root():
    assert merkle_root([D[0]]) == D[0]


def test_two_leaves():
    assert merkle_root([D[0], D[1]]) == node_hash(D[0], D[1])


def test_three_leaves_golden():
    d0, d1, d2 = bytes([0x11]) * 32, bytes([0x22]) * 32, bytes([0x33]) * 32
    assert merkle_root([d0, d1, d2]).hex() == GOLDEN_THREE_LEAF_ROOT
    assert merkle_root([d0, d1, d2]) == node_hash(node_hash(d0, d1), d2)


def test_empty_leaf_set_rejected():
    with pytest.raises(EmptyLeafSet):
        merkle_root([])
    with pytest.raises(EmptyLeafSet):
        audit_path([], 0)


def test_audit_path_single_leaf_is_empty():
    assert audit_path([D[0]], 0) == []


def test_audit_path_two_leaves_sibling_sides():
    assert audit_path([D[0], D[1]], 0) == [(D[1], SIDE_RIGHT)]
    assert audit_path([D[0], D[1]], 1) == [(D[0], SIDE_LEFT)]


def test_promoted_leaf_has_shorter_path():
    # leaf 4 of 5 is promoted twice and pairs only at the top level
    path = audit_path(D[:5], 4)
    assert len(path) == 1
    assert path[0][1] == SIDE_LEFT
    assert path_root(D[4], path) == merkle_root(D[:5])


@given(st.integers(min_value=1, max_value=16), st.randoms(use_true_random=False))
def test_every_path_recomputes_the_root(n, rng):
    leaves = D[:n]
    root = merkle_root(leaves)
    assert root == brute_force_root(leaves)
    for i in range(n):
        assert path_root(leaves[i], audit_path(leaves, i)) == root


@given(
    st.lists(st.binary(min_size=32, max_size=32), min_size=1, max_size=24, unique=True)
)
def test_root_matches_brute_force_on_random_leaves(leaves):
    assert merkle_root(leaves) == brute_force_root(leaves)


@given(
    st.lists(st.binary(min_size=32, max_size=32), min_size=2, max_size=24, unique=True),
    st.data(),
)
def test_wrong_leaf_fails_path_verification(leaves, data):
    i = data.draw(st.integers(min_value=0, max_value=len(leaves) - 1))
    path = audit_path(leaves, i)
    root = merkle_root(leaves)
    wrong = bytes(32) if leaves[i] != bytes(32) else bytes([1]) * 32
    assert path_root(leaves[i], path) == root
    assert path_root(wrong, path) != root
