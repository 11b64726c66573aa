"""The shared receipt corpus is the cross-implementation conformance anchor."""

from pathlib import Path

from pipechain.receipts import verify_receipt_bytes

CORPUS_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "receipts"


def load_verdicts() -> dict[str, str]:
    out = {}
    for line in (CORPUS_DIR / "verdicts.txt").read_text().splitlines():
        name, verdict = line.split()
        out[name] = verdict
    return out


def test_corpus_is_present_and_large_enough():
    verdicts = load_verdicts()
    assert len(verdicts) >= 100
    assert sum(1 for v in verdicts.values() if v == "accept") >= 40
    assert sum(1 for v in verdicts.values() if v == "reject") >= 40
    for name in verdicts:
        assert (CORPUS_DIR / name).exists(), name


def test_library_verdicts_match_the_frozen_corpus():
    leader_key = bytes.fromhex((CORPUS_DIR / "leader_key.hex").read_text().strip())
    disagreements = []
    for name, expected in load_verdicts().items():
        data = (CORPUS_DIR / name).read_bytes()
        verdict = verify_receipt_bytes(data, leader_key)
        got = "accept" if verdict.accepted else "reject"
        if got != expected:
            disagreements.append((name, expected, got))
    assert not disagreements, disagreements


def test_wrong_key_rejects_all_valid_fixtures():
    for name, expected in load_verdicts().items():
        if expected != "accept":
            continue
        data = (CORPUS_DIR / name).read_bytes()
        assert not verify_receipt_bytes(data, b"\x42" * 32).accepted, name
