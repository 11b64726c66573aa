#!/usr/bin/env python3
"""Generate the shared receipt fixture corpus under fixtures/receipts/.

Builds a deterministic ledger, then writes binary receipts: valid ones
straight from make_receipt, invalid ones with exactly one mutation each
(entry hash, path node, path side, every header field, signature,
truncation, bad version). verdicts.txt lists `<filename> accept|reject`
per fixture; leader_key.hex holds the verifying key. Any client-side
verifier must reproduce these verdicts exactly.

Usage: python scripts/generate_receipt_fixtures.py [output_dir]
"""

from __future__ import annotations

import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from pipechain import crypto
from pipechain.blocks import BlockHeader
from pipechain.entries import (
    ACTION_ADD_READING,
    ACTION_REGISTER_SENSOR,
    make_reading_payload,
    make_register_payload,
    sign_entry,
)
from pipechain.ledger import Ledger
from pipechain.receipts import Receipt, encode_receipt, make_receipt, verify_receipt_bytes

LEADER_SEED = bytes.fromhex(
    "6c656164657220666978747572652073656564206c6561646572206669782e2e"
)
SENSOR_SEED = crypto.sha256(b"fixture sensor key")
ADMIN_SEED = crypto.sha256(b"fixture admin key")
RNG_SEED = 0xF1C5


def build_ledger(path: Path) -> Ledger:
    keys = {
        "admin": crypto.SigningKey(ADMIN_SEED),
        "sensor-A": crypto.SigningKey(SENSOR_SEED),
    }
    clock_state = {"now": 1_700_000_000}

    def clock() -> int:
        clock_state["now"] += 1
        return clock_state["now"]

    ledger = Ledger.create(
        path,
        signing_key=crypto.SigningKey(LEADER_SEED),
        key_resolver=lambda pid: keys[pid].public_bytes if pid in keys else None,
        clock=clock,
    )
    rng = random.Random(RNG_SEED)
    nonce = 0

    def entry(contract_id, action, payload, submitter):
        nonlocal nonce
        nonce += 1
        return sign_entry(
            entry_id=rng.randbytes(16),
            contract_id=contract_id,
            action=action,
            payload=payload,
            submitter_id=submitter,
            submitter_nonce=nonce,
            key=keys[submitter],
        )

    ledger.append_block(
        [entry("dews-temp-01", ACTION_REGISTER_SENSOR, make_register_payload("sensor-A"), "admin")]
    )
    for height in range(2, 13):
        batch = [
            entry(
                "dews-temp-01",
                ACTION_ADD_READING,
                make_reading_payload(i % 4, rng.randrange(-50_000, 50_000), "C", 1_700_000_000 + height),
                "sensor-A",
            )
            for i in range((height * 5) % 7 + 1)
        ]
        ledger.append_block(batch)
    return ledger


def flip(b: bytes) -> bytes:
    return bytes([b[0] ^ 0x01]) + b[1:]


def mutations(receipt: Receipt):
    """One Receipt (or raw-bytes) variant per mutation class; all must reject."""
    h = receipt.header
    yield "entry-hash", Receipt(flip(receipt.entry_hash), receipt.leaf_index, receipt.audit_path, h)
    if receipt.audit_path:
        path = list(receipt.audit_path)
        sibling, side = path[0]
        path[0] = (flip(sibling), side)
        yield "path-node", Receipt(receipt.entry_hash, receipt.leaf_index, tuple(path), h)
        path[0] = (sibling, 1 - side)
        yield "path-side", Receipt(receipt.entry_hash, receipt.leaf_index, tuple(path), h)
    for label, header in (
        ("height", BlockHeader(h.height + 1, h.prev_hash, h.merkle_root, h.timestamp, h.entry_count, h.state_digest, h.leader_signature)),
        ("prev-hash", BlockHeader(h.height, flip(h.prev_hash), h.merkle_root, h.timestamp, h.entry_count, h.state_digest, h.leader_signature)),
        ("merkle-root", BlockHeader(h.height, h.prev_hash, flip(h.merkle_root), h.timestamp, h.entry_count, h.state_digest, h.leader_signature)),
        ("timestamp", BlockHeader(h.height, h.prev_hash, h.merkle_root, h.timestamp + 1, h.entry_count, h.state_digest, h.leader_signature)),
        ("entry-count", BlockHeader(h.height, h.prev_hash, h.merkle_root, h.timestamp, h.entry_count + 1, h.state_digest, h.leader_signature)),
        ("state-digest", BlockHeader(h.height, h.prev_hash, h.merkle_root, h.timestamp, h.entry_count, flip(h.state_digest), h.leader_signature)),
        ("signature", BlockHeader(h.height, h.prev_hash, h.merkle_root, h.timestamp, h.entry_count, h.state_digest, flip(h.leader_signature))),
    ):
        yield label, Receipt(receipt.entry_hash, receipt.leaf_index, receipt.audit_path, header)


def main() -> None:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parent.parent / "fixtures" / "receipts"
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    for stale in out_dir.glob("*.bin"):
        stale.unlink()

    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        ledger = build_ledger(Path(tmp) / "ledger")
        leader_pub = crypto.SigningKey(LEADER_SEED).public_bytes

        verdicts: list[tuple[str, str]] = []

        def emit(name: str, data: bytes) -> None:
            verdict = verify_receipt_bytes(data, leader_pub)
            (out_dir / name).write_bytes(data)
            verdicts.append((name, "accept" if verdict.accepted else "reject"))

        index = 0
        store = ledger.store
        for height in range(1, store.head_height + 1):
            block = store.read_block(height)
            for leaf in range(block.header.entry_count):
                receipt = make_receipt(store, height, leaf)
                emit(f"valid_{index:03d}.bin", encode_receipt(receipt))
                index += 1

        mutated_index = 0
        for height in range(1, store.head_height + 1):
            block = store.read_block(height)
            for leaf in range(block.header.entry_count):
                receipt = make_receipt(store, height, leaf)
                for label, variant in mutations(receipt):
                    if mutated_index >= 54:
                        break
                    emit(f"mutated_{mutated_index:03d}_{label}.bin", encode_receipt(variant))
                    mutated_index += 1

        # structurally broken inputs: truncated, bad version, empty, junk
        base = encode_receipt(make_receipt(store, 3, 0))
        emit("broken_000_truncated.bin", base[: len(base) // 2])
        emit("broken_001_bad_version.bin", b"\x07" + base[1:])
        emit("broken_002_empty.bin", b"")
        emit("broken_003_junk.bin", bytes(range(256)))
        emit("broken_004_trailing.bin", base + b"\x00")

        (out_dir / "verdicts.txt").write_text(
            "".join(f"{name} {verdict}\n" for name, verdict in sorted(verdicts))
        )
        (out_dir / "leader_key.hex").write_text(leader_pub.hex() + "\n")

    accept = sum(1 for _, v in verdicts if v == "accept")
    reject = len(verdicts) - accept
    print(f"wrote {len(verdicts)} fixtures to {out_dir} ({accept} accept, {reject} reject)")
    if accept == 0 or reject == 0 or len(verdicts) < 100:
        print("fixture corpus does not meet the corpus contract", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
