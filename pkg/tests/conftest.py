import random

import pytest

from pipechain import crypto
from pipechain.entries import (
    ACTION_ADD_READING,
    ACTION_REGISTER_SENSOR,
    make_reading_payload,
    make_register_payload,
    sign_entry,
)
from pipechain.ledger import Ledger

LEADER_SEED = b"\x21" * 32
ADMIN_SEED = b"\x22" * 32
SENSOR_SEEDS = {
    "sensor-A": b"\x31" * 32,
    "sensor-B": b"\x32" * 32,
    "sensor-C": b"\x33" * 32,
    "sensor-D": b"\x34" * 32,
}


class FixedClock:
    """Injectable clock: starts at a fixed epoch, ticks on demand."""

    def __init__(self, start=1_700_000_000):
        self.now = start

    def __call__(self):
        return self.now

    def tick(self, seconds=1):
        self.now += seconds


def submitter_keys():
    keys = {"admin": crypto.SigningKey(ADMIN_SEED)}
    keys.update({pid: crypto.SigningKey(seed) for pid, seed in SENSOR_SEEDS.items()})
    return keys


class LedgerBuilder:
    """Builds populated test ledgers with deterministic ids and nonces."""

    def __init__(self, path, clock=None, leader_seed=LEADER_SEED):
        self.keys = submitter_keys()
        self.leader_key = crypto.SigningKey(leader_seed)
        self.clock = clock or FixedClock()
        self.rng = random.Random(0xC0FFEE)
        self.nonces = {pid: 0 for pid in self.keys}
        self.ledger = Ledger.create(
            path,
            signing_key=self.leader_key,
            key_resolver=lambda pid: (
                self.keys[pid].public_bytes if pid in self.keys else None
            ),
            clock=self.clock,
        )

    def next_nonce(self, submitter):
        self.nonces[submitter] += 1
        return self.nonces[submitter]

    def register_entry(self, contract_id, sensor, submitter="admin"):
        return sign_entry(
            entry_id=self.rng.randbytes(16),
            contract_id=contract_id,
            action=ACTION_REGISTER_SENSOR,
            payload=make_register_payload(sensor),
            submitter_id=submitter,
            submitter_nonce=self.next_nonce(submitter),
            key=self.keys[submitter],
        )

    def reading_entry(self, contract_id, submitter, parameter=0, value=25310, unit="C"):
        return sign_entry(
            entry_id=self.rng.randbytes(16),
            contract_id=contract_id,
            action=ACTION_ADD_READING,
            payload=make_reading_payload(parameter, value, unit, self.clock.now),
            submitter_id=submitter,
            submitter_nonce=self.next_nonce(submitter),
            key=self.keys[submitter],
        )

    def populate(self, blocks=10, entries_per_block=3):
        """Register one contract per sensor, then append reading blocks."""
        sensors = list(SENSOR_SEEDS)
        registrations = [
            self.register_entry(f"dews-{pid}", pid) for pid in sensors
        ]
        self.ledger.append_block(registrations)
        for b in range(blocks - 1):
            self.clock.tick()
            batch = []
            for i in range(entries_per_block):
                pid = sensors[(b + i) % len(sensors)]
                batch.append(
                    self.reading_entry(f"dews-{pid}", pid, parameter=i % 4, value=1000 * b + i)
                )
            self.ledger.append_block(batch)
        return self.ledger


@pytest.fixture
def builder(tmp_path):
    return LedgerBuilder(tmp_path / "ledger")
