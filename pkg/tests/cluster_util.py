"""Shared helper: build simulated clusters for replication tests."""

from __future__ import annotations

import random
from pathlib import Path

from pipechain import crypto
from pipechain.entries import (
    ACTION_ADD_READING,
    ACTION_REGISTER_SENSOR,
    make_reading_payload,
    make_register_payload,
    sign_entry,
)
from pipechain.replication.config import NodeConfig, PeerInfo, ROLE_FOLLOWER, ROLE_LEADER
from pipechain.replication.node import Node
from pipechain.replication.transport import SimNetwork

LEADER_BLOCK_SEED = b"\x41" * 32


def make_configs(base_dir: Path, n: int = 3) -> list[NodeConfig]:
    seeds = {f"n{i}": bytes([0x50 + i]) * 32 for i in range(1, n + 1)}
    peers = [
        PeerInfo(
            node_id=node_id,
            address=("127.0.0.1", 7400 + i),
            public_key=crypto.SigningKey(seed).public_bytes,
            secret_seed=seed,
        )
        for i, (node_id, seed) in enumerate(seeds.items(), start=1)
    ]
    leader_pub = crypto.SigningKey(LEADER_BLOCK_SEED).public_bytes
    configs = []
    for node_id, seed in seeds.items():
        is_leader = node_id == "n1"
        configs.append(
            NodeConfig(
                node_id=node_id,
                role=ROLE_LEADER if is_leader else ROLE_FOLLOWER,
                listen_address=dict((p.node_id, p.address) for p in peers)[node_id],
                data_dir=base_dir / node_id,
                secret_seed=seed,
                leader_id="n1",
                leader_public_key=leader_pub,
                peers=peers,
                leader_block_seed=LEADER_BLOCK_SEED if is_leader else None,
            )
        )
    return configs


class SimCluster:
    """N nodes over one seeded SimNetwork, plus entry-generation helpers."""

    def __init__(self, base_dir: Path, n: int = 3, seed: int = 0, loss: float = 0.0):
        self.base_dir = Path(base_dir)
        self.configs = {c.node_id: c for c in make_configs(self.base_dir, n)}
        self.net = SimNetwork(seed=seed, loss=loss)
        self.keys = {
            "admin": crypto.SigningKey(b"\x61" * 32),
            "sensor-A": crypto.SigningKey(b"\x62" * 32),
            "sensor-B": crypto.SigningKey(b"\x63" * 32),
        }
        self.nonces = {pid: 0 for pid in self.keys}
        self.rng = random.Random(seed ^ 0xABCD)
        self.nodes: dict[str, Node] = {}
        for node_id, config in self.configs.items():
            self._spawn(node_id, config)

    def _spawn(self, node_id: str, config: NodeConfig) -> Node:
        node = Node(
            config,
            clock=self.net.clock_for(),
            key_resolver=lambda pid: (
                self.keys[pid].public_bytes if pid in self.keys else None
            ),
        )
        self.net.attach(node)
        self.nodes[node_id] = node
        return node

    @property
    def leader(self) -> Node:
        return self.nodes["n1"]

    def restart(self, node_id: str) -> Node:
        """Simulate a process restart: fresh Node over the same data dir."""
        node = self._spawn(node_id, self.configs[node_id])
        self.net.revive(node_id)
        self.net.dispatch(node_id, node.bootstrap())
        return node

    def pump(self, max_seconds: float | None = None) -> None:
        self.net.run(max_seconds=max_seconds)

    # -- entries ---------------------------------------------------------

    def next_nonce(self, pid: str) -> int:
        self.nonces[pid] += 1
        return self.nonces[pid]

    def register_entry(self, contract_id: str, sensor: str):
        return sign_entry(
            entry_id=self.rng.randbytes(16),
            contract_id=contract_id,
            action=ACTION_REGISTER_SENSOR,
            payload=make_register_payload(sensor),
            submitter_id="admin",
            submitter_nonce=self.next_nonce("admin"),
            key=self.keys["admin"],
        )

    def reading_entry(self, contract_id: str, sensor: str, value: int = 100):
        return sign_entry(
            entry_id=self.rng.randbytes(16),
            contract_id=contract_id,
            action=ACTION_ADD_READING,
            payload=make_reading_payload(0, value, "C", int(self.net.now)),
            submitter_id=sensor,
            submitter_nonce=self.next_nonce(sensor),
            key=self.keys[sensor],
        )

    def create_ledger(self, name: str = "main") -> None:
        self.net.dispatch("n1", self.leader.create_ledger(name))
        self.pump()

    def submit(self, name: str, entries, pump: bool = True):
        block, out = self.leader.submit_block(name, entries)
        self.net.dispatch("n1", out)
        if pump:
            self.pump()
        return block
