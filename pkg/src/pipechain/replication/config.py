"""Node configuration: dataclass plus the documented key-value file format.

Example node file (INI syntax via configparser):

    [node]
    node_id = n1
    role = leader
    listen = 127.0.0.1:7101
    data_dir = ./data/n1
    secret_seed = <64 hex chars>            ; message-signing key seed
    leader_id = n1
    leader_public_key = <64 hex chars>      ; block-signing public key
    leader_block_seed = <64 hex chars>      ; leader only

    [peer n1]
    address = 127.0.0.1:7101
    public_key = <64 hex chars>
    ; secret_seed = <64 hex>   (optional; lets `pipechain-node --sim` run
    ;                           every peer of this file in one process)

    [peer n2]
    ...
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

ROLE_LEADER = "leader"
ROLE_FOLLOWER = "follower"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PeerInfo:
    node_id: str
    address: tuple[str, int]
    public_key: bytes
    secret_seed: bytes | None = None


@dataclass
class NodeConfig:
    node_id: str
    role: str
    listen_address: tuple[str, int]
    data_dir: Path
    secret_seed: bytes
    leader_id: str
    leader_public_key: bytes
    peers: list[PeerInfo] = field(default_factory=list)
    leader_block_seed: bytes | None = None

    def validate(self) -> None:
        if self.role not in (ROLE_LEADER, ROLE_FOLLOWER):
            raise ConfigError(f"role must be leader or follower, got {self.role!r}")
        ids = [p.node_id for p in self.peers]
        if len(ids) != len(set(ids)):
            raise ConfigError("peer node_ids must be unique")
        if self.node_id not in ids:
            raise ConfigError("peer set must include this node")
        if self.leader_id not in ids:
            raise ConfigError("peer set must include the leader")
        if (self.role == ROLE_LEADER) != (self.node_id == self.leader_id):
            raise ConfigError("role and leader_id disagree")
        if self.role == ROLE_LEADER and self.leader_block_seed is None:
            raise ConfigError("leader requires leader_block_seed")
        if len(self.peers) % 2 == 0:
            raise ConfigError("peer count must be odd (N = 2f + 1)")

    def peer(self, node_id: str) -> PeerInfo:
        for p in self.peers:
            if p.node_id == node_id:
                return p
        raise ConfigError(f"unknown peer: {node_id}")


def _parse_address(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host:
        raise ConfigError(f"address must be host:port, got {text!r}")
    try:
        return host, int(port)
    except ValueError:
        raise ConfigError(f"bad port in address {text!r}") from None


def _hex_bytes(text: str, size: int, what: str) -> bytes:
    try:
        raw = bytes.fromhex(text.strip())
    except ValueError:
        raise ConfigError(f"{what} must be hex") from None
    if len(raw) != size:
        raise ConfigError(f"{what} must be {size} bytes, got {len(raw)}")
    return raw


def load_node_config(path: str | Path) -> NodeConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    if "node" not in parser:
        raise ConfigError("missing [node] section")
    node = parser["node"]
    try:
        config = NodeConfig(
            node_id=node["node_id"],
            role=node["role"],
            listen_address=_parse_address(node["listen"]),
            data_dir=Path(node["data_dir"]),
            secret_seed=_hex_bytes(node["secret_seed"], 32, "secret_seed"),
            leader_id=node["leader_id"],
            leader_public_key=_hex_bytes(
                node["leader_public_key"], 32, "leader_public_key"
            ),
            leader_block_seed=(
                _hex_bytes(node["leader_block_seed"], 32, "leader_block_seed")
                if "leader_block_seed" in node
                else None
            ),
        )
    except KeyError as exc:
        raise ConfigError(f"missing [node] key: {exc}") from None
    for section in parser.sections():
        if not section.startswith("peer "):
            continue
        peer_id = section[len("peer ") :].strip()
        body = parser[section]
        try:
            config.peers.append(
                PeerInfo(
                    node_id=peer_id,
                    address=_parse_address(body["address"]),
                    public_key=_hex_bytes(body["public_key"], 32, "peer public_key"),
                    secret_seed=(
                        _hex_bytes(body["secret_seed"], 32, "peer secret_seed")
                        if "secret_seed" in body
                        else None
                    ),
                )
            )
        except KeyError as exc:
            raise ConfigError(f"missing key in [peer {peer_id}]: {exc}") from None
    config.validate()
    return config


def sibling_config(config: NodeConfig, node_id: str, data_root: Path) -> NodeConfig:
    """Derive another peer's config from a file carrying all secret seeds."""
    peer = config.peer(node_id)
    if peer.secret_seed is None:
        raise ConfigError(f"peer {node_id} has no secret_seed in this file")
    sibling = NodeConfig(
        node_id=node_id,
        role=ROLE_LEADER if node_id == config.leader_id else ROLE_FOLLOWER,
        listen_address=peer.address,
        data_dir=Path(data_root) / node_id,
        secret_seed=peer.secret_seed,
        leader_id=config.leader_id,
        leader_public_key=config.leader_public_key,
        peers=list(config.peers),
        leader_block_seed=config.leader_block_seed if node_id == config.leader_id else None,
    )
    sibling.validate()
    return sibling
