"""Scenario files: producers, attacks, cluster topology (key-value text).

    [scenario]
    name = demo
    ledger = mhews-blockchain
    seed = 42
    nodes = 3

    [producer temp-01]
    format = jsonlines            ; jsonlines | csv | keyvalue
    parameter = temperature
    rate_hz = 10
    base = 24.0
    amplitude = 3.0
    noise_seed = 101
    messages = 25
    principal = sensor-temp-01
    principal_kind = cert         ; cert | token
    contract = dews-temp-01
    ; malformed_every = 8         ; corrupt every Nth record (parse-drop path)

    [attack mitm-1]
    kind = modify_in_flight       ; modify_in_flight | replay_request |
                                  ; mutate_replica_storage | forge_submitter
    target = temp-01              ; producer id (node id for storage attacks)
    after_messages = 5
    ; at_height = 6               ; storage attacks trigger at a height
    seed = 7

Live-cluster runs (no --sim) add:

    [live]
    gateway_url = http://127.0.0.1:8100
    admin_token = <bootstrap admin bearer token>
    leader_public_key = <64 hex>
    ; node n2 = /path/to/n2/data  (per-node data dirs enable storage
    ;                              attacks and the closing audit)
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path

from .producers import ProducerSpec, ValueModel

ATTACK_MODIFY_IN_FLIGHT = "modify_in_flight"
ATTACK_REPLAY_REQUEST = "replay_request"
ATTACK_MUTATE_REPLICA_STORAGE = "mutate_replica_storage"
ATTACK_FORGE_SUBMITTER = "forge_submitter"
ATTACK_KINDS = (
    ATTACK_MODIFY_IN_FLIGHT,
    ATTACK_REPLAY_REQUEST,
    ATTACK_MUTATE_REPLICA_STORAGE,
    ATTACK_FORGE_SUBMITTER,
)

# request-level attacks are only detectable against signed (cert) requests
REQUEST_LEVEL_ATTACKS = (ATTACK_MODIFY_IN_FLIGHT, ATTACK_REPLAY_REQUEST)

KIND_CERT = "cert"
KIND_TOKEN = "token"


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class AttackSpec:
    attack_id: str
    kind: str
    target: str
    after_messages: int | None = None
    at_height: int | None = None
    mutation: str = "flip-byte"
    seed: int = 0

    def validate(self) -> None:
        if self.kind not in ATTACK_KINDS:
            raise ScenarioError(f"{self.attack_id}: unknown attack kind {self.kind!r}")
        triggers = (self.after_messages is not None) + (self.at_height is not None)
        if triggers != 1:
            raise ScenarioError(
                f"{self.attack_id}: exactly one of after_messages / at_height required"
            )
        if self.kind == ATTACK_MUTATE_REPLICA_STORAGE and self.at_height is None:
            raise ScenarioError(f"{self.attack_id}: storage attacks use at_height")


@dataclass
class LiveTarget:
    gateway_url: str
    admin_token: str
    leader_public_key: bytes
    node_dirs: dict[str, Path] = field(default_factory=dict)


@dataclass
class Scenario:
    name: str
    ledger: str
    seed: int
    nodes: int
    producers: list[ProducerSpec] = field(default_factory=list)
    attacks: list[AttackSpec] = field(default_factory=list)
    principal_kinds: dict[str, str] = field(default_factory=dict)
    live: LiveTarget | None = None

    def validate(self) -> None:
        if self.nodes < 1 or self.nodes % 2 == 0:
            raise ScenarioError("nodes must be a positive odd count (N = 2f + 1)")
        producer_ids = [p.producer_id for p in self.producers]
        if len(set(producer_ids)) != len(producer_ids):
            raise ScenarioError("producer ids must be unique")
        for producer in self.producers:
            producer.validate()
        node_ids = {f"n{i}" for i in range(1, self.nodes + 1)}
        for attack in self.attacks:
            attack.validate()
            if attack.kind == ATTACK_MUTATE_REPLICA_STORAGE:
                if attack.target not in node_ids:
                    raise ScenarioError(
                        f"{attack.attack_id}: target must be one of {sorted(node_ids)}"
                    )
                continue
            if attack.target not in producer_ids:
                raise ScenarioError(
                    f"{attack.attack_id}: target producer {attack.target!r} not declared"
                )
            if attack.kind in REQUEST_LEVEL_ATTACKS:
                kind = self.principal_kinds.get(self._principal_of(attack.target))
                if kind != KIND_CERT:
                    raise ScenarioError(
                        f"{attack.attack_id}: {attack.kind} requires a cert-based "
                        f"producer (bearer requests carry no signature or nonce)"
                    )

    def _principal_of(self, producer_id: str) -> str:
        for producer in self.producers:
            if producer.producer_id == producer_id:
                return producer.principal_id
        raise ScenarioError(f"unknown producer {producer_id!r}")


def _decimal(section, key: str, where: str) -> Decimal:
    try:
        return Decimal(section[key])
    except KeyError:
        raise ScenarioError(f"{where}: missing {key}") from None
    except InvalidOperation:
        raise ScenarioError(f"{where}: bad decimal for {key}") from None


def load_scenario(path: str | Path) -> Scenario:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if not parser.read(path):
        raise ScenarioError(f"cannot read scenario file {path}")
    if "scenario" not in parser:
        raise ScenarioError("missing [scenario] section")
    head = parser["scenario"]
    scenario = Scenario(
        name=head.get("name", Path(path).stem),
        ledger=head.get("ledger", "pipeline-ledger"),
        seed=head.getint("seed", 0),
        nodes=head.getint("nodes", 3),
    )
    for section in parser.sections():
        if section.startswith("producer "):
            producer_id = section[len("producer ") :].strip()
            body = parser[section]
            where = f"producer {producer_id}"
            principal = body.get("principal", f"sensor-{producer_id}")
            try:
                rate = Fraction(body.get("rate_hz", "1"))
            except (ValueError, ZeroDivisionError):
                raise ScenarioError(f"{where}: bad rate_hz") from None
            spec = ProducerSpec(
                producer_id=producer_id,
                format=body.get("format", "csv"),
                parameter=body.get("parameter", "temperature"),
                rate_hz=rate,
                value_model=ValueModel(
                    base=_decimal(body, "base", where),
                    amplitude=_decimal(body, "amplitude", where),
                    noise_seed=body.getint("noise_seed", 0),
                ),
                principal_id=principal,
                contract_id=body.get("contract", f"contract-{producer_id}"),
                messages=body.getint("messages", 10),
                unit=body.get("unit", ""),
                malformed_every=body.getint("malformed_every", 0),
            )
            scenario.producers.append(spec)
            kind = body.get("principal_kind", KIND_CERT)
            if kind not in (KIND_CERT, KIND_TOKEN):
                raise ScenarioError(f"{where}: principal_kind must be cert or token")
            scenario.principal_kinds[principal] = kind
        elif section.startswith("attack "):
            attack_id = section[len("attack ") :].strip()
            body = parser[section]
            scenario.attacks.append(
                AttackSpec(
                    attack_id=attack_id,
                    kind=body.get("kind", ""),
                    target=body.get("target", ""),
                    after_messages=body.getint("after_messages", fallback=None),
                    at_height=body.getint("at_height", fallback=None),
                    mutation=body.get("mutation", "flip-byte"),
                    seed=body.getint("seed", 0),
                )
            )
        elif section == "live":
            body = parser[section]
            try:
                leader_key = bytes.fromhex(body["leader_public_key"])
            except (KeyError, ValueError):
                raise ScenarioError("[live]: leader_public_key (64 hex) required") from None
            live = LiveTarget(
                gateway_url=body.get("gateway_url", "http://127.0.0.1:8100"),
                admin_token=body.get("admin_token", ""),
                leader_public_key=leader_key,
            )
            for key in body:
                if key.startswith("node "):
                    live.node_dirs[key[len("node ") :].strip()] = Path(body[key])
            scenario.live = live
    scenario.validate()
    return scenario
