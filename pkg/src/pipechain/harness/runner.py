"""Scenario orchestration: producers -> gateway -> cluster -> consumer verify.

A run builds the pipeline (in-process simulated cluster under --sim, or a
live gateway), streams every producer's records through normalization and
authenticated submission, applies the scenario's attacks at their
triggers, then verifies the outcome from the consumer side: every
committed transaction re-fetched, its receipt verified offline, contract
state cross-checked against a replay of the committed entries, and the
replicas audited for divergence. The report counts every produced record
into exactly one of committed / rejected / parse-dropped.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from pathlib import Path

from .. import crypto
from ..gateway import auth
from ..gateway.app import create_app
from ..gateway.config import BootstrapPrincipal, GatewayConfig
from ..gateway.service import GatewayService, make_submitter_resolver
from ..receipts import load_receipt, verify_receipt
from ..replication.audit import LocalPeer, audit_consistency
from ..replication.config import NodeConfig, PeerInfo, ROLE_FOLLOWER, ROLE_LEADER
from ..replication.node import Node
from ..replication.transport import SimNetwork
from .formats import ParseError, normalize
from .producers import generate_records
from .scenario import (
    ATTACK_FORGE_SUBMITTER,
    ATTACK_MODIFY_IN_FLIGHT,
    ATTACK_MUTATE_REPLICA_STORAGE,
    ATTACK_REPLAY_REQUEST,
    KIND_CERT,
    Scenario,
)

SITE_GATEWAY_AUTH = "GatewayAuth"
SITE_CONTRACT_GUARD = "ContractGuard"
SITE_RECEIPT_VERIFY = "ReceiptVerify"
SITE_REPLICA_AUDIT = "ReplicaAudit"

INTRUDER_PRINCIPAL = "intruder"

EXIT_OK = 0
EXIT_DETECTION_FAILURE = 1
EXIT_INFRASTRUCTURE = 2


@dataclass
class RunReport:
    produced: int = 0
    committed: int = 0
    parse_drops: int = 0
    rejected: dict[str, int] = field(default_factory=dict)
    attacks_injected: int = 0
    attacks_detected: int = 0
    detections: list[dict] = field(default_factory=list)
    undetected: list[str] = field(default_factory=list)
    receipts_verified: int = 0
    verification_failures: list[str] = field(default_factory=list)
    infrastructure_errors: list[str] = field(default_factory=list)

    @property
    def rejected_total(self) -> int:
        return sum(self.rejected.values())

    @property
    def conserved(self) -> bool:
        return self.produced == self.committed + self.rejected_total + self.parse_drops

    def reject(self, reason: str) -> None:
        self.rejected[reason] = self.rejected.get(reason, 0) + 1

    def summary_dict(self) -> dict:
        return {
            "event": "summary",
            "produced": self.produced,
            "committed": self.committed,
            "rejected": dict(sorted(self.rejected.items())),
            "rejected_total": self.rejected_total,
            "parse_drops": self.parse_drops,
            "attacks_injected": self.attacks_injected,
            "attacks_detected": self.attacks_detected,
            "undetected": list(self.undetected),
            "receipts_verified": self.receipts_verified,
            "verification_failures": list(self.verification_failures),
            "infrastructure_errors": list(self.infrastructure_errors),
            "conserved": self.conserved,
        }


@dataclass
class AttackState:
    spec: object
    applied: bool = False
    detected_site: str | None = None


def derive(seed: int, label: str) -> bytes:
    return crypto.sha256(f"scenario:{seed}:{label}".encode())


class ScenarioRunner:
    def __init__(
        self,
        scenario: Scenario,
        work_dir: Path,
        sim: bool = True,
        seed: int | None = None,
        report_path: Path | None = None,
        echo=print,
    ):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.work_dir = Path(work_dir)
        self.sim = sim
        self.report_path = report_path
        self.echo = echo
        self.report = RunReport()
        self.events: list[dict] = []
        self.rng = random.Random(self.seed ^ 0x5CE11A71)
        self.attacks = [AttackState(spec=a) for a in scenario.attacks]
        self.cert_keys: dict[str, crypto.SigningKey] = {}
        self.tokens: dict[str, str] = {}
        self.request_nonce = 0
        self.submitted: list[dict] = []  # one per accepted submission
        self.net: SimNetwork | None = None
        self.nodes: dict[str, Node] = {}
        self.node_dirs: dict[str, Path] = {}
        self.leader_public_key = b""
        self.admin_token = ""
        self.reader_token = ""
        self.http = None

    # -- events ------------------------------------------------------------

    def event(self, _event_name: str, **fields) -> None:
        self.events.append({"event": _event_name, **fields})

    def now(self) -> float:
        return self.net.now if self.net is not None else time.time()

    # -- credential derivation ----------------------------------------------

    def _provision_credentials(self) -> None:
        self.admin_token = derive(self.seed, "token:admin").hex()
        self.reader_token = derive(self.seed, "token:reader").hex()
        for producer in self.scenario.producers:
            pid = producer.principal_id
            if self.scenario.principal_kinds.get(pid) == KIND_CERT:
                self.cert_keys[pid] = crypto.SigningKey(derive(self.seed, f"cert:{pid}"))
            else:
                self.tokens[pid] = derive(self.seed, f"token:{pid}").hex()
        self.cert_keys[INTRUDER_PRINCIPAL] = crypto.SigningKey(
            derive(self.seed, f"cert:{INTRUDER_PRINCIPAL}")
        )

    def _descriptor_principals(self) -> tuple[list[dict], list[dict]]:
        aad, certs = [], []
        for pid, kind in sorted(self.scenario.principal_kinds.items()):
            if kind == KIND_CERT:
                certs.append(
                    {
                        "principalId": pid,
                        "publicKeyHex": self.cert_keys[pid].public_bytes.hex(),
                        "ledgerRoleName": auth.ROLE_CONTRIBUTOR,
                    }
                )
            else:
                aad.append(
                    {
                        "principalId": pid,
                        "tenantId": "00000000-0000-0000-0000-000000000000",
                        "ledgerRoleName": auth.ROLE_CONTRIBUTOR,
                    }
                )
        certs.append(
            {
                "principalId": INTRUDER_PRINCIPAL,
                "publicKeyHex": self.cert_keys[INTRUDER_PRINCIPAL].public_bytes.hex(),
                "ledgerRoleName": auth.ROLE_CONTRIBUTOR,
            }
        )
        return aad, certs

    # -- cluster / gateway assembly ------------------------------------------

    def _build_sim(self) -> None:
        from fastapi.testclient import TestClient

        n = self.scenario.nodes
        self.net = SimNetwork(seed=self.seed)
        node_seeds = {f"n{i}": derive(self.seed, f"node:{i}") for i in range(1, n + 1)}
        block_seed = derive(self.seed, "leader-block")
        self.leader_public_key = crypto.SigningKey(block_seed).public_bytes
        peers = [
            PeerInfo(
                node_id=node_id,
                address=("127.0.0.1", 7600 + i),
                public_key=crypto.SigningKey(seed).public_bytes,
            )
            for i, (node_id, seed) in enumerate(node_seeds.items(), start=1)
        ]
        master_seed = derive(self.seed, "gateway-master")
        resolver = make_submitter_resolver(master_seed)
        for node_id, seed in node_seeds.items():
            is_leader = node_id == "n1"
            config = NodeConfig(
                node_id=node_id,
                role=ROLE_LEADER if is_leader else ROLE_FOLLOWER,
                listen_address=dict((p.node_id, p.address) for p in peers)[node_id],
                data_dir=self.work_dir / node_id,
                secret_seed=node_seeds[node_id],
                leader_id="n1",
                leader_public_key=self.leader_public_key,
                peers=peers,
                leader_block_seed=block_seed if is_leader else None,
            )
            node = Node(config, clock=self.net.clock_for(), key_resolver=resolver)
            self.net.attach(node)
            self.nodes[node_id] = node
            self.node_dirs[node_id] = config.data_dir

        principals = [
            BootstrapPrincipal(
                principal_id="scenario-admin",
                kind=auth.KIND_TOKEN,
                role=auth.ROLE_ADMINISTRATOR,
                token=self.admin_token,
            ),
            BootstrapPrincipal(
                principal_id="scenario-consumer",
                kind=auth.KIND_TOKEN,
                role=auth.ROLE_READER,
                token=self.reader_token,
            ),
        ]
        # bearer tokens are service-level authentication material; the
        # ledger descriptor only grants these principals their role
        for pid, token in sorted(self.tokens.items()):
            principals.append(
                BootstrapPrincipal(
                    principal_id=pid,
                    kind=auth.KIND_TOKEN,
                    role=None,
                    tenant_id="00000000-0000-0000-0000-000000000000",
                    token=token,
                )
            )
        service = GatewayService(
            self.nodes["n1"],
            GatewayConfig(master_seed=master_seed, principals=principals),
            time_source=lambda: self.net.now,
            id_source=lambda: self.rng.randbytes(16),
        )
        service.dispatch = lambda outgoing: self.net.dispatch("n1", outgoing)
        self.service = service
        self.http = TestClient(create_app(service), raise_server_exceptions=False)

    def _build_live(self) -> None:
        import httpx

        live = self.scenario.live
        if live is None:
            raise RuntimeError("scenario has no [live] section and --sim was not given")
        self.leader_public_key = live.leader_public_key
        self.admin_token = live.admin_token
        self.reader_token = live.admin_token
        self.node_dirs = dict(live.node_dirs)
        self.http = httpx.Client(base_url=live.gateway_url, timeout=10.0)
        self.service = None

    # -- request plumbing ------------------------------------------------------

    def _signed_headers(self, pid: str, method: str, path: str, body: bytes) -> dict:
        self.request_nonce += 1
        signature = auth.sign_request(
            self.cert_keys[pid], method, path, body, self.request_nonce
        )
        return {
            auth.HEADER_PRINCIPAL: pid,
            auth.HEADER_NONCE: str(self.request_nonce),
            auth.HEADER_SIGNATURE: signature,
            "content-type": "application/json",
        }

    def _bearer_headers(self, token: str) -> dict:
        return {"Authorization": f"Bearer {token}", "content-type": "application/json"}

    def _request(self, method: str, path: str, content: bytes, headers: dict):
        try:
            return self.http.request(method, path, content=content, headers=headers)
        except Exception as exc:  # connection-level failure (live mode)
            self.report.infrastructure_errors.append(f"{method} {path}: {exc}")
            return None

    # -- pipeline phases ----------------------------------------------------------

    def settle(self, rounds: int = 200) -> None:
        """Advance time, flush batches, and drain replication until quiet."""
        if self.net is None:
            deadline = time.time() + 30.0
            while time.time() < deadline:
                pending = [
                    tx for tx in self.submitted if tx["state"] == "Pending"
                ]
                for tx in pending:
                    self._refresh_tx(tx)
                if not pending:
                    return
                time.sleep(0.1)
            return
        for _ in range(rounds):
            self.net.advance(0.6)
            self.service.flush_all()
            self.net.run()
            with self.service._lock:
                gateway_idle = not any(
                    runtime.pending for runtime in self.service.ledgers.values()
                )
            leader_idle = all(
                state.pending is None
                for state in self.nodes["n1"].replicas.values()
            )
            if gateway_idle and leader_idle:
                return
        self.report.infrastructure_errors.append("pipeline failed to settle")

    def _refresh_tx(self, tx: dict) -> None:
        response = self._request(
            "GET",
            f"/ledgers/{self.scenario.ledger}/transactions/{tx['transactionId']}",
            b"",
            self._bearer_headers(self.reader_token),
        )
        if response is not None and response.status_code == 200:
            body = response.json()
            tx["state"] = body["state"]
            if body["state"] == "Committed":
                tx["finalId"] = body["transactionId"]

    def _setup_ledger(self) -> bool:
        aad, certs = self._descriptor_principals()
        body = {
            "ledgerName": self.scenario.ledger,
            "ledgerType": "Private",
            "aadBasedSecurityPrincipals": aad,
            "certBasedSecurityPrincipals": certs,
        }
        response = self._request(
            "PUT",
            f"/ledgers/{self.scenario.ledger}",
            json.dumps(body).encode(),
            self._bearer_headers(self.admin_token),
        )
        if response is None or response.status_code not in (200, 201):
            detail = "unreachable" if response is None else response.text
            self.report.infrastructure_errors.append(f"create ledger failed: {detail}")
            return False
        for producer in self.scenario.producers:
            reg = {
                "contractId": producer.contract_id,
                "action": "registerSensor",
                "sensorPrincipalId": producer.principal_id,
            }
            response = self._request(
                "POST",
                f"/ledgers/{self.scenario.ledger}/transactions",
                json.dumps(reg).encode(),
                self._bearer_headers(self.admin_token),
            )
            if response is None or response.status_code != 200:
                detail = "unreachable" if response is None else response.text
                self.report.infrastructure_errors.append(
                    f"register {producer.contract_id} failed: {detail}"
                )
                return False
        self.settle()
        return True

    def _attacks_for(self, kind: str, producer_id: str, submitted_count: int):
        for state in self.attacks:
            spec = state.spec
            if (
                not state.applied
                and spec.kind == kind
                and spec.target == producer_id
                and spec.after_messages is not None
                and submitted_count == spec.after_messages
            ):
                yield state

    def _detect(self, state: AttackState, site: str) -> None:
        state.detected_site = site
        self.report.attacks_detected += 1
        self.report.detections.append(
            {"attack": state.spec.attack_id, "kind": state.spec.kind, "site": site}
        )
        self.event(
            "attack_detected", attack=state.spec.attack_id, kind=state.spec.kind, site=site
        )

    def _inject(self, state: AttackState) -> None:
        state.applied = True
        self.report.attacks_injected += 1
        self.event("attack_injected", attack=state.spec.attack_id, kind=state.spec.kind)

    def _run_producers(self) -> None:
        path = f"/ledgers/{self.scenario.ledger}/transactions"
        streams = {
            producer.producer_id: generate_records(producer, int(self.now()))
            for producer in self.scenario.producers
        }
        specs = {p.producer_id: p for p in self.scenario.producers}
        submitted_count = {p.producer_id: 0 for p in self.scenario.producers}
        longest = max((len(s) for s in streams.values()), default=0)

        for k in range(longest):
            for producer_id, stream in streams.items():
                if k >= len(stream):
                    continue
                record = stream[k]
                spec = specs[producer_id]
                self.report.produced += 1
                self.event("produced", producer=producer_id, sequence=record.sequence)
                try:
                    reading = normalize(record.line, record.format)
                except ParseError as exc:
                    self.report.parse_drops += 1
                    self.event("parse_drop", producer=producer_id, reason=exc.reason)
                    continue
                body = {
                    "contractId": spec.contract_id,
                    "action": "addReading",
                    "parameter": spec.parameter,
                    "valueScaled": reading.value_scaled,
                    "unit": reading.unit,
                    "sourceTimestamp": reading.source_timestamp,
                }
                raw = json.dumps(body).encode()
                count = submitted_count[producer_id]

                forge = next(
                    iter(self._attacks_for(ATTACK_FORGE_SUBMITTER, producer_id, count)), None
                )
                if forge is not None:
                    self._apply_forge(forge, path, body)
                    submitted_count[producer_id] += 1
                    continue

                modify = next(
                    iter(self._attacks_for(ATTACK_MODIFY_IN_FLIGHT, producer_id, count)), None
                )
                if modify is not None:
                    self._apply_modify_in_flight(modify, spec, path, raw)
                    submitted_count[producer_id] += 1
                    continue

                headers = (
                    self._signed_headers(spec.principal_id, "POST", path, raw)
                    if spec.principal_id in self.cert_keys
                    else self._bearer_headers(self.tokens[spec.principal_id])
                )
                response = self._request("POST", path, raw, headers)
                if response is None:
                    self.report.reject("transport-error")
                    continue
                if response.status_code == 200:
                    tx = response.json()
                    self.submitted.append(
                        {
                            "transactionId": tx["transactionId"],
                            "state": "Pending",
                            "body": body,
                            "producer": producer_id,
                            "principal": spec.principal_id,
                        }
                    )
                    self.event("submitted", producer=producer_id, tx=tx["transactionId"])
                else:
                    self.report.reject(f"http-{response.status_code}")
                    self.event(
                        "rejected", producer=producer_id, status=response.status_code,
                        detail=response.text[:120],
                    )
                submitted_count[producer_id] += 1

                replay = next(
                    iter(self._attacks_for(ATTACK_REPLAY_REQUEST, producer_id, count + 1)), None
                )
                if replay is not None and response.status_code == 200:
                    self._apply_replay(replay, path, raw, headers)
            self.settle()

    def _apply_forge(self, state: AttackState, path: str, body: dict) -> None:
        """Submit the target's reading under a non-sensor principal."""
        self._inject(state)
        raw = json.dumps(body).encode()
        headers = self._signed_headers(INTRUDER_PRINCIPAL, "POST", path, raw)
        response = self._request("POST", path, raw, headers)
        self.report.reject("contract-guard")
        if (
            response is not None
            and response.status_code == 422
            and response.json().get("message") == "Only sensor can add temperature readings"
        ):
            self._detect(state, SITE_CONTRACT_GUARD)

    def _apply_modify_in_flight(self, state: AttackState, spec, path: str, raw: bytes) -> None:
        """Flip one body byte after signing (MITM on the transport)."""
        self._inject(state)
        attack_rng = random.Random(state.spec.seed)
        position = attack_rng.randrange(len(raw))
        tampered = raw[:position] + bytes([raw[position] ^ 0x01]) + raw[position + 1 :]
        headers = self._signed_headers(spec.principal_id, "POST", path, raw)
        response = self._request("POST", path, tampered, headers)
        self.report.reject("auth-modified-in-flight")
        if (
            response is not None
            and response.status_code == 401
            and response.json().get("error") == "BadSignature"
        ):
            self._detect(state, SITE_GATEWAY_AUTH)

    def _apply_replay(self, state: AttackState, path: str, raw: bytes, headers: dict) -> None:
        """Re-send a captured signed request byte for byte."""
        self._inject(state)
        response = self._request("POST", path, raw, headers)
        if (
            response is not None
            and response.status_code == 401
            and response.json().get("error") == "ReplayedNonce"
        ):
            self._detect(state, SITE_GATEWAY_AUTH)

    def _apply_storage_attacks(self) -> None:
        for state in self.attacks:
            spec = state.spec
            if spec.kind != ATTACK_MUTATE_REPLICA_STORAGE or state.applied:
                continue
            node_dir = self.node_dirs.get(spec.target)
            if node_dir is None:
                self.report.infrastructure_errors.append(
                    f"{spec.attack_id}: no data dir known for node {spec.target}"
                )
                continue
            block_path = (
                Path(node_dir) / self.scenario.ledger / f"block_{spec.at_height:020d}.bin"
            )
            if not block_path.exists():
                self.report.infrastructure_errors.append(
                    f"{spec.attack_id}: {block_path} does not exist"
                )
                continue
            raw = bytearray(block_path.read_bytes())
            attack_rng = random.Random(spec.seed)
            position = attack_rng.randrange(len(raw))
            raw[position] ^= 1 << attack_rng.randrange(8)
            block_path.write_bytes(bytes(raw))
            self._inject(state)
            self.event(
                "storage_mutated", attack=spec.attack_id, node=spec.target,
                height=spec.at_height, offset=position,
            )

    # -- consumer verification -----------------------------------------------------

    def _verify_consumer_side(self) -> None:
        ledger = self.scenario.ledger
        replayed: dict[str, list[tuple[str, dict]]] = {}
        for tx in self.submitted:
            self._refresh_tx(tx)
            if tx["state"] != "Committed":
                self.report.infrastructure_errors.append(
                    f"transaction {tx['transactionId']} never committed"
                )
                continue
            self.report.committed += 1
            final_id = tx["finalId"]
            response = self._request(
                "GET",
                f"/ledgers/{ledger}/transactions/{final_id}",
                b"",
                self._bearer_headers(self.reader_token),
            )
            if response is None or response.status_code != 200:
                self.report.verification_failures.append(f"fetch {final_id} failed")
                continue
            entry = response.json()["entry"]
            for key, sent in tx["body"].items():
                if entry.get(key) != sent:
                    self.report.verification_failures.append(
                        f"{final_id}: field {key} round-trip mismatch "
                        f"({entry.get(key)!r} != {sent!r})"
                    )
            if entry.get("submitterId") != tx["principal"]:
                self.report.verification_failures.append(
                    f"{final_id}: submitter mismatch"
                )
            receipt_response = self._request(
                "GET",
                f"/ledgers/{ledger}/transactions/{final_id}/receipt",
                b"",
                self._bearer_headers(self.reader_token),
            )
            if receipt_response is None or receipt_response.status_code != 200:
                self.report.verification_failures.append(f"receipt {final_id} missing")
                continue
            try:
                receipt = load_receipt(receipt_response.content)
                verdict = verify_receipt(receipt, self.leader_public_key)
            except Exception as exc:
                verdict = None
                self.report.verification_failures.append(
                    f"receipt {final_id} unparseable: {exc}"
                )
            if verdict is not None and not verdict.accepted:
                self.report.verification_failures.append(
                    f"receipt {final_id} rejected: {verdict.reason}"
                )
                self.event("receipt_rejected", tx=final_id, site=SITE_RECEIPT_VERIFY)
            elif verdict is not None:
                self.report.receipts_verified += 1
            replayed.setdefault(tx["body"]["contractId"], []).append((final_id, tx["body"]))

        # consumer-side replay: committed entries in (height, leaf) order must
        # reproduce exactly what the contract query serves
        for contract_id, rows in replayed.items():
            rows.sort(key=lambda pair: tuple(int(x) for x in pair[0].split(".")))
            response = self._request(
                "GET",
                f"/ledgers/{ledger}/contracts/{contract_id}/readings",
                b"",
                self._bearer_headers(self.reader_token),
            )
            if response is None or response.status_code != 200:
                self.report.verification_failures.append(
                    f"contract query {contract_id} failed"
                )
                continue
            served = response.json()["readings"]
            expected = [
                (body["parameter"], body["valueScaled"], body["unit"], body["sourceTimestamp"])
                for _final, body in rows
            ]
            got = [
                (r["parameter"], r["valueScaled"], r["unit"], r["sourceTimestamp"])
                for r in served
            ]
            if expected != got:
                self.report.verification_failures.append(
                    f"contract {contract_id}: replayed readings disagree with query"
                )

    def _final_audit(self) -> None:
        if len(self.node_dirs) < 2:
            if any(
                s.spec.kind == ATTACK_MUTATE_REPLICA_STORAGE and s.applied
                for s in self.attacks
            ):
                self.report.infrastructure_errors.append(
                    "storage attack injected but fewer than 2 node dirs to audit"
                )
            return
        peers = [
            LocalPeer(node_id=node_id, data_dir=path)
            for node_id, path in sorted(self.node_dirs.items())
        ]
        try:
            report = audit_consistency(peers, self.scenario.ledger)
        except Exception as exc:
            self.report.infrastructure_errors.append(f"audit failed: {exc}")
            return
        self.event(
            "replica_audit", divergent=report.divergent,
            missing=[list(m) for m in report.missing],
        )
        expected: dict[int, AttackState] = {
            s.spec.at_height: s
            for s in self.attacks
            if s.spec.kind == ATTACK_MUTATE_REPLICA_STORAGE and s.applied
        }
        for height in report.divergent:
            state = expected.get(height)
            if state is not None and report.minority_nodes(height) == [state.spec.target]:
                self._detect(state, SITE_REPLICA_AUDIT)
            else:
                self.report.verification_failures.append(
                    f"unexpected divergence at height {height}: "
                    f"{report.minority_nodes(height)}"
                )
    # -- run -------------------------------------------------------------------

    def run(self) -> tuple[RunReport, int]:
        self._provision_credentials()
        if self.sim:
            self._build_sim()
        else:
            self._build_live()
        try:
            if self._setup_ledger():
                self._run_producers()
                self.settle()
                self._apply_storage_attacks()
                self._verify_consumer_side()
                self._final_audit()
        finally:
            if self.http is not None:
                self.http.close()

        for state in self.attacks:
            if state.applied and state.detected_site is None:
                self.report.undetected.append(state.spec.attack_id)
        if not self.report.conserved:
            self.report.verification_failures.append(
                f"conservation violated: produced={self.report.produced} != "
                f"committed={self.report.committed} + rejected={self.report.rejected_total} "
                f"+ parse_drops={self.report.parse_drops}"
            )

        self._write_report()
        self._print_summary()

        if self.report.infrastructure_errors:
            return self.report, EXIT_INFRASTRUCTURE
        if self.report.undetected or self.report.verification_failures:
            return self.report, EXIT_DETECTION_FAILURE
        return self.report, EXIT_OK

    def _write_report(self) -> None:
        if self.report_path is None:
            return
        path = Path(self.report_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for event in self.events:
                fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.write(json.dumps(self.report.summary_dict(), sort_keys=True) + "\n")

    def _print_summary(self) -> None:
        r = self.report
        self.echo(
            f"scenario {self.scenario.name!r}: produced={r.produced} "
            f"committed={r.committed} rejected={r.rejected_total} "
            f"parse_drops={r.parse_drops}"
        )
        self.echo(
            f"attacks: injected={r.attacks_injected} detected={r.attacks_detected} "
            f"undetected={r.undetected or '[]'}"
        )
        for detection in r.detections:
            self.echo(
                f"  detected {detection['attack']} ({detection['kind']}) "
                f"at {detection['site']}"
            )
        self.echo(
            f"receipts verified: {r.receipts_verified}; "
            f"verification failures: {len(r.verification_failures)}; "
            f"infrastructure errors: {len(r.infrastructure_errors)}"
        )
        for failure in r.verification_failures + r.infrastructure_errors:
            self.echo(f"  !! {failure}")


def run_scenario(
    scenario: Scenario,
    work_dir: Path,
    sim: bool = True,
    seed: int | None = None,
    report_path: Path | None = None,
    echo=print,
) -> tuple[RunReport, int]:
    return ScenarioRunner(
        scenario, work_dir, sim=sim, seed=seed, report_path=report_path, echo=echo
    ).run()
