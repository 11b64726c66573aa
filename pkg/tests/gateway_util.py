"""Shared helper: in-process gateway (single-node or simulated cluster)."""

from __future__ import annotations

import itertools
import json
import random
from pathlib import Path

from fastapi.testclient import TestClient

from pipechain import crypto
from pipechain.gateway import auth
from pipechain.gateway.app import create_app
from pipechain.gateway.config import BootstrapPrincipal, GatewayConfig
from pipechain.gateway.service import GatewayService, make_submitter_resolver
from pipechain.replication.config import NodeConfig, PeerInfo, ROLE_LEADER
from pipechain.replication.node import Node
from pipechain.replication.transport import SimNetwork

MASTER_SEED = b"\x73" * 32
ADMIN_TOKEN = "test-admin-token"
READER_TOKEN = "test-reader-token"


def single_node_config(data_dir: Path) -> NodeConfig:
    seed = b"\x51" * 32
    block_seed = b"\x52" * 32
    peer = PeerInfo(
        node_id="g1",
        address=("127.0.0.1", 7999),
        public_key=crypto.SigningKey(seed).public_bytes,
        secret_seed=seed,
    )
    return NodeConfig(
        node_id="g1",
        role=ROLE_LEADER,
        listen_address=("127.0.0.1", 7999),
        data_dir=data_dir,
        secret_seed=seed,
        leader_id="g1",
        leader_public_key=crypto.SigningKey(block_seed).public_bytes,
        peers=[peer],
        leader_block_seed=block_seed,
    )


class GatewayHarness:
    """Gateway + leader node + TestClient, with signing helpers."""

    def __init__(self, data_dir: Path, extra_principals=(), clock_start=1_700_000_000.0):
        self.sim_now = clock_start
        self.cert_keys: dict[str, crypto.SigningKey] = {}
        self.request_nonces = itertools.count(1)
        self.rng = random.Random(0x5EED)

        principals = [
            BootstrapPrincipal(
                principal_id="boot-admin",
                kind=auth.KIND_TOKEN,
                role=auth.ROLE_ADMINISTRATOR,
                tenant_id="00000000-0000-0000-0000-000000000000",
                token=ADMIN_TOKEN,
            ),
            BootstrapPrincipal(
                principal_id="boot-reader",
                kind=auth.KIND_TOKEN,
                role=auth.ROLE_READER,
                token=READER_TOKEN,
            ),
            *extra_principals,
        ]
        config = GatewayConfig(master_seed=MASTER_SEED, principals=principals)
        self.node = Node(
            single_node_config(data_dir),
            clock=lambda: int(self.sim_now),
            key_resolver=make_submitter_resolver(MASTER_SEED),
        )
        self.service = GatewayService(
            self.node,
            config,
            time_source=lambda: self.sim_now,
            id_source=lambda: self.rng.randbytes(16),
        )
        self.client = TestClient(create_app(self.service), raise_server_exceptions=False)

    def tick(self, seconds: float = 1.0) -> None:
        self.sim_now += seconds

    def make_cert_key(self, principal_id: str) -> crypto.SigningKey:
        key = crypto.SigningKey(crypto.sha256(b"certkey:" + principal_id.encode()))
        self.cert_keys[principal_id] = key
        return key

    # -- request helpers (token) ----------------------------------------

    def request(self, method: str, path: str, token: str = ADMIN_TOKEN, body: dict | None = None):
        raw = b"" if body is None else json.dumps(body).encode()
        return self.client.request(
            method,
            path,
            content=raw,
            headers={
                "Authorization": f"Bearer {token}",
                "content-type": "application/json",
            },
        )

    # -- request helpers (cert) ------------------------------------------

    def signed_request(
        self,
        method: str,
        path: str,
        principal_id: str,
        body: dict | None = None,
        *,
        raw: bytes | None = None,
        nonce: int | None = None,
        tamper_body: bytes | None = None,
    ):
        if raw is None:
            raw = b"" if body is None else json.dumps(body).encode()
        if nonce is None:
            nonce = next(self.request_nonces)
        signature = auth.sign_request(
            self.cert_keys[principal_id], method, path, raw, nonce
        )
        sent = raw if tamper_body is None else tamper_body
        return self.client.request(
            method,
            path,
            content=sent,
            headers={
                auth.HEADER_PRINCIPAL: principal_id,
                auth.HEADER_NONCE: str(nonce),
                auth.HEADER_SIGNATURE: signature,
                "content-type": "application/json",
            },
        )

    # -- common flows ------------------------------------------------------

    def create_ledger(self, name="mhews-blockchain", aad=(), certs=()):
        body = {
            "ledgerName": name,
            "ledgerType": "Private",
            "aadBasedSecurityPrincipals": list(aad),
            "certBasedSecurityPrincipals": list(certs),
        }
        response = self.request("PUT", f"/ledgers/{name}", body=body)
        assert response.status_code == 201, response.text
        return response.json()

    def flush(self):
        self.tick()
        self.service.flush_all(force_window=True)

    def post_reading(self, ledger, contract_id, principal_id, value_scaled=25310,
                     parameter="temperature", unit="C", token=None):
        body = {
            "contractId": contract_id,
            "action": "addReading",
            "parameter": parameter,
            "valueScaled": value_scaled,
            "unit": unit,
            "sourceTimestamp": int(self.sim_now),
        }
        if token is not None:
            return self.request("POST", f"/ledgers/{ledger}/transactions", token=token, body=body)
        return self.signed_request(
            "POST", f"/ledgers/{ledger}/transactions", principal_id, body
        )
