#!/usr/bin/env python3
"""Serve a single-node gateway pre-seeded for client SDK integration tests.

Creates one ledger with a registered sensor contract, then serves the
REST API over HTTP. Connection details and credentials land in
<out>/testbed.json so a test harness in any language can drive the
gateway and verify receipts offline.

Usage: python scripts/serve_sdk_testbed.py --port 8123 --out /tmp/testbed
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
import threading
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import uvicorn

from pipechain import crypto
from pipechain.gateway import auth
from pipechain.gateway.app import create_app
from pipechain.gateway.auth import Principal
from pipechain.gateway.config import BootstrapPrincipal, GatewayConfig
from pipechain.gateway.service import GatewayService, make_submitter_resolver
from pipechain.replication.config import NodeConfig, PeerInfo, ROLE_LEADER
from pipechain.replication.node import Node

LEDGER = "sdk-testbed"
CONTRACT = "dews-temp-01"
SENSOR = "sensor-A"
OUTSIDER = "sensor-B"


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--port", type=int, default=8123)
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--data", type=Path, default=None)
    args = parser.parse_args()

    data_dir = args.data or Path(tempfile.mkdtemp(prefix="pipechain-testbed-"))
    node_seed = crypto.sha256(b"testbed node seed")
    block_seed = crypto.sha256(b"testbed leader block seed")
    master_seed = crypto.sha256(b"testbed master seed")
    sensor_key = crypto.SigningKey(crypto.sha256(b"testbed sensor-A request key"))
    outsider_key = crypto.SigningKey(crypto.sha256(b"testbed sensor-B request key"))
    admin_token = "testbed-admin-token"
    reader_token = "testbed-reader-token"

    config = NodeConfig(
        node_id="g1",
        role=ROLE_LEADER,
        listen_address=("127.0.0.1", args.port + 1000),
        data_dir=data_dir,
        secret_seed=node_seed,
        leader_id="g1",
        leader_public_key=crypto.SigningKey(block_seed).public_bytes,
        peers=[
            PeerInfo(
                node_id="g1",
                address=("127.0.0.1", args.port + 1000),
                public_key=crypto.SigningKey(node_seed).public_bytes,
            )
        ],
        leader_block_seed=block_seed,
    )
    node = Node(
        config,
        clock=lambda: int(time.time()),
        key_resolver=make_submitter_resolver(master_seed),
    )
    service = GatewayService(
        node,
        GatewayConfig(
            master_seed=master_seed,
            host="127.0.0.1",
            port=args.port,
            principals=[
                BootstrapPrincipal(
                    principal_id="testbed-admin",
                    kind=auth.KIND_TOKEN,
                    role=auth.ROLE_ADMINISTRATOR,
                    token=admin_token,
                ),
                BootstrapPrincipal(
                    principal_id="testbed-reader",
                    kind=auth.KIND_TOKEN,
                    role=auth.ROLE_READER,
                    token=reader_token,
                ),
            ],
        ),
    )

    service.create_ledger(
        LEDGER,
        {
            "ledgerType": "Private",
            "certBasedSecurityPrincipals": [
                {
                    "principalId": SENSOR,
                    "publicKeyHex": sensor_key.public_bytes.hex(),
                    "ledgerRoleName": auth.ROLE_CONTRIBUTOR,
                },
                {
                    "principalId": OUTSIDER,
                    "publicKeyHex": outsider_key.public_bytes.hex(),
                    "ledgerRoleName": auth.ROLE_CONTRIBUTOR,
                },
            ],
        },
    )
    admin = Principal(
        principal_id="testbed-admin",
        kind=auth.KIND_TOKEN,
        credential=auth.token_digest(admin_token),
        role=auth.ROLE_ADMINISTRATOR,
    )
    service.post_transaction(
        LEDGER,
        admin,
        {"contractId": CONTRACT, "action": "registerSensor", "sensorPrincipalId": SENSOR},
    )
    service.flush_all(force_window=True)

    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "testbed.json").write_text(
        json.dumps(
            {
                "baseUri": f"http://127.0.0.1:{args.port}",
                "ledger": LEDGER,
                "contractId": CONTRACT,
                "adminToken": admin_token,
                "readerToken": reader_token,
                "sensorPrincipalId": SENSOR,
                "sensorSeedHex": sensor_key.seed.hex(),
                "outsiderPrincipalId": OUTSIDER,
                "outsiderSeedHex": outsider_key.seed.hex(),
                "leaderPublicKeyHex": crypto.SigningKey(block_seed).public_bytes.hex(),
            },
            indent=2,
        )
    )

    def flusher():
        while True:
            time.sleep(0.05)
            service.flush_all()

    threading.Thread(target=flusher, daemon=True).start()
    uvicorn.run(create_app(service), host="127.0.0.1", port=args.port, log_level="error")


if __name__ == "__main__":
    main()
