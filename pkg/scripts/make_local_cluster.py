#!/usr/bin/env python3
"""Generate config files for a local 3-node TCP cluster plus gateway.

Writes, under the output directory: gateway.ini (leader node + REST
service, run with `pipechain-gateway --config gateway.ini`), n2.ini and
n3.ini (followers, run with `pipechain-node --config nX.ini`), and
leader_key.hex (block-signing public key for `pipechain-audit`). Keys and
tokens are freshly random unless --seed pins them.

Usage: python scripts/make_local_cluster.py [--out DIR] [--base-port 7401]
       [--gateway-port 8100] [--seed N]
"""

from __future__ import annotations

import argparse
import secrets
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from pipechain import crypto


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", type=Path, default=Path("local-cluster"))
    parser.add_argument("--base-port", type=int, default=7401)
    parser.add_argument("--gateway-port", type=int, default=8100)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    rand = random.Random(args.seed) if args.seed is not None else None

    def fresh() -> bytes:
        return rand.randbytes(32) if rand else secrets.token_bytes(32)

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    node_ids = ["n1", "n2", "n3"]
    seeds = {node_id: fresh() for node_id in node_ids}
    block_seed = fresh()
    master_seed = fresh()
    admin_token = fresh().hex()
    leader_pub = crypto.SigningKey(block_seed).public_bytes

    def peer_sections() -> str:
        rows = []
        for i, node_id in enumerate(node_ids):
            rows.append(
                f"[peer {node_id}]\n"
                f"address = 127.0.0.1:{args.base_port + i}\n"
                f"public_key = {crypto.SigningKey(seeds[node_id]).public_bytes.hex()}\n"
            )
        return "\n".join(rows)

    def node_ini(node_id: str, index: int, leader: bool) -> str:
        text = (
            "[node]\n"
            f"node_id = {node_id}\n"
            f"role = {'leader' if leader else 'follower'}\n"
            f"listen = 127.0.0.1:{args.base_port + index}\n"
            f"data_dir = {out.resolve() / 'data' / node_id}\n"
            f"secret_seed = {seeds[node_id].hex()}\n"
            "leader_id = n1\n"
            f"leader_public_key = {leader_pub.hex()}\n"
        )
        if leader:
            text += f"leader_block_seed = {block_seed.hex()}\n"
        return text + "\n" + peer_sections()

    gateway_ini = (
        "[service]\n"
        "host = 127.0.0.1\n"
        f"port = {args.gateway_port}\n"
        f"master_seed = {master_seed.hex()}\n"
        "\n"
        "[principal local-admin]\n"
        "kind = token\n"
        f"token = {admin_token}\n"
        "role = Administrator\n"
        "tenant_id = 00000000-0000-0000-0000-000000000000\n"
        "\n" + node_ini("n1", 0, leader=True) + "\n"
    )
    (out / "gateway.ini").write_text(gateway_ini)
    for index, node_id in enumerate(node_ids[1:], start=1):
        (out / f"{node_id}.ini").write_text(node_ini(node_id, index, leader=False) + "\n")
    (out / "leader_key.hex").write_text(leader_pub.hex() + "\n")

    print(f"wrote configs to {out}/")
    print(f"  admin bearer token: {admin_token}")
    print("start the cluster:")
    print(f"  pipechain-node --config {out}/n2.ini &")
    print(f"  pipechain-node --config {out}/n3.ini &")
    print(f"  pipechain-gateway --config {out}/gateway.ini")
    print("then audit it:")
    print(
        f"  pipechain-audit audit --ledger <name> --nodes "
        f"n1=127.0.0.1:{args.base_port},n2=127.0.0.1:{args.base_port + 1},"
        f"n3=127.0.0.1:{args.base_port + 2}"
    )


if __name__ == "__main__":
    main()
