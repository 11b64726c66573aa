"""`pipechain-gateway`: run the REST service embedding the leader node.

One config file carries both the [service]/[principal ...] sections and
the [node]/[peer ...] sections; followers run separately via
`pipechain-node`. TLS is optional (--tls-cert/--tls-key).
"""

from __future__ import annotations

import os
import time

import click
import uvicorn

from ..replication.config import load_node_config
from ..replication.node import Node
from ..replication.transport import TcpTransport
from .app import create_app
from .config import load_gateway_config
from .service import GatewayService, make_submitter_resolver


def build_runtime(config_path: str, data_dir_override: str | None = None):
    gateway_config = load_gateway_config(config_path)
    node_config = load_node_config(config_path)
    if data_dir_override:
        node_config.data_dir = type(node_config.data_dir)(data_dir_override)
    node = Node(
        node_config,
        clock=lambda: int(time.time()),
        key_resolver=make_submitter_resolver(gateway_config.master_seed),
    )
    service = GatewayService(node, gateway_config)
    transport = TcpTransport(node)
    service.dispatch = transport.deliver
    return service, node, transport


@click.command()
@click.option(
    "--config",
    "config_path",
    default=lambda: os.environ.get("PIPECHAIN_CONFIG"),
    required=True,
    type=click.Path(exists=True),
)
@click.option("--data-dir", default=lambda: os.environ.get("PIPECHAIN_DATA_DIR"))
@click.option("--tls-cert", default=None, type=click.Path(exists=True))
@click.option("--tls-key", default=None, type=click.Path(exists=True))
def main(config_path: str, data_dir: str | None, tls_cert: str | None, tls_key: str | None):
    service, node, transport = build_runtime(config_path, data_dir)
    transport.start()
    transport.deliver(node.bootstrap())

    app = create_app(service)

    import threading

    def flusher():
        while True:
            time.sleep(0.05)
            service.flush_all()

    threading.Thread(target=flusher, daemon=True).start()

    uvicorn.run(
        app,
        host=service.config.host,
        port=service.config.port,
        ssl_certfile=tls_cert,
        ssl_keyfile=tls_key,
        log_level="warning",
    )


if __name__ == "__main__":
    main()
