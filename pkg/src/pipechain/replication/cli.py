"""`pipechain-node`: run one replication node (or a whole simulated cluster)."""

from __future__ import annotations

import time

import click

from .config import load_node_config, sibling_config
from .node import Node
from .transport import SimNetwork, TcpTransport


@click.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option(
    "--sim",
    is_flag=True,
    help="Run every peer in the config file in-process over the simulated "
    "transport (requires secret_seed on each peer).",
)
@click.option("--seed", default=0, show_default=True, help="Simulator seed.")
def main(config_path: str, sim: bool, seed: int) -> None:
    config = load_node_config(config_path)
    if sim:
        net = SimNetwork(seed=seed)
        nodes = []
        for peer in config.peers:
            sib = sibling_config(config, peer.node_id, config.data_dir.parent)
            node = Node(sib, clock=net.clock_for())
            net.attach(node)
            nodes.append(node)
        for node in nodes:
            net.dispatch(node.node_id, node.bootstrap())
        net.run()
        click.echo(f"simulated cluster of {len(nodes)} nodes idle; ledgers:")
        for node in nodes:
            for name in node.ledger_names():
                state = node.replica(name)
                click.echo(
                    f"  {node.node_id} {name} head={state.ledger.head_height} "
                    f"committed={state.committed_height}"
                )
        return

    node = Node(config, clock=lambda: int(time.time()))
    transport = TcpTransport(node)
    transport.start()
    transport.deliver(node.bootstrap())
    host, port = transport.address
    click.echo(f"node {node.node_id} ({config.role}) listening on {host}:{port}")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        transport.stop()


if __name__ == "__main__":
    main()
