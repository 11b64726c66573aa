"""`pipechain-audit`: offline auditor for ledgers, receipts, and replicas.

Subcommands: verify-chain, verify-receipt, replay, audit. All commands are
read-only. Exit codes: 0 verified clean, 1 verification failed (tamper or
invalid input evidence), 2 operational error (unreadable input, nodes
unreachable). `--format records` emits line-delimited JSON for diffing;
the default prints human-readable text.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import crypto
from .contract import ContractStore
from .entries import parameter_name
from .receipts import verify_receipt_bytes
from .replication.audit import InsufficientNodes, audit_consistency
from .replication.transport import TcpPeer
from .store import LedgerStore, StoreError
from .verify import verify_chain

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_OPERATIONAL = 2

FORMAT_TEXT = "text"
FORMAT_RECORDS = "records"


def _emit(format_name: str, record: dict, text: str) -> None:
    if format_name == FORMAT_RECORDS:
        click.echo(json.dumps(record, sort_keys=True))
    else:
        click.echo(text)


def _load_key(key_path: str) -> bytes:
    try:
        raw = Path(key_path).read_text(encoding="utf-8").strip()
        key = bytes.fromhex(raw)
    except (OSError, ValueError) as exc:
        raise click.ClickException(f"cannot read key file {key_path}: {exc}")
    if len(key) != 32:
        raise click.ClickException(f"key file {key_path} must hold 32 bytes of hex")
    return key


@click.group()
def main() -> None:
    pass


@main.command("verify-chain")
@click.option("--data-dir", required=True, type=click.Path())
@click.option("--key", "key_path", required=True, type=click.Path())
@click.option("--format", "format_name", default=FORMAT_TEXT,
              type=click.Choice([FORMAT_TEXT, FORMAT_RECORDS]))
@click.option("--no-replay", is_flag=True, help="Skip contract replay checks.")
def cmd_verify_chain(data_dir, key_path, format_name, no_replay):
    key = _load_key(key_path)
    data_path = Path(data_dir)
    if not data_path.is_dir() or not (data_path / "manifest").exists():
        _emit(
            format_name,
            {"record": "error", "detail": f"no ledger manifest under {data_dir}"},
            f"error: no ledger manifest under {data_dir}",
        )
        sys.exit(EXIT_OPERATIONAL)
    report = verify_chain(data_path, key, replay=not no_replay)
    for failure in report.failures:
        _emit(
            format_name,
            {
                "record": "failure",
                "height": failure.height,
                "kind": failure.kind.value,
                "detail": failure.detail,
            },
            f"FAIL height {failure.height}: {failure.kind.value} ({failure.detail})",
        )
    _emit(
        format_name,
        {"record": "result", "ok": report.ok, "head_height": report.head_height,
         "failures": len(report.failures)},
        f"chain {'OK' if report.ok else 'CORRUPT'}: head height {report.head_height}, "
        f"{len(report.failures)} failure(s)",
    )
    sys.exit(EXIT_OK if report.ok else EXIT_VERIFICATION_FAILED)


@main.command("verify-receipt")
@click.option("--receipt", "receipt_path", required=True, type=click.Path())
@click.option("--key", "key_path", required=True, type=click.Path())
@click.option("--format", "format_name", default=FORMAT_TEXT,
              type=click.Choice([FORMAT_TEXT, FORMAT_RECORDS]))
def cmd_verify_receipt(receipt_path, key_path, format_name):
    key = _load_key(key_path)
    try:
        data = Path(receipt_path).read_bytes()
    except OSError as exc:
        _emit(
            format_name,
            {"record": "error", "detail": str(exc)},
            f"error: cannot read receipt file: {exc}",
        )
        sys.exit(EXIT_OPERATIONAL)
    verdict = verify_receipt_bytes(data, key)
    _emit(
        format_name,
        {"record": "result", "ok": verdict.accepted, "reason": verdict.reason},
        f"receipt {'ACCEPTED' if verdict.accepted else 'REJECTED'}"
        + (f" ({verdict.reason})" if verdict.reason else ""),
    )
    sys.exit(EXIT_OK if verdict.accepted else EXIT_VERIFICATION_FAILED)


@main.command("replay")
@click.option("--data-dir", required=True, type=click.Path())
@click.option("--key", "key_path", required=True, type=click.Path())
@click.option("--format", "format_name", default=FORMAT_TEXT,
              type=click.Choice([FORMAT_TEXT, FORMAT_RECORDS]))
def cmd_replay(data_dir, key_path, format_name):
    """Replay all blocks through the contract engine and dump final state."""
    key = _load_key(key_path)
    data_path = Path(data_dir)
    if not data_path.is_dir() or not (data_path / "manifest").exists():
        _emit(
            format_name,
            {"record": "error", "detail": f"no ledger manifest under {data_dir}"},
            f"error: no ledger manifest under {data_dir}",
        )
        sys.exit(EXIT_OPERATIONAL)
    report = verify_chain(data_path, key, replay=True)
    for failure in report.failures:
        _emit(
            format_name,
            {"record": "failure", "height": failure.height,
             "kind": failure.kind.value, "detail": failure.detail},
            f"FAIL height {failure.height}: {failure.kind.value} ({failure.detail})",
        )
    if report.ok:
        store = LedgerStore.open(data_path)
        contracts = ContractStore()
        for block in store.iter_blocks():
            contracts.apply_block_entries(block.entries, block.header.timestamp)
        for contract_id in contracts.contract_ids():
            contract = contracts.get(contract_id)
            _emit(
                format_name,
                {"record": "contract", "contractId": contract_id,
                 "sensorPrincipalId": contract.sensor_principal_id,
                 "state": contract.state_name, "readings": len(contract.readings)},
                f"contract {contract_id}: sensor={contract.sensor_principal_id} "
                f"state={contract.state_name} readings={len(contract.readings)}",
            )
            for index, record in enumerate(contract.readings):
                _emit(
                    format_name,
                    {"record": "reading", "contractId": contract_id, "index": index,
                     "parameter": parameter_name(record.parameter),
                     "valueScaled": record.value_scaled, "unit": record.unit,
                     "sourceTimestamp": record.source_timestamp,
                     "ledgerTimestamp": record.ledger_timestamp},
                    f"  [{index}] {parameter_name(record.parameter)} "
                    f"{record.value_scaled} m{record.unit} "
                    f"src={record.source_timestamp} ledger={record.ledger_timestamp}",
                )
    _emit(
        format_name,
        {"record": "result", "ok": report.ok, "head_height": report.head_height},
        f"replay {'OK' if report.ok else 'FAILED'}: every header state digest "
        f"{'matches' if report.ok else 'checked; failures above'}",
    )
    sys.exit(EXIT_OK if report.ok else EXIT_VERIFICATION_FAILED)


@main.command("audit")
@click.option("--nodes", required=True,
              help="Comma-separated node_id=host:port pairs.")
@click.option("--ledger", required=True, help="Ledger name to audit.")
@click.option("--range", "height_range", default=None,
              help="Height range lo:hi (default: 0 through max head).")
@click.option("--format", "format_name", default=FORMAT_TEXT,
              type=click.Choice([FORMAT_TEXT, FORMAT_RECORDS]))
def cmd_audit(nodes, ledger, height_range, format_name):
    peers = []
    try:
        for part in nodes.split(","):
            node_id, _, address = part.strip().partition("=")
            host, _, port = address.rpartition(":")
            peers.append(TcpPeer(node_id, (host, int(port))))
    except ValueError:
        raise click.ClickException("--nodes must be node_id=host:port[,...]")
    start = end = None
    if height_range:
        try:
            lo, _, hi = height_range.partition(":")
            start, end = int(lo), int(hi)
        except ValueError:
            raise click.ClickException("--range must be lo:hi")
    try:
        report = audit_consistency(peers, ledger, start, end)
    except InsufficientNodes as exc:
        _emit(
            format_name,
            {"record": "error", "detail": str(exc)},
            f"error: {exc}",
        )
        sys.exit(EXIT_OPERATIONAL)
    for height in report.divergent:
        minority = report.minority_nodes(height)
        rows = {
            node: (digest.hex() if digest else None)
            for node, digest in report.per_height[height]
        }
        _emit(
            format_name,
            {"record": "divergence", "height": height, "minority": minority,
             "hashes": rows},
            f"DIVERGENT height {height}: minority {minority} ({rows})",
        )
    for node_id, height in report.missing:
        _emit(
            format_name,
            {"record": "missing", "node": node_id, "height": height},
            f"MISSING height {height} on {node_id}",
        )
    _emit(
        format_name,
        {"record": "result", "ok": report.consistent,
         "divergent": report.divergent,
         "unreachable": report.unreachable},
        f"replicas {'CONSISTENT' if report.consistent else 'INCONSISTENT'} "
        f"(divergent: {report.divergent or 'none'})",
    )
    sys.exit(EXIT_OK if report.consistent else EXIT_VERIFICATION_FAILED)


if __name__ == "__main__":
    main()
