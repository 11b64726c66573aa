"""Gateway service: the authenticated front door to the leader node.

Owns the ledger registry (descriptors + per-ledger principal lists), the
transaction registry (provisional ids resolved to <height>.<leaf_index>
at commit), and the batcher that forms blocks from accepted entries
(64 entries or 500 ms, whichever first). Entries are contract-checked
against a speculative store at submission, so committed blocks always
replay cleanly.

The service signs ledger entries on behalf of authenticated principals
with per-principal keys derived from a master seed; this stands in for
the enclave-terminated writes of the deployment the design mirrors.
Request-level authenticity is separate (detached signatures / tokens).
"""

from __future__ import annotations

import re
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable, Optional

from .. import crypto, entries
from ..blocks import Block
from ..contract import ContractError, ContractStore, IndexOutOfRange, UnknownContract
from ..ledger import AppendError
from ..receipts import make_receipt, receipt_to_json_dict
from ..replication.node import GapInChain, LedgerExists, Node, NotLeader, UnknownLedger
from . import auth
from .auth import ApiError, Principal
from .config import GatewayConfig

LEDGER_NAME_RE = re.compile(r"^[a-z0-9-]{3,32}$")

BATCH_MAX_ENTRIES = 64
BATCH_WINDOW_SECONDS = 0.5

LEDGER_TYPES = ("Private", "Public")


def derived_submitter_key(master_seed: bytes, principal_id: str) -> crypto.SigningKey:
    return crypto.SigningKey(crypto.derive_seed(master_seed, principal_id))


def make_submitter_resolver(master_seed: bytes) -> Callable[[str], bytes]:
    def resolve(principal_id: str) -> bytes:
        return derived_submitter_key(master_seed, principal_id).public_bytes

    return resolve


@dataclass
class TxRecord:
    provisional_id: str
    state: str  # Pending | Committed | Rejected
    entry: entries.LedgerEntry
    final_id: Optional[str] = None
    height: Optional[int] = None
    leaf_index: Optional[int] = None
    reason: Optional[str] = None


@dataclass
class LedgerRuntime:
    name: str
    ledger_type: str
    aad_principals: list[dict] = field(default_factory=list)
    cert_principals: list[dict] = field(default_factory=list)
    tx_by_id: dict[str, TxRecord] = field(default_factory=dict)
    tx_by_entry_id: dict[bytes, TxRecord] = field(default_factory=dict)
    pending: list[entries.LedgerEntry] = field(default_factory=list)
    first_pending_at: Optional[float] = None
    speculative: ContractStore = field(default_factory=ContractStore)
    tx_counter: int = 0
    entry_nonces: dict[str, int] = field(default_factory=dict)


class GatewayService:
    def __init__(
        self,
        node: Node,
        config: GatewayConfig,
        time_source: Callable[[], float] = time.time,
        id_source: Callable[[], bytes] = lambda: uuid.uuid4().bytes,
    ):
        self.node = node
        self.config = config
        self.time_source = time_source
        self.id_source = id_source
        self.base_uri = f"http://{config.host}:{config.port}"
        self.master_seed = config.master_seed
        self.dispatch: Callable[[list], None] = lambda _outgoing: None
        self.ledgers: dict[str, LedgerRuntime] = {}
        self.request_nonces: dict[str, int] = {}
        self._key_cache: dict[str, crypto.SigningKey] = {}
        # one reentrant lock shared with the node: commit callbacks run
        # under the node lock and flushes call into the node, so separate
        # locks would deadlock between server and flusher threads
        self._lock = node._lock
        self._bootstrap = {p.principal_id: p for p in config.principals}
        self._tokens = {
            auth.token_digest(p.token): p
            for p in config.principals
            if p.kind == auth.KIND_TOKEN and p.token
        }
        node.on_commit = self._on_commit

    # -- authentication ---------------------------------------------------

    def _cert_record(self, principal_id: str, ledger_name: Optional[str]):
        """(public_key, tenant, role) for a cert principal, or None."""
        if ledger_name:
            runtime = self.ledgers.get(ledger_name)
            if runtime:
                for row in runtime.cert_principals:
                    if row["principalId"] == principal_id:
                        return bytes.fromhex(row["publicKeyHex"]), "", row["ledgerRoleName"]
        boot = self._bootstrap.get(principal_id)
        if boot and boot.kind == auth.KIND_CERT and boot.public_key:
            return boot.public_key, boot.tenant_id, boot.role
        return None

    def _token_role(self, principal_id: str, ledger_name: Optional[str]) -> Optional[str]:
        if ledger_name:
            runtime = self.ledgers.get(ledger_name)
            if runtime:
                for row in runtime.aad_principals:
                    if row["principalId"] == principal_id:
                        return row["ledgerRoleName"]
        boot = self._bootstrap.get(principal_id)
        return boot.role if boot else None

    def authenticate(
        self,
        method: str,
        path_with_query: str,
        body: bytes,
        headers: dict[str, str],
        ledger_name: Optional[str] = None,
    ) -> Principal:
        headers = {k.lower(): v for k, v in headers.items()}
        with self._lock:
            if auth.HEADER_PRINCIPAL in headers:
                return self._authenticate_signed(
                    method, path_with_query, body, headers, ledger_name
                )
            bearer = headers.get("authorization", "")
            if bearer.startswith("Bearer "):
                return self._authenticate_token(bearer[len("Bearer ") :], ledger_name)
            raise auth.unauthorized("UnknownPrincipal", "no credentials presented")

    def _authenticate_signed(self, method, path_with_query, body, headers, ledger_name):
        principal_id = headers[auth.HEADER_PRINCIPAL]
        record = self._cert_record(principal_id, ledger_name)
        if record is None:
            raise auth.unauthorized(
                "UnknownPrincipal", f"no certificate principal {principal_id!r}"
            )
        public_key, tenant, role = record
        try:
            nonce = int(headers[auth.HEADER_NONCE])
            signature = bytes.fromhex(headers[auth.HEADER_SIGNATURE])
        except (KeyError, ValueError):
            raise auth.unauthorized(
                "BadSignature", "missing or malformed signature headers"
            ) from None
        preimage = auth.request_preimage(method, path_with_query, body, nonce)
        if not crypto.verify_signature(public_key, signature, preimage):
            raise auth.unauthorized("BadSignature", "request signature does not verify")
        last = self.request_nonces.get(principal_id, 0)
        if nonce <= last:
            raise auth.unauthorized(
                "ReplayedNonce", f"nonce {nonce} not above high-water mark {last}"
            )
        self.request_nonces[principal_id] = nonce
        if role is None:
            raise auth.forbidden(f"{principal_id!r} holds no role here")
        return Principal(
            principal_id=principal_id,
            kind=auth.KIND_CERT,
            credential=public_key,
            role=role,
            tenant_id=tenant,
        )

    def _authenticate_token(self, token: str, ledger_name):
        digest = auth.token_digest(token)
        boot = None
        for known_digest, candidate in self._tokens.items():
            if auth.tokens_equal(digest, known_digest):
                boot = candidate
        if boot is None:
            raise auth.unauthorized("UnknownPrincipal", "unrecognized bearer token")
        role = self._token_role(boot.principal_id, ledger_name)
        if role is None:
            raise auth.forbidden(f"{boot.principal_id!r} holds no role here")
        return Principal(
            principal_id=boot.principal_id,
            kind=auth.KIND_TOKEN,
            credential=digest,
            role=role,
            tenant_id=boot.tenant_id,
        )

    # -- descriptors / admin CRUD -------------------------------------------

    def _descriptor(self, runtime: LedgerRuntime) -> dict:
        return {
            "ledgerName": runtime.name,
            "ledgerUri": f"{self.base_uri}/ledgers/{runtime.name}",
            # emitted for shape compatibility only; no identity service exists
            "identityServiceUri": f"{self.base_uri}/ledgerIdentity/{runtime.name}",
            "ledgerType": runtime.ledger_type,
            "aadBasedSecurityPrincipals": [dict(r) for r in runtime.aad_principals],
            "certBasedSecurityPrincipals": [dict(r) for r in runtime.cert_principals],
        }

    @staticmethod
    def _validate_principal_lists(body: dict) -> tuple[list[dict], list[dict]]:
        def role_of(row: dict) -> str:
            role = row.get("ledgerRoleName")
            if role not in auth.ROLES:
                raise ApiError(400, "MalformedBody", f"bad ledgerRoleName: {role!r}")
            return role

        aad = []
        for row in body.get("aadBasedSecurityPrincipals", []) or []:
            if not isinstance(row, dict) or not isinstance(row.get("principalId"), str):
                raise ApiError(400, "MalformedBody", "bad aad principal entry")
            aad.append(
                {
                    "principalId": row["principalId"],
                    "tenantId": str(row.get("tenantId", "")),
                    "ledgerRoleName": role_of(row),
                }
            )
        certs = []
        for row in body.get("certBasedSecurityPrincipals", []) or []:
            if not isinstance(row, dict) or not isinstance(row.get("principalId"), str):
                raise ApiError(400, "MalformedBody", "bad cert principal entry")
            key_hex = row.get("publicKeyHex", "")
            try:
                if len(bytes.fromhex(key_hex)) != 32:
                    raise ValueError
            except (TypeError, ValueError):
                raise ApiError(
                    400, "MalformedBody", "publicKeyHex must be 32 bytes of hex"
                ) from None
            certs.append(
                {
                    "principalId": row["principalId"],
                    "publicKeyHex": key_hex.lower(),
                    "ledgerRoleName": role_of(row),
                }
            )
        return aad, certs

    def create_ledger(self, name: str, body: dict) -> dict:
        name = name.lower()
        if not LEDGER_NAME_RE.match(name):
            raise ApiError(400, "BadName", "ledger name must match [a-z0-9-]{3,32}")
        body_name = body.get("ledgerName")
        if body_name is not None and str(body_name).lower() != name:
            raise ApiError(400, "BadName", "body ledgerName disagrees with path")
        ledger_type = body.get("ledgerType", "Private")
        if ledger_type not in LEDGER_TYPES:
            raise ApiError(400, "MalformedBody", f"bad ledgerType: {ledger_type!r}")
        aad, certs = self._validate_principal_lists(body)
        with self._lock:
            if name in self.ledgers:
                raise ApiError(409, "LedgerExists", f"ledger {name!r} already exists")
            try:
                outgoing = self.node.create_ledger(name)
            except LedgerExists:
                raise ApiError(409, "LedgerExists", f"ledger {name!r} already exists") from None
            except NotLeader as exc:
                raise ApiError(503, "QuorumUnavailable", str(exc)) from None
            runtime = LedgerRuntime(
                name=name, ledger_type=ledger_type, aad_principals=aad, cert_principals=certs
            )
            self.ledgers[name] = runtime
        self.dispatch(outgoing)
        return self._descriptor(runtime)

    def get_ledger(self, name: str) -> dict:
        runtime = self._runtime(name)
        return self._descriptor(runtime)

    def update_ledger(self, name: str, body: dict) -> dict:
        allowed_keys = {"aadBasedSecurityPrincipals", "certBasedSecurityPrincipals"}
        unknown = set(body) - allowed_keys
        if unknown:
            raise ApiError(
                400, "MalformedBody",
                f"update may only modify principal lists, got {sorted(unknown)}",
            )
        with self._lock:
            runtime = self._runtime(name)
            aad, certs = self._validate_principal_lists(body)
            if "aadBasedSecurityPrincipals" in body:
                runtime.aad_principals = aad
            if "certBasedSecurityPrincipals" in body:
                runtime.cert_principals = certs
            return self._descriptor(runtime)

    def delete_ledger(self, name: str) -> None:
        with self._lock:
            self._runtime(name)
            del self.ledgers[name]
            # registration removed, store closed; block files stay on disk
            self.node.drop_ledger(name)

    def _runtime(self, name: str) -> LedgerRuntime:
        runtime = self.ledgers.get(name)
        if runtime is None:
            raise ApiError(404, "NotFound", f"no ledger named {name!r}")
        return runtime

    # -- transactions -----------------------------------------------------

    def _submitter_key(self, principal_id: str) -> crypto.SigningKey:
        key = self._key_cache.get(principal_id)
        if key is None:
            key = derived_submitter_key(self.master_seed, principal_id)
            self._key_cache[principal_id] = key
        return key

    def _next_entry_nonce(self, runtime: LedgerRuntime, principal_id: str) -> int:
        if principal_id not in runtime.entry_nonces:
            ledger = self.node.replica(runtime.name).ledger
            runtime.entry_nonces[principal_id] = ledger.max_nonce(principal_id)
        runtime.entry_nonces[principal_id] += 1
        return runtime.entry_nonces[principal_id]

    @staticmethod
    def _parse_tx_body(body: dict) -> tuple[str, int, bytes]:
        """(contract_id, action, payload) from a validated request body."""
        contract_id = body.get("contractId")
        if not isinstance(contract_id, str) or not 1 <= len(contract_id.encode()) <= 64:
            raise ApiError(400, "MalformedBody", "contractId must be a 1..64 byte string")
        action = body.get("action")
        if action == "registerSensor":
            sensor = body.get("sensorPrincipalId")
            if not isinstance(sensor, str) or not sensor:
                raise ApiError(400, "MalformedBody", "sensorPrincipalId required")
            return contract_id, entries.ACTION_REGISTER_SENSOR, entries.make_register_payload(sensor)
        if action == "addReading":
            parameter = body.get("parameter")
            value_scaled = body.get("valueScaled")
            unit = body.get("unit")
            source_ts = body.get("sourceTimestamp")
            if not isinstance(parameter, str):
                raise ApiError(400, "MalformedBody", "parameter (string) required")
            try:
                code = entries.parameter_code(parameter)
            except Exception:
                raise ApiError(400, "MalformedBody", f"unknown parameter {parameter!r}") from None
            if not isinstance(value_scaled, int) or isinstance(value_scaled, bool):
                raise ApiError(400, "MalformedBody", "valueScaled (integer milli-units) required")
            if not entries.VALUE_SCALED_MIN <= value_scaled <= entries.VALUE_SCALED_MAX:
                raise ApiError(400, "MalformedBody", "valueScaled out of range")
            if not isinstance(unit, str):
                raise ApiError(400, "MalformedBody", "unit (string) required")
            if not isinstance(source_ts, int) or isinstance(source_ts, bool) or source_ts < 0:
                raise ApiError(400, "MalformedBody", "sourceTimestamp (unsigned integer) required")
            return contract_id, entries.ACTION_ADD_READING, entries.make_reading_payload(
                code, value_scaled, unit, source_ts
            )
        raise ApiError(400, "MalformedBody", f"unknown action {action!r}")

    def post_transaction(self, name: str, principal: Principal, body: dict) -> dict:
        if not self.node.is_leader:
            raise ApiError(503, "QuorumUnavailable", "this node is not the leader")
        contract_id, action, payload = self._parse_tx_body(body)
        with self._lock:
            runtime = self._runtime(name)
            try:
                self.node.replica(name)
            except UnknownLedger:
                raise ApiError(503, "QuorumUnavailable", "ledger replica unavailable") from None
            entry = entries.sign_entry(
                entry_id=self.id_source(),
                contract_id=contract_id,
                action=action,
                payload=payload,
                submitter_id=principal.principal_id,
                submitter_nonce=self._next_entry_nonce(runtime, principal.principal_id),
                key=self._submitter_key(principal.principal_id),
            )
            try:
                runtime.speculative.apply_entry(entry, int(self.time_source()))
            except ContractError as exc:
                raise ApiError(422, "ContractRejected", str(exc)) from None
            try:
                self.node.replica(name).ledger.validate_entry(entry)
            except AppendError as exc:
                raise ApiError(500, "Internal", f"entry failed ledger checks: {exc}") from exc
            runtime.tx_counter += 1
            record = TxRecord(
                provisional_id=f"t{runtime.tx_counter}", state="Pending", entry=entry
            )
            runtime.tx_by_id[record.provisional_id] = record
            runtime.tx_by_entry_id[entry.entry_id] = record
            now = self.time_source()
            if not runtime.pending:
                runtime.first_pending_at = now
            runtime.pending.append(entry)
        self.maybe_flush(name)
        return {"transactionId": record.provisional_id, "state": "Pending"}

    def maybe_flush(self, name: str) -> None:
        """Form a block when the batch is full or the window has elapsed."""
        outgoing = None
        with self._lock:
            runtime = self.ledgers.get(name)
            if runtime is None or not runtime.pending:
                return
            try:
                ready = self.node.ready(name)
            except UnknownLedger:
                return
            if not ready:
                return
            now = self.time_source()
            window_elapsed = (
                runtime.first_pending_at is not None
                and now - runtime.first_pending_at >= BATCH_WINDOW_SECONDS
            )
            if len(runtime.pending) < BATCH_MAX_ENTRIES and not window_elapsed:
                return
            batch = runtime.pending[:BATCH_MAX_ENTRIES]
            runtime.pending = runtime.pending[BATCH_MAX_ENTRIES:]
            runtime.first_pending_at = now if runtime.pending else None
            try:
                _block, outgoing = self.node.submit_block(name, batch)
            except (GapInChain, NotLeader, AppendError, ContractError) as exc:
                for entry in batch:
                    record = runtime.tx_by_entry_id.get(entry.entry_id)
                    if record:
                        record.state = "Rejected"
                        record.reason = str(exc)
                return
        if outgoing:
            self.dispatch(outgoing)

    def flush_all(self, force_window: bool = False) -> None:
        for name in list(self.ledgers):
            if force_window:
                with self._lock:
                    runtime = self.ledgers.get(name)
                    if runtime and runtime.first_pending_at is not None:
                        runtime.first_pending_at = -1e18
            self.maybe_flush(name)

    def _on_commit(self, name: str, block: Block) -> None:
        with self._lock:
            runtime = self.ledgers.get(name)
            if runtime is None:
                return
            for leaf_index, entry in enumerate(block.entries):
                record = runtime.tx_by_entry_id.get(entry.entry_id)
                if record is None or record.state == "Committed":
                    continue
                record.state = "Committed"
                record.height = block.header.height
                record.leaf_index = leaf_index
                record.final_id = f"{block.header.height}.{leaf_index}"
                runtime.tx_by_id[record.final_id] = record
        self.maybe_flush(name)

    def _find_tx(self, runtime: LedgerRuntime, tx_id: str) -> TxRecord:
        record = runtime.tx_by_id.get(tx_id)
        if record is None:
            raise ApiError(404, "NotFound", f"no transaction {tx_id!r}")
        return record

    @staticmethod
    def _decode_entry_body(entry: entries.LedgerEntry) -> dict:
        if entry.action == entries.ACTION_REGISTER_SENSOR:
            return {
                "contractId": entry.contract_id,
                "action": "registerSensor",
                "sensorPrincipalId": entries.parse_register_payload(entry.payload),
                "submitterId": entry.submitter_id,
            }
        reading = entries.parse_reading_payload(entry.payload)
        return {
            "contractId": entry.contract_id,
            "action": "addReading",
            "parameter": entries.parameter_name(reading.parameter),
            "valueScaled": reading.value_scaled,
            "unit": reading.unit,
            "sourceTimestamp": reading.source_timestamp,
            "submitterId": entry.submitter_id,
        }

    def get_transaction(self, name: str, tx_id: str) -> dict:
        with self._lock:
            runtime = self._runtime(name)
            record = self._find_tx(runtime, tx_id)
            if record.state == "Pending":
                return {"transactionId": record.provisional_id, "state": "Pending"}
            if record.state == "Rejected":
                return {
                    "transactionId": record.provisional_id,
                    "state": "Rejected",
                    "reason": record.reason,
                }
            return {
                "transactionId": record.final_id,
                "provisionalId": record.provisional_id,
                "state": "Committed",
                "entry": self._decode_entry_body(record.entry),
            }

    def get_receipt(self, name: str, tx_id: str) -> dict:
        with self._lock:
            runtime = self._runtime(name)
            record = self._find_tx(runtime, tx_id)
            if record.state != "Committed":
                raise ApiError(
                    409, "NotYetCommitted", f"transaction {tx_id!r} is {record.state}"
                )
            store = self.node.replica(name).ledger.store
            receipt = make_receipt(store, record.height, record.leaf_index)
        return receipt_to_json_dict(receipt)

    # -- contract queries --------------------------------------------------

    @staticmethod
    def _reading_dict(record) -> dict:
        return {
            "parameter": entries.parameter_name(record.parameter),
            "valueScaled": record.value_scaled,
            "unit": record.unit,
            "sourceTimestamp": record.source_timestamp,
            "ledgerTimestamp": record.ledger_timestamp,
        }

    def query_contract(self, name: str, contract_id: str, index: Optional[int]) -> dict:
        self._runtime(name)
        with self.node._lock:
            try:
                state = self.node.replica(name)
            except UnknownLedger:
                raise ApiError(404, "NotFound", f"no ledger named {name!r}") from None
            # committed state only; pending entries are never visible
            committed = state.committed_contracts
            try:
                contract = committed.get(contract_id)
            except UnknownContract:
                raise ApiError(
                    404, "UnknownContract", f"no contract {contract_id!r}"
                ) from None
            if index is None:
                return {
                    "contractId": contract.contract_id,
                    "sensorPrincipalId": contract.sensor_principal_id,
                    "state": contract.state_name,
                    "readings": [self._reading_dict(r) for r in contract.readings],
                }
            try:
                committed.get_reading(contract_id, index)
            except IndexOutOfRange:
                raise ApiError(
                    416, "IndexOutOfRange",
                    f"index {index} out of range ({len(contract.readings)} readings)",
                ) from None
            return {
                "contractId": contract.contract_id,
                "index": index,
                "reading": self._reading_dict(contract.readings[index]),
            }
