"""Deterministic sensor-contract state machine.

One contract per registered sensor stream. Only the registered sensor
principal may append readings; the contract moves Created -> InUse on its
first committed reading and never back. Every replica applies the same
entries in the same order and must land on the same state digest, so all
state is integer/string valued and digesting iterates contracts in
lexicographic id order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import crypto, entries
from .encoding import EncodingError, enc_i64, enc_str, enc_u8, enc_u32, enc_u64

STATE_CREATED = 0
STATE_IN_USE = 1

_STATE_NAMES = {STATE_CREATED: "Created", STATE_IN_USE: "InUse"}

GUARD_MESSAGE = "Only sensor can add temperature readings"


class ContractError(Exception):
    """Base for contract rejections; the store is unchanged when raised."""


class ContractExists(ContractError):
    def __init__(self, contract_id: str):
        super().__init__(f"contract already exists: {contract_id}")
        self.contract_id = contract_id


class UnknownContract(ContractError):
    def __init__(self, contract_id: str):
        super().__init__(f"unknown contract: {contract_id}")
        self.contract_id = contract_id


class UnauthorizedSensor(ContractError):
    def __init__(self):
        super().__init__(GUARD_MESSAGE)


class MalformedPayload(ContractError):
    pass


class IndexOutOfRange(ContractError):
    def __init__(self, contract_id: str, index: int, length: int):
        super().__init__(f"reading index {index} out of range for {contract_id} (len {length})")


@dataclass(frozen=True)
class ReadingRecord:
    parameter: int
    value_scaled: int  # milli-units
    unit: str
    source_timestamp: int
    ledger_timestamp: int  # committing block's timestamp


@dataclass
class SensorContract:
    contract_id: str
    sensor_principal_id: str
    state: int = STATE_CREATED
    readings: list[ReadingRecord] = field(default_factory=list)

    @property
    def state_name(self) -> str:
        return _STATE_NAMES[self.state]


def state_name(code: int) -> str:
    return _STATE_NAMES[code]


class ContractStore:
    """Mutable map contract_id -> SensorContract; apply path is single-threaded."""

    def __init__(self):
        self._contracts: dict[str, SensorContract] = {}

    def __contains__(self, contract_id: str) -> bool:
        return contract_id in self._contracts

    def __len__(self) -> int:
        return len(self._contracts)

    def contract_ids(self) -> list[str]:
        return sorted(self._contracts)

    def get(self, contract_id: str) -> SensorContract:
        try:
            return self._contracts[contract_id]
        except KeyError:
            raise UnknownContract(contract_id) from None

    def register_sensor(self, contract_id: str, sensor_principal_id: str) -> None:
        if contract_id in self._contracts:
            raise ContractExists(contract_id)
        self._contracts[contract_id] = SensorContract(
            contract_id=contract_id, sensor_principal_id=sensor_principal_id
        )

    def apply_entry(self, entry: entries.LedgerEntry, block_timestamp: int) -> None:
        """Apply one validated-signature entry; raises without mutating on rejection."""
        if entry.action == entries.ACTION_REGISTER_SENSOR:
            try:
                sensor = entries.parse_register_payload(entry.payload)
            except EncodingError as exc:
                raise MalformedPayload(str(exc)) from exc
            self.register_sensor(entry.contract_id, sensor)
        elif entry.action == entries.ACTION_ADD_READING:
            contract = self.get(entry.contract_id)
            if entry.submitter_id != contract.sensor_principal_id:
                raise UnauthorizedSensor()
            try:
                reading = entries.parse_reading_payload(entry.payload)
            except EncodingError as exc:
                raise MalformedPayload(str(exc)) from exc
            contract.readings.append(
                ReadingRecord(
                    parameter=reading.parameter,
                    value_scaled=reading.value_scaled,
                    unit=reading.unit,
                    source_timestamp=reading.source_timestamp,
                    ledger_timestamp=block_timestamp,
                )
            )
            contract.state = STATE_IN_USE
        else:
            raise MalformedPayload(f"unknown action code: {entry.action}")

    def apply_block_entries(
        self, block_entries, block_timestamp: int
    ) -> list[tuple[str, str]]:
        """Apply a whole block, returning an undo journal (see undo()).

        On rejection mid-block the already-applied prefix is rolled back and
        the rejection re-raised, leaving the store unchanged.
        """
        journal: list[tuple[str, str]] = []
        try:
            for entry in block_entries:
                self.apply_entry(entry, block_timestamp)
                if entry.action == entries.ACTION_REGISTER_SENSOR:
                    journal.append(("register", entry.contract_id))
                else:
                    journal.append(("reading", entry.contract_id))
        except ContractError:
            self.undo(journal)
            raise
        return journal

    def undo(self, journal: list[tuple[str, str]]) -> None:
        for op, contract_id in reversed(journal):
            if op == "register":
                del self._contracts[contract_id]
            else:
                contract = self._contracts[contract_id]
                contract.readings.pop()
                if not contract.readings:
                    contract.state = STATE_CREATED

    def get_reading(self, contract_id: str, index: int) -> tuple[int, int]:
        contract = self.get(contract_id)
        if not 0 <= index < len(contract.readings):
            raise IndexOutOfRange(contract_id, index, len(contract.readings))
        record = contract.readings[index]
        return record.value_scaled, record.ledger_timestamp

    def get_all_readings(self, contract_id: str) -> list[ReadingRecord]:
        return list(self.get(contract_id).readings)

    def encode(self) -> bytes:
        """Canonical store bytes: contracts in lexicographic contract_id order."""
        parts = [enc_u32(len(self._contracts))]
        for contract_id in sorted(self._contracts):
            contract = self._contracts[contract_id]
            parts.append(enc_str(contract.contract_id))
            parts.append(enc_str(contract.sensor_principal_id))
            parts.append(enc_u8(contract.state))
            parts.append(enc_u32(len(contract.readings)))
            for record in contract.readings:
                parts.append(enc_u8(record.parameter))
                parts.append(enc_i64(record.value_scaled))
                parts.append(enc_str(record.unit))
                parts.append(enc_u64(record.source_timestamp))
                parts.append(enc_u64(record.ledger_timestamp))
        return b"".join(parts)

    def state_digest(self) -> bytes:
        return crypto.state_hash(self.encode())

    def copy(self) -> "ContractStore":
        clone = ContractStore()
        for contract_id, contract in self._contracts.items():
            clone._contracts[contract_id] = SensorContract(
                contract_id=contract.contract_id,
                sensor_principal_id=contract.sensor_principal_id,
                state=contract.state,
                readings=list(contract.readings),
            )
        return clone
