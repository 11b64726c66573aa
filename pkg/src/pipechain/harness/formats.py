"""Producer record formats and normalization to the canonical reading.

Three concrete formats stand in for the heterogeneous streams the
pipeline ingests: CSV rows, JSON lines, and key=value text. Whatever the
format, normalization lands on the same canonical fields, with decimal
values scaled to integer milli-units: value_scaled = round(value * 1000),
ties away from zero. Values travel as decimal text end to end, so no
binary-float artifact can shift a reading.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation, ROUND_HALF_UP

from ..entries import parameter_code, parameter_name

FORMAT_JSON_LINES = "jsonlines"
FORMAT_CSV = "csv"
FORMAT_KEY_VALUE = "keyvalue"
FORMATS = (FORMAT_JSON_LINES, FORMAT_CSV, FORMAT_KEY_VALUE)


class ParseError(ValueError):
    def __init__(self, line: str, reason: str):
        super().__init__(f"{reason}: {line!r}")
        self.line = line
        self.reason = reason


@dataclass(frozen=True)
class Reading:
    """Canonical normalized reading, ready for submission."""

    producer_id: str
    parameter: int
    value_scaled: int  # milli-units
    unit: str
    source_timestamp: int


def scale_value(value_text: str) -> int:
    """Milli-unit rule: x1000, round half away from zero; exact decimal math."""
    value = Decimal(value_text)
    return int((value * 1000).quantize(Decimal("1"), rounding=ROUND_HALF_UP))


def descale_text(value_scaled: int) -> str:
    """Milli-units back to a 3-decimal string (the canonical wire text)."""
    return str(Decimal(value_scaled).scaleb(-3).quantize(Decimal("0.001")))


def render(reading: Reading, format_name: str) -> str:
    """One raw record line in the producer's declared format."""
    value_text = descale_text(reading.value_scaled)
    name = parameter_name(reading.parameter)
    if format_name == FORMAT_CSV:
        return ",".join(
            (reading.producer_id, name, value_text, reading.unit, str(reading.source_timestamp))
        )
    if format_name == FORMAT_JSON_LINES:
        return (
            "{"
            + f'"producer": {json.dumps(reading.producer_id)}, '
            + f'"parameter": {json.dumps(name)}, '
            + f'"value": {value_text}, '
            + f'"unit": {json.dumps(reading.unit)}, '
            + f'"timestamp": {reading.source_timestamp}'
            + "}"
        )
    if format_name == FORMAT_KEY_VALUE:
        return (
            f"producer={reading.producer_id} parameter={name} "
            f"value={value_text} unit={reading.unit} "
            f"timestamp={reading.source_timestamp}"
        )
    raise ValueError(f"unknown format: {format_name}")


def _fields_from_csv(line: str) -> dict[str, str]:
    parts = line.split(",")
    if len(parts) != 5:
        raise ParseError(line, f"csv row needs 5 fields, got {len(parts)}")
    producer, parameter, value, unit, timestamp = (p.strip() for p in parts)
    return {
        "producer": producer,
        "parameter": parameter,
        "value": value,
        "unit": unit,
        "timestamp": timestamp,
    }


def _fields_from_jsonl(line: str) -> dict[str, str]:
    try:
        obj = json.loads(line, parse_float=Decimal, parse_int=Decimal)
    except json.JSONDecodeError as exc:
        raise ParseError(line, f"bad json: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError(line, "json record must be an object")
    out = {}
    for key in ("producer", "parameter", "value", "unit", "timestamp"):
        if key not in obj:
            raise ParseError(line, f"missing field {key!r}")
        out[key] = str(obj[key])
    return out


def _fields_from_keyvalue(line: str) -> dict[str, str]:
    out = {}
    for token in line.split():
        key, sep, value = token.partition("=")
        if not sep:
            raise ParseError(line, f"token {token!r} is not key=value")
        out[key] = value
    for key in ("producer", "parameter", "value", "unit", "timestamp"):
        if key not in out:
            raise ParseError(line, f"missing field {key!r}")
    return out


_PARSERS = {
    FORMAT_CSV: _fields_from_csv,
    FORMAT_JSON_LINES: _fields_from_jsonl,
    FORMAT_KEY_VALUE: _fields_from_keyvalue,
}


def normalize(line: str, format_name: str) -> Reading:
    """Raw record line -> canonical Reading; ParseError on any defect."""
    try:
        parser = _PARSERS[format_name]
    except KeyError:
        raise ParseError(line, f"unknown format {format_name!r}") from None
    fields = parser(line)
    try:
        parameter = parameter_code(fields["parameter"])
    except Exception:
        raise ParseError(line, f"unknown parameter {fields['parameter']!r}") from None
    try:
        value_scaled = scale_value(fields["value"])
    except (InvalidOperation, ValueError):
        raise ParseError(line, f"bad value {fields['value']!r}") from None
    try:
        timestamp = int(fields["timestamp"])
        if timestamp < 0:
            raise ValueError
    except ValueError:
        raise ParseError(line, f"bad timestamp {fields['timestamp']!r}") from None
    return Reading(
        producer_id=fields["producer"],
        parameter=parameter,
        value_scaled=value_scaled,
        unit=fields["unit"],
        source_timestamp=timestamp,
    )
