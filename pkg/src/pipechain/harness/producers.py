"""Simulated heterogeneous data producers.

Each producer streams one measured parameter as sinusoid + seeded noise,
rendered in its declared format. Identical specs and seeds yield
byte-identical record streams. Rates are capped at desk scale and value
models must stay inside the parameter's plausible range.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction

from ..entries import parameter_code
from .formats import FORMATS, Reading, render, scale_value

RATE_HZ_MAX = Fraction(100)

# plausible environmental ranges per parameter name
PLAUSIBLE_RANGES = {
    "temperature": (Decimal("-90"), Decimal("60")),  # degC
    "pressure": (Decimal("300"), Decimal("1100")),  # hPa
    "moisture": (Decimal("0"), Decimal("100")),  # %
    "humidity": (Decimal("0"), Decimal("100")),  # %
}
DEFAULT_RANGE = (Decimal("-1000000"), Decimal("1000000"))

SINE_PERIOD_MESSAGES = 32
NOISE_FRACTION = Decimal("0.05")  # of amplitude, each side


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class ValueModel:
    base: Decimal
    amplitude: Decimal
    noise_seed: int


@dataclass(frozen=True)
class ProducerSpec:
    producer_id: str
    format: str
    parameter: str
    rate_hz: Fraction
    value_model: ValueModel
    principal_id: str
    contract_id: str
    messages: int
    unit: str = ""
    malformed_every: int = 0  # corrupt every Nth record (0 = never)

    def validate(self) -> None:
        if self.format not in FORMATS:
            raise SpecError(f"{self.producer_id}: unknown format {self.format!r}")
        try:
            parameter_code(self.parameter)
        except Exception:
            raise SpecError(
                f"{self.producer_id}: unknown parameter {self.parameter!r}"
            ) from None
        if not 0 < self.rate_hz <= RATE_HZ_MAX:
            raise SpecError(
                f"{self.producer_id}: rate_hz must be in (0, {RATE_HZ_MAX}], "
                f"got {self.rate_hz}"
            )
        if self.messages < 0:
            raise SpecError(f"{self.producer_id}: negative message budget")
        if self.value_model.amplitude < 0:
            raise SpecError(f"{self.producer_id}: negative amplitude")
        lo, hi = PLAUSIBLE_RANGES.get(self.parameter, DEFAULT_RANGE)
        swing = self.value_model.amplitude * (1 + NOISE_FRACTION)
        if self.value_model.base - swing < lo or self.value_model.base + swing > hi:
            raise SpecError(
                f"{self.producer_id}: value model leaves the plausible range "
                f"[{lo}, {hi}] for {self.parameter}"
            )


DEFAULT_UNITS = {
    "temperature": "C",
    "pressure": "hPa",
    "moisture": "%",
    "humidity": "%",
}


def unit_for(spec: ProducerSpec) -> str:
    return spec.unit or DEFAULT_UNITS.get(spec.parameter, "u")


@dataclass(frozen=True)
class RawRecord:
    producer_id: str
    format: str
    sequence: int
    line: str


def generate_records(spec: ProducerSpec, start_time: int) -> list[RawRecord]:
    """The producer's full deterministic record stream."""
    spec.validate()
    rng = random.Random(spec.value_model.noise_seed)
    records = []
    code = parameter_code(spec.parameter)
    for k in range(spec.messages):
        phase = 2.0 * math.pi * (k % SINE_PERIOD_MESSAGES) / SINE_PERIOD_MESSAGES
        noise_span = float(spec.value_model.amplitude * NOISE_FRACTION)
        value = (
            float(spec.value_model.base)
            + float(spec.value_model.amplitude) * math.sin(phase)
            + rng.uniform(-noise_span, noise_span)
        )
        value_text = f"{value:.3f}"
        timestamp = start_time + int(Fraction(k) / spec.rate_hz)
        reading = Reading(
            producer_id=spec.producer_id,
            parameter=code,
            value_scaled=scale_value(value_text),
            unit=unit_for(spec),
            source_timestamp=timestamp,
        )
        line = render(reading, spec.format)
        if spec.malformed_every and (k + 1) % spec.malformed_every == 0:
            line = _corrupt(line)
        records.append(
            RawRecord(producer_id=spec.producer_id, format=spec.format, sequence=k, line=line)
        )
    return records


def _corrupt(line: str) -> str:
    # truncation breaks every format: csv loses fields, json loses its
    # closing brace, key=value loses required keys
    return line[: len(line) // 2]
