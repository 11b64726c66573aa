/**
 * Milli-unit scaling with exact decimal string math: scaled = value * 1000
 * rounded half away from zero. No binary floating point touches a value,
 * so what a producer submits is bit-for-bit what a consumer reads back.
 */

const DECIMAL_RE = /^[+-]?(\d+)(?:\.(\d+))?$/;

export function scaleValue(value: number | string): number {
  let text: string;
  if (typeof value === "number") {
    if (!Number.isFinite(value)) throw new Error("value must be finite");
    text = String(value);
    if (/[eE]/.test(text)) {
      throw new Error("value out of plain-decimal range; pass a decimal string");
    }
  } else {
    text = value.trim();
  }
  const match = DECIMAL_RE.exec(text);
  if (!match) throw new Error(`not a decimal number: ${JSON.stringify(text)}`);
  const negative = text.startsWith("-");
  const intPart = match[1];
  const fracPart = (match[2] ?? "").padEnd(4, "0");
  const milli = BigInt(intPart) * 1000n + BigInt(fracPart.slice(0, 3));
  // half away from zero: the magnitude rounds up when the remainder >= .5
  const roundUp = Number(fracPart[3]) >= 5;
  const magnitude = milli + (roundUp ? 1n : 0n);
  const signed = negative ? -magnitude : magnitude;
  if (signed > BigInt(Number.MAX_SAFE_INTEGER) || signed < -BigInt(Number.MAX_SAFE_INTEGER)) {
    throw new Error("scaled value exceeds safe integer range");
  }
  return Number(signed);
}

/** Milli-units back to the canonical 3-decimal string ("25310" -> "25.310"). */
export function descaleValue(valueScaled: number): string {
  if (!Number.isSafeInteger(valueScaled)) throw new Error("valueScaled must be an integer");
  const negative = valueScaled < 0;
  const magnitude = BigInt(Math.abs(valueScaled));
  const whole = magnitude / 1000n;
  const frac = (magnitude % 1000n).toString().padStart(3, "0");
  return `${negative ? "-" : ""}${whole}.${frac}`;
}
