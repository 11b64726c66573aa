import { describe, expect, it } from "vitest";

import { descaleValue, scaleValue } from "../src/scaling.js";

describe("milli-unit scaling", () => {
  it("scales by 1000 exactly", () => {
    expect(scaleValue("25.31")).toBe(25310);
    expect(scaleValue(25.31)).toBe(25310);
    expect(scaleValue("7")).toBe(7000);
    expect(scaleValue("-3.142")).toBe(-3142);
    expect(scaleValue("0")).toBe(0);
  });

  it("rounds half away from zero", () => {
    expect(scaleValue("0.0005")).toBe(1);
    expect(scaleValue("-0.0005")).toBe(-1);
    expect(scaleValue("0.0004")).toBe(0);
    expect(scaleValue("-0.0004")).toBe(0);
    expect(scaleValue("1.23456")).toBe(1235);
    expect(scaleValue("-1.23456")).toBe(-1235);
  });

  it("rejects non-decimal input", () => {
    expect(() => scaleValue("abc")).toThrow();
    expect(() => scaleValue("1.2.3")).toThrow();
    expect(() => scaleValue(Number.NaN)).toThrow();
    expect(() => scaleValue(Number.POSITIVE_INFINITY)).toThrow();
    expect(() => scaleValue(1e21)).toThrow();
  });

  it("descales to a canonical 3-decimal string", () => {
    expect(descaleValue(25310)).toBe("25.310");
    expect(descaleValue(-1235)).toBe("-1.235");
    expect(descaleValue(0)).toBe("0.000");
    expect(descaleValue(999)).toBe("0.999");
  });

  it("round-trips exactly: scale(descale(n)) === n", () => {
    for (const n of [0, 1, -1, 999, -999, 25310, -1234567, 987654321]) {
      expect(scaleValue(descaleValue(n))).toBe(n);
    }
  });
});
