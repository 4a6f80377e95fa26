import { describe, expect, it } from "vitest";

import {
  andTables,
  bitsToHex,
  decodeAction,
  encodeAction,
  hexToBits,
  negate,
  permuteRows,
  projection,
  replayTables,
} from "../src/tables";

describe("tables", () => {
  it("projections match the reference columns", () => {
    expect(bitsToHex(projection(1, 3))).toBe("AA");
    expect(bitsToHex(projection(2, 3))).toBe("CC");
    expect(bitsToHex(projection(3, 3))).toBe("F0");
    expect(projection(3, 3)).toEqual([0, 0, 0, 0, 1, 1, 1, 1]);
  });

  it("hex round trips", () => {
    for (const hex of ["8F", "70", "00", "FF", "CA"]) {
      expect(bitsToHex(hexToBits(hex, 3))).toBe(hex);
    }
    expect(bitsToHex(hexToBits("CA35", 4))).toBe("CA35");
    expect(hexToBits("8F", 3)).toEqual([1, 1, 1, 1, 0, 0, 0, 1]);
  });

  it("rejects malformed hex", () => {
    expect(() => hexToBits("8", 3)).toThrow();
    expect(() => hexToBits("ZZ", 3)).toThrow();
  });

  it("replays the two-gate reference construction", () => {
    const tables = replayTables(3, [
      [1, 1, 2],
      [3, 3, 4],
    ]);
    expect(tables.map(bitsToHex)).toEqual(["AA", "CC", "F0", "88", "70"]);
  });

  it("connection types apply the right polarities", () => {
    const a = hexToBits("F0", 3);
    const b = hexToBits("88", 3);
    expect(bitsToHex(andTables(a, b, 3))).toBe("70");
    expect(bitsToHex(negate(hexToBits("70", 3)))).toBe("8F");
  });

  it("permutes rows by lookup", () => {
    const rev = [7, 6, 5, 4, 3, 2, 1, 0];
    expect(bitsToHex(permuteRows(hexToBits("F0", 3), rev))).toBe("0F");
  });

  it("action codec matches the engine convention", () => {
    expect(encodeAction(3, 3, 4, 4)).toBe(43);
    expect(encodeAction(1, 1, 2, 4)).toBe(1);
    expect(decodeAction(33, 4)).toEqual([3, 1, 2]);
    for (let idx = 0; idx < 4 * 5 * 5; idx++) {
      const [e, p1, p2] = decodeAction(idx, 5);
      expect(encodeAction(e, p1, p2, 5)).toBe(idx);
    }
  });
});
