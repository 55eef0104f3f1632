import { describe, expect, it } from "vitest";

import {
  emptyBitmask,
  filledCount,
  formatBitmask,
  isFilled,
  parseBitmask,
  toggleCell,
} from "../src/bitmask.js";

describe("bitmask text format", () => {
  it("round-trips the service format", () => {
    const text = "3 2\n#.#\n.#.\n";
    const mask = parseBitmask(text);
    expect(mask.cols).toBe(3);
    expect(mask.rows).toBe(2);
    expect(formatBitmask(mask)).toBe(text);
  });

  it("reads top row first", () => {
    const mask = parseBitmask("2 2\n#.\n..\n");
    expect(isFilled(mask, 0, 0)).toBe(true);
    expect(isFilled(mask, 1, 0)).toBe(false);
  });

  it("rejects malformed documents", () => {
    expect(() => parseBitmask("")).toThrow();
    expect(() => parseBitmask("2 2\n##\n")).toThrow(/expected 2 rows/);
    expect(() => parseBitmask("2 2\n#x\n##\n")).toThrow(/bad cell/);
    expect(() => parseBitmask("0 2\n\n\n")).toThrow(/grid size/);
  });

  it("toggles cells immutably", () => {
    const mask = emptyBitmask(3, 3);
    const toggled = toggleCell(mask, 1, 2);
    expect(isFilled(toggled, 1, 2)).toBe(true);
    expect(isFilled(mask, 1, 2)).toBe(false);
    expect(filledCount(toggled)).toBe(1);
    expect(filledCount(toggleCell(toggled, 1, 2))).toBe(0);
  });

  it("ignores out-of-range toggles", () => {
    const mask = emptyBitmask(2, 2);
    expect(toggleCell(mask, 5, 5)).toBe(mask);
  });
});
