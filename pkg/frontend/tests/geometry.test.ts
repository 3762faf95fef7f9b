import { describe, expect, it } from "vitest";

import {
  boxFromArray,
  boxToArray,
  denormalizeBox,
  dragToRect,
  isDegenerateDrag,
  MIN_DRAG_PX,
  normalizeBox,
} from "../src/geometry.js";

/** Tiny deterministic generator so the loops replay identically. */
function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}

describe("dragToRect", () => {
  it("orients any drag direction into a non-negative rect", () => {
    const rect = dragToRect({ x: 50, y: 40 }, { x: 10, y: 90 });
    expect(rect).toEqual({ x: 10, y: 40, width: 40, height: 50 });
  });
});

describe("isDegenerateDrag", () => {
  it("rejects drags below the minimum in either dimension", () => {
    expect(isDegenerateDrag({ x: 0, y: 0 }, { x: 0, y: 0 })).toBe(true);
    expect(isDegenerateDrag({ x: 0, y: 0 }, { x: 3, y: 100 })).toBe(true);
    expect(isDegenerateDrag({ x: 0, y: 0 }, { x: 100, y: 3 })).toBe(true);
    expect(isDegenerateDrag({ x: 0, y: 0 }, { x: MIN_DRAG_PX, y: MIN_DRAG_PX })).toBe(false);
    expect(isDegenerateDrag({ x: 20, y: 20 }, { x: 5, y: 2 })).toBe(false);
  });
});

describe("normalizeBox", () => {
  it("clamps drags that leave the viewport", () => {
    const box = normalizeBox({ x: -20, y: 50, width: 80, height: 500 }, 100, 200);
    expect(box).toEqual({ x0: 0, y0: 0.25, x1: 0.6, y1: 1 });
  });

  it("returns null when the rect lies fully outside", () => {
    expect(normalizeBox({ x: 150, y: 0, width: 40, height: 40 }, 100, 100)).toBeNull();
    expect(normalizeBox({ x: 10, y: 10, width: 20, height: 20 }, 0, 100)).toBeNull();
  });

  it("keeps coordinates ordered and inside the unit square", () => {
    const rand = lcg(7);
    for (let i = 0; i < 300; i += 1) {
      const w = 50 + Math.floor(rand() * 900);
      const h = 50 + Math.floor(rand() * 900);
      const rect = dragToRect(
        { x: rand() * w, y: rand() * h },
        { x: rand() * w, y: rand() * h },
      );
      const box = normalizeBox(rect, w, h);
      if (box === null) {
        continue;
      }
      expect(box.x0).toBeGreaterThanOrEqual(0);
      expect(box.y0).toBeGreaterThanOrEqual(0);
      expect(box.x1).toBeLessThanOrEqual(1);
      expect(box.y1).toBeLessThanOrEqual(1);
      expect(box.x1).toBeGreaterThan(box.x0);
      expect(box.y1).toBeGreaterThan(box.y0);
    }
  });
});

describe("round trip", () => {
  it("normalize then denormalize lands within one pixel", () => {
    const rand = lcg(41);
    for (let i = 0; i < 500; i += 1) {
      const w = 64 + Math.floor(rand() * 1536);
      const h = 64 + Math.floor(rand() * 1536);
      const width = 4 + rand() * 60;
      const height = 4 + rand() * 60;
      const rect = {
        x: rand() * (w - width),
        y: rand() * (h - height),
        width,
        height,
      };
      const box = normalizeBox(rect, w, h);
      expect(box).not.toBeNull();
      const back = denormalizeBox(box!, w, h);
      expect(Math.abs(back.x - rect.x)).toBeLessThanOrEqual(1);
      expect(Math.abs(back.y - rect.y)).toBeLessThanOrEqual(1);
      expect(Math.abs(back.width - rect.width)).toBeLessThanOrEqual(1);
      expect(Math.abs(back.height - rect.height)).toBeLessThanOrEqual(1);
    }
  });

  it("wire format survives there and back", () => {
    const box = { x0: 0.125, y0: 0.25, x1: 0.5, y1: 0.875 };
    expect(boxFromArray(boxToArray(box))).toEqual(box);
  });
});
