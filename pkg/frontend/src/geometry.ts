/** Drag gestures, normalized boxes, and the pixel round trip. */

import type { NormBox, PixelRect } from "./types.js";

/** Drags narrower or shorter than this many pixels are not boxes. */
export const MIN_DRAG_PX = 4;

export interface Point {
  x: number;
  y: number;
}

/** Orient a drag into a non-negative rectangle regardless of direction. */
export function dragToRect(start: Point, end: Point): PixelRect {
  const x = Math.min(start.x, end.x);
  const y = Math.min(start.y, end.y);
  return {
    x,
    y,
    width: Math.abs(end.x - start.x),
    height: Math.abs(end.y - start.y),
  };
}

/** True when a drag is too small to mean a box (a click or a slip). */
export function isDegenerateDrag(start: Point, end: Point): boolean {
  const rect = dragToRect(start, end);
  return rect.width < MIN_DRAG_PX || rect.height < MIN_DRAG_PX;
}

function clamp01(v: number): number {
  return Math.min(1, Math.max(0, v));
}

/**
 * Normalize a viewport rectangle to [0, 1] image coordinates.
 *
 * The rectangle is clamped to the viewport first, so drags that leave the
 * canvas still produce a valid box. Returns null when clamping collapses
 * the rectangle to zero area (fully outside the viewport).
 */
export function normalizeBox(
  rect: PixelRect,
  viewWidth: number,
  viewHeight: number,
): NormBox | null {
  if (viewWidth <= 0 || viewHeight <= 0) {
    return null;
  }
  const x0 = clamp01(rect.x / viewWidth);
  const y0 = clamp01(rect.y / viewHeight);
  const x1 = clamp01((rect.x + rect.width) / viewWidth);
  const y1 = clamp01((rect.y + rect.height) / viewHeight);
  if (x1 <= x0 || y1 <= y0) {
    return null;
  }
  return { x0, y0, x1, y1 };
}

/** Map a normalized box back to viewport pixels. */
export function denormalizeBox(
  box: NormBox,
  viewWidth: number,
  viewHeight: number,
): PixelRect {
  return {
    x: box.x0 * viewWidth,
    y: box.y0 * viewHeight,
    width: (box.x1 - box.x0) * viewWidth,
    height: (box.y1 - box.y0) * viewHeight,
  };
}

/** Box as the wire format expects it. */
export function boxToArray(box: NormBox): [number, number, number, number] {
  return [box.x0, box.y0, box.x1, box.y1];
}

export function boxFromArray(raw: [number, number, number, number]): NormBox {
  return { x0: raw[0], y0: raw[1], x1: raw[2], y1: raw[3] };
}

/** Loose equality for boxes that went through serialization. */
export function boxesAlmostEqual(a: NormBox, b: NormBox, tol = 1e-9): boolean {
  return (
    Math.abs(a.x0 - b.x0) <= tol &&
    Math.abs(a.y0 - b.y0) <= tol &&
    Math.abs(a.x1 - b.x1) <= tol &&
    Math.abs(a.y1 - b.y1) <= tol
  );
}
