/** Presentation helpers: formatting is pure, drawing takes a 2D context. */

import { denormalizeBox } from "./geometry.js";
import type { BoxStatus, SessionState } from "./types.js";

export function formatScore(score: number): string {
  return `${(score * 100).toFixed(1)}%`;
}

/** Width of a confidence bar in percent, clamped to the track. */
export function barWidthPercent(score: number): number {
  return Math.min(100, Math.max(0, score * 100));
}

export function statusColor(status: BoxStatus): string {
  switch (status) {
    case "pending":
      return "#d97706";
    case "predicted":
      return "#2563eb";
    case "accepted":
      return "#16a34a";
  }
}

/** One-line caption for a box in the sidebar list. */
export function boxCaption(
  status: BoxStatus,
  chosenClass: string | null,
  topClass: string | null,
  error: string | null,
): string {
  if (error !== null) {
    return `error: ${error}`;
  }
  if (status === "accepted" && chosenClass !== null) {
    return `accepted: ${chosenClass}`;
  }
  if (status === "predicted" && topClass !== null) {
    return `top: ${topClass}`;
  }
  return "predicting…";
}

export function drawBoxes(
  ctx: CanvasRenderingContext2D,
  state: SessionState,
  viewWidth: number,
  viewHeight: number,
): void {
  ctx.lineWidth = 2;
  ctx.font = "12px sans-serif";
  for (const annotated of state.boxes) {
    const rect = denormalizeBox(annotated.box, viewWidth, viewHeight);
    const color = statusColor(annotated.status);
    ctx.strokeStyle = color;
    ctx.strokeRect(rect.x, rect.y, rect.width, rect.height);
    const label =
      annotated.chosenClass ??
      annotated.predictions[0]?.className ??
      `#${annotated.id}`;
    ctx.fillStyle = color;
    ctx.fillText(label, rect.x + 3, Math.max(12, rect.y - 4));
  }
}
