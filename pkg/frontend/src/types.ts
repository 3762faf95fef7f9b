/** Shared types for the annotation session and the server payloads. */

/** Normalized box, all coordinates in [0, 1] with x0 < x1 and y0 < y1. */
export interface NormBox {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

/** Pixel-space rectangle inside the canvas viewport. */
export interface PixelRect {
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface Prediction {
  className: string;
  score: number;
}

export type BoxStatus = "pending" | "predicted" | "accepted";

/** One drawn box and everything the session knows about it. */
export interface AnnotatedBox {
  id: number;
  box: NormBox;
  status: BoxStatus;
  /** Ranked predictions, highest confidence first; empty until predicted. */
  predictions: Prediction[];
  /** Exactly one class once accepted, null before. */
  chosenClass: string | null;
  /** Inline message from a failed predict; cleared on retry. */
  error: string | null;
  /** Id of the in-flight predict request, null when idle. */
  requestId: number | null;
  /** True once this box's accepted class reached the server. */
  uploaded: boolean;
}

export interface ImageInfo {
  id: string;
  gridH: number;
  gridW: number;
  pixelsH: number;
  pixelsW: number;
  hasPreview: boolean;
}

/** One annotation as the server stores it. */
export interface StoredAnnotation {
  box: [number, number, number, number];
  className: string;
}

export interface SessionState {
  image: ImageInfo | null;
  boxes: AnnotatedBox[];
  /** Counters owned by the reducer so replays assign identical ids. */
  nextBoxId: number;
  nextRequestId: number;
  /** Export buffer: annotations the server confirmed holding. */
  exported: StoredAnnotation[];
  /** Transient status line for the header. */
  notice: string | null;
}

export const initialState: SessionState = {
  image: null,
  boxes: [],
  nextBoxId: 1,
  nextRequestId: 1,
  exported: [],
  notice: null,
};
