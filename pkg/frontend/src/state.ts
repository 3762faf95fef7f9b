/** Pure session reducer: replaying one event log always rebuilds one state.
 *
 * All ids come from counters inside the state, no clocks or randomness, so
 * the screen is a function of (server responses, user events) alone. Stale
 * predict responses are dropped by request id: a response only lands on
 * the box that still carries its id.
 */

import type {
  AnnotatedBox,
  ImageInfo,
  NormBox,
  Prediction,
  SessionState,
  StoredAnnotation,
} from "./types.js";
import { initialState } from "./types.js";

export type SessionEvent =
  | { kind: "image-loaded"; image: ImageInfo }
  | { kind: "box-drawn"; box: NormBox }
  | { kind: "predict-ok"; requestId: number; predictions: Prediction[] }
  | { kind: "predict-failed"; requestId: number; message: string }
  | { kind: "predict-retried"; boxId: number }
  | { kind: "label-accepted"; boxId: number; className: string }
  | { kind: "box-deleted"; boxId: number }
  | { kind: "export-confirmed"; records: StoredAnnotation[]; boxIds: number[] }
  | { kind: "annotations-loaded"; records: StoredAnnotation[] }
  | { kind: "notice"; message: string | null };

function updateBox(
  state: SessionState,
  boxId: number,
  change: (box: AnnotatedBox) => AnnotatedBox,
): SessionState {
  let touched = false;
  const boxes = state.boxes.map((box) => {
    if (box.id !== boxId) {
      return box;
    }
    touched = true;
    return change(box);
  });
  return touched ? { ...state, boxes } : state;
}

function boxByRequest(state: SessionState, requestId: number): AnnotatedBox | null {
  return state.boxes.find((box) => box.requestId === requestId) ?? null;
}

export function reduce(state: SessionState, event: SessionEvent): SessionState {
  switch (event.kind) {
    case "image-loaded":
      // A new image starts a fresh session; counters carry on so box ids
      // never collide across the whole event log.
      return {
        ...state,
        image: event.image,
        boxes: [],
        exported: [],
        notice: null,
      };

    case "box-drawn": {
      if (state.image === null) {
        return state;
      }
      const box: AnnotatedBox = {
        id: state.nextBoxId,
        box: event.box,
        status: "pending",
        predictions: [],
        chosenClass: null,
        error: null,
        requestId: state.nextRequestId,
        uploaded: false,
      };
      return {
        ...state,
        boxes: [...state.boxes, box],
        nextBoxId: state.nextBoxId + 1,
        nextRequestId: state.nextRequestId + 1,
      };
    }

    case "predict-ok": {
      const target = boxByRequest(state, event.requestId);
      if (target === null) {
        return state; // stale: the box was deleted or re-requested
      }
      return updateBox(state, target.id, (box) => ({
        ...box,
        status: box.status === "accepted" ? "accepted" : "predicted",
        predictions: event.predictions,
        error: null,
        requestId: null,
      }));
    }

    case "predict-failed": {
      const target = boxByRequest(state, event.requestId);
      if (target === null) {
        return state;
      }
      return updateBox(state, target.id, (box) => ({
        ...box,
        error: event.message,
        requestId: null,
      }));
    }

    case "predict-retried": {
      const target = state.boxes.find((box) => box.id === event.boxId);
      if (target === undefined || target.requestId !== null) {
        return state; // unknown box, or one request already in flight
      }
      const retried = updateBox(state, event.boxId, (box) => ({
        ...box,
        error: null,
        requestId: state.nextRequestId,
      }));
      return { ...retried, nextRequestId: state.nextRequestId + 1 };
    }

    case "label-accepted": {
      const target = state.boxes.find((box) => box.id === event.boxId);
      if (target === undefined || target.predictions.length === 0) {
        return state; // nothing to accept before a prediction arrived
      }
      // A second accept replaces the earlier choice and needs re-export.
      return updateBox(state, event.boxId, (box) => ({
        ...box,
        status: "accepted",
        chosenClass: event.className,
        uploaded: false,
      }));
    }

    case "box-deleted":
      return {
        ...state,
        boxes: state.boxes.filter((box) => box.id !== event.boxId),
      };

    case "export-confirmed": {
      const posted = new Set(event.boxIds);
      return {
        ...state,
        exported: event.records,
        boxes: state.boxes.map((box) =>
          posted.has(box.id) ? { ...box, uploaded: true } : box,
        ),
      };
    }

    case "annotations-loaded":
      return { ...state, exported: event.records };

    case "notice":
      return { ...state, notice: event.message };
  }
}

export function replay(events: readonly SessionEvent[]): SessionState {
  return events.reduce(reduce, initialState);
}

/** Boxes with a chosen class, in drawing order: the export payload. */
export function acceptedBoxes(state: SessionState): AnnotatedBox[] {
  return state.boxes.filter(
    (box) => box.status === "accepted" && box.chosenClass !== null,
  );
}

/** Accepted boxes the server does not hold yet. */
export function pendingExport(state: SessionState): AnnotatedBox[] {
  return acceptedBoxes(state).filter((box) => !box.uploaded);
}

/** The newest box that has predictions but no accepted class yet. */
export function latestUndecidedBox(state: SessionState): AnnotatedBox | null {
  for (let i = state.boxes.length - 1; i >= 0; i -= 1) {
    const box = state.boxes[i];
    if (box !== undefined && box.status === "predicted" && box.predictions.length > 0) {
      return box;
    }
  }
  return null;
}
