/** Drivers between gestures, the reducer, and the HTTP client.
 *
 * Everything here is DOM-free so the whole interaction layer is testable
 * with a fake client: drags that are too small never reach the network,
 * each box has at most one predict in flight, and export posts only the
 * accepted boxes the server does not hold yet.
 */

import type { ApiClient } from "./api.js";
import {
  dragToRect,
  isDegenerateDrag,
  normalizeBox,
  type Point,
} from "./geometry.js";
import {
  latestUndecidedBox,
  pendingExport,
  reduce,
  type SessionEvent,
} from "./state.js";
import type { ImageInfo, NormBox, SessionState } from "./types.js";
import { initialState } from "./types.js";

export interface Store {
  getState(): SessionState;
  dispatch(event: SessionEvent): void;
}

export function makeStore(
  onChange?: (state: SessionState) => void,
): Store {
  let state = initialState;
  return {
    getState: () => state,
    dispatch: (event) => {
      state = reduce(state, event);
      onChange?.(state);
    },
  };
}

function messageOf(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}

async function runPredict(
  store: Store,
  client: ApiClient,
  imageId: string,
  box: NormBox,
  requestId: number,
): Promise<void> {
  try {
    const predictions = await client.predict(imageId, box);
    store.dispatch({ kind: "predict-ok", requestId, predictions });
  } catch (err) {
    store.dispatch({ kind: "predict-failed", requestId, message: messageOf(err) });
  }
}

/** Select an image: resets the session and pulls its stored annotations. */
export async function loadImage(
  store: Store,
  client: ApiClient,
  image: ImageInfo,
): Promise<void> {
  store.dispatch({ kind: "image-loaded", image });
  try {
    const records = await client.loadAnnotations(image.id);
    store.dispatch({ kind: "annotations-loaded", records });
  } catch (err) {
    store.dispatch({ kind: "notice", message: messageOf(err) });
  }
}

/**
 * Finish a drag: create the box and auto-request its predictions.
 *
 * Degenerate drags (under the pixel minimum in either dimension) and drags
 * entirely outside the viewport do nothing at all, network included.
 */
export async function completeDrag(
  store: Store,
  client: ApiClient,
  start: Point,
  end: Point,
  viewWidth: number,
  viewHeight: number,
): Promise<void> {
  if (isDegenerateDrag(start, end)) {
    return;
  }
  const box = normalizeBox(dragToRect(start, end), viewWidth, viewHeight);
  const image = store.getState().image;
  if (box === null || image === null) {
    return;
  }
  const requestId = store.getState().nextRequestId;
  store.dispatch({ kind: "box-drawn", box });
  await runPredict(store, client, image.id, box, requestId);
}

/** Re-request predictions for a failed box; no-op while one is in flight. */
export async function retryPredict(
  store: Store,
  client: ApiClient,
  boxId: number,
): Promise<void> {
  const image = store.getState().image;
  if (image === null) {
    return;
  }
  const requestId = store.getState().nextRequestId;
  store.dispatch({ kind: "predict-retried", boxId });
  const box = store.getState().boxes.find((b) => b.id === boxId);
  if (box === undefined || box.requestId !== requestId) {
    return; // unknown box, or an earlier request is still pending
  }
  await runPredict(store, client, image.id, box.box, requestId);
}

/** Keyboard flow: accept the top-ranked class of the newest undecided box. */
export function acceptTopPrediction(store: Store): boolean {
  const box = latestUndecidedBox(store.getState());
  const top = box?.predictions[0];
  if (box == null || top === undefined) {
    return false;
  }
  store.dispatch({
    kind: "label-accepted",
    boxId: box.id,
    className: top.className,
  });
  return true;
}

export function acceptClass(store: Store, boxId: number, className: string): void {
  store.dispatch({ kind: "label-accepted", boxId, className });
}

/**
 * Post every not-yet-uploaded accepted box, then reload the server's list
 * so the export buffer shows exactly what the store holds.
 */
export async function exportAccepted(
  store: Store,
  client: ApiClient,
): Promise<void> {
  const image = store.getState().image;
  if (image === null) {
    return;
  }
  const queue = pendingExport(store.getState());
  const postedIds: number[] = [];
  try {
    for (const box of queue) {
      await client.saveAnnotation(image.id, box.box, box.chosenClass as string);
      postedIds.push(box.id);
    }
    const records = await client.loadAnnotations(image.id);
    store.dispatch({ kind: "export-confirmed", records, boxIds: postedIds });
  } catch (err) {
    // Whatever reached the server stays marked uploaded on the next load;
    // the failure is surfaced without guessing the server's state.
    store.dispatch({ kind: "notice", message: messageOf(err) });
  }
}

/** Pull the stored annotations for the current image. */
export async function reloadAnnotations(
  store: Store,
  client: ApiClient,
): Promise<void> {
  const image = store.getState().image;
  if (image === null) {
    return;
  }
  try {
    const records = await client.loadAnnotations(image.id);
    store.dispatch({ kind: "annotations-loaded", records });
  } catch (err) {
    store.dispatch({ kind: "notice", message: messageOf(err) });
  }
}
