import { describe, expect, it } from "vitest";

import {
  acceptedBoxes,
  latestUndecidedBox,
  pendingExport,
  reduce,
  replay,
  type SessionEvent,
} from "../src/state.js";
import { initialState, type ImageInfo, type SessionState } from "../src/types.js";

const IMAGE: ImageInfo = {
  id: "img_0000",
  gridH: 16,
  gridW: 16,
  pixelsH: 128,
  pixelsW: 128,
  hasPreview: true,
};

const BOX = { x0: 0.1, y0: 0.2, x1: 0.5, y1: 0.6 };

function loadAndDraw(): SessionState {
  return replay([
    { kind: "image-loaded", image: IMAGE },
    { kind: "box-drawn", box: BOX },
  ]);
}

describe("box lifecycle", () => {
  it("a drawn box starts pending with a fresh request id", () => {
    const state = loadAndDraw();
    expect(state.boxes).toHaveLength(1);
    const box = state.boxes[0]!;
    expect(box.status).toBe("pending");
    expect(box.predictions).toEqual([]);
    expect(box.requestId).toBe(1);
    expect(state.nextRequestId).toBe(2);
  });

  it("drawing without an image does nothing", () => {
    const state = reduce(initialState, { kind: "box-drawn", box: BOX });
    expect(state.boxes).toHaveLength(0);
  });

  it("a matching prediction lands and clears the request", () => {
    const state = reduce(loadAndDraw(), {
      kind: "predict-ok",
      requestId: 1,
      predictions: [
        { className: "alfa", score: 0.9 },
        { className: "bravo", score: 0.1 },
      ],
    });
    const box = state.boxes[0]!;
    expect(box.status).toBe("predicted");
    expect(box.predictions[0]!.className).toBe("alfa");
    expect(box.requestId).toBeNull();
  });

  it("a failed prediction leaves the box pending with an inline message", () => {
    const state = reduce(loadAndDraw(), {
      kind: "predict-failed",
      requestId: 1,
      message: "connection refused",
    });
    const box = state.boxes[0]!;
    expect(box.status).toBe("pending");
    expect(box.error).toBe("connection refused");
    expect(box.requestId).toBeNull();
  });
});

describe("stale responses", () => {
  it("a response for a deleted box is dropped", () => {
    const deleted = replay([
      { kind: "image-loaded", image: IMAGE },
      { kind: "box-drawn", box: BOX },
      { kind: "box-deleted", boxId: 1 },
    ]);
    const after = reduce(deleted, {
      kind: "predict-ok",
      requestId: 1,
      predictions: [{ className: "alfa", score: 0.9 }],
    });
    expect(after).toEqual(deleted);
  });

  it("a response for a superseded request is dropped", () => {
    const retried = replay([
      { kind: "image-loaded", image: IMAGE },
      { kind: "box-drawn", box: BOX },
      { kind: "predict-failed", requestId: 1, message: "boom" },
      { kind: "predict-retried", boxId: 1 },
    ]);
    expect(retried.boxes[0]!.requestId).toBe(2);
    const stale = reduce(retried, {
      kind: "predict-ok",
      requestId: 1,
      predictions: [{ className: "stale", score: 0.5 }],
    });
    expect(stale.boxes[0]!.predictions).toEqual([]);
    const fresh = reduce(stale, {
      kind: "predict-ok",
      requestId: 2,
      predictions: [{ className: "fresh", score: 0.8 }],
    });
    expect(fresh.boxes[0]!.predictions[0]!.className).toBe("fresh");
  });

  it("at most one request is in flight per box", () => {
    const busy = loadAndDraw();
    const again = reduce(busy, { kind: "predict-retried", boxId: 1 });
    expect(again).toEqual(busy);
    expect(again.boxes[0]!.requestId).toBe(1);
  });
});

describe("accepting labels", () => {
  const predicted: SessionEvent[] = [
    { kind: "image-loaded", image: IMAGE },
    { kind: "box-drawn", box: BOX },
    {
      kind: "predict-ok",
      requestId: 1,
      predictions: [
        { className: "alfa", score: 0.9 },
        { className: "bravo", score: 0.1 },
      ],
    },
  ];

  it("accept stores exactly one chosen class", () => {
    const state = replay([
      ...predicted,
      { kind: "label-accepted", boxId: 1, className: "alfa" },
    ]);
    const box = state.boxes[0]!;
    expect(box.status).toBe("accepted");
    expect(box.chosenClass).toBe("alfa");
    expect(acceptedBoxes(state)).toHaveLength(1);
  });

  it("a second accept replaces the prior class", () => {
    const state = replay([
      ...predicted,
      { kind: "label-accepted", boxId: 1, className: "alfa" },
      { kind: "label-accepted", boxId: 1, className: "bravo" },
    ]);
    expect(state.boxes[0]!.chosenClass).toBe("bravo");
    expect(acceptedBoxes(state)).toHaveLength(1);
  });

  it("accepting before any prediction arrived is a no-op", () => {
    const state = replay([
      { kind: "image-loaded", image: IMAGE },
      { kind: "box-drawn", box: BOX },
      { kind: "label-accepted", boxId: 1, className: "alfa" },
    ]);
    expect(state.boxes[0]!.status).toBe("pending");
    expect(state.boxes[0]!.chosenClass).toBeNull();
  });

  it("latestUndecidedBox picks the newest predicted box", () => {
    const state = replay([
      ...predicted,
      { kind: "box-drawn", box: BOX },
      {
        kind: "predict-ok",
        requestId: 2,
        predictions: [{ className: "charlie", score: 0.7 }],
      },
      { kind: "label-accepted", boxId: 2, className: "charlie" },
    ]);
    expect(latestUndecidedBox(state)?.id).toBe(1);
  });
});

describe("export bookkeeping", () => {
  const accepted: SessionEvent[] = [
    { kind: "image-loaded", image: IMAGE },
    { kind: "box-drawn", box: BOX },
    {
      kind: "predict-ok",
      requestId: 1,
      predictions: [{ className: "alfa", score: 0.9 }],
    },
    { kind: "label-accepted", boxId: 1, className: "alfa" },
  ];

  it("export marks posted boxes and records the server list", () => {
    const record = { box: [0.1, 0.2, 0.5, 0.6] as [number, number, number, number], className: "alfa" };
    const state = replay([
      ...accepted,
      { kind: "export-confirmed", records: [record], boxIds: [1] },
    ]);
    expect(state.exported).toEqual([record]);
    expect(state.boxes[0]!.uploaded).toBe(true);
    expect(pendingExport(state)).toHaveLength(0);
  });

  it("re-accepting an uploaded box queues it again", () => {
    const state = replay([
      ...accepted,
      { kind: "export-confirmed", records: [], boxIds: [1] },
      { kind: "label-accepted", boxId: 1, className: "bravo" },
    ]);
    expect(pendingExport(state).map((b) => b.id)).toEqual([1]);
  });

  it("loading an image resets boxes and the export buffer", () => {
    const state = replay([
      ...accepted,
      { kind: "export-confirmed", records: [], boxIds: [1] },
      { kind: "image-loaded", image: { ...IMAGE, id: "img_0001" } },
    ]);
    expect(state.boxes).toHaveLength(0);
    expect(state.exported).toHaveLength(0);
    expect(state.nextBoxId).toBe(2);
  });
});

describe("replay determinism", () => {
  it("folding the event log equals stepping through it", () => {
    const events: SessionEvent[] = [
      { kind: "image-loaded", image: IMAGE },
      { kind: "box-drawn", box: BOX },
      { kind: "predict-failed", requestId: 1, message: "x" },
      { kind: "predict-retried", boxId: 1 },
      {
        kind: "predict-ok",
        requestId: 2,
        predictions: [{ className: "alfa", score: 0.9 }],
      },
      { kind: "box-drawn", box: { x0: 0.6, y0: 0.6, x1: 0.9, y1: 0.9 } },
      { kind: "box-deleted", boxId: 2 },
      { kind: "label-accepted", boxId: 1, className: "alfa" },
      { kind: "export-confirmed", records: [], boxIds: [1] },
      { kind: "notice", message: "done" },
    ];
    let stepped = initialState;
    for (const event of events) {
      stepped = reduce(stepped, event);
    }
    expect(replay(events)).toEqual(stepped);
    expect(JSON.stringify(replay(events))).toBe(JSON.stringify(stepped));
  });

  it("the reducer never mutates its input", () => {
    const before = replay([
      { kind: "image-loaded", image: IMAGE },
      { kind: "box-drawn", box: BOX },
    ]);
    const snapshot = JSON.parse(JSON.stringify(before));
    reduce(before, {
      kind: "predict-ok",
      requestId: 1,
      predictions: [{ className: "alfa", score: 0.9 }],
    });
    reduce(before, { kind: "box-deleted", boxId: 1 });
    expect(before).toEqual(snapshot);
  });
});
