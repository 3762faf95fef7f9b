/** DOM wiring: one canvas, one sidebar, the controller does the thinking. */

import { makeClient, type ApiClient } from "./api.js";
import {
  acceptClass,
  acceptTopPrediction,
  completeDrag,
  exportAccepted,
  loadImage,
  makeStore,
  reloadAnnotations,
  retryPredict,
  type Store,
} from "./controller.js";
import type { Point } from "./geometry.js";
import { barWidthPercent, boxCaption, drawBoxes, formatScore } from "./render.js";
import type { ImageInfo, SessionState } from "./types.js";

const SERVER = new URLSearchParams(window.location.search).get("server") ?? "http://127.0.0.1:8008";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

const canvas = el<HTMLCanvasElement>("canvas");
const imageSelect = el<HTMLSelectElement>("image-select");
const boxList = el<HTMLUListElement>("box-list");
const storedList = el<HTMLUListElement>("stored-list");
const noticeLine = el<HTMLElement>("notice");

let preview: HTMLImageElement | null = null;
let images: ImageInfo[] = [];

const client: ApiClient = makeClient(SERVER);
const store: Store = makeStore(render);

function currentImage(): ImageInfo | null {
  return store.getState().image;
}

function render(state: SessionState): void {
  const ctx = canvas.getContext("2d");
  if (ctx !== null) {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (preview !== null && preview.complete) {
      ctx.drawImage(preview, 0, 0, canvas.width, canvas.height);
    } else {
      ctx.fillStyle = "#e5e7eb";
      ctx.fillRect(0, 0, canvas.width, canvas.height);
    }
    drawBoxes(ctx, state, canvas.width, canvas.height);
  }

  boxList.replaceChildren(
    ...state.boxes.map((box) => {
      const item = document.createElement("li");
      const caption = document.createElement("div");
      caption.textContent = `#${box.id} ${boxCaption(
        box.status,
        box.chosenClass,
        box.predictions[0]?.className ?? null,
        box.error,
      )}`;
      item.appendChild(caption);
      if (box.error !== null) {
        const retry = document.createElement("button");
        retry.textContent = "retry";
        retry.addEventListener("click", () => {
          void retryPredict(store, client, box.id);
        });
        item.appendChild(retry);
      }
      for (const prediction of box.predictions) {
        const row = document.createElement("div");
        row.className = "prediction";
        const bar = document.createElement("span");
        bar.className = "bar";
        bar.style.width = `${barWidthPercent(prediction.score)}%`;
        const text = document.createElement("span");
        text.textContent = `${prediction.className} ${formatScore(prediction.score)}`;
        row.append(bar, text);
        row.addEventListener("click", () => {
          acceptClass(store, box.id, prediction.className);
        });
        item.appendChild(row);
      }
      return item;
    }),
  );

  storedList.replaceChildren(
    ...state.exported.map((record) => {
      const item = document.createElement("li");
      const coords = record.box.map((v) => v.toFixed(3)).join(", ");
      item.textContent = `${record.className} [${coords}]`;
      return item;
    }),
  );

  noticeLine.textContent = state.notice ?? "";
}

function canvasPoint(event: MouseEvent): Point {
  const bounds = canvas.getBoundingClientRect();
  return { x: event.clientX - bounds.left, y: event.clientY - bounds.top };
}

let dragStart: Point | null = null;

canvas.addEventListener("mousedown", (event) => {
  dragStart = canvasPoint(event);
});

canvas.addEventListener("mouseup", (event) => {
  if (dragStart === null) {
    return;
  }
  const start = dragStart;
  dragStart = null;
  void completeDrag(store, client, start, canvasPoint(event), canvas.width, canvas.height);
});

document.addEventListener("keydown", (event) => {
  if (event.key === "Enter" || event.key === "a") {
    if (acceptTopPrediction(store)) {
      event.preventDefault();
    }
  }
});

el<HTMLButtonElement>("export").addEventListener("click", () => {
  void exportAccepted(store, client);
});

el<HTMLButtonElement>("reload").addEventListener("click", () => {
  void reloadAnnotations(store, client);
});

imageSelect.addEventListener("change", () => {
  const image = images.find((row) => row.id === imageSelect.value);
  if (image !== undefined) {
    void selectImage(image);
  }
});

async function selectImage(image: ImageInfo): Promise<void> {
  canvas.width = image.pixelsW;
  canvas.height = image.pixelsH;
  preview = null;
  if (image.hasPreview) {
    const img = new Image();
    img.onload = () => {
      preview = img;
      render(store.getState());
    };
    img.src = client.previewUrl(image.id);
  }
  await loadImage(store, client, image);
}

async function boot(): Promise<void> {
  try {
    images = await client.listImages();
  } catch (err) {
    noticeLine.textContent = err instanceof Error ? err.message : String(err);
    return;
  }
  imageSelect.replaceChildren(
    ...images.map((image) => {
      const option = document.createElement("option");
      option.value = image.id;
      option.textContent = image.id;
      return option;
    }),
  );
  const first = images[0];
  if (first !== undefined) {
    imageSelect.value = first.id;
    await selectImage(first);
  }
}

void boot();
