/** Typed client over the annotation service's HTTP contract. */

import { boxToArray } from "./geometry.js";
import type { ImageInfo, NormBox, Prediction, StoredAnnotation } from "./types.js";

export const DEFAULT_TOP_M = 5;

/** Server-side rejection: carries the HTTP status and the server message. */
export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
  }
}

export interface ApiClient {
  listImages(): Promise<ImageInfo[]>;
  predict(imageId: string, box: NormBox, topM?: number): Promise<Prediction[]>;
  saveAnnotation(imageId: string, box: NormBox, className: string): Promise<number>;
  loadAnnotations(imageId: string): Promise<StoredAnnotation[]>;
  previewUrl(imageId: string): string;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parseJson(response: Response): Promise<unknown> {
  const text = await response.text();
  let payload: unknown = null;
  try {
    payload = JSON.parse(text);
  } catch {
    payload = null;
  }
  if (!response.ok) {
    const message =
      payload !== null &&
      typeof payload === "object" &&
      typeof (payload as { error?: unknown }).error === "string"
        ? (payload as { error: string }).error
        : `request failed with status ${response.status}`;
    throw new ApiError(response.status, message);
  }
  if (payload === null || typeof payload !== "object") {
    throw new ApiError(response.status, "response body is not a JSON object");
  }
  return payload;
}

export function makeClient(baseUrl: string, fetchFn?: FetchLike): ApiClient {
  const base = baseUrl.replace(/\/+$/, "");
  const doFetch: FetchLike = fetchFn ?? ((input, init) => fetch(input, init));

  async function get(path: string): Promise<unknown> {
    return parseJson(await doFetch(base + path));
  }

  async function post(path: string, body: unknown): Promise<unknown> {
    const response = await doFetch(base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return parseJson(response);
  }

  return {
    async listImages(): Promise<ImageInfo[]> {
      const payload = (await get("/images")) as {
        images: Array<{
          id: string;
          grid_h: number;
          grid_w: number;
          pixels_h: number;
          pixels_w: number;
          has_preview: boolean;
        }>;
      };
      return payload.images.map((row) => ({
        id: row.id,
        gridH: row.grid_h,
        gridW: row.grid_w,
        pixelsH: row.pixels_h,
        pixelsW: row.pixels_w,
        hasPreview: row.has_preview,
      }));
    },

    async predict(imageId, box, topM = DEFAULT_TOP_M): Promise<Prediction[]> {
      const payload = (await post("/predict", {
        image_id: imageId,
        box: boxToArray(box),
        top_m: topM,
      })) as { predictions: Array<[string, number]> };
      return payload.predictions.map(([className, score]) => ({ className, score }));
    },

    async saveAnnotation(imageId, box, className): Promise<number> {
      const payload = (await post("/annotations", {
        image_id: imageId,
        box: boxToArray(box),
        class: className,
      })) as { count: number };
      return payload.count;
    },

    async loadAnnotations(imageId): Promise<StoredAnnotation[]> {
      const payload = (await get(`/annotations/${encodeURIComponent(imageId)}`)) as {
        annotations: Array<{ box: [number, number, number, number]; class: string }>;
      };
      return payload.annotations.map((row) => ({
        box: row.box,
        className: row.class,
      }));
    },

    previewUrl(imageId): string {
      return `${base}/images/${encodeURIComponent(imageId)}/preview`;
    },
  };
}
