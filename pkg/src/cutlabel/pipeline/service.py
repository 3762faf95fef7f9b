"""HTTP service for interactive region labeling.

Serves the image list, per-image previews, box predictions from the trained
head, and an append-only annotation store. Model and features are loaded
once at startup and never mutated; annotation appends go through a single
lock so concurrent writers cannot interleave lines.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from cutlabel.errors import DataError
from cutlabel.labeler import LabelerHead, load_checkpoint, predict_box
from cutlabel.pipeline.commands import load_feature_map
from cutlabel.pipeline.config import PipelineConfig, load_class_names, require_dataset
from cutlabel.tensorstore import PatchFeatureMap

_PREDICT_SAMPLES = 7
_DEFAULT_TOP_M = 5
_MAX_BODY = 1 << 20


@dataclass
class ServiceState:
    """Immutable model plus the one mutable thing: the annotation file."""

    head: LabelerHead
    names: list[str]
    fmaps: dict[str, PatchFeatureMap]
    previews: dict[str, Path]
    pixels_per_patch: int
    annotations_path: Path
    write_lock: threading.Lock = field(default_factory=threading.Lock)

    def image_rows(self) -> list[dict]:
        rows = []
        for image_id in sorted(self.fmaps):
            f = self.fmaps[image_id]
            rows.append(
                {
                    "grid_h": f.grid_h,
                    "grid_w": f.grid_w,
                    "has_preview": image_id in self.previews,
                    "id": image_id,
                    "pixels_h": f.grid_h * self.pixels_per_patch,
                    "pixels_w": f.grid_w * self.pixels_per_patch,
                }
            )
        return rows

    def append_annotation(self, record: dict) -> int:
        """Append one JSON line; returns how many lines the file now holds."""
        line = json.dumps(record, sort_keys=True)
        with self.write_lock:
            with open(self.annotations_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
            with open(self.annotations_path, "r", encoding="utf-8") as fh:
                return sum(1 for ln in fh if ln.strip())

    def annotations_for(self, image_id: str) -> list[dict]:
        if not self.annotations_path.exists():
            return []
        out = []
        with self.write_lock:
            lines = self.annotations_path.read_text(encoding="utf-8").splitlines()
        for ln in lines:
            if not ln.strip():
                continue
            record = json.loads(ln)
            if record.get("image_id") == image_id:
                out.append({"box": record["box"], "class": record["class"]})
        return out


def build_state(cfg: PipelineConfig) -> ServiceState:
    """Load everything the service needs; fails fast on missing files."""
    manifest = require_dataset(cfg)
    names = load_class_names(cfg)
    head = load_checkpoint(cfg.checkpoint_dir)
    if head.classes != len(names):
        raise DataError(
            f"checkpoint predicts {head.classes} classes, dataset lists {len(names)}"
        )
    fmaps = {}
    previews = {}
    for entry in manifest.entries:
        if entry.features is None:
            raise DataError(f"{entry.image_id}: manifest row has no feature tensor")
        fmaps[entry.image_id] = load_feature_map(entry.features, entry.image_id)
        if entry.preview is not None and Path(entry.preview).exists():
            previews[entry.image_id] = Path(entry.preview)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return ServiceState(
        head=head,
        names=names,
        fmaps=fmaps,
        previews=previews,
        pixels_per_patch=cfg.pixels_per_patch,
        annotations_path=cfg.annotations_path,
    )


class _BadRequest(Exception):
    """Client-side error; the message goes into the 400 body."""


def _parse_box(raw) -> tuple[float, float, float, float]:
    if not isinstance(raw, (list, tuple)) or len(raw) != 4:
        raise _BadRequest("box must be [x0, y0, x1, y1]")
    try:
        x0, y0, x1, y1 = (float(v) for v in raw)
    except (TypeError, ValueError):
        raise _BadRequest("box coordinates must be numbers") from None
    for v in (x0, y0, x1, y1):
        if not 0.0 <= v <= 1.0:
            raise _BadRequest("box coordinates must lie in [0, 1]")
    if x1 <= x0 or y1 <= y0:
        raise _BadRequest("box must have positive width and height")
    return x0, y0, x1, y1


class AnnotationHandler(BaseHTTPRequestHandler):
    """Routes the fixed endpoint set; everything else is a 404."""

    state: ServiceState
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        pass

    def _send(self, code: int, payload: dict | list, raw: bytes | None = None,
              content_type: str = "application/json") -> None:
        body = raw if raw is not None else (
            json.dumps(payload, sort_keys=True).encode() + b"\n"
        )
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, code: int, message: str) -> None:
        self._send(code, {"error": message})

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        if self.path == "/images":
            self._send(200, {"images": self.state.image_rows()})
            return
        preview = re.fullmatch(r"/images/([^/]+)/preview", self.path)
        if preview:
            image_id = preview.group(1)
            path = self.state.previews.get(image_id)
            if image_id not in self.state.fmaps or path is None:
                self._error(404, f"no preview for {image_id!r}")
                return
            self._send(200, {}, raw=path.read_bytes(), content_type="image/png")
            return
        annotations = re.fullmatch(r"/annotations/([^/]+)", self.path)
        if annotations:
            image_id = annotations.group(1)
            if image_id not in self.state.fmaps:
                self._error(404, f"unknown image {image_id!r}")
                return
            self._send(
                200,
                {"annotations": self.state.annotations_for(image_id), "image_id": image_id},
            )
            return
        self._error(404, f"unknown path {self.path!r}")

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length", 0))
        if length <= 0 or length > _MAX_BODY:
            raise _BadRequest("request needs a JSON body")
        try:
            payload = json.loads(self.rfile.read(length))
        except json.JSONDecodeError:
            raise _BadRequest("body is not valid JSON") from None
        if not isinstance(payload, dict):
            raise _BadRequest("body must be a JSON object")
        return payload

    def _handle_predict(self, payload: dict) -> None:
        image_id = payload.get("image_id")
        fmap = self.state.fmaps.get(image_id)
        if fmap is None:
            self._error(404, f"unknown image {image_id!r}")
            return
        box = _parse_box(payload.get("box"))
        top_m = payload.get("top_m", _DEFAULT_TOP_M)
        if not isinstance(top_m, int) or isinstance(top_m, bool) or top_m < 1:
            raise _BadRequest("top_m must be a positive integer")
        pred = predict_box(self.state.head, fmap, box, samples=_PREDICT_SAMPLES)
        ranked = [
            [self.state.names[cls], score]
            for cls, score in pred.topk(min(top_m, len(self.state.names)))
        ]
        self._send(
            200, {"box": list(box), "image_id": image_id, "predictions": ranked}
        )

    def _handle_annotate(self, payload: dict) -> None:
        image_id = payload.get("image_id")
        if image_id not in self.state.fmaps:
            self._error(404, f"unknown image {image_id!r}")
            return
        box = _parse_box(payload.get("box"))
        cls = payload.get("class")
        if isinstance(cls, str):
            if cls not in self.state.names:
                raise _BadRequest(f"unknown class {cls!r}")
            name = cls
        elif isinstance(cls, int) and not isinstance(cls, bool):
            if not 0 <= cls < len(self.state.names):
                raise _BadRequest(f"class index {cls} out of range")
            name = self.state.names[cls]
        else:
            raise _BadRequest("class must be a name or an index")
        count = self.state.append_annotation(
            {"box": list(box), "class": name, "image_id": image_id}
        )
        self._send(200, {"count": count, "status": "ok"})

    def do_POST(self):
        try:
            if self.path == "/predict":
                self._handle_predict(self._read_json())
            elif self.path == "/annotations":
                self._handle_annotate(self._read_json())
            else:
                self._error(404, f"unknown path {self.path!r}")
        except _BadRequest as exc:
            self._error(400, str(exc))


def make_server(
    cfg: PipelineConfig,
    host: str = "127.0.0.1",
    port: int = 0,
    state: ServiceState | None = None,
) -> ThreadingHTTPServer:
    """Build a ready-to-run server; port 0 picks a free port."""
    if state is None:
        state = build_state(cfg)
    handler = type("BoundHandler", (AnnotationHandler,), {"state": state})
    return ThreadingHTTPServer((host, port), handler)


def cmd_serve(cfg: PipelineConfig, host: str = "127.0.0.1", port: int = 8008) -> None:
    """Run the annotation service until interrupted.

    Prints the bound address before serving, so callers passing port 0
    can learn which free port the OS handed out.
    """
    server = make_server(cfg, host, port)
    bound_host, bound_port = server.server_address[:2]
    print(f"serving on http://{bound_host}:{bound_port}", flush=True)
    try:
        server.serve_forever()
    finally:
        server.server_close()
