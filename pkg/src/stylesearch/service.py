"""HTTP service exposing search over a corpus and its trained artifacts.

The service loads everything at startup (corpus, vector index, style
embeddings, query encoder, word vectors) and treats it as immutable;
request handling is a pure function of the request and that state.
Uploaded "images" are accepted as pre-extracted bundles (detection rows
plus ROI feature vectors), keeping feature extraction out of process.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import blend as blend_mod
from .corpus import Corpus, load_corpus, tokenize
from .detect import Detection, DetectionError, filter_detections_indexed, room_query
from .query_encoder import (
    EncoderError,
    EncoderModel,
    WordVectors,
    load_encoder,
    load_word_vectors,
    text_search,
)
from .style_embed import EmbeddingTable, load_embeddings
from .vecindex import VectorIndex, load_index

DEFAULT_K = 6  # six object classes drive the headline hit@6 metric


class ServiceError(RuntimeError):
    """Raised when startup artifacts are missing or inconsistent."""


@dataclass(eq=False)
class ServiceState:
    root: Path
    corpus: Corpus
    index: VectorIndex
    table: EmbeddingTable | None
    encoder: EncoderModel | None
    words: WordVectors | None
    fingerprints: dict[str, str]
    confidence_threshold: float = 0.1
    iou_threshold: float = 0.5


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def load_state(
    root,
    index_file: str = "index.ssix",
    embeddings_file: str = "style.emb",
    encoder_file: str = "encoder.bin",
    word_vectors_file: str = "wordvecs.txt",
    confidence_threshold: float = 0.1,
    iou_threshold: float = 0.5,
) -> ServiceState:
    """Load all artifacts, failing with explicit path diagnostics."""
    root = Path(root)
    if not (root / "corpus.json").exists():
        raise ServiceError(f"missing corpus manifest: {root / 'corpus.json'}")
    corpus = load_corpus(root)
    index_path = root / index_file
    if not index_path.exists():
        raise ServiceError(f"missing vector index: {index_path} (run build-index)")
    index = load_index(index_path)
    fingerprints = {
        "corpus": _sha256(root / "corpus.json"),
        "index": _sha256(index_path),
    }
    table = encoder = words = None
    emb_path, enc_path, wv_path = root / embeddings_file, root / encoder_file, root / word_vectors_file
    if emb_path.exists() and enc_path.exists() and wv_path.exists():
        table = load_embeddings(emb_path)
        encoder = load_encoder(enc_path)
        words = load_word_vectors(wv_path)
        fingerprints["embeddings"] = _sha256(emb_path)
        fingerprints["encoder"] = _sha256(enc_path)
        fingerprints["word_vectors"] = _sha256(wv_path)
    return ServiceState(
        root=root,
        corpus=corpus,
        index=index,
        table=table,
        encoder=encoder,
        words=words,
        fingerprints=fingerprints,
        confidence_threshold=confidence_threshold,
        iou_threshold=iou_threshold,
    )


class DetectionIn(BaseModel):
    class_label: str
    x: float
    y: float
    width: float
    height: float
    confidence: float


class UploadBundle(BaseModel):
    detections: list[DetectionIn]
    roi_features: list[list[float]]


class SearchRequest(BaseModel):
    room_id: str | None = None
    bundle: UploadBundle | None = None
    text_query: str | None = None
    k: int = DEFAULT_K
    strategy: str = blend_mod.STRATEGY_FEATURE
    class_filter: str | None = None


def _detection_payload(det: Detection, source_row: int | None = None) -> dict:
    doc = {
        "class_label": det.class_label,
        "x": det.x,
        "y": det.y,
        "width": det.width,
        "height": det.height,
        "confidence": det.confidence,
    }
    if source_row is not None:
        doc["source_row"] = source_row
    return doc


def _entry_payload(state: ServiceState, entry) -> dict:
    item = state.corpus.items.get(entry.item_id)
    return {
        "item_id": entry.item_id,
        "score": entry.score,
        "modality": entry.modality,
        "name": item.name if item else "",
        "class_label": item.class_label if item else "",
        "image": item.image_ref if item else None,
    }


def handle_search(state: ServiceState, req: SearchRequest) -> dict:
    """Run detect-scoped visual search, text search and blending."""
    if not 1 <= req.k <= 100:
        raise HTTPException(400, detail={"code": "bad_k",
                                         "message": f"k must be in [1, 100], got {req.k}"})
    if req.room_id is None and req.bundle is None and not req.text_query:
        raise HTTPException(400, detail={"code": "no_modality",
                                         "message": "provide a room, a bundle or a text query"})
    if req.strategy not in (blend_mod.STRATEGY_SIMPLE, blend_mod.STRATEGY_FEATURE):
        raise HTTPException(400, detail={"code": "bad_strategy",
                                         "message": f"unknown strategy '{req.strategy}'"})

    t0 = time.perf_counter()
    notices: list[str] = []

    detections: list[Detection] = []
    roi_features: np.ndarray | None = None
    room = None
    if req.room_id is not None:
        room = state.corpus.rooms.get(req.room_id)
        if room is None:
            raise HTTPException(404, detail={"code": "unknown_room",
                                             "message": f"unknown room '{req.room_id}'"})
        detections = room.detections or []
        roi_features = room.roi_features
    elif req.bundle is not None:
        try:
            detections = [
                Detection(d.class_label, d.x, d.y, d.width, d.height, d.confidence)
                for d in req.bundle.detections
            ]
        except DetectionError as exc:
            raise HTTPException(400, detail={"code": "bad_detection", "message": str(exc)})
        roi_features = np.asarray(req.bundle.roi_features, dtype=np.float64)
        if roi_features.ndim != 2 or len(roi_features) != len(detections):
            raise HTTPException(400, detail={
                "code": "bad_bundle",
                "message": "roi_features must hold one row per detection"})

    text_results = None
    if req.text_query:
        if state.encoder is None:
            raise HTTPException(400, detail={"code": "text_unavailable",
                                             "message": "no trained text encoder loaded"})
        tokens = tokenize(req.text_query)
        try:
            text_results = text_search(state.encoder, state.words, state.table, tokens, req.k)
        except EncoderError as exc:
            raise HTTPException(422, detail={"code": "all_oov",
                                             "message": str(exc),
                                             "oov_tokens": exc.oov_tokens})

    t_text = time.perf_counter()

    groups = []
    if detections and roi_features is not None:
        kept = filter_detections_indexed(
            detections, state.confidence_threshold, state.iou_threshold
        )
        kept.sort(key=lambda pair: (-pair[0].confidence, pair[1]))
        if req.class_filter is not None:
            kept = [(d, s) for d, s in kept if d.class_label == req.class_filter]
        owner = room if room is not None else _UploadRoom()
        try:
            per_det = room_query(owner, kept, roi_features, state.index, req.k)
        except DetectionError as exc:
            raise HTTPException(400, detail={"code": "missing_roi", "message": str(exc)})
        visual_features = {
            i: it.visual_feature for i, it in state.corpus.items.items()
            if it.visual_feature is not None
        }
        for (det, src), (_, visual_list) in zip(kept, per_det):
            fallback = bool(state.index.classes()) and not state.index.has_class(det.class_label)
            if fallback:
                notices.append(f"class '{det.class_label}' has no partition; full-index fallback")
            if text_results is not None:
                results = blend_mod.blend(
                    req.strategy,
                    visual_list,
                    text_results,
                    req.k,
                    query_feature=roi_features[src],
                    visual_features=visual_features,
                )
            else:
                results = visual_list
            groups.append({
                "detection": _detection_payload(det, src),
                "fallback": fallback,
                "results": [_entry_payload(state, e) for e in results],
            })
    elif text_results is not None:
        groups.append({
            "detection": None,
            "fallback": False,
            "results": [_entry_payload(state, e) for e in text_results],
        })

    t1 = time.perf_counter()
    return {
        "groups": groups,
        "strategy": req.strategy,
        "k": req.k,
        "notices": notices,
        "timing": {
            "text_ms": round((t_text - t0) * 1000, 3),
            "total_ms": round((t1 - t0) * 1000, 3),
        },
    }


class _UploadRoom:
    id = "<upload>"


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="stylesearch")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "fingerprints": state.fingerprints,
            "items": len(state.corpus.items),
            "rooms": len(state.corpus.rooms),
            "text_search": state.encoder is not None,
        }

    @app.get("/rooms")
    def rooms():
        return [
            {
                "id": r.id,
                "category": r.category,
                "description": r.description,
                "image": r.image_ref,
                "detections": len(r.detections or []),
            }
            for r in (state.corpus.rooms[k] for k in sorted(state.corpus.rooms))
        ]

    @app.get("/rooms/{room_id}")
    def room_detail(room_id: str):
        room = state.corpus.rooms.get(room_id)
        if room is None:
            raise HTTPException(404, detail={"code": "unknown_room",
                                             "message": f"unknown room '{room_id}'"})
        raw = room.detections or []
        kept = filter_detections_indexed(
            raw, state.confidence_threshold, state.iou_threshold
        )
        return {
            "id": room.id,
            "category": room.category,
            "description": room.description,
            "image": room.image_ref,
            "items": sorted(room.ground_truth),
            "detections": [_detection_payload(d) for d in raw],
            "kept_detections": [_detection_payload(d, s) for d, s in kept],
        }

    @app.get("/items/{item_id}")
    def item_detail(item_id: str):
        item = state.corpus.items.get(item_id)
        if item is None:
            raise HTTPException(404, detail={"code": "unknown_item",
                                             "message": f"unknown item '{item_id}'"})
        return {
            "id": item.id,
            "class_label": item.class_label,
            "name": item.name,
            "description": item.description,
            "image": item.image_ref,
        }

    @app.post("/search")
    def search(req: SearchRequest):
        return handle_search(state, req)

    @app.get("/eval/reports")
    def eval_reports():
        reports_dir = state.root / "reports"
        out = []
        if reports_dir.is_dir():
            for path in sorted(reports_dir.glob("*.json")):
                out.append({"name": path.name, "report": json.loads(path.read_text())})
        return out

    app.mount("/media", StaticFiles(directory=str(state.root)), name="media")
    return app
