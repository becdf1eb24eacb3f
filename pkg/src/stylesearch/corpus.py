"""Dataset schema: rooms, items, ground truth, feature attachments.

A corpus lives in a directory with a ``corpus.json`` manifest plus
feature / detection / ROI files referenced by relative path. The module
also builds item co-occurrence matrices and generates deterministic
synthetic corpora used as test substrate throughout the suite.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .detect import Detection, load_detections, save_detections
from .vectors import read_vectors, write_vectors

DEFAULT_CLASSES = ["chair", "table", "sofa", "bed", "wall_clock", "pottedplant"]
DEFAULT_CATEGORIES = ["kitchen", "living_room", "bedroom", "children_room", "office"]

_TOKEN_RE = re.compile(r"[a-z0-9_]+")


class CorpusError(ValueError):
    """Raised for schema violations, dangling references or bad files."""


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace/punctuation (underscores kept)."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(eq=False)
class Item:
    id: str
    class_label: str
    name: str = ""
    description: list[str] = field(default_factory=list)
    image_ref: str | None = None
    visual_feature: np.ndarray | None = None
    style_embedding: np.ndarray | None = None

    def __post_init__(self):
        if not self.id:
            raise CorpusError("item with empty id")
        if not self.class_label:
            raise CorpusError(f"item '{self.id}': empty class label")


@dataclass(eq=False)
class Room:
    id: str
    category: str
    description: list[str] = field(default_factory=list)
    image_ref: str | None = None
    ground_truth: set[str] = field(default_factory=set)
    detections: list[Detection] | None = None
    roi_features: np.ndarray | None = None
    visual_feature: np.ndarray | None = None

    def __post_init__(self):
        if not self.id:
            raise CorpusError("room with empty id")


@dataclass(eq=False)
class Corpus:
    items: dict[str, Item]
    rooms: dict[str, Room]
    meta: dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        if not self.items:
            raise CorpusError("corpus has no items")
        for room in self.rooms.values():
            for item_id in room.ground_truth:
                if item_id not in self.items:
                    raise CorpusError(
                        f"room '{room.id}' references unknown item '{item_id}'"
                    )
        declared = self.meta.get("feature_dim")
        if declared is not None:
            dim = int(declared)
            for item in self.items.values():
                if item.visual_feature is not None and item.visual_feature.shape[0] != dim:
                    raise CorpusError(
                        f"item '{item.id}': feature dim "
                        f"{item.visual_feature.shape[0]} != declared {dim}"
                    )


def load_corpus(root) -> Corpus:
    """Load and fully validate a corpus directory."""
    root = Path(root)
    manifest = root / "corpus.json"
    if not manifest.exists():
        raise CorpusError(f"missing {manifest}")
    try:
        doc = json.loads(manifest.read_text())
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{manifest}: {exc}") from exc

    items: dict[str, Item] = {}
    for rec in doc.get("items", []):
        try:
            item = Item(
                id=rec["id"],
                class_label=rec["class"],
                name=rec.get("name", ""),
                description=list(rec.get("description", [])),
                image_ref=rec.get("image"),
            )
        except KeyError as exc:
            raise CorpusError(f"item record missing field {exc}: {rec}") from exc
        if item.id in items:
            raise CorpusError(f"duplicate item id '{item.id}'")
        if rec.get("feature_file"):
            vecs = read_vectors(root / rec["feature_file"])
            if vecs.shape[0] != 1:
                raise CorpusError(
                    f"item '{item.id}': feature file holds {vecs.shape[0]} vectors"
                )
            item.visual_feature = vecs[0]
        items[item.id] = item

    rooms: dict[str, Room] = {}
    for rec in doc.get("rooms", []):
        try:
            room = Room(
                id=rec["id"],
                category=rec.get("category", ""),
                description=list(rec.get("description", [])),
                image_ref=rec.get("image"),
                ground_truth=set(rec.get("items", [])),
            )
        except KeyError as exc:
            raise CorpusError(f"room record missing field {exc}: {rec}") from exc
        if room.id in rooms:
            raise CorpusError(f"duplicate room id '{room.id}'")
        if rec.get("detections_file"):
            room.detections = load_detections(root / rec["detections_file"])
        if rec.get("roi_file"):
            room.roi_features = read_vectors(root / rec["roi_file"])
            n_det = len(room.detections or [])
            if room.roi_features.shape[0] != n_det:
                raise CorpusError(
                    f"room '{room.id}': {room.roi_features.shape[0]} ROI rows "
                    f"for {n_det} detections"
                )
        if rec.get("feature_file"):
            vecs = read_vectors(root / rec["feature_file"])
            room.visual_feature = vecs[0]
        rooms[room.id] = room

    corpus = Corpus(items=items, rooms=rooms, meta=dict(doc.get("meta", {})))
    corpus.validate()
    return corpus


def save_corpus(corpus: Corpus, root) -> None:
    """Write the manifest and all attached feature/detection files."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    (root / "features").mkdir(exist_ok=True)
    (root / "detections").mkdir(exist_ok=True)

    item_recs = []
    for item_id in sorted(corpus.items):
        item = corpus.items[item_id]
        rec = {
            "id": item.id,
            "class": item.class_label,
            "name": item.name,
            "description": item.description,
        }
        if item.image_ref:
            rec["image"] = item.image_ref
        if item.visual_feature is not None:
            rel = f"features/item_{item.id}.bin"
            write_vectors(root / rel, item.visual_feature.reshape(1, -1))
            rec["feature_file"] = rel
        item_recs.append(rec)

    room_recs = []
    for room_id in sorted(corpus.rooms):
        room = corpus.rooms[room_id]
        rec = {
            "id": room.id,
            "category": room.category,
            "description": room.description,
            "items": sorted(room.ground_truth),
        }
        if room.image_ref:
            rec["image"] = room.image_ref
        if room.detections is not None:
            rel = f"detections/{room.id}.txt"
            save_detections(root / rel, room.detections)
            rec["detections_file"] = rel
        if room.roi_features is not None:
            rel = f"features/roi_{room.id}.bin"
            write_vectors(root / rel, room.roi_features)
            rec["roi_file"] = rel
        if room.visual_feature is not None:
            rel = f"features/room_{room.id}.bin"
            write_vectors(root / rel, room.visual_feature.reshape(1, -1))
            rec["feature_file"] = rel
        room_recs.append(rec)

    doc = {"meta": corpus.meta, "items": item_recs, "rooms": room_recs}
    with open(root / "corpus.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class CooccurrenceMatrix:
    """Symmetric room co-occurrence counts over the corpus item set."""

    ids: tuple[str, ...]
    counts: np.ndarray  # (n, n) int64; diagonal = per-item room frequency

    def index_of(self, item_id: str) -> int:
        try:
            return self.ids.index(item_id)
        except ValueError:
            raise CorpusError(f"unknown item '{item_id}'") from None

    def count(self, f1: str, f2: str) -> int:
        return int(self.counts[self.index_of(f1), self.index_of(f2)])

    def max_offdiag(self) -> int:
        if len(self.ids) < 2:
            return 0
        mask = ~np.eye(len(self.ids), dtype=bool)
        return int(self.counts[mask].max()) if mask.any() else 0


def build_cooccurrence(corpus: Corpus) -> CooccurrenceMatrix:
    """Count, per item pair, the rooms whose ground truth contains both.

    The diagonal holds each item's room frequency; style similarity
    normalizes over distinct pairs only.
    """
    ids = tuple(sorted(corpus.items))
    pos = {item_id: i for i, item_id in enumerate(ids)}
    counts = np.zeros((len(ids), len(ids)), dtype=np.int64)
    for room in corpus.rooms.values():
        members = sorted(pos[i] for i in room.ground_truth)
        for a in members:
            counts[a, a] += 1
        for ai, a in enumerate(members):
            for b in members[ai + 1:]:
                counts[a, b] += 1
                counts[b, a] += 1
    return CooccurrenceMatrix(ids=ids, counts=counts)


@dataclass(frozen=True)
class SynthSpec:
    clusters: int = 2
    items_per_cluster: int = 6
    rooms_per_cluster: int = 10
    feature_dim: int = 16
    noise: float = 0.05
    classes: tuple[str, ...] = tuple(DEFAULT_CLASSES)
    categories: tuple[str, ...] = tuple(DEFAULT_CATEGORIES)
    word_dim: int = 16

    def validate(self) -> None:
        if self.clusters < 1 or self.items_per_cluster < 1:
            raise CorpusError("synth spec needs at least one cluster and one item")
        if self.rooms_per_cluster < 0 or self.feature_dim < 2:
            raise CorpusError("synth spec: bad room count or feature dim")


_STYLE_WORDS = [
    "decorative", "black", "white", "smooth", "cosy", "fabric", "colourful",
    "minimal", "rustic", "modern", "bright", "soft",
]


def _f32(a: np.ndarray) -> np.ndarray:
    # Quantize to float32 so in-memory vectors match their on-disk form.
    return a.astype(np.float32).astype(np.float64)


def synth_corpus(spec: SynthSpec, seed: int) -> Corpus:
    """Generate a deterministic clustered corpus.

    Items of the same cluster share nearby visual features and co-occur
    in rooms; clusters never mix, so inter-cluster co-occurrence is zero.
    Each room carries detections for its ground-truth items (disjoint
    boxes), one sub-threshold junk detection, matching ROI features and
    a whole-image feature.
    """
    spec.validate()
    rng = np.random.default_rng(seed)
    items: dict[str, Item] = {}
    rooms: dict[str, Room] = {}

    centers = rng.normal(0.0, 1.0, size=(spec.clusters, spec.feature_dim))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)

    cluster_items: list[list[str]] = []
    for c in range(spec.clusters):
        token = f"style{c}"
        member_ids = []
        for j in range(spec.items_per_cluster):
            item_id = f"c{c}i{j}"
            cls = spec.classes[j % len(spec.classes)]
            feat = centers[c] + spec.noise * rng.normal(size=spec.feature_dim)
            style_word = _STYLE_WORDS[(c * spec.items_per_cluster + j) % len(_STYLE_WORDS)]
            items[item_id] = Item(
                id=item_id,
                class_label=cls,
                name=f"{token} {cls} {j}",
                description=[token, cls, style_word],
                visual_feature=_f32(feat),
            )
            member_ids.append(item_id)
        cluster_items.append(member_ids)

    for c in range(spec.clusters):
        token = f"style{c}"
        members = cluster_items[c]
        for r in range(spec.rooms_per_cluster):
            room_id = f"c{c}r{r}"
            gt_size = int(rng.integers(2, len(members) + 1)) if len(members) >= 2 else 1
            gt = sorted(rng.choice(members, size=gt_size, replace=False))
            category = spec.categories[r % len(spec.categories)]
            dets, roi_rows = [], []
            for slot, item_id in enumerate(gt):
                item = items[item_id]
                conf = float(rng.uniform(0.3, 0.95))
                dets.append(Detection(item.class_label, 120.0 * slot, 10.0, 100.0, 100.0, conf))
                roi = item.visual_feature + spec.noise * rng.normal(size=spec.feature_dim)
                roi_rows.append(roi)
            # Junk detection below the confidence threshold, overlapping slot 0.
            dets.append(Detection(spec.classes[0], 10.0, 20.0, 100.0, 100.0, 0.05))
            roi_rows.append(rng.normal(size=spec.feature_dim))
            gt_feats = np.stack([items[i].visual_feature for i in gt])
            whole = gt_feats.mean(axis=0) + 2 * spec.noise * rng.normal(size=spec.feature_dim)
            rooms[room_id] = Room(
                id=room_id,
                category=category,
                description=[token, category],
                ground_truth=set(gt),
                detections=dets,
                roi_features=_f32(np.stack(roi_rows)),
                visual_feature=_f32(whole),
            )

    meta = {
        "feature_dim": str(spec.feature_dim),
        "synth_seed": str(seed),
        "synth_clusters": str(spec.clusters),
        "sift_params": "contrast_threshold=0.05 edge_threshold=11 norm=L2",
    }
    corpus = Corpus(items=items, rooms=rooms, meta=meta)
    corpus.validate()
    return corpus


def synth_word_vectors(spec: SynthSpec, seed: int) -> tuple[int, dict[str, np.ndarray]]:
    """Deterministic word vectors covering every token a synth corpus uses."""
    rng = np.random.default_rng(seed + 1)
    tokens: list[str] = []
    tokens += [f"style{c}" for c in range(spec.clusters)]
    tokens += list(spec.classes)
    tokens += list(spec.categories)
    tokens += _STYLE_WORDS
    vectors = {}
    for tok in tokens:
        if tok not in vectors:
            vectors[tok] = _f32(rng.normal(0.0, 1.0, size=spec.word_dim))
    return spec.word_dim, vectors


def save_word_vectors(path, dim: int, vectors: dict[str, np.ndarray]) -> None:
    """Write the standard text word-vector format: 'count dim' header line."""
    with open(path, "w") as fh:
        fh.write(f"{len(vectors)} {dim}\n")
        for tok in vectors:
            fh.write(tok + " " + " ".join("%.9g" % x for x in vectors[tok]) + "\n")
