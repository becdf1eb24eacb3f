"""Object-detection ingestion, confidence filtering and overlap suppression.

Detector outputs are ingested from text files (``class x y w h confidence``
per row); running the detector itself is out of scope. Kept detections
drive region-of-interest visual queries against the vector index.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .vecindex import RankedList, VectorIndex, knn
from .vectors import l2_normalize

log = logging.getLogger(__name__)


class DetectionError(ValueError):
    """Raised for malformed detection files or missing ROI features."""


@dataclass(frozen=True)
class Detection:
    class_label: str
    x: float
    y: float
    width: float
    height: float
    confidence: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise DetectionError(
                f"detection '{self.class_label}': non-positive box "
                f"{self.width}x{self.height}"
            )
        if not 0.0 <= self.confidence <= 1.0:
            raise DetectionError(
                f"detection '{self.class_label}': confidence "
                f"{self.confidence} outside [0, 1]"
            )

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.width, self.height)


def iou(a, b) -> float:
    """Intersection-over-union of two (x, y, w, h) boxes, in [0, 1]."""
    ax, ay, aw, ah = a.bbox if isinstance(a, Detection) else a
    bx, by, bw, bh = b.bbox if isinstance(b, Detection) else b
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def load_detections(path) -> list[Detection]:
    """Parse a per-room detection file. An empty file is a valid no-object result."""
    path = Path(path)
    if not path.exists():
        raise DetectionError(f"detection file not found: {path}")
    dets = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 6:
                raise DetectionError(
                    f"{path}:{lineno}: expected 'class x y w h confidence', "
                    f"got {len(parts)} fields"
                )
            try:
                x, y, w, h, conf = (float(p) for p in parts[1:])
            except ValueError as exc:
                raise DetectionError(f"{path}:{lineno}: {exc}") from exc
            try:
                dets.append(Detection(parts[0], x, y, w, h, conf))
            except DetectionError as exc:
                raise DetectionError(f"{path}:{lineno}: {exc}") from exc
    return dets


def save_detections(path, dets: list[Detection]) -> None:
    with open(path, "w") as fh:
        for d in dets:
            fh.write(
                "%s %.17g %.17g %.17g %.17g %.17g\n"
                % (d.class_label, d.x, d.y, d.width, d.height, d.confidence)
            )


def _keep_order(dets: list[Detection]) -> list[int]:
    # Deterministic suppression order: confidence desc, area desc, x asc.
    return sorted(
        range(len(dets)),
        key=lambda i: (-dets[i].confidence, -dets[i].area, dets[i].x),
    )


def filter_detections_indexed(
    dets: list[Detection],
    threshold: float = 0.1,
    iou_threshold: float = 0.5,
    per_class: bool = False,
) -> list[tuple[Detection, int]]:
    """Filter detections, returning (detection, source row index) pairs.

    Drops detections below the confidence threshold, then greedily keeps
    the highest-confidence detection among mutually overlapping boxes
    (IoU above ``iou_threshold``). Suppression compares boxes of all
    classes unless ``per_class`` is set.
    """
    if not 0.0 <= threshold <= 1.0 or not 0.0 <= iou_threshold <= 1.0:
        raise DetectionError("thresholds must lie in [0, 1]")
    survivors = [
        (d, i) for i, d in enumerate(dets) if d.confidence >= threshold
    ]
    ordered = _keep_order([d for d, _ in survivors])
    kept: list[tuple[Detection, int]] = []
    for oi in ordered:
        cand, src = survivors[oi]
        clash = any(
            iou(cand, k) > iou_threshold
            for k, _ in kept
            if not per_class or k.class_label == cand.class_label
        )
        if not clash:
            kept.append((cand, src))
    return kept


def filter_detections(
    dets: list[Detection],
    threshold: float = 0.1,
    iou_threshold: float = 0.5,
    per_class: bool = False,
) -> list[Detection]:
    """As :func:`filter_detections_indexed`, returning only the detections."""
    return [d for d, _ in filter_detections_indexed(dets, threshold, iou_threshold, per_class)]


@dataclass(frozen=True)
class RoiQuery:
    room_id: str
    detection: Detection
    feature: np.ndarray  # L2-normalized before search


def room_query(
    room,
    kept: list[tuple[Detection, int]],
    roi_features: np.ndarray,
    index: VectorIndex,
    k: int,
) -> list[tuple[Detection, RankedList]]:
    """Run one class-scoped kNN query per kept detection of a room.

    ``roi_features`` rows are keyed by source detection row; the second
    member of each ``kept`` pair maps back to them. Classes missing from
    the index partitions fall back to the full index (logged).
    """
    results = []
    for det, src in kept:
        if src >= len(roi_features):
            raise DetectionError(
                f"room '{room.id}': no ROI feature for detection row {src}"
            )
        feature = l2_normalize(roi_features[src])
        class_filter = det.class_label if index.has_class(det.class_label) else None
        if class_filter is None and index.classes():
            log.info(
                "room %s: class '%s' has no index partition, "
                "falling back to full index", room.id, det.class_label,
            )
        results.append((det, knn(index, feature, k, class_filter=class_filter)))
    return results
