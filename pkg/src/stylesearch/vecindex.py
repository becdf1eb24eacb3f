"""Exact k-nearest-neighbor index over L2-normalized feature vectors.

The index is the backbone of the visual modality: all stored vectors are
unit length and queries are ranked by Euclidean distance (equivalently,
descending cosine similarity). Searches may be scoped to a per-class
partition, realizing detection-scoped retrieval.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .vectors import VectorError, l2_normalize

MODALITY_VISUAL = "visual"
MODALITY_TEXT = "text"
MODALITY_BLENDED = "blended"


class IndexError_(ValueError):
    """Raised for malformed index inputs or queries."""


@dataclass(frozen=True)
class ResultEntry:
    item_id: str
    score: float
    modality: str = MODALITY_VISUAL


RankedList = list  # list[ResultEntry]; ordering stated per producer


class VectorIndex:
    """Immutable store of (item_id, unit vector) with optional class partitions."""

    def __init__(self, ids: list[str], vectors: np.ndarray, classes: list[str] | None = None):
        if len(ids) != len(set(ids)):
            seen, dup = set(), None
            for i in ids:
                if i in seen:
                    dup = i
                    break
                seen.add(i)
            raise IndexError_(f"duplicate item id '{dup}'")
        self.ids = list(ids)
        self.vectors = np.asarray(vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(ids):
            raise IndexError_("vectors must be a (count, dim) array matching ids")
        self.dim = int(self.vectors.shape[1]) if len(ids) else 0
        self._classes = list(classes) if classes is not None else None
        if self._classes is not None and len(self._classes) != len(ids):
            raise IndexError_("class list length must match ids")
        self._partitions: dict[str, np.ndarray] = {}
        if self._classes is not None:
            by_class: dict[str, list[int]] = {}
            for i, c in enumerate(self._classes):
                by_class.setdefault(c, []).append(i)
            self._partitions = {c: np.asarray(ix) for c, ix in by_class.items()}

    def __len__(self) -> int:
        return len(self.ids)

    def classes(self) -> list[str]:
        return sorted(self._partitions)

    def has_class(self, label: str) -> bool:
        return label in self._partitions

    def partition_size(self, label: str) -> int:
        return len(self._partitions.get(label, ()))


def build_index(
    items: list[tuple[str, np.ndarray]],
    partition_by_class: bool = False,
    corpus=None,
) -> VectorIndex:
    """Build an index from (item_id, feature) pairs.

    Vectors are normalized on insertion. With ``partition_by_class`` set,
    per-class sublists are populated from the corpus item class labels.
    """
    if not items:
        raise IndexError_("cannot build an empty index")
    dims = {len(np.asarray(v).ravel()) for _, v in items}
    if len(dims) != 1:
        raise IndexError_(f"mixed vector dimensions {sorted(dims)}")
    ids = [i for i, _ in items]
    vectors = np.stack([l2_normalize(v) for _, v in items])
    classes = None
    if partition_by_class:
        if corpus is None:
            raise IndexError_("partition_by_class requires a corpus for class labels")
        classes = []
        for item_id in ids:
            if item_id not in corpus.items:
                raise IndexError_(f"item '{item_id}' not present in corpus")
            classes.append(corpus.items[item_id].class_label)
    return VectorIndex(ids, vectors, classes)


def knn(
    index: VectorIndex,
    query,
    k: int,
    class_filter: str | None = None,
) -> RankedList:
    """Return the k nearest entries by Euclidean distance, ascending.

    Ties are broken by ascending item id, which makes results independent
    of index insertion order. The query is normalized before search.
    """
    if k < 1:
        raise IndexError_(f"k must be >= 1, got {k}")
    q = l2_normalize(query)
    if q.shape[0] != index.dim:
        raise IndexError_(f"query dim {q.shape[0]} != index dim {index.dim}")
    if class_filter is not None:
        if not index.has_class(class_filter):
            raise IndexError_(f"unknown class partition '{class_filter}'")
        subset = index._partitions[class_filter]
    else:
        subset = np.arange(len(index))
    diffs = index.vectors[subset] - q
    dists = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
    order = sorted(range(len(subset)), key=lambda i: (dists[i], index.ids[subset[i]]))
    return [
        ResultEntry(index.ids[subset[i]], float(dists[i]), MODALITY_VISUAL)
        for i in order[:k]
    ]


_MAGIC = b"SSIX"
_VERSION = 1


def save_index(path, index: VectorIndex) -> None:
    """Persist an index: magic, version, dim, count, id/class table, vectors."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", _VERSION, index.dim, len(index)))
        fh.write(struct.pack("<B", 1 if index._classes is not None else 0))
        for i, item_id in enumerate(index.ids):
            ib = item_id.encode("utf-8")
            cb = (index._classes[i] if index._classes is not None else "").encode("utf-8")
            fh.write(struct.pack("<HH", len(ib), len(cb)))
            fh.write(ib)
            fh.write(cb)
        fh.write(index.vectors.astype("<f8").tobytes())


def load_index(path) -> VectorIndex:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != _MAGIC:
        raise IndexError_(f"{path}: not an index file (bad magic)")
    version, dim, count = struct.unpack_from("<III", raw, 4)
    if version != _VERSION:
        raise IndexError_(f"{path}: unsupported index version {version}")
    (has_classes,) = struct.unpack_from("<B", raw, 16)
    off = 17
    ids, classes = [], []
    for _ in range(count):
        il, cl = struct.unpack_from("<HH", raw, off)
        off += 4
        ids.append(raw[off:off + il].decode("utf-8"))
        off += il
        classes.append(raw[off:off + cl].decode("utf-8"))
        off += cl
    vectors = np.frombuffer(raw, dtype="<f8", offset=off, count=count * dim)
    vectors = vectors.reshape(count, dim).copy()
    return VectorIndex(ids, vectors, classes if has_classes else None)
