"""Late fusion of visual and textual ranked lists.

Two strategies: simple blending (interleave the top results of each
modality) and feature-similarity blending (re-rank text candidates by
their distance to the query in visual feature space, then merge).
"""

from __future__ import annotations

import math

import numpy as np

from .vecindex import MODALITY_VISUAL, RankedList, ResultEntry
from .vectors import l2_normalize

STRATEGY_SIMPLE = "simple"
STRATEGY_FEATURE = "feature_similarity"


class BlendError(ValueError):
    """Raised for empty requests or missing candidate features."""


def simple_blend(visual: RankedList, text: RankedList, k: int) -> RankedList:
    """Interleave the top half of each modality, visual first.

    Takes the top ceil(k/2) entries of each list, then alternates
    modalities, each turn emitting that modality's next not-yet-seen
    item; truncates to k.
    """
    if k < 1:
        raise BlendError(f"k must be >= 1, got {k}")
    if not visual and not text:
        raise BlendError("both modalities empty")
    # Degenerate modality: the surviving list fills the whole budget.
    if not text:
        return list(visual[:k])
    if not visual:
        return list(text[:k])
    quota = math.ceil(k / 2)
    seen: set[str] = set()
    out: list[ResultEntry] = []

    def interleave(queues):
        turn = 0
        while len(out) < k and any(queues):
            queue = queues[turn % 2]
            turn += 1
            while queue:
                entry = queue.pop(0)
                if entry.item_id not in seen:
                    seen.add(entry.item_id)
                    out.append(entry)
                    break

    interleave([list(visual[:quota]), list(text[:quota])])
    # Duplicates freed budget: backfill from beyond the per-modality quota.
    interleave([list(visual[quota:]), list(text[quota:])])
    return out


def feature_blend(
    visual: RankedList,
    text: RankedList,
    query_feature,
    visual_features: dict[str, np.ndarray],
    k: int,
) -> RankedList:
    """Re-rank text candidates by visual distance to the query, then merge.

    Visual candidates keep their distances; text candidates are scored by
    Euclidean distance between the normalized query feature and their
    normalized visual feature. The union is sorted ascending, keeping the
    smaller distance on duplicates, and truncated to k.
    """
    if k < 1:
        raise BlendError(f"k must be >= 1, got {k}")
    if not visual and not text:
        raise BlendError("both modalities empty")
    q = l2_normalize(query_feature)

    candidates: dict[str, ResultEntry] = {}

    def offer(entry: ResultEntry):
        cur = candidates.get(entry.item_id)
        if cur is None or entry.score < cur.score:
            candidates[entry.item_id] = entry

    for entry in visual:
        offer(entry)
    for entry in text:
        feat = visual_features.get(entry.item_id)
        if feat is None:
            raise BlendError(f"no visual feature for text candidate '{entry.item_id}'")
        dist = float(np.linalg.norm(q - l2_normalize(feat)))
        offer(ResultEntry(entry.item_id, dist, entry.modality))

    ordered = sorted(candidates.values(), key=lambda e: (e.score, e.item_id))
    return ordered[:k]


def blend(
    strategy: str,
    visual: RankedList,
    text: RankedList,
    k: int,
    query_feature=None,
    visual_features: dict[str, np.ndarray] | None = None,
) -> RankedList:
    """Dispatch on strategy name."""
    if strategy == STRATEGY_SIMPLE:
        return simple_blend(visual, text, k)
    if strategy == STRATEGY_FEATURE:
        if query_feature is None or visual_features is None:
            raise BlendError("feature blending needs the query feature and a feature lookup")
        return feature_blend(visual, text, query_feature, visual_features, k)
    raise BlendError(f"unknown blending strategy '{strategy}'")


__all__ = [
    "BlendError",
    "simple_blend",
    "feature_blend",
    "blend",
    "STRATEGY_SIMPLE",
    "STRATEGY_FEATURE",
    "MODALITY_VISUAL",
]
