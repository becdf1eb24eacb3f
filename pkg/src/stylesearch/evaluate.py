"""Retrieval metrics and experiment reports.

Implements hit-rate at k, the co-occurrence style-similarity score, mean
similarity tables and recall curves, plus an end-to-end experiment
runner that compares whole-image retrieval against detection-scoped
retrieval and the blending strategies. Reports serialize to JSON, an
aligned text table, CSV recall curves and a rendered figure.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .blend import feature_blend, simple_blend
from .corpus import Corpus, CooccurrenceMatrix, build_cooccurrence
from .detect import filter_detections_indexed, room_query
from .query_encoder import (
    EncoderConfig,
    EncoderModel,
    WordVectors,
    text_search,
    train_encoder,
)
from .style_embed import CbowConfig, EmbeddingTable, make_pairs, train_cbow
from .vecindex import RankedList, VectorIndex, build_index, knn


class MetricError(ValueError):
    """Raised for degenerate metric inputs (empty ground truth, all-zero C)."""


def hit_at_k(
    results: dict[str, RankedList],
    ground_truth: dict[str, set[str]],
    k: int,
) -> float:
    """Fraction of rooms whose top-k results contain any ground-truth item."""
    if k < 1:
        raise MetricError(f"k must be >= 1, got {k}")
    if not results:
        raise MetricError("no results to evaluate")
    hits = 0
    for room_id, ranked in results.items():
        if room_id not in ground_truth:
            raise MetricError(f"room '{room_id}' has no ground truth")
        gt = ground_truth[room_id]
        if not gt:
            raise MetricError(f"room '{room_id}' has empty ground truth")
        if any(entry.item_id in gt for entry in ranked[:k]):
            hits += 1
    return hits / len(results)


def style_similarity(C: CooccurrenceMatrix, f1: str, f2: str) -> float:
    """Co-occurrence count normalized by the maximal distinct-pair count."""
    if f1 == f2:
        raise MetricError("style similarity is defined for distinct items")
    denom = C.max_offdiag()
    if denom == 0:
        raise MetricError("degenerate co-occurrence matrix: no pair ever co-occurs")
    return C.count(f1, f2) / denom


def mean_similarity(
    queries: list[tuple[str, RankedList]],
    C: CooccurrenceMatrix,
) -> float:
    """Mean style similarity of returned items to their query item.

    Returned items equal to the query item are excluded from the average.
    """
    values = []
    for query_item, ranked in queries:
        for entry in ranked:
            if entry.item_id == query_item:
                continue
            values.append(style_similarity(C, query_item, entry.item_id))
    if not values:
        raise MetricError("no (query, result) pairs to average")
    return float(np.mean(values))


def recall_curve(
    results: dict[str, RankedList],
    ground_truth: dict[str, set[str]],
    k_max: int,
) -> list[tuple[int, float]]:
    """Hit rate as a function of the number of returned items, k = 1..k_max."""
    if k_max < 1:
        raise MetricError(f"k_max must be >= 1, got {k_max}")
    return [(k, hit_at_k(results, ground_truth, k)) for k in range(1, k_max + 1)]


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    k: int = 6
    k_max: int = 20
    confidence_threshold: float = 0.1
    iou_threshold: float = 0.5
    per_class_index: bool = True
    text_enabled: bool = True
    text_query: str | None = None  # None: use each room's own description
    embed_dim: int = 32
    embed_epochs: int = 200
    encoder_epochs: int = 200
    encoder_variant: str = "mean_affine"

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise MetricError(f"unknown experiment config keys: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


@dataclass(eq=False)
class ExperimentArtifacts:
    flat_index: VectorIndex
    class_index: VectorIndex
    cooccurrence: CooccurrenceMatrix
    table: EmbeddingTable | None = None
    encoder: EncoderModel | None = None
    words: WordVectors | None = None


@dataclass(eq=False)
class EvalReport:
    fingerprint: dict
    hit_table: dict[str, dict[str, float]]
    mean_similarity_table: dict[str, float | None]
    recall_curves: dict[str, list[tuple[int, float]]]
    excluded_rooms: int = 0
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        doc = {
            "fingerprint": self.fingerprint,
            "hit_table": self.hit_table,
            "mean_similarity": self.mean_similarity_table,
            "recall_curves": {k: [[a, b] for a, b in v] for k, v in self.recall_curves.items()},
            "excluded_rooms": self.excluded_rooms,
            "notes": self.notes,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def to_text_table(self) -> str:
        lines = ["Content-based retrieval (hit rate)", ""]
        header = f"{'configuration':<24}" + "".join(
            f"{f'hit@{k}':>10}" for k in sorted(next(iter(self.hit_table.values())))
        ) if self.hit_table else ""
        if header:
            lines.append(header)
            lines.append("-" * len(header))
            for name in sorted(self.hit_table):
                row = f"{name:<24}"
                for k in sorted(self.hit_table[name]):
                    row += f"{self.hit_table[name][k]:>10.4f}"
                lines.append(row)
        lines += ["", "Mean style similarity", ""]
        width = max((len(n) for n in self.mean_similarity_table), default=8) + 2
        for name in sorted(self.mean_similarity_table):
            value = self.mean_similarity_table[name]
            cell = f"{value:.4f}" if value is not None else "-"
            lines.append(f"{name:<{width}}{cell:>10}")
        if self.excluded_rooms:
            lines += ["", f"rooms excluded (no kept detections): {self.excluded_rooms}"]
        return "\n".join(lines) + "\n"

    def curves_csv(self) -> str:
        lines = ["configuration,k,recall"]
        for name in sorted(self.recall_curves):
            for k, r in self.recall_curves[name]:
                lines.append(f"{name},{k},{r:.6f}")
        return "\n".join(lines) + "\n"


def _fingerprint(corpus: Corpus, config: ExperimentConfig) -> dict:
    blob = json.dumps(config.to_dict(), sort_keys=True).encode("utf-8")
    return {
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "seed": config.seed,
        "items": len(corpus.items),
        "rooms": len(corpus.rooms),
    }


def prepare_artifacts(
    corpus: Corpus,
    config: ExperimentConfig,
    words: WordVectors | None = None,
) -> ExperimentArtifacts:
    """Build indices and train models deterministically from the corpus."""
    featured = [
        (item_id, corpus.items[item_id].visual_feature)
        for item_id in sorted(corpus.items)
        if corpus.items[item_id].visual_feature is not None
    ]
    if not featured:
        raise MetricError("no items with visual features")
    flat = build_index(featured)
    per_class = build_index(featured, partition_by_class=True, corpus=corpus)
    artifacts = ExperimentArtifacts(
        flat_index=flat,
        class_index=per_class,
        cooccurrence=build_cooccurrence(corpus),
    )
    if config.text_enabled:
        if words is None:
            raise MetricError("text evaluation requires word vectors")
        pairs = make_pairs(corpus)
        table = train_cbow(
            pairs,
            sorted(corpus.items),
            CbowConfig(dim=config.embed_dim, epochs=config.embed_epochs, seed=config.seed),
        )
        encoder = train_encoder(
            corpus,
            table,
            words,
            EncoderConfig(
                variant=config.encoder_variant,
                epochs=config.encoder_epochs,
                seed=config.seed,
            ),
        )
        artifacts.table = table
        artifacts.encoder = encoder
        artifacts.words = words
    return artifacts


def _round_robin(lists: list[RankedList]) -> RankedList:
    """Merge per-detection lists rank by rank, keeping first occurrences."""
    merged, seen = [], set()
    depth = max((len(lst) for lst in lists), default=0)
    for rank in range(depth):
        for lst in lists:
            if rank < len(lst) and lst[rank].item_id not in seen:
                seen.add(lst[rank].item_id)
                merged.append(lst[rank])
    return merged


def run_experiment(
    corpus: Corpus,
    config: ExperimentConfig,
    words: WordVectors | None = None,
    artifacts: ExperimentArtifacts | None = None,
) -> EvalReport:
    """End-to-end evaluation over a corpus with attached detection artifacts.

    Produces the whole-image vs with-detection hit-rate comparison, the
    per-strategy mean-similarity table (query item = top visual result of
    the highest-confidence kept detection) and recall curves.
    """
    if artifacts is None:
        artifacts = prepare_artifacts(corpus, config, words)
    ground_truth = {r.id: set(r.ground_truth) for r in corpus.rooms.values()}
    notes: list[str] = []

    whole_results: dict[str, RankedList] = {}
    det_results: dict[str, RankedList] = {}
    sim_queries: dict[str, list[tuple[str, RankedList]]] = {
        "visual_only": [], "text_only": [], "simple_blending": [], "feature_blending": [],
    }
    excluded = 0

    visual_features = {
        item_id: item.visual_feature
        for item_id, item in corpus.items.items()
        if item.visual_feature is not None
    }

    for room_id in sorted(corpus.rooms):
        room = corpus.rooms[room_id]
        if not room.ground_truth:
            continue
        if room.visual_feature is not None:
            whole_results[room_id] = knn(
                artifacts.flat_index, room.visual_feature, config.k_max
            )
        if room.detections is None or room.roi_features is None:
            continue
        kept = filter_detections_indexed(
            room.detections, config.confidence_threshold, config.iou_threshold
        )
        if not kept:
            excluded += 1
            continue
        index = artifacts.class_index if config.per_class_index else artifacts.flat_index
        per_det = room_query(room, kept, room.roi_features, index, config.k_max)
        det_results[room_id] = _round_robin([ranked for _, ranked in per_det])

        # The query object is the highest-confidence kept detection; its
        # identity is resolved as the engine's rank-1 visual match.
        best_pos = max(range(len(kept)), key=lambda i: kept[i][0].confidence)
        best_det, best_src = kept[best_pos]
        visual_list = per_det[best_pos][1][: config.k]
        if not visual_list:
            excluded += 1
            continue
        query_item = visual_list[0].item_id
        sim_queries["visual_only"].append((query_item, visual_list))

        if config.text_enabled:
            query_tokens = (
                config.text_query.split() if config.text_query else list(room.description)
            )
            text_list = text_search(
                artifacts.encoder, artifacts.words, artifacts.table, query_tokens, config.k
            )
            sim_queries["text_only"].append((query_item, text_list))
            sim_queries["simple_blending"].append(
                (query_item, simple_blend(visual_list, text_list, config.k))
            )
            roi = room.roi_features[best_src]
            sim_queries["feature_blending"].append(
                (
                    query_item,
                    feature_blend(
                        visual_list, text_list, roi, visual_features, config.k
                    ),
                )
            )

    hit_table: dict[str, dict[str, float]] = {}
    curves: dict[str, list[tuple[int, float]]] = {}
    if whole_results:
        hit_table["whole_image"] = {
            f"{config.k}": hit_at_k(whole_results, ground_truth, config.k)
        }
        curves["whole_image"] = recall_curve(whole_results, ground_truth, config.k_max)
    if det_results:
        hit_table["with_detection"] = {
            f"{config.k}": hit_at_k(det_results, ground_truth, config.k)
        }
        curves["with_detection"] = recall_curve(det_results, ground_truth, config.k_max)

    sim_table: dict[str, float | None] = {}
    for name, queries in sim_queries.items():
        if queries:
            sim_table[name] = mean_similarity(queries, artifacts.cooccurrence)
        else:
            # Structurally impossible cells stay empty rather than invented.
            sim_table[name] = None

    fb, vo = sim_table.get("feature_blending"), sim_table.get("visual_only")
    if fb is not None and vo is not None:
        if vo > 0.0:
            delta = 100.0 * (fb / vo - 1.0)
            notes.append(f"feature blending vs visual-only mean similarity: {delta:+.1f}%")
        else:
            notes.append(
                f"feature blending vs visual-only mean similarity: "
                f"{fb:+.4f} absolute (visual-only baseline is 0, % undefined)"
            )

    return EvalReport(
        fingerprint=_fingerprint(corpus, config),
        hit_table=hit_table,
        mean_similarity_table=sim_table,
        recall_curves=curves,
        excluded_rooms=excluded,
        notes=notes,
    )


def render_recall_figure(report: EvalReport, path) -> None:
    """Render the recall curves to an image file."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for name in sorted(report.recall_curves):
        ks = [k for k, _ in report.recall_curves[name]]
        rs = [r for _, r in report.recall_curves[name]]
        ax.plot(ks, rs, marker="o", markersize=3, label=name)
    ax.set_xlabel("number of returned items k")
    ax.set_ylabel("recall")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="lower right")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report(
    report: EvalReport,
    json_path,
    table_path=None,
    csv_path=None,
    figure_path=None,
) -> None:
    Path(json_path).write_text(report.to_json())
    if table_path:
        Path(table_path).write_text(report.to_text_table())
    if csv_path:
        Path(csv_path).write_text(report.curves_csv())
    if figure_path:
        render_recall_figure(report, figure_path)
