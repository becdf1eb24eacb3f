"""Multi-modal interior style retrieval engine."""

from .blend import STRATEGY_FEATURE, STRATEGY_SIMPLE, feature_blend, simple_blend
from .corpus import (
    Corpus,
    CooccurrenceMatrix,
    Item,
    Room,
    SynthSpec,
    build_cooccurrence,
    load_corpus,
    save_corpus,
    synth_corpus,
)
from .detect import Detection, filter_detections, iou, load_detections
from .evaluate import (
    EvalReport,
    ExperimentConfig,
    hit_at_k,
    mean_similarity,
    recall_curve,
    run_experiment,
    style_similarity,
)
from .query_encoder import EncoderConfig, encode, text_search, train_encoder
from .style_embed import CbowConfig, cluster_quality, make_pairs, train_cbow
from .vecindex import ResultEntry, VectorIndex, build_index, knn
from .vectors import l2_normalize

__version__ = "0.1.0"

__all__ = [
    "Corpus", "CooccurrenceMatrix", "Item", "Room", "SynthSpec",
    "build_cooccurrence", "load_corpus", "save_corpus", "synth_corpus",
    "Detection", "filter_detections", "iou", "load_detections",
    "EvalReport", "ExperimentConfig", "hit_at_k", "mean_similarity",
    "recall_curve", "run_experiment", "style_similarity",
    "EncoderConfig", "encode", "text_search", "train_encoder",
    "CbowConfig", "cluster_quality", "make_pairs", "train_cbow",
    "ResultEntry", "VectorIndex", "build_index", "knn",
    "l2_normalize", "simple_blend", "feature_blend",
    "STRATEGY_SIMPLE", "STRATEGY_FEATURE",
]
