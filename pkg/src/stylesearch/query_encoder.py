"""Text query encoding into the item style-embedding space.

A regression model maps a token sequence to the style space: training
minimizes mean squared error against item embeddings, retrieval ranks
items by cosine similarity to the encoded query. Word vectors are a
frozen input artifact, never updated.

Two variants sit behind one contract: ``mean_affine`` (affine map of the
mean word vector) and ``recurrent`` (single gated recurrent layer,
final hidden state projected to the style dimension).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .style_embed import EmbeddingTable
from .vecindex import MODALITY_TEXT, RankedList, ResultEntry

VARIANT_MEAN_AFFINE = "mean_affine"
VARIANT_RECURRENT = "recurrent"

OOV_SKIP = "skip"
OOV_ZERO = "zero"


class EncoderError(ValueError):
    """Raised for empty/all-OOV queries and invalid training setups."""

    def __init__(self, message: str, oov_tokens: list[str] | None = None):
        super().__init__(message)
        self.oov_tokens = oov_tokens or []


@dataclass(eq=False)
class WordVectors:
    dim: int
    vectors: dict[str, np.ndarray]
    frozen: bool = True

    def __contains__(self, token: str) -> bool:
        return token in self.vectors


def load_word_vectors(path) -> WordVectors:
    """Read the text format: first line ``count dim``, then one token per line."""
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise EncoderError(f"{path}: bad word-vector header")
        count, dim = int(header[0]), int(header[1])
        vectors: dict[str, np.ndarray] = {}
        for lineno, line in enumerate(fh, 2):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise EncoderError(f"{path}:{lineno}: expected {dim} values")
            vectors[parts[0].lower()] = np.asarray([float(p) for p in parts[1:]])
    if len(vectors) != count:
        raise EncoderError(f"{path}: header says {count} tokens, found {len(vectors)}")
    return WordVectors(dim=dim, vectors=vectors)


@dataclass(frozen=True)
class EncoderConfig:
    variant: str = VARIANT_MEAN_AFFINE
    seed: int = 0
    epochs: int = 200
    learning_rate: float = 0.05
    batch_size: int = 8
    hidden: int = 32
    oov_policy: str = OOV_SKIP


@dataclass(eq=False)
class EncoderModel:
    variant: str
    params: dict[str, np.ndarray]
    input_dim: int
    output_dim: int
    oov_policy: str = OOV_SKIP
    initial_mse: float | None = None
    final_mse: float | None = None
    loss_history: list[float] = field(default_factory=list)


def _query_matrix(words: WordVectors, query: list[str], oov_policy: str) -> np.ndarray:
    if not query:
        raise EncoderError("empty query")
    rows, oov = [], []
    for tok in query:
        tok = tok.lower()
        if tok in words.vectors:
            rows.append(words.vectors[tok])
        else:
            oov.append(tok)
            if oov_policy == OOV_ZERO:
                rows.append(np.zeros(words.dim))
    if not rows:
        raise EncoderError(
            f"all query tokens are out of vocabulary: {oov}", oov_tokens=oov
        )
    return np.stack(rows)


def init_model(config: EncoderConfig, input_dim: int, output_dim: int) -> EncoderModel:
    rng = np.random.default_rng(config.seed)
    d, n, H = input_dim, output_dim, config.hidden
    if config.variant == VARIANT_MEAN_AFFINE:
        params = {"W": rng.normal(0.0, 0.1, size=(n, d)), "b": np.zeros(n)}
    elif config.variant == VARIANT_RECURRENT:
        def mat(rows, cols):
            return rng.normal(0.0, 1.0 / np.sqrt(cols), size=(rows, cols))
        params = {
            "Wz": mat(H, d), "Uz": mat(H, H), "bz": np.zeros(H),
            "Wr": mat(H, d), "Ur": mat(H, H), "br": np.zeros(H),
            "Wg": mat(H, d), "Ug": mat(H, H), "bg": np.zeros(H),
            "P": mat(n, H), "c": np.zeros(n),
        }
    else:
        raise EncoderError(f"unknown encoder variant '{config.variant}'")
    return EncoderModel(
        variant=config.variant,
        params=params,
        input_dim=d,
        output_dim=n,
        oov_policy=config.oov_policy,
    )


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500, 500)))


def _forward_recurrent(params, xs: np.ndarray):
    H = params["bz"].shape[0]
    h = np.zeros(H)
    cache = []
    for x in xs:
        z = _sigmoid(params["Wz"] @ x + params["Uz"] @ h + params["bz"])
        r = _sigmoid(params["Wr"] @ x + params["Ur"] @ h + params["br"])
        g = np.tanh(params["Wg"] @ x + params["Ug"] @ (r * h) + params["bg"])
        h_new = (1.0 - z) * h + z * g
        cache.append((x, h, z, r, g))
        h = h_new
    pred = params["P"] @ h + params["c"]
    return pred, h, cache


def _backward_recurrent(params, cache, h_last, dpred, grads):
    grads["P"] += np.outer(dpred, h_last)
    grads["c"] += dpred
    dh = params["P"].T @ dpred
    for x, h_prev, z, r, g in reversed(cache):
        dz = dh * (g - h_prev)
        dg = dh * z
        dh_prev = dh * (1.0 - z)
        da_g = dg * (1.0 - g * g)
        grads["Wg"] += np.outer(da_g, x)
        grads["Ug"] += np.outer(da_g, r * h_prev)
        grads["bg"] += da_g
        drh = params["Ug"].T @ da_g
        dr = drh * h_prev
        dh_prev += drh * r
        da_r = dr * r * (1.0 - r)
        grads["Wr"] += np.outer(da_r, x)
        grads["Ur"] += np.outer(da_r, h_prev)
        grads["br"] += da_r
        dh_prev += params["Ur"].T @ da_r
        da_z = dz * z * (1.0 - z)
        grads["Wz"] += np.outer(da_z, x)
        grads["Uz"] += np.outer(da_z, h_prev)
        grads["bz"] += da_z
        dh_prev += params["Uz"].T @ da_z
        dh = dh_prev


def encode(model: EncoderModel, words: WordVectors, query: list[str]) -> np.ndarray:
    """Map a token sequence to the style space. All-OOV queries are errors."""
    xs = _query_matrix(words, query, model.oov_policy)
    if model.variant == VARIANT_MEAN_AFFINE:
        out = model.params["W"] @ xs.mean(axis=0) + model.params["b"]
    else:
        out, _, _ = _forward_recurrent(model.params, xs)
    if not np.all(np.isfinite(out)):
        raise EncoderError("encoder produced non-finite output")
    return out


def sample_loss_and_grads(
    model: EncoderModel, xs: np.ndarray, target: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Squared-error loss ``|m(t) - f|^2`` for one sample and its gradients."""
    grads = {k: np.zeros_like(v) for k, v in model.params.items()}
    if model.variant == VARIANT_MEAN_AFFINE:
        x = xs.mean(axis=0)
        err = model.params["W"] @ x + model.params["b"] - target
        grads["W"] += np.outer(2.0 * err, x)
        grads["b"] += 2.0 * err
    else:
        pred, h_last, cache = _forward_recurrent(model.params, xs)
        err = pred - target
        _backward_recurrent(model.params, cache, h_last, 2.0 * err, grads)
    return float(err @ err), grads


def _training_set(corpus: Corpus, table: EmbeddingTable, words: WordVectors):
    samples = []
    for item_id in table.ids:
        item = corpus.items.get(item_id)
        if item is None or not item.description:
            continue
        in_vocab = [t for t in item.description if t.lower() in words.vectors]
        if not in_vocab:
            continue
        samples.append((item.description, table.vector(item_id)))
    return samples


def train_encoder(
    corpus: Corpus,
    table: EmbeddingTable,
    words: WordVectors,
    config: EncoderConfig = EncoderConfig(),
) -> EncoderModel:
    """Minibatch SGD on mean squared error; word vectors stay frozen.

    The returned model records the initial and final epoch MSE. A fixed
    seed reproduces the model exactly.
    """
    samples = _training_set(corpus, table, words)
    if not samples:
        raise EncoderError("no trainable items (need a description with in-vocabulary tokens)")
    model = init_model(config, words.dim, table.dim)
    rng = np.random.default_rng(config.seed)

    encoded = [
        (_query_matrix(words, desc, config.oov_policy), target)
        for desc, target in samples
    ]

    def dataset_mse():
        return float(
            np.mean([sample_loss_and_grads(model, xs, t)[0] for xs, t in encoded])
        )

    model.initial_mse = dataset_mse()
    for _ in range(config.epochs):
        order = rng.permutation(len(encoded))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            acc = {k: np.zeros_like(v) for k, v in model.params.items()}
            for bi in batch:
                xs, target = encoded[bi]
                loss, grads = sample_loss_and_grads(model, xs, target)
                epoch_loss += loss
                for k in acc:
                    acc[k] += grads[k]
            for k in model.params:
                model.params[k] -= config.learning_rate * acc[k] / len(batch)
        mse = epoch_loss / len(encoded)
        if not np.isfinite(mse):
            raise EncoderError("encoder training diverged")
        model.loss_history.append(mse)
    model.final_mse = dataset_mse()
    return model


def text_search(
    model: EncoderModel,
    words: WordVectors,
    table: EmbeddingTable,
    query: list[str],
    k: int,
) -> RankedList:
    """Top-k items by cosine similarity to the encoded query, descending."""
    if k < 1:
        raise EncoderError(f"k must be >= 1, got {k}")
    q = encode(model, words, query)
    qn = np.linalg.norm(q)
    norms = np.linalg.norm(table.input_vectors, axis=1)
    denom = qn * np.where(norms == 0, 1.0, norms)
    sims = (table.input_vectors @ q) / denom if qn > 0 else np.zeros(len(table.ids))
    order = sorted(range(len(table.ids)), key=lambda i: (-sims[i], table.ids[i]))
    return [ResultEntry(table.ids[i], float(sims[i]), MODALITY_TEXT) for i in order[:k]]


_MAGIC = b"SSEN"


def save_encoder(path, model: EncoderModel) -> None:
    header = json.dumps(
        {
            "variant": model.variant,
            "input_dim": model.input_dim,
            "output_dim": model.output_dim,
            "oov_policy": model.oov_policy,
            "params": {k: list(model.params[k].shape) for k in sorted(model.params)},
        },
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for k in sorted(model.params):
            fh.write(model.params[k].astype("<f8").tobytes())


def load_encoder(path) -> EncoderModel:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise EncoderError(f"{path}: not an encoder file")
    (hlen,) = struct.unpack_from("<I", raw, 4)
    header = json.loads(raw[8:8 + hlen].decode("utf-8"))
    off = 8 + hlen
    params = {}
    for k in sorted(header["params"]):
        shape = tuple(header["params"][k])
        n = int(np.prod(shape))
        params[k] = np.frombuffer(raw, dtype="<f8", offset=off, count=n).reshape(shape).copy()
        off += n * 8
    return EncoderModel(
        variant=header["variant"],
        params=params,
        input_dim=header["input_dim"],
        output_dim=header["output_dim"],
        oov_policy=header["oov_policy"],
    )
