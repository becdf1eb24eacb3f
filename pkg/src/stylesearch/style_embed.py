"""Item style embeddings trained from room co-occurrence.

Treats each room's ground-truth set as an unordered context: every item
predicts the rest of its room through a CBOW objective with negative
sampling. Items that co-occur end up close in the embedding space, which
is the only signal the model ever sees.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus


class EmbeddingError(ValueError):
    """Raised for invalid training inputs."""


@dataclass(frozen=True)
class TrainingPair:
    target: str
    context: tuple[str, ...]

    def __post_init__(self):
        if not self.context or self.target in self.context:
            raise EmbeddingError(f"bad training pair for '{self.target}'")


@dataclass(frozen=True)
class CbowConfig:
    dim: int = 32
    epochs: int = 200
    learning_rate: float = 0.05
    negatives: int = 5
    seed: int = 0


@dataclass(eq=False)
class EmbeddingTable:
    dim: int
    ids: tuple[str, ...]
    input_vectors: np.ndarray   # (V, dim); the item embeddings
    output_vectors: np.ndarray  # (V, dim); context-side parameters
    config: CbowConfig
    untrained: frozenset[str] = frozenset()
    loss_history: list[float] = field(default_factory=list)

    def index_of(self, item_id: str) -> int:
        try:
            return self.ids.index(item_id)
        except ValueError:
            raise EmbeddingError(f"unknown item '{item_id}'") from None

    def vector(self, item_id: str) -> np.ndarray:
        return self.input_vectors[self.index_of(item_id)]


def make_pairs(corpus: Corpus) -> list[TrainingPair]:
    """One (target, rest-of-room) pair per item per multi-item room.

    Duplicate pairs from repeated room compositions are kept: frequency
    is the signal.
    """
    pairs = []
    for room_id in sorted(corpus.rooms):
        members = sorted(corpus.rooms[room_id].ground_truth)
        if len(members) < 2:
            continue
        for target in members:
            context = tuple(m for m in members if m != target)
            pairs.append(TrainingPair(target=target, context=context))
    return pairs


def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.where(x >= 0, -np.log1p(np.exp(-np.abs(x))), x - np.log1p(np.exp(-np.abs(x))))
    return out


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500, 500)))


def cbow_loss_and_grads(
    w_in: np.ndarray,
    w_out: np.ndarray,
    target: int,
    context: np.ndarray,
    negatives: np.ndarray,
) -> tuple[float, np.ndarray, dict[int, np.ndarray]]:
    """Negative-sampling loss for one pair, with its exact gradients.

    Returns (loss, grad wrt each context input vector, grads wrt the
    touched output vectors keyed by row). The context gradient is shared:
    the hidden state is the context mean, so each context row receives
    the same contribution.
    """
    h = w_in[context].mean(axis=0)
    pos_score = float(h @ w_out[target])
    neg_scores = w_out[negatives] @ h
    loss = -float(_log_sigmoid(np.array([pos_score]))[0])
    loss -= float(_log_sigmoid(-neg_scores).sum())

    g_pos = _sigmoid(np.array([pos_score]))[0] - 1.0
    g_negs = _sigmoid(neg_scores)

    out_grads: dict[int, np.ndarray] = {int(target): g_pos * h}
    for j, n in enumerate(negatives):
        n = int(n)
        out_grads[n] = out_grads.get(n, 0.0) + g_negs[j] * h

    grad_h = g_pos * w_out[target] + g_negs @ w_out[negatives]
    grad_context = grad_h / len(context)
    return loss, grad_context, out_grads


def _negative_table(pairs: list[TrainingPair], ids: tuple[str, ...]) -> np.ndarray:
    pos = {item_id: i for i, item_id in enumerate(ids)}
    freq = np.zeros(len(ids))
    for p in pairs:
        freq[pos[p.target]] += 1
    weights = np.power(np.maximum(freq, 1.0), 0.75)
    return weights / weights.sum()


def train_cbow(
    pairs: list[TrainingPair],
    vocab: list[str],
    config: CbowConfig = CbowConfig(),
) -> EmbeddingTable:
    """SGD over seeded-shuffled pairs with unigram^0.75 negative sampling.

    Learning rate decays linearly over all steps. Items never seen as a
    target or context keep their seeded initialization and are flagged
    untrained. Identical (pairs, vocab, config) reproduce the table
    byte for byte.
    """
    if not pairs:
        raise EmbeddingError("empty training pair list")
    ids = tuple(sorted(vocab))
    if len(ids) < config.negatives + 1:
        raise EmbeddingError(
            f"vocabulary of {len(ids)} smaller than negatives+1={config.negatives + 1}"
        )
    pos = {item_id: i for i, item_id in enumerate(ids)}
    for p in pairs:
        if p.target not in pos or any(c not in pos for c in p.context):
            raise EmbeddingError(f"pair references items outside the vocabulary: {p}")

    rng = np.random.default_rng(config.seed)
    w_in = rng.uniform(-0.5, 0.5, size=(len(ids), config.dim)) / config.dim
    w_out = np.zeros((len(ids), config.dim))

    seen: set[str] = set()
    for p in pairs:
        seen.add(p.target)
        seen.update(p.context)

    noise = _negative_table(pairs, ids)
    total_steps = max(1, config.epochs * len(pairs))
    step = 0
    losses = []
    for _ in range(config.epochs):
        order = rng.permutation(len(pairs))
        epoch_loss = 0.0
        for pi in order:
            p = pairs[pi]
            target = pos[p.target]
            context = np.asarray([pos[c] for c in p.context])
            # Negatives are items absent from the room: with a vocabulary this
            # small, clique mates would otherwise be sampled constantly and
            # pushed apart despite co-occurring.
            room = set(context.tolist())
            room.add(target)
            negs = rng.choice(len(ids), size=config.negatives, p=noise)
            guard = 0
            while any(int(n) in room for n in negs):
                redraw = np.fromiter((int(n) in room for n in negs), dtype=bool)
                negs[redraw] = rng.choice(len(ids), size=int(redraw.sum()), p=noise)
                guard += 1
                if guard > 1000:
                    raise EmbeddingError("cannot sample negatives outside the room")
            lr = config.learning_rate * max(1e-4, 1.0 - step / total_steps)
            loss, grad_ctx, out_grads = cbow_loss_and_grads(w_in, w_out, target, context, negs)
            w_in[context] -= lr * grad_ctx
            for row, grad in out_grads.items():
                w_out[row] -= lr * grad
            epoch_loss += loss
            step += 1
        losses.append(epoch_loss / len(pairs))
        if not np.isfinite(losses[-1]) or not np.all(np.isfinite(w_in)):
            raise EmbeddingError("training diverged to non-finite values")

    return EmbeddingTable(
        dim=config.dim,
        ids=ids,
        input_vectors=w_in,
        output_vectors=w_out,
        config=config,
        untrained=frozenset(i for i in ids if i not in seen),
        loss_history=losses,
    )


def cluster_quality(table: EmbeddingTable, labels: dict[str, str]) -> tuple[float, float]:
    """Mean pairwise cosine distance within (intra) and across (inter) categories."""
    missing = [i for i in table.ids if i not in labels]
    if missing:
        raise EmbeddingError(f"labels missing for {missing[:3]}")
    norms = np.linalg.norm(table.input_vectors, axis=1)
    safe = np.where(norms == 0, 1.0, norms)
    unit = table.input_vectors / safe[:, None]
    cos = np.clip(unit @ unit.T, -1.0, 1.0)
    dist = 1.0 - cos
    intra_vals, inter_vals = [], []
    for a in range(len(table.ids)):
        for b in range(a + 1, len(table.ids)):
            if labels[table.ids[a]] == labels[table.ids[b]]:
                intra_vals.append(dist[a, b])
            else:
                inter_vals.append(dist[a, b])
    intra = float(np.mean(intra_vals)) if intra_vals else 0.0
    inter = float(np.mean(inter_vals)) if inter_vals else 0.0
    return intra, inter


_MAGIC = b"SSEM"


def save_embeddings(path, table: EmbeddingTable) -> None:
    config_blob = json.dumps(
        {
            "dim": table.config.dim,
            "epochs": table.config.epochs,
            "learning_rate": table.config.learning_rate,
            "negatives": table.config.negatives,
            "seed": table.config.seed,
        },
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", table.dim, len(table.ids), len(config_blob)))
        fh.write(config_blob)
        for item_id in table.ids:
            ib = item_id.encode("utf-8")
            fh.write(struct.pack("<HB", len(ib), 1 if item_id in table.untrained else 0))
            fh.write(ib)
        fh.write(table.input_vectors.astype("<f8").tobytes())
        fh.write(table.output_vectors.astype("<f8").tobytes())


def load_embeddings(path) -> EmbeddingTable:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise EmbeddingError(f"{path}: not an embedding file")
    dim, count, clen = struct.unpack_from("<III", raw, 4)
    off = 16
    cfg = json.loads(raw[off:off + clen].decode("utf-8"))
    off += clen
    ids, untrained = [], set()
    for _ in range(count):
        ilen, flag = struct.unpack_from("<HB", raw, off)
        off += 3
        item_id = raw[off:off + ilen].decode("utf-8")
        off += ilen
        ids.append(item_id)
        if flag:
            untrained.add(item_id)
    n = count * dim
    w_in = np.frombuffer(raw, dtype="<f8", offset=off, count=n).reshape(count, dim).copy()
    off += n * 8
    w_out = np.frombuffer(raw, dtype="<f8", offset=off, count=n).reshape(count, dim).copy()
    return EmbeddingTable(
        dim=dim,
        ids=tuple(ids),
        input_vectors=w_in,
        output_vectors=w_out,
        config=CbowConfig(**cfg),
        untrained=frozenset(untrained),
    )
