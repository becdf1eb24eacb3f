import numpy as np
import pytest

from stylesearch.corpus import Corpus, Item, Room
from stylesearch.style_embed import (
    CbowConfig,
    EmbeddingError,
    cbow_loss_and_grads,
    cluster_quality,
    load_embeddings,
    make_pairs,
    save_embeddings,
    train_cbow,
)


def _corpus_from_rooms(room_sets, extra_items=()):
    ids = sorted({i for s in room_sets for i in s} | set(extra_items))
    items = {i: Item(id=i, class_label="chair") for i in ids}
    rooms = {
        f"r{n}": Room(id=f"r{n}", category="kitchen", ground_truth=set(s))
        for n, s in enumerate(room_sets)
    }
    return Corpus(items=items, rooms=rooms)


def test_make_pairs_three_item_room():
    pairs = make_pairs(_corpus_from_rooms([{"a", "b", "c"}]))
    as_tuples = {(p.target, p.context) for p in pairs}
    assert as_tuples == {
        ("a", ("b", "c")), ("b", ("a", "c")), ("c", ("a", "b")),
    }


def test_make_pairs_skips_single_item_rooms():
    assert make_pairs(_corpus_from_rooms([{"a"}])) == []


def test_make_pairs_keeps_duplicates():
    pairs = make_pairs(_corpus_from_rooms([{"a", "b"}, {"a", "b"}]))
    assert len(pairs) == 4


def test_zero_epochs_returns_seeded_init():
    corpus = _corpus_from_rooms([{"a", "b"}, {"b", "c"}], extra_items=["d", "e", "f", "g"])
    pairs = make_pairs(corpus)
    config = CbowConfig(dim=8, epochs=0, negatives=2, seed=5)
    table = train_cbow(pairs, sorted(corpus.items), config)
    rng = np.random.default_rng(5)
    expected = rng.uniform(-0.5, 0.5, size=(7, 8)) / 8
    assert np.array_equal(table.input_vectors, expected)


def test_loss_decreases(two_clique_corpus):
    pairs = make_pairs(two_clique_corpus)
    table = train_cbow(pairs, sorted(two_clique_corpus.items),
                       CbowConfig(dim=16, epochs=30, seed=1))
    assert table.loss_history[-1] < table.loss_history[0]
    assert all(np.isfinite(v) for v in table.loss_history)


def test_final_stretch_below_first_epoch_for_all_seeds(two_clique_corpus):
    pairs = make_pairs(two_clique_corpus)
    vocab = sorted(two_clique_corpus.items)
    for seed in range(1, 6):
        table = train_cbow(pairs, vocab, CbowConfig(dim=16, epochs=50, seed=seed))
        tail = table.loss_history[-max(1, len(table.loss_history) // 10):]
        assert max(tail) < table.loss_history[0]


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    V, dim = 3, 4
    w_in = rng.normal(size=(V, dim))
    w_out = rng.normal(size=(V, dim))
    target, context, negs = 0, np.array([1, 2]), np.array([1])

    def loss_fn(w_in_, w_out_):
        return cbow_loss_and_grads(w_in_, w_out_, target, context, negs)[0]

    _, grad_ctx, out_grads = cbow_loss_and_grads(w_in, w_out, target, context, negs)
    eps = 1e-6
    for ci in context:
        for d in range(dim):
            wp, wm = w_in.copy(), w_in.copy()
            wp[ci, d] += eps
            wm[ci, d] -= eps
            fd = (loss_fn(wp, w_out) - loss_fn(wm, w_out)) / (2 * eps)
            assert abs(fd - grad_ctx[d]) <= 1e-4 * max(1.0, abs(fd))
    for row, grad in out_grads.items():
        for d in range(dim):
            wp, wm = w_out.copy(), w_out.copy()
            wp[row, d] += eps
            wm[row, d] -= eps
            fd = (loss_fn(w_in, wp) - loss_fn(w_in, wm)) / (2 * eps)
            assert abs(fd - grad[d]) <= 1e-4 * max(1.0, abs(fd))


def test_deterministic_tables_byte_identical(tmp_path, two_clique_corpus):
    pairs = make_pairs(two_clique_corpus)
    vocab = sorted(two_clique_corpus.items)
    config = CbowConfig(dim=8, epochs=10, seed=4)
    save_embeddings(tmp_path / "a.emb", train_cbow(pairs, vocab, config))
    save_embeddings(tmp_path / "b.emb", train_cbow(pairs, vocab, config))
    assert (tmp_path / "a.emb").read_bytes() == (tmp_path / "b.emb").read_bytes()


def test_untrained_items_flagged():
    corpus = _corpus_from_rooms([{"a", "b"}], extra_items=["x", "y", "z", "w", "v"])
    pairs = make_pairs(corpus)
    table = train_cbow(pairs, sorted(corpus.items), CbowConfig(dim=4, epochs=2, negatives=2, seed=0))
    assert {"x", "y", "z", "w", "v"} <= set(table.untrained)
    assert "a" not in table.untrained


def test_vocab_smaller_than_negatives_rejected():
    corpus = _corpus_from_rooms([{"a", "b"}])
    with pytest.raises(EmbeddingError):
        train_cbow(make_pairs(corpus), ["a", "b"], CbowConfig(negatives=5))


def test_empty_pairs_rejected():
    with pytest.raises(EmbeddingError):
        train_cbow([], ["a", "b", "c", "d", "e", "f"], CbowConfig())


def test_cluster_quality_identical_vectors():
    table = train_cbow(
        make_pairs(_corpus_from_rooms([{"a", "b"}], extra_items=["c", "d", "e", "f"])),
        ["a", "b", "c", "d", "e", "f"],
        CbowConfig(dim=4, epochs=0, negatives=2, seed=0),
    )
    table.input_vectors[:] = 1.0
    intra, inter = cluster_quality(table, {i: ("g1" if i < "d" else "g2") for i in table.ids})
    assert intra == pytest.approx(0.0, abs=1e-12)
    assert inter == pytest.approx(0.0, abs=1e-12)


def test_cluster_quality_orthogonal_groups():
    table = train_cbow(
        make_pairs(_corpus_from_rooms([{"a", "b"}], extra_items=["c", "d", "e", "f"])),
        ["a", "b", "c", "d", "e", "f"],
        CbowConfig(dim=4, epochs=0, negatives=2, seed=0),
    )
    onehots = {True: np.array([1.0, 0, 0, 0]), False: np.array([0, 1.0, 0, 0])}
    for i, item_id in enumerate(table.ids):
        table.input_vectors[i] = onehots[item_id < "d"]
    intra, inter = cluster_quality(table, {i: ("g1" if i < "d" else "g2") for i in table.ids})
    assert intra == pytest.approx(0.0, abs=1e-12)
    assert inter == pytest.approx(1.0, abs=1e-12)


def test_save_load_roundtrip(tmp_path, two_clique_corpus):
    pairs = make_pairs(two_clique_corpus)
    table = train_cbow(pairs, sorted(two_clique_corpus.items), CbowConfig(dim=8, epochs=5, seed=2))
    save_embeddings(tmp_path / "t.emb", table)
    loaded = load_embeddings(tmp_path / "t.emb")
    assert loaded.ids == table.ids
    assert np.array_equal(loaded.input_vectors, table.input_vectors)
    assert loaded.untrained == table.untrained
    assert loaded.config == table.config
