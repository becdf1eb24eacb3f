import numpy as np
import pytest

from stylesearch.vecindex import (
    IndexError_,
    build_index,
    knn,
    load_index,
    save_index,
)


def _random_items(n, dim, seed):
    rng = np.random.default_rng(seed)
    return [(f"i{j:04d}", rng.normal(size=dim)) for j in range(n)]


def test_build_index_size():
    index = build_index(_random_items(3, 4, 0))
    assert len(index) == 3
    assert index.dim == 4


def test_duplicate_id_rejected():
    items = [("a", np.ones(3)), ("a", np.ones(3) * 2)]
    with pytest.raises(IndexError_, match="duplicate"):
        build_index(items)


def test_mixed_dimensions_rejected():
    with pytest.raises(IndexError_):
        build_index([("a", np.ones(3)), ("b", np.ones(4))])


def test_partitioned_build(tiny_corpus):
    items = [(i, tiny_corpus.items[i].visual_feature) for i in tiny_corpus.items]
    index = build_index(items, partition_by_class=True, corpus=tiny_corpus)
    assert index.partition_size("chair") == 2
    assert index.partition_size("table") == 1


def test_knn_identity_query():
    index = build_index(_random_items(10, 6, 1))
    target = index.vectors[4]
    out = knn(index, target, 1)
    assert out[0].item_id == index.ids[4]
    assert out[0].score == pytest.approx(0.0, abs=1e-12)


def test_knn_unit_circle_distances():
    index = build_index([("a", np.array([1.0, 0.0])), ("b", np.array([0.0, 1.0]))])
    out = knn(index, np.array([1.0, 0.0]), 2)
    assert [e.item_id for e in out] == ["a", "b"]
    assert out[0].score == pytest.approx(0.0)
    assert out[1].score == pytest.approx(np.sqrt(2.0))


def _bruteforce_knn(index, query, k):
    # Independent oracle: exhaustive scan with python sorting.
    from stylesearch.vectors import l2_normalize

    q = l2_normalize(query)
    scored = []
    for item_id, vec in zip(index.ids, index.vectors):
        scored.append((float(np.linalg.norm(vec - q)), item_id))
    scored.sort()
    return [item_id for _, item_id in scored[:k]]


def test_knn_matches_bruteforce_oracle():
    index = build_index(_random_items(200, 16, 2))
    rng = np.random.default_rng(3)
    for _ in range(20):
        query = rng.normal(size=16)
        got = [e.item_id for e in knn(index, query, 10)]
        assert got == _bruteforce_knn(index, query, 10)


def test_knn_tie_break_is_insertion_order_independent():
    # Duplicate vectors force ties; shuffled builds must agree.
    vec = np.array([1.0, 2.0, 3.0])
    items = [(f"i{j}", vec.copy()) for j in range(6)]
    a = knn(build_index(items), vec, 6)
    b = knn(build_index(list(reversed(items))), vec, 6)
    assert [e.item_id for e in a] == [e.item_id for e in b]
    assert [e.item_id for e in a] == sorted(e.item_id for e in a)


def test_knn_full_index_returns_each_entry_once():
    index = build_index(_random_items(25, 8, 4))
    out = knn(index, np.ones(8), 25)
    assert sorted(e.item_id for e in out) == sorted(index.ids)


def test_knn_scale_invariance():
    index = build_index(_random_items(50, 8, 5))
    rng = np.random.default_rng(6)
    q = rng.normal(size=8)
    base = [(e.item_id, e.score) for e in knn(index, q, 10)]
    for scale in (0.001, 7.5, 1e6):
        scaled = [(e.item_id, e.score) for e in knn(index, scale * q, 10)]
        assert [i for i, _ in scaled] == [i for i, _ in base]
        assert np.allclose([s for _, s in scaled], [s for _, s in base])


def test_euclidean_ordering_equals_cosine_ordering():
    # On unit vectors d^2 = 2 - 2 cos, so the orderings coincide.
    index = build_index(_random_items(100, 12, 7))
    rng = np.random.default_rng(8)
    for _ in range(5):
        q = rng.normal(size=12)
        qn = q / np.linalg.norm(q)
        by_dist = [e.item_id for e in knn(index, q, 100)]
        sims = index.vectors @ qn
        by_cos = [index.ids[i] for i in sorted(range(100), key=lambda i: (-sims[i], index.ids[i]))]
        assert by_dist == by_cos


def test_unknown_class_filter_rejected(tiny_corpus):
    items = [(i, tiny_corpus.items[i].visual_feature) for i in tiny_corpus.items]
    index = build_index(items, partition_by_class=True, corpus=tiny_corpus)
    with pytest.raises(IndexError_, match="sofa"):
        knn(index, np.ones(4), 1, class_filter="sofa")


def test_class_filter_restricts_results(tiny_corpus):
    items = [(i, tiny_corpus.items[i].visual_feature) for i in sorted(tiny_corpus.items)]
    index = build_index(items, partition_by_class=True, corpus=tiny_corpus)
    out = knn(index, np.ones(4), 5, class_filter="chair")
    assert sorted(e.item_id for e in out) == ["a", "c"]


def test_index_save_load_roundtrip(tmp_path, tiny_corpus):
    items = [(i, tiny_corpus.items[i].visual_feature) for i in sorted(tiny_corpus.items)]
    index = build_index(items, partition_by_class=True, corpus=tiny_corpus)
    save_index(tmp_path / "x.ssix", index)
    loaded = load_index(tmp_path / "x.ssix")
    assert loaded.ids == index.ids
    assert np.array_equal(loaded.vectors, index.vectors)
    assert loaded.classes() == index.classes()
