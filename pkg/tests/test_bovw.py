import numpy as np
import pytest

from stylesearch.bovw import (
    BovwError,
    BovwHistogram,
    Codebook,
    DescriptorSet,
    bovw_search,
    build_bovw_index,
    quantize,
    train_codebook,
)


def _blob_sets(rng, centers, per_blob=40, scale=0.05):
    sets = []
    for n, center in enumerate(centers):
        pts = center + scale * rng.normal(size=(per_blob, len(center)))
        sets.append(DescriptorSet(f"img{n}", pts))
    return sets


def test_codebook_recovers_blob_means():
    rng = np.random.default_rng(0)
    centers = np.array([[0.0, 0.0], [5.0, 5.0]])
    sets = _blob_sets(rng, centers)
    codebook = train_codebook(sets, k=2, seed=1)
    found = codebook.centroids[np.argsort(codebook.centroids[:, 0])]
    sample_means = np.stack([s.descriptors.mean(axis=0) for s in sets])
    assert np.all(np.linalg.norm(found - sample_means, axis=1) < 0.1)


def test_k_equals_descriptor_count_gives_zero_inertia():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(6, 3))
    codebook = train_codebook([DescriptorSet("img", pts)], k=6, seed=2)
    # Every descriptor must coincide with some centroid.
    for p in pts:
        assert min(np.linalg.norm(codebook.centroids - p, axis=1)) < 1e-9


def test_codebook_deterministic_per_seed():
    rng = np.random.default_rng(2)
    sets = _blob_sets(rng, np.array([[0.0, 0.0], [3.0, 3.0], [-3.0, 3.0]]))
    a = train_codebook(sets, k=3, seed=9)
    b = train_codebook(sets, k=3, seed=9)
    assert np.array_equal(a.centroids, b.centroids)


def test_too_few_descriptors_rejected():
    with pytest.raises(BovwError):
        train_codebook([DescriptorSet("img", np.ones((3, 2)))], k=5, seed=0)


def test_k_below_two_rejected():
    with pytest.raises(BovwError):
        train_codebook([DescriptorSet("img", np.ones((3, 2)))], k=1, seed=0)


def _toy_codebook():
    return Codebook(k=2, centroids=np.array([[0.0, 0.0], [10.0, 10.0]]), training_seed=0)


def test_quantize_empty_set_flagged():
    hist = quantize(DescriptorSet("img", np.empty((0, 2))), _toy_codebook())
    assert hist.empty
    assert np.all(hist.counts == 0)


def test_quantize_single_cluster():
    pts = np.zeros((4, 2)) + 0.1
    hist = quantize(DescriptorSet("img", pts), _toy_codebook())
    assert np.allclose(hist.counts, [1.0, 0.0])


def test_quantize_two_one_split():
    pts = np.array([[0.0, 0.1], [0.1, 0.0], [9.9, 10.0]])
    hist = quantize(DescriptorSet("img", pts), _toy_codebook())
    assert np.allclose(hist.counts, [2 / np.sqrt(5), 1 / np.sqrt(5)], atol=1e-9)
    assert np.linalg.norm(hist.counts) == pytest.approx(1.0, abs=1e-6)


def test_quantize_dim_mismatch():
    with pytest.raises(BovwError):
        quantize(DescriptorSet("img", np.ones((2, 3))), _toy_codebook())


def _two_cluster_pipeline(seed):
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0, 0.0], [8.0, 8.0, 8.0]])
    cluster_of = {}
    sets = []
    for n in range(10):
        c = n % 2
        pts = centers[c] + 0.1 * rng.normal(size=(30, 3))
        sets.append(DescriptorSet(f"img{n}", pts))
        cluster_of[f"img{n}"] = c
    codebook = train_codebook(sets, k=4, seed=seed)
    hists = [(s.image_ref, quantize(s, codebook)) for s in sets]
    return sets, codebook, hists, cluster_of


def test_search_identity_histogram():
    _, _, hists, _ = _two_cluster_pipeline(3)
    index = build_bovw_index(hists)
    out = bovw_search(index, hists[0][1], 1)
    assert out[0].item_id == "img0"
    assert out[0].score == pytest.approx(0.0, abs=1e-12)


def test_search_cluster_a_precedes_cluster_b():
    sets, codebook, hists, cluster_of = _two_cluster_pipeline(4)
    index = build_bovw_index(hists)
    query = quantize(sets[0], codebook)  # cluster 0
    out = bovw_search(index, query, 10)
    clusters = [cluster_of[e.item_id] for e in out]
    assert clusters == sorted(clusters)  # all 0s before all 1s


def test_search_k_larger_than_corpus():
    _, _, hists, _ = _two_cluster_pipeline(5)
    index = build_bovw_index(hists)
    out = bovw_search(index, hists[0][1], 99)
    assert len(out) == 10


def test_pipeline_bit_reproducible():
    _, _, hists_a, _ = _two_cluster_pipeline(6)
    _, _, hists_b, _ = _two_cluster_pipeline(6)
    for (ra, ha), (rb, hb) in zip(hists_a, hists_b):
        assert ra == rb
        assert np.array_equal(ha.counts, hb.counts)


def test_empty_histogram_cannot_query():
    _, _, hists, _ = _two_cluster_pipeline(7)
    index = build_bovw_index(hists)
    with pytest.raises(BovwError):
        bovw_search(index, BovwHistogram(np.zeros(4), empty=True), 3)
