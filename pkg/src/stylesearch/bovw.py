"""Bag-of-visual-words baseline: k-means codebook, histogram encoding, search.

Local descriptors are ingested from files (the shared vector format, one
file per image); keypoint extraction itself is out of scope. Histograms
are raw term frequencies, L2-normalized, and compared with Euclidean
distance like the deep-feature index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .vecindex import RankedList, VectorIndex, knn


class BovwError(ValueError):
    """Raised for invalid codebook training inputs or dimension mismatches."""


@dataclass(eq=False)
class DescriptorSet:
    image_ref: str
    descriptors: np.ndarray  # (n, dim); n may be 0 for keypoint-free images


@dataclass(eq=False)
class Codebook:
    k: int
    centroids: np.ndarray  # (k, dim)
    training_seed: int


@dataclass(eq=False)
class BovwHistogram:
    counts: np.ndarray  # length-k, L2-normalized unless empty
    empty: bool = False


def _kmeanspp_init(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = data.shape[0]
    centroids = np.empty((k, data.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = data[first]
    d2 = np.sum((data - centroids[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            # All remaining points coincide with a chosen centroid.
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids[i] = data[idx]
        d2 = np.minimum(d2, np.sum((data - centroids[i]) ** 2, axis=1))
    return centroids


def _assign(data: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Squared distance to every centroid; argmin takes the lowest index on ties.
    d2 = (
        np.sum(data ** 2, axis=1)[:, None]
        - 2.0 * data @ centroids.T
        + np.sum(centroids ** 2, axis=1)[None, :]
    )
    np.maximum(d2, 0.0, out=d2)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(len(data)), labels]


def train_codebook(
    sets: list[DescriptorSet],
    k: int,
    seed: int,
    max_iters: int = 100,
    tol: float = 1e-6,
) -> Codebook:
    """Lloyd's k-means from seeded k-means++ initialization.

    Empty clusters are reseeded to the point farthest from its assigned
    centroid, so k never shrinks. Inertia is asserted non-increasing
    every iteration; a fixed seed reproduces the centroids exactly.
    """
    if k < 2:
        raise BovwError(f"k must be >= 2, got {k}")
    stacks = [np.atleast_2d(s.descriptors) for s in sets if len(s.descriptors)]
    if not stacks:
        raise BovwError("no descriptors to train on")
    data = np.vstack(stacks).astype(np.float64)
    if data.shape[0] < k:
        raise BovwError(f"{data.shape[0]} descriptors < k={k}")

    rng = np.random.default_rng(seed)
    centroids = _kmeanspp_init(data, k, rng)
    prev_inertia = np.inf
    for _ in range(max_iters):
        labels, d2 = _assign(data, centroids)
        inertia = float(d2.sum())
        assert inertia <= prev_inertia + 1e-9, "k-means inertia increased"
        prev_inertia = inertia
        new_centroids = centroids.copy()
        for c in range(k):
            mask = labels == c
            if mask.any():
                new_centroids[c] = data[mask].mean(axis=0)
            else:
                new_centroids[c] = data[int(np.argmax(d2))]
                d2[int(np.argmax(d2))] = 0.0
        shift = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        if shift < tol:
            break
    assert np.all(np.isfinite(centroids))
    return Codebook(k=k, centroids=centroids, training_seed=seed)


def quantize(dset: DescriptorSet, codebook: Codebook) -> BovwHistogram:
    """Assign each descriptor to its nearest centroid and L2-normalize counts."""
    descriptors = np.atleast_2d(dset.descriptors)
    if len(dset.descriptors) == 0:
        return BovwHistogram(counts=np.zeros(codebook.k), empty=True)
    if descriptors.shape[1] != codebook.centroids.shape[1]:
        raise BovwError(
            f"descriptor dim {descriptors.shape[1]} != "
            f"codebook dim {codebook.centroids.shape[1]}"
        )
    labels, _ = _assign(descriptors.astype(np.float64), codebook.centroids)
    counts = np.bincount(labels, minlength=codebook.k).astype(np.float64)
    return BovwHistogram(counts=counts / np.linalg.norm(counts))


def build_bovw_index(histograms: list[tuple[str, BovwHistogram]]) -> VectorIndex:
    """Index non-empty histograms by image reference."""
    entries = [(ref, h.counts) for ref, h in histograms if not h.empty]
    if not entries:
        raise BovwError("no non-empty histograms to index")
    ids = [ref for ref, _ in entries]
    return VectorIndex(ids, np.stack([v for _, v in entries]))


def bovw_search(index: VectorIndex, query: BovwHistogram, k: int) -> RankedList:
    """Euclidean kNN over normalized histograms (vecindex semantics)."""
    if query.empty:
        raise BovwError("cannot search with an empty-image histogram")
    return knn(index, query.counts, k)
