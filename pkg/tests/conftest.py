import numpy as np
import pytest

from stylesearch.corpus import Corpus, Item, Room, SynthSpec, synth_corpus


@pytest.fixture
def tiny_corpus():
    """Three items, one room, fixed 4-dim features."""
    items = {
        "a": Item(id="a", class_label="chair", name="chair a",
                  description=["red", "chair"],
                  visual_feature=np.array([1.0, 0.0, 0.0, 0.0])),
        "b": Item(id="b", class_label="table", name="table b",
                  description=["red", "table"],
                  visual_feature=np.array([0.0, 1.0, 0.0, 0.0])),
        "c": Item(id="c", class_label="chair", name="chair c",
                  description=["blue", "chair"],
                  visual_feature=np.array([0.0, 0.0, 1.0, 0.0])),
    }
    rooms = {
        "r1": Room(id="r1", category="kitchen", description=["red", "kitchen"],
                   ground_truth={"a", "b"}),
    }
    return Corpus(items=items, rooms=rooms, meta={"feature_dim": "4"})


@pytest.fixture(scope="session")
def two_clique_corpus():
    """Two disjoint 5-item cliques, the CBOW separation substrate."""
    return synth_corpus(SynthSpec(clusters=2, items_per_cluster=5, rooms_per_cluster=10), seed=3)


def gt_sets(corpus):
    return {r.id: set(r.ground_truth) for r in corpus.rooms.values()}
