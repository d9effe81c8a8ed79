import numpy as np
import pytest

from dmage import TrainConfig, train, two_block_sbm


def random_graph(rng, n=None, density=0.3, dims=4):
    """Random attributed graph for property tests (may be disconnected)."""
    from dmage.graph import AttributedGraph

    if n is None:
        n = int(rng.integers(4, 16))
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < density
    edges = frozenset(zip(iu[keep].tolist(), ju[keep].tolist()))
    features = rng.standard_normal((n, dims))
    return AttributedGraph(n, edges, features, None)


@pytest.fixture(scope="session")
def sbm_graph():
    return two_block_sbm(seed=0)


@pytest.fixture(scope="session")
def sbm_result(sbm_graph):
    """One shared short training run on the block-model fixture."""
    return train(sbm_graph, TrainConfig(epochs=60, seed=0))


@pytest.fixture
def toy_dataset(tmp_path):
    """Block-model graph written to disk in the CLI's input formats."""
    g = two_block_sbm(seed=0)
    edge_path = tmp_path / "edges.tsv"
    feature_path = tmp_path / "features.tsv"
    label_path = tmp_path / "labels.tsv"
    edge_path.write_text("".join(f"{i}\t{j}\n" for i, j in g.edge_array()))
    feature_path.write_text(
        "".join("\t".join(format(v, ".17g") for v in row) + "\n" for row in g.features)
    )
    label_path.write_text("".join(f"{v}\n" for v in g.labels))
    return {
        "graph": g,
        "edge_path": str(edge_path),
        "feature_path": str(feature_path),
        "label_path": str(label_path),
    }
