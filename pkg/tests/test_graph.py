import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdsgraphon.graph import (
    WeightedGraph,
    bin_index,
    build_rds_graph,
    pair_counts,
    scale,
    to_step_graphon,
)
from rdsgraphon.graphon import ConstantGraphon, bin_average, normalize, ProductGraphon
from rdsgraphon.sampler import ChainTrajectory, sample_trajectory

points = st.lists(st.floats(0.0, 1.0), min_size=2, max_size=60)


@pytest.mark.parametrize("x,n,expected", [(0.25, 4, 2), (1.0, 4, 4), (0.0, 7, 1), (0.999, 4, 4), (0.5, 2, 2)])
def test_bin_index_examples(x, n, expected):
    assert bin_index(x, n) == expected


def test_bin_index_vectorised():
    np.testing.assert_array_equal(bin_index(np.array([0.0, 0.49, 0.5, 1.0]), 2), [1, 1, 2, 2])


@pytest.mark.parametrize("x", [-0.01, 1.01, np.inf])
def test_bin_index_out_of_range(x):
    with pytest.raises(ValueError):
        bin_index(x, 3)


def test_pair_count_examples():
    pc = pair_counts(ChainTrajectory(0, [0.1, 0.6]), 2)
    assert pc.counts[0, 1] == 1 and pc.diag.sum() == 0
    pc = pair_counts(ChainTrajectory(0, [0.1, 0.2, 0.6]), 2)
    assert pc.diag[0] == 1 and pc.counts[0, 1] == 1
    pc = pair_counts(ChainTrajectory(0, [0.9, 0.1, 0.95]), 2)
    assert pc.counts[0, 1] == 2 and pc.counts[1, 0] == 2


def test_pair_counts_need_two_points():
    with pytest.raises(ValueError):
        pair_counts(ChainTrajectory(0, [0.3]), 2)


def test_build_graph_examples():
    G = build_rds_graph(ChainTrajectory(0, [0.1, 0.6]), 2)
    assert G.weights[0, 1] == 0.5 and G.weights[1, 0] == 0.5
    G = build_rds_graph(ChainTrajectory(0, [0.1, 0.2, 0.05, 0.3]), 2)
    assert not G.weights.any()
    # seven crossings still give a single half-weight edge
    G = build_rds_graph(ChainTrajectory(0, [0.1, 0.9] * 4), 2)
    assert pair_counts(ChainTrajectory(0, [0.1, 0.9] * 4), 2).counts[0, 1] == 7
    assert G.weights[0, 1] == 0.5


@settings(max_examples=100, deadline=None)
@given(points, st.integers(1, 9))
def test_graph_invariants(pts, n):
    pc = pair_counts(pts, n)
    G = build_rds_graph(pts, n)
    assert pc.total == len(pts) - 1
    assert np.array_equal(pc.counts, pc.counts.T)
    assert set(np.unique(G.weights)) <= {0.0, 0.5}
    np.testing.assert_array_equal(G.weights == 0.5, pc.counts >= 1)
    assert not G.weights.diagonal().any()


@settings(max_examples=60, deadline=None)
@given(points, points, st.integers(1, 9))
def test_extension_never_removes_edges(a, b, n):
    before = build_rds_graph(a, n).weights
    after = build_rds_graph(a + b, n).weights
    assert np.all(after >= before)


def test_scale_examples():
    G = build_rds_graph(ChainTrajectory(0, [0.1, 0.6]), 4)
    assert scale(G, 1.0) == G
    assert not scale(G, 0.0).weights.any()
    assert scale(G, 16 / 8).weights[0, 2] == 1.0


def test_to_step_graphon_examples():
    assert not to_step_graphon(WeightedGraph(np.zeros((3, 3)))).values.any()
    s = to_step_graphon(WeightedGraph([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_array_equal(s.values, [[0, 1], [1, 0]])
    n, N = 4, 8
    G = scale(build_rds_graph(ChainTrajectory(0, [0.1, 0.6]), n), n ** 2 / N)
    assert to_step_graphon(G).values[0, 2] == n ** 2 / (2 * N)


def test_weighted_graph_validation_and_edges(tmp_path):
    with pytest.raises(ValueError):
        WeightedGraph([[0.0, 1.0], [0.5, 0.0]])
    with pytest.raises(ValueError):
        WeightedGraph(np.zeros(3))
    G = WeightedGraph([[0, 0.5, 0], [0.5, 0, 0.5], [0, 0.5, 0]])
    assert G.edge_count == 2
    assert G.edges() == [(1, 2, 0.5), (2, 3, 0.5)]
    path = tmp_path / "g.csv"
    G.to_csv(path)
    assert path.read_text().splitlines() == ["i,j,weight", "1,2,0.5", "2,3,0.5"]


def test_sparse_regime_edge_fraction_shrinks():
    fractions = []
    for n in (8, 16, 32, 64):
        N = round(n ** 1.5)
        frac = [build_rds_graph(sample_trajectory(ConstantGraphon(1.0), N, s), n).edge_count / n ** 2 for s in range(5)]
        fractions.append(np.mean(frac))
    assert all(a > b for a, b in zip(fractions, fractions[1:]))


def test_mean_pair_count_identity():
    n, N, reps = 4, 200, 400
    g = ProductGraphon(1.0, 1.0)
    mu = bin_average(normalize(g), n).values
    counts = np.array([pair_counts(sample_trajectory(g, N, s), n).counts for s in range(reps)], dtype=float)
    mean = counts.mean(axis=0)
    se = counts.std(axis=0, ddof=1) / np.sqrt(reps)
    i, j = np.triu_indices(n, 1)
    # E E_n(i, j) = 2 N mu_n(i, j) / n^2
    assert np.all(np.abs(mean[i, j] - 2 * N * mu[i, j] / n ** 2) < 3 * se[i, j] + 1e-12)
