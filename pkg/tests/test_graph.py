import math

import numpy as np
import pytest
from conftest import brute_independence_number, brute_min_dominating_size, random_graph

from graphbandit.errors import IngestError
from graphbandit.graph import (
    EdgeProbabilityTable,
    NominalGraph,
    VertexSet,
    expected_observations,
    greedy_dominating_set,
    in_neighbors,
    independence_number,
    load_graph_file,
    out_neighbors,
)


class TestConstruction:
    def test_self_loop_required(self):
        adj = np.eye(3, dtype=bool)
        adj[1, 1] = False
        with pytest.raises(ValueError, match="self-loop"):
            NominalGraph(adj)

    def test_square_required(self):
        with pytest.raises(ValueError, match="square"):
            NominalGraph(np.ones((2, 3), dtype=bool))

    def test_adjacency_is_immutable(self):
        g = NominalGraph.complete(3)
        with pytest.raises(ValueError):
            g.adjacency[0, 1] = False

    def test_vertex_set_rejects_duplicates_and_zero(self):
        with pytest.raises(ValueError):
            VertexSet((1, 1))
        with pytest.raises(ValueError):
            VertexSet((0, 2))

    def test_probability_table_checks_edges(self):
        g = NominalGraph.bandit(2)
        bad = np.array([[0.5, 0.2], [0.0, 0.5]])  # (1,2) is not an edge
        with pytest.raises(ValueError, match="non-edge"):
            EdgeProbabilityTable.from_probs(g, bad)
        with pytest.raises(ValueError, match="epsilon"):
            EdgeProbabilityTable.from_probs(g, np.eye(2) * 0.5, epsilon=0.9)


class TestNeighborhoods:
    def test_out_neighbors_complete(self):
        assert out_neighbors(NominalGraph.complete(3), 1).members == (1, 2, 3)

    def test_out_neighbors_bandit(self):
        assert out_neighbors(NominalGraph.bandit(4), 2).members == (2,)

    def test_out_neighbors_star_leaf(self):
        star = NominalGraph.from_edges(4, [(1, 1), (1, 2), (1, 3), (1, 4), (2, 2), (3, 3), (4, 4)])
        assert out_neighbors(star, 3).members == (3,)

    def test_in_neighbors_complete(self):
        assert in_neighbors(NominalGraph.complete(3), 2).members == (1, 2, 3)

    def test_in_neighbors_star(self):
        star = NominalGraph.from_edges(4, [(1, 1), (1, 2), (1, 3), (1, 4), (2, 2), (3, 3), (4, 4)])
        assert in_neighbors(star, 3).members == (1, 3)

    def test_in_neighbors_bandit(self):
        assert in_neighbors(NominalGraph.bandit(4), 4).members == (4,)

    def test_index_out_of_range(self):
        with pytest.raises(ValueError):
            out_neighbors(NominalGraph.complete(3), 4)
        with pytest.raises(ValueError):
            in_neighbors(NominalGraph.complete(3), 0)

    def test_out_in_are_transposes(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            g = random_graph(rng, int(rng.integers(2, 9)))
            for i in range(1, g.num_experts + 1):
                for j in range(1, g.num_experts + 1):
                    assert (j in out_neighbors(g, i)) == (i in in_neighbors(g, j))


class TestGreedyDominatingSet:
    def test_complete_graph_single_vertex(self):
        assert greedy_dominating_set(NominalGraph.complete(5)).members == (1,)

    def test_bandit_graph_needs_everyone(self):
        assert greedy_dominating_set(NominalGraph.bandit(4)).members == (1, 2, 3, 4)

    def test_two_hub_graph(self):
        # 1 -> {1,2,3}, 4 -> {4,5}, self-loops elsewhere; {1,4} is a minimum
        # cover (verified by enumeration below) and greedy finds exactly it.
        g = NominalGraph.from_edges(5, [(1, 1), (1, 2), (1, 3), (2, 2), (3, 3), (4, 4), (4, 5), (5, 5)])
        result = greedy_dominating_set(g)
        assert result.members == (1, 4)
        assert brute_min_dominating_size(g) == 2

    def test_covers_all_vertices_on_random_graphs(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            g = random_graph(rng, int(rng.integers(1, 13)), density=rng.uniform(0.05, 0.9))
            dom = greedy_dominating_set(g)
            covered = np.zeros(g.num_experts, dtype=bool)
            for v in dom:
                covered |= g.adjacency[v - 1]
            assert covered.all()

    def test_approximation_factor_versus_brute_force(self):
        rng = np.random.default_rng(13)
        for _ in range(120):
            k = int(rng.integers(2, 13))
            g = random_graph(rng, k, density=rng.uniform(0.05, 0.9))
            greedy_size = len(greedy_dominating_set(g))
            optimum = brute_min_dominating_size(g)
            assert greedy_size <= optimum * (1 + math.log(k))


class TestIndependenceNumber:
    def test_complete(self):
        assert independence_number(NominalGraph.complete(6)) == 1

    def test_bandit(self):
        assert independence_number(NominalGraph.bandit(7)) == 7

    def test_bidirectional_five_cycle(self):
        edges = [(i, i) for i in range(1, 6)]
        for a, b in [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1)]:
            edges += [(a, b), (b, a)]
        g = NominalGraph.from_edges(5, edges)
        assert independence_number(g) == 2
        assert brute_independence_number(g) == 2

    def test_extremes_for_all_small_sizes(self):
        for k in range(1, 11):
            assert independence_number(NominalGraph.complete(k)) == 1
            assert independence_number(NominalGraph.bandit(k)) == k

    def test_matches_brute_force_on_random_graphs(self):
        rng = np.random.default_rng(17)
        for _ in range(120):
            g = random_graph(rng, int(rng.integers(2, 11)), density=rng.uniform(0.05, 0.9))
            assert independence_number(g) == brute_independence_number(g)

    def test_size_limit(self):
        with pytest.raises(ValueError, match="K <= 25"):
            independence_number(NominalGraph.bandit(26))


class TestExpectedObservations:
    def test_complete_equal_quarter(self):
        g = NominalGraph.complete(3)
        p = EdgeProbabilityTable.constant(g, 0.25)
        assert expected_observations(g, p, 1) == pytest.approx(0.75)

    def test_bandit_unit(self):
        g = NominalGraph.bandit(4)
        p = EdgeProbabilityTable.constant(g, 1.0)
        for i in range(1, 5):
            assert expected_observations(g, p, i) == 1.0

    def test_hand_sum_k2(self):
        g = NominalGraph.complete(2)
        p = EdgeProbabilityTable.from_probs(g, np.array([[0.5, 0.5], [0.3, 0.9]]))
        assert expected_observations(g, p, 2) == pytest.approx(1.2)

    def test_bad_index(self):
        g = NominalGraph.complete(2)
        p = EdgeProbabilityTable.constant(g, 0.5)
        with pytest.raises(ValueError):
            expected_observations(g, p, 3)


class TestGraphFile:
    def test_complete_shorthand(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("K=3\ncomplete 0.25\n")
        g, probs = load_graph_file(path)
        assert g == NominalGraph.complete(3)
        assert np.allclose(probs, 0.25)

    def test_bandit_shorthand_no_probs(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("K=4\nbandit\n")
        g, probs = load_graph_file(path)
        assert g == NominalGraph.bandit(4)
        assert probs is None

    def test_edge_list_with_probs(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text(
            "K=2\n"
            "edge 1 1 0.5\n"
            "edge 1 2 0.25  # cross edge\n"
            "edge 2 2 1.0\n"
        )
        g, probs = load_graph_file(path)
        assert g.adjacency.tolist() == [[True, True], [False, True]]
        assert probs[0, 1] == 0.25

    def test_missing_self_loop_is_an_error(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("K=2\nedge 1 1\nedge 1 2\n")
        with pytest.raises(IngestError, match="self-loop"):
            load_graph_file(path)

    def test_mixed_probabilities_rejected(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("K=2\nedge 1 1 0.5\nedge 1 2\nedge 2 2 0.5\n")
        with pytest.raises(IngestError, match="all edges or none"):
            load_graph_file(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("experts: 3\n")
        with pytest.raises(IngestError, match="K="):
            load_graph_file(path)
