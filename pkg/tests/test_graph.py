import numpy as np
import pytest
from fractions import Fraction

from walkstitch import (EdgeListParseError, GraphError, UndefinedConductanceError,
                        VertexSet, boundary_size, conductance, load_cache,
                        load_edge_list, save_cache, stationary, volume)
from walkstitch.fixtures import (cycle_graph, gnp, path_graph, star_graph,
                                 two_cliques)


class TestLoadEdgeList:
    def test_two_edge_path(self):
        g = load_edge_list("0 1\n1 2")
        assert (g.n, g.m) == (3, 2)
        assert list(g.degrees) == [1, 2, 1]

    def test_dedupe_and_symmetry_collapse(self):
        g = load_edge_list("0 1\n1 0\n0 1")
        assert (g.n, g.m) == (2, 1)

    def test_comment_skip_and_remap(self):
        g = load_edge_list("# c\n5 7\n7 9")
        assert (g.n, g.m) == (3, 2)
        assert g.id_map == (5, 7, 9)

    def test_malformed_token_reports_line(self):
        with pytest.raises(EdgeListParseError, match="line 2"):
            load_edge_list("0 1\nx 2")

    def test_wrong_token_count_reports_line(self):
        with pytest.raises(EdgeListParseError, match="line 1"):
            load_edge_list("0 1 2")

    def test_negative_id_rejected(self):
        with pytest.raises(EdgeListParseError):
            load_edge_list("0 -1")

    def test_empty_graph_rejected(self):
        with pytest.raises(GraphError):
            load_edge_list("# only comments\n")
        with pytest.raises(GraphError):
            load_edge_list("3 3")  # all edges are dropped self-loops

    def test_self_loop_dropped_vertex_retained(self):
        g = load_edge_list("0 0\n0 1\n2 2")
        assert g.n == 3
        assert g.degree(2) == 0

    def test_retain_flags_rejected(self):
        with pytest.raises(GraphError, match="self-loops"):
            load_edge_list("0 1", drop_self_loops=False)
        with pytest.raises(GraphError, match="multigraph"):
            load_edge_list("0 1", dedupe=False)

    def test_adjacency_sorted_and_symmetric(self):
        g = gnp(40, 0.15, seed=5)
        g.check_invariants()


class TestQuantities:
    def test_volume_c6_arc(self):
        assert volume(cycle_graph(6), [0, 1, 2]) == 6

    def test_volume_empty(self):
        assert volume(cycle_graph(6), []) == 0

    def test_volume_star_center(self):
        assert volume(star_graph(4), [0]) == 4

    def test_boundary_c6_arc(self):
        assert boundary_size(cycle_graph(6), [0, 1, 2]) == 2

    def test_boundary_full_set(self):
        g = cycle_graph(6)
        assert boundary_size(g, range(6)) == 0

    def test_boundary_clique_pair_bridge(self):
        g = two_cliques(15)
        assert boundary_size(g, range(15)) == 1

    def test_conductance_c6_arc(self):
        assert conductance(cycle_graph(6), [0, 1, 2]) == Fraction(1, 3)

    def test_conductance_star_center(self):
        assert conductance(star_graph(4), [0]) == Fraction(1)

    def test_conductance_clique_pair(self):
        g = two_cliques(15)
        assert volume(g, range(15)) == 15 * 14 + 1
        assert conductance(g, range(15)) == Fraction(1, 211)

    def test_conductance_undefined(self):
        g = cycle_graph(6)
        with pytest.raises(UndefinedConductanceError):
            conductance(g, [])
        with pytest.raises(UndefinedConductanceError):
            conductance(g, range(6))

    def test_conductance_complement_symmetry(self):
        g = gnp(30, 0.2, seed=9)
        rng = np.random.Generator(np.random.PCG64(3))
        for _ in range(20):
            size = int(rng.integers(1, g.n))
            s = list(rng.choice(g.n, size=size, replace=False))
            comp = [v for v in range(g.n) if v not in set(s)]
            if volume(g, s) == 0 or volume(g, comp) == 0:
                continue
            assert conductance(g, s) == conductance(g, comp)

    def test_stationary_c6(self):
        psi = stationary(cycle_graph(6))
        assert all(abs(psi[v] - 1 / 6) < 1e-15 for v in range(6))

    def test_stationary_path3(self):
        psi = stationary(path_graph(3))
        assert [psi[0], psi[1], psi[2]] == [0.25, 0.5, 0.25]

    def test_stationary_k2(self):
        psi = stationary(path_graph(2))
        assert [psi[0], psi[1]] == [0.5, 0.5]

    def test_stationary_mass(self):
        for g in (cycle_graph(6), gnp(25, 0.3, seed=2), two_cliques(5)):
            assert abs(stationary(g).mass() - 1.0) < 1e-12

    def test_degree_sum_is_twice_m(self):
        for seed in range(5):
            g = gnp(30, 0.2, seed=seed)
            assert int(g.degrees.sum()) == 2 * g.m == g.volume


class TestConductanceDualComputation:
    def test_all_subsets_incremental_vs_direct(self):
        # n <= 16: every nonempty proper subset, Gray-code updates vs definition
        from walkstitch import oracle
        g = gnp(10, 0.35, seed=11)
        best_direct = None
        for mask in range(1, (1 << g.n) - 1):
            s = [v for v in range(g.n) if mask >> v & 1]
            vol = volume(g, s)
            if min(vol, g.volume - vol) <= 0:
                continue
            phi = conductance(g, s)
            if best_direct is None or phi < best_direct:
                best_direct = phi
        _, best_incremental = oracle.brute_conductance_min(g)
        assert best_incremental == best_direct


class TestVertexSet:
    def test_caches_volume(self):
        g = cycle_graph(6)
        s = VertexSet.of(g, [0, 1, 2])
        assert s.volume == 6
        assert volume(g, s) == 6

    def test_rejects_duplicates(self):
        with pytest.raises(GraphError):
            VertexSet.of(cycle_graph(6), [0, 0, 1])

    def test_rejects_out_of_range(self):
        with pytest.raises(GraphError):
            VertexSet.of(cycle_graph(6), [7])


class TestCache:
    def test_roundtrip(self, tmp_path):
        g = load_edge_list("# c\n5 7\n7 9\n9 5")
        path = tmp_path / "g.lwg"
        save_cache(g, str(path))
        h = load_cache(str(path))
        assert (h.n, h.m) == (g.n, g.m)
        assert np.array_equal(h.degrees, g.degrees)
        assert np.array_equal(h.neighbors, g.neighbors)
        assert np.array_equal(h.offsets, g.offsets)
        assert h.id_map == (5, 7, 9)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOPE" + bytes(64))
        with pytest.raises(GraphError, match="magic"):
            load_cache(str(path))
