import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edgemod.errors import (Disconnected, DuplicateEdge, InvalidNodeSet,
                            NegativeResultingWeight, NetworkFormatError,
                            NonPositiveWeight, ParseError,
                            SpectralConditionViolated, UnstableNetwork,
                            ZeroSpectralRadius)
from edgemod.graph_model import (EdgeMod, Kind, Network, apply_mod,
                                 build_network, complete_graph, diameter,
                                 erdos_renyi, fig2_network, grid_graph,
                                 network_from_dict, network_to_dict,
                                 path_graph, read_network, write_edgelist,
                                 write_json)


class TestBuild:
    def test_empty_edge_list_is_stable(self):
        net = build_network(3, [], [0], [1])
        assert np.array_equal(net.A, np.zeros((3, 3)))
        assert net.spectral_radius() == 0.0

    def test_chain_entry_and_nilpotent(self):
        net = build_network(2, [(0, 1, 0.5)], [0], [1])
        assert net.A[1, 0] == 0.5 and net.A[0, 1] == 0.0
        assert net.spectral_radius() == pytest.approx(0.0, abs=1e-15)

    def test_input_output_matrices(self):
        net = build_network(3, [(0, 1, 0.5)], [2, 0], [1])
        B, C = net.input_matrix, net.output_matrix
        assert B.shape == (3, 2) and C.shape == (1, 3)
        assert B[2, 0] == 1 and B[0, 1] == 1 and C[0, 1] == 1

    def test_path20_valid(self):
        net = path_graph(20, 0.2)
        assert np.all(net.adjacency.sum(axis=1) <= 0.4 + 1e-15)
        lmax = 0.4 * (1 - np.cos(19 * np.pi / 20))
        assert net.spectral_radius() == pytest.approx(lmax, rel=1e-12)
        assert net.spectral_radius() < 1.0

    def test_laplacian_state_matrix(self):
        net = path_graph(3, 0.2)
        L = net.laplacian
        assert np.allclose(L @ np.ones(3), 0)
        assert np.allclose(net.A, np.eye(3) - L)

    @pytest.mark.parametrize("w", [0.0, -0.1, float("nan")])
    def test_nonpositive_weight(self, w):
        with pytest.raises(NonPositiveWeight):
            build_network(2, [(0, 1, w)], [0], [1])

    def test_duplicate_edge(self):
        with pytest.raises(DuplicateEdge):
            build_network(2, [(0, 1, 0.1), (0, 1, 0.2)], [0], [1])
        with pytest.raises(DuplicateEdge):
            build_network(2, [(0, 1, 0.1), (1, 0, 0.2)], [0, 1], [0, 1],
                          Kind.LAPLACIAN)

    def test_direct_reverse_edges_are_distinct(self):
        net = build_network(2, [(0, 1, 0.1), (1, 0, 0.2)], [0], [1])
        assert net.n_edges == 2

    def test_unstable(self):
        with pytest.raises(UnstableNetwork):
            build_network(2, [(0, 1, 1.0), (1, 0, 1.0)], [0], [1])

    def test_rho_below_one(self):
        with pytest.raises(SpectralConditionViolated):
            path_graph(3, 0.4)  # rho(L) = 1.2

    def test_disconnected(self):
        with pytest.raises(Disconnected):
            build_network(4, [(0, 1, 0.1), (2, 3, 0.1)], range(4), range(4),
                          Kind.LAPLACIAN)

    @pytest.mark.parametrize("K", [[], [0, 0], [5]])
    def test_bad_node_sets(self, K):
        with pytest.raises(InvalidNodeSet):
            build_network(2, [], K, [1])

    def test_arrays_are_read_only(self):
        net = build_network(2, [(0, 1, 0.5)], [0], [1])
        with pytest.raises(ValueError):
            net.adjacency[0, 0] = 1.0

    def test_edges_listing(self):
        net = build_network(3, [(2, 0, 0.1), (0, 1, 0.2)], [0], [1])
        assert net.edges() == [(0, 1, 0.2), (2, 0, 0.1)]
        lap = complete_graph(3, 0.1)
        assert [(i, j) for i, j, _ in lap.edges()] == [(0, 1), (0, 2), (1, 2)]


class TestApplyMod:
    def test_single_entry_write(self):
        net = build_network(2, [], [0], [1])
        out = apply_mod(net, EdgeMod(0, 1, 0.5))
        assert out.A[1, 0] == 0.5 and out.A.sum() == 0.5

    def test_removal_is_exact_zero(self):
        net = build_network(2, [(0, 1, 0.37)], [0], [1])
        out = apply_mod(net, EdgeMod(0, 1, -0.37))
        assert out.A[1, 0] == 0.0

    def test_negative_result(self):
        net = build_network(2, [(0, 1, 0.3)], [0], [1])
        with pytest.raises(NegativeResultingWeight):
            apply_mod(net, EdgeMod(0, 1, -0.31))

    def test_self_edge_rejected(self):
        with pytest.raises(ValueError):
            EdgeMod(1, 1, 0.1)

    def test_laplacian_triangle(self):
        out = apply_mod(path_graph(3, 0.2), EdgeMod(0, 2, 0.2))
        assert np.allclose(out.A.sum(axis=1), 1.0)
        assert np.allclose(out.A.sum(axis=0), 1.0)
        assert np.allclose(np.linalg.eigvalsh(out.laplacian), [0, 0.6, 0.6])

    def test_laplacian_rejects_removal(self):
        with pytest.raises(ValueError):
            apply_mod(path_graph(3, 0.2), EdgeMod(0, 2, -0.1))

    def test_laplacian_rho_below_one_after(self):
        with pytest.raises(SpectralConditionViolated):
            apply_mod(path_graph(3, 0.2), EdgeMod(0, 1, 0.5))

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1), frac=st.floats(0.01, 0.99))
    def test_round_trip(self, seed, frac):
        rng = np.random.default_rng(seed)
        net = erdos_renyi(8, 0.3, 0.8, seed)
        s, t = (int(v) for v in rng.choice(8, 2, replace=False))
        w = frac * 0.1
        back = apply_mod(apply_mod(net, EdgeMod(s, t, w)), EdgeMod(s, t, -w))
        # a + w - w is exact up to one rounding of the sum
        assert np.allclose(back.A, net.A, rtol=0, atol=2 * np.spacing(1.0))
        mask = np.ones((8, 8), bool)
        mask[t, s] = False
        assert np.array_equal(back.A[mask], net.A[mask])

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1))
    def test_laplacian_rows_after_addition(self, seed):
        rng = np.random.default_rng(seed)
        net = path_graph(8, 0.15)
        s, t = (int(v) for v in rng.choice(8, 2, replace=False))
        out = apply_mod(net, EdgeMod(s, t, 0.1))
        L = out.laplacian
        assert np.allclose(L @ np.ones(8), 0, atol=1e-15)
        assert np.allclose(np.ones(8) @ L, 0, atol=1e-15)


class TestGenerators:
    def test_er_fig2_scale(self):
        net = erdos_renyi(500, 0.02, 0.9, seed=3)
        assert abs(net.spectral_radius() - 0.9) <= 0.9 * 1e-12
        assert np.all(net.A >= 0) and np.all(np.diag(net.A) == 0)

    def test_er_deterministic(self):
        a = erdos_renyi(50, 0.1, 0.9, seed=11)
        b = erdos_renyi(50, 0.1, 0.9, seed=11)
        assert a == b
        assert erdos_renyi(50, 0.1, 0.9, seed=12) != a

    def test_er_undirected(self):
        net = erdos_renyi(30, 0.2, 0.5, seed=1, directed=False)
        assert np.array_equal(net.A, net.A.T)

    def test_er_degenerate_draw(self):
        with pytest.raises(ZeroSpectralRadius):
            erdos_renyi(3, 1e-12, 0.5, seed=0)

    def test_fig2_io(self):
        net = fig2_network(seed=5)
        assert len(net.inputs) == 50 and len(net.outputs) == 100
        assert fig2_network(seed=5) == net

    def test_path_spectra(self):
        assert np.allclose(np.linalg.eigvalsh(path_graph(2, 0.2).laplacian),
                           [0, 0.4])
        assert np.allclose(np.linalg.eigvalsh(path_graph(3, 0.2).laplacian),
                           [0, 0.2, 0.6])

    def test_diameters(self):
        assert diameter(path_graph(20, 0.2)) == 19
        assert diameter(complete_graph(5, 0.1)) == 1
        assert diameter(grid_graph(3, 4, 0.1)) == 5


class TestSerialization:
    def test_json_round_trip(self, tmp_path):
        net = erdos_renyi(40, 0.1, 0.9, seed=2).with_io([1, 5], [0, 3, 7])
        path = tmp_path / "net.json"
        write_json(net, path)
        assert read_network(path) == net

    def test_laplacian_round_trip(self, tmp_path):
        net = grid_graph(3, 3, 0.1)
        path = tmp_path / "grid.json"
        write_json(net, path)
        assert read_network(path) == net
        data = json.loads(path.read_text())
        assert all(i < j for i, j, _ in data["edges"])

    def test_edgelist_round_trip(self, tmp_path):
        net = erdos_renyi(30, 0.1, 0.7, seed=4).with_io([0], [1, 2])
        write_edgelist(net, tmp_path / "e.txt", tmp_path / "e.json")
        assert read_network(tmp_path / "e.txt") == net

    def test_dict_format(self):
        d = network_to_dict(build_network(2, [(0, 1, 0.5)], [0], [1]))
        assert d == {"n": 2, "kind": "direct", "edges": [[0, 1, 0.5]],
                     "inputs": [0], "outputs": [1]}
        assert network_from_dict(d) == build_network(2, [(0, 1, 0.5)], [0], [1])

    def test_parse_errors(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ParseError):
            read_network(bad)
        with pytest.raises(ParseError):
            network_from_dict({"n": 2})
        with pytest.raises(NetworkFormatError):
            network_from_dict({"n": 2, "edges": [[0, 5, 0.1]], "inputs": [0],
                               "outputs": [1]})

    def test_negative_weight_file(self, tmp_path):
        path = tmp_path / "neg.json"
        path.write_text(json.dumps({"n": 2, "kind": "direct",
                                    "edges": [[0, 1, -0.5]],
                                    "inputs": [0], "outputs": [1]}))
        with pytest.raises(NonPositiveWeight):
            read_network(path)
        with pytest.raises(NonPositiveWeight):
            read_network(path, check=False)

    def test_unchecked_read_keeps_unstable(self, tmp_path):
        path = tmp_path / "u.json"
        path.write_text(json.dumps({"n": 2, "edges": [[0, 1, 2.0], [1, 0, 2.0]],
                                    "inputs": [0], "outputs": [1]}))
        net = read_network(path, check=False)
        assert net.spectral_radius() == pytest.approx(2.0)
        with pytest.raises(UnstableNetwork):
            read_network(path)

    def test_network_equality_is_exact(self):
        a = Network(np.array([[0, 0], [0.5, 0]]), [0], [1])
        b = Network(np.array([[0, 0], [0.5 + 1e-16, 0]]), [0], [1])
        assert a == Network(np.array([[0, 0], [0.5, 0]]), [0], [1])
        assert (a == b) == (0.5 == 0.5 + 1e-16)
