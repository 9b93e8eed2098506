"""Brute-force solvers and the grid transfer-matrix oracle."""

import math

import numpy as np
import pytest

from localmrf import (
    Graph,
    PairwiseMrf,
    brute_log_z,
    brute_map,
    brute_max_marginal,
    component_solve,
    criscross_graph,
    detect_grid,
    energy,
    grid_graph,
    grid_transfer_log_z,
    grid_transfer_map,
)
from localmrf.core import CapExceeded

from helpers import (
    oracle_log_z,
    oracle_map_reversed,
    oracle_max_marginal,
    random_graph,
    random_mrf,
)


def single_node(phi):
    return PairwiseMrf(Graph(1, []), len(phi), [phi], {})


def coupled_pair(psi11=1.0):
    table = [[0.0, 0.0], [0.0, psi11]]
    return PairwiseMrf(Graph(2, [(0, 1)]), 2, [[0, 0], [0, 0]], {(0, 1): table})


class TestBruteLogZ:
    def test_uniform_node(self):
        assert brute_log_z(single_node([0.0, 0.0])) == pytest.approx(math.log(2))

    def test_biased_node(self):
        assert brute_log_z(single_node([0.0, 1.0])) == pytest.approx(
            math.log(1 + math.e)
        )

    def test_coupled_pair(self):
        assert brute_log_z(coupled_pair()) == pytest.approx(math.log(3 + math.e))

    def test_matches_plain_oracle(self):
        rng = np.random.default_rng(0)
        for q in (2, 3):
            m = random_mrf(rng, random_graph(rng, 5, 0.5), q=q, lo=-1, hi=1)
            assert brute_log_z(m) == pytest.approx(oracle_log_z(m), rel=1e-12)

    def test_cap(self):
        m = random_mrf(np.random.default_rng(1), grid_graph(3), q=2)
        with pytest.raises(CapExceeded):
            brute_log_z(m, cap=100)


class TestBruteMap:
    def test_single_node(self):
        assert brute_map(single_node([0.0, 2.0])) == ((1,), 2.0)

    def test_all_ties_lexicographic(self):
        m = PairwiseMrf(
            Graph(2, [(0, 1)]), 2, [[0, 0], [0, 0]], {(0, 1): [[0, 0], [0, 0]]}
        )
        assert brute_map(m) == ((0, 0), 0.0)

    def test_matches_reversed_oracle(self):
        rng = np.random.default_rng(2)
        m = random_mrf(rng, grid_graph(3))
        x, h = brute_map(m)
        ox, oh = oracle_map_reversed(m)
        assert x == ox and h == oh

    def test_forced_potentials(self):
        m = PairwiseMrf(Graph(1, []), 2, [[-math.inf, 1.0]], {})
        assert brute_map(m) == ((1,), 1.0)


class TestBruteMaxMarginal:
    def test_flat_single_node(self):
        assert brute_max_marginal(single_node([0.5, 0.5]), 0) == (0.5, 0.5)

    def test_single_edge(self):
        m = coupled_pair(psi11=2.0)
        assert brute_max_marginal(m, 0) == (0.0, 2.0)

    def test_consistent_with_map(self):
        rng = np.random.default_rng(3)
        tri = Graph(3, [(0, 1), (0, 2), (1, 2)])
        m = random_mrf(rng, tri)
        _, h_star = brute_map(m)
        for v in range(3):
            pair = brute_max_marginal(m, v)
            assert max(pair) == pytest.approx(h_star, rel=1e-12)
            assert pair == oracle_max_marginal(m, v)

    def test_rejects_non_binary(self):
        m = single_node([0.0, 0.0, 0.0])
        with pytest.raises(ValueError):
            brute_max_marginal(m, 0)


class TestComponentSolve:
    def test_singleton(self):
        m = random_mrf(np.random.default_rng(4), Graph(3, [(0, 1)]))
        res = component_solve(m, (2,))
        assert res.log_z == pytest.approx(
            math.log(math.exp(m.phi[2, 0]) + math.exp(m.phi[2, 1]))
        )
        assert res.map_assignment == (int(np.argmax(m.phi[2])),)

    def test_pair_matches_brute_on_induced(self):
        rng = np.random.default_rng(5)
        m = random_mrf(rng, Graph(4, [(0, 1), (1, 2), (2, 3)]))
        res = component_solve(m, (1, 2))
        sub, order = m.induced((1, 2))
        assert order == (1, 2)
        assert res.log_z == brute_log_z(sub)
        assert res.map_assignment == brute_map(sub)[0]
        assert res.map_energy == energy(sub, res.map_assignment)

    def test_only_induced_edges_count(self):
        # solving two halves of an edgeless split ignores the cut edge
        rng = np.random.default_rng(6)
        m = random_mrf(rng, Graph(2, [(0, 1)]))
        a = component_solve(m, (0,))
        b = component_solve(m, (1,))
        whole = brute_log_z(m)
        lo, hi = float(m.edge_min[0]), float(m.edge_max[0])
        assert a.log_z + b.log_z + lo <= whole + 1e-12
        assert whole <= a.log_z + b.log_z + hi + 1e-12

    def test_cap_signals_oversize(self):
        m = random_mrf(np.random.default_rng(7), grid_graph(3))
        with pytest.raises(CapExceeded):
            component_solve(m, tuple(range(9)), cap=16)


class TestDegreeLowerBounds:
    """Matching-based lower bounds that hold for non-negative tables."""

    def test_log_z_exceeds_range_sum_over_degree(self):
        rng = np.random.default_rng(20)
        for _ in range(15):
            g = random_graph(rng, 7, 0.45)
            m = random_mrf(rng, g, lo=0.0, hi=2.0)
            d_star = g.max_degree
            total_range = float((m.edge_max - m.edge_min).sum())
            assert brute_log_z(m) >= total_range / (d_star + 1) - 1e-9

    def test_map_energy_exceeds_max_sum_over_degree(self):
        rng = np.random.default_rng(21)
        for _ in range(15):
            g = random_graph(rng, 7, 0.45)
            m = random_mrf(rng, g, lo=0.0, hi=2.0)
            d_star = g.max_degree
            total_max = float(m.edge_max.sum())
            _, h_star = brute_map(m)
            assert h_star >= total_max / (d_star + 1) - 1e-9


class TestDetectGrid:
    def test_square_and_rect(self):
        shape = detect_grid(grid_graph(3))
        assert (shape.rows, shape.cols, shape.criscross) == (3, 3, False)
        shape = detect_grid(grid_graph(2, 5))
        assert (shape.rows, shape.cols, shape.criscross) == (2, 5, False)

    def test_criscross(self):
        shape = detect_grid(criscross_graph(3))
        assert (shape.rows, shape.cols, shape.criscross) == (3, 3, True)

    def test_rejects_other(self):
        with pytest.raises(ValueError):
            detect_grid(Graph(3, [(0, 1), (0, 2), (1, 2)]))


class TestTransferMatrix:
    def test_2x2_matches_brute(self):
        rng = np.random.default_rng(8)
        m = random_mrf(rng, grid_graph(2), lo=-1, hi=1)
        assert grid_transfer_log_z(m) == pytest.approx(brute_log_z(m), rel=1e-10)

    def test_independent_columns(self):
        rng = np.random.default_rng(9)
        g = grid_graph(4)
        phi = rng.uniform(0, 1, size=(16, 2))
        psi = {e: [[0.0, 0.0], [0.0, 0.0]] for e in g.edge_list}
        m = PairwiseMrf(g, 2, phi, psi)
        expected = sum(
            math.log(math.exp(phi[v, 0]) + math.exp(phi[v, 1])) for v in range(16)
        )
        assert grid_transfer_log_z(m) == pytest.approx(expected, rel=1e-12)

    def test_criscross_4x4_matches_brute(self):
        rng = np.random.default_rng(10)
        m = random_mrf(rng, criscross_graph(4), lo=-0.7, hi=0.7)
        assert grid_transfer_log_z(m) == pytest.approx(brute_log_z(m), rel=1e-10)

    def test_rectangular(self):
        rng = np.random.default_rng(11)
        m = random_mrf(rng, grid_graph(2, 5))
        assert grid_transfer_log_z(m) == pytest.approx(brute_log_z(m), rel=1e-10)

    def test_path_detected_as_single_column(self):
        # an n-node path sweeps as n x 1 with q row states, not 1 x n
        path = Graph(20, [(i, i + 1) for i in range(19)])
        shape = detect_grid(path)
        assert (shape.rows, shape.cols) == (20, 1)
        rng = np.random.default_rng(15)
        m = random_mrf(rng, Graph(6, [(i, i + 1) for i in range(5)]))
        assert grid_transfer_log_z(m) == pytest.approx(brute_log_z(m), rel=1e-10)
        assert grid_transfer_map(m) == brute_map(m)

    def test_map_matches_brute(self):
        rng = np.random.default_rng(12)
        for graph in (grid_graph(3), grid_graph(3, 4), criscross_graph(3)):
            m = random_mrf(rng, graph)
            assert grid_transfer_map(m) == brute_map(m)

    def test_map_tie_break_lexicographic(self):
        g = grid_graph(2)
        m = PairwiseMrf(
            g, 2, np.zeros((4, 2)), {e: [[0, 0], [0, 0]] for e in g.edge_list}
        )
        x, h = grid_transfer_map(m)
        assert x == (0, 0, 0, 0) and h == 0.0

    def test_three_states(self):
        rng = np.random.default_rng(13)
        m = random_mrf(rng, grid_graph(2, 3), q=3)
        assert grid_transfer_log_z(m) == pytest.approx(brute_log_z(m), rel=1e-10)
        assert grid_transfer_map(m) == brute_map(m)

    def test_log_z_lower_bounded_by_map(self):
        rng = np.random.default_rng(14)
        m = random_mrf(rng, grid_graph(3))
        _, h = grid_transfer_map(m)
        assert grid_transfer_log_z(m) >= h
