"""Shared generators and independent oracles for the test suite.

The oracles here deliberately re-derive quantities through different code
paths (union-find, combination-search set cover, reversed enumeration) so
that agreement with the package is meaningful.
"""

import itertools
import math

import numpy as np

from localmrf import Graph, PairwiseMrf


def random_connected_graph(rng, n: int, extra_edges: int) -> Graph:
    """Random tree plus ``extra_edges`` distinct chords."""
    edges = set()
    for v in range(1, n):
        parent = int(rng.integers(v))
        edges.add((parent, v))
    pool = [
        (u, v)
        for u in range(n)
        for v in range(u + 1, n)
        if (u, v) not in edges
    ]
    take = min(extra_edges, len(pool))
    if take:
        for i in rng.choice(len(pool), size=take, replace=False):
            edges.add(pool[int(i)])
    return Graph(n, edges)


def random_graph(rng, n: int, p: float) -> Graph:
    edges = [
        (u, v)
        for u in range(n)
        for v in range(u + 1, n)
        if rng.random() < p
    ]
    return Graph(n, edges)


def random_mrf(rng, graph: Graph, q: int = 2, lo: float = 0.0, hi: float = 2.0) -> PairwiseMrf:
    phi = rng.uniform(lo, hi, size=(graph.n, q))
    psi = rng.uniform(lo, hi, size=(len(graph.edge_list), q, q))
    return PairwiseMrf(graph, q, phi, psi)


def union_find_components(graph: Graph) -> set[frozenset[int]]:
    parent = list(range(graph.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in graph.edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    groups: dict[int, set[int]] = {}
    for v in range(graph.n):
        groups.setdefault(find(v), set()).add(v)
    return {frozenset(g) for g in groups.values()}


def cover_number_oracle(graph: Graph) -> int:
    """Worst half-radius covering number by combination search (independent
    of the branch-and-bound implementation in the package)."""
    dist = graph.distance_matrix
    n = graph.n
    worst = 1
    for r_twice in range(1, 2 * (graph.diameter + 1) + 1):
        r = r_twice / 2
        half_balls = [frozenset(np.flatnonzero(dist[u] < r / 2).tolist()) for u in range(n)]
        for v in range(n):
            target = frozenset(np.flatnonzero(dist[v] < r).tolist())
            for size in range(1, n + 1):
                hit = False
                for combo in itertools.combinations(range(n), size):
                    union = set()
                    for u in combo:
                        union |= half_balls[u]
                    if target <= union:
                        hit = True
                        break
                if hit:
                    worst = max(worst, size)
                    break
    return worst


def enumerate_energies(mrf: PairwiseMrf):
    """(assignment, energy) pairs by plain nested iteration (no numpy)."""
    for x in itertools.product(range(mrf.q), repeat=mrf.n):
        total = 0.0
        for v in range(mrf.n):
            total += float(mrf.phi[v, x[v]])
        for u, v in mrf.edge_list:
            total += float(mrf.edge_table(u, v)[x[u], x[v]])
        yield x, total


def oracle_log_z(mrf: PairwiseMrf) -> float:
    energies = [e for _, e in enumerate_energies(mrf)]
    hi = max(energies)
    if hi == -math.inf:
        return -math.inf
    return hi + math.log(sum(math.exp(e - hi) for e in energies))


def oracle_map_reversed(mrf: PairwiseMrf):
    """Argmax by iterating assignments in reversed order, preferring the
    lexicographically smaller assignment on exact ties."""
    best_x, best_e = None, -math.inf
    for x, e in reversed(list(enumerate_energies(mrf))):
        if e > best_e or (e == best_e and (best_x is None or x < best_x)):
            best_x, best_e = x, e
    return best_x, best_e


def oracle_max_marginal(mrf: PairwiseMrf, v: int):
    best = [-math.inf, -math.inf]
    for x, e in enumerate_energies(mrf):
        best[x[v]] = max(best[x[v]], e)
    return best[0], best[1]


def three_sigma_binomial(p: float, trials: int) -> float:
    return 3.0 * math.sqrt(max(p * (1.0 - p), 1e-12) / trials)
