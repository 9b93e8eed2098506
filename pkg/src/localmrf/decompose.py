"""Randomized graph decompositions with removal-probability certificates.

Three schemes, all producing a removed set B plus the connected components
of what survives:

* random ball carving driven by a truncated geometric radius, suited to
  graphs whose metric balls grow polynomially (low doubling dimension);
* iterated BFS-layer cutting, suited to minor-excluded graphs (r rounds,
  layers taken modulo a stride Lambda);
* the deterministic axis-aligned slab cut of an n x n lattice.

Every scheme is reproducible: all randomness comes from numpy PCG64
generators keyed by the caller's 64-bit seed.  Layer cutting draws one
stream per (seed, round, component-index) triple so components of a round
could be processed concurrently without changing the output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    Edge,
    Graph,
    bfs_depths,
    connected_components,
    grid_graph,
)


def _rng(*key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(tuple(key)))


@dataclass(frozen=True)
class VertexDecomposition:
    """Removed node set plus the components of the induced remainder."""

    alg: str
    n: int
    removed_nodes: frozenset[int]
    components: tuple[tuple[int, ...], ...]
    eps_target: float
    seed: int | None
    params: dict = field(compare=False, default_factory=dict)

    @property
    def max_component(self) -> int:
        return max((len(c) for c in self.components), default=0)


@dataclass(frozen=True)
class EdgeDecomposition:
    """Removed edge set plus the components of (V, E minus B)."""

    alg: str
    n: int
    removed_edges: frozenset[Edge]
    components: tuple[tuple[int, ...], ...]
    eps_target: float
    seed: int | None
    params: dict = field(compare=False, default_factory=dict)

    @property
    def max_component(self) -> int:
        return max((len(c) for c in self.components), default=0)


def empty_edge_decomposition(graph: Graph) -> EdgeDecomposition:
    """No removal: one component per connected component of the graph."""
    return EdgeDecomposition(
        "none", graph.n, frozenset(), connected_components(graph), 0.0, None
    )


# ---------------------------------------------------------------------------
# Ball carving
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadiusLaw:
    """Truncated geometric radius: P(i) = eps(1-eps)^(i-1), tail mass at K.

    The last point mass is the exact complement, so the pmf sums to 1.
    """

    eps: float
    K: int

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must be in (0,1)")
        if self.K < 1:
            raise ValueError("K must be >= 1")

    def pmf(self) -> np.ndarray:
        i = np.arange(1, self.K + 1)
        p = self.eps * (1.0 - self.eps) ** (i - 1.0)
        p[-1] = (1.0 - self.eps) ** (self.K - 1.0)
        return p

    def sample(self, rng: np.random.Generator) -> int:
        """Inverse-CDF draw from one uniform; truncates at K."""
        if self.K == 1:
            rng.random()
            return 1
        u = rng.random()
        i = int(math.log1p(-u) / math.log1p(-self.eps)) + 1
        return min(max(i, 1), self.K)


def k_param(eps: float, rho: float) -> int:
    """Truncation level matched to a doubling dimension: the ceiling of
    (12 rho / eps) * ln(24 rho / eps), never below 3."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must be in (0,1)")
    if rho < 1.0:
        raise ValueError("rho must be >= 1")
    value = (12.0 * rho / eps) * math.log(24.0 * rho / eps)
    return max(3, math.ceil(value))


def sample_radius(law: RadiusLaw, rng: np.random.Generator) -> int:
    return law.sample(rng)


def db_dim_vertex(
    graph: Graph, eps: float, K: int, seed: int
) -> VertexDecomposition:
    """Random ball carving on the shortest-path metric.

    Repeatedly picks a uniform random still-white node u, draws a radius Q
    from the truncated geometric law, removes (colors blue) the white nodes
    at distance exactly Q from u and settles (colors red) the white nodes
    closer than Q.  Distances always refer to the original graph metric.

    Draw order per iteration, on one PCG64 stream keyed by ``seed``: first
    the index of u in the ascending list of white nodes via
    ``rng.integers(len(white))``, then the radius via one uniform.
    Every surviving component sits inside a ball of radius K around one of
    the chosen centers.
    """
    law = RadiusLaw(eps, K)
    rng = _rng(seed)
    dist = graph.distance_matrix
    white = list(range(graph.n))
    blue: set[int] = set()
    while white:
        u = white[int(rng.integers(len(white)))]
        radius = law.sample(rng)
        du = dist[u]
        keep = []
        for w in white:
            if du[w] == radius:
                blue.add(w)
            elif not du[w] < radius:
                keep.append(w)
        white = keep
    comps = connected_components(graph, removed_nodes=blue)
    return VertexDecomposition(
        "dbdim-v",
        graph.n,
        frozenset(blue),
        comps,
        2.0 * eps,
        seed,
        {"eps": eps, "K": K},
    )


def line_graph(graph: Graph) -> Graph:
    """Graph on the edges; adjacency iff two edges share an endpoint.

    Line-graph node i corresponds to ``graph.edge_list[i]``.
    """
    edges = graph.edge_list
    incident: dict[int, list[int]] = {}
    for i, (u, v) in enumerate(edges):
        incident.setdefault(u, []).append(i)
        incident.setdefault(v, []).append(i)
    meta = set()
    for ids in incident.values():
        for a in range(len(ids)):
            for b in range(a + 1, len(ids)):
                meta.add((ids[a], ids[b]))
    return Graph(len(edges), meta)


def db_dim_edge(graph: Graph, eps: float, K: int, seed: int) -> EdgeDecomposition:
    """Ball carving on the line graph, mapped back to an edge removal."""
    lg = line_graph(graph)
    vdec = db_dim_vertex(lg, eps, K, seed)
    edges = graph.edge_list
    removed = frozenset(edges[i] for i in vdec.removed_nodes)
    comps = connected_components(graph, removed_edges=removed)
    return EdgeDecomposition(
        "dbdim",
        graph.n,
        removed,
        comps,
        2.0 * eps,
        seed,
        {"eps": eps, "K": K},
    )


# ---------------------------------------------------------------------------
# BFS-layer cutting
# ---------------------------------------------------------------------------


def _component_levels(graph, comp, removed_edges, lam, choose, round_idx, comp_idx):
    root = comp[0]
    depth = bfs_depths(
        graph, root, allowed=frozenset(comp), removed_edges=removed_edges
    )
    level = choose(round_idx, comp_idx)
    if not 0 <= level < lam:
        raise ValueError(f"level {level} outside 0..{lam - 1}")
    return depth, level


def minor_vertex(
    graph: Graph,
    r: int,
    lam: int,
    seed: int | None = None,
    choose_level=None,
) -> VertexDecomposition:
    """r rounds of BFS-layer node removal with stride ``lam``.

    Per round and per surviving component: BFS from the lowest-id node,
    draw L uniform in {0..lam-1} (stream keyed by (seed, round, component
    index)), and remove every node whose BFS depth is congruent to L mod
    lam.  ``choose_level(round, comp_index)`` overrides the random draw,
    which is how traces are replayed in tests.
    """
    if r < 1 or lam < 1:
        raise ValueError("need r >= 1 and lam >= 1")
    if choose_level is None:
        if seed is None:
            raise ValueError("give a seed or an explicit choose_level")

        def choose_level(i, j):
            return int(_rng(seed, i, j).integers(lam))

    removed: set[int] = set()
    for i in range(r):
        comps = connected_components(graph, removed_nodes=removed)
        for j, comp in enumerate(comps):
            depth, level = _component_levels(graph, comp, None, lam, choose_level, i, j)
            removed.update(v for v, d in depth.items() if d % lam == level)
    comps = connected_components(graph, removed_nodes=removed)
    return VertexDecomposition(
        "minorv",
        graph.n,
        frozenset(removed),
        comps,
        r / lam,
        seed,
        {"r": r, "lam": lam},
    )


def minor_edge(
    graph: Graph,
    r: int,
    lam: int,
    seed: int | None = None,
    choose_level=None,
) -> EdgeDecomposition:
    """r rounds of BFS-layer edge removal with stride ``lam``.

    The edges cut in a round are those whose lower-BFS-depth endpoint has
    depth congruent to L mod lam; that rule also severs non-tree edges
    between equal-depth nodes' layers correctly.
    """
    if r < 1 or lam < 1:
        raise ValueError("need r >= 1 and lam >= 1")
    if choose_level is None:
        if seed is None:
            raise ValueError("give a seed or an explicit choose_level")

        def choose_level(i, j):
            return int(_rng(seed, i, j).integers(lam))

    removed: set[Edge] = set()
    for i in range(r):
        comps = connected_components(graph, removed_edges=removed)
        for j, comp in enumerate(comps):
            depth, level = _component_levels(
                graph, comp, removed, lam, choose_level, i, j
            )
            members = set(comp)
            for u in comp:
                for w in graph.adjacency[u]:
                    if w < u or w not in members:
                        continue
                    e = (u, w) if u < w else (w, u)
                    if e in removed:
                        continue
                    if min(depth[u], depth[w]) % lam == level:
                        removed.add(e)
    comps = connected_components(graph, removed_edges=removed)
    return EdgeDecomposition(
        "minore",
        graph.n,
        frozenset(removed),
        comps,
        r / lam,
        seed,
        {"r": r, "lam": lam},
    )


# ---------------------------------------------------------------------------
# Grid slab cut
# ---------------------------------------------------------------------------


def grid_decomp(n: int, k: int, l1: int, l2: int) -> EdgeDecomposition:
    """Deterministic slab cut of the n x n lattice into <= k*k blocks.

    Removes every horizontal edge whose smaller-column endpoint is in a
    column congruent to l1 mod k, and every vertical edge whose smaller-row
    endpoint is in a row congruent to l2 mod k.  Averaged over the k^2
    offsets, each edge is removed in exactly a 1/k fraction of the choices.
    """
    if not (1 <= k <= n):
        raise ValueError("need 1 <= k <= n")
    if not (0 <= l1 < k and 0 <= l2 < k):
        raise ValueError("offsets must lie in 0..k-1")
    graph = grid_graph(n)
    removed = set()
    for (u, v) in graph.edge_list:
        if v == u + 1:  # horizontal: left endpoint column u % n
            if (u % n) % k == l1:
                removed.add((u, v))
        else:  # vertical: endpoint rows u // n and u // n + 1
            if (u // n) % k == l2:
                removed.add((u, v))
    comps = connected_components(graph, removed_edges=removed)
    return EdgeDecomposition(
        "grid",
        graph.n,
        frozenset(removed),
        comps,
        1.0 / k,
        None,
        {"n": n, "k": k, "l1": l1, "l2": l2},
    )


def db_dim_target_eps(eps: float, rho: float, offset: int = 3) -> float:
    """Carving parameter that turns a requested relative error ``eps`` into
    the ball-carving eps: ``eps * 2**(-rho - offset)``.  The offset is
    exposed because 3 is the conservative choice and 2 already suffices."""
    return eps * 2.0 ** (-rho - offset)
