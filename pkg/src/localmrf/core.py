"""Graphs and pairwise Markov random fields.

The data model shared by every other module: simple undirected graphs with
ascending-id adjacency (the one neighbor ordering used everywhere, including
self-avoiding-walk construction), potential tables in exponent form, the
shortest-path metric with ball queries, and an exact (exponential-time,
tiny-instance) doubling-dimension computation.

A model over states ``{0..q-1}`` assigns probability proportional to
``exp(sum_v phi_v(x_v) + sum_{(u,v)} psi_uv(x_u, x_v))``; all potential
tables here are those exponents.  Node potentials may contain ``-inf`` to
force a state off (used for conditioning); everything else must be finite.
"""

from __future__ import annotations

import math
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

Edge = tuple[int, int]


class CapExceeded(RuntimeError):
    """An operation refused to run because it would be exponentially large."""


class FormatError(ValueError):
    """Malformed text input for one of the file formats."""


def _canon_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


class Graph:
    """Simple undirected graph on nodes ``0..n-1``.

    Immutable after construction.  Neighbor lists are kept in ascending id
    order; this ordering is canonical and relied upon by the decomposition
    and self-avoiding-walk code.
    """

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]):
        if n < 0:
            raise ValueError("node count must be >= 0")
        self.n = n
        canon = set()
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) out of range for n={n}")
            canon.add(_canon_edge(u, v))
        self.edges: frozenset[Edge] = frozenset(canon)
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in sorted(canon):
            adj[u].append(v)
            adj[v].append(u)
        self.adjacency: tuple[tuple[int, ...], ...] = tuple(
            tuple(sorted(a)) for a in adj
        )

    @cached_property
    def edge_list(self) -> tuple[Edge, ...]:
        """Edges sorted ascending; the canonical edge indexing."""
        return tuple(sorted(self.edges))

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @cached_property
    def max_degree(self) -> int:
        return max((len(a) for a in self.adjacency), default=0)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and self.edges == other.edges
        )

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self):
        return f"Graph(n={self.n}, m={len(self.edges)})"

    def distances(self, v: int) -> np.ndarray:
        """Shortest-path distances from ``v``; ``inf`` across components."""
        return self.distance_matrix[v]

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        """All-pairs shortest-path distances by repeated BFS (cached)."""
        d = np.full((self.n, self.n), np.inf)
        for s in range(self.n):
            d[s, s] = 0.0
            frontier = [s]
            depth = 0
            while frontier:
                depth += 1
                nxt = []
                for u in frontier:
                    for w in self.adjacency[u]:
                        if not np.isfinite(d[s, w]):
                            d[s, w] = depth
                            nxt.append(w)
                frontier = nxt
        return d

    @cached_property
    def diameter(self) -> int:
        """Largest finite pairwise distance (0 for edgeless graphs)."""
        d = self.distance_matrix[np.isfinite(self.distance_matrix)]
        return int(d.max()) if d.size else 0


def shortest_path_ball(graph: Graph, v: int, r: float) -> frozenset[int]:
    """Nodes at distance strictly less than ``r`` from ``v``."""
    if not 0 <= v < graph.n:
        raise ValueError(f"node {v} out of range")
    return frozenset(np.flatnonzero(graph.distances(v) < r).tolist())


def bfs_depths(
    graph: Graph,
    root: int,
    allowed: frozenset[int] | set[int] | None = None,
    removed_edges: frozenset[Edge] | set[Edge] | None = None,
) -> dict[int, int]:
    """BFS depth of every reachable node, exploring neighbors ascending.

    ``allowed`` restricts the search to an induced node subset and
    ``removed_edges`` masks out deleted edges; both default to unrestricted.
    """
    if allowed is not None and root not in allowed:
        raise ValueError("root not in allowed set")
    depth = {root: 0}
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            for w in graph.adjacency[u]:
                if w in depth:
                    continue
                if allowed is not None and w not in allowed:
                    continue
                if removed_edges and _canon_edge(u, w) in removed_edges:
                    continue
                depth[w] = depth[u] + 1
                nxt.append(w)
        frontier = nxt
    return depth


def connected_components(
    graph: Graph,
    removed_nodes: Iterable[int] = (),
    removed_edges: Iterable[Edge] = (),
) -> tuple[tuple[int, ...], ...]:
    """Connected components after optional node/edge removal.

    Components are returned as ascending node tuples, ordered by their
    smallest member, so output is deterministic.
    """
    dead = set(removed_nodes)
    cut = {_canon_edge(u, v) for u, v in removed_edges}
    seen: set[int] = set()
    comps: list[tuple[int, ...]] = []
    for s in range(graph.n):
        if s in dead or s in seen:
            continue
        stack = [s]
        seen.add(s)
        comp = []
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in graph.adjacency[u]:
                if w in seen or w in dead:
                    continue
                if cut and _canon_edge(u, w) in cut:
                    continue
                seen.add(w)
                stack.append(w)
        comps.append(tuple(sorted(comp)))
    return tuple(comps)


# ---------------------------------------------------------------------------
# Doubling dimension (exact, tiny instances only)
# ---------------------------------------------------------------------------


def _min_cover_size(target: int, candidates: list[int]) -> int:
    """Exact minimum number of candidate bitmasks whose union covers target."""
    sets = sorted({c & target for c in candidates if c & target}, reverse=True)
    # drop sets dominated by a superset
    kept: list[int] = []
    for s in sets:
        if not any(s & k == s for k in kept):
            kept.append(s)
    if not kept:
        raise ValueError("target not coverable")

    # greedy solution gives the initial upper bound
    best = 0
    rem = target
    pool = kept
    while rem:
        s = max(pool, key=lambda x: (x & rem).bit_count())
        if not s & rem:
            raise ValueError("target not coverable")
        rem &= ~s
        best += 1

    max_size = max(s.bit_count() for s in kept)

    def dfs(rem: int, used: int):
        nonlocal best
        if rem == 0:
            best = min(best, used)
            return
        if used + math.ceil(rem.bit_count() / max_size) >= best:
            return
        # branch on the lowest uncovered element
        low = rem & -rem
        options = [s for s in kept if s & low]
        options.sort(key=lambda s: -(s & rem).bit_count())
        for s in options:
            dfs(rem & ~s, used + 1)

    dfs(target, 0)
    return best


def doubling_dimension_exact(graph: Graph, cap: int = 12) -> float:
    """log2 of the worst-case half-radius covering number of any ball.

    For every center ``v`` and every radius ``r`` in half-integer steps up
    to diameter+1, finds the minimum number of radius ``r/2`` balls (with
    centers anywhere) covering the ball of radius ``r`` around ``v``, by
    exhaustive set cover.  Returns the log2 of the largest such number.
    """
    if graph.n > cap:
        raise CapExceeded(
            f"doubling dimension is an exponential operation; n={graph.n} "
            f"exceeds cap={cap}"
        )
    if graph.n == 0:
        return 0.0
    dist = graph.distance_matrix
    worst = 1
    radii = [i / 2 for i in range(1, 2 * (graph.diameter + 1) + 1)]
    for r in radii:
        inner_masks = []
        for u in range(graph.n):
            mask = 0
            for w in np.flatnonzero(dist[u] < r / 2).tolist():
                mask |= 1 << w
            inner_masks.append(mask)
        for v in range(graph.n):
            target = 0
            for w in np.flatnonzero(dist[v] < r).tolist():
                target |= 1 << w
            worst = max(worst, _min_cover_size(target, inner_masks))
    return math.log2(worst)


# ---------------------------------------------------------------------------
# Pairwise MRF
# ---------------------------------------------------------------------------


def _check_table(a: np.ndarray, what: str) -> None:
    if np.isnan(a).any() or (a == np.inf).any():
        raise ValueError(f"{what} contains nan or +inf")


class PairwiseMrf:
    """Finite-alphabet pairwise MRF in exponent form.

    ``node_potential[v]`` is a length-``q`` table and each edge carries a
    ``q x q`` table stored once, indexed ``(x_u, x_v)`` for the canonical
    ``u < v`` orientation.  Instances are immutable after construction.
    """

    def __init__(
        self,
        graph: Graph,
        alphabet_size: int,
        node_potentials,
        edge_potentials,
    ):
        if alphabet_size < 2:
            raise ValueError("alphabet size must be >= 2")
        self.graph = graph
        self.q = alphabet_size
        phi = np.asarray(node_potentials, dtype=float)
        if phi.shape != (graph.n, alphabet_size):
            raise ValueError(
                f"node potentials must have shape ({graph.n},{alphabet_size})"
            )
        _check_table(phi, "node potential")
        self.phi = phi
        self.phi.setflags(write=False)

        edge_list = graph.edge_list
        psi = np.empty((len(edge_list), alphabet_size, alphabet_size))
        if isinstance(edge_potentials, Mapping):
            tables = dict(edge_potentials)
            for i, (u, v) in enumerate(edge_list):
                if (u, v) in tables:
                    psi[i] = np.asarray(tables.pop((u, v)), dtype=float)
                elif (v, u) in tables:
                    psi[i] = np.asarray(tables.pop((v, u)), dtype=float).T
                else:
                    raise ValueError(f"missing edge potential for ({u},{v})")
            if tables:
                raise ValueError(f"potentials for non-edges: {sorted(tables)}")
        else:
            arr = np.asarray(edge_potentials, dtype=float)
            if arr.shape != (len(edge_list), alphabet_size, alphabet_size):
                raise ValueError("edge potential array has wrong shape")
            psi[:] = arr
        if not np.isfinite(psi).all():
            raise ValueError("edge potentials must be finite")
        self.psi = psi
        self.psi.setflags(write=False)
        self._edge_index = {e: i for i, e in enumerate(edge_list)}

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def edge_list(self) -> tuple[Edge, ...]:
        return self.graph.edge_list

    def edge_table(self, u: int, v: int) -> np.ndarray:
        """Edge table oriented so it can be indexed ``[x_u, x_v]``."""
        e = _canon_edge(u, v)
        t = self.psi[self._edge_index[e]]
        return t if (u, v) == e else t.T

    @cached_property
    def edge_min(self) -> np.ndarray:
        """Per-edge table minimum, aligned with ``edge_list``."""
        return self.psi.min(axis=(1, 2)) if len(self.psi) else np.zeros(0)

    @cached_property
    def edge_max(self) -> np.ndarray:
        """Per-edge table maximum, aligned with ``edge_list``."""
        return self.psi.max(axis=(1, 2)) if len(self.psi) else np.zeros(0)

    def edge_bounds(self, u: int, v: int) -> tuple[float, float]:
        """(table minimum, table maximum) of one edge."""
        i = self._edge_index[_canon_edge(u, v)]
        return float(self.edge_min[i]), float(self.edge_max[i])

    def edge_range_sum(self, edges: Iterable[Edge]) -> float:
        """Sum of (max - min) over the given edges, in ascending edge order."""
        total = 0.0
        for e in sorted(_canon_edge(*e) for e in edges):
            lo, hi = self.edge_bounds(*e)
            total += hi - lo
        return total

    def with_forced_node(self, v: int, state: int) -> "PairwiseMrf":
        """Copy with node ``v`` conditioned to ``state`` (others get -inf)."""
        phi = np.array(self.phi)
        keep = phi[v, state]
        phi[v, :] = -np.inf
        phi[v, state] = keep
        return PairwiseMrf(self.graph, self.q, phi, self.psi)

    def without_edges(self, edges: Iterable[Edge]) -> "PairwiseMrf":
        """Copy with the given edges (and their tables) deleted."""
        drop = {_canon_edge(u, v) for u, v in edges}
        missing = drop - set(self.edge_list)
        if missing:
            raise ValueError(f"not edges of this model: {sorted(missing)}")
        keep = [i for i, e in enumerate(self.edge_list) if e not in drop]
        graph = Graph(self.n, [self.edge_list[i] for i in keep])
        return PairwiseMrf(graph, self.q, self.phi, self.psi[keep])

    def induced(self, nodes: Sequence[int]) -> tuple["PairwiseMrf", tuple[int, ...]]:
        """Sub-MRF on ``nodes`` (sorted) with induced edges only.

        Returns the sub-model and the tuple mapping its node ids back to
        the original ids.
        """
        order = tuple(sorted(nodes))
        pos = {g: i for i, g in enumerate(order)}
        sub_edges = []
        tables = {}
        for (u, v) in self.edge_list:
            if u in pos and v in pos:
                a, b = pos[u], pos[v]
                sub_edges.append((a, b))
                tables[_canon_edge(a, b)] = (
                    self.edge_table(u, v) if a < b else self.edge_table(v, u)
                )
        sub = PairwiseMrf(
            Graph(len(order), sub_edges), self.q, self.phi[list(order)], tables
        )
        return sub, order

    def __repr__(self):
        return f"PairwiseMrf(n={self.n}, m={len(self.edge_list)}, q={self.q})"


def check_assignment(mrf: PairwiseMrf, x: Sequence[int]) -> None:
    if len(x) != mrf.n:
        raise ValueError(f"assignment length {len(x)} != n={mrf.n}")
    for v, s in enumerate(x):
        if not 0 <= s < mrf.q:
            raise ValueError(f"state {s} at node {v} out of range")


def energy(mrf: PairwiseMrf, x: Sequence[int]) -> float:
    """Total exponent ``sum phi_v(x_v) + sum psi_uv(x_u, x_v)``.

    Nodes are summed in ascending id order and edges in ascending edge
    order, so the result is deterministic.
    """
    check_assignment(mrf, x)
    total = 0.0
    for v in range(mrf.n):
        total += float(mrf.phi[v, x[v]])
    for i, (u, v) in enumerate(mrf.edge_list):
        total += float(mrf.psi[i, x[u], x[v]])
    return total


def affine_shift(mrf: PairwiseMrf) -> tuple[PairwiseMrf, float]:
    """Shift every table to be non-negative; returns (model, total shift).

    Each node table gets ``max(0, -min)`` added, each edge table likewise.
    The distribution is unchanged; energies grow by exactly the returned
    total, which callers need to de-shift energies.
    """
    if not np.isfinite(mrf.phi).all():
        raise ValueError("affine shift requires finite tables")
    node_shifts = np.maximum(0.0, -mrf.phi.min(axis=1))
    phi = mrf.phi + node_shifts[:, None]
    if len(mrf.psi):
        edge_shifts = np.maximum(0.0, -mrf.psi.min(axis=(1, 2)))
        psi = mrf.psi + edge_shifts[:, None, None]
    else:
        edge_shifts = np.zeros(0)
        psi = mrf.psi
    total = float(node_shifts.sum() + edge_shifts.sum())
    return PairwiseMrf(mrf.graph, mrf.q, phi, psi), total


# ---------------------------------------------------------------------------
# Grid topologies (shared by decomposition and experiment code)
# ---------------------------------------------------------------------------


def grid_graph(rows: int, cols: int | None = None) -> Graph:
    """Axis-aligned lattice; node (r, c) has id ``r * cols + c``."""
    cols = rows if cols is None else cols
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return Graph(rows * cols, edges)


def criscross_graph(rows: int, cols: int | None = None) -> Graph:
    """Grid plus both diagonals of every unit cell."""
    cols = rows if cols is None else cols
    base = grid_graph(rows, cols)
    edges = set(base.edges)
    for r in range(rows - 1):
        for c in range(cols - 1):
            v = r * cols + c
            edges.add((v, v + cols + 1))
            edges.add((v + 1, v + cols))
    return Graph(rows * cols, edges)


# ---------------------------------------------------------------------------
# MRF text format v1
# ---------------------------------------------------------------------------
#
# Line oriented, '#' starts a comment, floats written with 17 significant
# digits (exact round trip):
#
#   mrf <n> <sigma>
#   node <id> <phi_0> ... <phi_{sigma-1}>          one line per node
#   edge <u> <v> <psi_00> ... <psi_{qq-1}>         u < v, row-major (x_u, x_v)


def _fmt(x: float) -> str:
    return format(x, ".17g")


def write_mrf_text(mrf: PairwiseMrf) -> str:
    if not np.isfinite(mrf.phi).all():
        raise ValueError("text format requires finite tables")
    lines = [f"mrf {mrf.n} {mrf.q}"]
    for v in range(mrf.n):
        vals = " ".join(_fmt(x) for x in mrf.phi[v])
        lines.append(f"node {v} {vals}")
    for i, (u, v) in enumerate(mrf.edge_list):
        vals = " ".join(_fmt(x) for x in mrf.psi[i].ravel())
        lines.append(f"edge {u} {v} {vals}")
    return "\n".join(lines) + "\n"


def parse_mrf_text(text: str) -> PairwiseMrf:
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    if not rows or rows[0][0] != "mrf" or len(rows[0]) != 3:
        raise FormatError("expected header: mrf <n> <sigma>")
    try:
        n, q = int(rows[0][1]), int(rows[0][2])
    except ValueError as exc:
        raise FormatError("bad header values") from exc
    phi = np.full((n, q), np.nan)
    edges = []
    tables = {}
    for row in rows[1:]:
        kind = row[0]
        if kind == "node":
            if len(row) != 2 + q:
                raise FormatError(f"node line needs {q} values: {' '.join(row)}")
            v = int(row[1])
            if not 0 <= v < n:
                raise FormatError(f"node id {v} out of range")
            phi[v] = [float(x) for x in row[2:]]
        elif kind == "edge":
            if len(row) != 3 + q * q:
                raise FormatError(f"edge line needs {q * q} values: {' '.join(row)}")
            u, v = int(row[1]), int(row[2])
            if not u < v:
                raise FormatError(f"edge must be written u < v, got {u} {v}")
            edges.append((u, v))
            tables[(u, v)] = np.array(
                [float(x) for x in row[3:]], dtype=float
            ).reshape(q, q)
        else:
            raise FormatError(f"unknown line kind: {kind}")
    if np.isnan(phi).any():
        missing = sorted(np.flatnonzero(np.isnan(phi).any(axis=1)).tolist())
        raise FormatError(f"missing node lines for: {missing}")
    mrf = PairwiseMrf(Graph(n, edges), q, phi, tables)
    if not np.isfinite(mrf.phi).all() or not np.isfinite(mrf.psi).all():
        raise FormatError("text format requires finite tables")
    return mrf


def load_mrf(path) -> PairwiseMrf:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_mrf_text(fh.read())


def dump_mrf(mrf: PairwiseMrf, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_mrf_text(mrf))
