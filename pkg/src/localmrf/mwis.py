"""MAP over a discrete factor model as maximum-weight independent set.

The conflict-graph construction: one node per (factor, joint assignment of
its domain), an edge between every pair of nodes whose partial assignments
disagree on a shared variable, and node weight c + theta so all weights are
at least 1.  A consistent global assignment picks one node per factor and
forms an independent set; a maximum-weight independent set conversely picks
exactly one node per factor and decodes to a MAP assignment.

A second bridge turns any weighted independent-set instance into a binary
pairwise model whose MAP assignments are exactly the maximum-weight
independent sets (a finite edge penalty larger than the total weight keeps
all tables non-negative; the encoding is exact for MAP only, the penalized
partition function is not the hard-core one).

Includes a small exact branch-and-bound solver used as the test oracle;
it is exponential and intended for small instances only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import CapExceeded, FormatError, Graph, PairwiseMrf


@dataclass(frozen=True)
class FactorModel:
    """Variables with finite domains and factors with exponent tables.

    ``factors[i] = (vars, table)`` where ``table`` is an ndarray whose axes
    follow ``vars`` in order.  The model's score of a global assignment is
    the sum of the factor table entries it selects.
    """

    domain_sizes: tuple[int, ...]
    factors: tuple[tuple[tuple[int, ...], np.ndarray], ...]

    def __post_init__(self):
        covered = set()
        for vars_, table in self.factors:
            expect = tuple(self.domain_sizes[v] for v in vars_)
            if table.shape != expect:
                raise ValueError(f"table shape {table.shape} != domains {expect}")
            if not np.isfinite(table).all():
                raise ValueError("factor tables must be finite")
            covered.update(vars_)
        missing = set(range(len(self.domain_sizes))) - covered
        if missing:
            raise ValueError(f"variables not covered by any factor: {sorted(missing)}")

    def score(self, y) -> float:
        total = 0.0
        for vars_, table in self.factors:
            total += float(table[tuple(y[v] for v in vars_)])
        return total

    def assignments(self):
        return itertools.product(*(range(d) for d in self.domain_sizes))


@dataclass(frozen=True)
class MwisInstance:
    """Conflict graph with positive node weights and (factor, assignment) labels."""

    graph: Graph
    weights: tuple[float, ...]
    labels: tuple[tuple[int, tuple[int, ...]], ...]
    factor_vars: tuple[tuple[int, ...], ...]
    n_vars: int
    shift_c: float


def factor_to_mwis(model: FactorModel, cap: int = 50_000) -> MwisInstance:
    """Conflict-graph encoding of the factor model's MAP problem."""
    labels: list[tuple[int, tuple[int, ...]]] = []
    weights_raw: list[float] = []
    var_value: list[dict[int, int]] = []
    for fi, (vars_, table) in enumerate(model.factors):
        domains = [range(model.domain_sizes[v]) for v in vars_]
        for joint in itertools.product(*domains):
            labels.append((fi, joint))
            weights_raw.append(float(table[joint]))
            var_value.append(dict(zip(vars_, joint)))
            if len(labels) > cap:
                raise CapExceeded(f"conflict graph exceeds {cap} nodes")
    c = 1.0 + max(0.0, -min(weights_raw, default=0.0))
    edges = []
    for a in range(len(labels)):
        for b in range(a + 1, len(labels)):
            shared = var_value[a].keys() & var_value[b].keys()
            if any(var_value[a][m] != var_value[b][m] for m in shared):
                edges.append((a, b))
    weights = tuple(c + w for w in weights_raw)
    return MwisInstance(
        graph=Graph(len(labels), edges),
        weights=weights,
        labels=tuple(labels),
        factor_vars=tuple(vars_ for vars_, _ in model.factors),
        n_vars=len(model.domain_sizes),
        shift_c=c,
    )


def mwis_to_assignment(inst: MwisInstance, chosen) -> tuple[int, ...]:
    """Decode an independent set with one node per factor into an assignment.

    Raises ``ValueError`` when the selection misses a factor, doubles one
    up, or disagrees on a shared variable; maximum-weight selections never
    do any of these.
    """
    per_factor: dict[int, tuple[int, ...]] = {}
    for node in chosen:
        fi, joint = inst.labels[node]
        if fi in per_factor:
            raise ValueError(f"two selected nodes for factor {fi}")
        per_factor[fi] = joint
    missing = set(range(len(inst.factor_vars))) - per_factor.keys()
    if missing:
        raise ValueError(f"no selected node for factors {sorted(missing)}")
    var_values: dict[int, int] = {}
    for fi, joint in per_factor.items():
        for var, val in zip(inst.factor_vars[fi], joint):
            if var_values.setdefault(var, val) != val:
                raise ValueError(f"selected nodes disagree on variable {var}")
    if len(var_values) != inst.n_vars:
        raise ValueError("selection leaves variables unassigned")
    return tuple(var_values[v] for v in range(inst.n_vars))


def mwis_as_binary_mrf(inst: MwisInstance) -> PairwiseMrf:
    """Binary pairwise model whose MAP assignments are exactly the MWIS.

    State 1 means "in the set".  Node tables are (0, weight); every edge
    table pays a penalty M = 1 + total weight except on (1, 1), where it
    pays nothing, so any assignment violating independence loses more than
    the whole weight budget could recover.
    """
    m = 1.0 + float(sum(inst.weights))
    phi = [(0.0, w) for w in inst.weights]
    psi = {e: [[m, m], [m, 0.0]] for e in inst.graph.edge_list}
    return PairwiseMrf(inst.graph, 2, phi, psi)


def max_weight_independent_set(
    graph: Graph, weights, cap: int = 200
) -> tuple[frozenset[int], float]:
    """Exact MWIS by branch and bound over bitsets (small instances only).

    Deterministic: nodes are branched in descending weight order and the
    first optimum found is kept.
    """
    n = graph.n
    if n > cap:
        raise CapExceeded(f"exact MWIS refused for n={n} > cap={cap}")
    w = [float(x) for x in weights]
    if len(w) != n:
        raise ValueError("need one weight per node")
    closed = []
    for v in range(n):
        mask = 1 << v
        for u in graph.adjacency[v]:
            mask |= 1 << u
        closed.append(mask)

    order = sorted(range(n), key=lambda v: (-w[v], v))
    best_w = -float("inf")
    best_set: tuple[int, ...] = ()

    def dfs(avail: int, cur_w: float, chosen: list[int]):
        nonlocal best_w, best_set
        ub = cur_w + sum(w[v] for v in order if avail >> v & 1 and w[v] > 0)
        if ub <= best_w:
            return
        v = next((u for u in order if avail >> u & 1), None)
        if v is None:
            if cur_w > best_w:
                best_w, best_set = cur_w, tuple(sorted(chosen))
            return
        chosen.append(v)
        dfs(avail & ~closed[v], cur_w + w[v], chosen)
        chosen.pop()
        dfs(avail & ~(1 << v), cur_w, chosen)

    dfs((1 << n) - 1 if n else 0, 0.0, [])
    return frozenset(best_set), best_w


def nodes_for_assignment(inst: MwisInstance, y) -> frozenset[int]:
    """Conflict-graph nodes selected by a consistent global assignment."""
    index = {label: i for i, label in enumerate(inst.labels)}
    picked = []
    for fi, vars_ in enumerate(inst.factor_vars):
        joint = tuple(y[v] for v in vars_)
        picked.append(index[(fi, joint)])
    return frozenset(picked)


# ---------------------------------------------------------------------------
# Factor-model text format
# ---------------------------------------------------------------------------
#
#   factors <nvars> <dom_1> ... <dom_nvars>
#   factor <arity> <var ids...> <table row-major>      one line per factor


def write_factor_model(model: FactorModel) -> str:
    head = "factors {} {}".format(
        len(model.domain_sizes), " ".join(map(str, model.domain_sizes))
    )
    lines = [head]
    for vars_, table in model.factors:
        vals = " ".join(format(x, ".17g") for x in np.asarray(table).ravel())
        lines.append(f"factor {len(vars_)} {' '.join(map(str, vars_))} {vals}")
    return "\n".join(lines) + "\n"


def parse_factor_model(text: str) -> FactorModel:
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    if not rows or rows[0][0] != "factors":
        raise FormatError("expected header: factors <nvars> <domains...>")
    nvars = int(rows[0][1])
    if len(rows[0]) != 2 + nvars:
        raise FormatError("header domain count mismatch")
    domains = tuple(int(x) for x in rows[0][2:])
    factors = []
    for row in rows[1:]:
        if row[0] != "factor":
            raise FormatError(f"unknown line kind: {row[0]}")
        arity = int(row[1])
        vars_ = tuple(int(x) for x in row[2 : 2 + arity])
        if any(not 0 <= v < nvars for v in vars_):
            raise FormatError(f"factor variable out of range: {vars_}")
        shape = tuple(domains[v] for v in vars_)
        need = int(np.prod(shape)) if shape else 1
        vals = [float(x) for x in row[2 + arity :]]
        if len(vals) != need:
            raise FormatError(f"factor table needs {need} values, got {len(vals)}")
        factors.append((vars_, np.array(vals).reshape(shape)))
    return FactorModel(domains, tuple(factors))
