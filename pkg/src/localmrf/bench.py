"""Experiment harness: model generators, trial runner, analytic bound curves,
and the normalized free-energy sequence.

Models are binary lattice fields in the usual product form: node exponent
theta_i * x_i, edge exponent theta_ij * x_i * x_j, with the thetas drawn
uniformly from intervals controlled by a strength parameter; an affine
shift makes every table non-negative before inference runs.  Trials are
reproducible from (seed, alpha, trial index) and results serialize to CSV
with exact float round-tripping.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, fields

import numpy as np

from .core import (
    Graph,
    PairwiseMrf,
    affine_shift,
    connected_components,
    criscross_graph,
    grid_graph,
)
from .decompose import (
    EdgeDecomposition,
    db_dim_edge,
    empty_edge_decomposition,
    grid_decomp,
    minor_edge,
)
from .exact import brute_log_z, brute_map, grid_transfer_log_z, grid_transfer_map
from .inference import log_partition_bounds, mode_estimate

VARYING_INTERACTION = "varying-interaction"
VARYING_FIELD = "varying-field"
FIELD_HALF_WIDTH = 0.05     # theta_i range in the varying-interaction mode
INTERACTION_HALF_WIDTH = 0.5  # theta_ij range in the varying-field mode


def gen_grid(n: int) -> Graph:
    if n < 2:
        raise ValueError("need n >= 2")
    return grid_graph(n)


def gen_criscross(n: int) -> Graph:
    if n < 2:
        raise ValueError("need n >= 2")
    return criscross_graph(n)


def sample_potentials(
    graph: Graph, mode: str, alpha: float, seed: int
) -> PairwiseMrf:
    """Random product-form tables, affine-shifted to be non-negative.

    varying-interaction: theta_i ~ U[-0.05, 0.05], theta_ij ~ U[-alpha, alpha].
    varying-field:       theta_i ~ U[-alpha, alpha], theta_ij ~ U[-0.5, 0.5].
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if mode == VARYING_INTERACTION:
        field_w, inter_w = FIELD_HALF_WIDTH, alpha
    elif mode == VARYING_FIELD:
        field_w, inter_w = alpha, INTERACTION_HALF_WIDTH
    else:
        raise ValueError(f"unknown mode: {mode}")
    theta_node = rng.uniform(-field_w, field_w, size=graph.n)
    theta_edge = rng.uniform(-inter_w, inter_w, size=len(graph.edge_list))
    phi = np.zeros((graph.n, 2))
    phi[:, 1] = theta_node
    psi = np.zeros((len(graph.edge_list), 2, 2))
    psi[:, 1, 1] = theta_edge
    raw = PairwiseMrf(graph, 2, phi, psi)
    shifted, _ = affine_shift(raw)
    return shifted


def criscross_decomposition(
    cc_graph: Graph, grid_dec: EdgeDecomposition
) -> EdgeDecomposition:
    """Lift a grid-subgraph edge decomposition to the cris-cross graph.

    Keeps the grid removals and additionally removes every diagonal whose
    endpoints land in different grid components, so the cris-cross
    components coincide with the grid ones.  Each diagonal's removal
    probability is at most twice the grid edges', hence the doubled target.
    """
    comp_of = {}
    for i, comp in enumerate(grid_dec.components):
        for v in comp:
            comp_of[v] = i
    removed = set(grid_dec.removed_edges)
    grid_edges = grid_graph(int(math.isqrt(cc_graph.n))).edges
    for (u, v) in cc_graph.edge_list:
        if (u, v) in grid_edges:
            continue
        if comp_of[u] != comp_of[v]:
            removed.add((u, v))
    comps = connected_components(cc_graph, removed_edges=removed)
    return EdgeDecomposition(
        alg=grid_dec.alg + "+diag",
        n=cc_graph.n,
        removed_edges=frozenset(removed),
        components=comps,
        eps_target=min(1.0, 2.0 * grid_dec.eps_target),
        seed=grid_dec.seed,
        params=dict(grid_dec.params),
    )


# ---------------------------------------------------------------------------
# Experiment specification and trial records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: topology x potential mode x strength grid x decomposition grid.

    Topologies: ``grid`` and ``criscross`` are n x n lattices (exact
    comparison via the transfer sweep); ``linechords`` is the chordal ring
    with ``chords_k`` extra edges; ``random`` draws one Erdos-Renyi graph
    with edge probability ``p`` from the sweep seed.  Non-lattice
    topologies fall back to brute enumeration for the exact comparison and
    flag the record (exact fields empty) when that is infeasible.
    """

    topology: str = "grid"          # grid | criscross | linechords | random
    n: int = 7
    mode: str = VARYING_INTERACTION
    alphas: tuple[float, ...] = (0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0)
    decomp: str = "minore"          # minore | grid | dbdim | none
    r: int = 3
    lambdas: tuple[int, ...] = (3, 4, 5)
    ks: tuple[int, ...] = (2,)
    eps: float = 0.25
    K: int = 40
    chords_k: int = 2
    p: float = 0.3
    trials: int = 40
    seed: int = 0
    oracle: str = "transfer"        # transfer | none

    def params_grid(self) -> tuple[int, ...]:
        if self.decomp == "minore":
            return self.lambdas
        if self.decomp == "grid":
            return self.ks
        return (0,)

    def validate(self) -> None:
        if self.topology not in ("grid", "criscross", "linechords", "random"):
            raise ValueError(f"unknown topology {self.topology}")
        if self.decomp not in ("minore", "grid", "dbdim", "none"):
            raise ValueError(f"unknown decomposition {self.decomp}")
        if self.decomp == "grid" and self.topology in ("linechords", "random"):
            raise ValueError("slab decomposition needs a lattice topology")
        if not self.alphas or not self.params_grid():
            raise ValueError("parameter grids must be non-empty")
        if self.trials < 1:
            raise ValueError("need at least one trial")

    def build_graph(self) -> Graph:
        if self.topology == "grid":
            return gen_grid(self.n)
        if self.topology == "criscross":
            return gen_criscross(self.n)
        if self.topology == "linechords":
            from .saw import size_lower_bound_family

            return size_lower_bound_family(self.n, self.chords_k)
        rng = np.random.default_rng(np.random.SeedSequence((self.seed, 97)))
        edges = [
            (u, v)
            for u in range(self.n)
            for v in range(u + 1, self.n)
            if rng.random() < self.p
        ]
        return Graph(self.n, edges)


def parse_experiment_spec(text: str) -> ExperimentSpec:
    """Flat key=value lines; '#' comments; lists comma-separated."""
    values: dict[str, object] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"expected key=value, got: {line}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key in ("n", "r", "trials", "seed", "K", "chords_k"):
            values[key] = int(val)
        elif key in ("eps", "p"):
            values[key] = float(val)
        elif key == "alphas":
            values[key] = tuple(float(x) for x in val.split(","))
        elif key in ("lambdas", "ks"):
            values[key] = tuple(int(x) for x in val.split(","))
        elif key in ("topology", "mode", "decomp", "oracle"):
            values[key] = val
        else:
            raise ValueError(f"unknown spec key: {key}")
    spec = ExperimentSpec(**values)
    spec.validate()
    return spec


@dataclass
class TrialRecord:
    topology: str
    n: int
    mode: str
    alpha: float
    decomp: str
    param: int
    trial: int
    model_seed: int
    decomp_seed: int
    lb: float
    ub: float
    gap: float
    exact_logz: float | None
    err_logz: float | None
    h_hat: float
    h_star: float | None
    err_map: float | None
    removed: int
    max_component: int
    wall_time: float


_FLOATISH = {"alpha", "lb", "ub", "gap", "exact_logz", "err_logz",
             "h_hat", "h_star", "err_map", "wall_time"}
_OPTIONAL = {"exact_logz", "err_logz", "h_star", "err_map"}


def records_to_csv(records) -> str:
    out = io.StringIO()
    names = [f.name for f in fields(TrialRecord)]
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(names)
    for rec in records:
        row = []
        for name in names:
            val = getattr(rec, name)
            if val is None:
                row.append("")
            elif name in _FLOATISH:
                row.append(format(val, ".17g"))
            else:
                row.append(str(val))
        writer.writerow(row)
    return out.getvalue()


def records_from_csv(text: str) -> list[TrialRecord]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    names = [f.name for f in fields(TrialRecord)]
    if header != names:
        raise ValueError("unexpected CSV header")
    records = []
    for row in reader:
        kwargs = {}
        for name, val in zip(names, row):
            if val == "" and name in _OPTIONAL:
                kwargs[name] = None
            elif name in _FLOATISH:
                kwargs[name] = float(val)
            elif name in ("topology", "mode", "decomp"):
                kwargs[name] = val
            else:
                kwargs[name] = int(val)
        records.append(TrialRecord(**kwargs))
    return records


# ---------------------------------------------------------------------------
# Trial runner
# ---------------------------------------------------------------------------


def _decompose_for_trial(
    spec: ExperimentSpec, graph: Graph, param: int, seed: int
) -> EdgeDecomposition:
    base_graph = graph
    lift = spec.topology == "criscross"
    if lift:
        base_graph = grid_graph(spec.n)
    if spec.decomp == "minore":
        dec = minor_edge(base_graph, spec.r, param, seed)
    elif spec.decomp == "grid":
        rng = np.random.default_rng(np.random.SeedSequence((seed, 17)))
        l1, l2 = int(rng.integers(param)), int(rng.integers(param))
        dec = grid_decomp(spec.n, param, l1, l2)
    elif spec.decomp == "dbdim":
        dec = db_dim_edge(base_graph, spec.eps, spec.K, seed)
    else:
        dec = empty_edge_decomposition(base_graph)
    if lift:
        dec = criscross_decomposition(graph, dec)
    return dec


def _derived_seed(*key: int) -> int:
    return int(np.random.SeedSequence(tuple(key)).generate_state(1)[0])


def run_trial(
    spec: ExperimentSpec, graph: Graph, alpha: float, param: int, trial: int
) -> TrialRecord:
    alpha_key = int(round(alpha * 10**6))
    model_seed = _derived_seed(spec.seed, alpha_key, trial)
    decomp_seed = _derived_seed(spec.seed, alpha_key, trial, param, 1)
    mrf = sample_potentials(graph, spec.mode, alpha, model_seed)
    start = time.perf_counter()
    dec = _decompose_for_trial(spec, graph, param, decomp_seed)
    bounds = log_partition_bounds(mrf, dec)
    estimate = mode_estimate(mrf, dec)
    wall = time.perf_counter() - start

    # exact comparison: transfer sweep on lattices, brute elsewhere when
    # feasible, otherwise the record simply carries no exact fields
    exact_logz = err_logz = h_star = err_map = None
    if spec.oracle == "transfer":
        if spec.topology in ("grid", "criscross"):
            exact_logz = grid_transfer_log_z(mrf)
            _, h_star = grid_transfer_map(mrf)
        elif mrf.q**mrf.n <= 2**20:
            exact_logz = brute_log_z(mrf)
            _, h_star = brute_map(mrf)
    if exact_logz is not None:
        mid = 0.5 * (bounds.log_z_lb + bounds.log_z_ub)
        err_logz = abs(mid - exact_logz) / graph.n
        err_map = (h_star - estimate.energy) / graph.n
    return TrialRecord(
        topology=spec.topology,
        n=spec.n,
        mode=spec.mode,
        alpha=alpha,
        decomp=spec.decomp,
        param=param,
        trial=trial,
        model_seed=model_seed,
        decomp_seed=decomp_seed,
        lb=bounds.log_z_lb,
        ub=bounds.log_z_ub,
        gap=bounds.gap,
        exact_logz=exact_logz,
        err_logz=err_logz,
        h_hat=estimate.energy,
        h_star=h_star,
        err_map=err_map,
        removed=len(dec.removed_edges),
        max_component=dec.max_component,
        wall_time=wall,
    )


def run_experiment(spec: ExperimentSpec) -> list[TrialRecord]:
    """All (alpha, decomposition parameter, trial) cells of the sweep.

    Models are keyed by (seed, alpha, trial) only, so different
    decomposition parameters run against the same sampled models; that
    makes cross-parameter error comparisons less noisy.
    """
    spec.validate()
    graph = spec.build_graph()
    records = []
    for alpha in spec.alphas:
        for param in spec.params_grid():
            for trial in range(spec.trials):
                records.append(run_trial(spec, graph, alpha, param, trial))
    return records


# ---------------------------------------------------------------------------
# Analytic bound curves
# ---------------------------------------------------------------------------


def edge_profile(topology: str, n: int) -> tuple[int, int]:
    """(axis-aligned edge count, diagonal edge count) of the lattice."""
    if topology == "grid":
        return 2 * n * (n - 1), 0
    if topology == "criscross":
        return 2 * n * (n - 1), 2 * (n - 1) * (n - 1)
    raise ValueError(f"unknown topology {topology}")


def expected_range(mode: str, alpha: float) -> float:
    """Mean of max-min over one random edge table of the sampled models.

    The table is zero except the (1,1) entry theta, so the range is |theta|
    and its mean is half the interval width; it depends on the interaction
    strength only, never on the field strength.
    """
    half_width = alpha if mode == VARYING_INTERACTION else INTERACTION_HALF_WIDTH
    return half_width / 2.0


def bound_curve_value(
    topology: str, n: int, mode: str, alpha: float, eps_edge: float
) -> float:
    """A-priori E[gap] / n^2 for a removal-probability-eps decomposition.

    Diagonal edges of the cris-cross count with twice the grid eps because
    the lifted decomposition cuts a diagonal whenever either of its two
    grid slab boundaries is cut.
    """
    axis, diag = edge_profile(topology, n)
    rng_mean = expected_range(mode, alpha)
    return (axis * eps_edge + diag * min(1.0, 2.0 * eps_edge)) * rng_mean / n**2


def bound_curves(
    topology: str,
    n: int,
    mode: str,
    alphas,
    decomp: str,
    params,
    r: int = 3,
) -> list[tuple[float, int, float]]:
    """Rows (alpha, parameter, bound) over a [alpha x parameter] grid."""
    rows = []
    for alpha in alphas:
        for p in params:
            if decomp == "minore":
                eps = r / p
            elif decomp == "grid":
                eps = 1.0 / p
            else:
                raise ValueError("bound curves cover minore and grid schemes")
            rows.append((alpha, p, bound_curve_value(topology, n, mode, alpha, eps)))
    return rows


# ---------------------------------------------------------------------------
# Free-energy sequence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FreeEnergyPoint:
    n: int
    log_z: float
    a_n: float            # log_z / n^2
    slab_lb: float | None
    slab_ub: float | None


def homogeneous_grid_mrf(phi_table, psi_table, n: int) -> PairwiseMrf:
    """n x n lattice with one shared node table and one shared edge table."""
    phi = np.asarray(phi_table, dtype=float)
    psi = np.asarray(psi_table, dtype=float)
    q = len(phi)
    graph = grid_graph(n)
    return PairwiseMrf(
        graph,
        q,
        np.tile(phi, (graph.n, 1)),
        np.tile(psi, (len(graph.edge_list), 1, 1)),
    )


def free_energy_sequence(
    phi_table, psi_table, n_list, slab_k: int | None = None
) -> list[FreeEnergyPoint]:
    """Exact a_n = log Z_n / n^2 per grid side n, with optional slab bounds.

    When ``slab_k`` is given, each n also gets the certified bracket from
    the deterministic slab decomposition with offsets (0, 0), normalized
    by n^2.
    """
    points = []
    for n in n_list:
        mrf = homogeneous_grid_mrf(phi_table, psi_table, n)
        log_z = grid_transfer_log_z(mrf)
        lb = ub = None
        if slab_k is not None:
            dec = grid_decomp(n, min(slab_k, n), 0, 0)
            b = log_partition_bounds(mrf, dec)
            lb, ub = b.log_z_lb / n**2, b.log_z_ub / n**2
        points.append(FreeEnergyPoint(n, log_z, log_z / n**2, lb, ub))
    return points


def free_energy_envelope(phi_table, psi_table) -> tuple[float, float]:
    """(lower, upper) bounds on a_n for any n: ln 2 and
    ln 2 + max phi + 4 max psi, valid for non-negative tables."""
    phi = np.asarray(phi_table, dtype=float)
    psi = np.asarray(psi_table, dtype=float)
    if phi.min() < 0 or psi.min() < 0:
        raise ValueError("envelope requires non-negative tables")
    return math.log(2.0), math.log(2.0) + float(phi.max()) + 4.0 * float(psi.max())
