"""Command-line front end.

Subcommands: decompose, exact, logz, map, saw, reduce, experiment, limit.
Graphs and models travel in the line-oriented MRF text format; trial tables
come out as CSV.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bench
from .core import CapExceeded, FormatError, PairwiseMrf, dump_mrf, load_mrf
from .decompose import (
    db_dim_edge,
    db_dim_vertex,
    empty_edge_decomposition,
    grid_decomp,
    minor_edge,
    minor_vertex,
)
from .exact import brute_log_z, brute_map, detect_grid, grid_transfer_log_z, grid_transfer_map
from .inference import log_partition_bounds, mode_estimate
from .mwis import factor_to_mwis, mwis_as_binary_mrf, parse_factor_model
from .saw import build_saw_tree, msg_pass_mode, saw_max_ratio


def _write_decomposition(dec, out, vertex: bool) -> None:
    lines = [
        f"# decomposition alg={dec.alg} n={dec.n} eps_target={dec.eps_target:.17g}"
        f" max_component={dec.max_component} seed={dec.seed}"
    ]
    if vertex:
        for v in sorted(dec.removed_nodes):
            lines.append(f"removed_node {v}")
    else:
        for u, v in sorted(dec.removed_edges):
            lines.append(f"removed_edge {u} {v}")
    for comp in dec.components:
        lines.append("component " + " ".join(map(str, comp)))
    text = "\n".join(lines) + "\n"
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _cmd_decompose(args) -> int:
    graph = load_mrf(args.graph).graph
    if args.alg == "dbdim":
        if args.vertex:
            dec = db_dim_vertex(graph, args.eps, args.K, args.seed)
        else:
            dec = db_dim_edge(graph, args.eps, args.K, args.seed)
    elif args.alg == "minorv":
        dec = minor_vertex(graph, args.r, args.lam, args.seed)
    elif args.alg == "minore":
        dec = minor_edge(graph, args.r, args.lam, args.seed)
    else:
        shape = detect_grid(graph)
        if shape.rows != shape.cols or shape.criscross:
            raise SystemExit("grid decomposition needs a square grid input")
        dec = grid_decomp(shape.rows, args.k, args.l1, args.l2)
    _write_decomposition(dec, args.out, vertex=args.alg == "minorv" or
                         (args.alg == "dbdim" and args.vertex))
    return 0


def _exact_values(mrf: PairwiseMrf, transfer: bool):
    if transfer:
        return grid_transfer_log_z(mrf), grid_transfer_map(mrf)
    assignment, h = brute_map(mrf)
    return brute_log_z(mrf), (assignment, h)


def _cmd_exact(args) -> int:
    mrf = load_mrf(args.graph)
    log_z, (assignment, h) = _exact_values(mrf, args.transfer)
    if args.mode in ("logz", "both"):
        print(f"log_z {log_z:.17g}")
    if args.mode in ("map", "both"):
        print("map " + " ".join(map(str, assignment)))
        print(f"map_energy {h:.17g}")
    return 0


def _decomp_for_args(mrf, args, seed):
    graph = mrf.graph
    if args.decomp == "dbdim":
        return db_dim_edge(graph, args.eps, args.K, seed)
    if args.decomp == "minore":
        return minor_edge(graph, args.r, args.lam, seed)
    if args.decomp == "grid":
        shape = detect_grid(graph)
        rng = np.random.default_rng(np.random.SeedSequence((seed, 17)))
        return grid_decomp(shape.rows, args.k,
                           int(rng.integers(args.k)), int(rng.integers(args.k)))
    return empty_edge_decomposition(graph)


def _cmd_bounds(args, want_map: bool) -> int:
    mrf = load_mrf(args.graph)
    rows = ["seed,lb,ub,gap,exact,h_hat,h_star"]
    exact_logz = ""
    h_star = ""
    if args.exact:
        try:
            log_z, (_, h) = _exact_values(mrf, transfer=True)
        except ValueError:
            log_z, (_, h) = _exact_values(mrf, transfer=False)
        exact_logz, h_star = f"{log_z:.17g}", f"{h:.17g}"
    for t in range(args.trials):
        seed = args.seed + t
        dec = _decomp_for_args(mrf, args, seed)
        b = log_partition_bounds(mrf, dec)
        h_hat = ""
        if want_map:
            h_hat = f"{mode_estimate(mrf, dec).energy:.17g}"
        rows.append(
            f"{seed},{b.log_z_lb:.17g},{b.log_z_ub:.17g},{b.gap:.17g},"
            f"{exact_logz},{h_hat},{h_star}"
        )
    text = "\n".join(rows) + "\n"
    if args.csv == "-":
        sys.stdout.write(text)
    else:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


def _cmd_saw(args) -> int:
    mrf = load_mrf(args.graph)
    if args.trace and not args.msgpass:
        raise SystemExit("--trace records the schedule; combine it with --msgpass")
    if args.msgpass:
        result = msg_pass_mode(mrf, keep_trace=args.trace is not None)
        for v in range(mrf.n):
            r = result.ratios[v]
            print(f"node {v} log_q1 {r.log_num:.17g} log_q0 {r.log_den:.17g} "
                  f"log_ratio {r.log_ratio():.17g}")
        if args.trace:
            with open(args.trace, "w", encoding="utf-8") as fh:
                fh.write("\n".join(result.trace) + "\n")
    else:
        tree = build_saw_tree(mrf, args.root)
        r = saw_max_ratio(tree)
        print(f"tree_nodes {tree.node_count} green {tree.mark_count['green']} "
              f"red {tree.mark_count['red']}")
        print(f"node {args.root} log_q1 {r.log_num:.17g} log_q0 {r.log_den:.17g} "
              f"log_ratio {r.log_ratio():.17g}")
    return 0


def _cmd_reduce(args) -> int:
    with open(args.infile, "r", encoding="utf-8") as fh:
        model = parse_factor_model(fh.read())
    inst = factor_to_mwis(model)
    dump_mrf(mwis_as_binary_mrf(inst), args.out)
    return 0


def _cmd_experiment(args) -> int:
    with open(args.spec, "r", encoding="utf-8") as fh:
        spec = bench.parse_experiment_spec(fh.read())
    records = bench.run_experiment(spec)
    text = bench.records_to_csv(records)
    if args.csv == "-":
        sys.stdout.write(text)
    else:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


def _cmd_limit(args) -> int:
    q = len(args.phi)
    if len(args.psi) != q * q:
        raise SystemExit(f"psi needs {q * q} values for a {q}-state table")
    psi = np.array(args.psi).reshape(q, q)
    n_list = range(args.nmin, args.nmax + 1)
    points = bench.free_energy_sequence(args.phi, psi, n_list, slab_k=args.k)
    rows = ["n,log_z,a_n,slab_lb,slab_ub"]
    for p in points:
        lb = "" if p.slab_lb is None else f"{p.slab_lb:.17g}"
        ub = "" if p.slab_ub is None else f"{p.slab_ub:.17g}"
        rows.append(f"{p.n},{p.log_z:.17g},{p.a_n:.17g},{lb},{ub}")
    text = "\n".join(rows) + "\n"
    if args.csv == "-":
        sys.stdout.write(text)
    else:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="localmrf",
        description="certified local inference on pairwise MRFs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="run a graph decomposition")
    p.add_argument("--alg", required=True, choices=["dbdim", "minorv", "minore", "grid"])
    p.add_argument("--graph", required=True)
    p.add_argument("--out", default="-")
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--K", type=int, default=40)
    p.add_argument("--r", type=int, default=3)
    p.add_argument("--lambda", dest="lam", type=int, default=4)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--l1", type=int, default=0)
    p.add_argument("--l2", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vertex", action="store_true",
                   help="node-based ball carving instead of edge-based")
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("exact", help="exact log Z / MAP of a model")
    p.add_argument("--mode", choices=["logz", "map", "both"], default="both")
    p.add_argument("--graph", required=True)
    p.add_argument("--transfer", action="store_true",
                   help="use the grid transfer-matrix sweep")
    p.set_defaults(func=_cmd_exact)

    for name, want_map in (("logz", False), ("map", True)):
        p = sub.add_parser(name, help=f"decomposition-based {name} runs")
        p.add_argument("--graph", required=True)
        p.add_argument("--decomp", choices=["dbdim", "minore", "grid", "none"],
                       default="minore")
        p.add_argument("--eps", type=float, default=0.25)
        p.add_argument("--K", type=int, default=40)
        p.add_argument("--r", type=int, default=3)
        p.add_argument("--lambda", dest="lam", type=int, default=4)
        p.add_argument("--k", type=int, default=2)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=int, default=1)
        p.add_argument("--csv", default="-")
        p.add_argument("--exact", action="store_true",
                       help="also compute the exact values when feasible")
        p.set_defaults(func=lambda a, w=want_map: _cmd_bounds(a, w))

    p = sub.add_parser("saw", help="walk-tree max-marginal ratios")
    p.add_argument("--graph", required=True)
    p.add_argument("--root", type=int, default=0)
    p.add_argument("--msgpass", action="store_true",
                   help="run the distributed schedule for every node")
    p.add_argument("--trace",
                   help="write every emitted sequence to this file")
    p.set_defaults(func=_cmd_saw)

    p = sub.add_parser("reduce", help="factor model -> independent-set MRF")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("experiment", help="run a sweep from a spec file")
    p.add_argument("--spec", required=True)
    p.add_argument("--csv", default="-")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("limit", help="normalized free-energy sequence")
    p.add_argument("--phi", type=float, nargs="+", required=True)
    p.add_argument("--psi", type=float, nargs="+", required=True)
    p.add_argument("--nmin", type=int, default=3)
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--k", type=int, default=None,
                   help="slab width for the certified bracket columns")
    p.add_argument("--csv", default="-")
    p.set_defaults(func=_cmd_limit)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CapExceeded, FormatError) as exc:
        raise SystemExit(f"error: {exc}")


if __name__ == "__main__":
    raise SystemExit(main())
