"""Command-line surface: every subcommand's happy path plus file formats."""

import math

import numpy as np
import pytest

from localmrf import Graph, dump_mrf, grid_graph, load_mrf
from localmrf.bench import sample_potentials, VARYING_INTERACTION
from localmrf.cli import main
from localmrf.mwis import write_factor_model, FactorModel

from helpers import random_mrf


@pytest.fixture
def grid_model_file(tmp_path):
    m = sample_potentials(grid_graph(4), VARYING_INTERACTION, 1.0, seed=5)
    path = tmp_path / "grid4.mrf"
    dump_mrf(m, path)
    return str(path)


def test_decompose_minore(grid_model_file, tmp_path, capsys):
    out = tmp_path / "dec.txt"
    assert main([
        "decompose", "--alg", "minore", "--graph", grid_model_file,
        "--r", "3", "--lambda", "4", "--seed", "1", "--out", str(out),
    ]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# decomposition alg=minore")
    assert any(line.startswith("removed_edge") for line in lines)
    assert any(line.startswith("component") for line in lines)
    # components partition the nodes
    seen = []
    for line in lines:
        if line.startswith("component"):
            seen += [int(x) for x in line.split()[1:]]
    assert sorted(seen) == list(range(16))


def test_decompose_grid_and_dbdim(grid_model_file, tmp_path):
    out = tmp_path / "dec.txt"
    assert main([
        "decompose", "--alg", "grid", "--graph", grid_model_file,
        "--k", "2", "--l1", "0", "--l2", "1", "--out", str(out),
    ]) == 0
    assert "alg=grid" in out.read_text()
    assert main([
        "decompose", "--alg", "dbdim", "--graph", grid_model_file,
        "--eps", "0.3", "--K", "6", "--seed", "2", "--out", str(out),
    ]) == 0
    assert "alg=dbdim" in out.read_text()
    assert main([
        "decompose", "--alg", "minorv", "--graph", grid_model_file,
        "--r", "2", "--lambda", "3", "--seed", "3", "--out", str(out),
    ]) == 0
    assert "removed_node" in out.read_text()


def test_exact_modes(grid_model_file, capsys):
    assert main(["exact", "--mode", "both", "--graph", grid_model_file]) == 0
    plain = capsys.readouterr().out
    assert plain.startswith("log_z ")
    assert "map " in plain and "map_energy " in plain
    assert main(["exact", "--mode", "logz", "--graph", grid_model_file,
                 "--transfer"]) == 0
    transfer = capsys.readouterr().out
    a = float(plain.splitlines()[0].split()[1])
    b = float(transfer.splitlines()[0].split()[1])
    assert a == pytest.approx(b, rel=1e-10)


def test_logz_map_csv(grid_model_file, tmp_path):
    out = tmp_path / "runs.csv"
    assert main([
        "logz", "--graph", grid_model_file, "--decomp", "minore",
        "--r", "3", "--lambda", "4", "--seed", "0", "--trials", "3",
        "--csv", str(out), "--exact",
    ]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "seed,lb,ub,gap,exact,h_hat,h_star"
    assert len(lines) == 4
    for line in lines[1:]:
        seed, lb, ub, gap, exact, h_hat, h_star = line.split(",")
        assert float(lb) <= float(exact) <= float(ub)
        assert h_hat == ""

    assert main([
        "map", "--graph", grid_model_file, "--decomp", "grid",
        "--k", "2", "--seed", "0", "--trials", "2", "--csv", str(out),
        "--exact",
    ]) == 0
    for line in out.read_text().splitlines()[1:]:
        seed, lb, ub, gap, exact, h_hat, h_star = line.split(",")
        assert float(h_star) - float(gap) <= float(h_hat) <= float(h_star) + 1e-12


def test_saw_commands(tmp_path, capsys):
    m = random_mrf(np.random.default_rng(0), Graph(3, [(0, 1), (0, 2), (1, 2)]))
    path = tmp_path / "tri.mrf"
    dump_mrf(m, path)
    assert main(["saw", "--graph", str(path), "--root", "0"]) == 0
    out = capsys.readouterr().out
    assert "tree_nodes 7" in out and "green 1" in out and "red 1" in out

    trace = tmp_path / "trace.txt"
    assert main(["saw", "--graph", str(path), "--msgpass",
                 "--trace", str(trace)]) == 0
    out = capsys.readouterr().out
    assert out.count("log_ratio") == 3
    assert trace.read_text().startswith("path 0 1")

    with pytest.raises(SystemExit):
        main(["saw", "--graph", str(path), "--trace", str(trace)])


def test_reduce_round_trip(tmp_path):
    model = FactorModel(
        (2, 2),
        (
            ((0,), np.array([0.0, 1.0])),
            ((1,), np.array([0.0, 2.0])),
            ((0, 1), np.array([[0.0, 0.0], [0.0, 3.0]])),
        ),
    )
    fin = tmp_path / "model.fac"
    fin.write_text(write_factor_model(model))
    fout = tmp_path / "model.mrf"
    assert main(["reduce", "--in", str(fin), "--out", str(fout)]) == 0
    mrf = load_mrf(fout)
    assert mrf.q == 2 and mrf.n == 8
    # penalty encoding: brute MAP support decodes the all-ones assignment
    from localmrf import brute_map

    x, _ = brute_map(mrf)
    assert sum(x) == 3


def test_experiment_command(tmp_path):
    spec = tmp_path / "sweep.spec"
    spec.write_text(
        "topology=grid\nn=4\nmode=varying-interaction\nalphas=0.5\n"
        "decomp=minore\nr=2\nlambdas=3\ntrials=2\nseed=1\noracle=transfer\n"
    )
    out = tmp_path / "sweep.csv"
    assert main(["experiment", "--spec", str(spec), "--csv", str(out)]) == 0
    from localmrf.bench import records_from_csv

    records = records_from_csv(out.read_text())
    assert len(records) == 2
    assert all(r.lb <= r.exact_logz <= r.ub for r in records)


def test_limit_command(tmp_path):
    out = tmp_path / "limit.csv"
    assert main([
        "limit", "--phi", "0", "0.2", "--psi", "0.3", "0", "0", "0.3",
        "--nmin", "3", "--nmax", "5", "--k", "2", "--csv", str(out),
    ]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,log_z,a_n,slab_lb,slab_ub"
    assert len(lines) == 4
    for line in lines[1:]:
        n, log_z, a_n, lb, ub = line.split(",")
        assert float(lb) <= float(a_n) <= float(ub)
        assert float(a_n) >= math.log(2) - 1e-12
