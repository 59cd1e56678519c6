import json
import subprocess
import sys

import pytest

from rdsgraphon.cli import main
from rdsgraphon.graphon import StepGraphon, save_step_csv

BLOCK = "kind=block cuts=0,0.5,1 values=2,1;1,3"


def run(argv, capsys):
    rc = main(argv)
    return rc, capsys.readouterr()


def test_backend_flag(capsys):
    rc, out = run(["--backend"], capsys)
    assert rc == 0 and out.out.strip() in {"numba", "numpy"}


def test_no_command_prints_help(capsys):
    rc, out = run([], capsys)
    assert rc == 2 and "usage" in out.out


def test_sample_and_build_graph(tmp_path, capsys):
    traj = tmp_path / "t.csv"
    rc, out = run(["sample", "--kernel", BLOCK, "--N", "200", "--seed", "3", "--out", str(traj)], capsys)
    assert rc == 0 and "N=200" in out.out
    assert traj.read_text().splitlines()[0] == "m,x"
    edges, step = tmp_path / "e.csv", tmp_path / "s.csv"
    rc, out = run(["build-graph", "--trajectory", str(traj), "--n", "8", "--scaled", "--out", str(edges),
                   "--step-out", str(step)], capsys)
    assert rc == 0
    assert edges.read_text().splitlines()[0] == "i,j,weight"
    weights = {float(line.split(",")[2]) for line in edges.read_text().splitlines()[1:]}
    assert weights == {64 / 400}


def test_cutnorm_command(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    save_step_csv(StepGraphon([[0.5, 0.0], [0.0, 0.5]]), a)
    save_step_csv(StepGraphon([[0.0, 0.5], [0.5, 0.0]]), b)
    rc, out = run(["cutnorm", "--a", str(a), "--b", str(b)], capsys)
    res = json.loads(out.out)
    assert rc == 0 and res["value"] == 0.125 and res["method"] == "exact" and res["upper_bound_d1"] == 0.5
    rc, out = run(["cutnorm", "--a", str(a), "--b", str(b), "--method", "heuristic"], capsys)
    assert json.loads(out.out)["value"] == 0.125


def test_theorem1_command(tmp_path, capsys):
    out_csv, svg = tmp_path / "r.csv", tmp_path / "r.svg"
    rc, out = run(["theorem1", "--n-list", "6,8", "--replicates", "2", "--out", str(out_csv), "--svg", str(svg)], capsys)
    assert rc == 0
    assert json.loads(out.out)["experiment"] == "theorem1"
    assert len(out_csv.read_text().splitlines()) == 5
    assert svg.exists()


def test_theorem1_stdout_csv(capsys):
    rc, out = run(["theorem1", "--n-list", "6", "--replicates", "1"], capsys)
    assert rc == 0
    assert out.out.splitlines()[0] == "n,N,replicate,seed,d_cut,d_cut_exact,d1,edge_count,runtime_ms"
    assert json.loads(out.err)["experiment"] == "theorem1"


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.txt"
    cfg.write_text(f"kernel = {BLOCK}\nn_list = 4,8\nreplicates = 1\n")
    out_csv = tmp_path / "r.csv"
    rc, _ = run(["lemma", "--which", "L2", "--config", str(cfg), "--n-list", "4", "--out", str(out_csv)], capsys)
    assert rc == 0
    assert len(out_csv.read_text().splitlines()) == 2


def test_dense_command(capsys):
    rc, out = run(["dense", "--kernel", "kind=constant c=1.0", "--n-list", "8", "--replicates", "1",
                   "--out", "-"], capsys)
    assert rc == 0
    assert out.out.splitlines()[0].startswith("n,N,")
    assert json.loads(out.err)["experiment"] == "dense"


def test_verify_k1_command(capsys):
    rc, out = run(["verify-k1", "--kernel", BLOCK], capsys)
    res = json.loads(out.out)
    assert rc == 0 and res["pass"] and res["delta"] == 0.5


def test_oracle_command(capsys):
    rc, out = run(["oracle", "--kernel", BLOCK, "--n", "4", "--N", "20"], capsys)
    lines = out.out.splitlines()
    assert rc == 0 and lines[0] == "i,j,e_indicator,h_weight,tv_lo,tv_hi,sc_bound" and len(lines) == 7


@pytest.mark.parametrize("argv", [
    ["theorem1", "--alpha", "1.0"],
    ["theorem1", "--n-list", "8,4"],
    ["sample", "--kernel", "kind=ring", "--N", "5"],
])
def test_invalid_input_exits_2(argv, capsys):
    rc, out = run(argv, capsys)
    assert rc == 2 and out.err.startswith("error:")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "rdsgraphon", "--backend"], capture_output=True, text=True, check=True)
    assert res.stdout.strip() in {"numba", "numpy"}


def test_numpy_backend_via_env():
    code = "from rdsgraphon import backend; print(backend())"
    res = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True,
                         env={"RDSGRAPHON_DISABLE_JIT": "1", "PATH": ""})
    assert res.stdout.strip() == "numpy"
