import math

import pytest

from rdsgraphon.experiments import (
    CSV_HEADER,
    ExperimentConfig,
    config_from_mapping,
    emit_csv,
    emit_svg,
    load_config,
    n_to_N,
    run_dense,
    run_lemma_suite,
    run_theorem1,
    trajectory_seed,
)

CONSTANT = "kind=constant c=1.0"
BLOCK = "kind=block cuts=0,0.5,1 values=2,1;1,3"


@pytest.mark.parametrize("n,alpha,lam,N", [(16, 0.5, 1.0, 64), (10, 1.0, 0.5, 50), (24, 0.5, 2.0, 235), (1, 0.5, 0.1, 1)])
def test_n_to_N(n, alpha, lam, N):
    assert n_to_N(n, alpha, lam) == N


@pytest.mark.parametrize("changes", [
    {"n_list": (8, 8)}, {"n_list": (16, 8)}, {"n_list": ()}, {"replicates": 0}, {"alpha": 0.0}, {"alpha": 1.5},
    {"lam": 0.0}, {"cutnorm": "sdp"}, {"sampler": "gibbs"}, {"poisson_scale": "3lambda"}, {"oracle_multiplier": 0},
])
def test_config_validation(changes):
    with pytest.raises(ValueError):
        ExperimentConfig(**changes)


def test_config_defaults():
    cfg = ExperimentConfig()
    assert cfg.kernel == "kind=product a=1.0 b=1.0"
    assert (cfg.alpha, cfg.lam, cfg.n_list, cfg.replicates) == (0.5, 1.0, (8, 12, 16, 20, 24), 5)


def test_config_file(tmp_path):
    path = tmp_path / "cfg.txt"
    path.write_text("# demo\nkernel = kind=constant c=2.0\nlambda = 2\nn_list = 4, 8\nseed = 7\ntiming = false\n")
    cfg = load_config(path)
    assert cfg.kernel == "kind=constant c=2.0"
    assert cfg.lam == 2.0 and cfg.n_list == (4, 8) and cfg.master_seed == 7 and not cfg.timing
    with pytest.raises(ValueError, match="unknown"):
        config_from_mapping({"colour": "red"})


def test_theorem1_row_count_and_order():
    cfg = ExperimentConfig(n_list=(8, 16), replicates=2)
    records, summary = run_theorem1(cfg)
    assert len(records) == 4
    assert [(r.n, r.replicate) for r in records] == [(8, 0), (8, 1), (16, 0), (16, 1)]
    assert [r.N for r in records] == [23, 23, 64, 64]
    assert all(r.d_cut_exact and r.d_cut <= r.d1 + 1e-12 for r in records)
    assert [row["n"] for row in summary["by_n"]] == [8, 16]
    assert summary["by_n"][0]["residual"] > summary["by_n"][1]["residual"]


def test_theorem1_rejects_dense_alpha():
    with pytest.raises(ValueError):
        run_theorem1(ExperimentConfig(alpha=1.0))


def test_dense_rejects_sparse_alpha():
    with pytest.raises(ValueError):
        run_dense(ExperimentConfig(alpha=0.5))


def test_deterministic_csv(tmp_path):
    cfg = ExperimentConfig(n_list=(6, 9), replicates=3, master_seed=5)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(run_theorem1(cfg)[0], a)
    emit_csv(run_theorem1(cfg)[0], b)
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == ",".join(CSV_HEADER)


def test_workers_do_not_change_output():
    cfg = ExperimentConfig(n_list=(6, 9), replicates=3)
    serial = [r.row() for r in run_theorem1(cfg)[0]]
    threaded = [r.row() for r in run_theorem1(cfg.replace(workers=3))[0]]
    assert serial == threaded


def test_replicates_are_independent_streams():
    small = run_theorem1(ExperimentConfig(n_list=(8,), replicates=2))[0]
    large = run_theorem1(ExperimentConfig(n_list=(8,), replicates=4))[0]
    assert [r.row() for r in small] == [r.row() for r in large[:2]]
    seeds = {trajectory_seed(ExperimentConfig(), n, rep) for n in (8, 16) for rep in range(5)}
    assert len(seeds) == 10


def test_master_seed_changes_output():
    a = run_theorem1(ExperimentConfig(n_list=(8,), replicates=2, master_seed=0))[0]
    b = run_theorem1(ExperimentConfig(n_list=(8,), replicates=2, master_seed=1))[0]
    assert [r.seed for r in a] != [r.seed for r in b]


def test_constant_kernel_trend():
    records, summary = run_theorem1(ExperimentConfig(kernel=CONSTANT, n_list=(8, 24), replicates=5))
    med = [row["median_d_cut"] for row in summary["by_n"]]
    assert med[0] > med[1]


def test_timing_flag():
    cfg = ExperimentConfig(n_list=(6,), replicates=1)
    assert run_theorem1(cfg)[0][0].runtime_ms == 0.0
    assert run_theorem1(cfg.replace(timing=True))[0][0].runtime_ms > 0.0


def test_heuristic_records_are_flagged():
    records, _ = run_theorem1(ExperimentConfig(n_list=(8,), replicates=1, cutnorm="heuristic"))
    assert not records[0].d_cut_exact


def test_dense_row_count_and_target():
    cfg = ExperimentConfig(kernel=CONSTANT, alpha=1.0, n_list=(8, 12), replicates=2)
    records, summary = run_dense(cfg)
    assert len(records) == 4
    assert all(len(row["d_cut_to_plain"]) == 2 for row in summary["by_n"])


def test_dense_saturation():
    # large lambda drives the Poissonized target to zero and the scaled graph with it
    records, _ = run_dense(ExperimentConfig(kernel=CONSTANT, alpha=1.0, lam=200.0, n_list=(6,), replicates=1))
    assert records[0].d1 < 0.01


def test_dense_alternative_scale_is_reachable():
    cfg = ExperimentConfig(kernel=CONSTANT, alpha=1.0, n_list=(8,), replicates=2)
    a = run_dense(cfg)[0]
    b = run_dense(cfg.replace(poisson_scale="lambda"))[0]
    assert [r.seed for r in a] == [r.seed for r in b]
    assert [r.d1 for r in a] != [r.d1 for r in b]


def test_lemma3_closed_form():
    records, _ = run_lemma_suite(ExperimentConfig(kernel=CONSTANT, n_list=(4, 16, 64)), "L3")
    for r in records:
        x = 2 / math.sqrt(r.n)
        assert r.d1 == pytest.approx(1 - (1 - math.exp(-x)) / x, abs=1e-12)


def test_lemma2_block():
    records, summary = run_lemma_suite(ExperimentConfig(kernel=BLOCK, n_list=(4, 8)), "L2")
    for r, row in zip(records, summary["by_n"]):
        assert r.d1 <= row["bound"]
        assert row["oracle_exact"]
        assert r.d_cut <= r.d1 + 1e-12


def test_lemma1_block():
    records, summary = run_lemma_suite(ExperimentConfig(kernel=BLOCK, n_list=(4, 8), replicates=3), "L1")
    assert len(records) == 6
    assert all(r.d_cut <= r.d1 + 1e-12 for r in records)


def test_lemma1_requires_matching_chain():
    cfg = ExperimentConfig(kernel="kind=product a=1.0 b=1.0", n_list=(4,), replicates=1)
    with pytest.raises(ValueError, match="grid:4"):
        run_lemma_suite(cfg, "L1")
    records, _ = run_lemma_suite(cfg.replace(sampler="grid:4"), "L1")
    assert len(records) == 1


def test_lemma_unknown():
    with pytest.raises(ValueError):
        run_lemma_suite(ExperimentConfig(), "L4")


def test_emit_csv_lines(tmp_path, capsys):
    records, _ = run_theorem1(ExperimentConfig(n_list=(6, 8), replicates=2))
    path = tmp_path / "r.csv"
    emit_csv(records, path)
    assert len(path.read_text().splitlines()) == 5
    emit_csv([], path)
    assert path.read_text().splitlines() == [",".join(CSV_HEADER)]
    emit_csv(records[:1], "-")
    assert capsys.readouterr().out.splitlines()[0] == ",".join(CSV_HEADER)


def test_emit_svg(tmp_path):
    _, summary = run_theorem1(ExperimentConfig(n_list=(6, 8), replicates=2))
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    emit_svg(summary, a)
    emit_svg(summary, b)
    assert a.read_text().startswith("<?xml")
    assert a.read_bytes() == b.read_bytes()
    with pytest.raises(ValueError):
        emit_svg({"experiment": "theorem1", "by_n": []}, tmp_path / "c.svg")


def test_emit_csv_unwritable(tmp_path):
    with pytest.raises(OSError):
        emit_csv([], tmp_path / "missing" / "r.csv")
