import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import TOY_COSTS
from hardgen.cli import main
from hardgen.core import Instance, build_uncertainty, read_instance, write_instance
from hardgen.harness import dumps_report, format_table, harden, run_batch, strip_wall_times


@pytest.fixture
def toy_file(tmp_path):
    path = tmp_path / "toy.hiro"
    write_instance(Instance("selection", np.array(TOY_COSTS, dtype=float), C=100, p=2), path)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_generate_ru_is_deterministic(capsys):
    argv = ["generate", "--problem", "selection", "--n", "4", "--scenarios", "2", "--p", "2",
            "--method", "none", "--seed", "7"]
    code, first, _ = run(capsys, *argv)
    assert code == 0 and first.startswith("HIRO")
    assert run(capsys, *argv)[1] == first
    assert run(capsys, *argv[:-1], "8")[1] != first


def test_generate_tsp_defaults(tmp_path, capsys):
    out = tmp_path / "t.hiro"
    assert run(capsys, "generate", "--problem", "tsp", "--m", "5", "--out", str(out))[0] == 0
    inst = read_instance(out)
    assert inst.kind == "tsp" and inst.m == 5 and inst.N == 5
    assert not (tmp_path / "t.hiro.json").exists()


def test_generate_hardens_toy(toy_file, tmp_path, capsys):
    out = str(tmp_path / "hard.hiro")
    code, _, _ = run(capsys, "generate", "--in", toy_file, "--method", "mro-ex", "--budget", "1",
                     "--out", out)
    assert code == 0
    log = json.loads(open(out + ".json").read())
    assert log["method"] == "mro-ex" and log["stop_reason"] == "converged"
    assert "generation_time" in log
    code, text, _ = run(capsys, "evaluate", "--in", out)
    rec = json.loads(text)
    assert code == 0 and rec["value"] >= 10 - 1e-6 and rec["optimal"]


def test_generate_lsheu_n20(tmp_path, capsys):
    out = str(tmp_path / "big.hiro")
    code, _, _ = run(capsys, "generate", "--n", "20", "--method", "mro-lsheu", "--budget", "20",
                     "--seed", "3", "--out", out)
    assert code == 0
    log = json.loads(open(out + ".json").read())
    assert log["generation_time"] > 0
    orig = read_instance(out)
    assert orig.n == 20 and orig.N == 20 and orig.p == 10


def test_evaluate_fixtures(toy_file, tmp_path, capsys):
    code, text, _ = run(capsys, "evaluate", "--in", toy_file)
    rec = json.loads(text)
    assert code == 0 and rec["value"] == 8 and rec["support"] == [0, 3]
    assert set(rec) == {"value", "nodes", "time", "optimal", "support"}
    hard = tmp_path / "h.hiro"
    write_instance(Instance("selection", [[3, 2, 10, 1], [5, 6, 3, 5]], C=100, p=2), hard)
    rec = json.loads(run(capsys, "evaluate", "--in", str(hard))[1])
    assert rec["value"] == 10 and rec["support"] == [0, 3]


def test_evaluate_single_scenario(tmp_path, capsys):
    path = tmp_path / "one.hiro"
    write_instance(Instance("selection", [[5, 1, 4, 2, 8]], C=100, p=2), path)
    rec = json.loads(run(capsys, "evaluate", "--in", str(path))[1])
    assert rec["value"] == 3 and rec["nodes"] <= 3


@pytest.mark.parametrize("argv", [
    ["generate", "--n", "4", "--p", "9"],
    ["generate", "--problem", "tsp", "--m", "2"],
    ["generate", "--n", "4", "--budget", "-1"],
    ["generate", "--n", "4", "--method", "bogus"],
    ["generate", "--problem", "tsp", "--m", "4", "--method", "mid"],
    ["evaluate", "--in", "/nonexistent/file.hiro"],
    ["batch", "--config", "/nonexistent/config.json"],
    ["frobnicate"],
])
def test_bad_input_exits_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_malformed_file_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.hiro"
    bad.write_text("HIRO 1\nselection 3 1 2 100\n1 2\n")
    with pytest.raises(SystemExit) as exc:
        main(["evaluate", "--in", str(bad)])
    assert exc.value.code == 2
    assert "bad.hiro:" in capsys.readouterr().err


def test_time_limit_without_incumbent_exits_3(tmp_path, capsys):
    code, _, err = run(capsys, "generate", "--n", "30", "--method", "mro-ex", "--budget", "5",
                       "--time-limit", "1e-9")
    assert code == 3 and "time limit" in err
    path = tmp_path / "big.hiro"
    assert run(capsys, "generate", "--n", "30", "--out", str(path))[0] == 0
    code, text, _ = run(capsys, "evaluate", "--in", str(path), "--time-limit", "1e-9")
    assert code == 3 and json.loads(text)["value"] is None


def small_config(**kw):
    cfg = {"problem": "selection", "sizes": [{"n": 6, "N": 3, "p": 3}], "budgets": [0, 2],
           "methods": ["mro-heu"], "count": 3, "seed": 5, "time_limit": 60}
    cfg.update(kw)
    return cfg


def test_batch_report(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(small_config()))
    out = str(tmp_path / "report.json")
    code, _, err = run(capsys, "batch", "--config", str(cfg), "--out", out)
    assert code == 0 and "node ratio" in err
    report = json.loads(open(out).read())
    assert report["schema"] == "hardgen-report/1"
    assert len(report["records"]) == 6
    zero = [a for a in report["aggregates"] if a["b"] == 0]
    assert zero[0]["mean_node_ratio"] == zero[0]["max_node_ratio"] == 1.0
    assert all(r["node_ratio"] == 1.0 for r in report["records"] if r["b"] == 0)
    assert "mean_node_ratio" in report["aggregates"][1]
    assert open(out + ".txt").read() == err


def test_batch_deterministic_and_parallel():
    cfg = small_config(methods=["mro-heu", "mid"])
    a = run_batch(cfg)
    b = run_batch(cfg, jobs=2)
    assert dumps_report(a, timings=False) == dumps_report(b, timings=False)
    assert "total_wall_time" not in strip_wall_times(a)


def test_batch_records_errors_and_continues(monkeypatch):
    import hardgen.harness as harness

    real = harness.harden

    def flaky(inst, method, b, time_limit):
        if method == "mid":
            raise RuntimeError("boom")
        return real(inst, method, b, time_limit)

    monkeypatch.setattr(harness, "harden", flaky)
    report = run_batch(small_config(methods=["mro-heu", "mid"], budgets=[1]))
    bad = [r for r in report["records"] if r["method"] == "mid"]
    assert all(r["stop_reason"] == "error" and "boom" in r["error"] for r in bad)
    good = [r for r in report["records"] if r["method"] == "mro-heu"]
    assert all(r["error"] is None and r["node_ratio"] is not None for r in good)
    assert "mid" in format_table(report)


def test_every_method_keeps_boxes(toy):
    for method in ("mro-ex", "mro-cg", "mro-heu", "mro-lsheu", "mro-ldr", "mid"):
        out, log = harden(toy, method, 1)
        assert all(bx.contains(c, tol=1e-6) for bx, c in zip(build_uncertainty(toy, 1), out.costs))
        assert log["generation_time"] >= 0


def test_console_module():
    res = subprocess.run([sys.executable, "-m", "hardgen.cli", "evaluate", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "--time-limit" in res.stdout
