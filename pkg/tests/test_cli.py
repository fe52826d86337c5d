import json

import numpy as np
import pytest

from clbootstrap import cli
from clbootstrap.formats import fmt_float, read_weights
from clbootstrap.weights import gen_example_sequence, gen_power_law, threshold_report


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write_powerlaw(path, n=2000):
    path.write_text("".join(fmt_float(w) + "\n" for w in gen_power_law(n, 0.6).weights))
    return str(path)


def test_gen_uniform_stdout(capsys):
    assert cli.main(["gen", "--model", "uniform", "--n", "100", "--w", "1"]) == 0
    assert capsys.readouterr().out.splitlines() == ["1"] * 100


def test_gen_example_file_and_manifest(workdir):
    assert cli.main(["gen", "--model", "example-a", "--W", "1e6", "--out", "a.txt"]) == 0
    ws = read_weights("a.txt")
    assert np.array_equal(ws.weights, gen_example_sequence("A", 1e6).weights)
    manifest = json.loads((workdir / "a.txt.manifest.json").read_text())
    assert manifest["command"] == "gen" and manifest["argv"][0] == "gen"
    for key in ("config", "base_seed", "tool_version", "input_digests", "timestamp"):
        assert key in manifest


def test_usage_and_data_errors(workdir):
    assert cli.main(["gen", "--model", "powerlaw", "--n", "0"]) == 2
    assert cli.main(["gen", "--model", "nope"]) == 2
    assert cli.main(["analyze", "--weights", "missing.txt", "--r", "2"]) == 3
    (workdir / "bad.txt").write_text("1\n0.5\n")
    assert cli.main(["analyze", "--weights", "bad.txt", "--r", "2"]) == 3
    (workdir / "junk.txt").write_text("1\nabc\n")
    assert cli.main(["analyze", "--weights", "junk.txt", "--r", "2"]) == 3


def test_invariant_violation_exit_code(monkeypatch):
    def broken(args):
        raise AssertionError("synthetic")

    monkeypatch.setattr(cli, "cmd_gen", broken)
    assert cli.main(["gen", "--model", "uniform", "--n", "3"]) == 4


def test_analyze_uniform(workdir, capsys):
    (workdir / "u.txt").write_text("1\n" * 1000)
    assert cli.main(["analyze", "--weights", "u.txt", "--r", "2"]) == 0
    rep = json.loads(capsys.readouterr().out)["threshold"]
    assert rep["p_sparse"] == 1 and rep["p_dense"] is None and rep["dense_exists"] is False


def test_analyze_example_b(workdir, capsys):
    cli.main(["gen", "--model", "example-b", "--W", "1e6", "--out", "b.txt"])
    assert cli.main(["analyze", "--weights", "b.txt", "--r", "2"]) == 0
    rep = json.loads(capsys.readouterr().out)["threshold"]
    assert rep["a_c_scale"] == rep["p_dense"] < rep["p_sparse"]


def test_analyze_round_trip(workdir):
    path = write_powerlaw(workdir / "p.txt")
    argv = ["analyze", "--weights", path, "--r", "2", "--p0", "0.01", "--C", "1024",
            "--C1", "2", "--alpha", "1", "--c", "0.03", "--c1", "2", "--h", "50", "--out", "a.json"]
    assert cli.main(argv) == 0
    text = (workdir / "a.json").read_text()
    doc = json.loads(text)
    rep = threshold_report(read_weights(path), 2)
    for key, value in rep.to_dict().items():
        got = doc["threshold"][key]
        if isinstance(value, float):
            assert fmt_float(got) == fmt_float(value)
        else:
            assert got == value
    for section in ("supercritical_tail", "subcritical_tail", "breeding_plan", "layer_plan"):
        assert section in doc


def test_run_empty_and_deterministic(workdir):
    path = write_powerlaw(workdir / "p.txt")
    assert cli.main(["run", "--weights", path, "--r", "2", "--p0", "0", "--seed", "1", "--out", "z.json"]) == 0
    trace = json.loads((workdir / "z.json").read_text())["trace"]
    assert trace["final_set_size"] == 0 and trace["steps_taken"] == 0
    for name in ("x.json", "y.json"):
        cli.main(["run", "--weights", path, "--r", "2", "--p0", "0.05", "--seed", "7",
                  "--final-set", "--out", name])
    assert (workdir / "x.json").read_bytes() == (workdir / "y.json").read_bytes()


def test_run_restricted_containment(workdir):
    path = write_powerlaw(workdir / "p.txt")
    assert cli.main(["run", "--weights", path, "--r", "2", "--p0", "0.05", "--seed", "3",
                     "--restricted", "--out", "r.json"]) == 0
    doc = json.loads((workdir / "r.json").read_text())
    assert doc["containment_holds"] is True and doc["breeding_plan"]["ground_size"] > 0


def test_run_edges_export(workdir):
    path = write_powerlaw(workdir / "p.txt", n=300)
    cli.main(["run", "--weights", path, "--r", "2", "--p0", "0.1", "--seed", "2",
              "--edges", "e.txt", "--out", "r.json"])
    edges = np.loadtxt(workdir / "e.txt", dtype=int, ndmin=2)
    assert edges.min() >= 1 and np.all(edges[:, 0] < edges[:, 1])
    assert len(edges) == json.loads((workdir / "r.json").read_text())["edges"]


def sweep_config(workdir, multipliers, name="cfg.json"):
    cfg = {"generator": {"model": "powerlaw", "n": 2000, "a": 0.6}, "r": 2,
           "multipliers": multipliers, "replicates": 4, "base_seed": 5}
    (workdir / name).write_text(json.dumps(cfg))
    return name


def test_sweep_single_cell(workdir):
    cfg = sweep_config(workdir, [1.0])
    assert cli.main(["sweep", "--config", cfg, "--out-dir", "out", "--no-plot"]) == 0
    summary = json.loads((workdir / "out" / "summary.json").read_text())
    assert len(summary["cells"]) == 1
    lines = (workdir / "out" / "plot_data.txt").read_text().splitlines()
    assert len(lines) == 2 and len(lines[1].split()) == 2
    assert not (workdir / "out" / "outbreak.png").exists()


def test_sweep_transition_present(workdir):
    cfg = sweep_config(workdir, [1e-6, 1e9])
    assert cli.main(["sweep", "--config", cfg, "--out-dir", "out"]) == 0
    summary = json.loads((workdir / "out" / "summary.json").read_text())
    assert [c["outbreak_frequency"] for c in summary["cells"]] == [0, 1]
    assert summary["transition_estimate"] is not None
    assert (workdir / "out" / "outbreak.png").exists()


def test_sweep_bad_config(workdir):
    (workdir / "bad.json").write_text('{"generator": {"model": "uniform", "n": 10}, "r": 2, "multipliers": [1], "x": 1}')
    assert cli.main(["sweep", "--config", "bad.json", "--out-dir", "o"]) == 3
    (workdir / "broken.json").write_text("{")
    assert cli.main(["sweep", "--config", "broken.json", "--out-dir", "o"]) == 3


def test_threads_from_environment(workdir, monkeypatch):
    cfg = sweep_config(workdir, [0.5, 5.0])
    cli.main(["sweep", "--config", cfg, "--out-dir", "one", "--threads", "1", "--no-plot"])
    monkeypatch.setenv(cli.THREADS_ENV, "2")
    cli.main(["sweep", "--config", cfg, "--out-dir", "two", "--no-plot"])
    assert (workdir / "one" / "sweep.csv").read_bytes() == (workdir / "two" / "sweep.csv").read_bytes()


def test_replay_reproduces_outputs(workdir):
    cfg = sweep_config(workdir, [0.5, 5.0])
    cli.main(["sweep", "--config", cfg, "--out-dir", "out", "--no-plot"])
    before = {p: (workdir / "out" / p).read_bytes() for p in ("sweep.csv", "summary.json", "plot_data.txt")}
    manifest = workdir / "out" / "sweep.manifest.json"
    assert cli.main(["replay", str(manifest)]) == 0
    for p, data in before.items():
        assert (workdir / "out" / p).read_bytes() == data
    (workdir / cfg).write_text((workdir / cfg).read_text() + " ")
    assert cli.main(["replay", str(manifest)]) == 3
