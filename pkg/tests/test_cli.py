import json

from fogsim.cli import main


def scenario_doc():
    return {"topology": {"n": 5, "max_degree": 3},
            "workload": {"catalog": {"size": 5},
                         "phases": [{"start": 0, "base_rate": 2.0}]},
            "horizon": 40,
            "seed": 2}


def write_scenario(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario_doc()))
    return path


def test_run_timed(tmp_path, capsys):
    scen = write_scenario(tmp_path)
    out = tmp_path / "out"
    rc = main(["run", str(scen), "--out", str(out)])
    assert rc == 0
    assert (out / "runs.csv").exists()
    assert (out / "events.jsonl").exists()
    assert "mean latency" in capsys.readouterr().out


def test_run_frozen(tmp_path, capsys):
    scen = write_scenario(tmp_path)
    out = tmp_path / "out"
    rc = main(["run", str(scen), "--frozen", "--out", str(out), "--seed", "9"])
    assert rc == 0
    assert "nash=ok" in capsys.readouterr().out


def test_sweep_and_figures(tmp_path, capsys):
    sweep_doc = {"template": scenario_doc(), "axis": "node_count",
                 "values": [4, 5], "controllers": ["agentic"], "runs": 10,
                 "frozen": True}
    sweep_path = tmp_path / "sweep.json"
    sweep_path.write_text(json.dumps(sweep_doc))
    results = tmp_path / "results" / "convergence_vs_size"
    assert main(["sweep", str(sweep_path), "--out", str(results)]) == 0
    figures = tmp_path / "figures"
    rc = main(["figures", str(tmp_path / "results"), "--out", str(figures)])
    assert rc == 0
    assert (figures / "convergence_vs_size_agg.csv").exists()


def test_figures_empty_dir_fails(tmp_path):
    (tmp_path / "results").mkdir()
    assert main(["figures", str(tmp_path / "results"),
                 "--out", str(tmp_path / "figs")]) == 1


def test_missing_scenario_exit_code(tmp_path):
    assert main(["run", str(tmp_path / "nope.json")]) == 2


def test_invalid_scenario_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"controller": "psychic"}))
    assert main(["run", str(bad)]) == 2
