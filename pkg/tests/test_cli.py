import json

import pytest

from dynroute.cli import main
from dynroute.network import parse_network


@pytest.fixture
def scenario_file(tmp_path):
    raw = {
        "network": {"generator": "manhattan", "rows": 4, "cols": 4},
        "demand": {"vehicles": 20, "rate": 1.0,
                   "od": {"start_edge": "right0D0", "end_edge": "A2left2"}},
        "penetration_rate": 0.2,
        "seed": 3,
        "max_steps": 4000,
        "method": "dynamicroutegpt",
        "params": {"reanchor_global": True},
    }
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(raw), encoding="utf-8")
    return str(path)


def test_simulate_writes_outputs(scenario_file, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["simulate", scenario_file, "--out", str(out)]) == 0
    assert (out / "metrics.csv").exists()
    assert (out / "decisions.log").exists()
    assert (out / "events.log").exists()
    assert (out / "summary.txt").exists()
    header = (out / "metrics.csv").read_text().splitlines()[0]
    assert header.startswith("id,kind,depart_time")
    assert "travel_time" in capsys.readouterr().out


def test_simulate_backend_off_flag(scenario_file, tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", scenario_file, "--backend", "off", "--out", str(out)]) == 0


def test_simulate_reproducible_bytes(scenario_file, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", scenario_file, "--seed", "9", "--out", str(out1)]) == 0
    assert main(["simulate", scenario_file, "--seed", "9", "--out", str(out2)]) == 0
    assert (out1 / "metrics.csv").read_bytes() == (out2 / "metrics.csv").read_bytes()
    assert (out1 / "decisions.log").read_bytes() == (out2 / "decisions.log").read_bytes()


def test_compare_three_methods(scenario_file, tmp_path, capsys):
    out = tmp_path / "cmp"
    rc = main([
        "compare", scenario_file,
        "--methods", "static_dijkstra,dynamic_dijkstra,dynamicroutegpt",
        "--out", str(out),
    ])
    assert rc == 0
    rows = (out / "metrics.csv").read_text().strip().splitlines()
    assert len(rows) == 4  # header + one per method
    assert rows[1].startswith("static_dijkstra,")
    table = capsys.readouterr().out
    assert "dynamicroutegpt" in table


def test_compare_unknown_method_fails(scenario_file, tmp_path, capsys):
    rc = main(["compare", scenario_file, "--methods", "warp", "--out", str(tmp_path)])
    assert rc == 2
    assert "unknown method" in capsys.readouterr().err


def test_sweep(scenario_file, tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", scenario_file, "--pr", "0.0,0.1", "--out", str(out)]) == 0
    rows = (out / "metrics.csv").read_text().strip().splitlines()
    assert len(rows) == 3
    assert rows[1].startswith("0,") or rows[1].startswith("0.0,")


def test_generate_network_file(tmp_path):
    target = tmp_path / "net.txt"
    assert main(["generate-network", "manhattan", "--rows", "3", "--cols", "3",
                 "--out", str(target)]) == 0
    net = parse_network(target.read_text())
    assert sum(1 for j in net.junctions.values() if j.signalized) == 9


def test_generate_grid4x4_stdout(capsys):
    assert main(["generate-network", "grid4x4"]) == 0
    text = capsys.readouterr().out
    net = parse_network(text)
    assert len([j for j in net.junctions.values() if j.signalized]) == 16


def test_golden_cases_pass(capsys):
    assert main(["golden-appendix-a"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 3
    assert "Error edges: A1B1" in out
    assert "Mandatory path: A2A1" in out


def test_simulate_with_scenario_using_network_file(tmp_path):
    net_file = tmp_path / "net.txt"
    assert main(["generate-network", "manhattan", "--out", str(net_file)]) == 0
    raw = {
        "network": {"file": str(net_file)},
        "demand": {"vehicles": 5, "rate": 1.0, "od": "boundary_random"},
        "seed": 2,
        "max_steps": 2000,
    }
    scen = tmp_path / "s.json"
    scen.write_text(json.dumps(raw), encoding="utf-8")
    out = tmp_path / "o"
    assert main(["simulate", str(scen), "--out", str(out)]) == 0
    assert (out / "summary.txt").exists()
