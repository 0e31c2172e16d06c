import json

import pytest

from darplpt.cli import EXIT_CAP, EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, main
from darplpt.instance import format_instance, random_instance
from darplpt.results import read_records, render_table

from conftest import line_instance


@pytest.fixture
def inst_file(tmp_path):
    p = tmp_path / "r5.txt"
    p.write_text(format_instance(random_instance(5, 21)))
    return p


def run_cli(capsys, *argv):
    try:
        code = main([str(a) for a in argv])
    except SystemExit as exc:  # argparse leaves through sys.exit
        code = exc.code
    return code, capsys.readouterr()


def test_solve_ok(capsys, inst_file):
    code, out = run_cli(capsys, "solve", "--instance", inst_file, "--L", 3, "--routes")
    assert code == EXIT_OK
    rec = json.loads(out.out.splitlines()[0])
    assert rec["status"] == "optimal" and rec["obj"] > 0
    assert any(line.startswith("vehicle") for line in out.out.splitlines())


def test_seeded_solve(capsys):
    code, out = run_cli(capsys, "solve", "--seed", 3, "--n", 4, "--L", 2, "--formulation", "pbf")
    assert code == EXIT_OK and json.loads(out.out)["formulation"] == "pbf"


def test_usage_errors(capsys, tmp_path):
    assert run_cli(capsys, "solve", "--seed", 1, "--formulation", "xyz")[0] == EXIT_USAGE
    assert run_cli(capsys, "solve", "--instance", tmp_path / "missing.txt")[0] == EXIT_USAGE
    assert run_cli(capsys, "solve")[0] == EXIT_USAGE
    assert run_cli(capsys)[0] == EXIT_USAGE
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2\n")
    assert run_cli(capsys, "solve", "--instance", bad)[0] == EXIT_USAGE


def test_infeasible_exit(capsys, tmp_path):
    inst = line_instance([(0, 0), (50, 0), (60, 0)], {1: (0, 10), 2: (0, 1000)})
    p = tmp_path / "inf.txt"
    p.write_text(format_instance(inst))
    assert run_cli(capsys, "solve", "--instance", p, "--L", 2)[0] == EXIT_INFEASIBLE


def test_path_cap_exit(capsys, inst_file):
    code, out = run_cli(capsys, "solve", "--instance", inst_file, "--L", 3, "--formulation", "pbf",
                        "--path-cap", 2)
    assert code == EXIT_CAP
    assert json.loads(out.out)["status"] == "No"


def test_benchmark_empty_list(capsys, tmp_path):
    out = tmp_path / "res.jsonl"
    code, _ = run_cli(capsys, "benchmark", "--instances", "--out", out)
    assert code == EXIT_OK and read_records(out) == []


def test_render_round_trip(capsys, tmp_path, inst_file):
    res, table = tmp_path / "res.jsonl", tmp_path / "table.txt"
    code, _ = run_cli(capsys, "benchmark", "--instances", inst_file, "--L", 3, "--out", res, "--table", table)
    assert code == EXIT_OK
    code, out = run_cli(capsys, "render", res)
    assert out.out == table.read_text() == render_table(read_records(res))


def test_fragment_dump_is_deterministic(capsys):
    args = ("fragments", "--seed", 5, "--n", 5, "--L", 3, "--fragments", "erf", "--dump-fragments")
    a = run_cli(capsys, *args)[1].out
    b = run_cli(capsys, *args)[1].out
    strip = lambda s: [l for l in s.splitlines() if not l.startswith("#")]
    assert strip(a) == strip(b) and strip(a)


def test_network_export(capsys, tmp_path):
    out = tmp_path / "net.txt"
    assert run_cli(capsys, "network", "--seed", 2, "--n", 4, "--out", out)[0] == EXIT_OK
    assert out.read_text().strip()


def test_mdarp_random(capsys):
    code, out = run_cli(capsys, "solve", "--seed", 4, "--n", 4, "--problem", "mdarp-lpt", "--formulation", "fff")
    assert code == EXIT_OK and json.loads(out.out)["problem"] == "mdarp-lpt"
