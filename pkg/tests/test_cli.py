"""
End-to-end tests of the command line: generate -> reduce -> solve ->
translate -> verify on files, plus exit codes.
"""

import json

from marketchoice.cli import main
from marketchoice.formats import load_instance, load_solution, save_instance, save_solution
from marketchoice.model import Solution, verify


def test_full_workflow(tmp_path):
    inst_path = tmp_path / "t.json"
    reduced_path = tmp_path / "t_cfl.json"
    sol_path = tmp_path / "t_cfl_sol.json"
    back_path = tmp_path / "t_sol.json"

    assert main(["generate", "--kind", "tmc", "--m", "2", "--n", "3", "--seed", "7",
                 "--out", str(inst_path)]) == 0
    assert main(["reduce", str(inst_path), "--mode", "metric", "--out", str(reduced_path)]) == 0
    cert_path = tmp_path / "t_cfl.cert.json"
    assert cert_path.exists()
    assert main(["solve", str(reduced_path), "--solver", "local-search", "--out", str(sol_path)]) == 0
    assert main(["translate", "--certificate", str(cert_path), "--reduced", str(reduced_path),
                 str(sol_path), "--out", str(back_path)]) == 0
    assert main(["verify", str(inst_path), str(back_path)]) == 0

    inst = load_instance(inst_path)
    back = load_solution(back_path)
    assert verify(inst, back).ok
    assert back.objective <= load_solution(sol_path).objective


def test_generate_is_deterministic(tmp_path):
    args = ["generate", "--kind", "cflmc", "--mode", "general", "--m", "3", "--n", "4", "--seed", "99"]
    assert main(args + ["--out", str(tmp_path / "a.json")]) == 0
    assert main(args + ["--out", str(tmp_path / "b.json")]) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_generate_set_cover_to_stdout(capsys):
    assert main(["generate", "--set-cover", "0,1;1,2;2"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["kind"] == "ufl"
    assert data["costs"] == [[0, 0, 2], [2, 0, 0], [2, 2, 0]]


def test_solve_to_stdout(tmp_path, capsys, t1):
    path = tmp_path / "t1.json"
    save_instance(t1, path)
    assert main(["solve", str(path)]) == 0
    assert json.loads(capsys.readouterr().out)["objective"] == 5


def test_verify_reports_infeasible_solution(tmp_path, t1):
    save_instance(t1, tmp_path / "t1.json")
    save_solution(Solution(flows=((0, 0, 3), (0, 1, 4))), tmp_path / "bad.json")
    assert main(["verify", str(tmp_path / "t1.json"), str(tmp_path / "bad.json"),
                 "--out", str(tmp_path / "report.json")]) == 1
    report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert report["ok"] is False


def test_errors_exit_with_two(tmp_path, single_cfl):
    broken = tmp_path / "broken.json"
    broken.write_text('{"kind": "tmc"}', encoding="utf-8")
    assert main(["solve", str(broken)]) == 2
    assert main(["solve", str(tmp_path / "missing.json")]) == 2
    save_instance(single_cfl, tmp_path / "cfl.json")
    assert main(["solve", str(tmp_path / "cfl.json"), "--solver", "greedy"]) == 2
    assert main(["generate", "--m", "300"]) == 2


def test_bench_command(tmp_path):
    config = {"name": "cli", "suites": [{"name": "s", "count": 2,
                                         "instance": {"kind": "tmc", "m": 2, "n": 2, "seed": 1}}]}
    config_path = tmp_path / "bench.json"
    config_path.write_text(json.dumps(config), encoding="utf-8")
    assert main(["bench", str(config_path), "--out", str(tmp_path / "report"), "--quiet"]) == 0
    assert (tmp_path / "report" / "cli.jsonl").exists()


def test_reduce_and_solve_are_deterministic(tmp_path):
    inst_path = tmp_path / "t.json"
    assert main(["generate", "--kind", "tmc", "--mode", "general", "--m", "3", "--n", "3",
                 "--seed", "7", "--out", str(inst_path)]) == 0
    for run in ("a", "b"):
        reduced = tmp_path / run / "r.json"
        assert main(["reduce", str(inst_path), "--mode", "general", "--out", str(reduced)]) == 0
        assert main(["solve", str(reduced), "--solver", "local-search",
                     "--out", str(tmp_path / run / "s.json")]) == 0
    for name in ("r.json", "r.cert.json", "s.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_translate_with_foreign_certificate_exits_with_two(tmp_path, t1):
    save_instance(t1, tmp_path / "t1.json")
    assert main(["reduce", str(tmp_path / "t1.json"), "--out", str(tmp_path / "t1_cfl.json")]) == 0
    assert main(["generate", "--kind", "tmc", "--m", "2", "--n", "3", "--seed", "5",
                 "--out", str(tmp_path / "big.json")]) == 0
    assert main(["reduce", str(tmp_path / "big.json"), "--out", str(tmp_path / "big_cfl.json")]) == 0
    assert main(["solve", str(tmp_path / "big_cfl.json"), "--out", str(tmp_path / "big_sol.json")]) == 0
    assert main(["translate", "--certificate", str(tmp_path / "t1_cfl.cert.json"),
                 "--reduced", str(tmp_path / "big_cfl.json"), str(tmp_path / "big_sol.json")]) == 2
