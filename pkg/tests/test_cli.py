import csv
import io
import json
import os
import subprocess
import sys

import pytest

from helpers import DATA
from slpquery.cli import main

BARBARA = str(DATA / "barbara.slp")
THREE_B = str(DATA / "three_b.anna")
AAB = str(DATA / "aab.eva")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return str(p)

    return write


def test_eval_barbara(capsys):
    code, out, err = run(capsys, "eval", BARBARA, THREE_B)
    assert code == 0
    assert sorted(out.splitlines()) == ["mark@1 mark@4 mark@8", "mark@4 mark@8 mark@10", "mark@8 mark@10 mark@14"]
    assert err == ""


def test_eval_naive_agrees(capsys):
    _, fast, _ = run(capsys, "eval", BARBARA, THREE_B)
    _, naive, _ = run(capsys, "eval", BARBARA, THREE_B, "--naive")
    assert set(fast.splitlines()) == set(naive.splitlines())


def test_eval_is_deterministic(capsys):
    outs = {run(capsys, "eval", BARBARA, THREE_B)[1] for _ in range(3)}
    assert len(outs) == 1


def test_eval_json_lines(capsys):
    _, out, _ = run(capsys, "eval", BARBARA, THREE_B, "--format", "json-lines")
    recs = [json.loads(line) for line in out.splitlines()]
    assert {tuple(map(tuple, r["pairs"])) for r in recs} == {
        (("mark", 1), ("mark", 4), ("mark", 8)),
        (("mark", 4), ("mark", 8), ("mark", 10)),
        (("mark", 8), ("mark", 10), ("mark", 14)),
    }


def test_eval_stats_on_stderr(capsys):
    _, out, err = run(capsys, "eval", BARBARA, THREE_B, "--stats")
    assert len(out.splitlines()) == 3
    assert "preprocess_ops=" in err and "max_delay_steps=" in err


def test_eval_max_outputs(capsys):
    _, out, _ = run(capsys, "eval", BARBARA, THREE_B, "--max-outputs", "1")
    assert len(out.splitlines()) == 1


def test_eval_empty_annotation(capsys, files):
    slp = files("e.slp", "slp v1\nstart S\nrule S = 'a'\n")
    anna = files("e.anna", "anna v1\nstates q0\ninit q0\nfinal q0\nread q0 'a' q0\n")
    _, out, _ = run(capsys, "eval", slp, anna)
    assert out == "()\n"


def test_eval_spanner(capsys, files):
    slp = files("aab.slp", "slp v1\nstart S\nrule S = 'a' 'a' 'b'\n")
    code, out, _ = run(capsys, "eval", slp, AAB)
    assert code == 0 and out == "x=[2,2) y=[2,4)\n"
    _, out, _ = run(capsys, "eval", slp, AAB, "--format", "json-lines")
    assert json.loads(out) == {"mapping": {"x": [2, 2], "y": [2, 4]}}
    _, naive, _ = run(capsys, "eval", slp, AAB, "--naive")
    assert naive == "x=[2,2) y=[2,4)\n"


def test_eval_va(capsys, files):
    slp = files("s.slp", "slp v1\nstart S\nrule S = 'a' 'a'\n")
    va = files("q.va", "va v1\nstates q0 q1 q2\ninit q0\nfinal q2\nopen q0 x q1\nletter q1 'a' q1\nclose q1 x q2\n")
    _, out, _ = run(capsys, "eval", slp, va)
    assert out == "x=[1,3)\n"


def test_input_errors_exit_2(capsys, files):
    bad = files("bad.slp", "slp v1\nrule A = B\nrule B = A\n")
    code, _, err = run(capsys, "eval", bad, THREE_B)
    assert code == 2 and "input error" in err
    code, _, _ = run(capsys, "validate", str(DATA / "missing.slp"))
    assert code == 2
    code, _, _ = run(capsys, "validate", files("x.txt", "hello\n"))
    assert code == 2


def test_limit_exit_3(capsys):
    code, _, err = run(capsys, "expand", BARBARA, "--limit", "3")
    assert code == 3 and "limit" in err
    code, _, _ = run(capsys, "eval", BARBARA, THREE_B, "--naive", "--limit", "3")
    assert code == 3


def test_usage_exit_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["eval"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_validate(capsys):
    assert run(capsys, "validate", BARBARA)[1].startswith("slp ok: 3 rules, size 11")
    assert run(capsys, "validate", THREE_B)[1] == "anna ok: 4 states, 13 transitions\n"
    assert run(capsys, "validate", AAB)[1].startswith("eva ok")


def test_expand(capsys):
    assert run(capsys, "expand", BARBARA)[1] == "barbarababaraba\n"
    assert run(capsys, "expand", BARBARA, "--root", "B")[1] == "bara\n"


def test_compile_spanner(capsys):
    code, out, _ = run(capsys, "compile-spanner", AAB)
    assert code == 0 and out.startswith("anna v1")
    assert "@close:x,open:x,open:y" in out
    code, _, _ = run(capsys, "compile-spanner", THREE_B)
    assert code == 2


def test_compile_spanner_succinct(capsys, files):
    va = files("q.va", "va v1\nstates q0 q1 q2\ninit q0\nfinal q2\nopen q0 x q1\nletter q1 'a' q1\nclose q1 x q2\n")
    code, out, _ = run(capsys, "compile-spanner", va)
    assert code == 0 and out.startswith("# succinct automaton")


def test_determinize(capsys, files):
    nfa = files("n.anna", "anna v1\nstates q0 q1\ninit q0\nfinal q1\nread q0 'a' q1\nread q0 'a' q0\n")
    code, out, _ = run(capsys, "determinize", nfa)
    assert code == 0 and out.startswith("anna v1")
    code, _, _ = run(capsys, "determinize", nfa, "--max-states", "1")
    assert code == 3


DB = "slp v1\nrule U = A B\nrule W = B A\nrule A = 'a'\nrule B = 'b'\ndoc u U\ndoc w W\n"


def test_edit(capsys, files):
    db = files("db.slp", DB)
    script = files("s.txt", "concat v = u w\n")
    code, out, _ = run(capsys, "edit", db, script, THREE_B, "--query", "v")
    lines = out.splitlines()
    assert code == 0
    assert lines[0].startswith("concat v: nonterminal v new_rules=1 ops=")
    assert int(lines[0].rsplit("=", 1)[1]) <= 10 * 4**3
    assert lines[1] == "edits applied: 1"
    # "abba" has only two b's, so nothing to report
    assert lines[2:] == []


def test_edit_query_results(capsys, files):
    db = files("db.slp", DB)
    script = files("s.txt", "concat v = u w\nconcat z = v u\n")
    code, out, _ = run(capsys, "edit", db, script, THREE_B, "--query", "z")
    assert code == 0
    assert out.splitlines()[-1] == "mark@2 mark@3 mark@6"


def test_edit_spanner_query(capsys, files):
    db = files("db.slp", "slp v1\nrule X = A A\nrule Y = B\nrule A = 'a'\nrule B = 'b'\ndoc x X\ndoc y Y\n")
    script = files("s.txt", "concat v = x y\n")
    code, out, _ = run(capsys, "edit", db, script, AAB, "--query", "v")
    assert code == 0 and out.splitlines()[-1] == "x=[2,2) y=[2,4)"


def test_edit_empty_script(capsys, files):
    db = files("db.slp", DB)
    script = files("s.txt", "# nothing\n")
    code, out, _ = run(capsys, "edit", db, script, THREE_B)
    assert code == 0 and out == "edits applied: 0\n"


def test_edit_extract_rejected(capsys, files):
    db = files("db.slp", DB)
    script = files("s.txt", "extract v = u 1 2\n")
    code, _, err = run(capsys, "edit", db, script, THREE_B)
    assert code == 1 and "out of scope" in err


def test_bench_header_only(capsys):
    code, out, _ = run(capsys, "bench", "--min", "5", "--max", "4")
    assert code == 0
    assert out == "size,states,doc_len,preprocess_ops,preprocess_ms,outputs,max_delay_steps\n"


def test_bench_doubling(capsys):
    _, out, _ = run(capsys, "bench", "--min", "10", "--max", "20", "--max-outputs", "1")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 11
    ops = [int(r["preprocess_ops"]) for r in rows]
    steps = {b - a for a, b in zip(ops, ops[1:])}
    assert len(steps) == 1
    assert [int(r["doc_len"]) for r in rows] == [2**n for n in range(10, 21)]


def test_bench_states(capsys):
    _, out, _ = run(capsys, "bench", "--family", "states", "--n", "10", "--state-list", "2,4,8", "--max-outputs", "1")
    rows = list(csv.DictReader(io.StringIO(out)))
    ops = [int(r["preprocess_ops"]) for r in rows]
    assert 4 <= ops[1] / ops[0] <= 10 and 4 <= ops[2] / ops[1] <= 10


def test_module_entry_point_and_numpy_backend():
    env = dict(os.environ, SLPQUERY_NUMBA="0")
    res = subprocess.run(
        [sys.executable, "-m", "slpquery", "eval", BARBARA, THREE_B, "--stats"],
        capture_output=True,
        text=True,
        env=env,
        timeout=120,
    )
    assert res.returncode == 0
    assert len(res.stdout.splitlines()) == 3
    assert "backend=numpy" in res.stderr
