import csv
import subprocess
import sys

import pytest

from rwspt.cli import parse_times, run

SMALL = """net =
  [2 . p(< "s" ; 0 >), 1 . p(< "w" ; 0 >) + 1 . p(< "w" ; 1 >), nilP] |-> << "ld", 0.5 >> ;
  [1 . p(< "w" ; 0 >), 1 . p(< "a" ; 0 >), 1 . p(< "f" ; 0 >)] |-> << "ln", 0.1 >>
m0 = 2 . p(< "s" ; 0 >)
"""


def out_args(tmp_path, *extra):
    return ["--out", str(tmp_path / "out"), *extra]


def test_reach_prints_counts_and_writes_files(tmp_path, capsys):
    res = run(["reach", "--model", "nplsys", "--params", "N=1,K=2,M=2", *out_args(tmp_path)])
    assert res.exit_code == 0
    assert capsys.readouterr().out.strip() == "states: 59 (final: 2)"
    assert sorted(p.name for p in res.artifacts) == ["edges.csv", "ordinary.dot", "states.csv"]
    assert all(p.exists() for p in res.artifacts)


def test_quotient_prints_counts(tmp_path, capsys):
    res = run(["quotient", "--params", "N=2", *out_args(tmp_path)])
    assert res.exit_code == 0
    assert capsys.readouterr().out.strip() == "states: 241 (final: 2)"
    gen = tmp_path / "out" / "generator.csv"
    assert gen in res.artifacts
    assert next(csv.reader(open(gen))) == ["source", "target", "rate"]


def test_outputs_are_not_overwritten_without_force(tmp_path, capsys):
    args = ["quotient", "--params", "N=1", *out_args(tmp_path)]
    assert run(args).exit_code == 0
    before = (tmp_path / "out" / "states.csv").read_bytes()
    assert run(args).exit_code == 2
    assert "exists" in capsys.readouterr().err
    assert run(args + ["--force", "--threads", "3"]).exit_code == 0
    assert (tmp_path / "out" / "states.csv").read_bytes() == before


def test_runs_are_byte_identical(tmp_path, monkeypatch):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["quotient", "--params", "N=2", "--out", str(a)]).exit_code == 0
    monkeypatch.setenv("RWSPT_THREADS", "4")
    assert run(["quotient", "--params", "N=2", "--out", str(b)]).exit_code == 0
    for name in ("states.csv", "edges.csv", "generator.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_verify_lump(tmp_path, capsys):
    res = run(["verify-lump", "--params", "N=1", *out_args(tmp_path)])
    assert res.exit_code == 0
    assert "0 violations" in capsys.readouterr().out


def test_ctmc_measures(tmp_path):
    res = run(["ctmc", "--params", "N=1", "--times", "0:1000:11", "--transient", *out_args(tmp_path)])
    assert res.exit_code == 0
    rows = list(csv.reader(open(res.artifacts[0])))
    assert rows[0] == ["t", "value"] and len(rows) == 12
    assert float(rows[1][1]) == 1.0
    values = [float(r[1]) for r in rows[1:]]
    assert all(b <= a for a, b in zip(values, values[1:]))
    assert res.artifacts[1].name == "transient.csv"
    res = run(["ctmc", "--measure", "throughput", "--params", "N=1", "--times", "0:100:5", *out_args(tmp_path)])
    assert res.exit_code == 0
    rows = list(csv.reader(open(res.artifacts[0])))
    assert float(rows[1][1]) == 0.0 and float(rows[-1][1]) > 0.0


def test_limit_aborts_with_exit_3(tmp_path, capsys):
    res = run(["reach", "--params", "N=2", "--limit", "50", *out_args(tmp_path)])
    assert res.exit_code == 3
    assert "partial graph has" in capsys.readouterr().err


def test_export_dot(tmp_path):
    res = run(["export-dot", "--graph", "ordinary", "--params", "N=1", *out_args(tmp_path)])
    assert res.exit_code == 0
    text = res.artifacts[0].read_text()
    assert text.startswith("digraph ts {") and text.count("[label=") > 59


def test_file_model_and_parse(tmp_path, capsys):
    f = tmp_path / "small.rwspt"
    f.write_text(SMALL)
    assert run(["parse", str(f)]).exit_code == 0
    assert "ok: 2 transitions, 5 places, with initial marking" in capsys.readouterr().out
    res = run(["reach", "--model", str(f), *out_args(tmp_path)])
    assert res.exit_code == 0
    assert capsys.readouterr().out.strip() == "states: 3 (final: 1)"
    bad = tmp_path / "bad.rwspt"
    bad.write_text(SMALL.replace("|->", "|=>", 1))
    assert run(["parse", str(bad)]).exit_code == 1
    assert f"{bad}:2:" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    assert run([]).exit_code == 2
    assert run(["reach", "--bogus"]).exit_code == 2
    assert run(["reach", "--params", "N=0", *out_args(tmp_path)]).exit_code == 2
    assert run(["reach", "--model", "nosuch", *out_args(tmp_path)]).exit_code == 2
    assert run(["reach", "--threads", "0", *out_args(tmp_path)]).exit_code == 2
    assert run(["ctmc", "--times", "5:1", *out_args(tmp_path)]).exit_code == 2
    assert run(["ctmc", "--epsilon", "2", *out_args(tmp_path)]).exit_code == 2
    err = capsys.readouterr().err
    assert err.count("rwspt: error") >= 6


def test_parse_times():
    assert list(parse_times("0:10:3")) == [0.0, 5.0, 10.0]
    g = parse_times("0:5000:200:geom")
    assert len(g) == 200 and g[0] == 0.0


@pytest.mark.slow
def test_console_entry_point(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "rwspt.cli", "quotient", "--params", "N=1", "--out", str(tmp_path)],
        capture_output=True, text=True, check=False,
    )
    assert out.returncode == 0 and out.stdout.strip() == "states: 41 (final: 2)"
