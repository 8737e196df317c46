"""Command-line interface: every subcommand, every exit code, fuel
resolution, and machine-readable output on all paths."""

import json

import pytest

from ftal import cli, machine, registry
from ftal import syntax as S


def corpus(name: str) -> str:
    return str(registry.program_path(name))


def run_cli(capsys, argv):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_check_prints_type_and_stack(capsys):
    code, out, _ = run_cli(capsys, ["check", corpus("call_to_call")])
    assert code == 0
    assert out.strip() == "int; *"


def test_check_json_payload(capsys):
    code, out, _ = run_cli(capsys, ["check", "--json", corpus("jit")])
    assert code == 0
    payload = json.loads(out)
    assert payload == {"type": "int", "stack": "*", "exit_code": 0}


def test_type_error_exits_one(capsys, tmp_path):
    bad = tmp_path / "bad.ftal"
    bad.write_text("1 + ()")
    code, out, err = run_cli(capsys, ["check", str(bad)])
    assert code == 1
    assert "type error" in err


def test_parse_error_exits_two(capsys, tmp_path):
    bad = tmp_path / "bad.ftal"
    bad.write_text("lam (")
    code, _, err = run_cli(capsys, ["check", str(bad)])
    assert code == 2
    assert "parse error" in err


def test_missing_file_exits_two(capsys, tmp_path):
    code, _, err = run_cli(capsys, ["check", str(tmp_path / "absent.ftal")])
    assert code == 2


def test_errors_are_json_when_asked(capsys, tmp_path):
    bad = tmp_path / "bad.ftal"
    bad.write_text("lam (")
    code, out, _ = run_cli(capsys, ["check", "--json", str(bad)])
    assert code == 2
    payload = json.loads(out)
    assert payload["exit_code"] == 2
    assert payload["error"]["kind"] == "parse"
    assert isinstance(payload["error"]["message"], str)


def test_nonpositive_fuel_is_a_usage_error(capsys):
    code, _, err = run_cli(capsys, ["run", "--fuel", "0",
                                    corpus("jit")])
    assert code == 2
    assert "fuel" in err


def test_run_prints_the_final_value(capsys):
    code, out, _ = run_cli(capsys, ["run", corpus("jit")])
    assert code == 0
    assert out.strip() == "2"


def test_run_reports_halting_state(capsys):
    code, out, _ = run_cli(capsys, ["run", corpus("call_to_call")])
    assert code == 0
    assert out.strip() == "halted 2; stack []"


def test_run_shows_leftover_stack(capsys):
    code, out, _ = run_cli(capsys, ["run", corpus("push7_stack_lambda")])
    assert code == 0
    assert out.strip() == "(); stack [7]"


def test_run_out_of_fuel_exits_five(capsys):
    code, out, _ = run_cli(capsys, ["run", "--fuel", "5", corpus("jit")])
    assert code == 5
    assert out.strip() == "running after 5 steps"


def test_run_json_carries_steps(capsys):
    code, out, _ = run_cli(capsys, ["run", "--json", corpus("withref")])
    payload = json.loads(out)
    assert payload["kind"] == "f-value"
    assert payload["value"] == "42"
    assert payload["steps"] == 63


def test_stuck_maps_to_exit_three():
    out = machine.Outcome("stuck", reason="bad-index", steps=4)
    assert cli._outcome_exit(out) == 3


def test_trace_streams_json_lines(capsys):
    code, out, err = run_cli(capsys, ["trace", corpus("call_to_call")])
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 13
    for i, line in enumerate(lines, start=1):
        rec = json.loads(line)
        assert rec["step"] == i
    assert "halted 2" in err


def test_trace_file_runs_are_byte_identical(capsys, tmp_path):
    paths = (tmp_path / "a.jsonl", tmp_path / "b.jsonl")
    for p in paths:
        code, out, _ = run_cli(
            capsys, ["trace", "--trace-out", str(p), corpus("jit")])
        assert code == 0
        assert "2" in out
    blobs = [p.read_bytes() for p in paths]
    assert blobs[0] == blobs[1]
    assert len(blobs[0].splitlines()) == 64


def test_eq_agreement(capsys):
    code, out, _ = run_cli(capsys, ["eq", str(registry.job_path("basic_blocks"))])
    assert code == 0
    assert "consistent-equivalent" in out


def test_eq_difference_names_the_witness(capsys):
    code, out, _ = run_cli(
        capsys, ["eq", "--json", str(registry.job_path("identity_vs_succ"))])
    assert code == 4
    payload = json.loads(out)
    assert payload["verdict"] == "distinguished"
    assert payload["witness"] == 0


def test_eq_fuel_flag_overrides_the_job(capsys):
    code, out, _ = run_cli(
        capsys, ["eq", "--fuel", "24", str(registry.job_path("factorial"))])
    assert code == 5
    assert "inconclusive" in out


def test_fmt_is_idempotent(capsys, tmp_path):
    code, first, _ = run_cli(capsys, ["fmt", corpus("call_to_call")])
    assert code == 0
    again = tmp_path / "round.ftal"
    again.write_text(first)
    code, second, _ = run_cli(capsys, ["fmt", str(again)])
    assert code == 0
    assert first == second


def test_fmt_output_reparses_to_the_same_program(capsys):
    from ftal import parser
    src = registry.program_path("factorial_t").read_text()
    code, out, _ = run_cli(capsys, ["fmt", corpus("factorial_t")])
    assert code == 0
    assert S.alpha_equal(parser.parse_program(src).main,
                         parser.parse_program(out).main)


def test_corpus_gate(capsys):
    code, out, _ = run_cli(capsys, ["corpus"])
    assert code == 0
    assert "all pass (21/21)" in out


def test_entry_flag_reads_a_bare_expression(capsys, tmp_path):
    p = tmp_path / "sum.ftal"
    p.write_text("2 + 3")
    code, out, _ = run_cli(capsys, ["run", "--entry", "f", str(p)])
    assert code == 0
    assert out.strip() == "5"


def test_environment_fuel_default(capsys, monkeypatch):
    monkeypatch.setenv("FTAL_FUEL", "5")
    code, out, _ = run_cli(capsys, ["run", corpus("jit")])
    assert code == 5
    assert "running" in out


def test_fuel_flag_beats_the_environment(capsys, monkeypatch):
    monkeypatch.setenv("FTAL_FUEL", "5")
    code, out, _ = run_cli(capsys, ["run", "--fuel", "100000",
                                    corpus("jit")])
    assert code == 0
    assert out.strip() == "2"


def test_bad_environment_fuel_is_ignored(capsys, monkeypatch):
    monkeypatch.setenv("FTAL_FUEL", "banana")
    code, out, _ = run_cli(capsys, ["run", corpus("jit")])
    assert code == 0
    assert out.strip() == "2"


def test_bad_job_file_is_a_parse_error(capsys, tmp_path):
    p = tmp_path / "job.json"
    p.write_text("{not json")
    code, _, err = run_cli(capsys, ["eq", str(p)])
    assert code == 2
