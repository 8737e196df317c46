"""Run every bundled program and print its outcome."""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from ftal import machine, parser, pretty, syntax

CORPUS = pathlib.Path(__file__).resolve().parents[1] / "src/ftal/corpus"


def show(out):
    if out.kind == "f-value":
        extra = f" stack={[pretty.tm(w) for w in out.stack]}" if out.stack else ""
        return f"f-value {pretty.tm(out.value)}{extra} steps={out.steps}"
    if out.kind == "halted":
        return (f"halted {pretty.tm(out.value)} "
                f"stack={[pretty.tm(w) for w in out.stack]} steps={out.steps}")
    if out.kind == "stuck":
        return f"stuck {out.reason} ({out.detail}) steps={out.steps}"
    return f"running steps={out.steps}"


for path in sorted(CORPUS.glob("*.ftal")):
    prog = parser.parse_program(path.read_text())
    out = machine.run_program(prog, 100000)
    print(f"{path.stem}: {show(out)}")

# Applied runs: f1/f2/factorials on sample inputs.
for name, inputs in [("basic_blocks_f1", [0, 5, 10]),
                     ("basic_blocks_f2", [0, 5, 10]),
                     ("factorial_f", [0, 1, 5, 8]),
                     ("factorial_t", [0, 1, 5, 8]),
                     ("identity", [3]),
                     ("succ", [3])]:
    prog = parser.parse_program((CORPUS / f"{name}.ftal").read_text())
    for n in inputs:
        applied = syntax.Program(
            "F", syntax.App(prog.main, (syntax.IntVal(n),)))
        out = machine.run_program(applied, 100000)
        print(f"{name}({n}): {show(out)}")
