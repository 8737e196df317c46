"""Differential equivalence testing for pairs of programs.

A job names two programs claimed equivalent at a shared function type,
plus the integer inputs to probe.  Each input is applied to both
programs, both are run under the same fuel bound, and the two bounded
observations are compared.

Observation is first-order: a run that ends in an int or unit value is
Terminated with that value, and anything still going (or ending at a
non-observable type) counts as RunningAfter the fuel bound.  A bounded
observer can never certify full equivalence, so the best verdict is
"consistent-equivalent".  A value mismatch or a stuck run distinguishes
the programs; a Terminated-versus-RunningAfter split only means the fuel
may be too low, so it is reported as "inconclusive", never as a
distinction.
"""

from __future__ import annotations

import json
import pathlib
from dataclasses import dataclass

from . import machine, parser, pretty
from .errors import CheckError
from .syntax import App, IntVal, Program, Tm, UnitVal, alpha_equal
from .typecheck import check_program

DEFAULT_FUEL = 100000


@dataclass(frozen=True)
class Observation:
    """What a bounded run showed: terminated with a first-order value,
    still running after the fuel bound, or stuck.

    For a program that ends in a top-level halt the stack surfaces too:
    its depth always takes part in the comparison, its contents only
    when the job asks for that.
    """

    kind: str
    value: Tm | None = None
    fuel: int = 0
    reason: str = ""
    stack: tuple | None = None

    def render(self) -> dict:
        if self.kind == "terminated":
            d = {"kind": "terminated", "value": _value_str(self.value)}
            if self.stack is not None:
                d["stack_depth"] = len(self.stack)
            return d
        if self.kind == "running":
            return {"kind": "running", "fuel": self.fuel}
        return {"kind": "stuck", "reason": self.reason}


def _value_str(v: Tm | None) -> str:
    if isinstance(v, IntVal):
        return machine._int_str(v.n)
    return pretty.tm(v) if v is not None else "?"


def observe(out: machine.Outcome, fuel: int) -> Observation:
    if (out.kind in ("f-value", "halted")
            and isinstance(out.value, (IntVal, UnitVal))):
        stack = tuple(out.stack) if out.kind == "halted" else None
        return Observation("terminated", value=out.value, stack=stack)
    if out.kind == "stuck":
        return Observation("stuck", reason=out.reason)
    return Observation("running", fuel=fuel)


def observations_agree(a: Observation, b: Observation,
                       compare_stack: bool = False) -> bool:
    if a.kind == "terminated" and b.kind == "terminated":
        if not alpha_equal(a.value, b.value):
            return False
        if a.stack is not None or b.stack is not None:
            sa = a.stack or ()
            sb = b.stack or ()
            if len(sa) != len(sb):
                return False
            if compare_stack:
                return all(alpha_equal(x, y) for x, y in zip(sa, sb))
        return True
    return a.kind == "running" and b.kind == "running"


@dataclass(frozen=True)
class EquivJob:
    left: pathlib.Path
    right: pathlib.Path
    type_text: str
    inputs: tuple
    fuel: int
    compare_stack: bool = False


def load_job(path: str | pathlib.Path) -> EquivJob:
    path = pathlib.Path(path)
    data = json.loads(path.read_text())
    inputs = data.get("inputs", [])
    if isinstance(inputs, dict):
        lo, hi = inputs["range"]
        inputs = list(range(lo, hi + 1))
    base = path.parent
    return EquivJob(
        left=base / data["left"],
        right=base / data["right"],
        type_text=data["type"],
        inputs=tuple(int(n) for n in inputs),
        fuel=int(data.get("fuel", DEFAULT_FUEL)),
        compare_stack=bool(data.get("compare_stack", False)),
    )


def _load_side(path: pathlib.Path, ann_text: str) -> Program:
    prog = parser.parse_program(path.read_text())
    tau, _ = check_program(prog)
    ann = parser.parse_type(ann_text)
    if not alpha_equal(tau, ann):
        raise CheckError("E-EXPR",
                         f"program has type {pretty.ty(tau)}, the job "
                         f"declares {pretty.ty(ann)}", str(path))
    return prog


def apply_to_input(prog: Program, n: int) -> Program:
    return Program("F", App(prog.main, (IntVal(n),)))


def run_job(job: EquivJob) -> dict:
    """Probe both programs on every input and report a verdict.

    Rows are sorted by input.  A row with a value mismatch or a stuck
    side makes the verdict "distinguished" and records the first such
    input as the witness; otherwise a Terminated/RunningAfter split makes
    it "inconclusive"; otherwise every row agrees and the verdict is
    "consistent-equivalent".
    """
    left = _load_side(job.left, job.type_text)
    right = _load_side(job.right, job.type_text)
    bare = left.entry == "T" or right.entry == "T"
    probes: tuple
    if bare:
        # Such a pair cannot be applied to inputs; run each side once and
        # compare the halting observations.
        probes = (None,)
    else:
        probes = tuple(sorted(job.inputs))
    rows = []
    witness = None
    witness_found = False
    inconclusive = False
    for n in probes:
        lp = left if n is None else apply_to_input(left, n)
        rp = right if n is None else apply_to_input(right, n)
        lo = observe(machine.run_program(lp, job.fuel), job.fuel)
        ro = observe(machine.run_program(rp, job.fuel), job.fuel)
        agree = observations_agree(lo, ro, job.compare_stack)
        if not agree:
            if "stuck" in (lo.kind, ro.kind) or lo.kind == ro.kind:
                if not witness_found:
                    witness, witness_found = n, True
            else:
                inconclusive = True
        rows.append({"input": n, "left": lo.render(), "right": ro.render(),
                     "agree": agree})
    if witness_found:
        verdict, code = "distinguished", 4
    elif inconclusive:
        verdict, code = "inconclusive", 5
    else:
        verdict, code = "consistent-equivalent", 0
    result = {"verdict": verdict, "exit_code": code, "rows": rows,
              "left": str(job.left), "right": str(job.right),
              "type": job.type_text, "fuel": job.fuel}
    if witness_found:
        result["witness"] = witness
    return result
