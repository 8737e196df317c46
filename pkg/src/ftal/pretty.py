"""Deterministic printer for every syntax class.

Output reparses to an alpha-equal tree. Components render multi-line;
everything else renders inline. Binops are always parenthesized and prefix
forms wrap non-atomic operands, so no precedence table is needed on the
reading side beyond the grammar itself.
"""

from __future__ import annotations

from .syntax import (
    Aop, App, Balloc, Binop, Bnz, Boundary, Box, Call, CodeBlock, CodeT,
    Component, Exists, Fold, Halt, HeapBinding, If0, ImportI, Inst, Instr,
    IntVal, ISeq, Jmp, Lam, Ld, Let, Loc, MEps, MHalt, MIdx, Mk, MOut, MReg,
    Mu, Mv, Node, Pack, Proj, Protect, Program, Ralloc, Ref, Reg, Ret,
    Salloc, SCons, Seq, SeqE, Sfree, Sld, SNil, Sst, St, StackArrow, Stk,
    SVar, Tm, TupleVal, TVar, Ty, TyInt, TyTuple, TyUnit, Unfold, UnfoldI,
    UnitVal, Unpack, Var,
    Arrow,
)


def ty(t: Ty) -> str:
    match t:
        case TVar(name):
            return name
        case TyUnit():
            return "unit"
        case TyInt():
            return "int"
        case Arrow(params, ret):
            return f"({', '.join(ty(p) for p in params)}) -> {ty(ret)}"
        case StackArrow(params, phi_in, phi_out, ret):
            return (
                f"({', '.join(ty(p) for p in params)})"
                f"[{phi(phi_in)} => {phi(phi_out)}] -> {ty(ret)}"
            )
        case TyTuple(items):
            return f"<{', '.join(ty(i) for i in items)}>"
        case Mu(var, body):
            return f"mu {var}. {ty(body)}"
        case Exists(var, body):
            return f"exists {var}. {ty(body)}"
        case Ref(psi):
            return f"ref {ty(psi)}"
        case Box(psi):
            return f"box {ty(psi)}"
        case CodeT(binders, chi, sigma, q):
            inner = ", ".join(f"{r}: {ty(x)}" for r, x in chi)
            return f"code[{', '.join(binders)}]{{{inner}; {stk(sigma)}}} {mk(q)}"
    raise TypeError(f"not a type: {t!r}")


def phi(prefix) -> str:
    out = ""
    for t in prefix:
        out += f"{ty(t)} :: "
    return out + "."


def stk(s: Stk) -> str:
    match s:
        case SNil():
            return "*"
        case SVar(name):
            return name
        case SCons(head, tail):
            return f"{ty(head)} :: {stk(tail)}"
    raise TypeError(f"not a stack: {s!r}")


def mk(q: Mk) -> str:
    match q:
        case MReg(reg):
            return reg
        case MIdx(idx):
            return str(idx)
        case MEps(name):
            return name
        case MHalt(tau, sigma):
            return f"ret({ty(tau)}, {stk(sigma)})"
        case MOut():
            return "out"
    raise TypeError(f"not a marker: {q!r}")


def omega(w: Node) -> str:
    if isinstance(w, Ty):
        return ty(w)
    if isinstance(w, Stk):
        return stk(w)
    if isinstance(w, Mk):
        return mk(w)
    raise TypeError(f"not an instantiation argument: {w!r}")


def _atom(e: Tm) -> str:
    """Render e so it can stand as a prefix-form operand (a single atom)."""
    match e:
        case Var() | IntVal() | UnitVal() | TupleVal() | Reg() | Loc() | Boundary() | Binop():
            return tm(e)
        case _:
            return f"({tm(e)})"


def _operand(e: Tm) -> str:
    """Render e as an arithmetic operand: forms whose bodies extend to
    the right (lambdas, lets, sequences) need parentheses."""
    if isinstance(e, (Lam, Let, SeqE, If0)):
        return f"({tm(e)})"
    return tm(e)


def tm(e: Tm) -> str:
    match e:
        case Var(name) | Reg(name) | Loc(name):
            return name
        case IntVal(n):
            return str(n)
        case UnitVal():
            return "()"
        case Binop(op, left, right):
            return f"({_operand(left)} {op} {_operand(right)})"
        case If0(c, t, els):
            return f"if0 {_atom(c)} {_atom(t)} {_atom(els)}"
        case Lam(params, body, stack):
            ps = ", ".join(f"{x}: {ty(t)}" for x, t in params)
            pre = "" if stack is None else f"[{phi(stack[0])} => {phi(stack[1])}] "
            return f"lam {pre}({ps}). {tm(body)}"
        case App(fn, args):
            fs = tm(fn) if isinstance(fn, (Var, App, Boundary, Inst, Loc, Reg)) else f"({tm(fn)})"
            return f"{fs}({', '.join(tm(a) for a in args)})"
        case TupleVal(items):
            if len(items) == 1:
                return f"({tm(items[0])},)"
            return f"({', '.join(tm(i) for i in items)})"
        case Proj(idx, e2):
            return f"pi.{idx} {_atom(e2)}"
        case Fold(ann, e2):
            return f"fold {ty(ann)} {_atom(e2)}"
        case Unfold(e2):
            return f"unfold {_atom(e2)}"
        case Let(var, ann, rhs, body):
            a = f" : {ty(ann)}" if ann is not None else ""
            r = tm(rhs)
            return f"let {var}{a} = {r} in {tm(body)}"
        case SeqE(first, second):
            f = tm(first)
            if isinstance(first, (Let, Lam, SeqE)):
                f = f"({f})"
            return f"{f}; {tm(second)}"
        case Boundary(ann, comp):
            return f"FT[{ty(ann)}]" + component(comp)
        case Pack(wit, val, ann):
            return f"pack <{ty(wit)}, {tm(val)}> as {ty(ann)}"
        case Inst(val, w):
            ws = [omega(w)]
            base = val
            while isinstance(base, Inst):
                ws.append(omega(base.omega))
                base = base.val
            ws.reverse()
            return f"{tm(base)}[{', '.join(ws)}]"
    raise TypeError(f"not a term: {e!r}")


def instr(i: Instr) -> str:
    match i:
        case Aop(op, rd, rs, u):
            return f"{op} {rd}, {rs}, {tm(u)}"
        case Bnz(r, u):
            return f"bnz {r}, {tm(u)}"
        case Ld(rd, rs, idx):
            return f"ld {rd}, {rs}[{idx}]"
        case St(rd, idx, rs):
            return f"st {rd}[{idx}], {rs}"
        case Ralloc(rd, n):
            return f"ralloc {rd}, {n}"
        case Balloc(rd, n):
            return f"balloc {rd}, {n}"
        case Mv(rd, u):
            return f"mv {rd}, {tm(u)}"
        case Salloc(n):
            return f"salloc {n}"
        case Sfree(n):
            return f"sfree {n}"
        case Sld(rd, idx):
            return f"sld {rd}, {idx}"
        case Sst(idx, rs):
            return f"sst {idx}, {rs}"
        case Unpack(tv, rd, u):
            return f"unpack <{tv}, {rd}> {tm(u)}"
        case UnfoldI(rd, u):
            return f"unfold {rd}, {tm(u)}"
        case Protect(p, zeta):
            return f"protect {phi(p)}, {zeta}"
        case ImportI(rd, sigma0, zeta, ann, body):
            return f"import {rd}, {stk(sigma0)} as {zeta}, {ty(ann)} TF{{ {tm(body)} }}"
    raise TypeError(f"not an instruction: {i!r}")


def iseq_lines(s: ISeq, ind: int) -> list[str]:
    pad = " " * ind
    lines = []
    while isinstance(s, Seq):
        lines.append(f"{pad}{instr(s.head)};")
        s = s.tail
    match s:
        case Jmp(u):
            lines.append(f"{pad}jmp {tm(u)}")
        case Call(u, sigma0, qret):
            lines.append(f"{pad}call {tm(u)} {{{stk(sigma0)}, {mk(qret)}}}")
        case Ret(r, r2):
            lines.append(f"{pad}ret {r} {{{r2}}}")
        case Halt(ann, sigma, reg):
            lines.append(f"{pad}halt[{ty(ann)}, {stk(sigma)}] {reg}")
        case _:
            raise TypeError(f"sequence does not end in a terminator: {s!r}")
    return lines


def binding_lines(hb: HeapBinding, ind: int) -> list[str]:
    pad = " " * ind
    v = hb.value
    if isinstance(v, CodeBlock):
        inner = ", ".join(f"{r}: {ty(t)}" for r, t in v.chi)
        head = (
            f"{pad}{hb.label} -> code[{', '.join(v.binders)}]"
            f"{{{inner}; {stk(v.sigma)}}} {mk(v.q)}."
        )
        return [head] + iseq_lines(v.body, ind + 2)
    if isinstance(v, TupleVal):
        ws = ", ".join(tm(w) for w in v.items)
        return [f"{pad}{hb.label} -> {hb.nu} <{ws}>"]
    raise TypeError(f"bad heap value: {v!r}")


def component(c: Component, ind: int = 0) -> str:
    pad = " " * ind
    lines = [f"{pad}("]
    lines += iseq_lines(c.body, ind + 2)
    if c.heap:
        lines[-1] += ","
        lines.append(f"{pad}  where")
        for k, hb in enumerate(c.heap):
            bl = binding_lines(hb, ind + 4)
            if k < len(c.heap) - 1:
                bl[-1] += ","
            lines += bl
    lines.append(f"{pad})")
    return "\n".join(lines)


def program(p: Program) -> str:
    if p.entry == "T":
        return "entry T\n" + component(p.main) + "\n"
    return "entry F\n" + tm(p.main) + "\n"


def pretty(node: Node) -> str:
    """Render any syntax node."""
    match node:
        case Program():
            return program(node)
        case Component():
            return component(node)
        case HeapBinding():
            return "\n".join(binding_lines(node, 0))
        case CodeBlock():
            return "\n".join(
                binding_lines(HeapBinding("_", "box", node), 0)
            ).split(" -> ", 1)[1]
        case ISeq():
            return "\n".join(iseq_lines(node, 0))
        case Instr():
            return instr(node)
        case Ty():
            return ty(node)
        case Stk():
            return stk(node)
        case Mk():
            return mk(node)
        case Tm():
            return tm(node)
    raise TypeError(f"pretty: unhandled node {node!r}")
