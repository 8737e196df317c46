"""Type checking for programs, components, instruction sequences, and
expressions.

Context shapes used throughout:

- psi: dict mapping heap labels to (nu, type) where nu is "box" or "ref"
  and the type is a TyTuple or CodeT.
- delta: tuple of (kind, name) pairs for the type, stack, and marker
  variables in scope.
- gamma: dict mapping term variables to types.
- chi: dict mapping registers to types.
- sigma: a stack type.
- q: a return marker, or an InferCell when the marker is being inferred.
"""

from __future__ import annotations

from .boundary import translate_type
from .errors import CheckError, KindError
from . import pretty
from .syntax import (
    KIND_MARKER,
    KIND_STACK,
    KIND_TYPE,
    Aop,
    App,
    Arrow,
    Balloc,
    Binop,
    Bnz,
    Boundary,
    Box,
    Call,
    CodeBlock,
    CodeT,
    Component,
    Exists,
    Fold,
    Halt,
    If0,
    ImportI,
    Inst,
    IntVal,
    ISeq,
    Jmp,
    Lam,
    Ld,
    Let,
    Loc,
    MEps,
    MHalt,
    MIdx,
    Mk,
    MOut,
    MReg,
    Mu,
    Mv,
    Node,
    Pack,
    Program,
    Proj,
    Protect,
    Ralloc,
    Ref,
    Reg,
    Ret,
    SeqE,
    Salloc,
    SCons,
    Seq,
    Sfree,
    Sld,
    SNil,
    Sst,
    St,
    StackArrow,
    Stk,
    SVar,
    Tm,
    TupleVal,
    TVar,
    Ty,
    TyInt,
    TyTuple,
    TyUnit,
    UnitVal,
    Unfold,
    UnfoldI,
    Unpack,
    Var,
    alpha_equal,
    free_names,
    fresh_name,
    kind_of_name,
    stack_of,
    stack_parts,
    substitute,
)

Delta = tuple


class InferCell:
    """Placeholder for a return marker checked at a halting position.

    Boundaries preset tau to the translated annotation; bare components
    leave it None.  The first instruction that pins the marker down stores
    the concrete halting marker in resolved, and later instructions must
    agree with it.
    """

    __slots__ = ("tau", "resolved")

    def __init__(self, tau: Ty | None = None):
        self.tau = tau
        self.resolved: MHalt | None = None


def marker_view(q):
    """The concrete marker carried by q, or the unresolved cell itself."""
    if isinstance(q, InferCell):
        return q.resolved if q.resolved is not None else q
    return q


def _is_reg_marker(qv, reg: str) -> bool:
    return isinstance(qv, MReg) and qv.reg == reg


def _err(code: str, message: str, where: str = "") -> CheckError:
    return CheckError(code, message, where)


def _kind_of_node(n: Node) -> str:
    if isinstance(n, Ty):
        return KIND_TYPE
    if isinstance(n, Stk):
        return KIND_STACK
    if isinstance(n, Mk):
        return KIND_MARKER
    raise ValueError(f"not a type-level node: {n!r}")


def _unroll(t: Mu) -> Ty:
    return substitute(t.body, {(KIND_TYPE, t.var): t})


# ---------------------------------------------------------------------------
# Well-formedness


def check_code_binders(binders) -> None:
    """Reject binder lists with repeats or more than one stack or marker
    variable; raises KindError."""
    seen = set()
    stacks = 0
    markers = 0
    for b in binders:
        if b in seen:
            raise KindError(f"repeated binder {b}")
        seen.add(b)
        k = kind_of_name(b)
        if k == KIND_STACK:
            stacks += 1
        elif k == KIND_MARKER:
            markers += 1
    if stacks > 1:
        raise KindError("code type abstracts more than one stack variable")
    if markers > 1:
        raise KindError("code type abstracts more than one marker variable")


def wf_type(delta: Delta, t: Ty) -> None:
    if isinstance(t, (TyUnit, TyInt)):
        return
    if isinstance(t, TVar):
        if (KIND_TYPE, t.name) not in delta:
            raise KindError(f"type variable {t.name} is not in scope")
        return
    if isinstance(t, Arrow):
        for p in t.params:
            wf_type(delta, p)
        wf_type(delta, t.ret)
        return
    if isinstance(t, StackArrow):
        for p in t.params:
            wf_type(delta, p)
        for p in t.phi_in:
            wf_type(delta, p)
        for p in t.phi_out:
            wf_type(delta, p)
        wf_type(delta, t.ret)
        return
    if isinstance(t, TyTuple):
        for item in t.items:
            wf_type(delta, item)
        return
    if isinstance(t, (Mu, Exists)):
        if kind_of_name(t.var) != KIND_TYPE:
            raise KindError(f"{t.var} cannot bind a type")
        wf_type(delta + ((KIND_TYPE, t.var),), t.body)
        return
    if isinstance(t, Ref):
        if not isinstance(t.psi, TyTuple):
            raise KindError("mutable cells hold tuples only")
        wf_type(delta, t.psi)
        return
    if isinstance(t, Box):
        if not isinstance(t.psi, (TyTuple, CodeT)):
            raise KindError("boxed values are tuples or code")
        wf_type(delta, t.psi)
        return
    if isinstance(t, CodeT):
        check_code_binders(t.binders)
        inner = delta + tuple((kind_of_name(b), b) for b in t.binders)
        chi = dict(t.chi)
        for _, rt in t.chi:
            wf_type(inner, rt)
        wf_stack(inner, t.sigma)
        wf_marker(inner, t.q)
        if isinstance(t.q, MOut):
            raise KindError("out marker inside a code type")
        if isinstance(t.q, (MReg, MIdx)):
            if continuation_of(t.q, chi, t.sigma) is None:
                raise KindError(
                    f"marker {pretty.mk(t.q)} does not point at a continuation")
        return
    raise KindError(f"not a type: {t!r}")


def wf_stack(delta: Delta, s: Stk) -> None:
    while isinstance(s, SCons):
        wf_type(delta, s.head)
        s = s.tail
    if isinstance(s, SVar):
        if (KIND_STACK, s.name) not in delta:
            raise KindError(f"stack variable {s.name} is not in scope")
    elif not isinstance(s, SNil):
        raise KindError(f"not a stack: {s!r}")


def wf_marker(delta: Delta, m: Mk) -> None:
    if isinstance(m, (MReg, MIdx, MOut)):
        return
    if isinstance(m, MEps):
        if (KIND_MARKER, m.name) not in delta:
            raise KindError(f"marker variable {m.name} is not in scope")
        return
    if isinstance(m, MHalt):
        wf_type(delta, m.tau)
        wf_stack(delta, m.sigma)
        return
    raise KindError(f"not a marker: {m!r}")


# ---------------------------------------------------------------------------
# Markers


def continuation_of(q, chi: dict, sigma: Stk) -> CodeT | None:
    """The code type a register or index marker points at, unboxed.

    Defined when the marked slot holds box code with no binders and a
    single register in its precondition; None otherwise.
    """
    if isinstance(q, MReg):
        t = chi.get(q.reg)
    elif isinstance(q, MIdx):
        prefix, _ = stack_parts(sigma)
        if q.idx >= len(prefix):
            return None
        t = prefix[q.idx]
    else:
        return None
    if isinstance(t, Box) and isinstance(t.psi, CodeT):
        c = t.psi
        if not c.binders and len(c.chi) == 1:
            return c
    return None


def typeof_marker(q, chi: dict, sigma: Stk):
    """The (tau, sigma') a return marker promises, or None."""
    qv = marker_view(q)
    if isinstance(qv, MHalt):
        return qv.tau, qv.sigma
    c = continuation_of(qv, chi, sigma)
    if c is None:
        return None
    return c.chi[0][1], c.sigma


def wf_return_marker(delta: Delta, chi: dict, sigma: Stk, q) -> None:
    """Check that q is usable at an instruction; raises E-WFRET."""
    qv = marker_view(q)
    if isinstance(qv, InferCell):
        return
    if isinstance(qv, MHalt):
        try:
            wf_type(delta, qv.tau)
            wf_stack(delta, qv.sigma)
        except KindError as e:
            raise _err("E-WFRET", f"halting marker is ill-formed: {e.message}")
        return
    if isinstance(qv, MOut):
        raise _err("E-WFRET", "out marker at an instruction")
    if isinstance(qv, MEps):
        raise _err("E-WFRET",
                   f"marker variable {qv.name} reaches an instruction")
    if isinstance(qv, (MReg, MIdx)):
        if continuation_of(qv, chi, sigma) is None:
            raise _err("E-WFRET",
                       f"marker {pretty.mk(qv)} does not point at a continuation")
        return
    raise _err("E-WFRET", f"not a marker: {qv!r}")


def regfile_subtype(chi: dict, req: dict) -> bool:
    """Width subtyping: chi provides every register req demands, at equal
    types."""
    for r, t in req.items():
        have = chi.get(r)
        if have is None or not alpha_equal(have, t):
            return False
    return True


# ---------------------------------------------------------------------------
# Word-level values


def check_small_value(psi: dict, delta: Delta, chi: dict, u: Tm) -> Ty:
    if isinstance(u, Reg):
        t = chi.get(u.name)
        if t is None:
            raise _err("E-VAL", f"register {u.name} holds no value")
        return t
    if isinstance(u, IntVal):
        return TyInt()
    if isinstance(u, UnitVal):
        return TyUnit()
    if isinstance(u, Loc):
        ent = psi.get(u.name)
        if ent is None:
            raise _err("E-VAL", f"label {u.name} is not bound in the heap")
        nu, t = ent
        return Ref(t) if nu == "ref" else Box(t)
    if isinstance(u, Pack):
        if not isinstance(u.ann, Exists):
            raise _err("E-VAL", "pack annotation must be existential")
        wf_type(delta, u.ann)
        wf_type(delta, u.wit)
        expected = substitute(u.ann.body, {(KIND_TYPE, u.ann.var): u.wit})
        tv = check_small_value(psi, delta, chi, u.val)
        if not alpha_equal(tv, expected):
            raise _err("E-VAL", "packed value does not match its annotation")
        return u.ann
    if isinstance(u, Fold):
        if not isinstance(u.ann, Mu):
            raise _err("E-VAL", "fold annotation must be recursive")
        wf_type(delta, u.ann)
        tv = check_small_value(psi, delta, chi, u.e)
        if not alpha_equal(tv, _unroll(u.ann)):
            raise _err("E-VAL", "folded value does not match its annotation")
        return u.ann
    if isinstance(u, Inst):
        t = check_small_value(psi, delta, chi, u.val)
        if not (isinstance(t, Box) and isinstance(t.psi, CodeT)
                and t.psi.binders):
            raise _err("E-VAL", "instantiation of a non-polymorphic value")
        code = t.psi
        head = code.binders[0]
        hk = kind_of_name(head)
        if _kind_of_node(u.omega) != hk:
            raise _err("E-VAL",
                       f"instantiation kind mismatch for binder {head}")
        if hk == KIND_TYPE:
            wf_type(delta, u.omega)
        elif hk == KIND_STACK:
            wf_stack(delta, u.omega)
        else:
            wf_marker(delta, u.omega)
        rest = CodeT(tuple(code.binders[1:]), code.chi, code.sigma, code.q)
        inst = substitute(rest, {(hk, head): u.omega})
        out = Box(inst)
        wf_type(delta, out)
        return out
    raise _err("E-VAL", "not a word-level value")


# ---------------------------------------------------------------------------
# Instruction sequences


def _prefix(sigma: Stk, need: int, what: str):
    prefix, tail = stack_parts(sigma)
    if len(prefix) < need:
        raise _err("E-SEQ",
                   f"{what} needs {need} visible slots, "
                   f"the stack shows {len(prefix)}")
    return prefix, tail


def _shift_pop(q, n: int, what: str):
    qv = marker_view(q)
    if isinstance(qv, MIdx):
        if qv.idx < n:
            raise _err("E-SEQ", f"{what} would remove the marker slot")
        return MIdx(qv.idx - n)
    return q


def _shift_push(q, n: int):
    qv = marker_view(q)
    if isinstance(qv, MIdx):
        return MIdx(qv.idx + n)
    return q


def _require_int(t: Ty, what: str) -> None:
    if not isinstance(t, TyInt):
        raise _err("E-SEQ", f"{what} must be an integer, got {pretty.ty(t)}")


def _match_target_marker(q, q_target: Mk, what: str):
    """Unify the current marker with a jump or branch target's marker."""
    if isinstance(q, InferCell) and q.resolved is None:
        if isinstance(q_target, MHalt):
            if q.tau is not None and not alpha_equal(q.tau, q_target.tau):
                raise _err("E-SEQ",
                           f"{what} halts at {pretty.ty(q_target.tau)}, "
                           f"expected {pretty.ty(q.tau)}")
            q.resolved = q_target
            return
        raise _err("E-SEQ",
                   f"{what} marker {pretty.mk(q_target)} cannot be adopted "
                   "at a halting position")
    qv = marker_view(q)
    if not alpha_equal(qv, q_target):
        raise _err("E-SEQ",
                   f"{what} expects marker {pretty.mk(q_target)}, "
                   f"current is {pretty.mk(qv)}")


def _code_target(psi, delta, chi, u, what: str) -> CodeT:
    tu = check_small_value(psi, delta, chi, u)
    if not (isinstance(tu, Box) and isinstance(tu.psi, CodeT)):
        raise _err("E-SEQ", f"{what} is not code")
    c = tu.psi
    if c.binders:
        raise _err("E-SEQ", f"{what} is not fully instantiated")
    return c


def _smallest_peel(sigma: Stk, sigma0: Stk, what: str) -> int:
    """The length of the shortest prefix whose removal leaves sigma0."""
    prefix, tail = stack_parts(sigma)
    for peel in range(len(prefix) + 1):
        if alpha_equal(stack_of(prefix[peel:], tail), sigma0):
            return peel
    raise _err("E-SEQ", f"the stack does not end in the {what} tail "
                        f"{pretty.stk(sigma0)}")


def check_instruction_sequence(psi: dict, delta: Delta, gamma: dict,
                               chi: dict, sigma: Stk, q, iseq: ISeq,
                               aliases: list | None = None) -> None:
    """Walk a sequence, threading chi, sigma, and the marker.

    aliases collects (zeta, hidden stack) pairs introduced by protect, in
    order, for the caller to substitute away at the component boundary.
    Mutates the InferCell when q is one and the sequence pins it down.
    """
    chi = dict(chi)
    if aliases is None:
        aliases = []

    while True:
        wf_return_marker(delta, chi, sigma, q)
        if not isinstance(iseq, Seq):
            break
        ins = iseq.head
        iseq = iseq.tail
        qv = marker_view(q)

        if isinstance(ins, Aop):
            if _is_reg_marker(qv, ins.rd):
                raise _err("E-SEQ",
                           "arithmetic would overwrite the marker register")
            if _is_reg_marker(qv, ins.rs):
                raise _err("E-SEQ", "marker register used as an operand")
            if isinstance(ins.u, Reg) and _is_reg_marker(qv, ins.u.name):
                raise _err("E-SEQ", "marker register used as an operand")
            _require_int(check_small_value(psi, delta, chi, Reg(ins.rs)),
                         "arithmetic operand")
            _require_int(check_small_value(psi, delta, chi, ins.u),
                         "arithmetic operand")
            chi[ins.rd] = TyInt()

        elif isinstance(ins, Bnz):
            _require_int(check_small_value(psi, delta, chi, Reg(ins.r)),
                         "branch condition")
            c = _code_target(psi, delta, chi, ins.u, "branch target")
            if not alpha_equal(c.sigma, sigma):
                raise _err("E-SEQ",
                           f"branch target expects stack {pretty.stk(c.sigma)}, "
                           f"current is {pretty.stk(sigma)}")
            _match_target_marker(q, c.q, "branch target")
            if not regfile_subtype(chi, dict(c.chi)):
                raise _err("E-SEQ",
                           "registers do not satisfy the branch target")

        elif isinstance(ins, Ld):
            if _is_reg_marker(qv, ins.rd):
                raise _err("E-SEQ", "load would overwrite the marker register")
            t = check_small_value(psi, delta, chi, Reg(ins.rs))
            if not (isinstance(t, (Ref, Box)) and isinstance(t.psi, TyTuple)):
                raise _err("E-SEQ", "load from a non-tuple")
            items = t.psi.items
            if ins.idx >= len(items):
                raise _err("E-SEQ",
                           f"load index {ins.idx} outside a "
                           f"{len(items)}-tuple")
            chi[ins.rd] = items[ins.idx]

        elif isinstance(ins, St):
            if _is_reg_marker(qv, ins.rs):
                raise _err("E-SEQ", "marker register stored to the heap")
            t = check_small_value(psi, delta, chi, Reg(ins.rd))
            if isinstance(t, Box):
                raise _err("E-SEQ", "store into an immutable tuple")
            if not (isinstance(t, Ref) and isinstance(t.psi, TyTuple)):
                raise _err("E-SEQ", "store into a non-reference")
            items = t.psi.items
            if ins.idx >= len(items):
                raise _err("E-SEQ",
                           f"store index {ins.idx} outside a "
                           f"{len(items)}-tuple")
            ts = check_small_value(psi, delta, chi, Reg(ins.rs))
            if not alpha_equal(ts, items[ins.idx]):
                raise _err("E-SEQ",
                           f"store of {pretty.ty(ts)} into a slot of "
                           f"{pretty.ty(items[ins.idx])}")

        elif isinstance(ins, (Ralloc, Balloc)):
            if _is_reg_marker(qv, ins.rd):
                raise _err("E-SEQ",
                           "allocation would overwrite the marker register")
            if isinstance(qv, MIdx) and qv.idx < ins.n:
                raise _err("E-SEQ", "allocation would consume the marker slot")
            prefix, tail = _prefix(sigma, ins.n, "allocation")
            tup = TyTuple(tuple(prefix[:ins.n]))
            chi[ins.rd] = Ref(tup) if isinstance(ins, Ralloc) else Box(tup)
            sigma = stack_of(prefix[ins.n:], tail)
            q = _shift_pop(q, ins.n, "allocation")

        elif isinstance(ins, Mv):
            if (isinstance(ins.u, Reg) and _is_reg_marker(qv, ins.u.name)):
                t = chi.get(ins.u.name)
                if t is None:
                    raise _err("E-VAL",
                               f"register {ins.u.name} holds no value")
                chi[ins.rd] = t
                q = MReg(ins.rd)
            else:
                if _is_reg_marker(qv, ins.rd):
                    raise _err("E-SEQ",
                               "move would overwrite the marker register")
                chi[ins.rd] = check_small_value(psi, delta, chi, ins.u)

        elif isinstance(ins, Salloc):
            sigma = stack_of([TyUnit()] * ins.n, sigma)
            q = _shift_push(q, ins.n)

        elif isinstance(ins, Sfree):
            prefix, tail = _prefix(sigma, ins.n, "sfree")
            q = _shift_pop(q, ins.n, "sfree")
            sigma = stack_of(prefix[ins.n:], tail)

        elif isinstance(ins, Sld):
            prefix, _ = _prefix(sigma, ins.idx + 1, "stack load")
            if isinstance(qv, MIdx) and qv.idx == ins.idx:
                chi[ins.rd] = prefix[ins.idx]
                q = MReg(ins.rd)
            else:
                if _is_reg_marker(qv, ins.rd):
                    raise _err("E-SEQ",
                               "stack load would overwrite the marker register")
                chi[ins.rd] = prefix[ins.idx]

        elif isinstance(ins, Sst):
            prefix, tail = _prefix(sigma, ins.idx + 1, "stack store")
            t = check_small_value(psi, delta, chi, Reg(ins.rs))
            if _is_reg_marker(qv, ins.rs):
                prefix[ins.idx] = t
                sigma = stack_of(prefix, tail)
                q = MIdx(ins.idx)
            else:
                if isinstance(qv, MIdx) and qv.idx == ins.idx:
                    raise _err("E-SEQ",
                               "stack store would overwrite the marker slot")
                prefix[ins.idx] = t
                sigma = stack_of(prefix, tail)

        elif isinstance(ins, Unpack):
            if _is_reg_marker(qv, ins.rd):
                raise _err("E-SEQ",
                           "unpack would overwrite the marker register")
            t = check_small_value(psi, delta, chi, ins.u)
            if not isinstance(t, Exists):
                raise _err("E-SEQ", "unpack of a non-package")
            name = ins.tv
            if (KIND_TYPE, name) in delta:
                fresh = fresh_name(name, {n for _, n in delta})
                iseq = substitute(iseq, {(KIND_TYPE, name): TVar(fresh)})
                name = fresh
            delta = delta + ((KIND_TYPE, name),)
            chi[ins.rd] = substitute(t.body, {(KIND_TYPE, t.var): TVar(name)})

        elif isinstance(ins, UnfoldI):
            if _is_reg_marker(qv, ins.rd):
                raise _err("E-SEQ",
                           "unfold would overwrite the marker register")
            t = check_small_value(psi, delta, chi, ins.u)
            if not isinstance(t, Mu):
                raise _err("E-SEQ", "unfold of a non-recursive value")
            chi[ins.rd] = _unroll(t)

        elif isinstance(ins, Protect):
            for pt in ins.phi:
                wf_type(delta, pt)
            k = len(ins.phi)
            prefix, tail = _prefix(sigma, k, "protect")
            for i in range(k):
                if not alpha_equal(prefix[i], ins.phi[i]):
                    raise _err("E-SEQ",
                               f"protect keeps {pretty.ty(ins.phi[i])} at "
                               f"slot {i}, the stack has "
                               f"{pretty.ty(prefix[i])}")
            if isinstance(qv, MIdx) and qv.idx >= k:
                raise _err("E-WFRET", "protect would hide the marker slot")
            hidden = stack_of(prefix[k:], tail)
            name = ins.zeta
            if (KIND_STACK, name) in delta:
                fresh = fresh_name(name, {n for _, n in delta})
                iseq = substitute(iseq, {(KIND_STACK, name): SVar(fresh)})
                name = fresh
            delta = delta + ((KIND_STACK, name),)
            sigma = stack_of(list(ins.phi), SVar(name))
            aliases.append((name, hidden))

        elif isinstance(ins, ImportI):
            wf_stack(delta, ins.sigma0)
            peel = _smallest_peel(sigma, ins.sigma0, "import")
            if isinstance(qv, MReg):
                raise _err("E-SEQ", "import with a register marker")
            if isinstance(qv, MIdx) and qv.idx < peel:
                raise _err("E-SEQ", "import would expose the marker slot")
            prefix, tail = stack_parts(sigma)
            name = ins.zeta
            body = ins.body
            if (KIND_STACK, name) in delta:
                fresh = fresh_name(name, {n for _, n in delta})
                body = substitute(body, {(KIND_STACK, name): SVar(fresh)})
                name = fresh
            inner_sigma = stack_of(prefix[:peel], SVar(name))
            te, se = check_expression(psi, delta + ((KIND_STACK, name),),
                                      gamma, inner_sigma, body)
            translate_type(ins.ann)
            if not alpha_equal(te, ins.ann):
                raise _err("E-SEQ",
                           f"import body has type {pretty.ty(te)}, the "
                           f"annotation says {pretty.ty(ins.ann)}")
            out_prefix, out_tail = stack_parts(se)
            if not (isinstance(out_tail, SVar) and out_tail.name == name):
                raise _err("E-SEQ",
                           "import body does not preserve the protected stack")
            for pt in out_prefix:
                if (KIND_STACK, name) in free_names(pt):
                    raise _err("E-SEQ",
                               "protected stack variable escapes the import")
            grown = len(out_prefix)
            chi[ins.rd] = translate_type(ins.ann)
            sigma = stack_of(out_prefix, ins.sigma0)
            if isinstance(qv, MIdx):
                q = MIdx(qv.idx + grown - peel)

        else:
            raise _err("E-SEQ", f"unknown instruction {ins!r}")

    # Terminators.
    qv = marker_view(q)
    if isinstance(iseq, Jmp):
        c = _code_target(psi, delta, chi, iseq.u, "jump target")
        if not alpha_equal(c.sigma, sigma):
            raise _err("E-SEQ",
                       f"jump target expects stack {pretty.stk(c.sigma)}, "
                       f"current is {pretty.stk(sigma)}")
        _match_target_marker(q, c.q, "jump target")
        if not regfile_subtype(chi, dict(c.chi)):
            raise _err("E-SEQ", "registers do not satisfy the jump target")
        return

    if isinstance(iseq, Call):
        _check_call(psi, delta, chi, sigma, q, iseq)
        return

    if isinstance(iseq, Ret):
        if not _is_reg_marker(qv, iseq.r):
            shown = ("unresolved" if isinstance(qv, InferCell)
                     else pretty.mk(qv))
            raise _err("E-SEQ",
                       f"the return marker must be in a register ({iseq.r}) "
                       f"for ret, current is {shown}")
        c = continuation_of(qv, chi, sigma)
        if c is None:
            raise _err("E-SEQ",
                       f"register {iseq.r} does not hold a continuation")
        if not alpha_equal(c.sigma, sigma):
            raise _err("E-SEQ",
                       f"continuation expects stack {pretty.stk(c.sigma)}, "
                       f"current is {pretty.stk(sigma)}")
        res_reg, res_ty = c.chi[0]
        if res_reg != iseq.r2:
            raise _err("E-SEQ",
                       f"continuation reads {res_reg}, not {iseq.r2}")
        tv = check_small_value(psi, delta, chi, Reg(iseq.r2))
        if not alpha_equal(tv, res_ty):
            raise _err("E-SEQ",
                       f"result register holds {pretty.ty(tv)}, the "
                       f"continuation wants {pretty.ty(res_ty)}")
        return

    if isinstance(iseq, Halt):
        try:
            wf_type(delta, iseq.ann)
            wf_stack(delta, iseq.sigma)
        except KindError as e:
            raise _err("E-SEQ", f"halt annotation is ill-formed: {e.message}")
        if not alpha_equal(iseq.sigma, sigma):
            raise _err("E-SEQ",
                       f"halt annotation stack {pretty.stk(iseq.sigma)} does "
                       f"not match the current stack {pretty.stk(sigma)}")
        tv = check_small_value(psi, delta, chi, Reg(iseq.reg))
        if not alpha_equal(tv, iseq.ann):
            raise _err("E-SEQ",
                       f"halt register holds {pretty.ty(tv)}, the annotation "
                       f"says {pretty.ty(iseq.ann)}")
        if isinstance(q, InferCell) and q.resolved is None:
            if q.tau is not None and not alpha_equal(q.tau, iseq.ann):
                raise _err("E-SEQ",
                           f"halt at {pretty.ty(iseq.ann)}, the boundary "
                           f"expects {pretty.ty(q.tau)}")
            q.resolved = MHalt(iseq.ann, iseq.sigma)
            return
        if isinstance(qv, MHalt):
            if not alpha_equal(qv.tau, iseq.ann) or \
                    not alpha_equal(qv.sigma, iseq.sigma):
                raise _err("E-SEQ",
                           "halt does not match the halting marker")
            return
        raise _err("E-SEQ", "halt without a halting marker")

    raise _err("E-SEQ", f"unknown terminator {iseq!r}")


def _check_call(psi: dict, delta: Delta, chi: dict, sigma: Stk, q,
                call: Call) -> None:
    wf_stack(delta, call.sigma0)
    qv = marker_view(q)
    tu = check_small_value(psi, delta, chi, call.u)
    if not (isinstance(tu, Box) and isinstance(tu.psi, CodeT)):
        raise _err("E-SEQ", "call target is not code")
    code = tu.psi
    if len(code.binders) != 2 or \
            kind_of_name(code.binders[0]) != KIND_STACK or \
            kind_of_name(code.binders[1]) != KIND_MARKER:
        raise _err("E-SEQ",
                   "call target must abstract a stack and a marker")
    z_h, eps_h = code.binders
    chi_h = dict(code.chi)

    peel = _smallest_peel(sigma, call.sigma0, "call")
    prefix, _ = stack_parts(sigma)
    ph, ptail = stack_parts(code.sigma)
    if not (isinstance(ptail, SVar) and ptail.name == z_h):
        raise _err("E-SEQ",
                   "callee stack must end in its own stack variable")
    if len(ph) != peel:
        raise _err("E-SEQ",
                   f"callee expects {len(ph)} transferred slots, the call "
                   f"hands over {peel}")
    for i in range(peel):
        if not alpha_equal(ph[i], prefix[i]):
            raise _err("E-SEQ",
                       f"transferred slot {i} is {pretty.ty(prefix[i])}, "
                       f"the callee expects {pretty.ty(ph[i])}")

    cont = continuation_of(code.q, chi_h, code.sigma)
    if cont is None:
        raise _err("E-SEQ", "call target has no continuation")
    if not (isinstance(cont.q, MEps) and cont.q.name == eps_h):
        raise _err("E-SEQ",
                   "callee continuation must carry the callee's marker "
                   "variable")
    res_reg, res_ty = cont.chi[0]
    pr, rtail = stack_parts(cont.sigma)
    if not (isinstance(rtail, SVar) and rtail.name == z_h):
        raise _err("E-SEQ",
                   "callee continuation stack must end in the callee's "
                   "stack variable")
    back = len(pr)

    if isinstance(q, InferCell) and q.resolved is None:
        if not isinstance(call.qret, MHalt):
            raise _err("E-SEQ",
                       "call at a halting position must return a halting "
                       "marker")
        if q.tau is not None and not alpha_equal(q.tau, call.qret.tau):
            raise _err("E-SEQ",
                       f"call returns {pretty.ty(call.qret.tau)}, the "
                       f"boundary expects {pretty.ty(q.tau)}")
    elif isinstance(qv, MHalt):
        if not (isinstance(call.qret, MHalt)
                and alpha_equal(qv, call.qret)):
            raise _err("E-SEQ",
                       "call must pass the current halting marker on")
    elif isinstance(qv, MIdx):
        if qv.idx < peel:
            raise _err("E-SEQ",
                       "the marker slot lies inside the transferred prefix")
        want = qv.idx + back - peel
        if not (isinstance(call.qret, MIdx) and call.qret.idx == want):
            raise _err("E-SEQ",
                       f"call return marker should be {want}, the call "
                       f"says {pretty.mk(call.qret)}")
    else:
        raise _err("E-SEQ", "call with a register marker")

    sub = {(KIND_STACK, z_h): call.sigma0, (KIND_MARKER, eps_h): call.qret}
    try:
        for r, t in code.chi:
            if _is_reg_marker(code.q, r):
                continue
            wf_type(delta, t)
    except KindError:
        raise _err("E-SEQ",
                   "callee registers other than the return address must "
                   "not mention its abstracted variables")
    try:
        wf_type(delta, res_ty)
        wf_stack(delta, substitute(cont.sigma, {(KIND_STACK, z_h): call.sigma0}))
    except KindError as e:
        raise _err("E-SEQ",
                   f"call result is ill-formed here: {e.message}")
    chi_inst = {r: substitute(t, sub) for r, t in code.chi}
    inst_code = CodeT((), code.chi, code.sigma, code.q)
    inst_code = substitute(inst_code, sub)
    try:
        wf_type(delta, Box(inst_code))
    except KindError as e:
        raise _err("E-SEQ", f"instantiated callee is ill-formed: {e.message}")
    if not regfile_subtype(chi, chi_inst):
        raise _err("E-SEQ", "registers do not satisfy the callee")

    if isinstance(q, InferCell) and q.resolved is None:
        q.resolved = call.qret


# ---------------------------------------------------------------------------
# Heap fragments and components


def check_heap_fragment(psi: dict, heap) -> dict:
    """Check the bindings of a component's heap fragment against psi.

    Returns the fragment's label typing. Structural problems raise E-HEAP;
    failures inside code bodies keep their own code with the label noted.
    """
    psi2: dict = {}
    labels = [hb.label for hb in heap]
    for label in labels:
        if labels.count(label) > 1:
            raise _err("E-HEAP", f"label {label} bound twice")

    for hb in heap:
        if isinstance(hb.value, CodeBlock):
            if hb.nu != "box":
                raise _err("E-HEAP", f"{hb.label}: code must be boxed")
            block = hb.value
            code_ty = CodeT(block.binders, block.chi, block.sigma, block.q)
            try:
                wf_type((), Box(code_ty))
            except KindError as e:
                raise _err("E-HEAP", f"{hb.label}: {e.message}")
            psi2[hb.label] = ("box", code_ty)

    pending = [hb for hb in heap if not isinstance(hb.value, CodeBlock)]
    while pending:
        progressed = False
        stuck: list = []
        for hb in pending:
            if not isinstance(hb.value, TupleVal):
                raise _err("E-HEAP",
                           f"{hb.label}: heap binding must be code or a tuple")
            merged = {**psi, **psi2}
            try:
                types = tuple(check_small_value(merged, (), {}, w)
                              for w in hb.value.items)
            except CheckError as e:
                if e.code == "E-VAL" and e.message.startswith("label "):
                    stuck.append(hb)
                    continue
                raise _err("E-HEAP", f"{hb.label}: {e.message}")
            psi2[hb.label] = (hb.nu, TyTuple(types))
            progressed = True
        if stuck and not progressed:
            names = ", ".join(hb.label for hb in stuck)
            raise _err("E-HEAP",
                       f"unresolvable heap bindings (cycle or dangling "
                       f"label): {names}")
        pending = stuck

    merged = {**psi, **psi2}
    for hb in heap:
        if isinstance(hb.value, CodeBlock):
            block = hb.value
            delta_b = tuple((kind_of_name(b), b) for b in block.binders)
            try:
                check_instruction_sequence(merged, delta_b, {},
                                           dict(block.chi), block.sigma,
                                           block.q, block.body, [])
            except CheckError as e:
                if not e.where:
                    e.where = hb.label
                raise
    return psi2


def check_component(psi: dict, delta: Delta, gamma: dict, chi: dict,
                    sigma: Stk, q, comp: Component):
    """Check a component; returns the (tau, sigma') its marker promises."""
    for label, (nu, _) in psi.items():
        if nu != "box":
            raise _err("E-COMPONENT",
                       f"component under a heap with mutable binding {label}")
    for label in comp.labels():
        if label in psi:
            raise _err("E-HEAP", f"label {label} is already bound")
    psi2 = check_heap_fragment(psi, comp.heap)
    merged = {**psi, **psi2}

    chi_entry = dict(chi)
    sigma_entry = sigma
    aliases: list = []
    check_instruction_sequence(merged, delta, gamma, dict(chi), sigma, q,
                               comp.body, aliases)

    if isinstance(q, InferCell):
        if q.resolved is None:
            raise _err("E-COMPONENT", "cannot infer the return marker")
        tau, s_out = q.resolved.tau, q.resolved.sigma
    else:
        res = typeof_marker(q, chi_entry, sigma_entry)
        if res is None:
            raise _err("E-COMPONENT", "the component marker promises nothing")
        tau, s_out = res

    for name, hidden in reversed(aliases):
        tau = substitute(tau, {(KIND_STACK, name): hidden})
        s_out = substitute(s_out, {(KIND_STACK, name): hidden})

    for kind, name in free_names(tau) | free_names(s_out):
        if kind in (KIND_TYPE, KIND_STACK, KIND_MARKER) and \
                (kind, name) not in delta:
            raise _err("E-COMPONENT",
                       f"local {name} escapes the component")
    return tau, s_out


# ---------------------------------------------------------------------------
# Expressions


def check_expression(psi: dict, delta: Delta, gamma: dict, sigma: Stk,
                     e: Tm):
    """Type an expression; returns (tau, sigma')."""
    if isinstance(e, Var):
        t = gamma.get(e.name)
        if t is None:
            raise _err("E-EXPR", f"unbound variable {e.name}")
        return t, sigma
    if isinstance(e, IntVal):
        return TyInt(), sigma
    if isinstance(e, UnitVal):
        return TyUnit(), sigma
    if isinstance(e, Binop):
        tl, s1 = check_expression(psi, delta, gamma, sigma, e.left)
        if not isinstance(tl, TyInt):
            raise _err("E-EXPR", "arithmetic on a non-integer")
        tr, s2 = check_expression(psi, delta, gamma, s1, e.right)
        if not isinstance(tr, TyInt):
            raise _err("E-EXPR", "arithmetic on a non-integer")
        return TyInt(), s2
    if isinstance(e, If0):
        tc, s0 = check_expression(psi, delta, gamma, sigma, e.cond)
        if not isinstance(tc, TyInt):
            raise _err("E-EXPR", "condition must be an integer")
        ta, sa = check_expression(psi, delta, gamma, s0, e.then)
        tb, sb = check_expression(psi, delta, gamma, s0, e.els)
        if not alpha_equal(ta, tb):
            raise _err("E-EXPR",
                       f"branches disagree: {pretty.ty(ta)} against "
                       f"{pretty.ty(tb)}")
        if not alpha_equal(sa, sb):
            raise _err("E-EXPR", "branches disagree on the stack")
        return ta, sa
    if isinstance(e, Lam):
        for _, pt in e.params:
            wf_type(delta, pt)
        avoid = {n for _, n in delta}
        for _, pt in e.params:
            avoid |= {n for _, n in free_names(pt)}
        if e.stack is not None:
            phi_in, phi_out = e.stack
            for pt in list(phi_in) + list(phi_out):
                wf_type(delta, pt)
                avoid |= {n for _, n in free_names(pt)}
        zf = fresh_name("z", avoid)
        delta2 = delta + ((KIND_STACK, zf),)
        gamma2 = {**gamma, **{x: t for x, t in e.params}}
        if e.stack is None:
            tb, sb = check_expression(psi, delta2, gamma2, SVar(zf), e.body)
            if not alpha_equal(sb, SVar(zf)):
                raise _err("E-EXPR",
                           "function body must leave the stack as it "
                           "found it")
            return Arrow(tuple(t for _, t in e.params), tb), sigma
        phi_in, phi_out = e.stack
        s_in = stack_of(list(phi_in), SVar(zf))
        tb, sb = check_expression(psi, delta2, gamma2, s_in, e.body)
        if not alpha_equal(sb, stack_of(list(phi_out), SVar(zf))):
            raise _err("E-EXPR",
                       "function body does not produce the declared stack")
        return StackArrow(tuple(t for _, t in e.params), phi_in, phi_out,
                          tb), sigma
    if isinstance(e, App):
        tf, s = check_expression(psi, delta, gamma, sigma, e.fn)
        if not isinstance(tf, (Arrow, StackArrow)):
            raise _err("E-EXPR", "application of a non-function")
        if len(e.args) != len(tf.params):
            raise _err("E-EXPR",
                       f"{len(tf.params)} parameters, {len(e.args)} "
                       f"arguments")
        for i, arg in enumerate(e.args):
            ti, s = check_expression(psi, delta, gamma, s, arg)
            if not alpha_equal(ti, tf.params[i]):
                raise _err("E-EXPR",
                           f"argument {i + 1} has type {pretty.ty(ti)}, "
                           f"expected {pretty.ty(tf.params[i])}")
        if isinstance(tf, Arrow):
            return tf.ret, s
        prefix, tail = stack_parts(s)
        k = len(tf.phi_in)
        if len(prefix) < k:
            raise _err("E-EXPR",
                       "the stack does not provide the required prefix")
        for i in range(k):
            if not alpha_equal(prefix[i], tf.phi_in[i]):
                raise _err("E-EXPR",
                           f"stack slot {i} is {pretty.ty(prefix[i])}, the "
                           f"function needs {pretty.ty(tf.phi_in[i])}")
        rest = stack_of(prefix[k:], tail)
        return tf.ret, stack_of(list(tf.phi_out), rest)
    if isinstance(e, TupleVal):
        s = sigma
        types = []
        for item in e.items:
            t, s = check_expression(psi, delta, gamma, s, item)
            types.append(t)
        return TyTuple(tuple(types)), s
    if isinstance(e, Proj):
        t, s = check_expression(psi, delta, gamma, sigma, e.e)
        if not isinstance(t, TyTuple):
            raise _err("E-EXPR", "projection from a non-tuple")
        if e.idx >= len(t.items):
            raise _err("E-EXPR",
                       f"projection index {e.idx} outside a "
                       f"{len(t.items)}-tuple")
        return t.items[e.idx], s
    if isinstance(e, Fold):
        wf_type(delta, e.ann)
        if not isinstance(e.ann, Mu):
            raise _err("E-EXPR", "fold annotation must be recursive")
        te, s = check_expression(psi, delta, gamma, sigma, e.e)
        if not alpha_equal(te, _unroll(e.ann)):
            raise _err("E-EXPR",
                       f"folded value has type {pretty.ty(te)}, expected "
                       f"{pretty.ty(_unroll(e.ann))}")
        return e.ann, s
    if isinstance(e, Unfold):
        t, s = check_expression(psi, delta, gamma, sigma, e.e)
        if not isinstance(t, Mu):
            raise _err("E-EXPR", "unfold of a non-recursive value")
        return _unroll(t), s
    if isinstance(e, Let):
        tr, s1 = check_expression(psi, delta, gamma, sigma, e.rhs)
        if e.ann is not None:
            wf_type(delta, e.ann)
            if not alpha_equal(tr, e.ann):
                raise _err("E-EXPR",
                           f"bound value has type {pretty.ty(tr)}, the "
                           f"annotation says {pretty.ty(e.ann)}")
        gamma2 = {**gamma, e.var: tr}
        return check_expression(psi, delta, gamma2, s1, e.body)
    if isinstance(e, SeqE):
        _, s1 = check_expression(psi, delta, gamma, sigma, e.first)
        return check_expression(psi, delta, gamma, s1, e.second)
    if isinstance(e, Boundary):
        wf_type(delta, e.ann)
        expected = translate_type(e.ann)
        cell = InferCell(expected)
        tc, s_out = check_component(psi, delta, gamma, {}, sigma, cell,
                                    e.comp)
        if not alpha_equal(tc, expected):
            raise _err("E-EXPR",
                       f"boundary component produces {pretty.ty(tc)}, "
                       f"expected {pretty.ty(expected)}")
        return e.ann, s_out
    raise _err("E-EXPR", "not a source-language expression")


# ---------------------------------------------------------------------------
# Programs


def check_program(prog: Program):
    """Check a whole program; returns (tau, sigma')."""
    if prog.entry == "F":
        return check_expression({}, (), {}, SNil(), prog.main)
    cell = InferCell(None)
    return check_component({}, (), {}, {}, SNil(), cell, prog.main)
