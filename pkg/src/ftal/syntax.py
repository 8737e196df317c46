"""Abstract syntax shared by the functional language F and the assembly T.

Every node is a frozen dataclass; all operations build new nodes. Variables
live in four namespaces: type variables, stack variables, return-marker
variables, and F term variables. Heap labels are a fifth, nominal namespace
(never alpha-renamed, only explicitly renamed by the machine when it merges
heap fragments).

The kind of a type-level variable is determined by its spelling: names
starting with ``z`` are stack variables, names starting with ``eps`` are
return-marker variables, anything else is an ordinary type variable. Fresh
names keep their prefix so freshening preserves kinds.
"""

from __future__ import annotations

from dataclasses import dataclass

KIND_TYPE = "type"
KIND_STACK = "stack"
KIND_MARKER = "marker"
KIND_TERM = "term"
KIND_LOC = "loc"

REGISTERS = ("r1", "r2", "r3", "r4", "r5", "r6", "r7", "ra")
_REG_ORDER = {r: i for i, r in enumerate(REGISTERS)}

AOPS = ("add", "sub", "mul")
BINOP_TO_AOP = {"+": "add", "-": "sub", "*": "mul"}
AOP_TO_BINOP = {v: k for k, v in BINOP_TO_AOP.items()}


def kind_of_name(name: str) -> str:
    if name.startswith("z"):
        return KIND_STACK
    if name.startswith("eps"):
        return KIND_MARKER
    return KIND_TYPE


def is_register(name: str) -> bool:
    return name in _REG_ORDER


class Node:
    __slots__ = ()


class Ty(Node):
    """Base for value types (F types, T word types, heap types)."""

    __slots__ = ()


class Stk(Node):
    """Base for stack types."""

    __slots__ = ()


class Mk(Node):
    """Base for return markers."""

    __slots__ = ()


class Tm(Node):
    """Base for F expressions and T value forms."""

    __slots__ = ()


class Instr(Node):
    """Base for non-terminator instructions."""

    __slots__ = ()


class ISeq(Node):
    """Base for instruction sequences (Seq chains ending in a terminator)."""

    __slots__ = ()


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class TVar(Ty):
    name: str


@dataclass(frozen=True)
class TyUnit(Ty):
    pass


@dataclass(frozen=True)
class TyInt(Ty):
    pass


@dataclass(frozen=True)
class Arrow(Ty):
    params: tuple[Ty, ...]
    ret: Ty


@dataclass(frozen=True)
class StackArrow(Ty):
    """Function type with a visible stack prefix: (params)[phi_in => phi_out] -> ret."""

    params: tuple[Ty, ...]
    phi_in: tuple[Ty, ...]
    phi_out: tuple[Ty, ...]
    ret: Ty


@dataclass(frozen=True)
class TyTuple(Ty):
    items: tuple[Ty, ...]


@dataclass(frozen=True)
class Mu(Ty):
    var: str
    body: Ty


@dataclass(frozen=True)
class Exists(Ty):
    var: str
    body: Ty


@dataclass(frozen=True)
class Ref(Ty):
    """Mutable heap tuple; psi is always a TyTuple."""

    psi: Ty


@dataclass(frozen=True)
class Box(Ty):
    """Immutable heap value; psi is a TyTuple or a CodeT."""

    psi: Ty


@dataclass(frozen=True)
class CodeT(Ty):
    """Code type: forall binders, register-file precondition, stack, marker.

    ``chi`` is kept canonically sorted in register order so that structural
    comparison is order-insensitive.
    """

    binders: tuple[str, ...]
    chi: tuple[tuple[str, Ty], ...]
    sigma: Stk
    q: Mk


def make_chi(entries) -> tuple[tuple[str, Ty], ...]:
    d = dict(entries)
    for r in d:
        if not is_register(r):
            raise ValueError(f"not a register: {r}")
    return tuple((r, d[r]) for r in REGISTERS if r in d)


def chi_get(chi: tuple[tuple[str, Ty], ...], reg: str) -> Ty | None:
    for r, t in chi:
        if r == reg:
            return t
    return None


# ---------------------------------------------------------------------------
# Stack types


@dataclass(frozen=True)
class SNil(Stk):
    pass


@dataclass(frozen=True)
class SVar(Stk):
    name: str


@dataclass(frozen=True)
class SCons(Stk):
    head: Ty
    tail: Stk


def stack_of(items, tail: Stk) -> Stk:
    out = tail
    for t in reversed(list(items)):
        out = SCons(t, out)
    return out


def stack_parts(sigma: Stk) -> tuple[list[Ty], Stk]:
    """Split a stack into its visible prefix and its tail (SNil or SVar)."""
    prefix: list[Ty] = []
    while isinstance(sigma, SCons):
        prefix.append(sigma.head)
        sigma = sigma.tail
    return prefix, sigma


# ---------------------------------------------------------------------------
# Return markers


@dataclass(frozen=True)
class MReg(Mk):
    reg: str


@dataclass(frozen=True)
class MIdx(Mk):
    idx: int


@dataclass(frozen=True)
class MEps(Mk):
    name: str


@dataclass(frozen=True)
class MHalt(Mk):
    tau: Ty
    sigma: Stk


@dataclass(frozen=True)
class MOut(Mk):
    pass


# ---------------------------------------------------------------------------
# Terms: F expressions and T value forms


@dataclass(frozen=True)
class Var(Tm):
    name: str


@dataclass(frozen=True)
class IntVal(Tm):
    n: int


@dataclass(frozen=True)
class UnitVal(Tm):
    pass


@dataclass(frozen=True)
class Binop(Tm):
    op: str
    left: Tm
    right: Tm


@dataclass(frozen=True)
class If0(Tm):
    cond: Tm
    then: Tm
    els: Tm


@dataclass(frozen=True)
class Lam(Tm):
    """Plain lambda when stack is None, stack lambda otherwise.

    ``stack`` is a pair (phi_in, phi_out) of visible stack prefixes.
    """

    params: tuple[tuple[str, Ty], ...]
    body: Tm
    stack: tuple[tuple[Ty, ...], tuple[Ty, ...]] | None = None


@dataclass(frozen=True)
class App(Tm):
    fn: Tm
    args: tuple[Tm, ...]


@dataclass(frozen=True)
class TupleVal(Tm):
    items: tuple[Tm, ...]


@dataclass(frozen=True)
class Proj(Tm):
    idx: int
    e: Tm


@dataclass(frozen=True)
class Fold(Tm):
    ann: Ty
    e: Tm


@dataclass(frozen=True)
class Unfold(Tm):
    e: Tm


@dataclass(frozen=True)
class Let(Tm):
    var: str
    ann: Ty | None
    rhs: Tm
    body: Tm


@dataclass(frozen=True)
class SeqE(Tm):
    first: Tm
    second: Tm


@dataclass(frozen=True)
class Boundary(Tm):
    """FT[ann](component): run T code, give its halting value back to F."""

    ann: Ty
    comp: "Component"


@dataclass(frozen=True)
class Reg(Tm):
    name: str


@dataclass(frozen=True)
class Loc(Tm):
    name: str


@dataclass(frozen=True)
class Pack(Tm):
    wit: Ty
    val: Tm
    ann: Ty


@dataclass(frozen=True)
class Inst(Tm):
    """Type-level instantiation u[omega]; omega is a type, stack, or marker."""

    val: Tm
    omega: Node


# ---------------------------------------------------------------------------
# Instructions


@dataclass(frozen=True)
class Aop(Instr):
    op: str
    rd: str
    rs: str
    u: Tm


@dataclass(frozen=True)
class Bnz(Instr):
    r: str
    u: Tm


@dataclass(frozen=True)
class Ld(Instr):
    rd: str
    rs: str
    idx: int


@dataclass(frozen=True)
class St(Instr):
    rd: str
    idx: int
    rs: str


@dataclass(frozen=True)
class Ralloc(Instr):
    rd: str
    n: int


@dataclass(frozen=True)
class Balloc(Instr):
    rd: str
    n: int


@dataclass(frozen=True)
class Mv(Instr):
    rd: str
    u: Tm


@dataclass(frozen=True)
class Salloc(Instr):
    n: int


@dataclass(frozen=True)
class Sfree(Instr):
    n: int


@dataclass(frozen=True)
class Sld(Instr):
    rd: str
    idx: int


@dataclass(frozen=True)
class Sst(Instr):
    idx: int
    rs: str


@dataclass(frozen=True)
class Unpack(Instr):
    """unpack <a, rd> u; binds the type variable a over the rest of the sequence."""

    tv: str
    rd: str
    u: Tm


@dataclass(frozen=True)
class UnfoldI(Instr):
    rd: str
    u: Tm


@dataclass(frozen=True)
class Protect(Instr):
    """protect phi, zeta; hides the stack below phi behind zeta for the rest."""

    phi: tuple[Ty, ...]
    zeta: str


@dataclass(frozen=True)
class ImportI(Instr):
    """import rd, sigma0 as zeta, ann TF{ body }; zeta scopes over body only."""

    rd: str
    sigma0: Stk
    zeta: str
    ann: Ty
    body: Tm


# ---------------------------------------------------------------------------
# Instruction sequences


@dataclass(frozen=True)
class Seq(ISeq):
    head: Instr
    tail: ISeq


@dataclass(frozen=True)
class Jmp(ISeq):
    u: Tm


@dataclass(frozen=True)
class Call(ISeq):
    u: Tm
    sigma0: Stk
    qret: Mk


@dataclass(frozen=True)
class Ret(ISeq):
    r: str
    r2: str


@dataclass(frozen=True)
class Halt(ISeq):
    ann: Ty
    sigma: Stk
    reg: str


def seq_of(instrs, terminator: ISeq) -> ISeq:
    out = terminator
    for i in reversed(list(instrs)):
        out = Seq(i, out)
    return out


# ---------------------------------------------------------------------------
# Heap fragments, components, programs


@dataclass(frozen=True)
class CodeBlock(Node):
    binders: tuple[str, ...]
    chi: tuple[tuple[str, Ty], ...]
    sigma: Stk
    q: Mk
    body: ISeq


@dataclass(frozen=True)
class HeapBinding(Node):
    label: str
    nu: str  # "box" or "ref"
    value: Node  # CodeBlock or TupleVal of word values


@dataclass(frozen=True)
class Component(Node):
    body: ISeq
    heap: tuple[HeapBinding, ...]

    def labels(self) -> tuple[str, ...]:
        return tuple(hb.label for hb in self.heap)


@dataclass(frozen=True)
class Program(Node):
    entry: str  # "F" or "T"
    main: Node  # Tm when entry == "F", Component when entry == "T"


# ---------------------------------------------------------------------------
# Free names

def _binder_kinds(binders) -> set[tuple[str, str]]:
    return {(kind_of_name(b), b) for b in binders}


def _free(node, bound: frozenset, out: set) -> None:
    match node:
        case TVar(name):
            if (KIND_TYPE, name) not in bound:
                out.add((KIND_TYPE, name))
        case SVar(name):
            if (KIND_STACK, name) not in bound:
                out.add((KIND_STACK, name))
        case MEps(name):
            if (KIND_MARKER, name) not in bound:
                out.add((KIND_MARKER, name))
        case Var(name):
            if (KIND_TERM, name) not in bound:
                out.add((KIND_TERM, name))
        case Loc(name):
            if (KIND_LOC, name) not in bound:
                out.add((KIND_LOC, name))
        case TyUnit() | TyInt() | SNil() | MReg() | MIdx() | MOut() | IntVal() | UnitVal() | Reg():
            pass
        case Arrow(params, ret):
            for t in params:
                _free(t, bound, out)
            _free(ret, bound, out)
        case StackArrow(params, phi_in, phi_out, ret):
            for t in (*params, *phi_in, *phi_out, ret):
                _free(t, bound, out)
        case TyTuple(items):
            for t in items:
                _free(t, bound, out)
        case Mu(var, body) | Exists(var, body):
            _free(body, bound | {(KIND_TYPE, var)}, out)
        case Ref(psi) | Box(psi):
            _free(psi, bound, out)
        case CodeT(binders, chi, sigma, q):
            b2 = bound | _binder_kinds(binders)
            for _, t in chi:
                _free(t, b2, out)
            _free(sigma, b2, out)
            _free(q, b2, out)
        case SCons(head, tail):
            _free(head, bound, out)
            _free(tail, bound, out)
        case MHalt(tau, sigma):
            _free(tau, bound, out)
            _free(sigma, bound, out)
        case Binop(_, left, right):
            _free(left, bound, out)
            _free(right, bound, out)
        case If0(c, t, e):
            _free(c, bound, out)
            _free(t, bound, out)
            _free(e, bound, out)
        case Lam(params, body, stack):
            for _, t in params:
                _free(t, bound, out)
            if stack is not None:
                for t in (*stack[0], *stack[1]):
                    _free(t, bound, out)
            _free(body, bound | {(KIND_TERM, x) for x, _ in params}, out)
        case App(fn, args):
            _free(fn, bound, out)
            for a in args:
                _free(a, bound, out)
        case TupleVal(items):
            for e in items:
                _free(e, bound, out)
        case Proj(_, e) | Unfold(e):
            _free(e, bound, out)
        case Fold(ann, e):
            _free(ann, bound, out)
            _free(e, bound, out)
        case Let(var, ann, rhs, body):
            if ann is not None:
                _free(ann, bound, out)
            _free(rhs, bound, out)
            _free(body, bound | {(KIND_TERM, var)}, out)
        case SeqE(first, second):
            _free(first, bound, out)
            _free(second, bound, out)
        case Boundary(ann, comp):
            _free(ann, bound, out)
            _free(comp, bound, out)
        case Pack(wit, val, ann):
            _free(wit, bound, out)
            _free(val, bound, out)
            _free(ann, bound, out)
        case Inst(val, omega):
            _free(val, bound, out)
            _free(omega, bound, out)
        case Aop(_, _, _, u) | Bnz(_, u) | Mv(_, u) | UnfoldI(_, u):
            _free(u, bound, out)
        case Ld() | St() | Ralloc() | Balloc() | Salloc() | Sfree() | Sld() | Sst():
            pass
        case Unpack(_, _, u):
            _free(u, bound, out)
        case Protect(phi, _):
            for t in phi:
                _free(t, bound, out)
        case ImportI(_, sigma0, zeta, ann, body):
            _free(sigma0, bound, out)
            _free(ann, bound, out)
            _free(body, bound | {(KIND_STACK, zeta)}, out)
        case Seq(head, tail):
            match head:
                case Unpack(tv, _, _):
                    _free(head, bound, out)
                    _free(tail, bound | {(KIND_TYPE, tv)}, out)
                case Protect(_, zeta):
                    _free(head, bound, out)
                    _free(tail, bound | {(KIND_STACK, zeta)}, out)
                case _:
                    _free(head, bound, out)
                    _free(tail, bound, out)
        case Jmp(u):
            _free(u, bound, out)
        case Call(u, sigma0, qret):
            _free(u, bound, out)
            _free(sigma0, bound, out)
            _free(qret, bound, out)
        case Ret():
            pass
        case Halt(ann, sigma, _):
            _free(ann, bound, out)
            _free(sigma, bound, out)
        case CodeBlock(binders, chi, sigma, q, body):
            b2 = bound | _binder_kinds(binders)
            for _, t in chi:
                _free(t, b2, out)
            _free(sigma, b2, out)
            _free(q, b2, out)
            _free(body, b2, out)
        case HeapBinding(_, _, value):
            _free(value, bound, out)
        case Component(body, heap):
            b2 = bound | {(KIND_LOC, hb.label) for hb in heap}
            _free(body, b2, out)
            for hb in heap:
                _free(hb, b2, out)
        case Program(_, main):
            _free(main, bound, out)
        case _:
            raise TypeError(f"free names: unhandled node {node!r}")


def free_names(node) -> frozenset:
    """All free names of every kind, as (kind, name) pairs."""
    out: set = set()
    _free(node, frozenset(), out)
    return frozenset(out)


def free_type_names(node) -> frozenset:
    return frozenset(p for p in free_names(node) if p[0] in (KIND_TYPE, KIND_STACK, KIND_MARKER))


def var_node(kind: str, name: str) -> Node:
    if kind == KIND_TYPE:
        return TVar(name)
    if kind == KIND_STACK:
        return SVar(name)
    if kind == KIND_MARKER:
        return MEps(name)
    raise ValueError(kind)


def fresh_name(base: str, avoid) -> str:
    """Deterministic fresh name with the same kind prefix as base.

    ``avoid`` is a set of plain names. No global state: the result depends
    only on the arguments, which keeps runs reproducible.
    """
    root = base.split("#", 1)[0]
    taken = set(avoid)
    k = 0
    while f"{root}#{k}" in taken:
        k += 1
    return f"{root}#{k}"


# ---------------------------------------------------------------------------
# Substitution (type-level variables: types, stacks, markers)


def substitute(node, mapping: dict):
    """Capture-avoiding substitution of type-level variables.

    ``mapping`` sends (kind, name) pairs to replacement nodes of that kind.
    """
    if not mapping:
        return node
    avoid: set = set()
    for v in mapping.values():
        avoid |= free_names(v)
    return _subst(node, mapping, frozenset(avoid))


def _subst_binder(binders, mapping, avoid):
    """Shadow mapping entries and freshen binders that would capture.

    Returns (new_binders, mapping-for-scope, renaming-for-scope).
    """
    live = {k: v for k, v in mapping.items() if k not in _binder_kinds(binders)}
    renaming: dict = {}
    new_binders = []
    taken = {n for _, n in avoid} | set(binders)
    for b in binders:
        kb = kind_of_name(b)
        if live and (kb, b) in avoid:
            nb = fresh_name(b, taken)
            taken.add(nb)
            renaming[(kb, b)] = var_node(kb, nb)
            new_binders.append(nb)
        else:
            new_binders.append(b)
    return tuple(new_binders), live, renaming


def _subst(node, mapping: dict, avoid: frozenset):
    if not mapping:
        return node
    match node:
        case TVar(name):
            return mapping.get((KIND_TYPE, name), node)
        case SVar(name):
            return mapping.get((KIND_STACK, name), node)
        case MEps(name):
            return mapping.get((KIND_MARKER, name), node)
        case TyUnit() | TyInt() | SNil() | MReg() | MIdx() | MOut() | IntVal() | UnitVal() | Reg() | Var() | Loc():
            return node
        case Arrow(params, ret):
            return Arrow(tuple(_subst(t, mapping, avoid) for t in params), _subst(ret, mapping, avoid))
        case StackArrow(params, phi_in, phi_out, ret):
            return StackArrow(
                tuple(_subst(t, mapping, avoid) for t in params),
                tuple(_subst(t, mapping, avoid) for t in phi_in),
                tuple(_subst(t, mapping, avoid) for t in phi_out),
                _subst(ret, mapping, avoid),
            )
        case TyTuple(items):
            return TyTuple(tuple(_subst(t, mapping, avoid) for t in items))
        case Mu(var, body):
            nb, live, ren = _subst_binder((var,), mapping, avoid)
            body2 = _subst(body, ren, frozenset()) if ren else body
            return Mu(nb[0], _subst(body2, live, avoid)) if live or ren else node
        case Exists(var, body):
            nb, live, ren = _subst_binder((var,), mapping, avoid)
            body2 = _subst(body, ren, frozenset()) if ren else body
            return Exists(nb[0], _subst(body2, live, avoid)) if live or ren else node
        case Ref(psi):
            return Ref(_subst(psi, mapping, avoid))
        case Box(psi):
            return Box(_subst(psi, mapping, avoid))
        case CodeT(binders, chi, sigma, q):
            nb, live, ren = _subst_binder(binders, mapping, avoid)
            if not live and not ren:
                return node

            def go(x):
                x2 = _subst(x, ren, frozenset()) if ren else x
                return _subst(x2, live, avoid)

            return CodeT(nb, tuple((r, go(t)) for r, t in chi), go(sigma), go(q))
        case SCons(head, tail):
            return SCons(_subst(head, mapping, avoid), _subst(tail, mapping, avoid))
        case MHalt(tau, sigma):
            return MHalt(_subst(tau, mapping, avoid), _subst(sigma, mapping, avoid))
        case Binop(op, left, right):
            return Binop(op, _subst(left, mapping, avoid), _subst(right, mapping, avoid))
        case If0(c, t, e):
            return If0(_subst(c, mapping, avoid), _subst(t, mapping, avoid), _subst(e, mapping, avoid))
        case Lam(params, body, stack):
            return Lam(
                tuple((x, _subst(t, mapping, avoid)) for x, t in params),
                _subst(body, mapping, avoid),
                None
                if stack is None
                else (
                    tuple(_subst(t, mapping, avoid) for t in stack[0]),
                    tuple(_subst(t, mapping, avoid) for t in stack[1]),
                ),
            )
        case App(fn, args):
            return App(_subst(fn, mapping, avoid), tuple(_subst(a, mapping, avoid) for a in args))
        case TupleVal(items):
            return TupleVal(tuple(_subst(e, mapping, avoid) for e in items))
        case Proj(idx, e):
            return Proj(idx, _subst(e, mapping, avoid))
        case Fold(ann, e):
            return Fold(_subst(ann, mapping, avoid), _subst(e, mapping, avoid))
        case Unfold(e):
            return Unfold(_subst(e, mapping, avoid))
        case Let(var, ann, rhs, body):
            return Let(
                var,
                None if ann is None else _subst(ann, mapping, avoid),
                _subst(rhs, mapping, avoid),
                _subst(body, mapping, avoid),
            )
        case SeqE(first, second):
            return SeqE(_subst(first, mapping, avoid), _subst(second, mapping, avoid))
        case Boundary(ann, comp):
            return Boundary(_subst(ann, mapping, avoid), _subst(comp, mapping, avoid))
        case Pack(wit, val, ann):
            return Pack(_subst(wit, mapping, avoid), _subst(val, mapping, avoid), _subst(ann, mapping, avoid))
        case Inst(val, omega):
            return Inst(_subst(val, mapping, avoid), _subst(omega, mapping, avoid))
        case Aop(op, rd, rs, u):
            return Aop(op, rd, rs, _subst(u, mapping, avoid))
        case Bnz(r, u):
            return Bnz(r, _subst(u, mapping, avoid))
        case Ld() | St() | Ralloc() | Balloc() | Salloc() | Sfree() | Sld() | Sst():
            return node
        case Mv(rd, u):
            return Mv(rd, _subst(u, mapping, avoid))
        case Unpack(tv, rd, u):
            return Unpack(tv, rd, _subst(u, mapping, avoid))
        case UnfoldI(rd, u):
            return UnfoldI(rd, _subst(u, mapping, avoid))
        case Protect(phi, zeta):
            return Protect(tuple(_subst(t, mapping, avoid) for t in phi), zeta)
        case ImportI(rd, sigma0, zeta, ann, body):
            nb, live, ren = _subst_binder((zeta,), mapping, avoid)
            body2 = _subst(body, ren, frozenset()) if ren else body
            return ImportI(
                rd,
                _subst(sigma0, mapping, avoid),
                nb[0],
                _subst(ann, mapping, avoid),
                _subst(body2, live, avoid),
            )
        case Seq(head, tail):
            match head:
                case Unpack(tv, _, _):
                    nb, live, ren = _subst_binder((tv,), mapping, avoid)
                    head2 = _subst(head, mapping, avoid)
                    if ren:
                        head2 = Unpack(nb[0], head2.rd, head2.u)
                        tail = _subst(tail, ren, frozenset())
                    return Seq(head2, _subst(tail, live, avoid))
                case Protect(_, zeta):
                    nb, live, ren = _subst_binder((zeta,), mapping, avoid)
                    head2 = _subst(head, mapping, avoid)
                    if ren:
                        head2 = Protect(head2.phi, nb[0])
                        tail = _subst(tail, ren, frozenset())
                    return Seq(head2, _subst(tail, live, avoid))
                case _:
                    return Seq(_subst(head, mapping, avoid), _subst(tail, mapping, avoid))
        case Jmp(u):
            return Jmp(_subst(u, mapping, avoid))
        case Call(u, sigma0, qret):
            return Call(_subst(u, mapping, avoid), _subst(sigma0, mapping, avoid), _subst(qret, mapping, avoid))
        case Ret():
            return node
        case Halt(ann, sigma, reg):
            return Halt(_subst(ann, mapping, avoid), _subst(sigma, mapping, avoid), reg)
        case CodeBlock(binders, chi, sigma, q, body):
            nb, live, ren = _subst_binder(binders, mapping, avoid)
            if not live and not ren:
                return node

            def go(x):
                x2 = _subst(x, ren, frozenset()) if ren else x
                return _subst(x2, live, avoid)

            return CodeBlock(nb, tuple((r, go(t)) for r, t in chi), go(sigma), go(q), go(body))
        case HeapBinding(label, nu, value):
            return HeapBinding(label, nu, _subst(value, mapping, avoid))
        case Component(body, heap):
            return Component(_subst(body, mapping, avoid), tuple(_subst(hb, mapping, avoid) for hb in heap))
        case Program(entry, main):
            return Program(entry, _subst(main, mapping, avoid))
        case _:
            raise TypeError(f"substitute: unhandled node {node!r}")


# ---------------------------------------------------------------------------
# Term-variable substitution (F beta reduction, import bodies)


def subst_terms(node, mapping: dict):
    """Capture-avoiding substitution of F term variables (name -> term)."""
    if not mapping:
        return node
    avoid: set = set()
    for v in mapping.values():
        avoid |= free_names(v)
    return _subst_tm(node, mapping, frozenset(avoid))


def _subst_tm(node, mapping: dict, avoid: frozenset):
    if not mapping:
        return node
    match node:
        case Var(name):
            return mapping.get(name, node)
        case Lam(params, body, stack):
            names = [x for x, _ in params]
            live = {k: v for k, v in mapping.items() if k not in names}
            taken = {n for _, n in avoid} | set(names)
            renaming = {}
            new_params = []
            for x, t in params:
                if live and (KIND_TERM, x) in avoid:
                    nx = fresh_name(x, taken)
                    taken.add(nx)
                    renaming[x] = Var(nx)
                    new_params.append((nx, t))
                else:
                    new_params.append((x, t))
            body2 = _subst_tm(body, renaming, frozenset()) if renaming else body
            return Lam(tuple(new_params), _subst_tm(body2, live, avoid), stack)
        case Let(var, ann, rhs, body):
            rhs2 = _subst_tm(rhs, mapping, avoid)
            live = {k: v for k, v in mapping.items() if k != var}
            if live and (KIND_TERM, var) in avoid:
                nv = fresh_name(var, {n for _, n in avoid} | {var})
                body = _subst_tm(body, {var: Var(nv)}, frozenset())
                var = nv
            return Let(var, ann, rhs2, _subst_tm(body, live, avoid))
        case IntVal() | UnitVal() | Reg() | Loc():
            return node
        case Binop(op, left, right):
            return Binop(op, _subst_tm(left, mapping, avoid), _subst_tm(right, mapping, avoid))
        case If0(c, t, e):
            return If0(_subst_tm(c, mapping, avoid), _subst_tm(t, mapping, avoid), _subst_tm(e, mapping, avoid))
        case App(fn, args):
            return App(_subst_tm(fn, mapping, avoid), tuple(_subst_tm(a, mapping, avoid) for a in args))
        case TupleVal(items):
            return TupleVal(tuple(_subst_tm(e, mapping, avoid) for e in items))
        case Proj(idx, e):
            return Proj(idx, _subst_tm(e, mapping, avoid))
        case Fold(ann, e):
            return Fold(ann, _subst_tm(e, mapping, avoid))
        case Unfold(e):
            return Unfold(_subst_tm(e, mapping, avoid))
        case SeqE(first, second):
            return SeqE(_subst_tm(first, mapping, avoid), _subst_tm(second, mapping, avoid))
        case Boundary(ann, comp):
            return Boundary(ann, _subst_tm(comp, mapping, avoid))
        case Pack(wit, val, ann):
            return Pack(wit, _subst_tm(val, mapping, avoid), ann)
        case Inst(val, omega):
            return Inst(_subst_tm(val, mapping, avoid), omega)
        case Aop(op, rd, rs, u):
            return Aop(op, rd, rs, _subst_tm(u, mapping, avoid))
        case Bnz(r, u):
            return Bnz(r, _subst_tm(u, mapping, avoid))
        case Ld() | St() | Ralloc() | Balloc() | Salloc() | Sfree() | Sld() | Sst():
            return node
        case Mv(rd, u):
            return Mv(rd, _subst_tm(u, mapping, avoid))
        case Unpack(tv, rd, u):
            return Unpack(tv, rd, _subst_tm(u, mapping, avoid))
        case UnfoldI(rd, u):
            return UnfoldI(rd, _subst_tm(u, mapping, avoid))
        case Protect():
            return node
        case ImportI(rd, sigma0, zeta, ann, body):
            return ImportI(rd, sigma0, zeta, ann, _subst_tm(body, mapping, avoid))
        case Seq(head, tail):
            return Seq(_subst_tm(head, mapping, avoid), _subst_tm(tail, mapping, avoid))
        case Jmp(u):
            return Jmp(_subst_tm(u, mapping, avoid))
        case Call(u, sigma0, qret):
            return Call(_subst_tm(u, mapping, avoid), sigma0, qret)
        case Ret() | Halt():
            return node
        case CodeBlock(binders, chi, sigma, q, body):
            return CodeBlock(binders, chi, sigma, q, _subst_tm(body, mapping, avoid))
        case HeapBinding(label, nu, value):
            return HeapBinding(label, nu, _subst_tm(value, mapping, avoid))
        case Component(body, heap):
            return Component(_subst_tm(body, mapping, avoid), tuple(_subst_tm(hb, mapping, avoid) for hb in heap))
        case Program(entry, main):
            return Program(entry, _subst_tm(main, mapping, avoid))
        case _:
            raise TypeError(f"subst_terms: unhandled node {node!r}")


# ---------------------------------------------------------------------------
# Location renaming (heap merge)


def rename_locations(node, mapping: dict):
    """Rename free heap labels; a component that rebinds a label shadows it."""
    if not mapping:
        return node
    match node:
        case Loc(name):
            new = mapping.get(name)
            return Loc(new) if new is not None else node
        case Component(body, heap):
            live = {k: v for k, v in mapping.items() if k not in {hb.label for hb in heap}}
            return Component(
                rename_locations(body, live),
                tuple(HeapBinding(hb.label, hb.nu, rename_locations(hb.value, live)) for hb in heap),
            )
        case TVar() | TyUnit() | TyInt() | SNil() | SVar() | MReg() | MIdx() | MEps() | MOut():
            return node
        case IntVal() | UnitVal() | Reg() | Var():
            return node
        case Arrow() | StackArrow() | TyTuple() | Mu() | Exists() | Ref() | Box() | CodeT() | SCons() | MHalt():
            return node  # types carry no locations
        case Binop(op, left, right):
            return Binop(op, rename_locations(left, mapping), rename_locations(right, mapping))
        case If0(c, t, e):
            return If0(rename_locations(c, mapping), rename_locations(t, mapping), rename_locations(e, mapping))
        case Lam(params, body, stack):
            return Lam(params, rename_locations(body, mapping), stack)
        case App(fn, args):
            return App(rename_locations(fn, mapping), tuple(rename_locations(a, mapping) for a in args))
        case TupleVal(items):
            return TupleVal(tuple(rename_locations(e, mapping) for e in items))
        case Proj(idx, e):
            return Proj(idx, rename_locations(e, mapping))
        case Fold(ann, e):
            return Fold(ann, rename_locations(e, mapping))
        case Unfold(e):
            return Unfold(rename_locations(e, mapping))
        case Let(var, ann, rhs, body):
            return Let(var, ann, rename_locations(rhs, mapping), rename_locations(body, mapping))
        case SeqE(first, second):
            return SeqE(rename_locations(first, mapping), rename_locations(second, mapping))
        case Boundary(ann, comp):
            return Boundary(ann, rename_locations(comp, mapping))
        case Pack(wit, val, ann):
            return Pack(wit, rename_locations(val, mapping), ann)
        case Inst(val, omega):
            return Inst(rename_locations(val, mapping), omega)
        case Aop(op, rd, rs, u):
            return Aop(op, rd, rs, rename_locations(u, mapping))
        case Bnz(r, u):
            return Bnz(r, rename_locations(u, mapping))
        case Ld() | St() | Ralloc() | Balloc() | Salloc() | Sfree() | Sld() | Sst() | Protect():
            return node
        case Mv(rd, u):
            return Mv(rd, rename_locations(u, mapping))
        case Unpack(tv, rd, u):
            return Unpack(tv, rd, rename_locations(u, mapping))
        case UnfoldI(rd, u):
            return UnfoldI(rd, rename_locations(u, mapping))
        case ImportI(rd, sigma0, zeta, ann, body):
            return ImportI(rd, sigma0, zeta, ann, rename_locations(body, mapping))
        case Seq(head, tail):
            return Seq(rename_locations(head, mapping), rename_locations(tail, mapping))
        case Jmp(u):
            return Jmp(rename_locations(u, mapping))
        case Call(u, sigma0, qret):
            return Call(rename_locations(u, mapping), sigma0, qret)
        case Ret() | Halt():
            return node
        case CodeBlock(binders, chi, sigma, q, body):
            return CodeBlock(binders, chi, sigma, q, rename_locations(body, mapping))
        case HeapBinding(label, nu, value):
            return HeapBinding(label, nu, rename_locations(value, mapping))
        case Program(entry, main):
            return Program(entry, rename_locations(main, mapping))
        case _:
            raise TypeError(f"rename_locations: unhandled node {node!r}")


# ---------------------------------------------------------------------------
# Alpha equality


def alpha_equal(a, b) -> bool:
    """Structural equality up to renaming of bound names.

    Heap labels are nominal: components must bind the same label set.
    """
    return _alpha(a, b, {}, {}, [0])


def _bind(env_a, env_b, ka, kb, counter):
    if ka[0] != kb[0]:
        return None, None
    counter[0] += 1
    ea = dict(env_a)
    eb = dict(env_b)
    ea[ka] = counter[0]
    eb[kb] = counter[0]
    return ea, eb


def _var_eq(env_a, env_b, ka, kb) -> bool:
    ia = env_a.get(ka)
    ib = env_b.get(kb)
    if ia is None and ib is None:
        return ka == kb
    return ia is not None and ia == ib


def _alpha(a, b, env_a, env_b, counter) -> bool:
    if a is b and not env_a and not env_b:
        return True
    if type(a) is not type(b):
        return False
    match a, b:
        case (TVar(na), TVar(nb)):
            return _var_eq(env_a, env_b, (KIND_TYPE, na), (KIND_TYPE, nb))
        case (SVar(na), SVar(nb)):
            return _var_eq(env_a, env_b, (KIND_STACK, na), (KIND_STACK, nb))
        case (MEps(na), MEps(nb)):
            return _var_eq(env_a, env_b, (KIND_MARKER, na), (KIND_MARKER, nb))
        case (Var(na), Var(nb)):
            return _var_eq(env_a, env_b, (KIND_TERM, na), (KIND_TERM, nb))
        case (Loc(na), Loc(nb)):
            return na == nb
        case (TyUnit(), TyUnit()) | (TyInt(), TyInt()) | (SNil(), SNil()) | (MOut(), MOut()) | (UnitVal(), UnitVal()):
            return True
        case (MReg(ra_), MReg(rb)):
            return ra_ == rb
        case (MIdx(ia), MIdx(ib)):
            return ia == ib
        case (IntVal(na), IntVal(nb)):
            return na == nb
        case (Reg(na), Reg(nb)):
            return na == nb
        case (Arrow(pa, ra_), Arrow(pb, rb)):
            return (
                len(pa) == len(pb)
                and all(_alpha(x, y, env_a, env_b, counter) for x, y in zip(pa, pb))
                and _alpha(ra_, rb, env_a, env_b, counter)
            )
        case (StackArrow(pa, ia, oa, ra_), StackArrow(pb, ib, ob, rb)):
            return (
                len(pa) == len(pb)
                and len(ia) == len(ib)
                and len(oa) == len(ob)
                and all(_alpha(x, y, env_a, env_b, counter) for x, y in zip(pa, pb))
                and all(_alpha(x, y, env_a, env_b, counter) for x, y in zip(ia, ib))
                and all(_alpha(x, y, env_a, env_b, counter) for x, y in zip(oa, ob))
                and _alpha(ra_, rb, env_a, env_b, counter)
            )
        case (TyTuple(ta), TyTuple(tb)):
            return len(ta) == len(tb) and all(_alpha(x, y, env_a, env_b, counter) for x, y in zip(ta, tb))
        case (Mu(va, ba), Mu(vb, bb)) | (Exists(va, ba), Exists(vb, bb)):
            ea, eb = _bind(env_a, env_b, (KIND_TYPE, va), (KIND_TYPE, vb), counter)
            return ea is not None and _alpha(ba, bb, ea, eb, counter)
        case (Ref(xa), Ref(xb)) | (Box(xa), Box(xb)):
            return _alpha(xa, xb, env_a, env_b, counter)
        case (CodeT(ba, ca, sa, qa), CodeT(bb, cb, sb, qb)):
            if len(ba) != len(bb):
                return False
            ea, eb = dict(env_a), dict(env_b)
            for xa, xb in zip(ba, bb):
                ea, eb = _bind(ea, eb, (kind_of_name(xa), xa), (kind_of_name(xb), xb), counter)
                if ea is None:
                    return False
            if [r for r, _ in ca] != [r for r, _ in cb]:
                return False
            return (
                all(_alpha(ta, tb, ea, eb, counter) for (_, ta), (_, tb) in zip(ca, cb))
                and _alpha(sa, sb, ea, eb, counter)
                and _alpha(qa, qb, ea, eb, counter)
            )
        case (SCons(ha, ta), SCons(hb, tb)):
            return _alpha(ha, hb, env_a, env_b, counter) and _alpha(ta, tb, env_a, env_b, counter)
        case (MHalt(ta, sa), MHalt(tb, sb)):
            return _alpha(ta, tb, env_a, env_b, counter) and _alpha(sa, sb, env_a, env_b, counter)
        case (Binop(oa, la, ra_), Binop(ob, lb, rb)):
            return oa == ob and _alpha(la, lb, env_a, env_b, counter) and _alpha(ra_, rb, env_a, env_b, counter)
        case (If0(ca, ta, ea2), If0(cb, tb, eb2)):
            return (
                _alpha(ca, cb, env_a, env_b, counter)
                and _alpha(ta, tb, env_a, env_b, counter)
                and _alpha(ea2, eb2, env_a, env_b, counter)
            )
        case (Lam(pa, ba, ska), Lam(pb, bb, skb)):
            if len(pa) != len(pb):
                return False
            if (ska is None) != (skb is None):
                return False
            if ska is not None:
                if len(ska[0]) != len(skb[0]) or len(ska[1]) != len(skb[1]):
                    return False
                if not all(_alpha(x, y, env_a, env_b, counter) for x, y in zip(ska[0], skb[0])):
                    return False
                if not all(_alpha(x, y, env_a, env_b, counter) for x, y in zip(ska[1], skb[1])):
                    return False
            if not all(_alpha(ta, tb, env_a, env_b, counter) for (_, ta), (_, tb) in zip(pa, pb)):
                return False
            ea, eb = dict(env_a), dict(env_b)
            for (xa, _), (xb, _) in zip(pa, pb):
                ea, eb = _bind(ea, eb, (KIND_TERM, xa), (KIND_TERM, xb), counter)
            return _alpha(ba, bb, ea, eb, counter)
        case (App(fa, aa), App(fb, ab)):
            return (
                len(aa) == len(ab)
                and _alpha(fa, fb, env_a, env_b, counter)
                and all(_alpha(x, y, env_a, env_b, counter) for x, y in zip(aa, ab))
            )
        case (TupleVal(ia), TupleVal(ib)):
            return len(ia) == len(ib) and all(_alpha(x, y, env_a, env_b, counter) for x, y in zip(ia, ib))
        case (Proj(na, ea2), Proj(nb, eb2)):
            return na == nb and _alpha(ea2, eb2, env_a, env_b, counter)
        case (Fold(ta, ea2), Fold(tb, eb2)):
            return _alpha(ta, tb, env_a, env_b, counter) and _alpha(ea2, eb2, env_a, env_b, counter)
        case (Unfold(ea2), Unfold(eb2)):
            return _alpha(ea2, eb2, env_a, env_b, counter)
        case (Let(va, anna, ra_, ba), Let(vb, annb, rb, bb)):
            if (anna is None) != (annb is None):
                return False
            if anna is not None and not _alpha(anna, annb, env_a, env_b, counter):
                return False
            if not _alpha(ra_, rb, env_a, env_b, counter):
                return False
            ea, eb = _bind(env_a, env_b, (KIND_TERM, va), (KIND_TERM, vb), counter)
            return _alpha(ba, bb, ea, eb, counter)
        case (SeqE(fa, sa), SeqE(fb, sb)):
            return _alpha(fa, fb, env_a, env_b, counter) and _alpha(sa, sb, env_a, env_b, counter)
        case (Boundary(ta, ca), Boundary(tb, cb)):
            return _alpha(ta, tb, env_a, env_b, counter) and _alpha(ca, cb, env_a, env_b, counter)
        case (Pack(wa, va, aa), Pack(wb, vb, ab)):
            return (
                _alpha(wa, wb, env_a, env_b, counter)
                and _alpha(va, vb, env_a, env_b, counter)
                and _alpha(aa, ab, env_a, env_b, counter)
            )
        case (Inst(va, oa), Inst(vb, ob)):
            return _alpha(va, vb, env_a, env_b, counter) and _alpha(oa, ob, env_a, env_b, counter)
        case (Aop(oa, da, sa, ua), Aop(ob, db, sb, ub)):
            return oa == ob and da == db and sa == sb and _alpha(ua, ub, env_a, env_b, counter)
        case (Bnz(ra_, ua), Bnz(rb, ub)):
            return ra_ == rb and _alpha(ua, ub, env_a, env_b, counter)
        case (Ld(da, sa, ia), Ld(db, sb, ib)):
            return da == db and sa == sb and ia == ib
        case (St(da, ia, sa), St(db, ib, sb)):
            return da == db and ia == ib and sa == sb
        case (Ralloc(da, na), Ralloc(db, nb)) | (Balloc(da, na), Balloc(db, nb)):
            return da == db and na == nb
        case (Mv(da, ua), Mv(db, ub)):
            return da == db and _alpha(ua, ub, env_a, env_b, counter)
        case (Salloc(na), Salloc(nb)) | (Sfree(na), Sfree(nb)):
            return na == nb
        case (Sld(da, ia), Sld(db, ib)):
            return da == db and ia == ib
        case (Sst(ia, sa), Sst(ib, sb)):
            return ia == ib and sa == sb
        case (UnfoldI(da, ua), UnfoldI(db, ub)):
            return da == db and _alpha(ua, ub, env_a, env_b, counter)
        case (Protect(pa, za), Protect(pb, zb)):
            # zeta's scope is the enclosing Seq tail; compared there.
            return (
                len(pa) == len(pb)
                and za == zb
                and all(_alpha(x, y, env_a, env_b, counter) for x, y in zip(pa, pb))
            )
        case (ImportI(da, s0a, za, ta, ba), ImportI(db, s0b, zb, tb, bb)):
            if da != db:
                return False
            if not _alpha(s0a, s0b, env_a, env_b, counter):
                return False
            if not _alpha(ta, tb, env_a, env_b, counter):
                return False
            ea, eb = _bind(env_a, env_b, (KIND_STACK, za), (KIND_STACK, zb), counter)
            return ea is not None and _alpha(ba, bb, ea, eb, counter)
        case (Seq(ha, ta), Seq(hb, tb)):
            match ha, hb:
                case (Unpack(va, da, ua), Unpack(vb, db, ub)):
                    if da != db or not _alpha(ua, ub, env_a, env_b, counter):
                        return False
                    ea, eb = _bind(env_a, env_b, (KIND_TYPE, va), (KIND_TYPE, vb), counter)
                    return ea is not None and _alpha(ta, tb, ea, eb, counter)
                case (Protect(pa2, za), Protect(pb2, zb)):
                    if len(pa2) != len(pb2):
                        return False
                    if not all(_alpha(x, y, env_a, env_b, counter) for x, y in zip(pa2, pb2)):
                        return False
                    ea, eb = _bind(env_a, env_b, (KIND_STACK, za), (KIND_STACK, zb), counter)
                    return ea is not None and _alpha(ta, tb, ea, eb, counter)
                case _:
                    if type(ha) is not type(hb):
                        return False
                    return _alpha(ha, hb, env_a, env_b, counter) and _alpha(ta, tb, env_a, env_b, counter)
        case (Unpack(va, da, ua), Unpack(vb, db, ub)):
            return va == vb and da == db and _alpha(ua, ub, env_a, env_b, counter)
        case (Jmp(ua), Jmp(ub)):
            return _alpha(ua, ub, env_a, env_b, counter)
        case (Call(ua, sa, qa), Call(ub, sb, qb)):
            return (
                _alpha(ua, ub, env_a, env_b, counter)
                and _alpha(sa, sb, env_a, env_b, counter)
                and _alpha(qa, qb, env_a, env_b, counter)
            )
        case (Ret(ra_, xa), Ret(rb, xb)):
            return ra_ == rb and xa == xb
        case (Halt(ta, sa, ra_), Halt(tb, sb, rb)):
            return (
                ra_ == rb
                and _alpha(ta, tb, env_a, env_b, counter)
                and _alpha(sa, sb, env_a, env_b, counter)
            )
        case (CodeBlock(ba, ca, sa, qa, ia), CodeBlock(bb, cb, sb, qb, ib)):
            if len(ba) != len(bb):
                return False
            ea, eb = dict(env_a), dict(env_b)
            for xa, xb in zip(ba, bb):
                ea, eb = _bind(ea, eb, (kind_of_name(xa), xa), (kind_of_name(xb), xb), counter)
                if ea is None:
                    return False
            if [r for r, _ in ca] != [r for r, _ in cb]:
                return False
            return (
                all(_alpha(ta, tb, ea, eb, counter) for (_, ta), (_, tb) in zip(ca, cb))
                and _alpha(sa, sb, ea, eb, counter)
                and _alpha(qa, qb, ea, eb, counter)
                and _alpha(ia, ib, ea, eb, counter)
            )
        case (Component(ba, ha), Component(bb, hb)):
            da = {x.label: x for x in ha}
            db = {x.label: x for x in hb}
            if set(da) != set(db):
                return False
            if not _alpha(ba, bb, env_a, env_b, counter):
                return False
            for lbl in da:
                xa, xb = da[lbl], db[lbl]
                if xa.nu != xb.nu or not _alpha(xa.value, xb.value, env_a, env_b, counter):
                    return False
            return True
        case (Program(ea2, ma), Program(eb2, mb)):
            return ea2 == eb2 and _alpha(ma, mb, env_a, env_b, counter)
        case _:
            raise TypeError(f"alpha_equal: unhandled pair {type(a).__name__}")
