"""Type and value translations across language boundaries.

The type translation maps source-language types onto target-language code
and heap types.  The value translations move runtime values across a
boundary in either direction: exporting wraps functions in generated code
blocks, importing wraps code pointers in generated lambdas.  Both may
allocate into the machine heap through the dict and fresh-label callable
they are given, so they stay independent of the machine module.
"""

from __future__ import annotations

from typing import Callable

from .errors import KindError, TranslationError
from .syntax import (
    KIND_TYPE,
    Arrow,
    Boundary,
    Box,
    Call,
    CodeBlock,
    CodeT,
    Component,
    Fold,
    Halt,
    ImportI,
    Inst,
    IntVal,
    Lam,
    Loc,
    MEps,
    MHalt,
    MReg,
    Mu,
    Mv,
    Node,
    Protect,
    Ret,
    SVar,
    Salloc,
    Sfree,
    Sld,
    Sst,
    StackArrow,
    Tm,
    TupleVal,
    TVar,
    Ty,
    TyInt,
    TyTuple,
    TyUnit,
    UnitVal,
    Var,
    App,
    chi_get,
    free_names,
    fresh_name,
    make_chi,
    seq_of,
    stack_of,
    substitute,
)

HeapDict = dict
FreshFn = Callable[[str], str]


def _names_in(*nodes: Node) -> set:
    out = set()
    for node in nodes:
        for _, name in free_names(node):
            out.add(name)
    return out


def _pick(base: str, avoid: set) -> str:
    if base not in avoid:
        return base
    return fresh_name(base, avoid)


def translate_type(t: Ty) -> Ty:
    """Map a source-language type to its target-language image.

    Raises KindError when t is not built from the source grammar, which
    also rejects re-translating an already translated type.
    """
    if isinstance(t, (TyUnit, TyInt, TVar)):
        return t
    if isinstance(t, Mu):
        return Mu(t.var, translate_type(t.body))
    if isinstance(t, TyTuple):
        return Box(TyTuple(tuple(translate_type(item) for item in t.items)))
    if isinstance(t, (Arrow, StackArrow)):
        params = [translate_type(p) for p in t.params]
        ret = translate_type(t.ret)
        if isinstance(t, StackArrow):
            phi_in = list(t.phi_in)
            phi_out = list(t.phi_out)
        else:
            phi_in = []
            phi_out = []
        avoid = _names_in(*(params + [ret] + phi_in + phi_out))
        z = _pick("z", avoid)
        eps = _pick("eps", avoid | {z})
        cont = Box(CodeT((), make_chi([("r1", ret)]),
                         stack_of(phi_out, SVar(z)), MEps(eps)))
        entry = stack_of(list(reversed(params)) + phi_in, SVar(z))
        code = CodeT((z, eps), make_chi([("ra", cont)]), entry, MReg("ra"))
        return Box(code)
    from . import pretty

    raise KindError(f"not a source-language type: {pretty.ty(t)}")


def _arrow_parts(ann: Ty):
    if isinstance(ann, StackArrow):
        return list(ann.params), list(ann.phi_in), list(ann.phi_out), ann.ret
    return list(ann.params), [], [], ann.ret


def export_value(ann: Ty, v: Tm, heap: HeapDict, fresh: FreshFn) -> Tm:
    """Translate a source value of type ann into a target word.

    Tuples and function wrappers allocate into heap; the word that names
    them is returned.
    """
    if isinstance(ann, TyInt):
        if isinstance(v, IntVal):
            return v
        raise TranslationError("ill-typed", "expected an integer value")
    if isinstance(ann, TyUnit):
        if isinstance(v, UnitVal):
            return v
        raise TranslationError("ill-typed", "expected the unit value")
    if isinstance(ann, TyTuple):
        if not isinstance(v, TupleVal) or len(v.items) != len(ann.items):
            raise TranslationError("ill-typed", "expected a tuple value")
        words = [export_value(it, iv, heap, fresh)
                 for it, iv in zip(ann.items, v.items)]
        label = fresh("lt")
        heap[label] = ("box", words)
        return Loc(label)
    if isinstance(ann, Mu):
        if not isinstance(v, Fold):
            raise TranslationError("ill-typed", "expected a folded value")
        unrolled = substitute(ann.body, {(KIND_TYPE, ann.var): ann})
        inner = export_value(unrolled, v.e, heap, fresh)
        return Fold(translate_type(ann), inner)
    if isinstance(ann, (Arrow, StackArrow)):
        label = fresh("lexp")
        heap[label] = ("box", _export_block(ann, v, heap, fresh))
        return Loc(label)
    raise TranslationError("ill-typed", "value cannot cross at this type")


def _export_block(ann: Ty, v: Tm, heap: HeapDict, fresh: FreshFn) -> CodeBlock:
    """Build the code block that lets target code call an exported function.

    Layout on entry matches the translated type: arguments with the last
    on top, then any visible prefix, then the caller's abstract tail.  The
    body stashes the return address below the visible slots, imports the
    applied function with one shim per argument (the last shim frees the
    argument slots), then restores the return address and returns.
    """
    params, phi_in, phi_out, ret_ty = _arrow_parts(ann)
    n = len(params)
    m = len(phi_in)
    mo = len(phi_out)
    translated = translate_type(ann)
    code: CodeT = translated.psi
    z, eps = code.binders
    cont_ty = chi_get(code.chi, "ra")
    args_rev = [translate_type(p) for p in reversed(params)]
    ret_plus = translate_type(ret_ty)

    instrs = [Salloc(1)]
    for j in range(n + m):
        instrs.append(Sld("r2", j + 1))
        instrs.append(Sst(j, "r2"))
    instrs.append(Sst(n + m, "ra"))

    stashed = args_rev + list(phi_in) + [cont_ty]
    shims = []
    for i in range(1, n + 1):
        ti = params[i - 1]
        if i < n:
            body = seq_of([Sld("r1", n - i)],
                          Halt(translate_type(ti),
                               stack_of(stashed, SVar(z)), "r1"))
        else:
            after = list(phi_in) + [cont_ty]
            body = seq_of([Sld("r1", 0), Sfree(n)],
                          Halt(translate_type(ti),
                               stack_of(after, SVar(z)), "r1"))
        shims.append(Boundary(ti, Component(body, ())))

    zeta = _pick("zi", {z, eps})
    sigma0 = stack_of([cont_ty], SVar(z))
    instrs.append(ImportI("r1", sigma0, zeta, ret_ty, App(v, tuple(shims))))

    instrs.append(Sld("ra", mo))
    for j in reversed(range(mo)):
        instrs.append(Sld("r2", j))
        instrs.append(Sst(j + 1, "r2"))
    instrs.append(Sfree(1))
    body = seq_of(instrs, Ret("ra", "r1"))
    return CodeBlock(code.binders, code.chi, code.sigma, MReg("ra"), body)


def import_value(ann: Ty, w: Tm, heap: HeapDict, fresh: FreshFn) -> Tm:
    """Translate a target word at translated type ann back to a source value."""
    if isinstance(ann, TyInt):
        if isinstance(w, IntVal):
            return w
        raise TranslationError("ill-typed", "expected an integer word")
    if isinstance(ann, TyUnit):
        if isinstance(w, UnitVal):
            return w
        raise TranslationError("ill-typed", "expected the unit word")
    if isinstance(ann, TyTuple):
        if not isinstance(w, Loc):
            raise TranslationError("ill-typed", "expected a heap location")
        if w.name not in heap:
            raise TranslationError("dangling-location",
                                   f"location {w.name} is not allocated")
        nu, payload = heap[w.name]
        if nu != "box" or not isinstance(payload, list):
            raise TranslationError("ill-typed",
                                   "expected an immutable tuple location")
        if len(payload) != len(ann.items):
            raise TranslationError("ill-typed", "tuple width mismatch")
        items = [import_value(it, word, heap, fresh)
                 for it, word in zip(ann.items, payload)]
        return TupleVal(tuple(items))
    if isinstance(ann, Mu):
        if not isinstance(w, Fold):
            raise TranslationError("ill-typed", "expected a folded word")
        unrolled = substitute(ann.body, {(KIND_TYPE, ann.var): ann})
        return Fold(ann, import_value(unrolled, w.e, heap, fresh))
    if isinstance(ann, (Arrow, StackArrow)):
        return _import_lambda(ann, w, heap, fresh)
    raise TranslationError("ill-typed", "word cannot cross at this type")


def _import_lambda(ann: Ty, w: Tm, heap: HeapDict, fresh: FreshFn) -> Lam:
    """Build the lambda that lets source code call an imported code pointer.

    The body protects the visible prefix, exports each argument onto the
    stack (last argument on top), points the return register at a fresh
    halting block, and calls the pointer.
    """
    params, phi_in, phi_out, ret_ty = _arrow_parts(ann)
    n = len(params)
    ret_plus = translate_type(ret_ty)
    avoid = _names_in(ann, w)
    z = _pick("z", avoid)
    zeta = _pick("zi", avoid | {z})

    instrs = [Protect(tuple(phi_in), z)]
    pushed = []
    for i in range(1, n + 1):
        ti = params[i - 1]
        sigma0 = stack_of(pushed + list(phi_in), SVar(z))
        instrs.append(ImportI("r1", sigma0, zeta, ti, Var(f"x{i}")))
        instrs.append(Salloc(1))
        instrs.append(Sst(0, "r1"))
        pushed.insert(0, translate_type(ti))

    zend = _pick("z", _names_in(*phi_out, ret_plus))
    end_sigma = stack_of(phi_out, SVar(zend))
    end_label = fresh("lend")
    heap[end_label] = ("box", CodeBlock(
        (zend,), make_chi([("r1", ret_plus)]), end_sigma,
        MHalt(ret_plus, end_sigma),
        seq_of([], Halt(ret_plus, end_sigma, "r1"))))
    instrs.append(Mv("ra", Inst(Loc(end_label), SVar(z))))

    out_sigma = stack_of(phi_out, SVar(z))
    comp = Component(
        seq_of(instrs, Call(w, SVar(z), MHalt(ret_plus, out_sigma))), ())
    lam_params = tuple((f"x{i}", params[i - 1]) for i in range(1, n + 1))
    stack_ann = (tuple(phi_in), tuple(phi_out)) if isinstance(ann, StackArrow) else None
    return Lam(lam_params, Boundary(ret_ty, comp), stack_ann)
