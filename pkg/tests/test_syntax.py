"""Syntax-tree basics: alpha equality, substitution, helpers."""

from hypothesis import given

from conftest import source_terms, source_types
from ftal import syntax as S


def code(binders, chi, sigma, q):
    return S.CodeT(tuple(binders), tuple(chi), sigma, q)


def test_alpha_equal_ignores_binder_names():
    a = S.Mu("a", S.Arrow((S.TVar("a"),), S.TyInt()))
    b = S.Mu("b", S.Arrow((S.TVar("b"),), S.TyInt()))
    assert S.alpha_equal(a, b)


def test_alpha_equal_distinguishes_structure():
    assert not S.alpha_equal(S.TyInt(), S.TyUnit())
    assert not S.alpha_equal(
        S.Arrow((S.TyInt(),), S.TyInt()),
        S.Arrow((S.TyInt(), S.TyInt()), S.TyInt()))


def test_alpha_equal_code_types_with_renamed_stack_binder():
    a = code(["z", "eps"], [("r1", S.TyInt())], S.SVar("z"), S.MEps("eps"))
    b = code(["z9", "eps2"], [("r1", S.TyInt())], S.SVar("z9"),
             S.MEps("eps2"))
    assert S.alpha_equal(a, b)


def test_alpha_equal_code_types_free_vs_bound():
    a = code(["z"], [("r1", S.TyInt())], S.SVar("z"), S.MHalt(S.TyInt(),
                                                             S.SVar("z")))
    b = code(["z2"], [("r1", S.TyInt())], S.SVar("z"), S.MHalt(S.TyInt(),
                                                               S.SVar("z")))
    # In b the binder z2 is unused and z is free; not the same type.
    assert not S.alpha_equal(a, b)


def test_substitute_stack_variable():
    t = S.SCons(S.TyInt(), S.SVar("z"))
    got = S.substitute(t, {(S.KIND_STACK, "z"): S.SNil()})
    assert S.alpha_equal(got, S.SCons(S.TyInt(), S.SNil()))


def test_substitute_avoids_capture_under_code_binder():
    # Substituting z := int :: z2 into a type that binds z2 must rename
    # the bound z2 first.
    inner = code(["z2"], [("r1", S.TVar("b"))],
                 S.SCons(S.TyInt(), S.SVar("z")),
                 S.MHalt(S.TyInt(), S.SVar("z2")))
    got = S.substitute(inner, {(S.KIND_STACK, "z"):
                               S.SCons(S.TyUnit(), S.SVar("z2"))})
    want = code(["z3"], [("r1", S.TVar("b"))],
                S.SCons(S.TyInt(), S.SCons(S.TyUnit(), S.SVar("z2"))),
                S.MHalt(S.TyInt(), S.SVar("z3")))
    assert S.alpha_equal(got, want)


def test_subst_terms_avoids_capture_in_lambda():
    # (lam x. y)[y := x] must not capture the argument x.
    lam = S.Lam((("x", S.TyInt()),), S.Var("y"))
    got = S.subst_terms(lam, {"y": S.Var("x")})
    assert isinstance(got, S.Lam)
    (pname, _), = got.params
    assert pname != "x"
    assert got.body == S.Var("x")


def test_subst_terms_shadowing_stops_substitution():
    lam = S.Lam((("x", S.TyInt()),), S.Var("x"))
    got = S.subst_terms(lam, {"x": S.IntVal(1)})
    assert S.alpha_equal(got, lam)


def test_fresh_name_respects_avoid_set():
    avoid = {"z", "z#0", "z#1"}
    name = S.fresh_name("z", avoid)
    assert name == "z#2"
    assert S.fresh_name("z", set()) == "z#0"


def test_fresh_name_keeps_kind_prefix():
    assert S.kind_of_name(S.fresh_name("z", {"z#0"})) == S.KIND_STACK
    assert S.kind_of_name(S.fresh_name("eps", set())) == S.KIND_MARKER
    assert S.kind_of_name(S.fresh_name("a", set())) == S.KIND_TYPE


def test_make_chi_sorts_by_register_order():
    chi = S.make_chi({"ra": S.TyInt(), "r2": S.TyUnit(), "r1": S.TyInt()})
    assert [r for r, _ in chi] == ["r1", "r2", "ra"]


def test_seq_of_and_iteration():
    body = S.seq_of([S.Mv("r1", S.IntVal(1)), S.Salloc(1)],
                    S.Halt(S.TyInt(), S.SNil(), "r1"))
    assert isinstance(body, S.Seq)
    assert isinstance(body.tail, S.Seq)
    assert isinstance(body.tail.tail, S.Halt)


def test_stack_parts_splits_prefix_and_tail():
    s = S.SCons(S.TyInt(), S.SCons(S.TyUnit(), S.SVar("z")))
    prefix, tail = S.stack_parts(s)
    assert prefix == [S.TyInt(), S.TyUnit()]
    assert tail == S.SVar("z")
    prefix, tail = S.stack_parts(S.SNil())
    assert prefix == [] and tail == S.SNil()


def test_rename_locations_respects_component_shadowing():
    # A component that rebinds a label keeps its local meaning.
    inner = S.Component(S.Jmp(S.Loc("l")), (
        S.HeapBinding("l", "box",
                      S.CodeBlock((), (), S.SNil(), S.MHalt(S.TyInt(),
                                                            S.SNil()),
                                  S.Jmp(S.Loc("l")))),))
    outer = S.Boundary(S.TyInt(), inner)
    got = S.rename_locations(outer, {"l": "l#9"})
    assert got == outer


def test_rename_locations_rewrites_free_labels():
    got = S.rename_locations(S.Jmp(S.Loc("l")), {"l": "l#9"})
    assert got == S.Jmp(S.Loc("l#9"))


@given(source_types)
def test_alpha_equal_reflexive_on_types(t):
    assert S.alpha_equal(t, t)


@given(source_terms)
def test_alpha_equal_reflexive_on_terms(e):
    assert S.alpha_equal(e, e)


@given(source_types)
def test_substituting_an_unused_name_is_identity(t):
    got = S.substitute(t, {(S.KIND_TYPE, "zzfree"): S.TyInt()})
    assert S.alpha_equal(got, t)


def test_free_names_sees_through_binders():
    lam = S.Lam((("x", S.TyInt()),),
                S.Binop("+", S.Var("x"), S.Var("y")))
    assert S.free_names(lam) == {(S.KIND_TERM, "y")}


@given(source_terms)
def test_free_names_entries_are_kind_name_pairs(e):
    for entry in S.free_names(e):
        kind, name = entry
        assert isinstance(name, str) and kind in (
            S.KIND_TERM, S.KIND_TYPE, S.KIND_STACK, S.KIND_MARKER,
            S.KIND_LOC)
