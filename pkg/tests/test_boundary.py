"""Boundary translations: type translation shapes, exact first-order
value round trips, and extensional higher-order round trips."""

import itertools
import random

import pytest
from hypothesis import given, settings

from conftest import source_types
from ftal import boundary, machine, parser
from ftal import syntax as S
from ftal.errors import KindError, TranslationError


def tr(text: str) -> S.Ty:
    return boundary.translate_type(parser.parse_type(text))


def expect_ty(text: str) -> S.Ty:
    return parser.parse_type(text)


def scratch():
    heap = {}
    counter = itertools.count()
    return heap, lambda base: f"{base}#{next(counter)}"


def test_base_types_translate_to_themselves():
    assert tr("int") == S.TyInt()
    assert tr("unit") == S.TyUnit()


def test_tuple_translates_to_boxed_tuple():
    assert S.alpha_equal(tr("<int, unit>"), expect_ty("box <int, unit>"))
    assert S.alpha_equal(tr("<int, <int>>"),
                         expect_ty("box <int, box <int>>"))


def test_recursive_type_translates_through_mu():
    assert S.alpha_equal(tr("mu a. <a, int>"),
                         expect_ty("mu a. box <a, int>"))


def test_arrow_translation_shape():
    got = tr("(int) -> int")
    want = expect_ty(
        "box code[z, eps]{ra: box code[]{r1: int; z} eps; int :: z} ra")
    assert S.alpha_equal(got, want)


def test_arrow_translation_puts_last_argument_on_top():
    got = tr("(int, unit) -> int")
    want = expect_ty(
        "box code[z, eps]{ra: box code[]{r1: int; z} eps; "
        "unit :: int :: z} ra")
    assert S.alpha_equal(got, want)


def test_stack_arrow_translation_threads_both_prefixes():
    got = tr("(int)[int :: . => unit :: .] -> unit")
    want = expect_ty(
        "box code[z, eps]{ra: box code[]{r1: unit; unit :: z} eps; "
        "int :: int :: z} ra")
    assert S.alpha_equal(got, want)


def test_nested_arrow_translation_is_closed():
    got = tr("((int) -> int) -> int")
    assert S.free_names(got) == frozenset()


@pytest.mark.parametrize("text", (
    "box <int>",
    "ref <int>",
    "exists a. int",
    "code[]{r1: int; *} ret(int, *)",
))
def test_target_only_types_are_rejected(text):
    with pytest.raises(KindError):
        tr(text)


@settings(deadline=None, max_examples=40)
@given(source_types)
def test_translating_a_translation_fails_unless_fixed(t):
    # The image of a non-trivial source type is a target type; feeding
    # arrows or tuples back in must be rejected.
    image = boundary.translate_type(t)
    if S.alpha_equal(image, t):
        return
    with pytest.raises(KindError):
        boundary.translate_type(image)


# -- value round trips ------------------------------------------------------


@pytest.mark.parametrize("ann,value", (
    ("int", S.IntVal(5)),
    ("int", S.IntVal(-12345678901234567890)),
    ("unit", S.UnitVal()),
))
def test_flat_values_round_trip_identically(ann, value):
    heap, fresh = scratch()
    t = parser.parse_type(ann)
    w = boundary.export_value(t, value, heap, fresh)
    assert w == value
    assert boundary.import_value(t, w, heap, fresh) == value


def test_tuple_round_trips_exactly():
    heap, fresh = scratch()
    t = parser.parse_type("<int, <unit, int>>")
    v = S.TupleVal((S.IntVal(1),
                    S.TupleVal((S.UnitVal(), S.IntVal(2)))))
    w = boundary.export_value(t, v, heap, fresh)
    assert isinstance(w, S.Loc)
    back = boundary.import_value(t, w, heap, fresh)
    assert S.alpha_equal(back, v)


def test_folded_value_round_trips_exactly():
    heap, fresh = scratch()
    t = parser.parse_type("mu a. int")
    v = S.Fold(t, S.IntVal(3))
    w = boundary.export_value(t, v, heap, fresh)
    back = boundary.import_value(t, w, heap, fresh)
    assert S.alpha_equal(back, v)


def test_export_of_mistyped_value_is_ill_typed():
    heap, fresh = scratch()
    with pytest.raises(TranslationError) as exc:
        boundary.export_value(S.TyInt(), S.UnitVal(), heap, fresh)
    assert exc.value.kind == "ill-typed"


def test_import_through_dangling_location_fails():
    heap, fresh = scratch()
    t = parser.parse_type("<int>")
    with pytest.raises(TranslationError) as exc:
        boundary.import_value(t, S.Loc("nowhere"), heap, fresh)
    assert exc.value.kind == "dangling-location"


def test_import_of_mutable_binding_at_tuple_type_fails():
    heap, fresh = scratch()
    heap["cell#0"] = ("ref", [S.IntVal(1)])
    with pytest.raises(TranslationError):
        boundary.import_value(parser.parse_type("<int>"),
                              S.Loc("cell#0"), heap, fresh)


# -- higher-order, extensional ----------------------------------------------


def _through_boundary(fn_src: str, ann_text: str, arg: int) -> machine.Outcome:
    """Push fn through an export/import pair and apply it to arg."""
    ann = parser.parse_type(ann_text)
    fn = parser.parse_expr(fn_src)
    body = S.Seq(
        S.ImportI("r1", S.SNil(), "z", ann, fn),
        S.Halt(boundary.translate_type(ann), S.SNil(), "r1"))
    sandwich = S.Boundary(ann, S.Component(body, ()))
    prog = S.Program("F", S.App(sandwich, (S.IntVal(arg),)))
    return machine.run_program(prog, 100000)


def test_higher_order_round_trip_is_extensional():
    inputs = random.Random(0).sample(range(-100, 100), 20)
    for n in inputs:
        out = _through_boundary("lam (x: int). x + 1", "(int) -> int", n)
        assert out.kind == "f-value"
        assert out.value == S.IntVal(n + 1)


def test_higher_order_round_trip_two_arguments():
    for a, b in ((3, 4), (0, 9), (-5, 5)):
        ann = parser.parse_type("(int, int) -> int")
        fn = parser.parse_expr("lam (x: int, y: int). x - y")
        body = S.Seq(
            S.ImportI("r1", S.SNil(), "z", ann, fn),
            S.Halt(boundary.translate_type(ann), S.SNil(), "r1"))
        sandwich = S.Boundary(ann, S.Component(body, ()))
        prog = S.Program("F", S.App(sandwich, (S.IntVal(a), S.IntVal(b))))
        out = machine.run_program(prog, 100000)
        assert out.kind == "f-value" and out.value == S.IntVal(a - b)
