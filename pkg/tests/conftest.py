"""Shared fixtures and hypothesis strategies for the test suite."""

import pathlib

import pytest
from hypothesis import strategies as st

from ftal import syntax as S

CORPUS_DIR = pathlib.Path(__file__).resolve().parents[1] / "src/ftal/corpus"

PROGRAM_NAMES = (
    "call_to_call",
    "jit",
    "basic_blocks_f1",
    "basic_blocks_f2",
    "factorial_f",
    "factorial_t",
    "withref",
    "import_one_plus_one",
    "push7_stack_lambda",
)

ALL_FTAL = PROGRAM_NAMES + ("identity", "succ")


@pytest.fixture(scope="session")
def corpus_dir() -> pathlib.Path:
    return CORPUS_DIR


def corpus_text(name: str) -> str:
    return (CORPUS_DIR / f"{name}.ftal").read_text()


# -- strategies -------------------------------------------------------------

# Closed source-language types (the grammar translate_type accepts).
source_types = st.deferred(lambda: st.one_of(
    st.just(S.TyUnit()),
    st.just(S.TyInt()),
    st.builds(lambda ts: S.TyTuple(tuple(ts)),
              st.lists(source_types, min_size=1, max_size=3)),
    st.builds(lambda ps, r: S.Arrow(tuple(ps), r),
              st.lists(source_types, max_size=3), source_types),
    st.builds(lambda b: S.Mu("a", b), source_types),
))

var_names = st.sampled_from(("x", "y", "w", "v"))

# Small source terms; variables may be free (the parser does not scope).
source_terms = st.deferred(lambda: st.one_of(
    st.integers(min_value=-999, max_value=999).map(S.IntVal),
    st.just(S.UnitVal()),
    var_names.map(S.Var),
    st.builds(S.Binop, st.sampled_from(("+", "-", "*")),
              source_terms, source_terms),
    st.builds(S.If0, source_terms, source_terms, source_terms),
    st.builds(lambda ps, b: S.Lam(tuple(ps), b),
              st.lists(st.tuples(var_names, source_types),
                       max_size=2, unique_by=lambda p: p[0]),
              source_terms),
    st.builds(lambda f, a: S.App(f, tuple(a)),
              source_terms, st.lists(source_terms, max_size=2)),
    st.builds(lambda ts: S.TupleVal(tuple(ts)),
              st.lists(source_terms, min_size=1, max_size=3)),
    st.builds(S.Proj, st.integers(min_value=0, max_value=2), source_terms),
    st.builds(S.Fold, st.builds(lambda b: S.Mu("a", b), source_types),
              source_terms),
    st.builds(S.Unfold, source_terms),
    st.builds(S.Let, var_names, st.none(), source_terms, source_terms),
    st.builds(S.SeqE, source_terms, source_terms),
))
