"""Mutated programs for the negative typing suite.

Each rejected mutation is a complete program with exactly one planted
defect, paired with the error code the checker must raise and a fragment
of the message.  The accepted mutations are benign edits of bundled
programs that must still typecheck and run; the safety suite executes
them.
"""

# A reusable continuation shape: a block expecting an int in r1 on a
# caller-supplied stack tail.
_CONT = "box code[]{r1: int; z} eps"

REJECTED = (
    # (name, expected error code, message fragment, program source)
    ("jmp_to_different_return_marker", "E-SEQ", "marker",
     """entry T
(
  mv r1, 0;
  halt[int, *] r1
, where
  lA -> code[]{r1: int; box code[]{r1: int; *} ret(int, *) :: *} ret(int, *).
    jmp lB,
  lB -> code[]{r1: int; box code[]{r1: int; *} ret(int, *) :: *} 0.
    sld ra, 0;
    sfree 1;
    ret ra {r1}
)
"""),
    ("halt_without_halting_marker", "E-SEQ", "halt",
     f"""entry T
(
  mv r1, 0;
  halt[int, *] r1
, where
  lA -> code[z, eps]{{r1: int, ra: {_CONT}; z}} ra.
    halt[int, z] r1
)
"""),
    ("ret_with_stack_index_marker", "E-SEQ", "must be in a register",
     """entry T
(
  mv r1, 0;
  halt[int, *] r1
, where
  lB -> code[]{r1: int; box code[]{r1: int; *} ret(int, *) :: *} 0.
    ret ra {r1}
)
"""),
    ("call_while_marker_in_register", "E-SEQ", "call",
     f"""entry T
(
  mv r1, 0;
  halt[int, *] r1
, where
  lA -> code[z, eps]{{ra: {_CONT}; z}} ra.
    call lT {{z, 0}},
  lT -> code[z, eps]{{ra: {_CONT}; z}} ra.
    mv r1, 1;
    ret ra {{r1}}
)
"""),
    ("call_with_wrong_return_index", "E-SEQ", "",
     f"""entry T
(
  mv ra, l1ret;
  call l1 {{*, ret(int, *)}}
, where
  l1 -> code[z, eps]{{ra: {_CONT}; z}} ra.
    salloc 1;
    sst 0, ra;
    mv ra, l2ret[z, eps];
    call l2 {{{_CONT} :: z, 1}},
  l1ret -> code[]{{r1: int; *}} ret(int, *).
    halt[int, *] r1,
  l2 -> code[z, eps]{{ra: {_CONT}; z}} ra.
    mv r1, 2;
    jmp l2aux[z, eps],
  l2aux -> code[z, eps]{{r1: int, ra: {_CONT}; z}} ra.
    ret ra {{r1}},
  l2ret -> code[z, eps]{{r1: int; {_CONT} :: z}} 0.
    sld ra, 0;
    sfree 1;
    ret ra {{r1}}
)
"""),
    ("mv_into_marker_register", "E-SEQ", "marker",
     f"""entry T
(
  mv r1, 0;
  halt[int, *] r1
, where
  lA -> code[z, eps]{{ra: {_CONT}; z}} ra.
    mv ra, 5;
    mv r1, 1;
    ret ra {{r1}}
)
"""),
    ("st_into_box_tuple", "E-SEQ", "immutable",
     """entry T
(
  mv r1, 7;
  salloc 1;
  sst 0, r1;
  balloc r2, 1;
  mv r3, 9;
  st r2[0], r3;
  halt[int, *] r1
)
"""),
    ("protect_hiding_stack_index_marker", "E-WFRET", "protect",
     f"""entry T
(
  mv r1, 0;
  halt[int, *] r1
, where
  lA -> code[z, eps]{{ra: {_CONT}; z}} ra.
    salloc 1;
    sst 0, ra;
    protect ., z2;
    sld ra, 0;
    sfree 1;
    mv r1, 1;
    ret ra {{r1}}
)
"""),
    ("register_file_subtype_violation", "E-SEQ", "regist",
     """entry T
(
  mv r1, 0;
  halt[int, *] r1
, where
  lA -> code[]{r1: int; *} ret(int, *).
    jmp lB,
  lB -> code[]{r1: int, r5: int; *} ret(int, *).
    halt[int, *] r1
)
"""),
    ("import_exposing_marker_slot", "E-SEQ", "import",
     f"""entry T
(
  mv r1, 0;
  halt[int, *] r1
, where
  lA -> code[z, eps]{{ra: {_CONT}; z}} ra.
    salloc 1;
    sst 0, ra;
    import r1, z as z2, int TF{{ 3 }};
    sld ra, 1;
    mv r1, 1;
    ret ra {{r1}}
)
"""),
    ("sfree_past_marker", "E-SEQ", "sfree",
     f"""entry T
(
  mv r1, 0;
  halt[int, *] r1
, where
  lA -> code[z, eps]{{ra: {_CONT}; z}} ra.
    salloc 1;
    sst 0, ra;
    sfree 1;
    mv r1, 1;
    ret ra {{r1}}
)
"""),
    ("uninstantiated_jump_target", "E-SEQ", "instantiat",
     """entry T
(
  mv r1, 0;
  halt[int, *] r1
, where
  lA -> code[]{r1: int; *} ret(int, *).
    jmp lB,
  lB -> code[z]{r1: int; z} ret(int, z).
    halt[int, z] r1
)
"""),
    # Extra rejections beyond the required twelve.
    ("sst_overwriting_marker_slot", "E-SEQ", "overwrite",
     f"""entry T
(
  mv r1, 0;
  halt[int, *] r1
, where
  lA -> code[z, eps]{{r1: int, ra: {_CONT}; z}} ra.
    salloc 1;
    sst 0, ra;
    sst 0, r1;
    sld ra, 0;
    sfree 1;
    ret ra {{r1}}
)
"""),
    ("unbound_source_variable", "E-EXPR", "unbound",
     "lam (x: int). y\n"),
    ("if0_branch_type_mismatch", "E-EXPR", "",
     "lam (x: int). if0 x 1 ()\n"),
    ("application_arity_mismatch", "E-EXPR", "",
     "(lam (x: int, y: int). x)(1)\n"),
    ("boundary_halt_type_mismatch", "E-SEQ", "",
     """FT[int](
  mv r1, ();
  halt[unit, *] r1
)
"""),
    ("duplicate_heap_labels", "E-HEAP", "",
     """entry T
(
  mv r1, 0;
  halt[int, *] r1
, where
  lA -> code[]{r1: int; *} ret(int, *).
    halt[int, *] r1,
  lA -> code[]{r1: int; *} ret(int, *).
    halt[int, *] r1
)
"""),
    ("dangling_heap_label", "E-VAL", "label",
     """entry T
(
  jmp lmissing
)
"""),
)

# Benign edits: still typecheck, still run without getting stuck.
ACCEPTED = (
    ("call_to_call_different_constant",
     """entry T
(
  mv ra, l1ret;
  call l1 {*, ret(int, *)}
, where
  l1 -> code[z, eps]{ra: box code[]{r1: int; z} eps; z} ra.
    salloc 1;
    sst 0, ra;
    mv ra, l2ret[z, eps];
    call l2 {box code[]{r1: int; z} eps :: z, 0},
  l1ret -> code[]{r1: int; *} ret(int, *).
    halt[int, *] r1,
  l2 -> code[z, eps]{ra: box code[]{r1: int; z} eps; z} ra.
    mv r1, 3;
    jmp l2aux[z, eps],
  l2aux -> code[z, eps]{r1: int, ra: box code[]{r1: int; z} eps; z} ra.
    ret ra {r1},
  l2ret -> code[z, eps]{r1: int; box code[]{r1: int; z} eps :: z} 0.
    sld ra, 0;
    sfree 1;
    ret ra {r1}
)
"""),
    ("import_different_sum",
     """FT[int](
  import r1, * as z, int TF{ 2 + 3 };
  halt[int, *] r1
)
"""),
    ("scratch_register_shuffle",
     """entry T
(
  mv r2, 20;
  mv r3, 22;
  add r1, r2, r3;
  mv r4, r1;
  mv r1, r4;
  halt[int, *] r1
)
"""),
    ("stack_spill_and_reload",
     """entry T
(
  mv r1, 6;
  salloc 2;
  sst 0, r1;
  sst 1, r1;
  sld r2, 1;
  sfree 2;
  mul r1, r2, 7;
  halt[int, *] r1
)
"""),
)
