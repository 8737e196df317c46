"""Concrete syntax reader.

The lexer tracks byte offset, line, and column for every token. The parser
is plain recursive descent; each syntactic category is predicted by its
first token, so no backtracking is needed except a bounded save/restore in
instantiation arguments (where a type and a stack can begin identically).

Conventions baked into the grammar:
  - names starting with ``z`` are stack variables, ``eps`` marker variables;
  - ``*`` is the empty stack, ``.`` terminates a stack prefix;
  - projection ``pi.i`` is 0-based;
  - newlines are whitespace and ``;`` separators are optional;
  - comments run from ``--`` to end of line;
  - a bare identifier in an instruction operand is a heap label unless it is
    a register name;
  - a missing ``entry`` header means the file is an F program.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import syntax as S

KEYWORDS = {
    "unit", "int", "exists", "mu", "ref", "box", "code", "lam", "if0", "pi",
    "fold", "unfold", "pack", "as", "let", "in", "where", "entry", "import",
    "protect", "salloc", "sfree", "sld", "sst", "ld", "st", "mv", "add",
    "mul", "sub", "bnz", "jmp", "call", "ret", "halt", "ralloc", "balloc",
    "unpack", "FT", "TF", "out",
}

PUNCT = (
    "::", "->", "=>", "(", ")", "[", "]", "{", "}", "<", ">", ",", ";", ":",
    ".", "*", "+", "-", "=",
)


@dataclass(frozen=True)
class Token:
    kind: str  # keyword/punct text, or "INT", "IDENT", "EOF"
    text: str
    offset: int
    line: int
    col: int


class ParseError(Exception):
    def __init__(self, message: str, offset: int, line: int, col: int, expected: tuple = ()):
        super().__init__(message)
        self.message = message
        self.offset = offset
        self.line = line
        self.col = col
        self.expected = tuple(expected)

    def display(self) -> str:
        want = f" (expected {', '.join(self.expected)})" if self.expected else ""
        return f"{self.line}:{self.col}: {self.message}{want}"

    def __str__(self) -> str:
        return self.display()


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident_char(c: str) -> bool:
    return c.isalnum() or c in "_'#"


def lex(src: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if src.startswith("--", i):
            while i < n and src[i] != "\n":
                i += 1
            continue
        start, sl, sc = i, line, col
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Token("INT", src[i:j], start, sl, sc))
            col += j - i
            i = j
            continue
        if _is_ident_start(c):
            j = i
            while j < n and _is_ident_char(src[j]):
                j += 1
            text = src[i:j]
            kind = text if text in KEYWORDS else "IDENT"
            toks.append(Token(kind, text, start, sl, sc))
            col += j - i
            i = j
            continue
        for p in PUNCT:
            if src.startswith(p, i):
                toks.append(Token(p, p, start, sl, sc))
                i += len(p)
                col += len(p)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", start, sl, sc)
    toks.append(Token("EOF", "", n, line, col))
    return toks


class Parser:
    def __init__(self, src: str):
        self.toks = lex(src)
        self.pos = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def at(self, *kinds: str) -> bool:
        return self.peek().kind in kinds

    def accept(self, kind: str) -> Token | None:
        if self.at(kind):
            return self.next()
        return None

    def expect(self, kind: str, what: str = "") -> Token:
        t = self.peek()
        if t.kind != kind:
            got = t.text or "end of input"
            raise ParseError(
                f"unexpected {got!r}" + (f" in {what}" if what else ""),
                t.offset, t.line, t.col, expected=(kind,),
            )
        return self.next()

    def fail(self, message: str, expected: tuple = ()):
        t = self.peek()
        raise ParseError(message, t.offset, t.line, t.col, expected=expected)

    def ident(self, what: str) -> str:
        t = self.peek()
        if t.kind != "IDENT":
            self.fail(f"expected {what}", expected=("IDENT",))
        return self.next().text

    # -- types -------------------------------------------------------------

    def type_(self) -> S.Ty:
        t = self.peek()
        match t.kind:
            case "unit":
                self.next()
                return S.TyUnit()
            case "int":
                self.next()
                return S.TyInt()
            case "mu":
                self.next()
                v = self.ident("type variable")
                self.expect(".", "mu type")
                return S.Mu(v, self.type_())
            case "exists":
                self.next()
                v = self.ident("type variable")
                self.expect(".", "exists type")
                return S.Exists(v, self.type_())
            case "ref":
                self.next()
                return S.Ref(self.tuple_type())
            case "box":
                self.next()
                if self.at("code"):
                    return S.Box(self.code_type())
                return S.Box(self.tuple_type())
            case "code":
                return self.code_type()
            case "<":
                return self.tuple_type()
            case "(":
                return self.arrow_or_paren_type()
            case "IDENT":
                name = self.next().text
                if S.kind_of_name(name) != S.KIND_TYPE:
                    raise ParseError(
                        f"{name!r} is a {S.kind_of_name(name)} variable, not a type",
                        t.offset, t.line, t.col,
                    )
                return S.TVar(name)
        self.fail("expected a type", expected=("type",))

    def tuple_type(self) -> S.TyTuple:
        self.expect("<", "tuple type")
        items = []
        if not self.at(">"):
            items.append(self.type_())
            while self.accept(","):
                items.append(self.type_())
        self.expect(">", "tuple type")
        return S.TyTuple(tuple(items))

    def code_type(self) -> S.CodeT:
        self.expect("code")
        binders, chi, sigma, q = self.code_signature()
        return S.CodeT(binders, chi, sigma, q)

    def code_signature(self):
        self.expect("[", "code type")
        binders = []
        if not self.at("]"):
            binders.append(self.ident("binder"))
            while self.accept(","):
                binders.append(self.ident("binder"))
        self.expect("]", "code type")
        self.expect("{", "code type")
        chi = []
        if not self.at(";"):
            chi.append(self.chi_entry())
            while self.accept(","):
                chi.append(self.chi_entry())
        self.expect(";", "code type")
        sigma = self.stack()
        self.expect("}", "code type")
        q = self.marker()
        return tuple(binders), S.make_chi(chi), sigma, q

    def chi_entry(self):
        t = self.peek()
        name = self.ident("register")
        if not S.is_register(name):
            raise ParseError(f"{name!r} is not a register", t.offset, t.line, t.col)
        self.expect(":", "register file entry")
        return (name, self.type_())

    def arrow_or_paren_type(self) -> S.Ty:
        self.expect("(")
        params = []
        if not self.at(")"):
            params.append(self.type_())
            while self.accept(","):
                params.append(self.type_())
        self.expect(")", "arrow type")
        if self.at("["):
            self.next()
            phi_in = self.phi()
            self.expect("=>", "stack arrow")
            phi_out = self.phi()
            self.expect("]", "stack arrow")
            self.expect("->", "stack arrow")
            return S.StackArrow(tuple(params), phi_in, phi_out, self.type_())
        if self.at("->"):
            self.next()
            return S.Arrow(tuple(params), self.type_())
        if len(params) == 1:
            return params[0]
        self.fail("parenthesized type list must be followed by an arrow", expected=("->",))

    def phi(self) -> tuple[S.Ty, ...]:
        items = []
        while True:
            if self.accept("."):
                return tuple(items)
            items.append(self.type_())
            self.expect("::", "stack prefix")

    def stack(self) -> S.Stk:
        t = self.peek()
        if t.kind == "*":
            self.next()
            return S.SNil()
        if t.kind == "IDENT" and S.kind_of_name(t.text) == S.KIND_STACK:
            self.next()
            return S.SVar(t.text)
        head = self.type_()
        self.expect("::", "stack type")
        return S.SCons(head, self.stack())

    # -- markers and instantiation arguments -------------------------------

    def marker(self) -> S.Mk:
        t = self.peek()
        if t.kind == "INT":
            return S.MIdx(int(self.next().text))
        if t.kind == "out":
            self.next()
            return S.MOut()
        if t.kind == "ret":
            self.next()
            self.expect("(", "halting marker")
            tau = self.type_()
            self.expect(",", "halting marker")
            sigma = self.stack()
            self.expect(")", "halting marker")
            return S.MHalt(tau, sigma)
        if t.kind == "IDENT":
            if S.is_register(t.text):
                self.next()
                return S.MReg(t.text)
            if S.kind_of_name(t.text) == S.KIND_MARKER:
                self.next()
                return S.MEps(t.text)
        self.fail("expected a return marker", expected=("marker",))

    def omega(self) -> S.Node:
        t = self.peek()
        if t.kind == "*":
            self.next()
            return S.SNil()
        if t.kind in ("INT", "out", "ret"):
            return self.marker()
        if t.kind == "IDENT":
            if S.is_register(t.text):
                return self.marker()
            k = S.kind_of_name(t.text)
            if k == S.KIND_MARKER:
                return self.marker()
            if k == S.KIND_STACK:
                self.next()
                return S.SVar(t.text)
        ty = self.type_()
        if self.at("::"):
            self.next()
            return S.SCons(ty, self.stack())
        return ty

    # -- F expressions ------------------------------------------------------

    def expr(self) -> S.Tm:
        first = self.let_level()
        if self.accept(";"):
            return S.SeqE(first, self.expr())
        return first

    def let_level(self) -> S.Tm:
        if self.at("let"):
            self.next()
            v = self.ident("binding name")
            ann = None
            if self.accept(":"):
                ann = self.type_()
            self.expect("=", "let binding")
            rhs = self.expr()
            self.expect("in", "let binding")
            return S.Let(v, ann, rhs, self.expr())
        if self.at("lam"):
            return self.lam()
        return self.arith()

    def lam(self) -> S.Lam:
        self.expect("lam")
        stack = None
        if self.accept("["):
            phi_in = self.phi()
            self.expect("=>", "stack lambda")
            phi_out = self.phi()
            self.expect("]", "stack lambda")
            stack = (phi_in, phi_out)
        self.expect("(", "lambda parameters")
        params = []
        if not self.at(")"):
            while True:
                x = self.ident("parameter name")
                self.expect(":", "parameter annotation")
                params.append((x, self.type_()))
                if not self.accept(","):
                    break
        self.expect(")", "lambda parameters")
        self.expect(".", "lambda")
        return S.Lam(tuple(params), self.expr(), stack)

    def arith(self) -> S.Tm:
        left = self.mult()
        while self.at("+", "-"):
            op = self.next().kind
            left = S.Binop(op, left, self.mult())
        return left

    def mult(self) -> S.Tm:
        left = self.prefix_expr()
        while self.at("*"):
            self.next()
            left = S.Binop("*", left, self.prefix_expr())
        return left

    def prefix_expr(self) -> S.Tm:
        # Operands of the prefix forms are single atoms: applications and
        # arithmetic must be parenthesized, so `if0 x 1 (f(x))` reads as
        # intended instead of `1` being applied to the group.
        t = self.peek()
        match t.kind:
            case "if0":
                self.next()
                return S.If0(self.atom_expr(), self.atom_expr(), self.atom_expr())
            case "fold":
                self.next()
                ann = self.type_()
                return S.Fold(ann, self.atom_expr())
            case "unfold":
                self.next()
                return S.Unfold(self.atom_expr())
            case "pi":
                self.next()
                self.expect(".", "projection")
                idx = int(self.expect("INT", "projection").text)
                return S.Proj(idx, self.atom_expr())
        return self.app_expr()

    def app_expr(self) -> S.Tm:
        e = self.atom_expr()
        while True:
            if self.at("("):
                self.next()
                args = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.accept(","):
                        args.append(self.expr())
                self.expect(")", "application")
                e = S.App(e, tuple(args))
            elif self.at("["):
                self.next()
                e = S.Inst(e, self.omega())
                while self.accept(","):
                    e = S.Inst(e, self.omega())
                self.expect("]", "instantiation")
            else:
                return e

    def atom_expr(self) -> S.Tm:
        t = self.peek()
        match t.kind:
            case "INT":
                return S.IntVal(int(self.next().text))
            case "-":
                self.next()
                return S.IntVal(-int(self.expect("INT", "integer literal").text))
            case "IDENT":
                return S.Var(self.next().text)
            case "FT":
                self.next()
                self.expect("[", "boundary annotation")
                ann = self.type_()
                self.expect("]", "boundary annotation")
                return S.Boundary(ann, self.component())
            case "lam":
                return self.lam()
            case "(":
                self.next()
                if self.accept(")"):
                    return S.UnitVal()
                first = self.expr()
                if self.accept(","):
                    items = [first]
                    if not self.at(")"):
                        items.append(self.expr())
                        while self.accept(","):
                            items.append(self.expr())
                    self.expect(")", "tuple")
                    return S.TupleVal(tuple(items))
                self.expect(")", "parenthesized expression")
                return first
        self.fail("expected an expression", expected=("expression",))

    # -- T small and word values --------------------------------------------

    def u_value(self) -> S.Tm:
        t = self.peek()
        base: S.Tm
        match t.kind:
            case "INT":
                base = S.IntVal(int(self.next().text))
            case "-":
                self.next()
                base = S.IntVal(-int(self.expect("INT", "integer literal").text))
            case "(":
                self.next()
                self.expect(")", "unit value")
                base = S.UnitVal()
            case "pack":
                self.next()
                self.expect("<", "pack")
                wit = self.type_()
                self.expect(",", "pack")
                val = self.u_value()
                self.expect(">", "pack")
                self.expect("as", "pack")
                base = S.Pack(wit, val, self.type_())
            case "fold":
                self.next()
                ann = self.type_()
                base = S.Fold(ann, self.u_value())
            case "IDENT":
                name = self.next().text
                base = S.Reg(name) if S.is_register(name) else S.Loc(name)
            case _:
                self.fail("expected an operand", expected=("operand",))
        while self.at("["):
            self.next()
            base = S.Inst(base, self.omega())
            while self.accept(","):
                base = S.Inst(base, self.omega())
            self.expect("]", "instantiation")
        return base

    def register(self, what: str = "register") -> str:
        t = self.peek()
        name = self.ident(what)
        if not S.is_register(name):
            raise ParseError(f"{name!r} is not a register", t.offset, t.line, t.col)
        return name

    def int_lit(self, what: str) -> int:
        return int(self.expect("INT", what).text)

    # -- instructions --------------------------------------------------------

    def iseq(self) -> S.ISeq:
        instrs: list[S.Instr] = []
        while True:
            t = self.peek()
            match t.kind:
                case "jmp":
                    self.next()
                    term: S.ISeq = S.Jmp(self.u_value())
                case "call":
                    self.next()
                    u = self.u_value()
                    self.expect("{", "call")
                    sigma0 = self.stack()
                    self.expect(",", "call")
                    qret = self.marker()
                    self.expect("}", "call")
                    term = S.Call(u, sigma0, qret)
                case "ret":
                    self.next()
                    if self.at("ret"):
                        # ret ret(t, s) {r} is the halting form
                        q = self.marker()
                        self.expect("{", "ret")
                        r = self.register()
                        self.expect("}", "ret")
                        term = S.Halt(q.tau, q.sigma, r)
                    else:
                        r = self.register()
                        self.expect("{", "ret")
                        r2 = self.register()
                        self.expect("}", "ret")
                        term = S.Ret(r, r2)
                case "halt":
                    self.next()
                    self.expect("[", "halt")
                    ann = self.type_()
                    self.expect(",", "halt")
                    sigma = self.stack()
                    self.expect("]", "halt")
                    term = S.Halt(ann, sigma, self.register())
                case _:
                    instrs.append(self.instruction())
                    self.accept(";")
                    continue
            self.accept(";")
            return S.seq_of(instrs, term)

    def instruction(self) -> S.Instr:
        t = self.peek()
        match t.kind:
            case "add" | "sub" | "mul":
                op = self.next().kind
                rd = self.register()
                self.expect(",", "arithmetic")
                rs = self.register()
                self.expect(",", "arithmetic")
                return S.Aop(op, rd, rs, self.u_value())
            case "bnz":
                self.next()
                r = self.register()
                self.expect(",", "bnz")
                return S.Bnz(r, self.u_value())
            case "ld":
                self.next()
                rd = self.register()
                self.expect(",", "ld")
                rs = self.register()
                self.expect("[", "ld")
                idx = self.int_lit("tuple index")
                self.expect("]", "ld")
                return S.Ld(rd, rs, idx)
            case "st":
                self.next()
                rd = self.register()
                self.expect("[", "st")
                idx = self.int_lit("tuple index")
                self.expect("]", "st")
                self.expect(",", "st")
                return S.St(rd, idx, self.register())
            case "ralloc":
                self.next()
                rd = self.register()
                self.expect(",", "ralloc")
                return S.Ralloc(rd, self.int_lit("slot count"))
            case "balloc":
                self.next()
                rd = self.register()
                self.expect(",", "balloc")
                return S.Balloc(rd, self.int_lit("slot count"))
            case "mv":
                self.next()
                rd = self.register()
                self.expect(",", "mv")
                return S.Mv(rd, self.u_value())
            case "salloc":
                self.next()
                return S.Salloc(self.int_lit("slot count"))
            case "sfree":
                self.next()
                return S.Sfree(self.int_lit("slot count"))
            case "sld":
                self.next()
                rd = self.register()
                self.expect(",", "sld")
                return S.Sld(rd, self.int_lit("stack index"))
            case "sst":
                self.next()
                idx = self.int_lit("stack index")
                self.expect(",", "sst")
                return S.Sst(idx, self.register())
            case "unpack":
                self.next()
                self.expect("<", "unpack")
                tv = self.ident("type variable")
                self.expect(",", "unpack")
                rd = self.register()
                self.expect(">", "unpack")
                return S.Unpack(tv, rd, self.u_value())
            case "unfold":
                self.next()
                rd = self.register()
                self.expect(",", "unfold")
                return S.UnfoldI(rd, self.u_value())
            case "protect":
                self.next()
                p = self.phi()
                self.expect(",", "protect")
                z = self.ident("stack variable")
                if S.kind_of_name(z) != S.KIND_STACK:
                    self.fail(f"{z!r} is not a stack variable name")
                return S.Protect(p, z)
            case "import":
                self.next()
                rd = self.register()
                self.expect(",", "import")
                sigma0 = self.stack()
                self.expect("as", "import")
                z = self.ident("stack variable")
                if S.kind_of_name(z) != S.KIND_STACK:
                    self.fail(f"{z!r} is not a stack variable name")
                self.expect(",", "import")
                ann = self.type_()
                self.expect("TF", "import")
                self.expect("{", "import")
                body = self.expr()
                self.expect("}", "import")
                return S.ImportI(rd, sigma0, z, ann, body)
        self.fail("expected an instruction", expected=("instruction",))

    # -- components and heap fragments ---------------------------------------

    def component(self) -> S.Component:
        self.expect("(", "component")
        body = self.iseq()
        heap: list[S.HeapBinding] = []
        if self.accept(","):
            self.expect("where", "component heap")
            while not self.at(")"):
                heap.append(self.heap_binding())
                if not self.accept(","):
                    break
        self.expect(")", "component")
        return S.Component(body, tuple(heap))

    def heap_binding(self) -> S.HeapBinding:
        label = self.ident("heap label")
        self.expect("->", "heap binding")
        t = self.peek()
        if t.kind == "code":
            self.next()
            binders, chi, sigma, q = self.code_signature()
            self.expect(".", "code block")
            body = self.iseq()
            return S.HeapBinding(label, "box", S.CodeBlock(binders, chi, sigma, q, body))
        if t.kind in ("ref", "box"):
            nu = self.next().kind
            self.expect("<", "heap tuple")
            words = []
            if not self.at(">"):
                words.append(self.u_value())
                while self.accept(","):
                    words.append(self.u_value())
            self.expect(">", "heap tuple")
            return S.HeapBinding(label, nu, S.TupleVal(tuple(words)))
        self.fail("expected a heap value", expected=("code", "ref", "box"))

    # -- programs -------------------------------------------------------------

    def program(self) -> S.Program:
        entry = "F"
        if self.at("entry"):
            self.next()
            t = self.peek()
            name = self.ident("entry language")
            if name not in ("F", "T"):
                raise ParseError("entry must be F or T", t.offset, t.line, t.col)
            entry = name
        main: S.Node = self.component() if entry == "T" else self.expr()
        t = self.peek()
        if t.kind != "EOF":
            raise ParseError(
                f"trailing input {t.text!r}", t.offset, t.line, t.col, expected=("EOF",)
            )
        return S.Program(entry, main)


def parse_program(src: str) -> S.Program:
    return Parser(src).program()


def parse_expr(src: str) -> S.Tm:
    p = Parser(src)
    e = p.expr()
    p.expect("EOF", "expression")
    return e


def parse_type(src: str) -> S.Ty:
    p = Parser(src)
    t = p.type_()
    p.expect("EOF", "type")
    return t


def parse_component(src: str) -> S.Component:
    p = Parser(src)
    c = p.component()
    p.expect("EOF", "component")
    return c
