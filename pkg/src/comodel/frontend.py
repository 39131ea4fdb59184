"""Parsers for the three textual inputs: model, marks and scenario files.

All three DSLs share one lexer: `//` comments, ASCII identifiers
`[A-Za-z_][A-Za-z0-9_]*`, decimal integers, and a small symbol set.
Model-language keywords are reserved and never usable as identifiers.

Model grammar (statements end in `;`, blocks use `{ }`):

    model         := item* ;
    item          := class_def | instance_decl ;
    class_def     := "class" IDENT "{" class_item* "}" ;
    class_item    := attr_def | signal_def | sm_def ;
    attr_def      := "attr" IDENT ":" type ("=" literal)? ";" ;
    signal_def    := "signal" IDENT "(" (param ("," param)*)? ")" ";" ;
    param         := IDENT ":" type ;
    type          := "bool" | "u8" | "u16" | "u32" ;
    sm_def        := "statemachine" "{" "initial" IDENT ";" state_def* "}" ;
    state_def     := "state" IDENT "{" transition* "}" ;
    transition    := "on" IDENT "->" IDENT "{" stmt* "}" ;
    stmt          := IDENT "=" expr ";"
                   | "send" IDENT "." IDENT "(" (expr ("," expr)*)? ")" ";"
                   | "if" "(" expr ")" "{" stmt* "}" ("else" "{" stmt* "}")? ;
    instance_decl := "instance" IDENT ":" IDENT ";" ;

Expression precedence, low to high: `||`, `&&`, equality, relational,
additive, `*`, unary (`!`, `-`), primary. Signal parameters are written
`$name` to keep them apart from attributes.

Marks:     mark_stmt := "mark" IDENT ("=" literal)? "on" path ";" ;
Scenario:  directive := "at" INT "send" IDENT "." IDENT "(" literals ")" ";"
                      | "expect" IDENT "." IDENT "==" literal ";"
                      | "confluent" ";" ;

Parsing is a pure function of the input text; the first syntax error
wins and is reported with an exact source location.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import ir

KEYWORDS = frozenset(
    [
        "class",
        "instance",
        "attr",
        "signal",
        "statemachine",
        "initial",
        "state",
        "on",
        "send",
        "if",
        "else",
        "true",
        "false",
        "bool",
        "u8",
        "u16",
        "u32",
    ]
)

TYPE_NAMES = ("bool", "u8", "u16", "u32")

_SYMBOLS = (
    "->",
    "==",
    "!=",
    "<=",
    ">=",
    "&&",
    "||",
    "{",
    "}",
    "(",
    ")",
    ";",
    ":",
    ",",
    ".",
    "=",
    "<",
    ">",
    "+",
    "-",
    "*",
    "!",
    "$",
)


@dataclass
class SourceLoc:
    file: str
    line: int  # 1-based
    column: int  # 1-based

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class ParseError(Exception):
    """First syntax error in an input, with its exact location.

    `code` is None for plain syntax errors; structural parse-level rules
    (currently only duplicate marks) carry their own code.
    """

    def __init__(self, loc: SourceLoc, expected: str, found: str, code: str | None = None):
        super().__init__(f"{loc}: expected {expected}, found {found}")
        self.loc = loc
        self.expected = expected
        self.found = found
        self.code = code


@dataclass
class Token:
    kind: str  # "ident", "int", "sym", "eof"
    value: str
    loc: SourceLoc


def _tokenize(text: str, filename: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        loc = SourceLoc(filename, line, col)
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("int", text[i:j], loc))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if not word.isascii():
                raise ParseError(loc, "ASCII identifier", repr(word))
            tokens.append(Token("ident", word, loc))
            col += j - i
            i = j
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token("sym", sym, loc))
                col += len(sym)
                i += len(sym)
                break
        else:
            raise ParseError(loc, "a token", repr(c))
    tokens.append(Token("eof", "", SourceLoc(filename, line, col)))
    return tokens


class _Parser:
    def __init__(self, text: str, filename: str):
        self.tokens = _tokenize(text, filename)
        self.pos = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def fail(self, expected: str) -> ParseError:
        tok = self.cur
        found = "end of input" if tok.kind == "eof" else repr(tok.value)
        return ParseError(tok.loc, expected, found)

    def advance(self) -> Token:
        tok = self.cur
        self.pos += 1
        return tok

    def at_sym(self, value: str) -> bool:
        return self.cur.kind == "sym" and self.cur.value == value

    def at_word(self, value: str) -> bool:
        return self.cur.kind == "ident" and self.cur.value == value

    def expect_sym(self, value: str) -> Token:
        if not self.at_sym(value):
            raise self.fail(f"'{value}'")
        return self.advance()

    def expect_word(self, value: str) -> Token:
        if not self.at_word(value):
            raise self.fail(f"'{value}'")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> str:
        if self.cur.kind != "ident" or self.cur.value in KEYWORDS:
            raise self.fail(what)
        return self.advance().value

    def expect_int(self, what: str = "integer") -> int:
        if self.cur.kind != "int":
            raise self.fail(what)
        return int(self.advance().value)

    def expect_literal(self) -> bool | int:
        if self.cur.kind == "int":
            return int(self.advance().value)
        if self.at_word("true"):
            self.advance()
            return True
        if self.at_word("false"):
            self.advance()
            return False
        raise self.fail("literal")

    def expect_type(self) -> str:
        if self.cur.kind == "ident" and self.cur.value in TYPE_NAMES:
            return self.advance().value
        raise self.fail("type (bool, u8, u16 or u32)")

    def expect_eof(self) -> None:
        if self.cur.kind != "eof":
            raise self.fail("end of input")


# ---------------------------------------------------------------------------
# Model parser
# ---------------------------------------------------------------------------


class _ModelParser(_Parser):
    def parse(self) -> ir.Model:
        model = ir.Model()
        while self.cur.kind != "eof":
            if self.at_word("class"):
                model.classes.append(self.class_def())
            elif self.at_word("instance"):
                model.instances.append(self.instance_decl())
            else:
                raise self.fail("'class' or 'instance'")
        return model

    def class_def(self) -> ir.ClassDef:
        self.expect_word("class")
        name = self.expect_ident("class name")
        cls = ir.ClassDef(name)
        self.expect_sym("{")
        machines = 0
        while not self.at_sym("}"):
            if self.at_word("attr"):
                cls.attributes.append(self.attr_def())
            elif self.at_word("signal"):
                cls.signals.append(self.signal_def())
            elif self.at_word("statemachine"):
                if machines:
                    raise self.fail("at most one statemachine per class")
                machines += 1
                cls.machine = self.sm_def()
            else:
                raise self.fail("'attr', 'signal', 'statemachine' or '}'")
        self.expect_sym("}")
        return cls

    def instance_decl(self) -> ir.InstanceDecl:
        self.expect_word("instance")
        name = self.expect_ident("instance name")
        self.expect_sym(":")
        class_name = self.expect_ident("class name")
        self.expect_sym(";")
        return ir.InstanceDecl(name, class_name)

    def attr_def(self) -> ir.AttributeDef:
        self.expect_word("attr")
        name = self.expect_ident("attribute name")
        self.expect_sym(":")
        ty = self.expect_type()
        default: bool | int = False if ty == "bool" else 0
        if self.at_sym("="):
            self.advance()
            default = self.expect_literal()
        self.expect_sym(";")
        return ir.AttributeDef(name, ty, default)

    def signal_def(self) -> ir.SignalDef:
        self.expect_word("signal")
        name = self.expect_ident("signal name")
        sig = ir.SignalDef(name)
        self.expect_sym("(")
        if not self.at_sym(")"):
            while True:
                pname = self.expect_ident("parameter name")
                self.expect_sym(":")
                pty = self.expect_type()
                sig.params.append(ir.SignalParam(pname, pty))
                if self.at_sym(","):
                    self.advance()
                    continue
                break
        self.expect_sym(")")
        self.expect_sym(";")
        return sig

    def sm_def(self) -> ir.StateMachineDef:
        self.expect_word("statemachine")
        self.expect_sym("{")
        self.expect_word("initial")
        initial = self.expect_ident("initial state name")
        self.expect_sym(";")
        machine = ir.StateMachineDef(initial)
        while self.at_word("state"):
            machine.states.append(self.state_def())
        self.expect_sym("}")
        return machine

    def state_def(self) -> ir.StateDef:
        self.expect_word("state")
        name = self.expect_ident("state name")
        state = ir.StateDef(name)
        self.expect_sym("{")
        while self.at_word("on"):
            state.transitions.append(self.transition())
        self.expect_sym("}")
        return state

    def transition(self) -> ir.TransitionDef:
        self.expect_word("on")
        signal = self.expect_ident("signal name")
        self.expect_sym("->")
        target = self.expect_ident("target state name")
        tr = ir.TransitionDef(signal, target)
        self.expect_sym("{")
        while not self.at_sym("}"):
            tr.actions.append(self.stmt())
        self.expect_sym("}")
        return tr

    def stmt(self) -> ir.Stmt:
        if self.at_word("send"):
            self.advance()
            instance = self.expect_ident("instance name")
            self.expect_sym(".")
            signal = self.expect_ident("signal name")
            args: list[ir.Expr] = []
            self.expect_sym("(")
            if not self.at_sym(")"):
                while True:
                    args.append(self.expr())
                    if self.at_sym(","):
                        self.advance()
                        continue
                    break
            self.expect_sym(")")
            self.expect_sym(";")
            return ir.Send(instance, signal, args)
        if self.at_word("if"):
            self.advance()
            self.expect_sym("(")
            cond = self.expr()
            self.expect_sym(")")
            then = self.block()
            orelse: list[ir.Stmt] = []
            if self.at_word("else"):
                self.advance()
                orelse = self.block()
            return ir.If(cond, then, orelse)
        attr = self.expect_ident("statement")
        self.expect_sym("=")
        value = self.expr()
        self.expect_sym(";")
        return ir.Assign(attr, value)

    def block(self) -> list[ir.Stmt]:
        self.expect_sym("{")
        stmts: list[ir.Stmt] = []
        while not self.at_sym("}"):
            stmts.append(self.stmt())
        self.expect_sym("}")
        return stmts

    # expression precedence climbing, lowest first
    def expr(self) -> ir.Expr:
        return self.or_expr()

    def _binary_level(self, ops: tuple[str, ...], next_level) -> ir.Expr:
        left = next_level()
        while self.cur.kind == "sym" and self.cur.value in ops:
            op = self.advance().value
            right = next_level()
            left = ir.Binary(op, left, right)
        return left

    def or_expr(self) -> ir.Expr:
        return self._binary_level(("||",), self.and_expr)

    def and_expr(self) -> ir.Expr:
        return self._binary_level(("&&",), self.eq_expr)

    def eq_expr(self) -> ir.Expr:
        return self._binary_level(("==", "!="), self.rel_expr)

    def rel_expr(self) -> ir.Expr:
        return self._binary_level(("<", "<=", ">", ">="), self.add_expr)

    def add_expr(self) -> ir.Expr:
        return self._binary_level(("+", "-"), self.mul_expr)

    def mul_expr(self) -> ir.Expr:
        return self._binary_level(("*",), self.unary_expr)

    def unary_expr(self) -> ir.Expr:
        if self.at_sym("!") or self.at_sym("-"):
            op = self.advance().value
            return ir.Unary(op, self.unary_expr())
        return self.primary()

    def primary(self) -> ir.Expr:
        if self.cur.kind == "int":
            return ir.IntLit(int(self.advance().value))
        if self.at_word("true"):
            self.advance()
            return ir.BoolLit(True)
        if self.at_word("false"):
            self.advance()
            return ir.BoolLit(False)
        if self.at_sym("$"):
            self.advance()
            return ir.ParamRef(self.expect_ident("parameter name"))
        if self.at_sym("("):
            self.advance()
            e = self.expr()
            self.expect_sym(")")
            return e
        if self.cur.kind == "ident" and self.cur.value not in KEYWORDS:
            return ir.AttrRef(self.advance().value)
        raise self.fail("expression")


def parse_model(text: str, filename: str = "<model>") -> ir.Model:
    parser = _ModelParser(text, filename)
    model = parser.parse()
    parser.expect_eof()
    return model


# ---------------------------------------------------------------------------
# Marks parser
# ---------------------------------------------------------------------------


def parse_marks(text: str, filename: str = "<marks>") -> ir.MarkSet:
    p = _Parser(text, filename)
    marks = ir.MarkSet()
    seen: set[tuple[str, str]] = set()
    while p.cur.kind != "eof":
        loc = p.cur.loc
        p.expect_word("mark")
        key = p.expect_ident("mark key")
        value: bool | int = True
        if p.at_sym("="):
            p.advance()
            value = p.expect_literal()
        p.expect_word("on")
        parts = [p.expect_ident("element path")]
        while p.at_sym("."):
            p.advance()
            parts.append(p.expect_ident("path segment"))
        p.expect_sym(";")
        path = ".".join(parts)
        if (key, path) in seen:
            raise ParseError(loc, "distinct (key, path) pair", f"duplicate mark {key} on {path}", code="E_DUP_MARK")
        seen.add((key, path))
        marks.marks.append(ir.Mark(key, value, path))
    return marks


# ---------------------------------------------------------------------------
# Scenario parser
# ---------------------------------------------------------------------------


def parse_scenario(text: str, filename: str = "<scenario>") -> ir.Scenario:
    p = _Parser(text, filename)
    scenario = ir.Scenario()
    while p.cur.kind != "eof":
        if p.at_word("at"):
            p.advance()
            at = p.expect_int("nonnegative step number")
            p.expect_word("send")
            instance = p.expect_ident("instance name")
            p.expect_sym(".")
            signal = p.expect_ident("signal name")
            args: list[bool | int] = []
            p.expect_sym("(")
            if not p.at_sym(")"):
                while True:
                    args.append(p.expect_literal())
                    if p.at_sym(","):
                        p.advance()
                        continue
                    break
            p.expect_sym(")")
            p.expect_sym(";")
            scenario.injections.append(ir.Injection(at, instance, signal, args))
        elif p.at_word("expect"):
            p.advance()
            instance = p.expect_ident("instance name")
            p.expect_sym(".")
            attr = p.expect_ident("attribute name")
            p.expect_sym("==")
            value = p.expect_literal()
            p.expect_sym(";")
            scenario.expectations.append(ir.Expectation(instance, attr, value))
        elif p.at_word("confluent"):
            p.advance()
            p.expect_sym(";")
            scenario.confluent = True
        else:
            raise p.fail("'at', 'expect' or 'confluent'")
    return scenario


# ---------------------------------------------------------------------------
# Canonical printers
#
# The printed form reparses to an equal IR value and is the hashing basis
# for generated-output manifests, so formatting here is deliberately
# rigid: two-space indentation, one statement per line, explicit
# defaults, fully parenthesized subexpressions.
# ---------------------------------------------------------------------------


def _print_literal(v: bool | int) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _print_expr(e: ir.Expr, top: bool = False) -> str:
    if isinstance(e, ir.IntLit):
        return str(e.value)
    if isinstance(e, ir.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, ir.AttrRef):
        return e.name
    if isinstance(e, ir.ParamRef):
        return f"${e.name}"
    if isinstance(e, ir.Unary):
        inner = f"{e.op}{_print_expr(e.operand)}"
        return inner if top else f"({inner})"
    if isinstance(e, ir.Binary):
        inner = f"{_print_expr(e.left)} {e.op} {_print_expr(e.right)}"
        return inner if top else f"({inner})"
    raise TypeError(f"unexpected expression node {e!r}")


def _print_stmts(stmts: list[ir.Stmt], indent: str, out: list[str]) -> None:
    for s in stmts:
        if isinstance(s, ir.Assign):
            out.append(f"{indent}{s.attr} = {_print_expr(s.value, top=True)};")
        elif isinstance(s, ir.Send):
            args = ", ".join(_print_expr(a, top=True) for a in s.args)
            out.append(f"{indent}send {s.instance}.{s.signal}({args});")
        elif isinstance(s, ir.If):
            out.append(f"{indent}if ({_print_expr(s.cond, top=True)}) {{")
            _print_stmts(s.then, indent + "  ", out)
            if s.orelse:
                out.append(f"{indent}}} else {{")
                _print_stmts(s.orelse, indent + "  ", out)
            out.append(f"{indent}}}")


def print_model(model: ir.Model) -> str:
    """Render a model in canonical form (reparses to an equal Model)."""
    out: list[str] = []
    for cls in model.classes:
        out.append(f"class {cls.name} {{")
        for a in cls.attributes:
            out.append(f"  attr {a.name}: {a.type} = {_print_literal(a.default)};")
        for s in cls.signals:
            params = ", ".join(f"{p.name}: {p.type}" for p in s.params)
            out.append(f"  signal {s.name}({params});")
        out.append("  statemachine {")
        out.append(f"    initial {cls.machine.initial};")
        for st in cls.machine.states:
            out.append(f"    state {st.name} {{")
            for tr in st.transitions:
                out.append(f"      on {tr.signal} -> {tr.target} {{")
                _print_stmts(tr.actions, "        ", out)
                out.append("      }")
            out.append("    }")
        out.append("  }")
        out.append("}")
    for inst in model.instances:
        out.append(f"instance {inst.name}: {inst.class_name};")
    return "\n".join(out) + ("\n" if out else "")


def print_marks(marks: ir.MarkSet) -> str:
    lines = [
        f"mark {m.key} = {_print_literal(m.value)} on {m.path};" for m in marks.marks
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def print_scenario(scenario: ir.Scenario) -> str:
    lines: list[str] = []
    for inj in scenario.injections:
        args = ", ".join(_print_literal(a) for a in inj.args)
        lines.append(f"at {inj.at} send {inj.instance}.{inj.signal}({args});")
    for exp in scenario.expectations:
        lines.append(f"expect {exp.instance}.{exp.attr} == {_print_literal(exp.value)};")
    if scenario.confluent:
        lines.append("confluent;")
    return "\n".join(lines) + ("\n" if lines else "")
