"""Core model representation and static validation.

The model is a tree of plain dataclasses built by the frontend parser:
classes with attributes, signals and exactly one state machine each, plus
a static population of named instances. State machines communicate only
by sending signals to instances; every transition's action block is a
loop-free sequence of assignments, sends and if/else over fixed-width
unsigned arithmetic, so each dispatch runs to completion in a statically
bounded number of statements.

`validate` performs every static check required before a model may be
executed or translated. As a side effect it annotates each expression
node with its resolved scalar type (the `ty` field), which the executor
and both code generators rely on for width-exact wrapping arithmetic.
IR values are treated as immutable once validation has run; they can be
shared freely across threads.

Marks, scenarios and the diagnostic report types also live here so the
parser, the partitioner and the executor share one vocabulary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# Scalar types are unsigned with a fixed bit width; bool is the 1-bit case.
WIDTHS: dict[str, int] = {"bool": 1, "u8": 8, "u16": 16, "u32": 32}
SCALAR_TYPES = tuple(WIDTHS)


def mask_of(ty: str) -> int:
    """All-ones mask for a scalar type; arithmetic wraps modulo 2^width."""
    return (1 << WIDTHS[ty]) - 1


# ---------------------------------------------------------------------------
# Expressions
#
# `ty` is filled in by validate(); None means "not yet checked".
# ---------------------------------------------------------------------------


@dataclass
class IntLit:
    value: int
    ty: str | None = field(default=None, compare=False)


@dataclass
class BoolLit:
    value: bool
    ty: str | None = field(default="bool", compare=False)


@dataclass
class AttrRef:
    """Reference to an attribute of the executing instance."""

    name: str
    ty: str | None = field(default=None, compare=False)


@dataclass
class ParamRef:
    """Reference to a parameter of the triggering signal (written `$name`)."""

    name: str
    ty: str | None = field(default=None, compare=False)


@dataclass
class Unary:
    op: str  # "!" (bool) or "-" (wrapping negate)
    operand: "Expr"
    ty: str | None = field(default=None, compare=False)


@dataclass
class Binary:
    op: str  # "||" "&&" "==" "!=" "<" "<=" ">" ">=" "+" "-" "*"
    left: "Expr"
    right: "Expr"
    ty: str | None = field(default=None, compare=False)


Expr = IntLit | BoolLit | AttrRef | ParamRef | Unary | Binary


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------


@dataclass
class Assign:
    attr: str
    value: Expr


@dataclass
class Send:
    """Send a signal to a named instance; routing is static."""

    instance: str
    signal: str
    args: list[Expr]


@dataclass
class If:
    cond: Expr
    then: list["Stmt"]
    orelse: list["Stmt"]


Stmt = Assign | Send | If


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------


@dataclass
class AttributeDef:
    """Attribute with a declared type and an explicit default.

    The parser normalizes an omitted default to zero/false, so `default`
    is always a concrete literal (bool for `bool`, int otherwise).
    """

    name: str
    type: str
    default: bool | int


@dataclass
class SignalParam:
    name: str
    type: str


@dataclass
class SignalDef:
    name: str
    params: list[SignalParam] = field(default_factory=list)


@dataclass
class TransitionDef:
    signal: str
    target: str
    actions: list[Stmt] = field(default_factory=list)


@dataclass
class StateDef:
    name: str
    transitions: list[TransitionDef] = field(default_factory=list)


@dataclass
class StateMachineDef:
    initial: str
    states: list[StateDef] = field(default_factory=list)


@dataclass
class ClassDef:
    name: str
    attributes: list[AttributeDef] = field(default_factory=list)
    signals: list[SignalDef] = field(default_factory=list)
    machine: StateMachineDef = field(default_factory=lambda: StateMachineDef(""))


@dataclass
class InstanceDecl:
    name: str
    class_name: str


@dataclass
class Model:
    classes: list[ClassDef] = field(default_factory=list)
    instances: list[InstanceDecl] = field(default_factory=list)

    def class_by_name(self, name: str) -> ClassDef | None:
        for c in self.classes:
            if c.name == name:
                return c
        return None

    def instance_by_name(self, name: str) -> InstanceDecl | None:
        for i in self.instances:
            if i.name == name:
                return i
        return None


# ---------------------------------------------------------------------------
# Marks and scenarios
# ---------------------------------------------------------------------------


@dataclass
class Mark:
    """Sticky-note annotation: (key, value) attached to an element path.

    Marks live outside the model file and never modify it; an omitted
    value parses as boolean true.
    """

    key: str
    value: bool | int
    path: str  # dot-separated element path, e.g. "Pong" or "Ping.Hit"


@dataclass
class MarkSet:
    marks: list[Mark] = field(default_factory=list)


@dataclass
class Injection:
    at: int  # dispatch step before which this signal is enqueued
    instance: str
    signal: str
    args: list[bool | int] = field(default_factory=list)


@dataclass
class Expectation:
    instance: str
    attr: str
    value: bool | int


@dataclass
class Scenario:
    """A formal test case: external signal injections plus end-state checks.

    `confluent` marks scenarios whose final attribute valuation is
    independent of legal scheduling order; only those assert final-state
    equality across schedulers and partitions.
    """

    injections: list[Injection] = field(default_factory=list)
    expectations: list[Expectation] = field(default_factory=list)
    confluent: bool = False


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

ERROR = "ERROR"
WARNING = "WARNING"


@dataclass
class Diagnostic:
    severity: str  # ERROR or WARNING
    code: str
    path: str
    message: str

    def render(self) -> str:
        return f"{self.severity} {self.code} {self.path}: {self.message}"


@dataclass
class ValidationReport:
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == ERROR]

    @property
    def ok(self) -> bool:
        return not self.errors

    def render(self) -> str:
        return "\n".join(d.render() for d in self.diagnostics)


class InvalidModelError(Exception):
    """Raised when an operation requiring a valid model receives one that
    fails validation."""

    def __init__(self, report: ValidationReport):
        super().__init__(report.render())
        self.report = report


# ---------------------------------------------------------------------------
# Element path resolution
# ---------------------------------------------------------------------------


def resolve(model: Model, path: str):
    """Resolve a dot-separated element path against a model.

    One-part paths name a class or, failing that, an instance (classes
    shadow same-named instances). Two-part paths name an attribute or,
    failing that, a signal of the named class. Anything else, including
    state names, is not resolvable. Returns the IR node or None.
    """
    parts = path.split(".") if path else []
    if not parts or any(not p for p in parts):
        return None
    if len(parts) == 1:
        return model.class_by_name(parts[0]) or model.instance_by_name(parts[0])
    if len(parts) == 2:
        cls = model.class_by_name(parts[0])
        if cls is None:
            return None
        for a in cls.attributes:
            if a.name == parts[1]:
                return a
        for s in cls.signals:
            if s.name == parts[1]:
                return s
        return None
    return None


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _literal_kind_ok(value: bool | int, ty: str) -> bool:
    # bool literals fit only bool; int literals fit any type they are in
    # range for (bool being the 1-bit unsigned case).
    if isinstance(value, bool):
        return ty == "bool"
    return 0 <= value <= mask_of(ty)


def _is_polymorphic(e: Expr) -> bool:
    """True when the expression's type is not pinned bottom-up.

    Bare integer literals adapt to the surrounding context; anything
    rooted only in such literals (through negate and arithmetic) stays
    adaptable until an expected type arrives.
    """
    if isinstance(e, IntLit):
        return True
    if isinstance(e, Unary) and e.op == "-":
        return _is_polymorphic(e.operand)
    if isinstance(e, Binary) and e.op in ("+", "-", "*"):
        return _is_polymorphic(e.left) and _is_polymorphic(e.right)
    return False


class _Validator:
    def __init__(self, model: Model):
        self.model = model
        self.out: list[Diagnostic] = []
        # First-occurrence symbol tables; duplicates are reported but the
        # first definition stays authoritative for resolution.
        self.classes: dict[str, ClassDef] = {}
        self.instances: dict[str, InstanceDecl] = {}
        for c in model.classes:
            self.classes.setdefault(c.name, c)
        for i in model.instances:
            self.instances.setdefault(i.name, i)

    def error(self, code: str, path: str, message: str) -> None:
        self.out.append(Diagnostic(ERROR, code, path, message))

    def run(self) -> ValidationReport:
        seen_classes: set[str] = set()
        for cls in self.model.classes:
            if cls.name in seen_classes:
                self.error("E_DUP_CLASS", cls.name, "duplicate class name")
            else:
                seen_classes.add(cls.name)
                self.check_class(cls)
        seen_instances: set[str] = set()
        for inst in self.model.instances:
            if inst.name in seen_instances:
                self.error("E_DUP_INSTANCE", inst.name, "duplicate instance name")
                continue
            seen_instances.add(inst.name)
            if inst.class_name not in self.classes:
                self.error(
                    "E_UNKNOWN_CLASS",
                    inst.class_name,
                    f"instance {inst.name} names unknown class {inst.class_name}",
                )
        return ValidationReport(self.out)

    def check_class(self, cls: ClassDef) -> None:
        attrs: dict[str, AttributeDef] = {}
        for a in cls.attributes:
            if a.name in attrs:
                self.error("E_DUP_ATTR", f"{cls.name}.{a.name}", "duplicate attribute name")
                continue
            attrs[a.name] = a
            if not _literal_kind_ok(a.default, a.type):
                self.error(
                    "E_BAD_DEFAULT",
                    f"{cls.name}.{a.name}",
                    f"default {a.default} does not fit {a.type}",
                )
        signals: dict[str, SignalDef] = {}
        for s in cls.signals:
            if s.name in signals:
                self.error("E_DUP_SIGNAL", f"{cls.name}.{s.name}", "duplicate signal name")
                continue
            signals[s.name] = s
            seen_params: set[str] = set()
            for p in s.params:
                if p.name in seen_params:
                    self.error(
                        "E_DUP_PARAM",
                        f"{cls.name}.{s.name}",
                        f"duplicate parameter name {p.name}",
                    )
                seen_params.add(p.name)
        self.check_machine(cls, attrs, signals)

    def check_machine(
        self,
        cls: ClassDef,
        attrs: dict[str, AttributeDef],
        signals: dict[str, SignalDef],
    ) -> None:
        m = cls.machine
        if not m.initial and not m.states:
            # parser default for a class body with no statemachine block
            self.error("E_NO_STATEMACHINE", cls.name, "class has no state machine")
            return
        state_names = {st.name for st in m.states}
        if m.initial not in state_names:
            self.error(
                "E_UNKNOWN_STATE",
                f"{cls.name}.{m.initial}",
                f"initial state {m.initial} is not declared",
            )
        seen_states: set[str] = set()
        for st in m.states:
            if st.name in seen_states:
                self.error("E_DUP_STATE", f"{cls.name}.{st.name}", "duplicate state name")
                continue
            seen_states.add(st.name)
            seen_signals: set[str] = set()
            for tr in st.transitions:
                if tr.signal not in signals:
                    self.error(
                        "E_UNKNOWN_SIGNAL",
                        f"{cls.name}.{tr.signal}",
                        f"state {st.name} handles undeclared signal {tr.signal}",
                    )
                    continue
                if tr.signal in seen_signals:
                    self.error(
                        "E_DUP_TRANSITION",
                        f"{cls.name}.{tr.signal}",
                        f"state {st.name} has two transitions on {tr.signal}",
                    )
                    continue
                seen_signals.add(tr.signal)
                if tr.target not in state_names:
                    self.error(
                        "E_UNKNOWN_STATE",
                        f"{cls.name}.{tr.target}",
                        f"transition target {tr.target} is not declared",
                    )
                params = {p.name: p for p in signals[tr.signal].params}
                for stmt in tr.actions:
                    self.check_stmt(cls, attrs, params, stmt)

    def check_stmt(
        self,
        cls: ClassDef,
        attrs: dict[str, AttributeDef],
        params: dict[str, SignalParam],
        stmt: Stmt,
    ) -> None:
        if isinstance(stmt, Assign):
            target = attrs.get(stmt.attr)
            if target is None:
                self.error(
                    "E_UNKNOWN_ATTR",
                    f"{cls.name}.{stmt.attr}",
                    f"assignment to unknown attribute {stmt.attr}",
                )
                self.check_expr(cls, attrs, params, stmt.value, None)
                return
            self.check_expr(cls, attrs, params, stmt.value, target.type)
        elif isinstance(stmt, Send):
            inst = self.instances.get(stmt.instance)
            if inst is None:
                self.error(
                    "E_UNKNOWN_INSTANCE",
                    stmt.instance,
                    f"send targets unknown instance {stmt.instance}",
                )
                for a in stmt.args:
                    self.check_expr(cls, attrs, params, a, None)
                return
            recv_cls = self.classes.get(inst.class_name)
            if recv_cls is None:
                # instance with an unknown class is reported at the
                # instance declaration; nothing further to check here
                return
            sig = next((s for s in recv_cls.signals if s.name == stmt.signal), None)
            if sig is None:
                self.error(
                    "E_UNKNOWN_SIGNAL",
                    f"{recv_cls.name}.{stmt.signal}",
                    f"send of undeclared signal {stmt.signal} to {stmt.instance}",
                )
                for a in stmt.args:
                    self.check_expr(cls, attrs, params, a, None)
                return
            if len(stmt.args) != len(sig.params):
                self.error(
                    "E_ARITY",
                    f"{recv_cls.name}.{stmt.signal}",
                    f"signal {stmt.signal} takes {len(sig.params)} argument(s), got {len(stmt.args)}",
                )
                for a in stmt.args:
                    self.check_expr(cls, attrs, params, a, None)
                return
            for a, p in zip(stmt.args, sig.params):
                self.check_expr(cls, attrs, params, a, p.type)
        elif isinstance(stmt, If):
            self.check_expr(cls, attrs, params, stmt.cond, "bool")
            for s in stmt.then:
                self.check_stmt(cls, attrs, params, s)
            for s in stmt.orelse:
                self.check_stmt(cls, attrs, params, s)

    def check_expr(
        self,
        cls: ClassDef,
        attrs: dict[str, AttributeDef],
        params: dict[str, SignalParam],
        e: Expr,
        expected: str | None,
    ) -> str | None:
        """Type-check `e`, annotate `e.ty`, and return the resolved type.

        Bare integer literals adopt the expected type when they fit, and
        default to u32 in unconstrained positions. Everything else must
        match the expected type exactly; operands of one binary operator
        must share a type.
        """
        ctx = f"{cls.name}"

        def mismatch(msg: str, path: str | None = None) -> None:
            self.error("E_TYPE_MISMATCH", path or ctx, msg)

        if isinstance(e, IntLit):
            t = expected or "u32"
            if e.value > mask_of(t):
                mismatch(f"literal {e.value} does not fit {t}")
                e.ty = t
                return None
            e.ty = t
            return t
        if isinstance(e, BoolLit):
            if expected not in (None, "bool"):
                mismatch(f"boolean literal where {expected} expected")
                return None
            e.ty = "bool"
            return "bool"
        if isinstance(e, AttrRef):
            a = attrs.get(e.name)
            if a is None:
                self.error(
                    "E_UNKNOWN_ATTR", f"{cls.name}.{e.name}", f"unknown attribute {e.name}"
                )
                return None
            e.ty = a.type
            if expected is not None and a.type != expected:
                mismatch(
                    f"attribute {e.name} has type {a.type}, expected {expected}",
                    f"{cls.name}.{e.name}",
                )
                return None
            return a.type
        if isinstance(e, ParamRef):
            p = params.get(e.name)
            if p is None:
                self.error(
                    "E_UNKNOWN_PARAM", f"{cls.name}.{e.name}", f"unknown parameter ${e.name}"
                )
                return None
            e.ty = p.type
            if expected is not None and p.type != expected:
                mismatch(
                    f"parameter ${e.name} has type {p.type}, expected {expected}",
                    f"{cls.name}.{e.name}",
                )
                return None
            return p.type
        if isinstance(e, Unary):
            if e.op == "!":
                self.check_expr(cls, attrs, params, e.operand, "bool")
                e.ty = "bool"
                if expected not in (None, "bool"):
                    mismatch(f"! yields bool, expected {expected}")
                    return None
                return "bool"
            t = self.check_expr(cls, attrs, params, e.operand, expected)
            e.ty = t
            return t
        if isinstance(e, Binary):
            return self.check_binary(cls, attrs, params, e, expected)
        raise TypeError(f"unexpected expression node {e!r}")

    def check_binary(
        self,
        cls: ClassDef,
        attrs: dict[str, AttributeDef],
        params: dict[str, SignalParam],
        e: Binary,
        expected: str | None,
    ) -> str | None:
        check = lambda x, exp: self.check_expr(cls, attrs, params, x, exp)

        def bool_result() -> str | None:
            e.ty = "bool"
            if expected not in (None, "bool"):
                self.error(
                    "E_TYPE_MISMATCH", cls.name, f"{e.op} yields bool, expected {expected}"
                )
                return None
            return "bool"

        if e.op in ("&&", "||"):
            check(e.left, "bool")
            check(e.right, "bool")
            return bool_result()

        # Arithmetic and comparisons require one shared operand type;
        # a concrete side pins the type for a literal-only side.
        def operand_types(exp: str | None) -> str | None:
            if exp is not None:
                lt = check(e.left, exp)
                rt = check(e.right, exp)
                return exp if lt == rt == exp else None
            if not _is_polymorphic(e.left):
                lt = check(e.left, None)
                rt = check(e.right, lt)
                return lt if lt is not None and rt == lt else None
            if not _is_polymorphic(e.right):
                rt = check(e.right, None)
                lt = check(e.left, rt)
                return rt if rt is not None and lt == rt else None
            lt = check(e.left, "u32")
            rt = check(e.right, "u32")
            return "u32" if lt == rt == "u32" else None

        if e.op in ("+", "-", "*"):
            t = operand_types(expected)
            e.ty = t if t is not None else (expected or "u32")
            return t
        if e.op in ("==", "!=", "<", "<=", ">", ">="):
            operand_types(None)
            return bool_result()
        raise ValueError(f"unexpected binary operator {e.op}")


def validate(model: Model) -> ValidationReport:
    """Statically check a model and annotate expression types.

    Every violated invariant is reported with a stable diagnostic code;
    nothing is thrown. Diagnostics come out in document order (classes
    first, then instance declarations), so the report is deterministic
    for a given model value.
    """
    return _Validator(model).run()


def ensure_valid(model: Model) -> None:
    """Validate and raise InvalidModelError if any error diagnostics exist.

    Operations that require a valid model (execution, code generation)
    call this defensively; it also guarantees expression type
    annotations are present.
    """
    report = validate(model)
    if not report.ok:
        raise InvalidModelError(report)
