"""Reference interpreter: run-to-completion execution of validated models.

Execution semantics
-------------------
Every in-flight signal is a `SignalEnvelope` carrying a globally unique,
strictly increasing sequence number allocated at send time. Each
instance owns a FIFO queue. One dispatch step is atomic: dequeue one
envelope, execute the matching transition's actions in order (sends
allocate fresh sequence numbers immediately), then enter the target
state. No other instance's data changes during a step.

Scenario injections with `at N` are enqueued, in file order, before
dispatch step N; injections that fall beyond quiescence are enqueued
when the system goes quiescent, which resumes the run.

The scheduler only picks *which* nonempty queue dispatches next:

* ``global-fifo`` - the pending envelope with the minimum sequence
  number (the deterministic reference order);
* ``random`` - a uniformly chosen nonempty receiver under a seeded RNG,
  then that receiver's oldest envelope. Per-receiver FIFO order is never
  violated, so causality holds for every seed.

Arithmetic wraps modulo 2^width of the expression's resolved type, so
software and hardware translations of the same action are bit-equal.

Traces serialize to JSON Lines (one object per event, then one summary
object); that rendering is byte-deterministic and is the golden-file
contract used by the equivalence and repartitioning checks. Boolean
values appear as 0/1 in traces.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field

from . import ir

ENV_SENDER = "$env"

GLOBAL_FIFO = "global-fifo"
RANDOM = "random"

STRICT = "strict"
LENIENT = "lenient"

QUIESCENT = "quiescent"
STEP_LIMIT = "step-limit"
RUNTIME_ERROR = "runtime-error"


class ScenarioError(Exception):
    """A scenario references names the model does not define (E_SCENARIO_REF)."""

    code = "E_SCENARIO_REF"


@dataclass
class ExecConfig:
    scheduler: str = GLOBAL_FIFO
    seed: int = 0
    mode: str = STRICT
    max_steps: int = 10000

    def __post_init__(self) -> None:
        if self.scheduler not in (GLOBAL_FIFO, RANDOM):
            raise ValueError(f"unknown scheduler {self.scheduler!r}")
        if self.mode not in (STRICT, LENIENT):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class SignalEnvelope:
    seq: int
    sender: str  # instance name, or $env for scenario injections
    receiver: str
    signal: str
    args: tuple[int, ...]


@dataclass
class SystemState:
    """Mutable execution state: instance states and attribute valuations,
    pending per-instance queues, and the send/dispatch counters."""

    states: dict[str, str]
    attrs: dict[str, dict[str, int]]
    pending: dict[str, deque[SignalEnvelope]]
    next_seq: int = 0
    dispatch_count: int = 0

    def clone(self) -> "SystemState":
        return SystemState(
            states=dict(self.states),
            attrs={k: dict(v) for k, v in self.attrs.items()},
            pending={k: deque(v) for k, v in self.pending.items()},
            next_seq=self.next_seq,
            dispatch_count=self.dispatch_count,
        )

    def quiescent(self) -> bool:
        return not any(self.pending.values())


@dataclass
class TraceEvent:
    step: int
    envelope: SignalEnvelope
    from_state: str
    to_state: str
    writes: list[tuple[str, int]]
    sent: list[int]
    dropped: bool = False


@dataclass
class Outcome:
    kind: str  # quiescent | step-limit | runtime-error
    detail: str | None = None

    def render(self) -> str:
        if self.kind == RUNTIME_ERROR:
            return f"runtime-error({self.detail})"
        return self.kind


@dataclass
class ExpectationResult:
    path: str
    expected: int
    actual: int | None
    passed: bool


@dataclass
class Trace:
    events: list[TraceEvent]
    final: SystemState
    outcome: Outcome
    expectations: list[ExpectationResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.outcome.kind == QUIESCENT and all(e.passed for e in self.expectations)


# ---------------------------------------------------------------------------
# Static dispatch tables
# ---------------------------------------------------------------------------


class Machine:
    """Lookup tables for a validated model, shared by run() and cosim()."""

    def __init__(self, model: ir.Model):
        ir.ensure_valid(model)
        self.model = model
        self.classes = {c.name: c for c in model.classes}
        self.instance_class: dict[str, ir.ClassDef] = {
            i.name: self.classes[i.class_name] for i in model.instances
        }
        self.instance_order = [i.name for i in model.instances]
        self.transitions: dict[tuple[str, str, str], ir.TransitionDef] = {}
        self.signal_params: dict[tuple[str, str], list[ir.SignalParam]] = {}
        for c in model.classes:
            for s in c.signals:
                self.signal_params[(c.name, s.name)] = s.params
            for st in c.machine.states:
                for tr in st.transitions:
                    self.transitions[(c.name, st.name, tr.signal)] = tr

    def initial_state(self) -> SystemState:
        states = {}
        attrs = {}
        pending = {}
        for name in self.instance_order:
            cls = self.instance_class[name]
            states[name] = cls.machine.initial
            attrs[name] = {a.name: int(a.default) for a in cls.attributes}
            pending[name] = deque()
        return SystemState(states=states, attrs=attrs, pending=pending)


def init(model: ir.Model) -> SystemState:
    """Initial system state: every instance at its machine's initial
    state with attributes at declared defaults and empty queues."""
    return Machine(model).initial_state()


# ---------------------------------------------------------------------------
# Expression / action evaluation
# ---------------------------------------------------------------------------


def _eval(e: ir.Expr, attrs: dict[str, int], params: dict[str, int]) -> int:
    if isinstance(e, ir.IntLit):
        return e.value
    if isinstance(e, ir.BoolLit):
        return int(e.value)
    if isinstance(e, ir.AttrRef):
        return attrs[e.name]
    if isinstance(e, ir.ParamRef):
        return params[e.name]
    if isinstance(e, ir.Unary):
        v = _eval(e.operand, attrs, params)
        if e.op == "!":
            return int(not v)
        return (-v) & ir.mask_of(e.ty)  # wrapping negate
    if isinstance(e, ir.Binary):
        op = e.op
        if op == "&&":
            return int(bool(_eval(e.left, attrs, params)) and bool(_eval(e.right, attrs, params)))
        if op == "||":
            return int(bool(_eval(e.left, attrs, params)) or bool(_eval(e.right, attrs, params)))
        l = _eval(e.left, attrs, params)
        r = _eval(e.right, attrs, params)
        if op == "+":
            return (l + r) & ir.mask_of(e.ty)
        if op == "-":
            return (l - r) & ir.mask_of(e.ty)
        if op == "*":
            return (l * r) & ir.mask_of(e.ty)
        if op == "==":
            return int(l == r)
        if op == "!=":
            return int(l != r)
        if op == "<":
            return int(l < r)
        if op == "<=":
            return int(l <= r)
        if op == ">":
            return int(l > r)
        if op == ">=":
            return int(l >= r)
    raise TypeError(f"unexpected expression node {e!r}")


def execute_rtc_step(
    machine: Machine,
    state: SystemState,
    envelope: SignalEnvelope,
    deliver,
    step_index: int,
    mode: str,
) -> TraceEvent | None:
    """Run one atomic dispatch step for `envelope`.

    `deliver(env)` routes each envelope the actions send (queue or bus).
    Returns the trace event, or None when the signal is unhandled in
    strict mode (the caller turns that into a runtime-error outcome).
    Only the receiving instance's attributes are touched.
    """
    inst = envelope.receiver
    cls = machine.instance_class[inst]
    cur = state.states[inst]
    tr = machine.transitions.get((cls.name, cur, envelope.signal))
    if tr is None:
        if mode == STRICT:
            return None
        return TraceEvent(step_index, envelope, cur, cur, [], [], dropped=True)

    params = {
        p.name: v
        for p, v in zip(machine.signal_params[(cls.name, envelope.signal)], envelope.args)
    }
    attrs = state.attrs[inst]
    writes: list[tuple[str, int]] = []
    sent: list[int] = []

    def run_block(stmts: list[ir.Stmt]) -> None:
        for s in stmts:
            if isinstance(s, ir.Assign):
                v = _eval(s.value, attrs, params)
                attrs[s.attr] = v
                writes.append((s.attr, v))
            elif isinstance(s, ir.Send):
                args = tuple(_eval(a, attrs, params) for a in s.args)
                env2 = SignalEnvelope(state.next_seq, inst, s.instance, s.signal, args)
                state.next_seq += 1
                deliver(env2)
                sent.append(env2.seq)
            elif isinstance(s, ir.If):
                run_block(s.then if _eval(s.cond, attrs, params) else s.orelse)

    run_block(tr.actions)
    state.states[inst] = tr.target
    return TraceEvent(step_index, envelope, cur, tr.target, writes, sent)


# ---------------------------------------------------------------------------
# Scenario plumbing
# ---------------------------------------------------------------------------


def check_scenario_refs(model: ir.Model, scenario: ir.Scenario) -> None:
    """Raise ScenarioError unless every scenario reference resolves."""
    instances = {i.name: i for i in model.instances}
    classes = {c.name: c for c in model.classes}

    def fail(msg: str) -> None:
        raise ScenarioError(f"E_SCENARIO_REF: {msg}")

    for inj in scenario.injections:
        inst = instances.get(inj.instance)
        if inst is None:
            fail(f"injection targets unknown instance {inj.instance}")
        cls = classes[inst.class_name]
        sig = next((s for s in cls.signals if s.name == inj.signal), None)
        if sig is None:
            fail(f"instance {inj.instance} has no signal {inj.signal}")
        if len(inj.args) != len(sig.params):
            fail(
                f"{inj.instance}.{inj.signal} takes {len(sig.params)} argument(s),"
                f" got {len(inj.args)}"
            )
        for a, p in zip(inj.args, sig.params):
            if isinstance(a, bool):
                if p.type != "bool":
                    fail(f"boolean argument for {p.type} parameter {p.name}")
            elif not 0 <= a <= ir.mask_of(p.type):
                fail(f"argument {a} does not fit parameter {p.name}: {p.type}")
    for exp in scenario.expectations:
        inst = instances.get(exp.instance)
        if inst is None:
            fail(f"expectation references unknown instance {exp.instance}")
        cls = classes[inst.class_name]
        if not any(a.name == exp.attr for a in cls.attributes):
            fail(f"instance {exp.instance} has no attribute {exp.attr}")


def group_injections(scenario: ir.Scenario) -> tuple[dict[int, list[ir.Injection]], list[int]]:
    """Group injections by at-step, preserving file order inside a group."""
    groups: dict[int, list[ir.Injection]] = {}
    for inj in scenario.injections:
        groups.setdefault(inj.at, []).append(inj)
    return groups, sorted(groups)


def check_expectations(
    machine: Machine, state: SystemState, scenario: ir.Scenario
) -> list[ExpectationResult]:
    results = []
    for exp in scenario.expectations:
        actual = state.attrs[exp.instance].get(exp.attr)
        expected = int(exp.value)
        results.append(
            ExpectationResult(
                path=f"{exp.instance}.{exp.attr}",
                expected=expected,
                actual=actual,
                passed=actual == expected,
            )
        )
    return results


# ---------------------------------------------------------------------------
# The reference run loop
# ---------------------------------------------------------------------------


def _pick_fifo(state: SystemState, order: list[str]) -> SignalEnvelope:
    best = None
    for name in order:
        q = state.pending[name]
        if q and (best is None or q[0].seq < best[0].seq):
            best = q
    assert best is not None
    return best.popleft()


def _pick_random(state: SystemState, order: list[str], rng: random.Random) -> SignalEnvelope:
    nonempty = [name for name in order if state.pending[name]]
    choice = nonempty[rng.randrange(len(nonempty))]
    return state.pending[choice].popleft()


def run(model: ir.Model, scenario: ir.Scenario, config: ExecConfig | None = None) -> Trace:
    """Execute a scenario against a validated model and return the trace.

    Dynamic failures (unhandled signal in strict mode, step limit) are
    reported in the trace outcome; unresolvable scenario references
    raise ScenarioError before any step runs.
    """
    config = config or ExecConfig()
    machine = Machine(model)
    check_scenario_refs(model, scenario)
    state = machine.initial_state()
    groups, at_steps = group_injections(scenario)
    pending_ats = list(at_steps)
    rng = random.Random(config.seed) if config.scheduler == RANDOM else None

    events: list[TraceEvent] = []
    outcome = Outcome(QUIESCENT)

    def enqueue_group(at: int) -> None:
        for inj in groups[at]:
            env = SignalEnvelope(
                state.next_seq, ENV_SENDER, inj.instance, inj.signal,
                tuple(int(a) for a in inj.args),
            )
            state.next_seq += 1
            state.pending[inj.instance].append(env)

    def deliver(env: SignalEnvelope) -> None:
        state.pending[env.receiver].append(env)

    while True:
        if pending_ats and pending_ats[0] == state.dispatch_count:
            enqueue_group(pending_ats.pop(0))
        if state.quiescent():
            if pending_ats:
                # injections beyond the final step resume the run
                enqueue_group(pending_ats.pop(0))
                continue
            break
        if state.dispatch_count >= config.max_steps:
            outcome = Outcome(STEP_LIMIT, "E_STEP_LIMIT")
            break
        if rng is None:
            env = _pick_fifo(state, machine.instance_order)
        else:
            env = _pick_random(state, machine.instance_order, rng)
        event = execute_rtc_step(machine, state, env, deliver, state.dispatch_count, config.mode)
        if event is None:
            outcome = Outcome(
                RUNTIME_ERROR,
                f"E_UNHANDLED {env.receiver}.{env.signal} in state"
                f" {state.states[env.receiver]} at step {state.dispatch_count}",
            )
            break
        events.append(event)
        state.dispatch_count += 1

    expectations: list[ExpectationResult] = []
    if outcome.kind == QUIESCENT:
        expectations = check_expectations(machine, state, scenario)
        failed = sum(1 for e in expectations if not e.passed)
        if failed:
            outcome = Outcome(QUIESCENT, f"{failed} expectation(s) failed")
    return Trace(events=events, final=state, outcome=outcome, expectations=expectations)


# ---------------------------------------------------------------------------
# Trace checks
# ---------------------------------------------------------------------------


def check_causality(trace: Trace) -> bool:
    """True iff every dispatched envelope was sent at a strictly earlier
    step (scenario injections are causal by construction)."""
    sent_at: dict[int, int] = {}
    for ev in trace.events:
        for seq in ev.sent:
            sent_at[seq] = ev.step
    for ev in trace.events:
        if ev.envelope.sender == ENV_SENDER:
            continue
        origin = sent_at.get(ev.envelope.seq)
        if origin is None or origin >= ev.step:
            return False
    return True


def check_pair_fifo(trace: Trace) -> bool:
    """True iff per (sender, receiver) pair envelopes dispatch in
    ascending sequence order."""
    last: dict[tuple[str, str], int] = {}
    for ev in trace.events:
        key = (ev.envelope.sender, ev.envelope.receiver)
        if key in last and ev.envelope.seq <= last[key]:
            return False
        last[key] = ev.envelope.seq
    return True


# ---------------------------------------------------------------------------
# Serialization (the golden-file contract)
# ---------------------------------------------------------------------------


def event_dict(ev: TraceEvent) -> dict:
    return {
        "step": ev.step,
        "seq": ev.envelope.seq,
        "sender": ev.envelope.sender,
        "receiver": ev.envelope.receiver,
        "signal": ev.envelope.signal,
        "args": list(ev.envelope.args),
        "from": ev.from_state,
        "to": ev.to_state,
        "writes": [[name, value] for name, value in ev.writes],
        "sent": list(ev.sent),
        "dropped": ev.dropped,
    }


def summary_dict(trace: Trace) -> dict:
    return {
        "outcome": trace.outcome.render(),
        "final": {
            name: {"state": trace.final.states[name], "attrs": dict(trace.final.attrs[name])}
            for name in trace.final.states
        },
        "expectations": [
            {"path": e.path, "expected": e.expected, "actual": e.actual, "pass": e.passed}
            for e in trace.expectations
        ],
    }


def serialize_trace(trace: Trace) -> str:
    """JSON Lines rendering: one object per event, then a summary object.

    Key order is fixed; integers are decimal; booleans in attribute and
    argument positions are 0/1. Identical traces serialize to identical
    bytes.
    """
    lines = [json.dumps(event_dict(ev)) for ev in trace.events]
    lines.append(json.dumps(summary_dict(trace)))
    return "\n".join(lines) + "\n"
