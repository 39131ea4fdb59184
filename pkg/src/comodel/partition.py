"""Hardware/software partitioning and partitioned co-simulation.

A partition assigns every class to the HW or SW domain. It is derived
entirely from marks: classes default to SW and flip to HW under a
boolean `isHardware` mark on the class path. Marks never touch the model
file, so repartitioning is only ever a marks-file edit.

The boundary is the set of signals with at least one send route whose
endpoints lie in different domains; the generated interface consists of
exactly these.

`cosim` splits execution into two islands that each run the reference
run-to-completion semantics over their own instances. Intra-domain sends
enqueue directly; cross-boundary sends travel through a FIFO bus and
arrive `latency` bus ticks later (one tick per dispatch round, fixed
round order: SW step, HW step, bus tick). Sequence numbers stay global,
so every executor trace check applies unchanged to the merged trace.

`equivalence_check` grades a partitioned run against the reference run:

* L1 - per (sender, receiver) pair, the dispatched (signal, args)
  sequences are identical (always required);
* L2 - causality holds in the partitioned trace (always required);
* L3 - final attribute valuations are equal (required only for
  confluent scenarios, informative otherwise, because order-sensitive
  models may legitimately diverge under different interleavings).
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field

from . import executor, ir
from .executor import (
    ENV_SENDER,
    GLOBAL_FIFO,
    QUIESCENT,
    RUNTIME_ERROR,
    STEP_LIMIT,
    STRICT,
    ExecConfig,
    Machine,
    Outcome,
    SignalEnvelope,
    Trace,
    TraceEvent,
)

HW = "HW"
SW = "SW"

SW_TO_HW = "sw_to_hw"
HW_TO_SW = "hw_to_sw"

MARK_IS_HARDWARE = "isHardware"


class MarkError(Exception):
    """A mark cannot be applied to the model (bad path, granularity or type)."""

    def __init__(self, code: str, path: str, message: str):
        super().__init__(f"{code} {path}: {message}")
        self.code = code
        self.path = path


@dataclass
class Partition:
    """Total map from class name to domain, plus non-fatal mark warnings."""

    domain: dict[str, str]
    warnings: list[ir.Diagnostic] = field(default_factory=list)

    def of_instance(self, machine: Machine, name: str) -> str:
        return self.domain[machine.instance_class[name].name]


@dataclass
class BoundarySignal:
    receiver_class: str
    signal: str
    direction: str  # sw_to_hw | hw_to_sw
    routes: list[tuple[str, str]]  # (sender instance, receiver instance)


def derive_partition(model: ir.Model, marks: ir.MarkSet) -> Partition:
    """Apply marks to a validated model.

    Classes default to SW; `isHardware` (true) on a class path flips it
    to HW, and an explicit false is legal and keeps it SW. Unknown mark
    keys are ignored with a W_UNKNOWN_MARK warning so foreign marks
    stay non-intrusive. Bad paths, non-class granularity and non-boolean
    values raise MarkError.
    """
    ir.ensure_valid(model)
    domain = {c.name: SW for c in model.classes}
    warnings: list[ir.Diagnostic] = []
    for m in marks.marks:
        if m.key != MARK_IS_HARDWARE:
            warnings.append(
                ir.Diagnostic(
                    ir.WARNING,
                    "W_UNKNOWN_MARK",
                    m.path,
                    f"ignoring unknown mark key {m.key}",
                )
            )
            continue
        target = ir.resolve(model, m.path)
        if target is None:
            raise MarkError("E_MARK_PATH", m.path, "mark path does not resolve")
        if not isinstance(target, ir.ClassDef):
            raise MarkError(
                "E_MARK_GRANULARITY",
                m.path,
                f"{MARK_IS_HARDWARE} applies to classes only",
            )
        if not isinstance(m.value, bool):
            raise MarkError(
                "E_MARK_TYPE", m.path, f"{MARK_IS_HARDWARE} takes a boolean value"
            )
        domain[target.name] = HW if m.value else SW
    return Partition(domain=domain, warnings=warnings)


def boundary(model: ir.Model, partition: Partition) -> list[BoundarySignal]:
    """Boundary signals: every send route whose endpoints sit in
    different domains, grouped by (receiver class, signal) and sorted
    ascending by those names."""
    ir.ensure_valid(model)
    instances = {i.name: i for i in model.instances}
    senders = {c.name: [i.name for i in model.instances if i.class_name == c.name]
               for c in model.classes}
    groups: dict[tuple[str, str], set[tuple[str, str]]] = {}

    def scan(cls: ir.ClassDef, stmts: list[ir.Stmt]) -> None:
        for s in stmts:
            if isinstance(s, ir.Send):
                recv_cls = instances[s.instance].class_name
                if partition.domain[cls.name] != partition.domain[recv_cls]:
                    routes = groups.setdefault((recv_cls, s.signal), set())
                    for sender in senders[cls.name]:
                        routes.add((sender, s.instance))
            elif isinstance(s, ir.If):
                scan(cls, s.then)
                scan(cls, s.orelse)

    for cls in model.classes:
        for st in cls.machine.states:
            for tr in st.transitions:
                scan(cls, tr.actions)

    result = []
    for (recv_cls, signal) in sorted(groups):
        direction = SW_TO_HW if partition.domain[recv_cls] == HW else HW_TO_SW
        result.append(
            BoundarySignal(
                receiver_class=recv_cls,
                signal=signal,
                direction=direction,
                routes=sorted(groups[(recv_cls, signal)]),
            )
        )
    return result


# ---------------------------------------------------------------------------
# Co-simulation
# ---------------------------------------------------------------------------


@dataclass
class CosimEvent(TraceEvent):
    domain: str = SW
    bus_enqueue_step: int | None = None
    bus_deliver_step: int | None = None


@dataclass
class PartitionedTrace(Trace):
    bus_crossings: int = 0


@dataclass
class _BusEntry:
    envelope: SignalEnvelope
    enqueue_round: int
    deliver_round: int


def cosim(
    model: ir.Model,
    partition: Partition,
    scenario: ir.Scenario,
    config: ExecConfig | None = None,
    latency: int = 1,
) -> PartitionedTrace:
    """Co-simulate the partitioned system and return the merged trace.

    Each dispatch round runs at most one SW step, then at most one HW
    step, then a bus tick. A cross-boundary envelope enqueued during
    round R becomes deliverable in round R + latency; intra-domain sends
    and scenario injections bypass the bus entirely. Degenerate
    partitions (all-SW, all-HW) reproduce the reference trace
    event-for-event.
    """
    if latency < 1:
        raise ValueError("latency must be >= 1")
    config = config or ExecConfig()
    machine = Machine(model)
    executor.check_scenario_refs(model, scenario)
    state = machine.initial_state()
    islands = {
        SW: [n for n in machine.instance_order if partition.of_instance(machine, n) == SW],
        HW: [n for n in machine.instance_order if partition.of_instance(machine, n) == HW],
    }
    groups, at_steps = executor.group_injections(scenario)
    pending_ats = list(at_steps)
    rng = random.Random(config.seed) if config.scheduler == executor.RANDOM else None

    bus: list[_BusEntry] = []
    bus_steps: dict[int, tuple[int, int]] = {}  # seq -> (enqueue, deliver) rounds
    bus_crossings = 0
    events: list[TraceEvent] = []
    outcome = Outcome(QUIESCENT)
    round_no = 0

    def enqueue_group(at: int) -> None:
        for inj in groups[at]:
            env = SignalEnvelope(
                state.next_seq, ENV_SENDER, inj.instance, inj.signal,
                tuple(int(a) for a in inj.args),
            )
            state.next_seq += 1
            state.pending[inj.instance].append(env)

    def inject_due() -> None:
        if pending_ats and pending_ats[0] == state.dispatch_count:
            enqueue_group(pending_ats.pop(0))

    def island_pending(domain: str) -> bool:
        return any(state.pending[n] for n in islands[domain])

    def pick(domain: str) -> SignalEnvelope:
        if rng is None:
            best = None
            for name in islands[domain]:
                q = state.pending[name]
                if q and (best is None or q[0].seq < best[0].seq):
                    best = q
            assert best is not None
            return best.popleft()
        nonempty = [n for n in islands[domain] if state.pending[n]]
        return state.pending[nonempty[rng.randrange(len(nonempty))]].popleft()

    def make_deliver(sender_domain: str):
        def deliver(env: SignalEnvelope) -> None:
            nonlocal bus_crossings
            recv_domain = partition.of_instance(machine, env.receiver)
            if recv_domain == sender_domain:
                state.pending[env.receiver].append(env)
            else:
                bus.append(_BusEntry(env, round_no, round_no + latency))
                bus_steps[env.seq] = (round_no, round_no + latency)
                bus_crossings += 1
        return deliver

    while True:
        # bus delivery due this round (FIFO order preserves send order)
        still = []
        for entry in bus:
            if entry.deliver_round <= round_no:
                state.pending[entry.envelope.receiver].append(entry.envelope)
            else:
                still.append(entry)
        bus[:] = still

        inject_due()
        if state.quiescent():
            if bus:
                round_no += 1
                continue
            if pending_ats:
                enqueue_group(pending_ats.pop(0))
                continue
            break

        error = None
        for domain in (SW, HW):
            inject_due()
            if not island_pending(domain):
                continue
            if state.dispatch_count >= config.max_steps:
                error = Outcome(STEP_LIMIT, "E_STEP_LIMIT")
                break
            env = pick(domain)
            event = executor.execute_rtc_step(
                machine, state, env, make_deliver(domain),
                state.dispatch_count, config.mode,
            )
            if event is None:
                error = Outcome(
                    RUNTIME_ERROR,
                    f"E_UNHANDLED {env.receiver}.{env.signal} in state"
                    f" {state.states[env.receiver]} at step {state.dispatch_count}",
                )
                break
            enq, dly = bus_steps.get(env.seq, (None, None))
            events.append(
                CosimEvent(
                    step=event.step,
                    envelope=event.envelope,
                    from_state=event.from_state,
                    to_state=event.to_state,
                    writes=event.writes,
                    sent=event.sent,
                    dropped=event.dropped,
                    domain=domain,
                    bus_enqueue_step=enq,
                    bus_deliver_step=dly,
                )
            )
            state.dispatch_count += 1
        if error is not None:
            outcome = error
            break
        round_no += 1

    expectations: list[executor.ExpectationResult] = []
    if outcome.kind == QUIESCENT:
        expectations = executor.check_expectations(machine, state, scenario)
        failed = sum(1 for e in expectations if not e.passed)
        if failed:
            outcome = Outcome(QUIESCENT, f"{failed} expectation(s) failed")
    return PartitionedTrace(
        events=events,
        final=state,
        outcome=outcome,
        expectations=expectations,
        bus_crossings=bus_crossings,
    )


def serialize_partitioned_trace(trace: PartitionedTrace) -> str:
    """Executor JSON Lines format plus per-event domain and bus steps
    (null for intra-domain envelopes)."""
    lines = []
    for ev in trace.events:
        d = executor.event_dict(ev)
        d["domain"] = ev.domain if isinstance(ev, CosimEvent) else SW
        d["bus_enqueue_step"] = getattr(ev, "bus_enqueue_step", None)
        d["bus_deliver_step"] = getattr(ev, "bus_deliver_step", None)
        lines.append(json.dumps(d))
    lines.append(json.dumps(executor.summary_dict(trace)))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Equivalence checking
# ---------------------------------------------------------------------------


@dataclass
class LevelResult:
    level: str
    required: bool
    passed: bool
    detail: str | None = None


@dataclass
class EquivalenceReport:
    levels: list[LevelResult]

    @property
    def ok(self) -> bool:
        return all(l.passed for l in self.levels if l.required)

    def render(self) -> str:
        parts = []
        for l in self.levels:
            word = "pass" if l.passed else "fail"
            if not l.required:
                word += " (informative)"
            parts.append(f"{l.level} {word}")
        return " ".join(parts)


def _pair_streams(trace: Trace) -> dict[tuple[str, str], list[tuple[str, tuple[int, ...]]]]:
    streams: dict[tuple[str, str], list[tuple[str, tuple[int, ...]]]] = {}
    for ev in trace.events:
        key = (ev.envelope.sender, ev.envelope.receiver)
        streams.setdefault(key, []).append((ev.envelope.signal, ev.envelope.args))
    return streams


def equivalence_check(
    reference: Trace, partitioned: Trace, confluent: bool
) -> EquivalenceReport:
    """Grade a partitioned trace against the reference trace (L1/L2/L3)."""
    ref_streams = _pair_streams(reference)
    part_streams = _pair_streams(partitioned)
    l1_detail = None
    for key in sorted(set(ref_streams) | set(part_streams)):
        a = ref_streams.get(key, [])
        b = part_streams.get(key, [])
        if a != b:
            i = next(
                (i for i, (x, y) in enumerate(zip(a, b)) if x != y), min(len(a), len(b))
            )
            got = b[i] if i < len(b) else "nothing"
            want = a[i] if i < len(a) else "nothing"
            l1_detail = f"pair {key[0]}->{key[1]} diverges at index {i}: {want} vs {got}"
            break
    l2_ok = executor.check_causality(partitioned)
    ref_attrs = reference.final.attrs
    part_attrs = partitioned.final.attrs
    l3_detail = None
    if ref_attrs != part_attrs:
        for inst in ref_attrs:
            if ref_attrs[inst] != part_attrs.get(inst):
                l3_detail = (
                    f"{inst}: {ref_attrs[inst]} vs {part_attrs.get(inst)}"
                )
                break
    return EquivalenceReport(
        levels=[
            LevelResult("L1", True, l1_detail is None, l1_detail),
            LevelResult("L2", True, l2_ok, None if l2_ok else "causality violated"),
            LevelResult("L3", confluent, l3_detail is None, l3_detail),
        ]
    )


def all_partitions(model: ir.Model) -> list[Partition]:
    """Every 2^k domain assignment of the model's classes, in a stable
    order (used by the repartition sweeps)."""
    names = [c.name for c in model.classes]
    result = []
    for combo in itertools.product((SW, HW), repeat=len(names)):
        result.append(Partition(domain=dict(zip(names, combo))))
    return result


def marks_for_partition(partition: Partition) -> ir.MarkSet:
    """Render a partition as an explicit marks file (HW classes marked
    true, SW classes marked false), for sweeps that must repartition by
    marks alone."""
    marks = [
        ir.Mark(MARK_IS_HARDWARE, partition.domain[name] == HW, name)
        for name in partition.domain
    ]
    return ir.MarkSet(marks=marks)
