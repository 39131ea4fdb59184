"""Code generation: one interface manifest, two target texts.

The manifest is the single description of every cross-boundary signal:
a dense 0-based id (assigned in ascending (receiver class, signal name)
order), a direction, and a packed payload layout (parameters in
declaration order, bit offsets ascending from 0, bit 0 least
significant). Both emitted targets derive their boundary constants from
it, so the two halves agree by construction; `check_interfaces`
re-extracts the constants from the emitted texts and verifies them
against the manifest, which also catches externally tampered files.

The C half carries, per software class, a state enum, an instance
struct with exact-width unsigned attributes, a dispatch function
mirroring the transition table, and per-instance FIFO queues; plus bus
glue (`bus_send` out, `bus_deliver` in) and an injection entry point.
The VHDL half carries, per hardware class, an entity with clock/reset
and event input ports and a synchronous process implementing the same
transition table over unsigned registers. All arithmetic wraps at the
declared widths in both targets, matching the interpreter bit for bit.

Emission is pure text generation: identical inputs give identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field

from . import frontend, ir, partition as part

C_TYPES = {"bool": "uint8_t", "u8": "uint8_t", "u16": "uint16_t", "u32": "uint32_t"}


class CodegenError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


# ---------------------------------------------------------------------------
# Interface manifest
# ---------------------------------------------------------------------------


@dataclass
class PayloadField:
    name: str
    width_bits: int
    bit_offset: int


@dataclass
class ManifestSignal:
    id: int
    receiver_class: str
    signal: str
    direction: str
    payload: list[PayloadField] = field(default_factory=list)
    payload_total_bits: int = 0


@dataclass
class InterfaceManifest:
    model_hash: str  # 64-bit content hash, 16 hex digits
    signals: list[ManifestSignal] = field(default_factory=list)


def mangle(receiver_class: str, signal: str) -> str:
    return f"SIG_{receiver_class.upper()}_{signal.upper()}"


def _check_name_clashes(manifest: InterfaceManifest) -> None:
    names: set[str] = set()
    for s in manifest.signals:
        base = mangle(s.receiver_class, s.signal)
        for name in (base, base + "_BITS"):
            if name in names:
                raise CodegenError("E_NAME_CLASH", f"mangled name {name} is not unique")
            names.add(name)


def model_content_hash(model: ir.Model, partition: part.Partition) -> str:
    """64-bit hash over the canonical model text plus the partition's
    class-to-domain map (the semantic content of the marks)."""
    text = frontend.print_model(model)
    text += "".join(
        f"{name}={partition.domain[name]}\n" for name in sorted(partition.domain)
    )
    return hashlib.blake2b(text.encode("utf-8"), digest_size=8).hexdigest()


def build_manifest(model: ir.Model, partition: part.Partition) -> InterfaceManifest:
    """Derive the interface manifest for a (model, partition) pair."""
    ir.ensure_valid(model)
    params_of = {
        (c.name, s.name): s.params for c in model.classes for s in c.signals
    }
    signals = []
    for idx, bs in enumerate(part.boundary(model, partition)):
        payload = []
        offset = 0
        for p in params_of[(bs.receiver_class, bs.signal)]:
            width = ir.WIDTHS[p.type]
            payload.append(PayloadField(p.name, width, offset))
            offset += width
        signals.append(
            ManifestSignal(
                id=idx,
                receiver_class=bs.receiver_class,
                signal=bs.signal,
                direction=bs.direction,
                payload=payload,
                payload_total_bits=offset,
            )
        )
    manifest = InterfaceManifest(
        model_hash=model_content_hash(model, partition), signals=signals
    )
    _check_name_clashes(manifest)
    return manifest


def manifest_to_json(manifest: InterfaceManifest) -> str:
    """Canonical JSON: sorted keys, two-space indent, byte-stable."""
    obj = {
        "model_hash": manifest.model_hash,
        "signals": [
            {
                "id": s.id,
                "receiver_class": s.receiver_class,
                "signal": s.signal,
                "direction": s.direction,
                "payload": [
                    {"name": f.name, "width_bits": f.width_bits, "bit_offset": f.bit_offset}
                    for f in s.payload
                ],
                "payload_total_bits": s.payload_total_bits,
            }
            for s in manifest.signals
        ],
    }
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def manifest_from_json(text: str) -> InterfaceManifest:
    obj = json.loads(text)
    return InterfaceManifest(
        model_hash=obj["model_hash"],
        signals=[
            ManifestSignal(
                id=s["id"],
                receiver_class=s["receiver_class"],
                signal=s["signal"],
                direction=s["direction"],
                payload=[
                    PayloadField(f["name"], f["width_bits"], f["bit_offset"])
                    for f in s["payload"]
                ],
                payload_total_bits=s["payload_total_bits"],
            )
            for s in obj["signals"]
        ],
    )


# ---------------------------------------------------------------------------
# Shared emission helpers
# ---------------------------------------------------------------------------


class _Writer:
    def __init__(self) -> None:
        self.lines: list[str] = []
        self.indent = 0

    def w(self, text: str = "") -> None:
        self.lines.append(("    " * self.indent + text) if text else "")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _payload_bytes(bits: int) -> int:
    return max(1, (bits + 7) // 8)


def _max_args(model: ir.Model) -> int:
    n = max((len(s.params) for c in model.classes for s in c.signals), default=0)
    return max(1, n)


def _class_payload_layout(cls: ir.ClassDef, signal: str) -> list[tuple[ir.SignalParam, int]]:
    """(param, bit offset) pairs, declaration order, offsets ascending."""
    sig = next(s for s in cls.signals if s.name == signal)
    layout = []
    offset = 0
    for p in sig.params:
        layout.append((p, offset))
        offset += ir.WIDTHS[p.type]
    return layout


def _class_args_bits(cls: ir.ClassDef) -> int:
    widths = [
        sum(ir.WIDTHS[p.type] for p in s.params) for s in cls.signals
    ]
    return max(1, max(widths, default=0))


# ---------------------------------------------------------------------------
# C emitter
# ---------------------------------------------------------------------------


def _c_expr(e: ir.Expr, param_index: dict[str, tuple[int, str]]) -> str:
    if isinstance(e, ir.IntLit):
        return f"{e.value}u"
    if isinstance(e, ir.BoolLit):
        return "1u" if e.value else "0u"
    if isinstance(e, ir.AttrRef):
        return f"self->{e.name}"
    if isinstance(e, ir.ParamRef):
        idx, ty = param_index[e.name]
        return f"({C_TYPES[ty]})args[{idx}]"
    if isinstance(e, ir.Unary):
        inner = _c_expr(e.operand, param_index)
        if e.op == "!":
            return f"(uint8_t)(!{inner})"
        return f"({C_TYPES[e.ty]})(0u - {inner})"
    if isinstance(e, ir.Binary):
        l = _c_expr(e.left, param_index)
        r = _c_expr(e.right, param_index)
        if e.op in ("+", "-", "*"):
            return f"({C_TYPES[e.ty]})({l} {e.op} {r})"
        return f"(uint8_t)({l} {e.op} {r})"
    raise TypeError(f"unexpected expression node {e!r}")


class _CEmitter:
    def __init__(
        self,
        model: ir.Model,
        partition: part.Partition,
        manifest: InterfaceManifest,
        name: str,
    ):
        self.model = model
        self.partition = partition
        self.manifest = manifest
        self.name = name
        self.classes = {c.name: c for c in model.classes}
        self.instances = {i.name: i for i in model.instances}
        self.sw_classes = [c for c in model.classes if partition.domain[c.name] == part.SW]
        self.sw_instances = [
            i for i in model.instances if partition.domain[i.class_name] == part.SW
        ]
        self.sw_index = {i.name: k for k, i in enumerate(self.sw_instances)}
        self.max_args = _max_args(model)
        self.inbound = [s for s in manifest.signals if s.direction == part.HW_TO_SW]

    def header(self) -> str:
        w = _Writer()
        guard = f"{self.name.upper()}_SW_H"
        w.w("/* Generated software interface header. Do not edit. */")
        w.w(f"#ifndef {guard}")
        w.w(f"#define {guard}")
        w.w()
        w.w("#include <stdint.h>")
        w.w()
        w.w(f"/* model hash {self.manifest.model_hash} */")
        w.w()
        w.w("/* Boundary signal ids and payload widths */")
        for s in self.manifest.signals:
            w.w(f"#define {mangle(s.receiver_class, s.signal)} {s.id}")
            w.w(f"#define {mangle(s.receiver_class, s.signal)}_BITS {s.payload_total_bits}")
        w.w()
        w.w("/* Software instance ids (dispatch and bus addressing) */")
        for inst in self.sw_instances:
            w.w(f"#define SWI_{inst.name.upper()} {self.sw_index[inst.name]}u")
        w.w(f"#define SW_INSTANCE_COUNT {len(self.sw_instances)}u")
        w.w()
        w.w("/* Provided by the platform: outbound boundary transport. */")
        w.w(
            f"void {self.name}_bus_send(uint32_t sig_id, const uint8_t *payload,"
            " uint32_t nbits);"
        )
        w.w()
        w.w(f"void {self.name}_reset(void);")
        w.w(f"int {self.name}_step(void);")
        w.w(
            f"void {self.name}_inject(uint32_t inst_id, uint32_t ev,"
            " const uint32_t *args, uint32_t nargs);"
        )
        w.w(
            f"void {self.name}_bus_deliver(uint32_t inst_id, uint32_t sig_id,"
            " const uint8_t *payload);"
        )
        w.w()
        w.w(f"#endif /* {guard} */")
        return w.text()

    def source(self) -> str:
        w = _Writer()
        w.w("/* Generated software half. Do not edit. */")
        w.w("#include <stdint.h>")
        w.w(f'#include "{self.name}_sw.h"')
        w.w()
        w.w("#define QUEUE_CAP 64u")
        w.w(f"#define MAX_ARGS {self.max_args}u")
        w.w()
        self._queue_machinery(w)
        for cls in self.sw_classes:
            self._class_decl(w, cls)
        self._instance_storage(w)
        self._bit_helpers(w)
        for cls in self.sw_classes:
            self._dispatch_fn(w, cls)
        self._entry_points(w)
        return w.text()

    def _queue_machinery(self, w: _Writer) -> None:
        w.w("typedef struct {")
        w.w("    uint32_t ev;")
        w.w("    uint32_t args[MAX_ARGS];")
        w.w("} event_slot_t;")
        w.w()
        w.w("typedef struct {")
        w.w("    event_slot_t slots[QUEUE_CAP];")
        w.w("    uint32_t head;")
        w.w("    uint32_t count;")
        w.w("} event_queue_t;")
        w.w()
        n = max(1, len(self.sw_instances))
        w.w(f"static event_queue_t queues[{n}];")
        w.w()
        w.w("static void queue_push(uint32_t inst_id, uint32_t ev,")
        w.w("                       const uint32_t *args, uint32_t nargs) {")
        w.w("    event_queue_t *q = &queues[inst_id];")
        w.w("    event_slot_t *slot;")
        w.w("    uint32_t k;")
        w.w("    if (q->count == QUEUE_CAP) {")
        w.w("        return; /* overflow: drop (platform sizes QUEUE_CAP) */")
        w.w("    }")
        w.w("    slot = &q->slots[(q->head + q->count) % QUEUE_CAP];")
        w.w("    slot->ev = ev;")
        w.w("    for (k = 0; k < MAX_ARGS; k++) {")
        w.w("        slot->args[k] = (args != 0 && k < nargs) ? args[k] : 0u;")
        w.w("    }")
        w.w("    q->count++;")
        w.w("}")
        w.w()

    def _class_decl(self, w: _Writer, cls: ir.ClassDef) -> None:
        up = cls.name.upper()
        w.w(f"/* ---- class {cls.name} ---- */")
        w.w()
        w.w("typedef enum {")
        for i, st in enumerate(cls.machine.states):
            comma = "," if i + 1 < len(cls.machine.states) else ""
            w.w(f"    {up}_ST_{st.name.upper()} = {i}{comma}")
        w.w(f"}} {cls.name}_state_t;")
        w.w()
        if cls.signals:
            w.w("typedef enum {")
            for i, s in enumerate(cls.signals):
                comma = "," if i + 1 < len(cls.signals) else ""
                w.w(f"    {up}_EV_{s.name.upper()} = {i}{comma}")
            w.w(f"}} {cls.name}_event_t;")
            w.w()
        w.w("typedef struct {")
        w.w(f"    {cls.name}_state_t state;")
        for a in cls.attributes:
            w.w(f"    {C_TYPES[a.type]} {a.name};")
        w.w(f"}} {cls.name}_t;")
        w.w()

    def _instance_storage(self, w: _Writer) -> None:
        for inst in self.sw_instances:
            w.w(f"static {inst.class_name}_t inst_{inst.name};")
        if self.sw_instances:
            w.w()

    def _bit_helpers(self, w: _Writer) -> None:
        need_put = any(
            s.direction == part.SW_TO_HW and s.payload for s in self.manifest.signals
        )
        need_get = any(s.payload for s in self.inbound)
        if not need_put and not need_get:
            return
        if need_put:
            self._put_bits(w)
        if need_get:
            self._get_bits(w)

    def _put_bits(self, w: _Writer) -> None:
        w.w("static void put_bits(uint8_t *buf, uint32_t offset, uint32_t width,")
        w.w("                     uint32_t value) {")
        w.w("    uint32_t k;")
        w.w("    for (k = 0; k < width; k++) {")
        w.w("        uint32_t bit = offset + k;")
        w.w("        if ((value >> k) & 1u) {")
        w.w("            buf[bit / 8u] |= (uint8_t)(1u << (bit % 8u));")
        w.w("        }")
        w.w("    }")
        w.w("}")
        w.w()

    def _get_bits(self, w: _Writer) -> None:
        w.w("static uint32_t get_bits(const uint8_t *buf, uint32_t offset,")
        w.w("                         uint32_t width) {")
        w.w("    uint32_t value = 0;")
        w.w("    uint32_t k;")
        w.w("    for (k = 0; k < width; k++) {")
        w.w("        uint32_t bit = offset + k;")
        w.w("        if ((buf[bit / 8u] >> (bit % 8u)) & 1u) {")
        w.w("            value |= (1u << k);")
        w.w("        }")
        w.w("    }")
        w.w("    return value;")
        w.w("}")
        w.w()

    def _send_stmt(self, w: _Writer, cls: ir.ClassDef, s: ir.Send,
                   param_index: dict[str, tuple[int, str]]) -> None:
        recv = self.instances[s.instance]
        recv_cls = self.classes[recv.class_name]
        if self.partition.domain[recv.class_name] == part.SW:
            ev = f"{recv.class_name.upper()}_EV_{s.signal.upper()}"
            if s.args:
                w.w("{")
                w.indent += 1
                w.w("uint32_t sargs[MAX_ARGS];")
                for i, a in enumerate(s.args):
                    w.w(f"sargs[{i}] = (uint32_t){_c_expr(a, param_index)};")
                w.w(
                    f"queue_push(SWI_{s.instance.upper()}, {ev}, sargs,"
                    f" {len(s.args)}u);"
                )
                w.indent -= 1
                w.w("}")
            else:
                w.w(f"queue_push(SWI_{s.instance.upper()}, {ev}, 0, 0u);")
        else:
            macro = mangle(recv.class_name, s.signal)
            layout = _class_payload_layout(recv_cls, s.signal)
            total = sum(ir.WIDTHS[p.type] for p, _ in layout)
            w.w(f"{{ /* send {s.instance}.{s.signal}: cross-boundary */")
            w.indent += 1
            w.w(f"uint8_t payload[{_payload_bytes(total)}] = {{0}};")
            for (p, offset), a in zip(layout, s.args):
                w.w(
                    f"put_bits(payload, {offset}u, {ir.WIDTHS[p.type]}u,"
                    f" (uint32_t){_c_expr(a, param_index)});"
                )
            w.w(f"{self.name}_bus_send({macro}, payload, {macro}_BITS);")
            w.indent -= 1
            w.w("}")

    def _stmts(self, w: _Writer, cls: ir.ClassDef, stmts: list[ir.Stmt],
               param_index: dict[str, tuple[int, str]]) -> None:
        for s in stmts:
            if isinstance(s, ir.Assign):
                w.w(f"self->{s.attr} = {_c_expr(s.value, param_index)};")
            elif isinstance(s, ir.Send):
                self._send_stmt(w, cls, s, param_index)
            elif isinstance(s, ir.If):
                w.w(f"if ({_c_expr(s.cond, param_index)}) {{")
                w.indent += 1
                self._stmts(w, cls, s.then, param_index)
                w.indent -= 1
                if s.orelse:
                    w.w("} else {")
                    w.indent += 1
                    self._stmts(w, cls, s.orelse, param_index)
                    w.indent -= 1
                w.w("}")

    def _dispatch_fn(self, w: _Writer, cls: ir.ClassDef) -> None:
        up = cls.name.upper()
        w.w(f"static void {cls.name}_dispatch({cls.name}_t *self, uint32_t ev,")
        w.w("        const uint32_t *args) {")
        w.indent += 1
        w.w("(void)args;")
        has_any = any(st.transitions for st in cls.machine.states)
        if not has_any:
            w.w("(void)self;")
            w.w("(void)ev;")
            w.indent -= 1
            w.w("}")
            w.w()
            return
        w.w("switch (self->state) {")
        for st in cls.machine.states:
            w.w(f"case {up}_ST_{st.name.upper()}:")
            w.indent += 1
            if st.transitions:
                w.w("switch (ev) {")
                for tr in st.transitions:
                    sig = next(s for s in cls.signals if s.name == tr.signal)
                    param_index = {
                        p.name: (i, p.type) for i, p in enumerate(sig.params)
                    }
                    w.w(f"case {up}_EV_{tr.signal.upper()}: {{")
                    w.indent += 1
                    self._stmts(w, cls, tr.actions, param_index)
                    w.w(f"self->state = {up}_ST_{tr.target.upper()};")
                    w.w("break;")
                    w.indent -= 1
                    w.w("}")
                w.w("default:")
                w.w("    break; /* unhandled in this state: dropped */")
                w.w("}")
            w.w("break;")
            w.indent -= 1
        w.w("}")
        w.indent -= 1
        w.w("}")
        w.w()

    def _entry_points(self, w: _Writer) -> None:
        w.w(f"void {self.name}_reset(void) {{")
        w.indent += 1
        w.w("uint32_t k;")
        for inst in self.sw_instances:
            cls = self.classes[inst.class_name]
            up = cls.name.upper()
            w.w(f"inst_{inst.name}.state = {up}_ST_{cls.machine.initial.upper()};")
            for a in cls.attributes:
                w.w(f"inst_{inst.name}.{a.name} = {int(a.default)}u;")
        w.w(f"for (k = 0; k < {max(1, len(self.sw_instances))}u; k++) {{")
        w.w("    queues[k].head = 0;")
        w.w("    queues[k].count = 0;")
        w.w("}")
        w.indent -= 1
        w.w("}")
        w.w()

        w.w("static void sw_dispatch(uint32_t inst_id, uint32_t ev,")
        w.w("                        const uint32_t *args) {")
        w.indent += 1
        if self.sw_instances:
            w.w("switch (inst_id) {")
            for inst in self.sw_instances:
                w.w(f"case SWI_{inst.name.upper()}:")
                w.w(f"    {inst.class_name}_dispatch(&inst_{inst.name}, ev, args);")
                w.w("    break;")
            w.w("default:")
            w.w("    break;")
            w.w("}")
        else:
            w.w("(void)inst_id;")
            w.w("(void)ev;")
            w.w("(void)args;")
        w.indent -= 1
        w.w("}")
        w.w()

        w.w(f"int {self.name}_step(void) {{")
        w.indent += 1
        w.w("uint32_t i;")
        w.w("for (i = 0; i < SW_INSTANCE_COUNT; i++) {")
        w.indent += 1
        w.w("event_queue_t *q = &queues[i];")
        w.w("if (q->count > 0u) {")
        w.indent += 1
        w.w("event_slot_t slot = q->slots[q->head];")
        w.w("q->head = (q->head + 1u) % QUEUE_CAP;")
        w.w("q->count--;")
        w.w("sw_dispatch(i, slot.ev, slot.args);")
        w.w("return 1;")
        w.indent -= 1
        w.w("}")
        w.indent -= 1
        w.w("}")
        w.w("return 0;")
        w.indent -= 1
        w.w("}")
        w.w()

        w.w(f"void {self.name}_inject(uint32_t inst_id, uint32_t ev,")
        w.w("        const uint32_t *args, uint32_t nargs) {")
        w.w("    queue_push(inst_id, ev, args, nargs);")
        w.w("}")
        w.w()

        w.w(f"void {self.name}_bus_deliver(uint32_t inst_id, uint32_t sig_id,")
        w.w("        const uint8_t *payload) {")
        w.indent += 1
        if not self.inbound:
            w.w("(void)inst_id;")
            w.w("(void)sig_id;")
            w.w("(void)payload;")
        else:
            w.w("uint32_t args[MAX_ARGS];")
            w.w("uint32_t k;")
            w.w("(void)payload;")
            w.w("for (k = 0; k < MAX_ARGS; k++) {")
            w.w("    args[k] = 0;")
            w.w("}")
            w.w("switch (sig_id) {")
            for s in self.inbound:
                cls = self.classes[s.receiver_class]
                w.w(f"case {mangle(s.receiver_class, s.signal)}: {{")
                w.indent += 1
                for i, f in enumerate(s.payload):
                    w.w(f"args[{i}] = get_bits(payload, {f.bit_offset}u, {f.width_bits}u);")
                ev = f"{s.receiver_class.upper()}_EV_{s.signal.upper()}"
                w.w(f"queue_push(inst_id, {ev}, args, {len(s.payload)}u);")
                w.w("break;")
                w.indent -= 1
                w.w("}")
            w.w("default:")
            w.w("    break;")
            w.w("}")
        w.indent -= 1
        w.w("}")


def emit_c(
    model: ir.Model,
    partition: part.Partition,
    manifest: InterfaceManifest,
    name: str = "model",
) -> tuple[str, str]:
    """Emit the software half; returns (c_source, c_header)."""
    ir.ensure_valid(model)
    _check_name_clashes(manifest)
    emitter = _CEmitter(model, partition, manifest, name)
    return emitter.source(), emitter.header()


# ---------------------------------------------------------------------------
# VHDL emitter
# ---------------------------------------------------------------------------


def _v_expr(e: ir.Expr, layout: dict[str, tuple[int, int]]) -> str:
    if isinstance(e, ir.IntLit):
        if e.value > 2**31 - 1:
            # beyond the guaranteed VHDL integer range: hex bit string
            return f'unsigned\'(x"{e.value:08X}")'
        return f"to_unsigned({e.value}, {ir.WIDTHS[e.ty]})"
    if isinstance(e, ir.BoolLit):
        return f"to_unsigned({int(e.value)}, 1)"
    if isinstance(e, ir.AttrRef):
        return f"v_{e.name}"
    if isinstance(e, ir.ParamRef):
        offset, width = layout[e.name]
        return f"unsigned(ev_args({offset + width - 1} downto {offset}))"
    if isinstance(e, ir.Unary):
        inner = _v_expr(e.operand, layout)
        if e.op == "!":
            return f"(not {inner})"
        return f"(to_unsigned(0, {ir.WIDTHS[e.ty]}) - {inner})"
    if isinstance(e, ir.Binary):
        l = _v_expr(e.left, layout)
        r = _v_expr(e.right, layout)
        if e.op == "*":
            return f"resize({l} * {r}, {ir.WIDTHS[e.ty]})"
        if e.op in ("+", "-"):
            return f"({l} {e.op} {r})"
        if e.op == "&&":
            return f"({l} and {r})"
        if e.op == "||":
            return f"({l} or {r})"
        vhdl_op = {"==": "=", "!=": "/=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}[e.op]
        return f"to_u1({l} {vhdl_op} {r})"
    raise TypeError(f"unexpected expression node {e!r}")


class _VhdlEmitter:
    def __init__(
        self,
        model: ir.Model,
        partition: part.Partition,
        manifest: InterfaceManifest,
        name: str,
    ):
        self.model = model
        self.partition = partition
        self.manifest = manifest
        self.name = name
        self.classes = {c.name: c for c in model.classes}
        self.instances = {i.name: i for i in model.instances}
        self.hw_classes = [c for c in model.classes if partition.domain[c.name] == part.HW]
        self.snd_bits = max(
            [1] + [s.payload_total_bits for s in manifest.signals]
        )
        self.loc_bits = max(
            [1]
            + [
                sum(ir.WIDTHS[p.type] for p in s.params)
                for c in model.classes
                for s in c.signals
            ]
        )

    def emit(self) -> str:
        w = _Writer()
        w.w("-- Generated hardware half. Do not edit.")
        w.w(f"-- model hash {self.manifest.model_hash}")
        w.w()
        self._package(w)
        for cls in self.hw_classes:
            self._entity(w, cls)
        return w.text()

    def _package(self, w: _Writer) -> None:
        w.w("library ieee;")
        w.w("use ieee.std_logic_1164.all;")
        w.w("use ieee.numeric_std.all;")
        w.w()
        w.w(f"package {self.name}_iface is")
        w.indent += 1
        w.w("-- Boundary signal ids and payload widths")
        for s in self.manifest.signals:
            base = mangle(s.receiver_class, s.signal)
            w.w(f"constant {base} : natural := {s.id};")
            w.w(f"constant {base}_BITS : natural := {s.payload_total_bits};")
        w.w("-- Instance ids (model population, document order)")
        for k, inst in enumerate(self.model.instances):
            w.w(f"constant INST_{inst.name.upper()} : natural := {k};")
        w.w("-- Class-local event ids")
        for cls in self.model.classes:
            for i, s in enumerate(cls.signals):
                w.w(f"constant EV_{cls.name.upper()}_{s.name.upper()} : natural := {i};")
        w.w("function to_u1(b : boolean) return unsigned;")
        w.w("function to_bool(u : unsigned) return boolean;")
        w.indent -= 1
        w.w(f"end package {self.name}_iface;")
        w.w()
        w.w(f"package body {self.name}_iface is")
        w.indent += 1
        w.w("function to_u1(b : boolean) return unsigned is")
        w.w("begin")
        w.w("    if b then")
        w.w('        return to_unsigned(1, 1);')
        w.w("    else")
        w.w('        return to_unsigned(0, 1);')
        w.w("    end if;")
        w.w("end function;")
        w.w()
        w.w("function to_bool(u : unsigned) return boolean is")
        w.w("begin")
        w.w("    return u /= to_unsigned(0, u'length);")
        w.w("end function;")
        w.indent -= 1
        w.w(f"end package body {self.name}_iface;")
        w.w()

    def _entity(self, w: _Writer, cls: ir.ClassDef) -> None:
        ev_bits = _class_args_bits(cls)
        n_ev = max(1, len(cls.signals))
        w.w("library ieee;")
        w.w("use ieee.std_logic_1164.all;")
        w.w("use ieee.numeric_std.all;")
        w.w(f"use work.{self.name}_iface.all;")
        w.w()
        w.w(f"entity {cls.name} is")
        w.indent += 1
        w.w("port (")
        w.indent += 1
        w.w("clk : in std_logic;")
        w.w("rst : in std_logic;")
        w.w("ev_valid : in std_logic;")
        w.w(f"ev_id : in natural range 0 to {n_ev - 1};")
        w.w(f"ev_args : in std_logic_vector({ev_bits - 1} downto 0);")
        w.w("snd_valid : out std_logic;")
        w.w("snd_sig : out natural;")
        w.w(f"snd_payload : out std_logic_vector({self.snd_bits - 1} downto 0);")
        w.w("loc_valid : out std_logic;")
        w.w("loc_inst : out natural;")
        w.w("loc_ev : out natural;")
        w.w(f"loc_args : out std_logic_vector({self.loc_bits - 1} downto 0)")
        w.indent -= 1
        w.w(");")
        w.indent -= 1
        w.w(f"end entity {cls.name};")
        w.w()
        w.w(f"architecture rtl of {cls.name} is")
        w.indent += 1
        states = ", ".join(f"ST_{st.name.upper()}" for st in cls.machine.states)
        w.w(f"type state_t is ({states});")
        w.w("signal state : state_t;")
        for a in cls.attributes:
            w.w(f"signal r_{a.name} : unsigned({ir.WIDTHS[a.type] - 1} downto 0);")
        w.indent -= 1
        w.w("begin")
        w.indent += 1
        w.w("step : process (clk)")
        w.indent += 1
        for a in cls.attributes:
            w.w(f"variable v_{a.name} : unsigned({ir.WIDTHS[a.type] - 1} downto 0);")
        w.w(f"variable v_snd : std_logic_vector({self.snd_bits - 1} downto 0);")
        w.w(f"variable v_loc : std_logic_vector({self.loc_bits - 1} downto 0);")
        w.indent -= 1
        w.w("begin")
        w.indent += 1
        w.w("if rising_edge(clk) then")
        w.indent += 1
        w.w("if rst = '1' then")
        w.indent += 1
        w.w(f"state <= ST_{cls.machine.initial.upper()};")
        for a in cls.attributes:
            w.w(f"r_{a.name} <= to_unsigned({int(a.default)}, {ir.WIDTHS[a.type]});")
        w.w("snd_valid <= '0';")
        w.w("loc_valid <= '0';")
        w.indent -= 1
        w.w("else")
        w.indent += 1
        w.w("snd_valid <= '0';")
        w.w("loc_valid <= '0';")
        w.w("if ev_valid = '1' then")
        w.indent += 1
        for a in cls.attributes:
            w.w(f"v_{a.name} := r_{a.name};")
        w.w("v_snd := (others => '0');")
        w.w("v_loc := (others => '0');")
        self._machine_case(w, cls)
        for a in cls.attributes:
            w.w(f"r_{a.name} <= v_{a.name};")
        w.indent -= 1
        w.w("end if;")
        w.indent -= 1
        w.w("end if;")
        w.indent -= 1
        w.w("end if;")
        w.indent -= 1
        w.w("end process step;")
        w.indent -= 1
        w.w(f"end architecture rtl;")
        w.w()

    def _machine_case(self, w: _Writer, cls: ir.ClassDef) -> None:
        w.w("case state is")
        w.indent += 1
        for st in cls.machine.states:
            w.w(f"when ST_{st.name.upper()} =>")
            w.indent += 1
            if st.transitions:
                w.w("case ev_id is")
                w.indent += 1
                for tr in st.transitions:
                    sig = next(s for s in cls.signals if s.name == tr.signal)
                    layout = {
                        p.name: (off, ir.WIDTHS[p.type])
                        for p, off in _class_payload_layout(cls, tr.signal)
                    }
                    w.w(f"when EV_{cls.name.upper()}_{tr.signal.upper()} =>")
                    w.indent += 1
                    self._stmts(w, cls, tr.actions, layout)
                    w.w(f"state <= ST_{tr.target.upper()};")
                    w.indent -= 1
                w.w("when others =>")
                w.w("    null; -- unhandled in this state: dropped")
                w.indent -= 1
                w.w("end case;")
            else:
                w.w("null;")
            w.indent -= 1
        w.indent -= 1
        w.w("end case;")

    def _stmts(self, w: _Writer, cls: ir.ClassDef, stmts: list[ir.Stmt],
               layout: dict[str, tuple[int, int]]) -> None:
        for s in stmts:
            if isinstance(s, ir.Assign):
                w.w(f"v_{s.attr} := {_v_expr(s.value, layout)};")
            elif isinstance(s, ir.Send):
                self._send(w, cls, s, layout)
            elif isinstance(s, ir.If):
                w.w(f"if to_bool({_v_expr(s.cond, layout)}) then")
                w.indent += 1
                self._stmts(w, cls, s.then, layout)
                w.indent -= 1
                if s.orelse:
                    w.w("else")
                    w.indent += 1
                    self._stmts(w, cls, s.orelse, layout)
                    w.indent -= 1
                w.w("end if;")

    def _send(self, w: _Writer, cls: ir.ClassDef, s: ir.Send,
              layout: dict[str, tuple[int, int]]) -> None:
        recv = self.instances[s.instance]
        recv_cls = self.classes[recv.class_name]
        target_layout = _class_payload_layout(recv_cls, s.signal)
        if self.partition.domain[recv.class_name] == part.HW:
            # intra-hardware send: local event interconnect
            w.w(f"-- send {s.instance}.{s.signal} (local)")
            w.w("v_loc := (others => '0');")
            for (p, off), a in zip(target_layout, s.args):
                width = ir.WIDTHS[p.type]
                w.w(
                    f"v_loc({off + width - 1} downto {off}) :="
                    f" std_logic_vector({_v_expr(a, layout)});"
                )
            w.w("loc_valid <= '1';")
            w.w(f"loc_inst <= INST_{s.instance.upper()};")
            w.w(f"loc_ev <= EV_{recv.class_name.upper()}_{s.signal.upper()};")
            w.w("loc_args <= v_loc;")
        else:
            base = mangle(recv.class_name, s.signal)
            w.w(f"-- send {s.instance}.{s.signal} (cross-boundary)")
            w.w("v_snd := (others => '0');")
            for (p, off), a in zip(target_layout, s.args):
                width = ir.WIDTHS[p.type]
                w.w(
                    f"v_snd({off + width - 1} downto {off}) :="
                    f" std_logic_vector({_v_expr(a, layout)});"
                )
            w.w("snd_valid <= '1';")
            w.w(f"snd_sig <= {base};")
            w.w("snd_payload <= v_snd;")


def emit_vhdl(
    model: ir.Model,
    partition: part.Partition,
    manifest: InterfaceManifest,
    name: str = "model",
) -> str:
    """Emit the hardware half as one VHDL text."""
    ir.ensure_valid(model)
    _check_name_clashes(manifest)
    return _VhdlEmitter(model, partition, manifest, name).emit()


# ---------------------------------------------------------------------------
# Combined emission and the interface cross-check
# ---------------------------------------------------------------------------


@dataclass
class EmitOutput:
    c_source: str
    c_header: str
    vhdl_source: str
    manifest: InterfaceManifest


def emit(
    model: ir.Model, partition: part.Partition, name: str = "model"
) -> EmitOutput:
    manifest = build_manifest(model, partition)
    c_source, c_header = emit_c(model, partition, manifest, name)
    vhdl_source = emit_vhdl(model, partition, manifest, name)
    return EmitOutput(c_source, c_header, vhdl_source, manifest)


@dataclass
class CheckReport:
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def render(self) -> str:
        return "\n".join(self.problems) if self.problems else "interfaces consistent"


_C_DEFINE_RE = re.compile(r"^\s*#\s*define\s+(SIG_[A-Za-z0-9_]+)\s+(\d+)\s*$")
_VHDL_CONST_RE = re.compile(
    r"^\s*constant\s+(SIG_[A-Za-z0-9_]+)\s*:\s*natural\s*:=\s*(\d+)\s*;\s*(?:--.*)?$"
)


def _scan(text: str, pattern: re.Pattern) -> dict[str, int]:
    found: dict[str, int] = {}
    for line in text.splitlines():
        m = pattern.match(line)
        if m:
            found[m.group(1)] = int(m.group(2))
    return found


def check_interfaces(
    c_header: str, vhdl_source: str, manifest: InterfaceManifest
) -> CheckReport:
    """Verify that both emitted texts carry exactly the manifest's
    boundary constants (same names, ids and payload widths).

    The scan is tolerant and line-oriented, so it works on files that
    were edited or corrupted after generation.
    """
    expected: dict[str, int] = {}
    for s in manifest.signals:
        base = mangle(s.receiver_class, s.signal)
        expected[base] = s.id
        expected[base + "_BITS"] = s.payload_total_bits

    problems: list[str] = []
    for side, found in (
        ("C header", _scan(c_header, _C_DEFINE_RE)),
        ("VHDL", _scan(vhdl_source, _VHDL_CONST_RE)),
    ):
        for name in sorted(expected):
            if name not in found:
                problems.append(f"{side}: missing {name}")
            elif found[name] != expected[name]:
                problems.append(
                    f"{side}: divergence {name}: {found[name]} != {expected[name]}"
                )
        for name in sorted(set(found) - set(expected)):
            problems.append(f"{side}: unexpected {name} = {found[name]}")
    return CheckReport(problems=problems)
