"""Adaptive-circuit IR: gates, measurements, registers, scheduling, metrics.

A :class:`Circuit` stores operations in program order.  The layered view
(quantum layers interleaved with measurement and classical layers) is
derived by ASAP scheduling in :meth:`Circuit.schedule`; depth and width
are read from that schedule.  Program order is kept because it is a valid
topological order and lets the simulator keep transient superpositions
local to one gadget at a time.

Bit ordering: in a register ``[q0, q1, ..., q_{n-1}]`` holding a binary
value, ``q0`` is the most significant bit.  A unary register holding
``e_x`` has qubit ``x`` set.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import classical
from .classical import Expr

ONE_QUBIT = ("H", "X", "Y", "Z", "S", "Sdag", "T", "Tdag", "Phase", "Rz")
TWO_QUBIT = ("CNOT", "CZ", "ControlledPhase")
PARAMETRIC = ("Phase", "Rz", "ControlledPhase")
_ARITY = {**{k: 1 for k in ONE_QUBIT}, **{k: 2 for k in TWO_QUBIT}}
_PARAMETRIC = frozenset(PARAMETRIC)
ROLES = ("binary", "unary", "coefficient", "index", "ancilla", "phase")


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None
    guard: Expr | None = None

    def __post_init__(self):
        arity = _ARITY.get(self.kind)
        if arity is None:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != arity:
            raise CircuitError(f"{self.kind} takes {arity} operand(s), got {len(self.qubits)}")
        if arity == 2 and self.qubits[0] == self.qubits[1]:
            raise CircuitError(f"{self.kind} operands must be distinct")
        if (self.kind in _PARAMETRIC) != (self.angle is not None):
            raise CircuitError(f"{self.kind}: angle mismatch")


@dataclass(frozen=True)
class Measure:
    """Measure one qubit; the qubit is reset to |0> afterwards."""

    qubit: int
    bit: str
    basis: str = "Z"


@dataclass(frozen=True)
class LoadState:
    """Load a given state onto qubits known to be in |0...0>.

    ``amplitudes`` maps basis index (first qubit = MSB) to amplitude.
    """

    qubits: tuple[int, ...]
    amplitudes: tuple[tuple[int, complex], ...]


@dataclass(frozen=True)
class Project:
    """Two-outcome measurement {|phi><phi|, 1 - |phi><phi|}.

    Outcome bit 0 means the qubits were found in ``phi``; they are then
    reset to |0...0>.  Equivalent to running the inverse of a preparation
    of ``phi`` and measuring all-zeros.
    """

    qubits: tuple[int, ...]
    amplitudes: tuple[tuple[int, complex], ...]
    bit: str


@dataclass(frozen=True)
class Barrier:
    qubits: tuple[int, ...]


Op = Gate | Measure | LoadState | Project | Barrier


@dataclass
class Register:
    name: str
    role: str
    qubits: tuple[int, ...]
    released: bool = False

    def __len__(self):
        return len(self.qubits)

    def __iter__(self):
        return iter(self.qubits)

    def __getitem__(self, i):
        return self.qubits[i]


@dataclass
class DepthWidthReport:
    quantum_depth: int
    width: int
    classical_layers: int
    ancillas_by_construction: dict[str, int] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "quantum_depth": self.quantum_depth,
            "width": self.width,
            "classical_layers": self.classical_layers,
            "ancillas_by_construction": dict(self.ancillas_by_construction),
        }


@dataclass
class Schedule:
    """ASAP placement of every op.

    ``gate_layer[i]`` is the first quantum layer (1-based) of op ``i``;
    ``stage[i]`` is the measurement stage for measuring ops (a stage ``s``
    sits between quantum layers ``s`` and ``s + 1``).
    """

    gate_layer: dict[int, int]
    gate_span: dict[int, int]
    stage: dict[int, int]
    bit_stage: dict[str, int]
    depth: int


class Circuit:
    """Mutable builder for adaptive circuits."""

    def __init__(self, native_2q: bool = False):
        self.ops: list[Op] = []
        self.num_qubits = 0
        self.registers: dict[str, Register] = {}
        self.native_2q = native_2q
        self.postselect: dict[str, int] = {}
        self.constructions: dict[str, int] = {}
        self.outputs: list[int] = []
        self._free: list[int] = []
        self._measured_bits: set[str] = set()
        self._bit_counter = 0
        self._anc_counter = 0
        self._last_op: dict[int, Op] = {}

    # -- registers -----------------------------------------------------------

    def allocate_register(self, name: str, role: str, size: int, reuse: bool = True) -> Register:
        if role not in ROLES:
            raise CircuitError(f"unknown role {role!r}")
        if name in self.registers and not self.registers[name].released:
            raise CircuitError(f"register {name!r} already live")
        qubits = []
        if reuse:
            self._free.sort()
            while self._free and len(qubits) < size:
                qubits.append(self._free.pop(0))
        while len(qubits) < size:
            qubits.append(self.num_qubits)
            self.num_qubits += 1
        reg = Register(name, role, tuple(qubits))
        self.registers[name] = reg
        return reg

    def release_register(self, name: str) -> None:
        reg = self.registers.get(name)
        if reg is None or reg.released:
            raise CircuitError(f"no live register {name!r}")
        for q in reg.qubits:
            last = self._last_op.get(q)
            if last is not None and not isinstance(last, (Measure, Project)):
                raise CircuitError(f"register {name!r}: qubit {q} released while unmeasured")
        reg.released = True
        self._free.extend(reg.qubits)

    def ancillas(self, size: int, tag: str = "anc") -> list[int]:
        """Fresh ancilla qubits (never recycled, so no false dependencies)."""
        self._anc_counter += 1
        reg = self.allocate_register(f"_{tag}{self._anc_counter}", "ancilla", size, reuse=False)
        return list(reg.qubits)

    # -- appending -----------------------------------------------------------

    def _check_qubits(self, qubits: Iterable[int]) -> None:
        n = self.num_qubits
        for q in qubits:
            if not 0 <= q < n:
                raise CircuitError(f"qubit {q} out of range (width {n})")

    def _check_guard(self, guard: Expr | None) -> None:
        if guard is None:
            return
        bits = guard.bits()
        if not bits <= self._measured_bits:
            missing = bits - self._measured_bits
            raise CircuitError(f"guard references unmeasured bits {sorted(missing)}")

    def append(self, op: Op) -> "Circuit":
        if type(op) is Gate:
            self._check_qubits(op.qubits)
            self._check_guard(op.guard)
            qs = op.qubits
        elif isinstance(op, Measure):
            self._check_qubits((op.qubit,))
            if op.basis not in ("Z", "X"):
                raise CircuitError(f"bad basis {op.basis!r}")
            if op.bit in self._measured_bits:
                raise CircuitError(f"bit {op.bit!r} measured twice")
            self._measured_bits.add(op.bit)
            qs = (op.qubit,)
        elif isinstance(op, Project):
            self._check_qubits(op.qubits)
            self._measured_bits.add(op.bit)
            qs = op.qubits
        elif isinstance(op, (LoadState, Barrier)):
            self._check_qubits(op.qubits)
            qs = op.qubits
        else:
            raise CircuitError(f"unknown op {op!r}")
        self.ops.append(op)
        if type(op) is not Barrier:
            last = self._last_op
            for q in qs:
                last[q] = op
        return self

    def gate(self, kind: str, *qubits: int, angle: float | None = None, guard: Expr | None = None) -> "Circuit":
        if guard is not None and isinstance(guard, classical.Const):
            if guard.value == 0:
                return self
            guard = None
        if angle is not None:
            angle = float(angle)
        return self.append(Gate(kind, tuple(map(int, qubits)), angle, guard))

    def h(self, q, guard=None):
        return self.gate("H", q, guard=guard)

    def x(self, q, guard=None):
        return self.gate("X", q, guard=guard)

    def z(self, q, guard=None):
        return self.gate("Z", q, guard=guard)

    def cnot(self, c, t, guard=None):
        return self.gate("CNOT", c, t, guard=guard)

    def cz(self, a, b, guard=None):
        return self.gate("CZ", a, b, guard=guard)

    def phase(self, q, angle, guard=None):
        return self.gate("Phase", q, angle=angle, guard=guard)

    def rz(self, q, angle, guard=None):
        return self.gate("Rz", q, angle=angle, guard=guard)

    def cphase(self, a, b, angle, guard=None):
        return self.gate("ControlledPhase", a, b, angle=angle, guard=guard)

    def ry(self, q, angle, guard=None):
        """Ry(angle) = S H Rz(angle) H Sdag (rightmost applied first)."""
        self.gate("Sdag", q, guard=guard)
        self.gate("H", q, guard=guard)
        self.gate("Rz", q, angle=angle, guard=guard)
        self.gate("H", q, guard=guard)
        return self.gate("S", q, guard=guard)

    def new_bit(self) -> str:
        name = f"m{self._bit_counter}"
        self._bit_counter += 1
        return name

    def measure(self, q: int, basis: str = "Z", bit: str | None = None) -> str:
        bit = bit or self.new_bit()
        self.append(Measure(int(q), bit, basis))
        return bit

    def load_state(self, qubits: Sequence[int], amplitudes: Mapping[int, complex]) -> "Circuit":
        amps = tuple(sorted((int(k), complex(v)) for k, v in amplitudes.items() if v != 0))
        return self.append(LoadState(tuple(int(q) for q in qubits), amps))

    def project(self, qubits: Sequence[int], amplitudes: Mapping[int, complex], target: int | None = 0) -> str:
        bit = self.new_bit()
        amps = tuple(sorted((int(k), complex(v)) for k, v in amplitudes.items() if v != 0))
        self.append(Project(tuple(int(q) for q in qubits), amps, bit))
        if target is not None:
            self.postselect[bit] = target
        return bit

    def barrier(self, qubits: Iterable[int] | None = None) -> "Circuit":
        """Synchronize ``qubits``; with no argument, nothing later may start earlier."""
        qs = () if qubits is None else tuple(qubits)
        return self.append(Barrier(qs))

    def note(self, construction: str, ancillas: int) -> None:
        self.constructions[construction] = self.constructions.get(construction, 0) + ancillas

    # -- scheduling ----------------------------------------------------------

    def gate_duration(self, g: Gate) -> int:
        if g.kind in ("CZ", "ControlledPhase") and not self.native_2q:
            return 2
        return 1

    def schedule(self) -> Schedule:
        cached = getattr(self, "_sched_cache", None)
        if cached is not None and cached[0] == len(self.ops) and cached[1] == self.native_2q:
            return cached[2]
        sched = self._schedule()
        self._sched_cache = (len(self.ops), self.native_2q, sched)
        return sched

    def clear_caches(self) -> None:
        """Drop the memoized schedule and depth/width report."""
        self.__dict__.pop("_sched_cache", None)
        self.__dict__.pop("_report_cache", None)

    def _schedule(self) -> Schedule:
        frontier = [0] * self.num_qubits
        floor = 0
        gate_layer: dict[int, int] = {}
        gate_span: dict[int, int] = {}
        stage: dict[int, int] = {}
        bit_stage: dict[str, int] = {}
        depth = 0
        slow = () if self.native_2q else ("CZ", "ControlledPhase")
        for i, op in enumerate(self.ops):
            if type(op) is Gate:
                qs = op.qubits
                if len(qs) == 1:
                    start = frontier[qs[0]]
                else:
                    start = max(frontier[qs[0]], frontier[qs[1]])
                start = (floor if floor > start else start) + 1
                if op.guard is not None:
                    ready = max((bit_stage[b] for b in op.guard.bits()), default=-1) + 1
                    if ready > start:
                        start = ready
                span = 2 if op.kind in slow else 1
                end = start + span - 1
                for q in qs:
                    frontier[q] = end
                gate_layer[i] = start
                gate_span[i] = span
                if end > depth:
                    depth = end
            elif isinstance(op, LoadState):
                start = max(floor, max((frontier[q] for q in op.qubits), default=0)) + 1
                for q in op.qubits:
                    frontier[q] = start
                gate_layer[i], gate_span[i] = start, 1
                depth = max(depth, start)
            elif isinstance(op, Measure):
                q = op.qubit
                frontier[q] = max(frontier[q], floor)
                if op.basis == "X":
                    frontier[q] += 1
                    gate_layer[i], gate_span[i] = frontier[q], 1
                    depth = max(depth, frontier[q])
                stage[i] = frontier[q]
                bit_stage[op.bit] = frontier[q]
            elif isinstance(op, Project):
                s = max(floor, max((frontier[q] for q in op.qubits), default=0))
                for q in op.qubits:
                    frontier[q] = s
                stage[i] = s
                bit_stage[op.bit] = s
            elif isinstance(op, Barrier):
                if op.qubits:
                    m = max(frontier[q] for q in op.qubits)
                    for q in op.qubits:
                        frontier[q] = m
                else:
                    floor = max([floor] + frontier)
        return Schedule(gate_layer, gate_span, stage, bit_stage, depth)

    def guard_stages(self, sched: Schedule | None = None) -> set[int]:
        sched = sched or self.schedule()
        stages = set()
        for op in self.ops:
            if isinstance(op, Gate) and op.guard is not None:
                for b in op.guard.bits():
                    stages.add(sched.bit_stage[b])
        return stages

    def layers(self) -> list[dict]:
        """Layered view: quantum, measure and classical layers in time order."""
        sched = self.schedule()
        quantum: dict[int, list[int]] = {}
        measure: dict[int, list[int]] = {}
        for i, op in enumerate(self.ops):
            if i in sched.gate_layer:
                quantum.setdefault(sched.gate_layer[i], []).append(i)
            if i in sched.stage:
                measure.setdefault(sched.stage[i], []).append(i)
        used = self.guard_stages(sched)
        out = []
        for t in range(0, sched.depth + 1):
            if t in quantum:
                out.append({"kind": "quantum", "index": t, "ops": quantum[t]})
            if t in measure:
                out.append({"kind": "measure", "stage": t, "ops": measure[t]})
            if t in used:
                bits = sorted(
                    (self.ops[i].bit for i in measure.get(t, [])),
                    key=lambda b: int(b[1:]) if b[1:].isdigit() else 0,
                )
                out.append({"kind": "classical", "stage": t, "bits": bits})
        return out

    def live_width(self, sched: Schedule | None = None) -> int:
        """Peak number of qubits live at the same time in the ASAP schedule."""
        sched = sched or self.schedule()
        depth = sched.depth
        intervals: dict[int, list[list[int]]] = {}
        open_start: dict[int, int] = {}
        gate_layer, stage = sched.gate_layer, sched.stage
        for i, op in enumerate(self.ops):
            kind = type(op)
            if kind is Barrier:
                continue
            qs = (op.qubit,) if kind is Measure else op.qubits
            t1 = stage.get(i)
            t0 = gate_layer.get(i, t1)
            for q in qs:
                if q not in open_start:
                    open_start[q] = t0
                if t1 is not None:
                    intervals.setdefault(q, []).append([open_start.pop(q), t1])
        for q, t0 in open_start.items():
            intervals.setdefault(q, []).append([t0, depth])
        for reg in self.registers.values():
            if not reg.released and reg.role != "ancilla":
                for q in reg.qubits:
                    intervals[q] = [[0, depth]]
        if not intervals:
            return 0
        starts: list[int] = []
        ends: list[int] = []
        for ivs in intervals.values():
            ivs.sort()
            cur_a, cur_b = ivs[0]
            for a, b in ivs[1:]:
                if a <= cur_b:
                    cur_b = max(cur_b, b)
                else:
                    starts.append(cur_a)
                    ends.append(cur_b)
                    cur_a, cur_b = a, b
            starts.append(cur_a)
            ends.append(cur_b)
        delta = np.zeros(depth + 3, dtype=np.int64)
        np.add.at(delta, np.asarray(starts), 1)
        np.add.at(delta, np.asarray(ends) + 1, -1)
        return int(np.cumsum(delta).max())

    # -- misc ----------------------------------------------------------------

    def extend(self, other: "Circuit") -> "Circuit":
        """Append ops of ``other``; qubit indices are shared (same numbering)."""
        for op in other.ops:
            self.append(op)
        return self

    def count_ops(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for op in self.ops:
            key = op.kind if isinstance(op, Gate) else type(op).__name__
            out[key] = out.get(key, 0) + 1
        return out

    def __repr__(self):
        return f"Circuit(qubits={self.num_qubits}, ops={len(self.ops)})"


def append_gate(circuit: Circuit, gate: Gate) -> Circuit:
    return circuit.append(gate)


def allocate_register(circuit: Circuit, name: str, role: str, size: int) -> Register:
    return circuit.allocate_register(name, role, size)


def release_register(circuit: Circuit, name: str) -> None:
    circuit.release_register(name)


def compute_depth_width(circuit: Circuit) -> DepthWidthReport:
    key = (len(circuit.ops), circuit.native_2q, sum(r.released for r in circuit.registers.values()))
    cached = circuit.__dict__.get("_report_cache")
    if cached is not None and cached[0] == key:
        return cached[1]
    sched = circuit.schedule()
    rep = DepthWidthReport(
        quantum_depth=sched.depth,
        width=circuit.live_width(sched),
        classical_layers=len(circuit.guard_stages(sched)),
        ancillas_by_construction=dict(circuit.constructions),
    )
    circuit._report_cache = (key, rep)
    return rep


# -- JSON ----------------------------------------------------------------------


def _amps_to_json(amps):
    return [[k, v.real, v.imag] for k, v in amps]


def _amps_from_json(items):
    return tuple((int(k), complex(re, im)) for k, re, im in items)


def _op_to_json(op: Op, seq: int) -> dict:
    if isinstance(op, Gate):
        d = {"kind": op.kind, "operands": list(op.qubits)}
        if op.angle is not None:
            d["angle"] = op.angle
        d["guard"] = None if op.guard is None else str(op.guard)
    elif isinstance(op, Measure):
        d = {"kind": "Measure", "operands": [op.qubit], "basis": op.basis, "bit": op.bit}
    elif isinstance(op, LoadState):
        d = {"kind": "LoadState", "operands": list(op.qubits), "amplitudes": _amps_to_json(op.amplitudes)}
    elif isinstance(op, Project):
        d = {"kind": "Project", "operands": list(op.qubits), "amplitudes": _amps_to_json(op.amplitudes), "bit": op.bit}
    else:
        d = {"kind": "Barrier", "operands": list(op.qubits)}
    d["seq"] = seq
    return d


def _op_from_json(d: dict) -> Op:
    kind = d["kind"]
    qs = tuple(int(q) for q in d["operands"])
    if kind == "Measure":
        return Measure(qs[0], d["bit"], d.get("basis", "Z"))
    if kind == "LoadState":
        return LoadState(qs, _amps_from_json(d["amplitudes"]))
    if kind == "Project":
        return Project(qs, _amps_from_json(d["amplitudes"]), d["bit"])
    if kind == "Barrier":
        return Barrier(qs)
    guard = d.get("guard")
    return Gate(kind, qs, d.get("angle"), None if guard is None else classical.parse(guard))


def to_json_dict(circuit: Circuit, construction: dict | None = None) -> dict:
    sched = circuit.schedule()
    layers = []
    barriers = []
    for i, op in enumerate(circuit.ops):
        if isinstance(op, Barrier):
            barriers.append(_op_to_json(op, i))
    for layer in circuit.layers():
        entry = {"kind": layer["kind"]}
        if layer["kind"] == "quantum":
            entry["index"] = layer["index"]
            entry["gates"] = [_op_to_json(circuit.ops[i], i) for i in layer["ops"]]
        elif layer["kind"] == "measure":
            entry["stage"] = layer["stage"]
            entry["measurements"] = [_op_to_json(circuit.ops[i], i) for i in layer["ops"]]
        else:
            entry["stage"] = layer["stage"]
            entry["bits"] = layer["bits"]
        layers.append(entry)
    out = {
        "width": circuit.num_qubits,
        "native_2q": circuit.native_2q,
        "registers": [
            {"name": r.name, "role": r.role, "qubits": list(r.qubits), "released": r.released}
            for r in circuit.registers.values()
        ],
        "layers": layers,
        "barriers": barriers,
        "postselect": dict(circuit.postselect),
        "constructions": dict(circuit.constructions),
        "depth": sched.depth,
        "outputs": list(circuit.outputs),
    }
    if construction is not None:
        out["construction"] = construction
    return out


def from_json_dict(data: dict) -> Circuit:
    c = Circuit(native_2q=data.get("native_2q", False))
    c.num_qubits = int(data["width"])
    for r in data.get("registers", []):
        c.registers[r["name"]] = Register(r["name"], r["role"], tuple(r["qubits"]), r.get("released", False))
    items: dict[int, dict] = {}
    for layer in data["layers"]:
        for key in ("gates", "measurements"):
            for d in layer.get(key, []):
                items[d["seq"]] = d
    for d in data.get("barriers", []):
        items[d["seq"]] = d
    for seq in sorted(items):
        c.append(_op_from_json(items[seq]))
    c.postselect = {k: int(v) for k, v in data.get("postselect", {}).items()}
    c.constructions = {k: int(v) for k, v in data.get("constructions", {}).items()}
    c.outputs = [int(q) for q in data.get("outputs", [])]
    c._bit_counter = 1 + max((int(b[1:]) for b in c._measured_bits if b[1:].isdigit()), default=-1)
    c._anc_counter = len(c.registers)
    return c


def dumps(circuit: Circuit, construction: dict | None = None) -> str:
    return json.dumps(to_json_dict(circuit, construction), sort_keys=True, separators=(",", ":"))


def loads(text: str) -> Circuit:
    return from_json_dict(json.loads(text))
