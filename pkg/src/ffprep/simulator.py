"""Adaptive-circuit simulation with mid-circuit measurement and feedforward.

The live state is kept as a branch table: an array of computational-basis
keys (one row of 64-bit words per branch) and a matching array of complex
amplitudes.  Circuits built from measurement gadgets touch many qubits but
only ever hold a modest number of branches at once, so this representation
scales to widths far beyond a dense vector while staying exact.  Dense
vectors are produced on demand for a chosen subset of qubits.

Ops execute in program order (a topological order of the schedule), which
keeps the transient superpositions inside each gadget small.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .circuit import Barrier, Circuit, Gate, LoadState, Measure, Project

RNG_ALGORITHM = "numpy.PCG64"
DEFAULT_QUBIT_CAP = 26
PRUNE = 1e-14
_SQRT1_2 = 1.0 / np.sqrt(2.0)


def qubit_cap() -> int:
    return int(os.environ.get("FFPREP_QUBIT_CAP", DEFAULT_QUBIT_CAP))


class SimulationError(RuntimeError):
    pass


class ZeroProbabilityError(SimulationError):
    """Post-selection requested an outcome of zero probability."""


@dataclass
class StateVector:
    """Dense state over ``qubits``; ``qubits[0]`` is the most significant bit."""

    amplitudes: np.ndarray
    qubits: tuple[int, ...] = ()

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        n = self.amplitudes.shape[0]
        if n == 0 or n & (n - 1):
            raise ValueError("length must be a power of two")
        k = n.bit_length() - 1
        if not self.qubits:
            self.qubits = tuple(range(k))
        if len(self.qubits) != k:
            raise ValueError("qubit list does not match amplitude length")

    @property
    def num_qubits(self) -> int:
        return len(self.qubits)

    @classmethod
    def basis(cls, value: int, n: int, qubits: Sequence[int] | None = None) -> "StateVector":
        a = np.zeros(1 << n, dtype=np.complex128)
        a[value] = 1.0
        return cls(a, tuple(qubits) if qubits is not None else ())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def as_dict(self, tol: float = 1e-12) -> dict[int, complex]:
        idx = np.nonzero(np.abs(self.amplitudes) > tol)[0]
        return {int(i): complex(self.amplitudes[i]) for i in idx}


def fidelity(a: StateVector, b: StateVector) -> float:
    va = a.amplitudes if isinstance(a, StateVector) else np.asarray(a, dtype=np.complex128)
    vb = b.amplitudes if isinstance(b, StateVector) else np.asarray(b, dtype=np.complex128)
    if va.shape != vb.shape:
        raise ValueError(f"width mismatch: {va.shape} vs {vb.shape}")
    f = abs(np.vdot(va, vb)) ** 2
    return float(min(1.0, max(0.0, f)))


@dataclass
class SimConfig:
    """Sampling configuration.

    ``mode`` is ``"sample"``, ``"post_select"`` or ``"repeat_until_success"``.
    Targets default to the circuit's declared post-selections.  With
    ``force`` set, post-selected outcomes are projected onto rather than
    sampled, so the final state is the renormalized projection.
    """

    seed: int = 0
    mode: str = "sample"
    shots: int = 1
    targets: dict[str, int] | None = None
    max_tries: int = 1000
    force: bool = False

    def __post_init__(self):
        if self.mode not in ("sample", "post_select", "repeat_until_success"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.max_tries < 1:
            raise ValueError("max_tries must be >= 1")
        if self.shots < 1:
            raise ValueError("shots must be positive")


@dataclass
class MeasurementRecord:
    bits: dict[str, int] = field(default_factory=dict)
    locations: dict[str, tuple[int, int]] = field(default_factory=dict)
    classical_values: dict[str, int] = field(default_factory=dict)
    post_select_satisfied: bool = True
    post_select_probability: float = 1.0
    tries: int = 1

    def by_location(self) -> dict[tuple[int, int], int]:
        """Bits keyed by (measurement stage, qubit)."""
        return {self.locations[b]: v for b, v in self.bits.items() if b in self.locations}


@dataclass
class SuccessStats:
    successes: int
    trials: int
    exact_probability: float | None = None

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise ValueError("successes must lie in [0, trials]")

    @property
    def empirical_probability(self) -> float:
        return self.successes / self.trials if self.trials else 0.0


# -- branch table --------------------------------------------------------------


class SparseState:
    """Branch table over ``num_qubits`` qubits."""

    def __init__(self, num_qubits: int):
        self.num_qubits = num_qubits
        self.words = max(1, (num_qubits + 63) // 64)
        self.keys = np.zeros((1, self.words), dtype=np.uint64)
        self.amps = np.ones(1, dtype=np.complex128)
        self.compiled: _Compiled | None = None

    def copy(self) -> "SparseState":
        s = SparseState.__new__(SparseState)
        s.num_qubits, s.words = self.num_qubits, self.words
        s.keys, s.amps = self.keys.copy(), self.amps.copy()
        s.compiled = self.compiled
        return s

    def __len__(self):
        return len(self.amps)

    _MASKS = [np.uint64(1) << np.uint64(i) for i in range(64)]

    @staticmethod
    def _loc(q: int) -> tuple[int, np.uint64]:
        return q >> 6, SparseState._MASKS[q & 63]

    def bit(self, q: int) -> np.ndarray:
        w, m = self._loc(q)
        return (self.keys[:, w] & m) != 0

    def flip(self, q: int, rows=None) -> None:
        w, m = self._loc(q)
        if rows is None:
            self.keys[:, w] ^= m
        else:
            self.keys[rows, w] ^= m

    def clear(self, q: int) -> None:
        w, m = self._loc(q)
        self.keys[:, w] &= ~m

    def norm2(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def _merge(self) -> None:
        if self.words == 1:
            uniq, inv = np.unique(self.keys[:, 0], return_inverse=True)
            keys = uniq[:, None]
        else:
            view = np.ascontiguousarray(self.keys).view(np.dtype((np.void, 8 * self.words))).ravel()
            _, first, inv = np.unique(view, return_index=True, return_inverse=True)
            keys = self.keys[first]
        inv = inv.ravel()
        amps = np.zeros(len(keys), dtype=np.complex128)
        np.add.at(amps, inv, self.amps)
        keep = np.abs(amps) > PRUNE
        self.keys, self.amps = np.ascontiguousarray(keys[keep]), amps[keep]

    def _prune(self) -> None:
        keep = np.abs(self.amps) > PRUNE
        if not keep.all():
            self.keys, self.amps = self.keys[keep], self.amps[keep]

    # gates

    def apply_diag(self, q: int, d0: complex, d1: complex) -> None:
        b = self.bit(q)
        self.amps *= np.where(b, d1, d0)

    def apply_h(self, q: int) -> None:
        b = self.bit(q)
        k0 = self.keys.copy()
        k1 = self.keys.copy()
        w, m = self._loc(q)
        k0[:, w] &= ~m
        k1[:, w] |= m
        a = self.amps * _SQRT1_2
        self.keys = np.concatenate([k0, k1])
        self.amps = np.concatenate([a, np.where(b, -a, a)])
        if b.any() and not b.all():
            self._merge()
        else:
            self._prune()

    def apply_gate(self, g: Gate) -> None:
        k = g.kind
        q = g.qubits
        if k == "H":
            self.apply_h(q[0])
        elif k == "X":
            self.flip(q[0])
        elif k == "Y":
            self.apply_diag(q[0], 1j, -1j)
            self.flip(q[0])
        elif k == "Z":
            self.apply_diag(q[0], 1, -1)
        elif k == "S":
            self.apply_diag(q[0], 1, 1j)
        elif k == "Sdag":
            self.apply_diag(q[0], 1, -1j)
        elif k == "T":
            self.apply_diag(q[0], 1, np.exp(1j * np.pi / 4))
        elif k == "Tdag":
            self.apply_diag(q[0], 1, np.exp(-1j * np.pi / 4))
        elif k == "Phase":
            self.apply_diag(q[0], 1, np.exp(1j * g.angle))
        elif k == "Rz":
            self.apply_diag(q[0], np.exp(-0.5j * g.angle), np.exp(0.5j * g.angle))
        elif k == "CNOT":
            self.flip(q[1], rows=self.bit(q[0]))
        elif k == "CZ":
            both = self.bit(q[0]) & self.bit(q[1])
            self.amps[both] *= -1
        elif k == "ControlledPhase":
            both = self.bit(q[0]) & self.bit(q[1])
            self.amps[both] *= np.exp(1j * g.angle)
        else:
            raise SimulationError(f"unsupported gate {k}")

    # measurement

    def prob_one(self, q: int) -> float:
        b = self.bit(q)
        n = self.norm2()
        return float(np.vdot(self.amps[b], self.amps[b]).real / n)

    def collapse(self, q: int, outcome: int) -> None:
        """Keep the branch with the given outcome, renormalize, reset to 0."""
        b = self.bit(q)
        keep = b if outcome else ~b
        self.keys, self.amps = self.keys[keep], self.amps[keep]
        n = np.sqrt(self.norm2())
        if n == 0:
            raise ZeroProbabilityError(f"outcome {outcome} on qubit {q} has zero probability")
        self.amps /= n
        self.clear(q)

    def subindex(self, qubits: Sequence[int]) -> np.ndarray:
        """Integer value of ``qubits`` (first = MSB) for every branch."""
        out = np.zeros(len(self.amps), dtype=np.int64)
        for q in qubits:
            out = (out << 1) | self.bit(q).astype(np.int64)
        return out

    def load(self, qubits: Sequence[int], amplitudes: Sequence[tuple[int, complex]]) -> None:
        for q in qubits:
            if self.bit(q).any():
                raise SimulationError(f"LoadState onto non-zero qubit {q}")
        idx = np.array([k for k, _ in amplitudes], dtype=np.int64)
        vals = np.array([v for _, v in amplitudes], dtype=np.complex128)
        vals = vals / np.linalg.norm(vals)
        patch = np.zeros((len(idx), self.words), dtype=np.uint64)
        n = len(qubits)
        for pos, q in enumerate(qubits):
            w, m = self._loc(q)
            on = ((idx >> (n - 1 - pos)) & 1).astype(bool)
            patch[on, w] |= m
        b = len(self.amps)
        self.keys = (self.keys[:, None, :] | patch[None, :, :]).reshape(b * len(idx), self.words)
        self.amps = (self.amps[:, None] * vals[None, :]).ravel()

    def overlap_split(self, qubits: Sequence[int], amplitudes: Sequence[tuple[int, complex]]):
        """Return (p_success, projected_state, orthogonal_state) for phi on ``qubits``."""
        idx = np.array([k for k, _ in amplitudes], dtype=np.int64)
        vals = np.array([v for _, v in amplitudes], dtype=np.complex128)
        order = np.argsort(idx)
        idx, vals = idx[order], vals[order] / np.linalg.norm(vals)
        sub = self.subindex(qubits)
        rest = self.keys.copy()
        for q in qubits:
            w, m = self._loc(q)
            rest[:, w] &= ~m
        pos = np.searchsorted(idx, sub)
        pos_c = np.minimum(pos, len(idx) - 1)
        hit = idx[pos_c] == sub
        phi_at = np.where(hit, vals[pos_c], 0)
        if self.words == 1:
            uniq, inv = np.unique(rest[:, 0], return_inverse=True)
            rkeys = uniq[:, None]
        else:
            view = np.ascontiguousarray(rest).view(np.dtype((np.void, 8 * self.words))).ravel()
            _, first, inv = np.unique(view, return_index=True, return_inverse=True)
            rkeys = rest[first]
        inv = inv.ravel()
        c = np.zeros(len(rkeys), dtype=np.complex128)
        np.add.at(c, inv, np.conj(phi_at) * self.amps)
        total = self.norm2()
        p = float(np.vdot(c, c).real / total)
        proj = SparseState.__new__(SparseState)
        proj.num_qubits, proj.words = self.num_qubits, self.words
        proj.compiled = self.compiled
        keep = np.abs(c) > PRUNE
        proj.keys, proj.amps = np.ascontiguousarray(rkeys[keep]), c[keep]
        orth = self.copy()
        orth.amps = self.amps - c[inv] * phi_at
        # components of c*phi outside the current support
        extra_k, extra_a = [], []
        for j, (kk, vv) in enumerate(zip(idx, vals)):
            present = np.zeros(len(rkeys), dtype=bool)
            present[inv[sub == kk]] = True
            miss = ~present & keep
            if miss.any():
                ks = rkeys[miss].copy()
                for p_, q in enumerate(qubits):
                    if (kk >> (len(qubits) - 1 - p_)) & 1:
                        w, m = self._loc(q)
                        ks[:, w] |= m
                extra_k.append(ks)
                extra_a.append(-c[miss] * vv)
        if extra_k:
            orth.keys = np.concatenate([orth.keys] + extra_k)
            orth.amps = np.concatenate([orth.amps] + extra_a)
        orth._prune()
        return p, proj, orth

    def to_dense(self, qubits: Sequence[int], check_clean: bool = True) -> StateVector:
        """Dense state of circuit ``qubits``; every other qubit must be |0>."""
        labels = tuple(qubits)
        if self.compiled is not None:
            fin = self.compiled.final
            qubits = [fin.get(q, fin[-1]) for q in labels]
            if len(set(qubits) - {fin[-1]}) != len([q for q in labels if q in fin]):
                raise SimulationError("duplicate output qubits")
        qubits = list(qubits)
        if len(qubits) > qubit_cap():
            raise SimulationError(f"{len(qubits)} qubits exceeds dense cap {qubit_cap()}")
        if check_clean:
            rest = self.keys.copy()
            for q in qubits:
                w, m = self._loc(q)
                rest[:, w] &= ~m
            live = np.abs(self.amps) > 1e-9
            if rest[live].any():
                bad = [q for q in range(self.num_qubits) if q not in set(qubits) and self.bit(q)[live].any()]
                if self.compiled is not None:
                    inv = {v: k for k, v in self.compiled.final.items()}
                    bad = [inv.get(q, f"slot{q}") for q in bad]
                raise SimulationError(f"qubits outside the output are not clean: {bad[:10]}")
        sub = self.subindex(qubits)
        vec = np.zeros(1 << len(qubits), dtype=np.complex128)
        np.add.at(vec, sub, self.amps)
        n = np.linalg.norm(vec)
        if n > 0:
            vec /= n
        return StateVector(vec, labels)


# -- execution -----------------------------------------------------------------


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _op_qubits(op) -> tuple[int, ...]:
    if isinstance(op, Measure):
        return (op.qubit,)
    return tuple(op.qubits)


def _remap(op, slot: dict[int, int]):
    if isinstance(op, Gate):
        return Gate(op.kind, tuple(slot[q] for q in op.qubits), op.angle, op.guard)
    if isinstance(op, Measure):
        return Measure(slot[op.qubit], op.bit, op.basis)
    if isinstance(op, Project):
        return Project(tuple(slot[q] for q in op.qubits), op.amplitudes, op.bit)
    if isinstance(op, LoadState):
        return LoadState(tuple(slot[q] for q in op.qubits), op.amplitudes)
    return None


@dataclass
class _Compiled:
    ops: list
    num_slots: int
    final: dict[int, int]


def _compile(circuit: Circuit, preloaded: tuple[int, ...]) -> _Compiled:
    """Map qubits onto recycled slots.

    A qubit holds a slot from its first use until its last op, provided that
    op resets it (measurement or projection).  The simulated key width then
    tracks the peak number of simultaneously live qubits rather than the
    total qubit count.  One extra slot stays zero for qubits with no slot.
    """
    key = (len(circuit.ops), preloaded)
    cache = circuit.__dict__.setdefault("_sim_cache", {})
    if key in cache:
        return cache[key]
    last: dict[int, int] = {}
    for i, op in enumerate(circuit.ops):
        if not isinstance(op, Barrier):
            for q in _op_qubits(op):
                last[q] = i
    free: list[int] = []
    slot: dict[int, int] = {}
    count = 0

    def take(q):
        nonlocal count
        if free:
            slot[q] = free.pop()
        else:
            slot[q] = count
            count += 1

    for q in preloaded:
        take(q)
    ops = []
    for i, op in enumerate(circuit.ops):
        if isinstance(op, Barrier):
            ops.append(None)
            continue
        qs = _op_qubits(op)
        for q in qs:
            if q not in slot:
                take(q)
        ops.append(_remap(op, slot))
        if isinstance(op, (Measure, Project)):
            for q in qs:
                if last[q] == i and q not in preloaded:
                    free.append(slot.pop(q))
    zero = count
    compiled = _Compiled(ops, count + 1, {**slot, -1: zero})
    cache.clear()
    cache[key] = compiled
    return compiled


def _initial_state(circuit: Circuit, initial) -> SparseState:
    if isinstance(initial, StateVector):
        initial = [initial]
    initial = list(initial or [])
    pre = tuple(q for sv in initial for q in sv.qubits)
    comp = _compile(circuit, pre)
    st = SparseState(comp.num_slots)
    st.compiled = comp
    for sv in initial:
        amps = [(int(i), complex(sv.amplitudes[i])) for i in np.nonzero(np.abs(sv.amplitudes) > 0)[0]]
        st.load([comp.final[q] for q in sv.qubits], amps)
    return st


def execute(
    circuit: Circuit,
    state: SparseState,
    rng: np.random.Generator,
    targets: Mapping[str, int] | None = None,
    force: bool = False,
    record: MeasurementRecord | None = None,
    fixed: Mapping[str, int] | None = None,
) -> MeasurementRecord:
    """Run every op on ``state`` in program order.

    ``fixed`` pins measurement outcomes (used for branch enumeration);
    ``targets`` with ``force`` pins post-selected outcomes.
    """
    targets = targets or {}
    fixed = fixed or {}
    record = record or MeasurementRecord()
    sched = circuit.schedule()
    mapped = state.compiled.ops if state.compiled is not None else circuit.ops
    for i, (orig, op) in enumerate(zip(circuit.ops, mapped)):
        if isinstance(op, Gate):
            if op.guard is not None:
                v = op.guard.evaluate(record.bits)
                if not v:
                    continue
            state.apply_gate(op)
        elif isinstance(op, Measure):
            if op.basis == "X":
                state.apply_h(op.qubit)
            p1 = state.prob_one(op.qubit)
            want = fixed.get(op.bit, targets.get(op.bit) if force else None)
            if want is None:
                outcome = int(rng.random() < p1)
            else:
                outcome = int(want)
            p = p1 if outcome else 1.0 - p1
            if p <= 1e-15:
                raise ZeroProbabilityError(f"bit {op.bit}: outcome {outcome} has zero probability")
            if op.bit in targets:
                record.post_select_probability *= p1 if targets[op.bit] else 1.0 - p1
                if outcome != targets[op.bit]:
                    record.post_select_satisfied = False
            state.collapse(op.qubit, outcome)
            record.bits[op.bit] = outcome
            record.locations[op.bit] = (sched.stage[i], orig.qubit)
        elif isinstance(op, Project):
            p0, proj, orth = state.overlap_split(op.qubits, op.amplitudes)
            want = fixed.get(op.bit, targets.get(op.bit) if force else None)
            if want is None:
                outcome = 0 if rng.random() < p0 else 1
            else:
                outcome = int(want)
            p = p0 if outcome == 0 else 1.0 - p0
            if p <= 1e-15:
                raise ZeroProbabilityError(f"projection {op.bit}: outcome {outcome} has zero probability")
            if op.bit in targets:
                record.post_select_probability *= p0 if targets[op.bit] == 0 else 1.0 - p0
                if outcome != targets[op.bit]:
                    record.post_select_satisfied = False
            chosen = proj if outcome == 0 else orth
            chosen.amps = chosen.amps / np.sqrt(chosen.norm2())
            state.keys, state.amps = chosen.keys, chosen.amps
            record.bits[op.bit] = outcome
            record.locations[op.bit] = (sched.stage[i], orig.qubits[0])
        elif isinstance(op, LoadState):
            state.load(op.qubits, op.amplitudes)
        elif isinstance(op, Barrier):
            pass
    n2 = state.norm2()
    if abs(n2 - 1.0) > 1e-8:
        raise SimulationError(f"norm drift: {n2}")
    return record


@dataclass
class RunResult:
    state: SparseState
    record: MeasurementRecord

    def output(self, qubits: Sequence[int]) -> StateVector:
        return self.state.to_dense(qubits)


def run(circuit: Circuit, config: SimConfig | None = None, initial=None) -> RunResult:
    """Simulate one shot.

    ``initial`` is a :class:`StateVector` (or list of them) loaded onto its
    ``qubits`` before the circuit runs; all other qubits start in |0>.
    """
    config = config or SimConfig()
    targets = dict(circuit.postselect)
    if config.targets is not None:
        targets.update(config.targets)
    if config.mode == "sample":
        targets_used, force = {}, False
    else:
        targets_used, force = targets, config.force
    rng = _rng(config.seed)
    tries = config.max_tries if config.mode == "repeat_until_success" else 1
    for attempt in range(1, tries + 1):
        state = _initial_state(circuit, initial)
        rec = execute(circuit, state, rng, targets_used, force)
        rec.tries = attempt
        if rec.post_select_satisfied:
            break
    return RunResult(state, rec)


def output_state(circuit: Circuit, qubits: Sequence[int], initial=None, seed: int = 0, force: bool = True) -> StateVector:
    """Convenience: one post-selected shot, dense state on ``qubits``."""
    mode = "post_select" if circuit.postselect else "sample"
    res = run(circuit, SimConfig(seed=seed, mode=mode, force=force), initial)
    return res.output(qubits)


def estimate_success(circuit: Circuit, config: SimConfig, initial=None, probes: int = 4) -> SuccessStats:
    """Empirical post-selection success rate over ``config.shots`` trials.

    A few fully simulated probe shots compute the exact success probability
    conditioned on their (sampled) non-post-selected outcomes.  When all
    probes agree, the success probability does not depend on those outcomes
    and the remaining trials are Bernoulli draws with that probability.
    Otherwise every trial is fully simulated.
    """
    targets = dict(circuit.postselect)
    if config.targets is not None:
        targets.update(config.targets)
    rng = _rng(config.seed)
    if not targets:
        return SuccessStats(config.shots, config.shots, 1.0)
    probs = []
    for _ in range(min(probes, config.shots)):
        state = _initial_state(circuit, initial)
        try:
            rec = execute(circuit, state, rng, targets, force=True)
            probs.append(rec.post_select_probability)
        except ZeroProbabilityError:
            probs.append(0.0)
    if max(probs) - min(probs) <= 1e-12:
        p = float(np.mean(probs))
        successes = int(rng.binomial(config.shots, p))
        return SuccessStats(successes, config.shots, p)
    successes = 0
    for _ in range(config.shots):
        state = _initial_state(circuit, initial)
        rec = execute(circuit, state, rng, targets, force=False)
        successes += int(rec.post_select_satisfied)
    return SuccessStats(successes, config.shots, None)


def enumerate_branches(circuit: Circuit, initial=None, limit: int = 1 << 12):
    """All measurement-outcome branches as (probability, bits, final state)."""
    out = []
    stack: list[dict[str, int]] = [{}]
    rng = _rng(0)
    while stack:
        fixed = stack.pop()
        state = _initial_state(circuit, initial)
        try:
            rec = _execute_until_free(circuit, state, rng, fixed)
        except ZeroProbabilityError:
            continue
        if isinstance(rec, tuple):
            bit, _ = rec
            for v in (0, 1):
                stack.append({**fixed, bit: v})
            if len(stack) + len(out) > limit:
                raise SimulationError("too many branches")
            continue
        out.append((rec.post_select_probability, dict(rec.bits), state))
    return out


def _execute_until_free(circuit, state, rng, fixed):
    """Execute with pinned outcomes; stop at the first unpinned measurement."""
    record = MeasurementRecord()
    prob = 1.0
    mapped = state.compiled.ops if state.compiled is not None else circuit.ops
    for op in mapped:
        if isinstance(op, Gate):
            if op.guard is None or op.guard.evaluate(record.bits):
                state.apply_gate(op)
        elif isinstance(op, Measure):
            if op.bit not in fixed:
                return (op.bit, None)
            if op.basis == "X":
                state.apply_h(op.qubit)
            p1 = state.prob_one(op.qubit)
            o = fixed[op.bit]
            p = p1 if o else 1 - p1
            if p <= 1e-13:
                raise ZeroProbabilityError(op.bit)
            prob *= p
            state.collapse(op.qubit, o)
            record.bits[op.bit] = o
        elif isinstance(op, Project):
            if op.bit not in fixed:
                return (op.bit, None)
            p0, proj, orth = state.overlap_split(op.qubits, op.amplitudes)
            o = fixed[op.bit]
            p = p0 if o == 0 else 1 - p0
            if p <= 1e-13:
                raise ZeroProbabilityError(op.bit)
            prob *= p
            chosen = proj if o == 0 else orth
            state.keys, state.amps = chosen.keys, chosen.amps / np.sqrt(chosen.norm2())
            record.bits[op.bit] = o
        elif isinstance(op, LoadState):
            state.load(op.qubits, op.amplitudes)
    record.post_select_probability = prob
    return record
