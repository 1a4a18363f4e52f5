"""Constant-depth logic gates built from measurement and feedforward.

Every builder here appends to an existing :class:`Circuit` in place
(``*_into`` helpers) or returns a self-contained :class:`GateFragment`.
The workhorse is the measurement-based copy gadget: a GHZ state is grown
with bond measurements, the source is merged in with one CNOT and one
measurement, and Pauli corrections fix the copies.  Copies are later
erased by X-basis measurement plus a Z correction on the source, which
costs a single layer.

Ops are emitted gadget by gadget so that the simulator never holds more
than a handful of transient branches, while the ASAP schedule still
places independent gadgets side by side.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import classical as cl
from .circuit import Circuit, CircuitError
from .classical import Expr

Polarity = bool | Expr


@dataclass
class GateFragment:
    """A built circuit together with its I/O register bindings."""

    circuit: Circuit
    inputs: dict[str, list[int]]
    outputs: dict[str, list[int]]
    ancillas: int
    width_bound: float
    construction: dict = field(default_factory=dict)

    @property
    def io_qubits(self) -> set[int]:
        qs: set[int] = set()
        for reg in list(self.inputs.values()) + list(self.outputs.values()):
            qs.update(reg)
        return qs


def _finish(c: Circuit, inputs, outputs, bound: float, construction: dict) -> GateFragment:
    from .circuit import compute_depth_width

    io = set()
    for reg in list(inputs.values()) + list(outputs.values()):
        io.update(reg)
    width = compute_depth_width(c).width
    return GateFragment(c, inputs, outputs, width - len(io), bound, construction)


def clog2(n: int) -> int:
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


# -- copy / uncopy -------------------------------------------------------------


def copies(c: Circuit, src: int, k: int) -> list[int]:
    """Return ``k`` fresh qubits each holding the computational value of ``src``.

    The joint state becomes sum_x a_x |x>_src |x>^k; ``src`` is untouched
    apart from one CNOT.
    """
    if k <= 0:
        return []
    g = c.ancillas(k + 1, "ghz")
    bonds = c.ancillas(k, "bond")
    c.note("fanout", 2 * k + 1)
    c.h(g[0])
    prefix: list[str] = []
    for i in range(k):
        c.h(g[i + 1])
        c.cnot(g[i + 1], bonds[i])
        c.cnot(g[i], bonds[i])
        prefix.append(c.measure(bonds[i]))
    c.cnot(src, g[0])
    m = c.measure(g[0])
    for j in range(1, k + 1):
        c.x(g[j], guard=cl.parity(prefix[:j] + [m]))
    return g[1:]


def uncopy(c: Circuit, src: int, cps: Sequence[int], extra: Sequence[str] = ()) -> None:
    """Erase copies of ``src`` by X measurement; fix the phase on ``src``."""
    if not cps:
        return
    outs = [c.measure(q, "X") for q in cps]
    c.z(src, guard=cl.parity(list(outs) + list(extra)))


def fanout_into(c: Circuit, src: int, targets: Sequence[int], guards: Sequence[Expr | None] | None = None) -> None:
    """targets[j] ^= src (optionally only where guards[j] evaluates to 1)."""
    if src in targets or len(set(targets)) != len(targets):
        raise CircuitError("fan-out operands overlap")
    if not targets:
        return
    guards = list(guards) if guards is not None else [None] * len(targets)
    cps = copies(c, src, len(targets))
    for q, t, gd in zip(cps, targets, guards):
        c.cnot(q, t, guard=gd)
    uncopy(c, src, cps)


def multi_cz_into(c: Circuit, ctrl: int, targets: Sequence[int], guards: Sequence[Expr | None] | None = None) -> None:
    """CZ(ctrl, t) for every target (guarded per target), in constant depth."""
    for t in targets:
        c.h(t)
    fanout_into(c, ctrl, targets, guards)
    for t in targets:
        c.h(t)


def parity_into(c: Circuit, sources: Sequence[int], target: int) -> None:
    """target ^= XOR of sources, via a Hadamard-conjugated fan-out."""
    if not sources:
        return
    c.h(target)
    for q in sources:
        c.h(q)
    fanout_into(c, target, sources)
    c.h(target)
    for q in sources:
        c.h(q)


def phase_parity(c: Circuit, qubits: Sequence[int], angle: float) -> None:
    """Multiply each branch by exp(i * angle * parity(qubits))."""
    p = c.ancillas(1, "par")[0]
    c.note("parity", 1)
    parity_into(c, qubits, p)
    c.phase(p, angle)
    o = c.measure(p, "X")
    for q in qubits:
        c.z(q, guard=cl.bit(o))


def walsh(table: np.ndarray) -> np.ndarray:
    """Walsh-Hadamard coefficients f^(S) = 2^-v sum_z f(z) (-1)^{S.z}."""
    a = np.asarray(table, dtype=float).copy()
    h = 1
    while h < len(a):
        for i in range(0, len(a), 2 * h):
            x, y = a[i : i + h].copy(), a[i + h : i + 2 * h].copy()
            a[i : i + h], a[i + h : i + 2 * h] = x + y, x - y
        h *= 2
    return a / len(a)


def phase_polynomial(c: Circuit, qubits: Sequence[int], table: Sequence[float]) -> None:
    """Apply |z> -> exp(i table[z]) |z> (global phase dropped).

    ``z`` reads ``qubits[0]`` as the most significant bit.  Each nonzero
    subset S contributes a parity phase exp(-2i f^(S) parity_S(z)); all
    subsets run in parallel on private copies of the variables.
    """
    v = len(qubits)
    if v == 0:
        return
    coeff = walsh(np.asarray(table, dtype=float))
    subsets = list(range(1, 1 << v))
    per_var = 1 << (v - 1)
    cps = [copies(c, q, per_var) for q in qubits]
    used = [0] * v
    for s in subsets:
        members = []
        for i in range(v):
            if (s >> (v - 1 - i)) & 1:
                members.append(cps[i][used[i]])
                used[i] += 1
        phase_parity(c, members, -2.0 * coeff[s])
    for q, cp in zip(qubits, cps):
        uncopy(c, q, cp)


def boolean_into(c: Circuit, inputs: Sequence[int], target: int, fn: Callable[[tuple[int, ...]], int]) -> None:
    """target ^= fn(inputs) for a small number of inputs (phase polynomial)."""
    v = len(inputs)
    table = np.zeros(1 << (v + 1))
    for z in range(1 << v):
        bits = tuple((z >> (v - 1 - i)) & 1 for i in range(v))
        if fn(bits) & 1:
            table[(z << 1) | 1] = np.pi
    c.h(target)
    phase_polynomial(c, list(inputs) + [target], table)
    c.h(target)


# -- weight kickback: OR / AND / Equal -----------------------------------------


def _weight_phase(c, anc, inputs, negate, offsets, sign):
    """Kick exp(i*sign*phi_k*(weight - v)) onto ancilla k (already in |+>)."""
    n, m = len(inputs), len(anc)
    for k, a in enumerate(anc):
        c.phase(a, sign * offsets[k])
    acop = [copies(c, a, n) for a in anc]
    ycop = [copies(c, y, m) for y in inputs]
    for i in range(n):
        for k in range(m):
            phi = np.pi / (1 << k)
            neg = negate[i]
            if isinstance(neg, Expr):
                c.x(ycop[i][k], guard=neg)
                c.cphase(acop[k][i], ycop[i][k], sign * phi)
                c.x(ycop[i][k], guard=neg)
            else:
                c.cphase(acop[k][i], ycop[i][k], -sign * phi if neg else sign * phi)
    for y, cp in zip(inputs, ycop):
        uncopy(c, y, cp)
    for a, cp in zip(anc, acop):
        uncopy(c, a, cp)


def weight_flag_into(
    c: Circuit,
    inputs: Sequence[int],
    target: int,
    negate: Sequence[Polarity] | None = None,
    value: int = 0,
    want_zero: bool = False,
) -> None:
    """target ^= [w != value] (or [w == value] with ``want_zero``).

    ``w`` counts literals, where literal i is ``inputs[i]`` or its negation
    per ``negate[i]`` (a constant or a runtime classical expression).
    """
    n = len(inputs)
    if target in inputs:
        raise CircuitError("target among inputs")
    negate = list(negate) if negate is not None else [False] * n
    if n == 0:
        if (value != 0) != want_zero:
            c.x(target)
        return
    m = max(1, math.ceil(math.log2(n + 1)))
    anc = c.ancillas(m, "w")
    c.note("weight", m)
    offsets = []
    for k in range(m):
        phi = np.pi / (1 << k)
        const_neg = sum(1 for s in negate if s is True)
        offsets.append(phi * (const_neg - value))
    for a in anc:
        c.h(a)
    _weight_phase(c, anc, inputs, negate, offsets, +1)
    for a in anc:
        c.h(a)
    if want_zero:
        boolean_into(c, anc, target, lambda b: int(not any(b)))
    else:
        boolean_into(c, anc, target, lambda b: int(any(b)))
    for a in anc:
        c.h(a)
    _weight_phase(c, anc, inputs, negate, offsets, -1)
    for a in anc:
        c.h(a)
        c.measure(a)


def or_into(c: Circuit, inputs: Sequence[int], target: int) -> None:
    weight_flag_into(c, inputs, target)


def and_into(c: Circuit, inputs: Sequence[int], target: int, negate: Sequence[Polarity] | None = None) -> None:
    """target ^= AND of literals (``negate[i]`` selects NOT inputs[i])."""
    n = len(inputs)
    negate = list(negate) if negate is not None else [False] * n
    flipped = [cl.Not(s) if isinstance(s, Expr) else (not s) for s in negate]
    weight_flag_into(c, inputs, target, flipped, want_zero=True)


def equal_into(c: Circuit, register: Sequence[int], value, target: int) -> None:
    """target ^= [register == value]; ``value`` is an int or a list of bit Exprs (MSB first)."""
    n = len(register)
    if isinstance(value, (int, np.integer)):
        if not 0 <= value < (1 << n):
            raise CircuitError(f"value {value} out of range for {n} bits")
        bits: list[Polarity] = [bool((value >> (n - 1 - j)) & 1) for j in range(n)]
    else:
        bits = [b if not isinstance(b, cl.Const) else bool(b.value) for b in value]
    weight_flag_into(c, register, target, bits, want_zero=True)


# -- Hamming weight and comparison ---------------------------------------------


def hamming_weight_into(c: Circuit, inputs: Sequence[int], output: Sequence[int]) -> None:
    """output ^= |inputs| (binary, MSB first); output needs ceil(log2(n+1)) bits."""
    n = len(inputs)
    nb = len(output)
    if (1 << nb) <= n:
        raise CircuitError("output register too small")
    cps = [copies(c, y, n + 1) for y in inputs]
    flags = c.ancillas(n + 1, "hw")
    c.note("hamming", n + 1)
    for v in range(n + 1):
        weight_flag_into(c, [cps[i][v] for i in range(n)], flags[v], value=v, want_zero=True)
    uses = [[k for k in range(nb) if (v >> (nb - 1 - k)) & 1] for v in range(n + 1)]
    fcop = [copies(c, flags[v], len(uses[v])) for v in range(n + 1)]
    slots = {v: list(fcop[v]) for v in range(n + 1)}
    for k in range(nb):
        srcs = [slots[v].pop() for v in range(n + 1) if k in uses[v]]
        parity_into(c, srcs, output[k])
    for v in range(n + 1):
        uncopy(c, flags[v], fcop[v])
    for v in range(n + 1):
        weight_flag_into(c, [cps[i][v] for i in range(n)], flags[v], value=v, want_zero=True)
        c.measure(flags[v])
    for y, cp in zip(inputs, cps):
        uncopy(c, y, cp)


def greater_than_into(c: Circuit, x: Sequence[int], y: Sequence[int], flag: int) -> None:
    """flag ^= [x > y] for unsigned MSB-first registers of equal length."""
    n = len(x)
    if len(y) != n:
        raise CircuitError("registers differ in length")
    xc = [copies(c, q, 2) for q in x]
    yc = [copies(c, q, 2) for q in y]
    e = c.ancillas(n, "eq")
    terms = c.ancillas(n, "gt")
    c.note("greater_than", 2 * n)
    for i in range(n):
        c.cnot(xc[i][0], e[i])
        c.cnot(yc[i][0], e[i])
        c.x(e[i])
    ec = [copies(c, e[i], n - 1 - i) for i in range(n)]

    def term(j):
        ins = [xc[j][1], yc[j][1]] + [ec[i][j - 1 - i] for i in range(j)]
        neg = [False, True] + [False] * j
        and_into(c, ins, terms[j], neg)

    for j in range(n):
        term(j)
    parity_into(c, terms, flag)
    for j in range(n):
        term(j)
        c.measure(terms[j])
    for i in range(n):
        uncopy(c, e[i], ec[i])
    for i in range(n):
        c.x(e[i])
        c.cnot(yc[i][0], e[i])
        c.cnot(xc[i][0], e[i])
        c.measure(e[i])
    for q, cp in zip(x, xc):
        uncopy(c, q, cp)
    for q, cp in zip(y, yc):
        uncopy(c, q, cp)


# -- permutation ---------------------------------------------------------------


def teleport_move(c: Circuit, src: int, dst: int) -> None:
    """Move the state of ``src`` onto fresh ``dst``; ``src`` ends measured (|0>)."""
    s = c.ancillas(1, "bell")[0]
    c.h(s)
    c.cnot(s, dst)
    c.cnot(src, s)
    c.h(src)
    mz = c.measure(src)
    mx = c.measure(s)
    c.x(dst, guard=cl.bit(mx))
    c.z(dst, guard=cl.bit(mz))


def permute_into(c: Circuit, qubits: Sequence[int], sigma: Sequence[int]) -> None:
    """Relabel contents so that qubits[i] ends with the old content of qubits[sigma[i]]."""
    n = len(qubits)
    if sorted(sigma) != list(range(n)):
        raise CircuitError(f"not a permutation: {sigma}")
    if list(sigma) == list(range(n)):
        return
    t = c.ancillas(n, "perm")
    c.note("permutation", 2 * n)
    for j in range(n):
        teleport_move(c, qubits[j], t[j])
    for i in range(n):
        c.cnot(t[sigma[i]], qubits[i])
    for i in range(n):
        o = c.measure(t[sigma[i]], "X")
        c.z(qubits[i], guard=cl.bit(o))


# -- Clifford ladder -----------------------------------------------------------

CLIFFORD_KINDS = {"H", "X", "Y", "Z", "S", "Sdag", "CNOT", "CZ"}
_PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def _gate_matrix(kind: str) -> np.ndarray:
    s2 = 1 / np.sqrt(2)
    return {
        "H": np.array([[s2, s2], [s2, -s2]], dtype=complex),
        "X": _PAULI["X"],
        "Y": _PAULI["Y"],
        "Z": _PAULI["Z"],
        "S": np.diag([1, 1j]),
        "Sdag": np.diag([1, -1j]),
        "T": np.diag([1, np.exp(1j * np.pi / 4)]),
        "Tdag": np.diag([1, np.exp(-1j * np.pi / 4)]),
    }[kind]


def two_qubit_matrix(spec: Sequence[tuple]) -> np.ndarray:
    """4x4 unitary of a gate list over slots 0 (MSB) and 1."""
    u = np.eye(4, dtype=complex)
    for g in spec:
        kind, slots = g[0], g[1:]
        if kind == "CNOT":
            m = np.eye(4, dtype=complex)
            if tuple(slots) == (0, 1):
                m[[2, 3]] = m[[3, 2]]
            else:
                m[[1, 3]] = m[[3, 1]]
        elif kind == "CZ":
            m = np.diag([1, 1, 1, -1]).astype(complex)
        else:
            one = _gate_matrix(kind)
            m = np.kron(one, np.eye(2)) if slots[0] == 0 else np.kron(np.eye(2), one)
        u = m @ u
    return u


def _pauli_vec(mat: np.ndarray) -> tuple[int, int, int, int]:
    """(x0, z0, x1, z1) of a two-qubit Pauli matrix, up to phase."""
    for a, b in itertools.product("IXYZ", repeat=2):
        p = np.kron(_PAULI[a], _PAULI[b])
        ov = np.trace(p.conj().T @ mat) / 4
        if abs(abs(ov) - 1) < 1e-9:
            return (int(a in "XY"), int(a in "ZY"), int(b in "XY"), int(b in "ZY"))
    raise CircuitError("gate is not Clifford")


def symplectic(spec: Sequence[tuple]) -> np.ndarray:
    """Columns give the images of X0, Z0, X1, Z1 under conjugation."""
    for g in spec:
        if g[0] not in CLIFFORD_KINDS:
            raise CircuitError(f"non-Clifford gate {g[0]!r} in ladder")
    u = two_qubit_matrix(spec)
    cols = []
    for a, b in (("X", "I"), ("Z", "I"), ("I", "X"), ("I", "Z")):
        p = np.kron(_PAULI[a], _PAULI[b])
        cols.append(_pauli_vec(u @ p @ u.conj().T))
    return np.array(cols, dtype=np.int64).T


def _apply_spec(c: Circuit, spec, q0: int, q1: int) -> None:
    qs = (q0, q1)
    for g in spec:
        c.gate(g[0], *(qs[s] for s in g[1:]))


def clifford_ladder_into(c: Circuit, qubits: Sequence[int], specs: Sequence[Sequence[tuple]]) -> None:
    """Apply U^(n-2) ... U^(0), U^(i) on (qubits[i], qubits[i+1]), in constant depth.

    Every wire is teleported through its own Bell pair (a_i, b_i); each
    U^(i) acts at once on a_i and the raw input qubits[i+1].  Bell
    measurements then stitch the wires together.  Pauli byproducts are
    pushed through the later Cliffords classically and corrected once at the
    end, after which each a_i is moved back onto qubits[i].
    """
    n = len(qubits)
    if len(specs) != n - 1:
        raise CircuitError("need n-1 two-qubit specs")
    mats = [symplectic(s) for s in specs]
    if n < 2:
        return
    a = c.ancillas(n, "lad_a")
    b = c.ancillas(n, "lad_c")
    c.note("clifford_ladder", 2 * n)
    for i in range(n):
        c.h(a[i])
        c.cnot(a[i], b[i])
    for i in range(n - 1):
        _apply_spec(c, specs[i], a[i], qubits[i + 1])
    bell = []
    for i in range(n):
        c.cnot(qubits[i], b[i])
        c.h(qubits[i])
        bell.append((c.measure(qubits[i]), c.measure(b[i])))
    # corrections form one feedforward round after the whole measurement round
    c.barrier(list(a) + list(b) + list(qubits))
    # a[i] receives wire i with byproduct X^{m_b} Z^{m_q} (plus whatever frame
    # U^(i-1) left on qubits[i]) *before* U^(i), so it conjugates through U^(i);
    # the frame U^(i) leaves on its second output is carried to wire i+1.
    out_frame = []
    carry = [set(), set()]
    for i in range(n):
        mq, mb = bell[i]
        fin = [carry[0] ^ {mb}, carry[1] ^ {mq}]
        if i == n - 1:
            out_frame.append(fin)
            break
        img = [set(), set(), set(), set()]
        for col, bits in ((0, fin[0]), (1, fin[1])):
            for row in range(4):
                if mats[i][row, col]:
                    img[row] ^= bits
        out_frame.append([img[0], img[1]])
        carry = [img[2], img[3]]
    for i in range(n):
        xs, zs = out_frame[i]
        c.x(a[i], guard=cl.parity(sorted(xs)))
        c.z(a[i], guard=cl.parity(sorted(zs)))
    for i in range(n):
        c.cnot(a[i], qubits[i])
        o = c.measure(a[i], "X")
        c.z(qubits[i], guard=cl.bit(o))


# -- parallel controlled diagonal ----------------------------------------------


@dataclass(frozen=True)
class DiagonalGate:
    """Diagonal gate on k target qubits: |x> -> exp(i phases[x]) |x>."""

    phases: tuple[float, ...]

    @classmethod
    def rz(cls, theta: float) -> "DiagonalGate":
        return cls((-theta / 2, theta / 2))

    @classmethod
    def phase(cls, theta: float) -> "DiagonalGate":
        return cls((0.0, theta))

    @classmethod
    def from_matrix(cls, mat) -> "DiagonalGate":
        mat = np.asarray(mat, dtype=complex)
        if mat.ndim == 2:
            if np.abs(mat - np.diag(np.diag(mat))).max() > 1e-12:
                raise CircuitError("gate is not diagonal")
            mat = np.diag(mat)
        if np.abs(np.abs(mat) - 1).max() > 1e-12:
            raise CircuitError("diagonal entries must be unimodular")
        return cls(tuple(float(a) for a in np.angle(mat)))

    @property
    def num_targets(self) -> int:
        return int(np.log2(len(self.phases)))


def parallel_controlled_diagonal_into(c: Circuit, controls: Sequence[int], targets: Sequence[int], gates: Sequence[DiagonalGate]) -> None:
    """Apply prod_i U_i^{controls[i]} on ``targets`` with depth independent of len(gates)."""
    k = len(targets)
    if len(controls) != len(gates):
        raise CircuitError("one control per gate")
    for g in gates:
        if not isinstance(g, DiagonalGate):
            raise CircuitError("only diagonal gate specs are supported")
        if len(g.phases) != 1 << k:
            raise CircuitError("gate size does not match targets")
    m = len(gates)
    cps = [copies(c, t, m) for t in targets]
    for i, (ctl, g) in enumerate(zip(controls, gates)):
        table = np.zeros(1 << (k + 1))
        table[(1 << k) :] = g.phases
        phase_polynomial(c, [ctl] + [cps[j][i] for j in range(k)], table)
    for t, cp in zip(targets, cps):
        uncopy(c, t, cp)


# -- fragment builders ---------------------------------------------------------


def _io(c: Circuit, name: str, role: str, size: int) -> list[int]:
    return list(c.allocate_register(name, role, size).qubits)


def fanout(n: int, native_2q: bool = False) -> GateFragment:
    c = Circuit(native_2q)
    src = _io(c, "source", "binary", 1)
    tg = _io(c, "targets", "binary", n)
    fanout_into(c, src[0], tg)
    return _finish(c, {"source": src, "targets": tg}, {"source": src, "targets": tg}, n, {"builder": "fanout", "n": n})


def or_gate(n: int, native_2q: bool = False) -> GateFragment:
    c = Circuit(native_2q)
    y = _io(c, "inputs", "binary", n)
    t = _io(c, "target", "binary", 1)
    or_into(c, y, t[0])
    return _finish(c, {"inputs": y, "target": t}, {"inputs": y, "target": t}, n * max(1, math.log2(n)), {"builder": "or", "n": n})


def and_gate(n: int, native_2q: bool = False) -> GateFragment:
    c = Circuit(native_2q)
    y = _io(c, "inputs", "binary", n)
    t = _io(c, "target", "binary", 1)
    and_into(c, y, t[0])
    return _finish(c, {"inputs": y, "target": t}, {"inputs": y, "target": t}, n * max(1, math.log2(n)), {"builder": "and", "n": n})


def equal_gate(n: int, value: int, native_2q: bool = False) -> GateFragment:
    c = Circuit(native_2q)
    y = _io(c, "inputs", "binary", n)
    t = _io(c, "target", "binary", 1)
    equal_into(c, y, value, t[0])
    return _finish(c, {"inputs": y, "target": t}, {"inputs": y, "target": t}, n * max(1, math.log2(n)), {"builder": "equal", "n": n, "value": value})


def hamming_weight(n: int, native_2q: bool = False) -> GateFragment:
    c = Circuit(native_2q)
    nb = max(1, math.ceil(math.log2(n + 1)))
    y = _io(c, "inputs", "binary", n)
    out = _io(c, "output", "binary", nb)
    hamming_weight_into(c, y, out)
    return _finish(c, {"inputs": y}, {"inputs": y, "output": out}, n * max(1, math.log2(n)), {"builder": "hamming_weight", "n": n})


def greater_than(n: int, native_2q: bool = False) -> GateFragment:
    c = Circuit(native_2q)
    x = _io(c, "x", "binary", n)
    y = _io(c, "y", "binary", n)
    f = _io(c, "flag", "binary", 1)
    greater_than_into(c, x, y, f[0])
    return _finish(c, {"x": x, "y": y}, {"x": x, "y": y, "flag": f}, n * n, {"builder": "greater_than", "n": n})


def permutation_gate(sigma: Sequence[int], native_2q: bool = False) -> GateFragment:
    n = len(sigma)
    c = Circuit(native_2q)
    y = _io(c, "qubits", "binary", n)
    permute_into(c, y, list(sigma))
    return _finish(c, {"qubits": y}, {"qubits": y}, n * n, {"builder": "permutation", "sigma": list(sigma)})


def clifford_ladder(specs: Sequence[Sequence[tuple]], native_2q: bool = False) -> GateFragment:
    n = len(specs) + 1
    c = Circuit(native_2q)
    y = _io(c, "qubits", "binary", n)
    clifford_ladder_into(c, y, specs)
    return _finish(c, {"qubits": y}, {"qubits": y}, n, {"builder": "clifford_ladder", "n": n})


def parallel_controlled_diagonal(num_controls: int, gates: Sequence[DiagonalGate], native_2q: bool = False) -> GateFragment:
    if num_controls != len(gates):
        raise CircuitError("one control per gate")
    k = gates[0].num_targets if gates else 1
    c = Circuit(native_2q)
    ctl = _io(c, "controls", "unary", num_controls)
    tg = _io(c, "targets", "binary", k)
    parallel_controlled_diagonal_into(c, ctl, tg, gates)
    return _finish(c, {"controls": ctl, "targets": tg}, {"controls": ctl, "targets": tg}, k * len(gates), {"builder": "parallel_controlled_diagonal", "m": len(gates)})
