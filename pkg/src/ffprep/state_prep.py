"""End-to-end preparation pipelines.

Every ``prepare_*`` builder returns a :class:`Circuit` whose ``outputs``
lists the qubits holding the prepared state (MSB first).  Registers are
binary unless noted; unary registers set the qubit at offset x for value x.
"""
from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import classical as cl
from .circuit import Circuit, CircuitError
from .encodings import IntegerSet, compress_into, integer_set_transform_into, num_bits, uncompress_into
from .loaders import load_amplitudes, loader_ops, inverse_ops
from .logic_gates import (
    GateFragment,
    _finish,
    and_into,
    copies,
    equal_into,
    greater_than_into,
    parity_into,
    uncopy,
    weight_flag_into,
)


class SpecError(ValueError):
    """Raised for specs that violate their invariants."""


def _bits(value: int, n: int) -> list[int]:
    return [(value >> (n - 1 - j)) & 1 for j in range(n)]


def _index(bits: Sequence[int]) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def _complex_list(items) -> tuple[complex, ...]:
    out = []
    for a in items:
        if isinstance(a, (list, tuple)):
            if len(a) != 2:
                raise SpecError(f"amplitude {a!r} is not [re, im]")
            out.append(complex(float(a[0]), float(a[1])))
        else:
            out.append(complex(a))
    return tuple(out)


def _check_norm(amps: Sequence[complex]) -> None:
    total = float(np.sum(np.abs(np.asarray(amps)) ** 2))
    if abs(total - 1.0) > 1e-12:
        raise SpecError(f"amplitudes are not normalized (sum |a|^2 = {total:.15g})")


# -- specs ---------------------------------------------------------------------


@dataclass(frozen=True)
class SparseSpec:
    """sum_i amplitudes[i] |values[i]> on ``n`` qubits."""

    n: int
    values: tuple[int, ...]
    amplitudes: tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        object.__setattr__(self, "amplitudes", _complex_list(self.amplitudes))
        if self.n < 1:
            raise SpecError("n must be positive")
        if not self.values or len(self.values) != len(self.amplitudes):
            raise SpecError("need one amplitude per value")
        if len(set(self.values)) != len(self.values):
            raise SpecError(f"duplicate basis values: {self.values}")
        if any(not 0 <= v < (1 << self.n) for v in self.values):
            raise SpecError(f"basis values must lie in [0, {1 << self.n})")
        _check_norm(self.amplitudes)

    @property
    def d(self) -> int:
        return len(self.values)

    def to_json(self) -> dict:
        return {"n": self.n, "values": list(self.values), "amplitudes": [[a.real, a.imag] for a in self.amplitudes]}

    @classmethod
    def from_json(cls, data: dict) -> "SparseSpec":
        return cls(int(data["n"]), tuple(data["values"]), tuple(data["amplitudes"]))


@dataclass(frozen=True)
class SymmetricSpec:
    """(1/sqrt(eta!)) sum_sigma (+-1)^inv(sigma) |r_sigma(0)> ... |r_sigma(eta-1)>."""

    r: tuple[int, ...]
    N: int
    sign: str = "antisymmetric"

    def __post_init__(self):
        object.__setattr__(self, "r", tuple(int(v) for v in self.r))
        if self.sign not in ("symmetric", "antisymmetric"):
            raise SpecError(f"sign must be symmetric or antisymmetric, not {self.sign!r}")
        try:
            IntegerSet(self.r, self.N)
        except ValueError as exc:
            raise SpecError(str(exc)) from None
        if self.eta > self.N:
            raise SpecError("eta exceeds N")

    @property
    def eta(self) -> int:
        return len(self.r)

    def to_json(self) -> dict:
        return {"r": list(self.r), "N": self.N, "sign": self.sign}

    @classmethod
    def from_json(cls, data: dict) -> "SymmetricSpec":
        r = data["r"]
        if isinstance(r, str):
            try:
                r = IntegerSet.parse(r, int(data["N"])).values
            except ValueError as exc:
                raise SpecError(str(exc)) from None
        return cls(tuple(r), int(data["N"]), data.get("sign", "antisymmetric"))


@dataclass(frozen=True)
class SosSpec:
    """sum_i amplitudes[i] * antisymmetrized |sets[i]>."""

    sets: tuple[tuple[int, ...], ...]
    amplitudes: tuple[complex, ...]
    N: int

    def __post_init__(self):
        sets = tuple(tuple(int(v) for v in s) for s in self.sets)
        object.__setattr__(self, "sets", sets)
        object.__setattr__(self, "amplitudes", _complex_list(self.amplitudes))
        if not sets or len(sets) != len(self.amplitudes):
            raise SpecError("need one amplitude per determinant set")
        if len({len(s) for s in sets}) != 1:
            raise SpecError("all determinant sets need the same size")
        for s in sets:
            try:
                IntegerSet(s, self.N)
            except ValueError as exc:
                raise SpecError(str(exc)) from None
        if len(set(sets)) != len(sets):
            raise SpecError("determinant sets must be distinct")
        if self.eta > self.N or self.d > self.N:
            raise SpecError("eta and d must not exceed N")
        _check_norm(self.amplitudes)

    @property
    def eta(self) -> int:
        return len(self.sets[0])

    @property
    def d(self) -> int:
        return len(self.sets)

    def to_json(self) -> dict:
        return {"sets": [list(s) for s in self.sets], "amplitudes": [[a.real, a.imag] for a in self.amplitudes], "N": self.N}

    @classmethod
    def from_json(cls, data: dict) -> "SosSpec":
        return cls(tuple(tuple(s) for s in data["sets"]), tuple(data["amplitudes"]), int(data["N"]))


@dataclass(frozen=True)
class BetheSpec:
    """M particles on L sites with scattering phases theta and quasimomenta k."""

    L: int
    M: int
    theta: tuple[tuple[float, ...], ...] = field(default=())
    k: tuple[float, ...] = field(default=())

    def __post_init__(self):
        M = self.M
        k = tuple(float(v) for v in self.k) if len(self.k) else (0.0,) * M
        theta = np.asarray(self.theta, dtype=float) if len(self.theta) else np.zeros((M, M))
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "theta", tuple(tuple(float(v) for v in row) for row in theta))
        if M < 1 or self.L < 2:
            raise SpecError("need M >= 1 and L >= 2")
        if 2 * M > self.L:
            raise SpecError(f"M={M} exceeds L/2 for L={self.L}")
        if len(k) != M:
            raise SpecError("k needs one entry per particle")
        if theta.shape != (M, M):
            raise SpecError("theta must be M x M")
        if np.max(np.abs(theta + theta.T), initial=0.0) > 1e-12:
            raise SpecError("theta must be antisymmetric")

    @property
    def theta_matrix(self) -> np.ndarray:
        return np.array(self.theta, dtype=float).reshape(self.M, self.M)

    def to_json(self) -> dict:
        return {"L": self.L, "M": self.M, "theta": [list(r) for r in self.theta], "k": list(self.k)}

    @classmethod
    def from_json(cls, data: dict) -> "BetheSpec":
        return cls(int(data["L"]), int(data["M"]), tuple(tuple(r) for r in data.get("theta", [])), tuple(data.get("k", [])))


SPEC_TYPES = {"sparse": SparseSpec, "symmetric": SymmetricSpec, "sos": SosSpec, "bethe": BetheSpec}


def _key_line(text: str, keys, message: str) -> int:
    """Line of the first spec key mentioned in ``message`` (line 1 if none is)."""
    words = set(re.findall(r"\w+", message))
    for key in keys:
        if key in words:
            pos = text.find(f'"{key}"')
            if pos >= 0:
                return text.count("\n", 0, pos) + 1
    return 1


def load_spec(kind: str, text: str):
    """Parse and validate a JSON spec; raises :class:`SpecError` anchored to a line."""
    if kind not in SPEC_TYPES:
        raise SpecError(f"line 1: unknown spec kind {kind!r}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise SpecError("line 1: spec must be a JSON object")
    try:
        return SPEC_TYPES[kind].from_json(data)
    except (SpecError, KeyError, TypeError, ValueError) as exc:
        msg = str(exc) if isinstance(exc, SpecError) else f"invalid {kind} spec: {exc!r}"
        raise SpecError(f"line {_key_line(text, list(data), msg)}: {msg}") from None


# -- sparse states -------------------------------------------------------------


def prepare_sparse(spec: SparseSpec, native_2q: bool = False) -> Circuit:
    """Dense load of sum_i psi_i |i> on the low bits, then relabel {0..d-1} -> {q_i}."""
    order = np.argsort(spec.values, kind="stable")
    values = [spec.values[i] for i in order]
    amps = [spec.amplitudes[i] for i in order]
    c = Circuit(native_2q)
    reg = list(c.allocate_register("state", "binary", spec.n).qubits)
    k = math.ceil(math.log2(spec.d)) if spec.d > 1 else 0
    if k > spec.n:
        raise SpecError("d exceeds 2**n")
    if k:
        load_amplitudes(c, reg[spec.n - k :], amps)
    integer_set_transform_into(c, reg, list(range(spec.d)), values)
    c.outputs = reg
    return c


# -- permutation parity --------------------------------------------------------


def pairwise_flag_phase_into(c: Circuit, registers: Sequence[Sequence[int]], pairs, action) -> None:
    """For each (a, b) in ``pairs`` compute flag = [reg_a > reg_b], call ``action(a, b, flag)``, uncompute.

    Every pair works on private copies so all comparisons run in parallel.
    """
    pairs = list(pairs)
    if not pairs:
        return
    uses = [sum(1 for p in pairs if a in p) for a in range(len(registers))]
    cps = [[copies(c, q, uses[a]) for q in reg] if uses[a] else [] for a, reg in enumerate(registers)]
    used = [0] * len(registers)
    for a, b in pairs:
        xa = [cp[used[a]] for cp in cps[a]]
        xb = [cp[used[b]] for cp in cps[b]]
        used[a] += 1
        used[b] += 1
        flag = c.ancillas(1, "cmp")[0]
        greater_than_into(c, xa, xb, flag)
        action(a, b, flag)
        greater_than_into(c, xa, xb, flag)
        c.measure(flag)
    for reg, cp in zip(registers, cps):
        for q, qs in zip(reg, cp):
            uncopy(c, q, qs)


def parity_phase_into(c: Circuit, registers: Sequence[Sequence[int]]) -> None:
    """Multiply each branch by (-1)^(number of pairs a<b with reg_a > reg_b)."""
    eta = len(registers)
    c.note("parity_phase", eta * (eta - 1) // 2)
    pairwise_flag_phase_into(c, registers, itertools.combinations(range(eta), 2), lambda a, b, flag: c.z(flag))


def attach_parity_phase(eta: int, zeta: int, native_2q: bool = False) -> GateFragment:
    """Fragment on ``eta`` registers of ceil(log2 zeta) qubits applying the inversion-parity sign."""
    if eta < 1 or zeta < eta:
        raise SpecError("need 1 <= eta <= zeta")
    c = Circuit(native_2q)
    nb = num_bits(zeta)
    regs = [list(c.allocate_register(f"j{i}", "binary", nb).qubits) for i in range(eta)]
    parity_phase_into(c, regs)
    flat = [q for r in regs for q in r]
    c.outputs = flat
    io = {f"j{i}": r for i, r in enumerate(regs)}
    bound = eta * eta * nb * nb
    return _finish(c, io, io, bound, {"builder": "attach_parity_phase", "eta": eta, "zeta": zeta})


# -- single (anti)symmetric states ---------------------------------------------


def _index_resource(eta: int, zeta: int, jbits: int) -> dict[int, complex]:
    """Amplitudes of sum_{j sorted} sum_sigma |j_sigma(0)>..|j_sigma(eta-1)>|e_j> on (J, E)."""
    norm = 1 / math.sqrt(math.comb(zeta, eta) * math.factorial(eta))
    amps = {}
    for js in itertools.combinations(range(zeta), eta):
        unary = [1 if p in js else 0 for p in range(zeta)]
        for perm in itertools.permutations(js):
            bits = [b for j in perm for b in _bits(j, jbits)] + unary
            amps[_index(bits)] = norm
    return amps


def _kth_one_bits(e_bits: Sequence[str], m: int, nbits: int) -> list:
    """Classical expressions (MSB first) for the position of the m-th set bit."""

    def fn_for(b):
        def fn(vals):
            ones = [p for p, v in enumerate(vals) if v]
            return (ones[m] >> (nbits - 1 - b)) & 1 if m < len(ones) else 0

        return fn

    return [cl.lookup(e_bits, fn_for(b)) for b in range(nbits)]


def symmetric_into(
    c: Circuit,
    eta: int,
    values: Sequence[int],
    out_bits: int,
    antisymmetric: bool,
    tag: str = "r",
) -> list[list[int]]:
    """Prepare the (anti)symmetrized product of ``values`` on fresh registers.

    Returns the ``eta`` output registers.  The index resource is injected
    directly; the unary index register is measured and its outcome drives
    the relabeling of each index register onto the target values.
    """
    zeta = eta * eta
    jb = num_bits(zeta)
    J = [list(c.allocate_register(f"{tag}_j{i}", "index", jb, reuse=False).qubits) for i in range(eta)]
    E = list(c.allocate_register(f"{tag}_e", "unary", zeta, reuse=False).qubits)
    c.load_state([q for r in J for q in r] + E, _index_resource(eta, zeta, jb))
    e_bits = [c.measure(q) for q in E]
    if antisymmetric:
        parity_phase_into(c, J)
    kvals = [_kth_one_bits(e_bits, m, jb) for m in range(eta)]
    outs = []
    for i in range(eta):
        U = c.ancillas(eta, "u")
        uncompress_into(c, J[i], U, kvals)
        compress_into(c, J[i], U, kvals)
        R = list(c.allocate_register(f"{tag}{i}", "binary", out_bits, reuse=False).qubits)
        compress_into(c, R, U, list(values))
        uncompress_into(c, R, U, list(values))
        for q in U + J[i]:
            c.measure(q)
        outs.append(R)
    return outs


def prepare_symmetric(spec: SymmetricSpec, native_2q: bool = False) -> Circuit:
    c = Circuit(native_2q)
    outs = symmetric_into(c, spec.eta, spec.r, num_bits(spec.N), spec.sign == "antisymmetric")
    c.outputs = [q for r in outs for q in r]
    return c


# -- sums of Slater determinants -----------------------------------------------


def membership_flags_into(c: Circuit, registers: Sequence[Sequence[int]], sets: Sequence[Sequence[int]], flags: Sequence[int]) -> None:
    """flags[i] ^= [every register holds a value of sets[i]].

    For registers holding a permutation of one of several distinct sets of
    equal size, exactly the flag of that set fires.  All sets are checked
    in parallel on private copies of the registers.
    """
    d = len(sets)
    cps = [[copies(c, q, d) for q in reg] for reg in registers]
    for i, s in enumerate(sets):
        hits = []
        for j, reg in enumerate(registers):
            mine = [cp[i] for cp in cps[j]]
            t = c.ancillas(len(s), "member")
            g = c.ancillas(1, "hit")[0]
            uncompress_into(c, mine, t, list(s))
            parity_into(c, t, g)
            hits.append((mine, t, g))
        and_into(c, [g for _, _, g in hits], flags[i])
        for mine, t, g in hits:
            parity_into(c, t, g)
            uncompress_into(c, mine, t, list(s))
            for q in t + [g]:
                c.measure(q)
    for reg, cp in zip(registers, cps):
        for q, qs in zip(reg, cp):
            uncopy(c, q, qs)


def _erase_coefficient(c: Circuit, C: Sequence[int], onehot: Sequence[int]) -> None:
    """C[b] ^= XOR of onehot[i] over i with bit b set (C MSB first)."""
    cb = len(C)
    cps = [copies(c, q, cb) for q in onehot]
    for b in range(cb):
        src = [cps[i][b] for i in range(len(onehot)) if (i >> (cb - 1 - b)) & 1]
        if src:
            parity_into(c, src, C[b])
    for q, qs in zip(onehot, cps):
        uncopy(c, q, qs)


def _sos_setup(c: Circuit, spec: SosSpec):
    cb = num_bits(spec.d)
    C = list(c.allocate_register("coef", "coefficient", cb, reuse=False).qubits)
    load_amplitudes(c, C, list(spec.amplitudes))
    S = symmetric_into(c, spec.eta, list(range(spec.eta)), num_bits(spec.eta), True, tag="s")
    ob = num_bits(spec.N)
    R = [list(c.allocate_register(f"r{j}", "binary", ob, reuse=False).qubits) for j in range(spec.eta)]
    return C, S, R


def _controlled_uncompress(c: Circuit, srcs, units, values, ctrl_copies) -> None:
    eta = len(values)
    for j, (src, u) in enumerate(zip(srcs, units)):
        uncompress_into(c, src, u, list(values), controls=ctrl_copies[j * eta : (j + 1) * eta])


def prepare_sos_linear(spec: SosSpec, native_2q: bool = False) -> Circuit:
    """One constant-depth block per determinant, selected by the coefficient register."""
    eta, d = spec.eta, spec.d
    c = Circuit(native_2q)
    C, S, R = _sos_setup(c, spec)
    perm_vals = list(range(eta))

    def selected_block(i, body):
        c.barrier()
        f = c.ancillas(1, "sel")[0]
        equal_into(c, C, i, f)
        fc = copies(c, f, eta * eta)
        body(fc)
        uncopy(c, f, fc)
        equal_into(c, C, i, f)
        c.measure(f)

    for i in range(d):

        def write(fc, i=i):
            U = [c.ancillas(eta, "u") for _ in range(eta)]
            _controlled_uncompress(c, S, U, perm_vals, fc)
            for j in range(eta):
                compress_into(c, R[j], U[j], list(spec.sets[i]))
            _controlled_uncompress(c, S, U, perm_vals, fc)
            for u in U:
                for q in u:
                    c.measure(q)

        selected_block(i, write)
    for i in range(d):

        def erase(fc, i=i):
            U = [c.ancillas(eta, "u") for _ in range(eta)]
            _controlled_uncompress(c, R, U, spec.sets[i], fc)
            for j in range(eta):
                compress_into(c, S[j], U[j], perm_vals)
            _controlled_uncompress(c, R, U, spec.sets[i], fc)
            for u in U:
                for q in u:
                    c.measure(q)

        selected_block(i, erase)
    c.barrier()
    flags = c.ancillas(d, "set")
    membership_flags_into(c, R, spec.sets, flags)
    _erase_coefficient(c, C, flags)
    membership_flags_into(c, R, spec.sets, flags)
    for q in flags + C + [q for s in S for q in s]:
        c.measure(q)
    c.outputs = [q for r in R for q in r]
    return c


def prepare_sos_log(spec: SosSpec, native_2q: bool = False) -> Circuit:
    """All determinants written in parallel through a one-hot coefficient register."""
    eta, d = spec.eta, spec.d
    c = Circuit(native_2q)
    C, S, R = _sos_setup(c, spec)
    F = list(c.allocate_register("coef_onehot", "index", d, reuse=False).qubits)
    uncompress_into(c, C, F, list(range(d)))
    perm_vals = list(range(eta))
    Fc = [copies(c, f, eta * eta) for f in F]

    def parallel(srcs, values_of):
        """U[i][j][m] ^= F_i and [srcs[j] == values_of(i)[m]] on private copies."""
        cps = [[copies(c, q, d) for q in reg] for reg in srcs]
        U = [[c.ancillas(eta, "u") for _ in range(eta)] for _ in range(d)]

        def apply():
            for i in range(d):
                mine = [[cp[i] for cp in cps[j]] for j in range(eta)]
                _controlled_uncompress(c, mine, U[i], values_of(i), Fc[i])

        return cps, U, apply

    # write every determinant into R
    cps, U, apply = parallel(S, lambda i: perm_vals)
    apply()
    for j in range(eta):
        compress_into(c, R[j], [q for i in range(d) for q in U[i][j]], [v for s in spec.sets for v in s])
    apply()
    for reg, cp in zip(S, cps):
        for q, qs in zip(reg, cp):
            uncopy(c, q, qs)
    for q in (q for row in U for u in row for q in u):
        c.measure(q)
    # erase the permutation register
    cps, U, apply = parallel(R, lambda i: spec.sets[i])
    apply()
    for j in range(eta):
        compress_into(c, S[j], [q for i in range(d) for q in U[i][j]], perm_vals * d)
    apply()
    for reg, cp in zip(R, cps):
        for q, qs in zip(reg, cp):
            uncopy(c, q, qs)
    for q in (q for row in U for u in row for q in u):
        c.measure(q)
    for f, fc in zip(F, Fc):
        uncopy(c, f, fc)
    # erase the coefficient registers
    _erase_coefficient(c, C, F)
    membership_flags_into(c, R, spec.sets, F)
    for q in F + C + [q for s in S for q in s]:
        c.measure(q)
    c.outputs = [q for r in R for q in r]
    return c


# -- Bethe wavefunctions -------------------------------------------------------

BACKENDS = ("inject", "reference")
_REFERENCE_MAX_QUBITS = 16


def dicke_l_parameter(M: int, eps: float) -> int:
    """ceil(max{log2(4M), 1 + log2 ln(sqrt(8 pi M) / eps)})."""
    if M < 1:
        raise SpecError("M must be positive")
    if eps <= 0:
        raise SpecError("eps must be positive")
    inner = math.log(math.sqrt(8 * math.pi * M) / eps)
    second = 1 + math.log2(inner) if inner > 0 else -math.inf
    return math.ceil(max(math.log2(4 * M), second) - 1e-12)


@dataclass
class BetheRegisters:
    J: list[list[int]]
    Sigma: list[list[int]]
    E: list[int]
    X: list[list[int]]
    D: list[int]

    @property
    def index_part(self) -> list[int]:
        return [q for r in self.J for q in r] + [q for r in self.Sigma for q in r] + self.E

    @property
    def position_part(self) -> list[int]:
        return [q for r in self.X for q in r] + self.D


def _bethe_registers(c: Circuit, spec: BetheSpec) -> BetheRegisters:
    M, L = spec.M, spec.L
    jb, sb, xb = num_bits(M * M), num_bits(M), num_bits(L)
    alloc = lambda name, role, n: list(c.allocate_register(name, role, n, reuse=False).qubits)  # noqa: E731
    J = [alloc(f"j{i}", "index", jb) for i in range(M)]
    Sigma = [alloc(f"s{i}", "binary", sb) for i in range(M)]
    E = alloc("e", "unary", M * M)
    X = [alloc(f"x{i}", "binary", xb) for i in range(M)]
    D = alloc("d", "unary", L)
    return BetheRegisters(J, Sigma, E, X, D)


def _index_part_amplitudes(M: int) -> dict[int, complex]:
    """sum_{j sorted} sum_sigma |j_sigma(0)..>|sigma(0)..>|e_j> on (J, Sigma, E)."""
    jb, sb, zeta = num_bits(M * M), num_bits(M), M * M
    amps = {}
    norm = 1 / math.sqrt(math.comb(zeta, M) * math.factorial(M))
    for js in itertools.combinations(range(zeta), M):
        unary = [1 if p in js else 0 for p in range(zeta)]
        for perm in itertools.permutations(range(M)):
            bits = [b for i in range(M) for b in _bits(js[perm[i]], jb)]
            bits += [b for i in range(M) for b in _bits(perm[i], sb)]
            amps[_index(bits + unary)] = norm
    return amps


def _position_part_amplitudes(L: int, M: int) -> dict[int, complex]:
    """sum_{x sorted} |x_0>..|x_{M-1}>|e_x> on (X, D)."""
    xb = num_bits(L)
    norm = 1 / math.sqrt(math.comb(L, M))
    amps = {}
    for xs in itertools.combinations(range(L), M):
        bits = [b for x in xs for b in _bits(x, xb)] + [1 if p in xs else 0 for p in range(L)]
        amps[_index(bits)] = norm
    return amps


def _dense(amps: dict[int, complex], n: int) -> np.ndarray:
    vec = np.zeros(1 << n, dtype=np.complex128)
    for k, v in amps.items():
        vec[k] = v
    return vec


def _check_backend(backend: str) -> None:
    if backend not in BACKENDS:
        raise SpecError(f"backend must be one of {BACKENDS}, not {backend!r}")


def bethe_resource_into(c: Circuit, spec: BetheSpec, backend: str = "inject") -> BetheRegisters:
    """Allocate the resource registers and prepare the resource state on them."""
    _check_backend(backend)
    regs = _bethe_registers(c, spec)
    parts = [
        (regs.index_part, _index_part_amplitudes(spec.M)),
        (regs.position_part, _position_part_amplitudes(spec.L, spec.M)),
    ]
    for qubits, amps in parts:
        if backend == "inject":
            c.load_state(qubits, amps)
        else:
            if len(qubits) > _REFERENCE_MAX_QUBITS:
                raise SpecError(f"reference backend limited to {_REFERENCE_MAX_QUBITS}-qubit parts")
            load_amplitudes(c, qubits, _dense(amps, len(qubits)))
    return regs


def prepare_bethe_resource(spec: BetheSpec, backend: str = "inject", native_2q: bool = False) -> Circuit:
    c = Circuit(native_2q)
    regs = bethe_resource_into(c, spec, backend)
    c.outputs = regs.index_part + regs.position_part
    return c


def phase_k_into(c: Circuit, Q: Sequence[Sequence[int]], P: Sequence[Sequence[int]], k: Sequence[float]) -> None:
    """Multiply by exp(i sum_l k_{sigma(l)} x_l) given Q_l = e_{sigma(l)}, P_l = e_{x_l}.

    CP(k_alpha * beta) acts on (Q_l[alpha], P_l[beta]); private copies make
    all of them act in the same layer.
    """
    M = len(k)
    for q_reg, p_reg in zip(Q, P):
        L = len(p_reg)
        qc = [copies(c, q, L - 1) for q in q_reg]
        pc = [copies(c, p, M) for p in p_reg[1:]]
        for alpha in range(M):
            for beta in range(1, L):
                c.cphase(qc[alpha][beta - 1], pc[beta - 1][alpha], k[alpha] * beta)
        for q, qs in zip(q_reg, qc):
            uncopy(c, q, qs)
        for p, ps in zip(p_reg[1:], pc):
            uncopy(c, p, ps)


def attach_phase_k(spec: BetheSpec, native_2q: bool = False) -> GateFragment:
    """Fragment on unary permutation registers Q_l (M qubits) and position registers P_l (L qubits)."""
    c = Circuit(native_2q)
    Q = [list(c.allocate_register(f"q{i}", "unary", spec.M).qubits) for i in range(spec.M)]
    P = [list(c.allocate_register(f"p{i}", "unary", spec.L).qubits) for i in range(spec.M)]
    phase_k_into(c, Q, P, spec.k)
    io = {**{f"q{i}": r for i, r in enumerate(Q)}, **{f"p{i}": r for i, r in enumerate(P)}}
    c.outputs = [q for r in Q + P for q in r]
    return _finish(c, io, io, spec.M * spec.M * spec.L, {"builder": "attach_phase_k", "L": spec.L, "M": spec.M})


def inverse_permutation_into(c: Circuit, sigma: Sequence[Sequence[int]], inverse: Sequence[Sequence[int]]) -> None:
    """inverse[i] ^= sigma^-1(i) where sigma[j] holds sigma(j) in binary."""
    M = len(sigma)
    vals = list(range(M))
    Q = [c.ancillas(M, "perm") for _ in range(M)]
    for s, q in zip(sigma, Q):
        uncompress_into(c, s, q, vals)
    V = [c.ancillas(M, "inv") for _ in range(M)]
    for i in range(M):
        for j in range(M):
            c.cnot(Q[j][i], V[i][j])
    for v, w in zip(V, inverse):
        _erase_coefficient(c, w, v)
    for i in range(M):
        for j in range(M):
            c.cnot(Q[j][i], V[i][j])
    for s, q in zip(sigma, Q):
        uncompress_into(c, s, q, vals)
    for q in (q for reg in Q + V for q in reg):
        c.measure(q)


def encode_inverse_permutation(M: int, native_2q: bool = False) -> GateFragment:
    c = Circuit(native_2q)
    sb = num_bits(M)
    S = [list(c.allocate_register(f"s{i}", "binary", sb).qubits) for i in range(M)]
    W = [list(c.allocate_register(f"w{i}", "binary", sb).qubits) for i in range(M)]
    inverse_permutation_into(c, S, W)
    ins = {f"s{i}": r for i, r in enumerate(S)}
    outs = {**ins, **{f"w{i}": r for i, r in enumerate(W)}}
    c.outputs = [q for r in S + W for q in r]
    return _finish(c, ins, outs, M * M * sb * max(1, math.log2(max(2, sb))), {"builder": "encode_inverse_permutation", "M": M})


def phase_A_into(c: Circuit, sigma: Sequence[Sequence[int]], theta: np.ndarray) -> None:
    """Multiply by exp((i/2) sum_{l<m} theta[sigma(l), sigma(m)])."""
    M = len(sigma)
    if M < 2:
        return
    sb = len(sigma[0])
    W = [c.ancillas(sb, "sinv") for _ in range(M)]
    inverse_permutation_into(c, sigma, W)
    # flag(j, i) = [sigma^-1(j) > sigma^-1(i)]: i precedes j, contributing theta[i, j] / 2
    pairs = [(j, i) for i, j in itertools.combinations(range(M), 2)]
    pairwise_flag_phase_into(c, W, pairs, lambda j, i, flag: c.rz(flag, float(theta[i, j])))
    inverse_permutation_into(c, sigma, W)
    for q in (q for w in W for q in w):
        c.measure(q)


def attach_phase_A(spec: BetheSpec, native_2q: bool = False) -> GateFragment:
    c = Circuit(native_2q)
    sb = num_bits(spec.M)
    S = [list(c.allocate_register(f"s{i}", "binary", sb).qubits) for i in range(spec.M)]
    phase_A_into(c, S, spec.theta_matrix)
    io = {f"s{i}": r for i, r in enumerate(S)}
    c.outputs = [q for r in S for q in r]
    bound = spec.M**2 * max(1, math.log2(max(2, spec.M))) ** 2
    return _finish(c, io, io, bound, {"builder": "attach_phase_A", "M": spec.M})


def clean_positions_into(c: Circuit, X: Sequence[Sequence[int]], D: Sequence[int]) -> None:
    """X_i ^= position of the i-th occupied site of D (binary, MSB first).

    G(p, i) = D_p AND [weight(D_<p) == i] marks that particle i sits at p;
    X_i[b] takes the parity of G(p, i) over sites p with bit b set.
    """
    M, L = len(X), len(D)
    xb = len(X[0])
    items = [(p, i) for i in range(M) for p in range(i, L)]
    uses = [sum(1 for p, _ in items if q <= p) for q in range(L)]
    cps = [copies(c, D[q], uses[q]) for q in range(L)]
    used = [0] * L
    done = []
    for p, i in items:
        mine = []
        for q in range(p + 1):
            mine.append(cps[q][used[q]])
            used[q] += 1
        t = c.ancillas(1, "rank")[0]
        g = c.ancillas(1, "site")[0]
        weight_flag_into(c, mine[:-1], t, value=i, want_zero=True)
        and_into(c, [t, mine[-1]], g)
        gc = copies(c, g, xb)
        done.append((p, i, mine, t, g, gc))
    for b in range(xb):
        for i in range(M):
            src = [gc[b] for p, ii, _, _, _, gc in done if ii == i and (p >> (xb - 1 - b)) & 1]
            if src:
                parity_into(c, src, X[i][b])
    for p, i, mine, t, g, gc in done:
        uncopy(c, g, gc)
        and_into(c, [t, mine[-1]], g)
        weight_flag_into(c, mine[:-1], t, value=i, want_zero=True)
        c.measure(t)
        c.measure(g)
    for q in range(L):
        uncopy(c, D[q], cps[q])


def prepare_bethe_circuit(spec: BetheSpec, backend: str = "inject", native_2q: bool = False) -> Circuit:
    """Resource state, phases, position cleanup, then post-selection on the index part."""
    _check_backend(backend)
    c = Circuit(native_2q)
    regs = bethe_resource_into(c, spec, backend)
    M, L = spec.M, spec.L
    P = [c.ancillas(L, "pos") for _ in range(M)]
    Q = [c.ancillas(M, "perm") for _ in range(M)]
    for x, p in zip(regs.X, P):
        uncompress_into(c, x, p, list(range(L)))
    for s, q in zip(regs.Sigma, Q):
        uncompress_into(c, s, q, list(range(M)))
    phase_k_into(c, Q, P, spec.k)
    for x, p in zip(regs.X, P):
        uncompress_into(c, x, p, list(range(L)))
    for s, q in zip(regs.Sigma, Q):
        uncompress_into(c, s, q, list(range(M)))
    for q in (q for reg in P + Q for q in reg):
        c.measure(q)
    phase_A_into(c, regs.Sigma, spec.theta_matrix)
    clean_positions_into(c, regs.X, regs.D)
    for q in (q for x in regs.X for q in x):
        c.measure(q)
    index = regs.index_part
    if backend == "inject":
        c.project(index, _index_part_amplitudes(M), target=0)
    else:
        vec = _dense(_index_part_amplitudes(M), len(index))
        for op in inverse_ops(loader_ops(c.num_qubits, index, vec)):
            c.append(op)
        for q in index:
            c.postselect[c.measure(q)] = 0
    c.outputs = list(regs.D)
    return c


def prepare_bethe(spec: BetheSpec, backend: str = "inject", config=None, native_2q: bool = False):
    """Build the pipeline and estimate its post-selection success rate.

    Returns ``(circuit, stats)``; the conditional output state is obtained by
    simulating ``circuit`` in post-selection mode.
    """
    from .simulator import SimConfig, estimate_success

    config = config or SimConfig(mode="post_select")
    c = prepare_bethe_circuit(spec, backend, native_2q)
    return c, estimate_success(c, config)
