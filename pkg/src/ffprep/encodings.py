"""Binary <-> unary encoding transforms.

``uncompress`` writes a one-hot marker of which set element a binary
register holds; ``compress`` erases the binary register given that marker
by turning each value into a phase pattern and cancelling it.  Chaining
them relabels a superposition over one integer set into another.

Set elements may be classical constants or, for adaptive pipelines,
lists of classical expressions over earlier measurement bits (MSB first).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import classical as cl
from .circuit import Circuit, CircuitError
from .classical import Expr
from .logic_gates import GateFragment, _finish, copies, equal_into, multi_cz_into, uncopy, weight_flag_into

Value = int | Sequence[Expr]


def num_bits(bound: int) -> int:
    """Qubits for a binary register holding values below ``bound``."""
    return max(1, math.ceil(math.log2(bound))) if bound > 1 else 1


@dataclass(frozen=True)
class IntegerSet:
    values: tuple[int, ...]
    bound: int

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ValueError("empty integer set")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError(f"values must be strictly increasing: {vals}")
        if vals[0] < 0 or vals[-1] > self.bound - 1:
            raise ValueError(f"values must lie in [0, {self.bound - 1}]")

    @classmethod
    def parse(cls, text: str, bound: int | None = None) -> "IntegerSet":
        vals = [int(t) for t in text.split(",") if t.strip()]
        return cls(tuple(vals), bound if bound is not None else max(vals) + 1)

    def __len__(self):
        return len(self.values)

    @property
    def bits(self) -> int:
        return num_bits(self.bound)


def _bits_of(value: Value, n: int) -> list:
    if isinstance(value, (int, np.integer)):
        if not 0 <= value < (1 << n):
            raise CircuitError(f"value {value} does not fit in {n} bits")
        return [bool((int(value) >> (n - 1 - j)) & 1) for j in range(n)]
    bits = list(value)
    if len(bits) != n:
        raise CircuitError("runtime value has wrong bit count")
    return bits


def uncompress_into(
    c: Circuit,
    binary: Sequence[int],
    unary: Sequence[int],
    values: Sequence[Value],
    controls: Sequence[int] | None = None,
) -> None:
    """unary[i] ^= [binary == values[i]] (and controls[i] when given).

    All comparisons run in parallel on private copies of the binary
    register.  XOR semantics make the operation its own inverse.
    """
    eta, n = len(unary), len(binary)
    if len(values) != eta:
        raise CircuitError("one value per unary qubit")
    cps = [copies(c, q, eta) for q in binary]
    for i in range(eta):
        lits = [cps[j][i] for j in range(n)]
        pol = _bits_of(values[i], n)
        if controls is not None:
            lits.append(controls[i])
            pol.append(True)
        weight_flag_into(c, lits, unary[i], pol, want_zero=True)
    for q, cp in zip(binary, cps):
        uncopy(c, q, cp)


def compress_into(c: Circuit, binary: Sequence[int], unary: Sequence[int], values: Sequence[Value]) -> None:
    """sum_i a_i |values[i]>|e_i> -> sum_i a_i |0>|e_i>; also its own inverse."""
    eta, n = len(unary), len(binary)
    if len(values) != eta:
        raise CircuitError("one value per unary qubit")
    for q in binary:
        c.h(q)
    cps = [copies(c, q, eta) for q in binary]
    for l in range(eta):
        bits = _bits_of(values[l], n)
        targets, guards = [], []
        for j, b in enumerate(bits):
            if b is False:
                continue
            targets.append(cps[j][l])
            guards.append(None if b is True else b)
        if targets:
            multi_cz_into(c, unary[l], targets, guards)
    for q, cp in zip(binary, cps):
        uncopy(c, q, cp)
    for q in binary:
        c.h(q)


def integer_set_transform_into(c: Circuit, binary: Sequence[int], src: Sequence[Value], dst: Sequence[Value]) -> None:
    """sum_i a_i |src[i]> -> sum_i a_i |dst[i]> through a temporary unary register."""
    if len(src) != len(dst):
        raise CircuitError("sets differ in size")
    unary = c.ancillas(len(src), "unary")
    c.note("integer_set_transform", len(src))
    uncompress_into(c, binary, unary, src)
    compress_into(c, binary, unary, src)
    compress_into(c, binary, unary, dst)
    uncompress_into(c, binary, unary, dst)
    for q in unary:
        c.measure(q)


# -- fragments -----------------------------------------------------------------


def uncompress(s: IntegerSet, native_2q: bool = False) -> GateFragment:
    c = Circuit(native_2q)
    b = list(c.allocate_register("binary", "binary", s.bits).qubits)
    u = list(c.allocate_register("unary", "unary", len(s)).qubits)
    uncompress_into(c, b, u, s.values)
    bound = len(s) * s.bits * max(1.0, math.log2(max(2, s.bits)))
    return _finish(c, {"binary": b, "unary": u}, {"binary": b, "unary": u}, bound, {"builder": "uncompress", "values": list(s.values), "N": s.bound})


def compress(s: IntegerSet, native_2q: bool = False) -> GateFragment:
    c = Circuit(native_2q)
    b = list(c.allocate_register("binary", "binary", s.bits).qubits)
    u = list(c.allocate_register("unary", "unary", len(s)).qubits)
    compress_into(c, b, u, s.values)
    return _finish(c, {"binary": b, "unary": u}, {"binary": b, "unary": u}, len(s) * s.bits, {"builder": "compress", "values": list(s.values), "N": s.bound})


def integer_set_transform(src: IntegerSet, dst: IntegerSet, native_2q: bool = False) -> GateFragment:
    if len(src) != len(dst):
        raise CircuitError("sets differ in size")
    nb = num_bits(max(src.bound, dst.bound))
    c = Circuit(native_2q)
    b = list(c.allocate_register("binary", "binary", nb).qubits)
    integer_set_transform_into(c, b, src.values, dst.values)
    bound = len(src) * nb * max(1.0, math.log2(max(2, nb)))
    return _finish(c, {"binary": b}, {"binary": b}, bound, {"builder": "integer_set_transform", "from": list(src.values), "to": list(dst.values)})


# -- validation ----------------------------------------------------------------


def check_support(amplitudes: np.ndarray, allowed: Sequence[int], tol: float = 1e-12) -> None:
    """Raise if a dense binary-register state has weight outside ``allowed``."""
    amplitudes = np.asarray(amplitudes)
    if amplitudes.size > 1 << 12:
        raise ValueError("support check limited to 12 qubits")
    mask = np.ones(amplitudes.size, dtype=bool)
    mask[list(allowed)] = False
    stray = np.nonzero(mask & (np.abs(amplitudes) > tol))[0]
    if stray.size:
        raise ValueError(f"state has support outside the set: {stray[:8].tolist()}")


def relabel_oracle(vec: Sequence[complex], src: Sequence[int], dst: Sequence[int], n_bits: int) -> np.ndarray:
    """Reference relabeling |src[i]> -> |dst[i]> of a dense vector."""
    vec = np.asarray(vec, dtype=np.complex128)
    out = np.zeros(1 << n_bits, dtype=np.complex128)
    for s, d in zip(src, dst):
        out[d] += vec[s]
    return out


__all__ = [
    "IntegerSet",
    "num_bits",
    "uncompress",
    "compress",
    "integer_set_transform",
    "uncompress_into",
    "compress_into",
    "integer_set_transform_into",
    "check_support",
    "relabel_oracle",
]
