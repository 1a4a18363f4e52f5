"""Brute-force reference states built directly from their defining sums.

These deliberately avoid any circuit machinery: each oracle enumerates
permutations and position tuples and places amplitudes on the same basis
labeling the builders use (registers MSB first, concatenated in order;
unary value x sets the qubit at offset x).
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .encodings import num_bits


@dataclass
class ReferenceState:
    """Unit-norm dense vector with the register layout it is written in."""

    amplitudes: np.ndarray
    registers: tuple[tuple[str, int], ...]

    @property
    def num_qubits(self) -> int:
        return sum(n for _, n in self.registers)

    def as_dict(self, tol: float = 1e-12) -> dict[int, complex]:
        idx = np.nonzero(np.abs(self.amplitudes) > tol)[0]
        return {int(i): complex(self.amplitudes[i]) for i in idx}


def _pack(fields: Sequence[tuple[int, int]]) -> int:
    """Concatenate (value, width) fields, first field most significant."""
    out = 0
    for value, width in fields:
        out = (out << width) | value
    return out


def _unary(positions: Sequence[int], size: int) -> int:
    return sum(1 << (size - 1 - p) for p in positions)


def _finish(amps: dict[int, complex], registers) -> ReferenceState:
    n = sum(w for _, w in registers)
    vec = np.zeros(1 << n, dtype=np.complex128)
    for k, v in amps.items():
        vec[k] += v
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ValueError("oracle state vanishes")
    return ReferenceState(vec / norm, tuple(registers))


# -- permutation signs ---------------------------------------------------------


def sign_by_inversions(perm: Sequence[int]) -> int:
    inv = sum(1 for a, b in itertools.combinations(range(len(perm)), 2) if perm[a] > perm[b])
    return -1 if inv % 2 else 1


def sign_by_cycles(perm: Sequence[int]) -> int:
    """(-1)^(n - number of cycles); independent of inversion counting."""
    seen = [False] * len(perm)
    cycles = 0
    for start in range(len(perm)):
        if not seen[start]:
            cycles += 1
            j = start
            while not seen[j]:
                seen[j] = True
                j = perm[j]
    return -1 if (len(perm) - cycles) % 2 else 1


# -- targets -------------------------------------------------------------------


def oracle_sparse(spec) -> ReferenceState:
    if len(set(spec.values)) != len(spec.values):
        raise ValueError("duplicate basis values")
    amps = {int(q): complex(a) for q, a in zip(spec.values, spec.amplitudes)}
    return _finish(amps, (("state", spec.n),))


def _antisymmetrized(values: Sequence[int], bits: int, symmetric: bool = False) -> dict[int, complex]:
    eta = len(values)
    scale = 1 / math.sqrt(math.factorial(eta))
    out: dict[int, complex] = {}
    for perm in itertools.permutations(range(eta)):
        sgn = 1 if symmetric else sign_by_cycles(perm)
        key = _pack([(values[p], bits) for p in perm])
        out[key] = out.get(key, 0) + sgn * scale
    return out


def oracle_symmetrize(spec) -> ReferenceState:
    bits = num_bits(spec.N)
    amps = _antisymmetrized(spec.r, bits, symmetric=spec.sign == "symmetric")
    return _finish(amps, tuple((f"r{i}", bits) for i in range(spec.eta)))


def oracle_sos(spec) -> ReferenceState:
    bits = num_bits(spec.N)
    total: dict[int, complex] = {}
    for psi, s in zip(spec.amplitudes, spec.sets):
        for k, v in _antisymmetrized(s, bits).items():
            total[k] = total.get(k, 0) + psi * v
    return _finish(total, tuple((f"r{i}", bits) for i in range(spec.eta)))


def oracle_dicke(L: int, M: int) -> ReferenceState:
    amps = {_unary(x, L): 1.0 for x in itertools.combinations(range(L), M)}
    return _finish(amps, (("sites", L),))


def bethe_amplitude(spec, sigma: Sequence[int], x: Sequence[int]) -> complex:
    """A_sigma * exp(i sum_l k_sigma(l) x_l)."""
    theta = spec.theta_matrix
    a = sum(theta[sigma[l], sigma[m]] for l, m in itertools.combinations(range(spec.M), 2))
    kx = sum(spec.k[sigma[l]] * x[l] for l in range(spec.M))
    return complex(np.exp(0.5j * a + 1j * kx))


def oracle_bethe(spec, order: str = "positions") -> ReferenceState:
    """Normalized Bethe wavefunction on the L-site occupation register.

    ``order`` picks the summation nesting ("positions" outer or
    "permutations" outer) so the two can be cross-checked.
    """
    perms = list(itertools.permutations(range(spec.M)))
    xs = list(itertools.combinations(range(spec.L), spec.M))
    amps: dict[int, complex] = {}
    if order == "positions":
        for x in xs:
            key = _unary(x, spec.L)
            amps[key] = sum(bethe_amplitude(spec, s, x) for s in perms)
    elif order == "permutations":
        for s in perms:
            for x in xs:
                key = _unary(x, spec.L)
                amps[key] = amps.get(key, 0) + bethe_amplitude(spec, s, x)
    else:
        raise ValueError(f"unknown order {order!r}")
    return _finish(amps, (("sites", spec.L),))


def resource_layout(spec) -> tuple[tuple[str, int], ...]:
    """Registers of the Bethe resource state: J, Sigma, E, X, D."""
    M, L = spec.M, spec.L
    jb, sb, xb = num_bits(M * M), num_bits(M), num_bits(L)
    regs = [(f"j{i}", jb) for i in range(M)] + [(f"s{i}", sb) for i in range(M)]
    regs += [("e", M * M)] + [(f"x{i}", xb) for i in range(M)] + [("d", L)]
    return tuple(regs)


def oracle_resource(spec) -> ReferenceState:
    M, L = spec.M, spec.L
    jb, sb, xb = num_bits(M * M), num_bits(M), num_bits(L)
    amps: dict[int, complex] = {}
    for js in itertools.combinations(range(M * M), M):
        for sigma in itertools.permutations(range(M)):
            head = [(js[sigma[i]], jb) for i in range(M)] + [(sigma[i], sb) for i in range(M)]
            head.append((_unary(js, M * M), M * M))
            for x in itertools.combinations(range(L), M):
                tail = [(x[i], xb) for i in range(M)] + [(_unary(x, L), L)]
                amps[_pack(head + tail)] = 1.0
    return _finish(amps, resource_layout(spec))


def oracle_success_probability(spec) -> float:
    """Probability that the permutation and index registers return to the resource pattern.

    After the phases are attached and the position registers are cleaned,
    each (j, sigma, x) branch carries c_sigma(x) and the index/permutation
    part is projected back onto its uniform resource superposition, which
    leaves sum_sigma c_sigma(x) / (M! sqrt(C(L, M))) on |x>.
    """
    M, L = spec.M, spec.L
    total = 0.0
    perms = list(itertools.permutations(range(M)))
    for x in itertools.combinations(range(L), M):
        amp = sum(bethe_amplitude(spec, s, x) for s in perms)
        total += abs(amp) ** 2
    return total / (math.factorial(M) ** 2 * math.comb(L, M))


# -- fixtures ------------------------------------------------------------------


def to_fixture(state: ReferenceState, spec_echo: dict, tol: float = 1e-15) -> str:
    items = [[i, v.real, v.imag] for i, v in state.as_dict(tol).items()]
    data = {"spec": spec_echo, "registers": [list(r) for r in state.registers], "amplitudes": items}
    return json.dumps(data, sort_keys=True, indent=1)


def from_fixture(text: str) -> tuple[ReferenceState, dict]:
    data = json.loads(text)
    regs = tuple((str(n), int(w)) for n, w in data["registers"])
    amps = {int(i): complex(re, im) for i, re, im in data["amplitudes"]}
    n = sum(w for _, w in regs)
    vec = np.zeros(1 << n, dtype=np.complex128)
    for k, v in amps.items():
        vec[k] = v
    return ReferenceState(vec, regs), data.get("spec", {})


__all__ = [
    "ReferenceState",
    "sign_by_inversions",
    "sign_by_cycles",
    "oracle_sparse",
    "oracle_symmetrize",
    "oracle_sos",
    "oracle_dicke",
    "bethe_amplitude",
    "oracle_bethe",
    "oracle_resource",
    "resource_layout",
    "oracle_success_probability",
    "to_fixture",
    "from_fixture",
]
