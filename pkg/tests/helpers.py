"""Shared helpers for checking fragments against classical truth tables."""
from __future__ import annotations

import itertools
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ffprep.logic_gates import GateFragment
from ffprep.simulator import SimConfig, StateVector, run

FIXTURES = Path(__file__).parent / "fixtures"


def io_layout(frag: GateFragment) -> list[int]:
    """Input qubits followed by output-only qubits, in register order."""
    qs: list[int] = []
    for reg in list(frag.inputs.values()) + list(frag.outputs.values()):
        for q in reg:
            if q not in qs:
                qs.append(q)
    return qs


def bits_of(value: int, n: int) -> tuple[int, ...]:
    return tuple((value >> (n - 1 - i)) & 1 for i in range(n))


def value_of(bits: Sequence[int]) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def run_on(frag: GateFragment, in_qubits: Sequence[int], amps: np.ndarray, seed: int = 0) -> np.ndarray:
    """Load ``amps`` on ``in_qubits`` (rest |0>), run one shot, return the state on the I/O qubits."""
    init = StateVector(amps, tuple(in_qubits))
    res = run(frag.circuit, SimConfig(seed=seed), init)
    return res.output(io_layout(frag)).amplitudes


def table_check(
    frag: GateFragment,
    in_qubits: Sequence[int],
    fn: Callable[[tuple[int, ...]], tuple[int, ...]],
    seed: int = 0,
) -> tuple[float, float]:
    """Run a random-phase superposition of every basis input in one shot.

    ``fn`` maps input bits (over ``in_qubits``) to the expected bits over the
    full I/O layout.  Returns (minimum per-branch fidelity, fidelity of the
    whole output with the expected superposition).  A branch's fidelity is
    the weight its input lands on the expected output basis state.
    """
    k = len(in_qubits)
    rng = np.random.default_rng(seed)
    amps = np.exp(2j * np.pi * rng.random(1 << k)) / np.sqrt(1 << k)
    out = run_on(frag, in_qubits, amps, seed)
    expected = np.zeros_like(out)
    branch = []
    for x in range(1 << k):
        y = value_of(fn(bits_of(x, k)))
        expected[y] += amps[x]
        branch.append(abs(out[y]) ** 2 / abs(amps[x]) ** 2)
    return float(min(branch)), float(abs(np.vdot(expected, out)) ** 2)


def basis_check(
    frag: GateFragment,
    in_qubits: Sequence[int],
    fn: Callable[[tuple[int, ...]], tuple[int, ...]],
    seed: int = 0,
) -> float:
    """Run each basis input separately; return the minimum fidelity with the expected output."""
    k = len(in_qubits)
    worst = 1.0
    for x in range(1 << k):
        amps = np.zeros(1 << k, dtype=complex)
        amps[x] = 1
        out = run_on(frag, in_qubits, amps, seed + x)
        worst = min(worst, float(abs(out[value_of(fn(bits_of(x, k)))]) ** 2))
    return worst


# -- classical reference functions (expected outputs over the I/O layout) ------


def fanout_fn(bits):
    x, ys = bits[0], bits[1:]
    return (x,) + tuple(y ^ x for y in ys)


def or_fn(bits):
    return bits[:-1] + (bits[-1] ^ int(any(bits[:-1])),)


def and_fn(bits):
    return bits[:-1] + (bits[-1] ^ int(all(bits[:-1])),)


def equal_fn(value: int):
    return lambda bits: bits[:-1] + (bits[-1] ^ int(value_of(bits[:-1]) == value),)


def hamming_fn(n: int, nb: int):
    return lambda bits: bits + bits_of(sum(bits), nb)


def greater_fn(n: int):
    def fn(bits):
        x, y, f = value_of(bits[:n]), value_of(bits[n : 2 * n]), bits[2 * n]
        return bits[: 2 * n] + (f ^ int(x > y),)

    return fn


def permutation_fn(sigma: Sequence[int]):
    return lambda bits: tuple(bits[s] for s in sigma)


def all_permutations(n: int):
    return list(itertools.permutations(range(n)))
