"""Deferred-measurement cross-check for adaptive circuits.

The coherent construction replaces every measurement by a swap into a
fresh record qubit (after a Hadamard for X-basis measurements) and every
classically guarded gate by a gate controlled on the record qubits.
Tracing out the records must reproduce the outcome-averaged state of the
adaptive circuit.  This module uses its own dense tensor simulation so the
comparison is independent of the sparse simulator.
"""
from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from . import classical as cl
from .circuit import Barrier, Circuit, Gate, Measure
from .simulator import enumerate_branches

_S2 = 1 / np.sqrt(2)
_FIXED = {
    "H": np.array([[_S2, _S2], [_S2, -_S2]]),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]),
    "S": np.diag([1, 1j]),
    "Sdag": np.diag([1, -1j]),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
    "Tdag": np.diag([1, np.exp(-1j * np.pi / 4)]),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
    "CZ": np.diag([1, 1, 1, -1]),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]),
}


def gate_matrix(kind: str, angle: float | None = None) -> np.ndarray:
    if kind in _FIXED:
        return np.asarray(_FIXED[kind], dtype=np.complex128)
    if kind == "Rz":
        return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])
    if kind == "Phase":
        return np.diag([1, np.exp(1j * angle)]).astype(np.complex128)
    if kind == "ControlledPhase":
        return np.diag([1, 1, 1, np.exp(1j * angle)]).astype(np.complex128)
    raise ValueError(f"no matrix for {kind}")


def _apply(psi: np.ndarray, mat: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    k = len(axes)
    m = mat.reshape((2,) * (2 * k))
    out = np.tensordot(m, psi, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def coherent_density(circuit: Circuit, qubits: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on ``qubits`` of the measurement-free version of ``circuit``."""
    measures = [op for op in circuit.ops if isinstance(op, Measure)]
    n_data = circuit.num_qubits
    n = n_data + len(measures)
    if n > 20:
        raise ValueError("coherent construction limited to 20 qubits")
    record_of: dict[str, int] = {}
    psi = np.zeros((2,) * n, dtype=np.complex128)
    psi[(0,) * n] = 1
    for op in circuit.ops:
        if isinstance(op, Barrier):
            continue
        if isinstance(op, Measure):
            r = n_data + len(record_of)
            record_of[op.bit] = r
            if op.basis == "X":
                psi = _apply(psi, gate_matrix("H"), [op.qubit])
            psi = _apply(psi, gate_matrix("SWAP"), [op.qubit, r])
            continue
        if not isinstance(op, Gate):
            raise ValueError(f"unsupported op {type(op).__name__}")
        mat = gate_matrix(op.kind, op.angle)
        if op.guard is None:
            psi = _apply(psi, mat, list(op.qubits))
            continue
        names = sorted(op.guard.bits())
        axes = [record_of[b] for b in names]
        out = psi.copy()
        for vals in itertools.product((0, 1), repeat=len(names)):
            if not op.guard.evaluate(dict(zip(names, vals))):
                continue
            idx = [slice(None)] * n
            for a, v in zip(axes, vals):
                idx[a] = v
            sub = psi[tuple(idx)]
            # remaining axes keep their order with the fixed ones removed
            remaining = [q for q in range(n) if q not in axes]
            local = [remaining.index(q) for q in op.qubits]
            out[tuple(idx)] = _apply(sub, mat, local)
        psi = out
    keep = list(qubits)
    rest = [q for q in range(n) if q not in keep]
    mat = np.transpose(psi, keep + rest).reshape(1 << len(keep), -1)
    return mat @ mat.conj().T


def ensemble_density(circuit: Circuit, qubits: Sequence[int]) -> np.ndarray:
    """Outcome-probability-weighted average of the adaptive circuit's branch states."""
    dim = 1 << len(qubits)
    rho = np.zeros((dim, dim), dtype=np.complex128)
    for prob, _, state in enumerate_branches(circuit):
        v = state.to_dense(qubits, check_clean=False).amplitudes
        rho += prob * np.outer(v, v.conj())
    return rho


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(a - b))))


def random_adaptive_fragment(rng: np.random.Generator, num_qubits: int = 4, num_ops: int = 14, max_measures: int = 4) -> Circuit:
    """Random circuit mixing Clifford+T and rotation gates, mid-circuit measurements and guarded Paulis."""
    c = Circuit()
    qs = list(c.allocate_register("q", "binary", num_qubits).qubits)
    bits: list[str] = []
    singles = ["H", "S", "T", "X", "Sdag"]
    for _ in range(num_ops):
        r = rng.random()
        if r < 0.35:
            c.gate(str(rng.choice(singles)), int(rng.choice(qs)))
        elif r < 0.5:
            c.gate(str(rng.choice(["Rz", "Phase"])), int(rng.choice(qs)), angle=float(rng.uniform(-np.pi, np.pi)))
        elif r < 0.7:
            a, b = (int(v) for v in rng.choice(qs, 2, replace=False))
            c.gate(str(rng.choice(["CNOT", "CZ"])), a, b)
        elif r < 0.85 and len(bits) < max_measures:
            bits.append(c.measure(int(rng.choice(qs)), str(rng.choice(["Z", "X"]))))
        elif bits:
            chosen = [b for b in bits if rng.random() < 0.6] or [bits[-1]]
            guard = cl.parity(chosen)
            if rng.random() < 0.3:
                guard = cl.Not(guard)
            c.gate(str(rng.choice(["X", "Z", "Y"])), int(rng.choice(qs)), guard=guard)
    return c


def deferred_measurement_distance(circuit: Circuit, qubits: Sequence[int] | None = None) -> float:
    """Trace distance between the adaptive ensemble and the coherent construction."""
    qubits = list(range(circuit.num_qubits)) if qubits is None else list(qubits)
    return trace_distance(ensemble_density(circuit, qubits), coherent_density(circuit, qubits))


__all__ = [
    "gate_matrix",
    "coherent_density",
    "ensemble_density",
    "trace_distance",
    "random_adaptive_fragment",
    "deferred_measurement_distance",
]
