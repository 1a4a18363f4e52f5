"""Dense amplitude loading with uniformly controlled rotations.

Magnitudes are set level by level with uniformly controlled Ry rotations;
relative phases are then applied with uniformly controlled Rz rotations.
Each uniformly controlled rotation on ``c`` controls uses ``2**c``
single-qubit rotations interleaved with CNOTs in Gray-code order.  The
depth is linear in the number of amplitudes, which is fine for the short
coefficient registers it is used on.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .circuit import Barrier, Circuit, Gate, LoadState


def _gray(i: int) -> int:
    return i ^ (i >> 1)


def uniformly_controlled(c: Circuit, kind: str, controls: Sequence[int], target: int, angles: Sequence[float]) -> None:
    """Apply R(angles[x]) to ``target`` when ``controls`` hold x (MSB first).

    ``kind`` is "Ry" or "Rz"; both satisfy X R(t) X = R(-t), which is what
    the Gray-code CNOT pattern relies on.
    """
    k = len(controls)
    angles = np.asarray(angles, dtype=float)
    if len(angles) != 1 << k:
        raise ValueError("need 2**len(controls) angles")
    rot = c.ry if kind == "Ry" else c.rz
    if k == 0:
        rot(target, float(angles[0]))
        return
    size = 1 << k
    # angles[x] = sum_i (-1)^{popcount(x & gray(i))} theta[i]
    a = np.array([[(-1) ** bin(x & _gray(i)).count("1") for i in range(size)] for x in range(size)], dtype=float)
    theta = a.T @ angles / size
    for i in range(size):
        rot(target, float(theta[i]))
        changed = _gray(i) ^ _gray((i + 1) % size)
        pos = changed.bit_length() - 1
        c.cnot(controls[k - 1 - pos], target)


def load_amplitudes(c: Circuit, qubits: Sequence[int], amplitudes: Sequence[complex]) -> None:
    """Prepare sum_x amplitudes[x] |x> on ``qubits`` (all in |0>), up to global phase."""
    k = len(qubits)
    amps = np.zeros(1 << k, dtype=np.complex128)
    amps[: len(amplitudes)] = amplitudes
    norm = np.linalg.norm(amps)
    if norm == 0:
        raise ValueError("zero vector")
    amps = amps / norm
    mags = np.abs(amps)
    for j in range(k):
        # prefix p of j bits; subtrees p0 and p1 of remaining k-j-1 bits
        blocks = mags.reshape(1 << j, 2, 1 << (k - j - 1))
        n0 = np.linalg.norm(blocks[:, 0, :], axis=1)
        n1 = np.linalg.norm(blocks[:, 1, :], axis=1)
        alpha = 2 * np.arctan2(n1, n0)
        uniformly_controlled(c, "Ry", qubits[:j], qubits[j], alpha)
    omega = np.where(mags > 1e-15, np.angle(amps), 0.0)
    for j in range(k - 1, -1, -1):
        pairs = omega.reshape(1 << j, 2)
        beta = pairs[:, 1] - pairs[:, 0]
        uniformly_controlled(c, "Rz", qubits[:j], qubits[j], beta)
        omega = pairs.mean(axis=1)


_INVERSE_KIND = {"S": "Sdag", "Sdag": "S", "T": "Tdag", "Tdag": "T"}


def inverse_ops(ops) -> list:
    """Inverse of a list of unguarded gates (and barriers)."""
    out = []
    for op in reversed(ops):
        if isinstance(op, Barrier):
            out.append(op)
            continue
        if not isinstance(op, Gate) or op.guard is not None:
            raise ValueError("only unguarded gates can be inverted")
        kind = _INVERSE_KIND.get(op.kind, op.kind)
        angle = None if op.angle is None else -op.angle
        out.append(Gate(kind, op.qubits, angle))
    return out


def loader_ops(num_qubits_total: int, qubits: Sequence[int], amplitudes: Sequence[complex]) -> list:
    """Gate list of :func:`load_amplitudes` for reuse (e.g. inversion)."""
    tmp = Circuit()
    tmp.num_qubits = num_qubits_total
    load_amplitudes(tmp, qubits, amplitudes)
    return list(tmp.ops)


__all__ = ["uniformly_controlled", "load_amplitudes", "inverse_ops", "loader_ops", "LoadState"]
