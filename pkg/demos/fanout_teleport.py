"""Constant-depth fan-out and a teleported Clifford ladder.

Builds a fan-out onto 8 targets, shows that the GHZ output appears for a
superposed source, and prints depths for growing sizes: the depth stays
put while the ancilla count grows.
"""
import numpy as np

from ffprep import compute_depth_width, fidelity
from ffprep import logic_gates as lg
from ffprep.simulator import SimConfig, StateVector, run

frag = lg.fanout(8)
src = frag.inputs["source"]
res = run(frag.circuit, SimConfig(seed=0), StateVector(np.array([1, 1]) / np.sqrt(2), tuple(src)))
io = src + frag.inputs["targets"]
ghz = np.zeros(1 << len(io))
ghz[[0, -1]] = 1 / np.sqrt(2)
print(f"fan-out onto 8 targets: GHZ fidelity {fidelity(res.output(io), ghz):.12f}")
print(f"measurement outcomes drawn in that shot: {len(res.record.bits)}")

print("\n   n  fanout depth  ladder depth  fanout ancillas")
for n in (2, 4, 8, 16):
    f = lg.fanout(n)
    ladder = lg.clifford_ladder([[("H", 0), ("CNOT", 0, 1)]] * (n - 1))
    print(f"{n:>4}  {compute_depth_width(f.circuit).quantum_depth:>12}  {compute_depth_width(ladder.circuit).quantum_depth:>12}  {f.ancillas:>15}")
