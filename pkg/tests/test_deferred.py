import numpy as np
import pytest

from ffprep import classical as cl
from ffprep import deferred as dm
from ffprep import logic_gates as lg
from ffprep.circuit import Circuit, Gate


@pytest.mark.parametrize("seed", range(10))
def test_random_fragments_match_coherent_version(seed):
    c = dm.random_adaptive_fragment(np.random.default_rng(seed))
    assert dm.deferred_measurement_distance(c) <= 1e-9


def test_teleported_cnot_matches_coherent_version():
    frag = lg.clifford_ladder([[("CNOT", 0, 1)]])
    c = frag.circuit
    for q in frag.inputs["qubits"]:
        c.ops.insert(0, Gate("H", (q,)))
    assert dm.deferred_measurement_distance(c, frag.inputs["qubits"]) <= 1e-9


def test_negative_control_detects_wrong_guard():
    """Flipping one correction must be caught; otherwise the check is vacuous."""
    c = Circuit()
    c.allocate_register("q", "binary", 2)
    c.h(0)
    c.cnot(0, 1)
    m = c.measure(0)
    c.x(1, guard=cl.bit(m))
    assert dm.deferred_measurement_distance(c, [1]) <= 1e-12
    bad = Circuit()
    bad.allocate_register("q", "binary", 2)
    bad.h(0)
    bad.cnot(0, 1)
    m = bad.measure(0)
    bad.x(1, guard=cl.Not(cl.bit(m)))
    ens = dm.ensemble_density(bad, [1])
    good = dm.ensemble_density(c, [1])
    assert dm.trace_distance(ens, good) == pytest.approx(1)


def test_trace_distance_examples():
    zero = np.diag([1.0, 0.0])
    one = np.diag([0.0, 1.0])
    assert dm.trace_distance(zero, one) == pytest.approx(1)
    assert dm.trace_distance(zero, zero) == 0
    assert dm.trace_distance(zero, np.eye(2) / 2) == pytest.approx(0.5)
