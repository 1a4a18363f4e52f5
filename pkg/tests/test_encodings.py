import itertools

import numpy as np
import pytest

import helpers as h
from ffprep import encodings as enc
from ffprep.circuit import CircuitError, compute_depth_width
from ffprep.simulator import SimConfig, StateVector, fidelity, run


def entangled(values, amps, nbits, with_unary=True, zero_binary=False):
    """sum_i a_i |values[i] or 0>|e_i> (binary MSB first, then unary)."""
    eta = len(values)
    size = nbits + (eta if with_unary else 0)
    out = np.zeros(1 << size, dtype=complex)
    for i, (v, a) in enumerate(zip(values, amps)):
        b = 0 if zero_binary else v
        idx = (b << eta) | (1 << (eta - 1 - i)) if with_unary else b
        out[idx] += a
    return out


def random_amps(rng, k):
    a = rng.normal(size=k) + 1j * rng.normal(size=k)
    return a / np.linalg.norm(a)


def run_fragment(frag, in_qubits, amps, seed=0):
    res = run(frag.circuit, SimConfig(seed=seed), StateVector(amps, tuple(in_qubits)))
    return res.output(h.io_layout(frag)).amplitudes


def test_integer_set_validation():
    with pytest.raises(ValueError):
        enc.IntegerSet((3, 1), 4)
    with pytest.raises(ValueError):
        enc.IntegerSet((1, 4), 4)
    s = enc.IntegerSet.parse("0, 2,5", 8)
    assert s.values == (0, 2, 5) and s.bits == 3
    assert enc.IntegerSet((0, 3), 4).values[-1] == 3  # r_last = N - 1 accepted


def test_register_size_for_non_power_of_two():
    assert enc.num_bits(5) == 3
    assert enc.num_bits(8) == 3
    assert enc.num_bits(9) == 4


def test_uncompress_example():
    frag = enc.uncompress(enc.IntegerSet((1, 3), 4))
    amps = np.zeros(4)
    amps[[1, 3]] = 1 / np.sqrt(2)
    out = run_fragment(frag, frag.inputs["binary"], amps)
    want = np.zeros(16)
    want[[0b0110, 0b1101]] = 1 / np.sqrt(2)
    assert fidelity(out, want) == pytest.approx(1)


def test_uncompress_single_value_sets_flag():
    frag = enc.uncompress(enc.IntegerSet((2,), 4))
    amps = np.zeros(4)
    amps[2] = 1
    out = run_fragment(frag, frag.inputs["binary"], amps)
    assert abs(out[0b101]) == pytest.approx(1)


def test_compress_example():
    frag = enc.compress(enc.IntegerSet((1, 3), 4))
    amps = entangled((1, 3), [1 / np.sqrt(2)] * 2, 2)
    out = run_fragment(frag, h.io_layout(frag), amps)
    want = np.zeros(16)
    want[[0b0010, 0b0001]] = 1 / np.sqrt(2)
    assert fidelity(out, want) == pytest.approx(1)


def test_compress_single_zero_is_identity():
    frag = enc.compress(enc.IntegerSet((0,), 4))
    amps = np.zeros(8)
    amps[0b001] = 1
    out = run_fragment(frag, h.io_layout(frag), amps)
    assert abs(out[0b001]) == pytest.approx(1)


@pytest.mark.parametrize("seed", range(3))
def test_uncompress_and_compress_random_eta3(seed):
    rng = np.random.default_rng(seed)
    values = tuple(sorted(rng.choice(8, 3, replace=False)))
    amps = random_amps(rng, 3)
    s = enc.IntegerSet(values, 8)
    frag = enc.uncompress(s)
    binary = np.zeros(8, dtype=complex)
    binary[list(values)] = amps
    out = run_fragment(frag, frag.inputs["binary"], binary, seed)
    assert fidelity(out, entangled(values, amps, 3)) >= 1 - 1e-10
    frag = enc.compress(s)
    out = run_fragment(frag, h.io_layout(frag), entangled(values, amps, 3), seed)
    assert fidelity(out, entangled(values, amps, 3, zero_binary=True)) >= 1 - 1e-10


@pytest.mark.parametrize("N", [2, 4, 8])
def test_amplitudes_preserved_exhaustively(N):
    """Every set of size <= 3 in [0, N): relabeling r_i <-> (0, e_i) keeps amplitudes exactly."""
    nb = enc.num_bits(N)
    rng = np.random.default_rng(N)
    for eta in (1, 2, 3):
        for values in itertools.combinations(range(N), eta):
            s = enc.IntegerSet(values, N)
            amps = random_amps(rng, eta)
            frag = enc.compress(s)
            out = run_fragment(frag, h.io_layout(frag), entangled(values, amps, nb))
            want = entangled(values, amps, nb, zero_binary=True)
            phase = np.vdot(want, out)
            assert np.allclose(out, want * phase / abs(phase), atol=1e-10)


def test_inverse_pairing():
    """uncompress twice (XOR semantics) and compress twice are identities on valid inputs."""
    rng = np.random.default_rng(7)
    s = enc.IntegerSet((0, 2, 5), 8)
    amps = random_amps(rng, 3)
    c = enc.uncompress(s)
    b, u = c.inputs["binary"], c.inputs["unary"]
    enc.uncompress_into(c.circuit, b, u, s.values)
    binary = np.zeros(8, dtype=complex)
    binary[list(s.values)] = amps
    out = run_fragment(c, b, binary)
    want = entangled(s.values, amps, 3, with_unary=False)
    assert fidelity(out, np.kron(want, [1, 0, 0, 0, 0, 0, 0, 0])) >= 1 - 1e-10
    c = enc.compress(s)
    enc.compress_into(c.circuit, c.inputs["binary"], c.inputs["unary"], s.values)
    ent = entangled(s.values, amps, 3)
    assert fidelity(run_fragment(c, h.io_layout(c), ent), ent) >= 1 - 1e-10


def test_integer_set_transform_example():
    frag = enc.integer_set_transform(enc.IntegerSet((1, 3), 4), enc.IntegerSet((0, 2), 4))
    a, b = 0.6, 0.8j
    amps = np.zeros(4, dtype=complex)
    amps[1], amps[3] = a, b
    out = run_fragment(frag, frag.inputs["binary"], amps)
    want = np.zeros(4, dtype=complex)
    want[0], want[2] = a, b
    assert fidelity(out, want) == pytest.approx(1)


def test_integer_set_transform_identity_and_growth():
    rng = np.random.default_rng(2)
    s = enc.IntegerSet((0, 1, 3), 4)
    amps = random_amps(rng, 3)
    frag = enc.integer_set_transform(s, s)
    vec = np.zeros(4, dtype=complex)
    vec[[0, 1, 3]] = amps
    assert fidelity(run_fragment(frag, frag.inputs["binary"], vec), vec) == pytest.approx(1)
    dst = enc.IntegerSet((2, 5, 7), 8)
    frag = enc.integer_set_transform(enc.IntegerSet((0, 1, 3), 4), dst)
    vec = np.zeros(8, dtype=complex)
    vec[[0, 1, 3]] = amps
    want = np.zeros(8, dtype=complex)
    want[[2, 5, 7]] = amps
    assert fidelity(run_fragment(frag, frag.inputs["binary"], vec), want) >= 1 - 1e-10


def test_integer_set_transform_size_mismatch():
    with pytest.raises(CircuitError):
        enc.integer_set_transform(enc.IntegerSet((0, 1), 4), enc.IntegerSet((1,), 4))


def test_support_validator():
    vec = np.zeros(8)
    vec[[1, 6]] = 1 / np.sqrt(2)
    enc.check_support(vec, [1, 6])
    with pytest.raises(ValueError):
        enc.check_support(vec, [1, 5])


def test_depth_constant_over_eta_and_n():
    for builder in (enc.uncompress, enc.compress):
        depths = set()
        for eta, N in itertools.product((2, 3), (4, 8, 16)):
            s = enc.IntegerSet(tuple(range(N - eta, N)), N)
            depths.add(compute_depth_width(builder(s).circuit).quantum_depth)
        assert len(depths) == 1, builder.__name__
