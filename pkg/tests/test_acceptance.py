"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` (the lines are also
printed without ``-s``).
"""
import itertools
import math
import time

import numpy as np
import pytest

import helpers as h
from ffprep import deferred as dm
from ffprep import encodings as enc
from ffprep import logic_gates as lg
from ffprep import oracles as o
from ffprep import state_prep as sp
from ffprep import sweeps
from ffprep.circuit import compute_depth_width
from ffprep.simulator import SimConfig, estimate_success, fidelity, run


@pytest.fixture
def report(capsys):
    def emit(number: int, ok: bool, detail: str, elapsed: float, budget: float) -> None:
        within = elapsed <= budget
        status = "PASS" if ok and within else "FAIL"
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:>2}: {status}  {detail}  [{elapsed:.1f} s / {budget:.0f} s]")
        assert ok, detail
        assert within, f"took {elapsed:.1f} s, budget {budget} s"

    return emit


def prepared(c, seed=1, **kw):
    res = run(c, SimConfig(seed=seed, **kw))
    return res.output(c.outputs).amplitudes, res


# -- 1 ---------------------------------------------------------------------------------


def truth_table_cases(n, rng):
    nb = max(1, math.ceil(math.log2(n + 1)))
    value = int(rng.integers(1 << n))
    sigma = list(rng.permutation(n))
    cases = [
        ("fanout", lg.fanout(n), None, h.fanout_fn),
        ("or", lg.or_gate(n), None, h.or_fn),
        ("and", lg.and_gate(n), None, h.and_fn),
        (f"equal={value}", lg.equal_gate(n, value), None, h.equal_fn(value)),
        ("hamming_weight", lg.hamming_weight(n), "inputs", h.hamming_fn(n, nb)),
        (f"permutation{sigma}", lg.permutation_gate(sigma), None, h.permutation_fn(sigma)),
    ]
    if n <= 4:
        cases.append(("greater_than", lg.greater_than(n), None, h.greater_fn(n)))
    return cases


def test_criterion_1_truth_tables(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst, where = 1.0, ""
    for n in range(1, 6):
        for name, frag, key, fn in truth_table_cases(n, rng):
            ins = frag.inputs[key] if key else h.io_layout(frag)
            fid = h.table_check(frag, ins, fn, seed=n)[0]
            if n <= 3:
                fid = min(fid, h.basis_check(frag, ins, fn, seed=n))
            if fid < worst:
                worst, where = fid, f"{name} n={n}"
    ok = worst >= 1 - 1e-10
    report(1, ok, f"min per-branch fidelity {worst:.12f}{' at ' + where if where else ''}", time.perf_counter() - t0, 60)


# -- 2 ---------------------------------------------------------------------------------

CONSTANT_KINDS = [
    "fanout",
    "or",
    "and",
    "equal",
    "hamming-weight",
    "greater-than",
    "permutation",
    "clifford-ladder",
    "controlled-diagonal",
    "uncompress",
    "compress",
    "parity-phase",
]


def test_criterion_2_depth_constancy(report):
    built = {}
    b0 = time.perf_counter()
    for kind in CONSTANT_KINDS:
        build, sizes, _ = sweeps.SWEEPS[kind]
        built[kind] = [build(s)[0] for s in sizes]
    build_time = time.perf_counter() - b0
    t0 = time.perf_counter()
    depths = {}
    for kind, circuits in built.items():
        for c in circuits:
            c.clear_caches()
        depths[kind] = [compute_depth_width(c).quantum_depth for c in circuits]
    elapsed = time.perf_counter() - t0
    varying = {k: d for k, d in depths.items() if len(set(d)) > 1}
    summary = ", ".join(f"{k}={d[0]}" for k, d in depths.items() if k not in varying)
    detail = f"constant depths: {summary}" + (f"; VARYING {varying}" if varying else "") + f" (build {build_time:.1f} s untimed)"
    report(2, not varying, detail, elapsed, 5)


# -- 3 ---------------------------------------------------------------------------------


def test_criterion_3_width_scaling(report):
    t0 = time.perf_counter()
    spreads = {k: sweeps.sweep(k).ratio_spread for k in ("uncompress", "compress", "fanout", "greater-than")}
    ok = all(s <= 4 for s in spreads.values())
    detail = "ancilla/bound spread " + ", ".join(f"{k}={s:.2f}" for k, s in spreads.items())
    report(3, ok, detail, time.perf_counter() - t0, 5)


# -- 4 ---------------------------------------------------------------------------------


def random_sparse_spec(rng):
    n = int(rng.integers(1, 7))
    d = int(rng.integers(1, min(8, 1 << n) + 1))
    values = tuple(int(v) for v in rng.choice(1 << n, d, replace=False))
    amps = rng.normal(size=d) + 1j * rng.normal(size=d)
    return sp.SparseSpec(n, values, tuple(amps / np.linalg.norm(amps)))


def test_criterion_4_sparse(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst = 1.0
    for i in range(100):
        spec = random_sparse_spec(rng)
        out, _ = prepared(sp.prepare_sparse(spec), seed=i)
        worst = min(worst, fidelity(out, o.oracle_sparse(spec).amplitudes))
    rows = {r.size: r.quantum_depth for r in sweeps.sweep("sparse").rows}
    growth_ok = rows[8] - rows[2] <= rows[2]
    ok = worst >= 1 - 1e-9 and growth_ok
    detail = f"min fidelity {worst:.12f} over 100 specs; depth d=2 {rows[2]}, d=4 {rows[4]}, d=8 {rows[8]}"
    report(4, ok, detail, time.perf_counter() - t0, 120)


# -- 5 ---------------------------------------------------------------------------------


def transposed(vec, eta, bits, a, b):
    """Amplitudes with registers a and b exchanged."""
    t = vec.reshape((1 << bits,) * eta)
    return np.swapaxes(t, a, b).reshape(-1)


def test_criterion_5_symmetric(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst, sign_ok, count = 1.0, True, 0
    for eta, N in itertools.product((2, 3), (4, 8)):
        combos = list(itertools.combinations(range(N), eta))
        picks = rng.choice(len(combos), size=10, replace=len(combos) < 10)
        for idx in picks:
            r = combos[int(idx)]
            for sign in ("symmetric", "antisymmetric"):
                spec = sp.SymmetricSpec(r, N, sign)
                out, _ = prepared(sp.prepare_symmetric(spec), seed=count)
                count += 1
                worst = min(worst, fidelity(out, o.oracle_symmetrize(spec).amplitudes))
                if sign == "antisymmetric":
                    bits = enc.num_bits(N)
                    for a, b in itertools.combinations(range(eta), 2):
                        sign_ok &= bool(np.allclose(transposed(out, eta, bits, a, b), -out, atol=1e-9))
    ok = worst >= 1 - 1e-9 and sign_ok
    detail = f"min fidelity {worst:.12f} over {count} states; transposition flips sign: {sign_ok}"
    report(5, ok, detail, time.perf_counter() - t0, 300)


# -- 6 ---------------------------------------------------------------------------------


def random_sos_spec(rng, d, N, eta=2):
    combos = list(itertools.combinations(range(N), eta))
    sets = tuple(combos[int(i)] for i in sorted(rng.choice(len(combos), d, replace=False)))
    amps = rng.normal(size=d) + 1j * rng.normal(size=d)
    return sp.SosSpec(sets, tuple(amps / np.linalg.norm(amps)), N)


def test_criterion_6_sums_of_determinants(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    worst, agree = 1.0, 1.0
    for d, N in itertools.product((1, 2, 3), (4, 8)):
        for trial in range(5):
            spec = random_sos_spec(rng, d, N)
            ref = o.oracle_sos(spec).amplitudes
            lin, _ = prepared(sp.prepare_sos_linear(spec), seed=trial)
            log, _ = prepared(sp.prepare_sos_log(spec), seed=trial + 100)
            worst = min(worst, fidelity(lin, ref), fidelity(log, ref))
            agree = min(agree, fidelity(lin, log))
    linear = sweeps.sweep("sos-linear")
    _, _, resid = linear.affine_fit()
    log_depths = sweeps.sweep("sos-log").depths
    ok = worst >= 1 - 1e-9 and agree >= 1 - 1e-9 and resid < 1 and len(set(log_depths)) == 1
    detail = (
        f"min fidelity {worst:.12f}, variant agreement {agree:.12f}; "
        f"linear depths {linear.depths} (residual {resid:.2e}); log depths {log_depths}"
    )
    report(6, ok, detail, time.perf_counter() - t0, 600)


# -- 7 ---------------------------------------------------------------------------------


def random_bethe_spec(rng, L, M):
    t = np.triu(rng.uniform(-np.pi, np.pi, (M, M)), 1)
    return sp.BetheSpec(L, M, tuple(map(tuple, t - t.T)), tuple(rng.uniform(-np.pi, np.pi, M)))


def test_criterion_7_bethe(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    notes, ok = [], True
    for L in (2, 4):
        spec = random_bethe_spec(rng, L, 1)
        out, res = prepared(sp.prepare_bethe_circuit(spec), mode="post_select", force=True)
        f = fidelity(out, o.oracle_bethe(spec).amplitudes)
        p = res.record.post_select_probability
        ok &= f >= 1 - 1e-12 and abs(p - 1) <= 1e-12
        notes.append(f"M=1 L={L} fid {f:.14f} p {p:.12f}")
    for draw in range(3):
        spec = random_bethe_spec(rng, 4, 2)
        c = sp.prepare_bethe_circuit(spec)
        out, _ = prepared(c, seed=draw, mode="post_select", force=True)
        f = fidelity(out, o.oracle_bethe(spec).amplitudes)
        p = o.oracle_success_probability(spec)
        stats = estimate_success(c, SimConfig(seed=draw, mode="post_select", shots=10_000))
        sigma = math.sqrt(p * (1 - p) / stats.trials)
        z = abs(stats.empirical_probability - p) / sigma if sigma else 0.0
        ok &= f >= 1 - 1e-9 and z <= 3
        notes.append(f"M=2 draw {draw} fid {f:.12f} p {p:.4f} freq {stats.empirical_probability:.4f} ({z:.2f} sd)")
    spec = sp.BetheSpec(4, 2)
    out, _ = prepared(sp.prepare_bethe_circuit(spec), mode="post_select", force=True)
    f = fidelity(out, o.oracle_dicke(4, 2).amplitudes)
    ok &= f >= 1 - 1e-10
    notes.append(f"theta=0,k=0 vs Dicke(4,2) fid {f:.12f}")
    report(7, ok, "; ".join(notes), time.perf_counter() - t0, 900)


# -- 8 ---------------------------------------------------------------------------------


def test_criterion_8_success_scaling(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    scaled = {}
    for M in (1, 2, 3):
        vals = [o.oracle_success_probability(random_bethe_spec(rng, 2 * M, M)) * math.factorial(M) for _ in range(20)]
        scaled[M] = float(np.mean(vals))
    factor = max(scaled.values()) / min(scaled.values())
    detail = "mean P*M! over 20 draws: " + ", ".join(f"M={m} {v:.3f}" for m, v in scaled.items()) + f"; factor {factor:.2f}"
    report(8, factor < 4, detail, time.perf_counter() - t0, 300)


# -- 9 ---------------------------------------------------------------------------------


def test_criterion_9_parity_signs(report):
    t0 = time.perf_counter()
    checked, mismatches = 0, []
    for eta in (1, 2, 3, 4):
        frag = sp.attach_parity_phase(eta, eta)
        io = h.io_layout(frag)
        nb = len(frag.inputs["j0"])
        perms = list(itertools.permutations(range(eta)))
        amps = np.zeros(1 << len(io), dtype=complex)
        index = {p: h.value_of([b for v in p for b in h.bits_of(v, nb)]) for p in perms}
        for p in perms:
            amps[index[p]] = 1 / math.sqrt(len(perms))
        out = h.run_on(frag, io, amps, seed=eta)
        ref = out[index[tuple(range(eta))]]
        for p in perms:
            checked += 1
            ratio = out[index[p]] / ref
            if abs(ratio - o.sign_by_inversions(p)) > 1e-9:
                mismatches.append(p)
    detail = f"{checked} branches checked (eta <= 4), mismatches {mismatches}"
    report(9, not mismatches, detail, time.perf_counter() - t0, 30)


# -- 10 --------------------------------------------------------------------------------


def test_criterion_10_deferred_measurement(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 9))
        c = dm.random_adaptive_fragment(rng, num_qubits=n, num_ops=int(rng.integers(8, 20)))
        worst = max(worst, dm.deferred_measurement_distance(c))
    report(10, worst <= 1e-9, f"max trace distance {worst:.2e} over 20 fragments", time.perf_counter() - t0, 120)
