"""Size sweeps of depth and width for every builder.

Each sweep kind maps a size parameter to a built circuit, its ancilla count
and the asymptotic width bound it is compared against.  ``expect`` states
how the quantum depth should behave across sizes: ``constant``, ``affine``
(linear in the size) or ``sublinear``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import encodings as enc
from . import logic_gates as lg
from . import state_prep as sp
from .circuit import Circuit, compute_depth_width


@dataclass
class SweepRow:
    size: int
    quantum_depth: int
    width: int
    ancillas: int
    bound: float
    classical_layers: int

    @property
    def ratio(self) -> float:
        return self.ancillas / self.bound if self.bound else float("nan")


@dataclass
class SweepResult:
    kind: str
    expect: str
    rows: list[SweepRow] = field(default_factory=list)

    @property
    def depths(self) -> list[int]:
        return [r.quantum_depth for r in self.rows]

    @property
    def depth_varies(self) -> bool:
        return len(set(self.depths)) > 1

    @property
    def ratio_spread(self) -> float:
        """max/min of ancillas-to-bound ratio over the sweep."""
        ratios = [r.ratio for r in self.rows if r.bound and r.ancillas > 0]
        return max(ratios) / min(ratios) if ratios else 1.0

    def affine_fit(self) -> tuple[float, float, float]:
        """(slope, intercept, max |residual|) of depth against size."""
        x = np.array([r.size for r in self.rows], dtype=float)
        y = np.array(self.depths, dtype=float)
        if len(x) < 2:
            return 0.0, float(y[0]) if len(y) else 0.0, 0.0
        slope, icpt = np.polyfit(x, y, 1)
        return float(slope), float(icpt), float(np.max(np.abs(y - (slope * x + icpt))))

    @property
    def flagged(self) -> bool:
        """True when the depth behavior contradicts ``expect``."""
        if self.expect == "constant":
            return self.depth_varies
        if self.expect == "affine":
            slope, _, res = self.affine_fit()
            return res >= 1 or slope <= 0
        return False

    def as_dict(self) -> dict:
        out = {"kind": self.kind, "expect": self.expect, "rows": [asdict(r) for r in self.rows], "flagged": self.flagged}
        out["ratio_spread"] = self.ratio_spread
        if self.expect == "affine":
            out["affine_fit"] = dict(zip(("slope", "intercept", "max_residual"), self.affine_fit()))
        return out


Built = tuple[Circuit, int, float]


def _frag(f: lg.GateFragment) -> Built:
    return f.circuit, f.ancillas, f.width_bound


def _alternating(n: int) -> int:
    return int("10" * n, 2) >> n


def _prep(c: Circuit, bound: float) -> Built:
    width = compute_depth_width(c).width
    return c, width - len(c.outputs), bound


def _sparse(d: int, n: int = 6) -> Built:
    rng = np.random.default_rng(d)
    vals = rng.choice(1 << n, d, replace=False)
    amps = np.full(d, 1 / math.sqrt(d))
    c = sp.prepare_sparse(sp.SparseSpec(n, tuple(vals), tuple(amps)))
    return _prep(c, d * n * math.log2(n))


def _sos(d: int, fn, eta: int = 2, N: int = 8) -> Built:
    sets = list(itertools.combinations(range(N), eta))[:d]
    spec = sp.SosSpec(tuple(sets), tuple([1 / math.sqrt(d)] * d), N)
    c = fn(spec)
    return _prep(c, eta * eta * (eta * math.log2(max(2, eta)) + math.log2(N)))


def _symmetric(N: int, eta: int = 2) -> Built:
    c = sp.prepare_symmetric(sp.SymmetricSpec(tuple(range(eta)), N, "antisymmetric"))
    return _prep(c, eta * eta * (eta * math.log2(max(2, eta)) + math.log2(N)))


SWEEPS: dict[str, tuple[Callable[[int], Built], tuple[int, ...], str]] = {
    "fanout": (lambda n: _frag(lg.fanout(n)), (2, 4, 8, 16), "constant"),
    "or": (lambda n: _frag(lg.or_gate(n)), (2, 4, 8, 16), "constant"),
    "and": (lambda n: _frag(lg.and_gate(n)), (2, 4, 8, 16), "constant"),
    "equal": (lambda n: _frag(lg.equal_gate(n, _alternating(n))), (2, 4, 8, 16), "constant"),
    "hamming-weight": (lambda n: _frag(lg.hamming_weight(n)), (2, 4, 8, 16), "constant"),
    "greater-than": (lambda n: _frag(lg.greater_than(n)), (2, 4, 8, 16), "constant"),
    "permutation": (lambda n: _frag(lg.permutation_gate([(i + 1) % n for i in range(n)])), (2, 4, 8, 16), "constant"),
    "clifford-ladder": (lambda n: _frag(lg.clifford_ladder([[("H", 0), ("CNOT", 0, 1)]] * (n - 1))), (2, 4, 8, 16), "constant"),
    "controlled-diagonal": (
        lambda m: _frag(lg.parallel_controlled_diagonal(m, [lg.DiagonalGate.rz(0.1 * (i + 1)) for i in range(m)])),
        (2, 4, 8, 16),
        "constant",
    ),
    "uncompress": (lambda N: _frag(enc.uncompress(enc.IntegerSet((0, N - 1), N))), (4, 8, 16), "constant"),
    "compress": (lambda N: _frag(enc.compress(enc.IntegerSet((0, N - 1), N))), (4, 8, 16), "constant"),
    "parity-phase": (lambda eta: _frag(sp.attach_parity_phase(eta, eta * eta)), (2, 3, 4), "constant"),
    "symmetric": (_symmetric, (4, 8, 16), "constant"),
    "sparse": (_sparse, (2, 4, 8), "sublinear"),
    "sos-linear": (lambda d: _sos(d, sp.prepare_sos_linear), (1, 2, 3, 4), "affine"),
    "sos-log": (lambda d: _sos(d, sp.prepare_sos_log), (1, 2), "constant"),
}


def sweep(kind: str, sizes: Sequence[int] | None = None) -> SweepResult:
    if kind not in SWEEPS:
        raise KeyError(f"unknown sweep {kind!r}; choose from {sorted(SWEEPS)}")
    build, default, expect = SWEEPS[kind]
    res = SweepResult(kind, expect)
    for size in sizes or default:
        c, anc, bound = build(int(size))
        rep = compute_depth_width(c)
        res.rows.append(SweepRow(int(size), rep.quantum_depth, rep.width, int(anc), float(bound), rep.classical_layers))
    return res


def format_table(res: SweepResult) -> str:
    lines = [f"{'size':>6} {'depth':>6} {'width':>8} {'ancillas':>9} {'anc/bound':>10}"]
    for r in res.rows:
        lines.append(f"{r.size:>6} {r.quantum_depth:>6} {r.width:>8} {r.ancillas:>9} {r.ratio:>10.3f}")
    note = "depth varies" if res.depth_varies else "single depth value"
    if res.flagged:
        note += f"  FLAG: expected {res.expect} depth"
    lines.append(f"# {res.kind}: {note}")
    return "\n".join(lines)
