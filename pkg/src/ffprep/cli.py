"""Command-line front end: prep, sweep, export and verify.

Exit codes:
  0  success
  1  unexpected runtime failure (e.g. simulation cap exceeded)
  2  invalid spec or arguments (message names the offending line)
  3  post-selection did not succeed within --post-select-max-tries
  4  verify found a mismatch between circuit output and fixture
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from . import encodings as enc
from . import oracles
from . import state_prep as sp
from . import sweeps
from .circuit import Circuit, compute_depth_width, dumps, loads
from .simulator import RNG_ALGORITHM, SimConfig, SimulationError, SuccessStats, estimate_success, fidelity, run

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_SPEC = 2
EXIT_POSTSELECT = 3
EXIT_MISMATCH = 4

PREP_KINDS = ("sparse", "symmetric", "sos-linear", "sos-log", "bethe")
_SPEC_KIND = {"sparse": "sparse", "symmetric": "symmetric", "sos-linear": "sos", "sos-log": "sos", "bethe": "bethe"}
VERIFY_TOL = 1e-9


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read_spec(kind: str, path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(EXIT_SPEC, f"{path}: line 1: cannot read spec ({exc.strerror})") from None
    try:
        return sp.load_spec(_SPEC_KIND[kind], text)
    except sp.SpecError as exc:
        raise CliError(EXIT_SPEC, f"{path}: {exc}") from None


def build(kind: str, spec, backend: str = "inject", native_2q: bool = False) -> Circuit:
    if kind == "sparse":
        return sp.prepare_sparse(spec, native_2q)
    if kind == "symmetric":
        return sp.prepare_symmetric(spec, native_2q)
    if kind == "sos-linear":
        return sp.prepare_sos_linear(spec, native_2q)
    if kind == "sos-log":
        return sp.prepare_sos_log(spec, native_2q)
    return sp.prepare_bethe_circuit(spec, backend, native_2q)


def oracle_for(kind: str, spec) -> oracles.ReferenceState:
    if kind == "sparse":
        return oracles.oracle_sparse(spec)
    if kind == "symmetric":
        return oracles.oracle_symmetrize(spec)
    if kind in ("sos-linear", "sos-log"):
        return oracles.oracle_sos(spec)
    return oracles.oracle_bethe(spec)


def _success_dict(stats: SuccessStats, tries: int, resource_probability: float = 1.0) -> dict:
    return {
        "trials": stats.trials,
        "successes": stats.successes,
        "empirical_probability": stats.empirical_probability,
        "exact_probability": stats.exact_probability,
        "resource_probability": resource_probability,
        "tries": tries,
    }


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


# -- prep ----------------------------------------------------------------------


def cmd_prep(args) -> int:
    t0 = time.perf_counter()
    spec = _read_spec(args.kind, args.spec)
    circuit = build(args.kind, spec, args.backend, args.native_2q)
    post = bool(circuit.postselect)
    mode = "repeat_until_success" if post else "sample"
    res = run(circuit, SimConfig(seed=args.seed, mode=mode, max_tries=args.post_select_max_tries))
    metrics = compute_depth_width(circuit)
    report = {
        "tool": "ffprep",
        "version": __version__,
        "prng": RNG_ALGORITHM,
        "seed": args.seed,
        "kind": args.kind,
        "spec": spec.to_json(),
        "depth": metrics.quantum_depth,
        "width": metrics.width,
        "classical_layers": metrics.classical_layers,
        "ancillas_by_construction": metrics.ancillas_by_construction,
    }
    if args.kind == "bethe":
        report["backend"] = args.backend
    if post:
        stats = estimate_success(circuit, SimConfig(seed=args.seed, mode="post_select", shots=args.shots))
    else:
        stats = SuccessStats(args.shots, args.shots, 1.0)
    report["success"] = _success_dict(stats, res.record.tries)
    code = EXIT_OK
    if res.record.post_select_satisfied:
        out = res.output(circuit.outputs)
        report["fidelity"] = fidelity(out.amplitudes, oracle_for(args.kind, spec).amplitudes)
    else:
        report["fidelity"] = None
        report["error"] = f"post-selection failed in {res.record.tries} tries"
        code = EXIT_POSTSELECT
    if args.timing:
        report["wall_clock_ms"] = round(1000 * (time.perf_counter() - t0), 3)
    _write(_dump_report(report), args.out)
    if code == EXIT_POSTSELECT:
        print(report["error"], file=sys.stderr)
    return code


# -- sweep ---------------------------------------------------------------------


def _parse_sizes(text: str | None) -> list[int] | None:
    if not text:
        return None
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise CliError(EXIT_SPEC, f"line 1: --sizes must be comma-separated integers, got {text!r}") from None


def _set_sweep(kind: str, values: str, sizes: list[int] | None) -> sweeps.SweepResult:
    builder = enc.uncompress if kind == "uncompress" else enc.compress
    res = sweeps.SweepResult(kind, "constant")
    for N in sizes or sweeps.SWEEPS[kind][1]:
        try:
            s = enc.IntegerSet.parse(values, N)
        except ValueError as exc:
            raise CliError(EXIT_SPEC, f"line 1: --set for N={N}: {exc}") from None
        frag = builder(s)
        rep = compute_depth_width(frag.circuit)
        res.rows.append(sweeps.SweepRow(N, rep.quantum_depth, rep.width, frag.ancillas, float(frag.width_bound), rep.classical_layers))
    return res


def cmd_sweep(args) -> int:
    sizes = _parse_sizes(args.sizes)
    if args.kind not in sweeps.SWEEPS:
        raise CliError(EXIT_SPEC, f"line 1: unknown sweep {args.kind!r}; choose from {', '.join(sorted(sweeps.SWEEPS))}")
    if args.set is not None:
        if args.kind not in ("uncompress", "compress"):
            raise CliError(EXIT_SPEC, "line 1: --set applies to the uncompress and compress sweeps only")
        res = _set_sweep(args.kind, args.set, sizes)
    else:
        res = sweeps.sweep(args.kind, sizes)
    print(sweeps.format_table(res))
    if args.out:
        Path(args.out).write_text(json.dumps(res.as_dict(), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


# -- export / verify -------------------------------------------------------------


def cmd_export(args) -> int:
    spec = _read_spec(args.kind, args.spec)
    circuit = build(args.kind, spec, args.backend, args.native_2q)
    construction = {"kind": args.kind, "spec": spec.to_json()}
    if args.kind == "bethe":
        construction["backend"] = args.backend
    _write(dumps(circuit, construction), args.out)
    if args.fixture:
        ref = oracle_for(args.kind, spec)
        Path(args.fixture).write_text(oracles.to_fixture(ref, construction) + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        circuit = loads(Path(args.circuit).read_text())
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(EXIT_SPEC, f"{args.circuit}: line 1: cannot load circuit ({exc})") from None
    try:
        ref, _ = oracles.from_fixture(Path(args.fixture).read_text())
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CliError(EXIT_SPEC, f"{args.fixture}: line 1: cannot load fixture ({exc})") from None
    if not circuit.outputs:
        raise CliError(EXIT_SPEC, f"{args.circuit}: line 1: circuit declares no output qubits")
    report = {"circuit": args.circuit, "fixture": args.fixture, "seed": args.seed, "prng": RNG_ALGORITHM}
    if ref.num_qubits != len(circuit.outputs):
        report.update(fidelity=0.0, match=False, error="fixture width differs from circuit outputs")
    else:
        mode = "post_select" if circuit.postselect else "sample"
        res = run(circuit, SimConfig(seed=args.seed, mode=mode, force=True))
        out = res.output(circuit.outputs).amplitudes
        norm = np.linalg.norm(ref.amplitudes)
        f = fidelity(out, ref.amplitudes / norm) if norm > 0 else 0.0
        ok = abs(norm - 1) <= 1e-9 and f >= 1 - VERIFY_TOL
        report.update(fidelity=f, fixture_norm=float(norm), match=bool(ok))
    _write(_dump_report(report), args.out)
    return EXIT_OK if report["match"] else EXIT_MISMATCH


# -- entry point -----------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ffprep", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"ffprep {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(q):
        q.add_argument("kind", choices=PREP_KINDS)
        q.add_argument("spec", help="JSON spec file")
        q.add_argument("--backend", choices=sp.BACKENDS, default="inject", help="Bethe resource-state backend")
        q.add_argument("--native-2q", action="store_true", help="count CZ / controlled-phase as one layer")
        q.add_argument("--out", help="output path (default: stdout)")

    q = sub.add_parser("prep", help="build, simulate and compare against the oracle")
    common(q)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--shots", type=int, default=1000, help="trials for the success-rate estimate")
    q.add_argument("--post-select-max-tries", type=int, default=1000)
    q.add_argument("--timing", action="store_true", help="add wall-clock time to the report")
    q.set_defaults(func=cmd_prep)

    q = sub.add_parser("sweep", help="depth/width table over a size sweep")
    q.add_argument("kind", help=f"one of: {', '.join(sweeps.SWEEPS)}")
    q.add_argument("--sizes", help="comma-separated sizes")
    q.add_argument("--set", help="comma-separated integer set for uncompress/compress sweeps")
    q.add_argument("--out", help="write the sweep as JSON")
    q.set_defaults(func=cmd_sweep)

    q = sub.add_parser("export", help="serialize the built circuit as JSON")
    common(q)
    q.add_argument("--format", choices=("json",), default="json")
    q.add_argument("--fixture", help="also write the oracle state as a fixture")
    q.set_defaults(func=cmd_export)

    q = sub.add_parser("verify", help="replay a circuit and compare with a fixture")
    q.add_argument("circuit")
    q.add_argument("fixture")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out")
    q.set_defaults(func=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SPEC if exc.code not in (0, None) else EXIT_OK
    if getattr(args, "shots", 1) < 1 or getattr(args, "post_select_max_tries", 1) < 1:
        print("line 1: --shots and --post-select-max-tries must be positive", file=sys.stderr)
        return EXIT_SPEC
    try:
        return args.func(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except (SimulationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
