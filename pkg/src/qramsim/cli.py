"""``qramsim`` command line.

Exit codes: 0 success, 1 I/O error, 2 invalid input, 3 invariant failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .analysis import (
    ADVERSARIAL,
    DISTRIBUTIONS,
    SWEEP_ENCODERS,
    UNIFORM,
    SweepConfig,
    exact_postselect_probability,
    expected_repetitions,
    fidelity_to_target,
    powers_of_two,
    rows_to_csv,
    run_sweep,
    sampled_postselect_probability,
)
from .circuit import emit_qasm
from .dataset import load_dataset
from .encoders import DETERMINISTIC, ENCODERS, encode
from .errors import QramError, ValidationError
from .verify import run_checks

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_INVARIANT = 0, 1, 2, 3

log = logging.getLogger("qramsim")


def _write(text: str, output: Optional[str]) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8", newline="\n")


def _parse_m_values(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise ValidationError(f"--m-values must be a comma-separated list of integers, got {text!r}") from None


def cmd_encode(args) -> int:
    data = load_dataset(args.dataset)
    result = encode(args.encoder, data, preprocess=args.preprocess)
    report = {"encoder": args.encoder, "n": data.n, "M": data.M}
    if result.deterministic:
        report["exact_probability"] = DETERMINISTIC
        report["expected_repetitions"] = 1.0
    else:
        p = exact_postselect_probability(result)
        report["exact_probability"] = p
        report["sampled_probability"] = sampled_postselect_probability(result, args.shots, args.seed)
        report["shots"] = args.shots
        report["expected_repetitions"] = expected_repetitions(p)
    if args.preprocess and not result.deterministic:
        report["scale"] = result.scale
    report["fidelity_to_target"] = fidelity_to_target(result)
    report["gate_count"] = result.gate_count
    report["qubit_count"] = result.qubit_count
    _write(json.dumps(report, indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_emit_qasm(args) -> int:
    data = load_dataset(args.dataset)
    result = encode(args.encoder, data, preprocess=args.preprocess)
    _write(emit_qasm(result.circuit, decompose=args.decompose, prep=result.prep or ()), args.output)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.m_values:
        m_values = _parse_m_values(args.m_values)
    else:
        m_values = powers_of_two(2 if args.distribution == ADVERSARIAL else 4, 2**args.n)
    config = SweepConfig(
        encoder=args.encoder,
        preprocess=args.preprocess,
        n=args.n,
        M_values=tuple(m_values),
        distribution=args.distribution,
        peak=args.peak,
        shots=args.shots,
        seed=args.seed,
        workers=args.workers,
    )
    _write(rows_to_csv(run_sweep(config)), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_checks(seed=args.seed, inject_fault=args.inject_fault)
    lines = "".join(r.line() + "\n" for r in results)
    if args.output:
        _write(lines, args.output)
    sys.stdout.write(lines)
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qramsim", description="Simulate quantum data loaders.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, encoders=ENCODERS, dataset=True):
        if dataset:
            p.add_argument("--dataset", required=True, help="JSON or CSV dataset file")
        p.add_argument("--encoder", choices=encoders, required=True)
        p.add_argument("--preprocess", action="store_true", help="divide amplitudes by max |x_k|")
        p.add_argument("--shots", type=int, default=1024)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", help="write here instead of stdout")

    p = sub.add_parser("encode", help="encode a dataset and report probabilities")
    common(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("emit-qasm", help="write the loader circuit as OpenQASM 2.0")
    common(p)
    p.add_argument("--decompose", action="store_true", help="lower multi-controlled gates onto ancillae")
    p.set_defaults(func=cmd_emit_qasm)

    p = sub.add_parser("sweep", help="success probability sweep as CSV")
    common(p, SWEEP_ENCODERS, dataset=False)
    p.add_argument("--n", type=int, default=11)
    p.add_argument("--m-values", help="comma-separated M values (default powers of two up to 2^n)")
    p.add_argument("--distribution", choices=DISTRIBUTIONS, default=UNIFORM)
    p.add_argument("--peak", type=float, default=0.99)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except QramError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
