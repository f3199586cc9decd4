"""Post-selection probabilities, repetition cost and figure-style sweeps."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .dataset import Dataset
from .encoders import (
    A_PQM,
    FF_QRAM,
    FFP_QRAM,
    EncodingResult,
    encode,
    target_state,
)
from .errors import ValidationError
from .statevector import StateVector, factor_out, fidelity, measure_shots, project_postselect

log = logging.getLogger(__name__)

TWO_PATTERN = "two-pattern-0.3-0.7"
UNIFORM = "uniform-random"
ADVERSARIAL = "adversarial-max"
DISTRIBUTIONS = (TWO_PATTERN, UNIFORM, ADVERSARIAL)
SWEEP_ENCODERS = (FF_QRAM, FFP_QRAM, A_PQM)

CSV_HEADER = (
    "encoder",
    "preprocess",
    "n",
    "M",
    "exact_probability",
    "sampled_probability",
    "expected_repetitions",
    "gate_count",
    "qubit_count",
)


def _require_postselected(result: EncodingResult) -> None:
    if result.deterministic:
        raise ValidationError(f"{result.encoder} is deterministic; there is no post-selection probability")


def _flag_qubit(result: EncodingResult) -> int:
    return result.final_state.layout.qubit(result.register_of_interest, 0)


def exact_postselect_probability(result: EncodingResult) -> float:
    """Squared-amplitude mass of ``R = 1`` in the final state."""
    _require_postselected(result)
    probs = result.final_state.probabilities().reshape([2] * result.final_state.num_qubits)
    q = _flag_qubit(result)
    index: list = [slice(None)] * probs.ndim
    index[q] = 1
    return float(min(1.0, probs[tuple(index)].sum()))


def predicted_postselect_probability(initial_address: np.ndarray, data: Dataset) -> float:
    """``sum_k |alpha_{p_k}|^2 |x_k|^2`` from the initial address amplitudes."""
    alpha = np.asarray(initial_address)
    return float(sum(abs(alpha[r.index]) ** 2 * abs(r.amplitude) ** 2 for r in data.records))


def sampled_postselect_probability(result: EncodingResult, shots: int = 1024, seed: int = 0) -> float:
    """Fraction of ``shots`` simulated measurements that find ``R = 1``."""
    _require_postselected(result)
    outcomes = measure_shots(result.final_state, [_flag_qubit(result)], shots, seed)
    hits = sum(o.count for o in outcomes if o.bitstring == "1")
    return hits / shots


def expected_repetitions(p: float) -> float:
    """Mean number of runs until the first success (geometric trials)."""
    if not p > 0:
        raise ValidationError(f"success probability must be > 0, got {p!r}")
    return 1.0 / p


def binomial_sigma(p: float, shots: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / shots)


def loaded_state(result: EncodingResult) -> StateVector:
    """State of the data register after a successful load.

    For the post-selected loaders this projects ``R`` onto ``|1>`` first.
    """
    state = result.final_state
    if not result.deterministic:
        state, _ = project_postselect(state, _flag_qubit(result), 1)
    return factor_out(state, [result.data_register])


def reference_target(result: EncodingResult) -> StateVector:
    """Normalized ``sum x_k |p_k>`` for the data the caller asked to load."""
    amps = result.dataset.amplitudes * result.scale
    data = result.dataset.with_amplitudes(amps / np.linalg.norm(amps), normalized=True)
    return target_state(data, result.data_register)


def fidelity_to_target(result: EncodingResult) -> float:
    return fidelity(loaded_state(result), reference_target(result))


# ---------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepConfig:
    """One figure-style experiment.

    ``two-pattern-0.3-0.7`` sweeps the pattern width from 1 to ``n`` with
    M = 2; the other distributions sweep ``M_values`` at fixed ``n``.
    """

    encoder: str
    preprocess: bool
    n: int
    M_values: tuple[int, ...] = ()
    distribution: str = UNIFORM
    peak: float = 0.99
    shots: int = 1024
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "M_values", tuple(int(m) for m in self.M_values))
        if self.encoder not in SWEEP_ENCODERS:
            raise ValidationError(f"sweep encoder must be one of {SWEEP_ENCODERS}, got {self.encoder!r}")
        if self.distribution not in DISTRIBUTIONS:
            raise ValidationError(f"distribution must be one of {DISTRIBUTIONS}, got {self.distribution!r}")
        if self.n < 1:
            raise ValidationError(f"n must be >= 1, got {self.n}")
        if self.shots < 1:
            raise ValidationError(f"shots must be >= 1, got {self.shots}")
        if self.distribution != TWO_PATTERN:
            if not self.M_values:
                raise ValidationError("M_values is empty")
            for m in self.M_values:
                if not 1 <= m <= 2**self.n:
                    raise ValidationError(f"M = {m} is outside [1, 2^{self.n}]")
        if self.distribution == ADVERSARIAL and not 0 < self.peak <= 1:
            raise ValidationError(f"peak must lie in (0, 1], got {self.peak}")

    def points(self) -> list[tuple[int, int]]:
        """``(n, M)`` pairs in sweep order."""
        if self.distribution == TWO_PATTERN:
            return [(n, 2) for n in range(1, self.n + 1)]
        return [(self.n, m) for m in self.M_values]


@dataclass(frozen=True)
class SweepRow:
    encoder: str
    preprocess: bool
    n: int
    M: int
    exact_probability: float
    sampled_probability: float
    expected_repetitions: float
    gate_count: int
    qubit_count: int
    flagged: bool = field(default=False, compare=False)

    def csv_fields(self) -> list[str]:
        return [
            self.encoder,
            "true" if self.preprocess else "false",
            str(self.n),
            str(self.M),
            _g12(self.exact_probability),
            _g12(self.sampled_probability),
            _g12(self.expected_repetitions),
            str(self.gate_count),
            str(self.qubit_count),
        ]


def _g12(value: float) -> str:
    return f"{value:.12g}"


def point_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for sweep point ``index``."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _random_patterns(rng: np.random.Generator, n: int, m: int) -> list[str]:
    picks = rng.choice(2**n, size=m, replace=False)
    return [format(int(i), f"0{n}b") for i in picks]


def generate_dataset(distribution: str, n: int, m: int, rng: np.random.Generator, peak: float = 0.99) -> Dataset:
    """Real, normalized data drawn per the named distribution.

    * ``two-pattern-0.3-0.7``: amplitudes sqrt(0.3), sqrt(0.7) on two random patterns.
    * ``uniform-random``: i.i.d. U(0, 1) amplitudes, then normalized.
    * ``adversarial-max``: one amplitude fixed at ``peak``, the others
      U(0, 1) scaled to carry the remaining ``1 - peak^2`` of the mass.
    """
    if distribution == TWO_PATTERN:
        if n < 1 or m != 2:
            raise ValidationError("two-pattern data needs M = 2 and n >= 1")
        patterns = _random_patterns(rng, n, 2)
        return Dataset.from_pairs(zip([math.sqrt(0.3), math.sqrt(0.7)], patterns), n)
    patterns = _random_patterns(rng, n, m)
    if distribution == UNIFORM:
        amps = rng.uniform(0.0, 1.0, size=m)
        while not np.any(amps):
            amps = rng.uniform(0.0, 1.0, size=m)
        amps = amps / np.linalg.norm(amps)
    elif distribution == ADVERSARIAL:
        amps = np.empty(m)
        where = int(rng.integers(m))
        rest = rng.uniform(0.0, 1.0, size=m - 1)
        if m > 1 and np.any(rest):
            rest = rest / np.linalg.norm(rest) * math.sqrt(max(0.0, 1 - peak**2))
        amps[where] = peak if m > 1 else 1.0
        amps[np.arange(m) != where] = rest
        amps = amps / np.linalg.norm(amps)
    else:
        raise ValidationError(f"unknown distribution {distribution!r}")
    return Dataset.from_pairs(zip(amps, patterns), n)


def _run_point(config: SweepConfig, index: int, n: int, m: int) -> SweepRow:
    rng = point_rng(config.seed, index)
    data = generate_dataset(config.distribution, n, m, rng, config.peak)
    result = encode(config.encoder, data, preprocess=config.preprocess)
    if result.deterministic:
        exact = sampled = 1.0
    else:
        exact = exact_postselect_probability(result)
        shot_seed = int(rng.integers(2**63 - 1))
        sampled = sampled_postselect_probability(result, config.shots, shot_seed)
    sigma = binomial_sigma(exact, config.shots)
    flagged = abs(sampled - exact) > 5 * sigma + 1e-12
    if flagged:
        log.warning(
            "%s n=%d M=%d: sampled %.6g deviates from exact %.6g by more than 5 sigma",
            config.encoder, n, m, sampled, exact,
        )
    return SweepRow(
        encoder=config.encoder,
        preprocess=config.preprocess,
        n=n,
        M=m,
        exact_probability=exact,
        sampled_probability=sampled,
        expected_repetitions=expected_repetitions(exact),
        gate_count=result.gate_count,
        qubit_count=result.qubit_count,
        flagged=flagged,
    )


def run_sweep(config: SweepConfig) -> list[SweepRow]:
    """One row per sweep point, in ``config.points()`` order."""
    points = config.points()
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            futures = [pool.submit(_run_point, config, i, n, m) for i, (n, m) in enumerate(points)]
            return [f.result() for f in futures]
    return [_run_point(config, i, n, m) for i, (n, m) in enumerate(points)]


def rows_to_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.csv_fields())
    return buf.getvalue()


def powers_of_two(lo: int, hi: int) -> list[int]:
    """``[lo, 2*lo, ..., <= hi]`` for a power-of-two ``lo``."""
    out, m = [], lo
    while m <= hi:
        out.append(m)
        m *= 2
    return out
