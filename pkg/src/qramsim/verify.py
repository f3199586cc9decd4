"""Invariant checks run by ``qramsim verify``."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterator

import numpy as np

from .analysis import exact_postselect_probability, point_rng, predicted_postselect_probability
from .circuit import ANCILLA_REGISTER, Circuit, Gate, decompose_circuit, simulate
from .dataset import Dataset
from .encoders import (
    A_PQM,
    ENCODERS,
    EncodingResult,
    a_pqm_encode,
    encode,
    ff_qram_encode,
    ffp_qram_encode,
    preprocess_max_scale,
)
from .errors import LayoutError
from .statevector import RegisterLayout, StateVector, factor_out, fidelity, marginal_probabilities


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def random_dataset(rng: np.random.Generator, n: int, m: int | None = None, complex_: bool = False) -> Dataset:
    """Normalized data on ``m`` random distinct ``n``-bit patterns (signed reals or complex)."""
    if m is None:
        m = int(rng.integers(1, 2**n + 1))
    picks = rng.choice(2**n, size=m, replace=False)
    amps = rng.normal(size=m) + (1j * rng.normal(size=m) if complex_ else 0)
    amps = amps / np.linalg.norm(amps)
    return Dataset.from_pairs(zip(amps, (format(int(i), f"0{n}b") for i in picks)), n)


def circuit_agreement(result: EncodingResult, decompose: bool = False) -> tuple[float, float]:
    """Fidelity between simulated circuit and ``final_state``, and the
    probability that all ancillae are back in ``|0>`` (1.0 without ancillae)."""
    if result.initial_state is None:
        raise LayoutError(f"{result.encoder} circuit on {result.circuit.num_qubits} qubits is too wide to simulate")
    circuit = decompose_circuit(result.circuit) if decompose else result.circuit
    sim = simulate(circuit, result.initial_state)
    anc_zero = 1.0
    if circuit.ancilla_count:
        anc = sim.layout.qubits(ANCILLA_REGISTER)
        anc_zero = float(marginal_probabilities(sim, anc)[0])
    try:
        if sim.layout != result.final_state.layout:
            sim = factor_out(sim, result.final_state.layout.names)
    except LayoutError:
        return 0.0, anc_zero
    return fidelity(sim, result.final_state), anc_zero


def processing_mass(state) -> float:
    """Total weight of terms with ``u2 = 1`` (the branch still being loaded)."""
    return float(marginal_probabilities(state, [state.layout.qubit("u", 1)])[1])


def _with_fault(result: EncodingResult) -> EncodingResult:
    flag = "R" if result.register_of_interest == "R" else "u"
    layout = result.circuit.layout
    q = layout.qubit(flag, layout.width(flag) - 1)
    circuit = replace(result.circuit, gates=result.circuit.gates + (Gate.x(q, tag="injected fault"),))
    return replace(result, circuit=circuit)


def _encoder_results(encoder: str, rng: np.random.Generator, count: int) -> Iterator[EncodingResult]:
    for _ in range(count):
        n = int(rng.integers(1, 4))
        data = random_dataset(rng, n, complex_=encoder == A_PQM)
        yield encode(encoder, data)


def check_oracle_equivalence(seed: int, count: int = 10, inject_fault: bool = False) -> CheckResult:
    rng = point_rng(seed, 1)
    worst, worst_anc, runs = 1.0, 1.0, 0
    for encoder in ENCODERS:
        for result in _encoder_results(encoder, rng, count):
            if inject_fault:
                result = _with_fault(result)
            for decompose in (False, True):
                f, anc = circuit_agreement(result, decompose)
                worst, worst_anc, runs = min(worst, f), min(worst_anc, anc), runs + 1
    ok = worst >= 1 - 1e-10 and worst_anc >= 1 - 1e-12
    return CheckResult(
        "oracle equivalence (n <= 3, all encoders, plain and decomposed)",
        ok,
        f"{runs} circuits, min fidelity {worst:.15f}, min P(ancillae=0) {worst_anc:.15f}",
    )


def check_uniform_address_law(seed: int, count: int = 20, n_max: int = 8) -> CheckResult:
    rng = point_rng(seed, 2)
    worst = 0.0
    for n in range(2, n_max + 1):
        for _ in range(count):
            result = ff_qram_encode(random_dataset(rng, n))
            worst = max(worst, abs(exact_postselect_probability(result) - 2.0**-n))
    return CheckResult(
        "FF-QRAM from |+>^n has P(R=1) = 2^-n",
        worst <= 1e-12,
        f"n = 2..{n_max}, {count} datasets each, max error {worst:.3g}",
    )


def check_formula_agreement(seed: int, count: int = 20) -> CheckResult:
    rng = point_rng(seed, 3)
    worst = 0.0
    for _ in range(count):
        n = int(rng.integers(1, 6))
        data = random_dataset(rng, n)
        alpha = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        alpha /= np.linalg.norm(alpha)
        initial = StateVector(RegisterLayout.of(("B", n), ("R", 1)), np.kron(alpha, [1.0, 0.0]))
        result = ff_qram_encode(data, initial)
        worst = max(worst, abs(exact_postselect_probability(result) - predicted_postselect_probability(alpha, data)))
    return CheckResult(
        "FF-QRAM P(R=1) equals sum |alpha_k x_k|^2 for arbitrary initial address states",
        worst <= 1e-12,
        f"{count} datasets, max error {worst:.3g}",
    )


def check_preprocessing_law(seed: int, count: int = 20) -> CheckResult:
    rng = point_rng(seed, 4)
    worst = 0.0
    for _ in range(count):
        n = int(rng.integers(1, 7))
        data = random_dataset(rng, n)
        scaled, c = preprocess_max_scale(data)
        p = exact_postselect_probability(ffp_qram_encode(scaled))
        worst = max(worst, abs(p - 1.0 / (c * c * data.M)))
    return CheckResult(
        "FFP-QRAM on max-scaled data has P(R=1) = 1/(c^2 M)",
        worst <= 1e-12,
        f"{count} datasets, max error {worst:.3g}",
    )


def check_gamma_mass(seed: int, count: int = 10) -> CheckResult:
    rng = point_rng(seed, 5)
    worst_mass = worst_amp = 0.0
    for _ in range(count):
        n = int(rng.integers(1, 4))
        data = random_dataset(rng, n, complex_=True)
        result = a_pqm_encode(data)
        state = result.initial_state
        amps = data.amplitudes
        gamma = 1.0
        for k in range(data.M):
            start = result.circuit.marks[k - 1] if k else 0
            step = Circuit(result.circuit.layout, result.circuit.gates[start : result.circuit.marks[k]])
            state = simulate(step, state)
            gamma -= abs(amps[k]) ** 2
            worst_mass = max(worst_mass, abs(processing_mass(state) - max(gamma, 0.0)))
            for s in range(k + 1):
                ket = "00" + data.records[s].pattern
                worst_amp = max(worst_amp, abs(state.amplitude(ket) - amps[s]))
    return CheckResult(
        "A-PQM processing mass equals gamma and stored amplitudes are exact after every record",
        worst_mass <= 1e-12 and worst_amp <= 1e-12,
        f"{count} datasets, max mass error {worst_mass:.3g}, max amplitude error {worst_amp:.3g}",
    )


def run_checks(seed: int = 0, inject_fault: bool = False) -> list[CheckResult]:
    checks: list[Callable[[], CheckResult]] = [
        lambda: check_oracle_equivalence(seed, inject_fault=inject_fault),
        lambda: check_uniform_address_law(seed),
        lambda: check_formula_agreement(seed),
        lambda: check_preprocessing_law(seed),
        lambda: check_gamma_mass(seed),
    ]
    return [check() for check in checks]
