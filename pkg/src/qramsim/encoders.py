"""Data loaders: FF-QRAM, PQM, FFP-QRAM and A-PQM.

Every loader returns an :class:`EncodingResult` holding two things computed
along independent paths:

* ``circuit``: the gate list, to be run by :func:`qramsim.circuit.simulate`;
* ``final_state``: the output computed directly from the algorithm's basis
  bookkeeping (amplitude pairs for FF-QRAM, a sparse term table for PQM and
  A-PQM) without touching the gate list.

Tests and ``qramsim verify`` check that the two agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from .circuit import Circuit, Gate
from .dataset import Dataset
from .errors import AmplitudeDomainError, DatasetError, LayoutError, NormalizationError, ValidationError
from .gates import (
    CLAMP_TOL,
    GAMMA_FLOOR,
    LoadGateSpec,
    classical_flip_layer,
    classical_quantum_gate,
    s_r_matrix,
    u3_matrix,
    u3_params,
)
from .statevector import MAX_QUBITS, RegisterLayout, StateVector, apply_plus_layer, new_state, outcome_probability

FF_QRAM = "ff-qram"
FFP_QRAM = "ffp-qram"
PQM = "pqm"
A_PQM = "a-pqm"
ENCODERS = (FF_QRAM, FFP_QRAM, A_PQM, PQM)
DETERMINISTIC = "deterministic"


@dataclass(frozen=True)
class EncodingResult:
    encoder: str
    dataset: Dataset
    final_state: StateVector
    circuit: Circuit
    initial_state: Optional[StateVector]  # None when the circuit exceeds the dense cap
    postselect_probability: Union[float, str]
    register_of_interest: str
    scale: float = 1.0  # c from max-scaling; dataset amplitudes * scale = original data
    # gates that build initial_state from |0...0>; None for a caller-supplied state
    prep: Optional[tuple[Gate, ...]] = ()

    @property
    def deterministic(self) -> bool:
        return self.postselect_probability == DETERMINISTIC

    @property
    def gate_count(self) -> int:
        return len(self.circuit.gates)

    @property
    def qubit_count(self) -> int:
        return self.circuit.layout.total_qubits

    @property
    def data_register(self) -> str:
        """Register that holds ``sum x_k |p_k>`` once loading succeeds."""
        return "m" if self.encoder in (PQM, A_PQM) else "B"


# ---------------------------------------------------------------- helpers


def theta_for_amplitude(x: float, label: str = "") -> float:
    """Rotation angle ``2 arcsin(x)`` that writes ``x`` onto ``|1>``."""
    where = f" ({label})" if label else ""
    if not math.isfinite(x):
        raise AmplitudeDomainError(f"non-finite amplitude{where}")
    if abs(x) > 1.0 + CLAMP_TOL:
        raise AmplitudeDomainError(
            f"amplitude {x!r} has |x| > 1{where}; rescale with preprocess_max_scale first"
        )
    return 2.0 * math.asin(max(-1.0, min(1.0, x)))


def _real_amplitudes(data: Dataset, encoder: str) -> list[float]:
    out = []
    for k, rec in enumerate(data.records):
        if abs(rec.amplitude.imag) > 1e-12:
            raise AmplitudeDomainError(
                f"record {k} (pattern {rec.pattern}) has complex amplitude {rec.amplitude}; "
                f"{encoder} loads real amplitudes only, use a_pqm_encode"
            )
        out.append(rec.amplitude.real)
    return out


def target_state(data: Dataset, register: str = "m") -> StateVector:
    """``sum_k x_k |p_k>`` as a dense state over one ``n``-qubit register."""
    data.require_normalized("target_state")
    amps = np.zeros(2**data.n, dtype=np.complex128)
    for rec in data.records:
        amps[rec.index] = rec.amplitude
    return StateVector(RegisterLayout.of((register, data.n)), amps)


def ff_layout(n: int) -> RegisterLayout:
    return RegisterLayout.of(("B", n), ("R", 1))


def pqm_layout(n: int) -> RegisterLayout:
    return RegisterLayout.of(("p", n), ("u", 2), ("m", n))


def ffp_layout(n: int) -> RegisterLayout:
    return RegisterLayout.of(("p", n), ("u", 2), ("B", n), ("R", 1))


def a_pqm_layout(n: int) -> RegisterLayout:
    return RegisterLayout.of(("u", 2), ("m", n))


def plus_initial_state(n: int) -> StateVector:
    """``|+>^n |0>`` over ``(B:n, R:1)``."""
    return apply_plus_layer(new_state(ff_layout(n), 0), "B")


class _Terms:
    """Sparse basis expansion: one int array per register plus amplitudes.

    Used for the direct (gate-free) evolution of PQM and A-PQM, where only
    O(M) basis states are ever occupied.
    """

    def __init__(self, fields: dict[str, np.ndarray], amps: np.ndarray):
        self.fields = fields
        self.amps = amps

    @classmethod
    def basis(cls, **values: int) -> "_Terms":
        return cls({k: np.array([v], dtype=np.int64) for k, v in values.items()}, np.ones(1, dtype=np.complex128))

    def __getitem__(self, name: str) -> np.ndarray:
        return self.fields[name]

    def relabel(self, **updates: np.ndarray) -> "_Terms":
        """Basis permutation: replace some register values term by term."""
        fields = dict(self.fields)
        for k, v in updates.items():
            fields[k] = np.broadcast_to(np.asarray(v, dtype=np.int64), self.amps.shape).copy()
        return _Terms(fields, self.amps)

    def controlled(self, matrix: np.ndarray, control: str, target: str) -> "_Terms":
        """Apply ``matrix`` to single-bit register ``target`` where ``control`` is 1."""
        sel = self.fields[control] == 1
        others = [k for k in self.fields if k != target]
        keys = np.stack([self.fields[k][sel] for k in others], axis=1)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        pair = np.zeros((len(uniq), 2), dtype=np.complex128)
        np.add.at(pair, (inverse, self.fields[target][sel]), self.amps[sel])
        new = pair @ matrix.T
        fields = {}
        for k in self.fields:
            if k == target:
                col = np.concatenate([np.zeros(len(uniq), np.int64), np.ones(len(uniq), np.int64)])
            else:
                c = uniq[:, others.index(k)]
                col = np.concatenate([c, c])
            fields[k] = np.concatenate([self.fields[k][~sel], col])
        amps = np.concatenate([self.amps[~sel], new[:, 0], new[:, 1]])
        keep = amps != 0
        return _Terms({k: v[keep] for k, v in fields.items()}, amps[keep])

    def dense(self, layout: RegisterLayout, order: tuple[tuple[str, int], ...]) -> StateVector:
        index = np.zeros(self.amps.shape, dtype=np.int64)
        for name, width in order:
            index = (index << width) | self.fields[name]
        amps = np.zeros(1 << layout.total_qubits, dtype=np.complex128)
        np.add.at(amps, index, self.amps)
        return StateVector(layout, amps)


# ---------------------------------------------------------------- FF-QRAM


def _ff_gates(patterns, thetas, b_qubits, r_qubit, offset_marks=0):
    gates: list[Gate] = []
    marks: list[int] = []
    controls = [(q, 1) for q in b_qubits]
    for k, (pattern, theta) in enumerate(zip(patterns, thetas)):
        flip = classical_flip_layer(pattern, "flip-on-zero", b_qubits, label=f"p{k}")
        gates.extend(flip)
        gates.append(Gate.ry(theta, r_qubit, controls, tag=f"load x{k}"))
        gates.extend(Gate.x(g.target, tag=g.tag.replace("flip", "flop")) for g in flip)
        marks.append(offset_marks + len(gates))
    return gates, marks


def _ff_direct(amps: np.ndarray, n: int, indices, thetas) -> np.ndarray:
    # (B, R) pairs: the flip/rotate/flop sequence only rotates the p_k branch
    psi = np.array(amps, dtype=np.complex128).reshape(2**n, 2)
    for i, theta in zip(indices, thetas):
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        a0, a1 = psi[i]
        psi[i] = (c * a0 - s * a1, s * a0 + c * a1)
    return psi.reshape(-1)


def _check_ff_initial(initial: StateVector, n: int) -> None:
    if initial.layout != ff_layout(n):
        raise LayoutError(f"FF-QRAM initial state must be over {ff_layout(n)}, got {initial.layout}")
    r1 = outcome_probability(initial, n, 1)
    if r1 > 1e-24:
        raise LayoutError(f"FF-QRAM initial state must have R = |0> (P(R=1) = {r1:.3g})")


def ff_qram_encode(data: Dataset, initial: Optional[StateVector] = None) -> EncodingResult:
    """Flip-rotate-flop loading onto address register B and flag qubit R.

    ``initial`` defaults to ``|+>^n |0>``.  The result must be post-selected
    on ``R = 1``; its probability is read off the final state.
    """
    n = data.n
    prep = None
    if initial is None:
        initial = plus_initial_state(n)
        prep = tuple(Gate("h", q, tag="prep B") for q in ff_layout(n).qubits("B"))
    _check_ff_initial(initial, n)
    xs = _real_amplitudes(data, FF_QRAM)
    thetas = [theta_for_amplitude(x, f"record {k}, pattern {p}") for k, (x, p) in enumerate(zip(xs, data.patterns))]
    layout = ff_layout(n)
    gates, marks = _ff_gates(data.patterns, thetas, layout.qubits("B"), layout.qubit("R", 0))
    final = StateVector(layout, _ff_direct(initial.amplitudes, n, [r.index for r in data.records], thetas))
    return EncodingResult(
        encoder=FF_QRAM,
        dataset=data,
        final_state=final,
        circuit=Circuit(layout, tuple(gates), 0, tuple(marks)),
        initial_state=initial,
        postselect_probability=outcome_probability(final, n, 1),
        register_of_interest="R",
        prep=prep,
    )


# ---------------------------------------------------------------- PQM


def _check_patterns(patterns) -> tuple[list[str], int]:
    patterns = list(patterns)
    if not patterns:
        raise DatasetError("need at least one pattern")
    n = len(patterns[0])
    # Dataset validates width, alphabet, duplicates and M <= 2^n
    Dataset.from_pairs([(0.0, p) for p in patterns], n)
    return patterns, n


def _pqm_gates(patterns, p_q, u1, u2, m_q):
    n, M = len(patterns[0]), len(patterns)
    gates: list[Gate] = []
    marks: list[int] = []
    loaded = "0" * n
    for k, pattern in enumerate(patterns):
        gates += [Gate.x(p_q[j], tag=f"load p{k}[{j}]") for j in range(n) if pattern[j] != loaded[j]]
        loaded = pattern
        copy = [Gate.x(m_q[j], [(p_q[j], 1), (u2, 1)], tag=f"copy p{k}[{j}]") for j in range(n)]
        compare = []
        for j in range(n):
            compare += [Gate.x(m_q[j], [(p_q[j], 1)]), Gate.x(m_q[j])]
        mark_u1 = Gate.x(u1, [(q, 1) for q in m_q], tag="match")
        r = M - k
        split = Gate.u(
            s_r_matrix(r), u2, [(u1, 1)], params=u3_params(1 / math.sqrt(r), 1.0).qasm_order(), tag=f"S^{r}"
        )
        gates += copy + compare + [mark_u1, split, mark_u1] + compare[::-1] + copy
        marks.append(len(gates))
    return gates, marks


def _pqm_terms(patterns: list[str]) -> _Terms:
    """Direct evolution over registers ``p, u1, u2, m``."""
    n, M = len(patterns[0]), len(patterns)
    ones = (1 << n) - 1
    t = _Terms.basis(p=0, u1=0, u2=1, m=0)

    def copy(t):  # C^2X(p_j, u2 -> m_j)
        return t.relabel(m=t["m"] ^ np.where(t["u2"] == 1, t["p"], 0))

    def compare(t):  # m_j = 1 where m_j == p_j; self-inverse
        return t.relabel(m=~(t["m"] ^ t["p"]) & ones)

    def match(t):  # C^nX(m -> u1)
        return t.relabel(u1=t["u1"] ^ (t["m"] == ones))

    for k, pattern in enumerate(patterns):
        t = t.relabel(p=int(pattern, 2))
        t = match(compare(copy(t)))
        t = t.controlled(s_r_matrix(M - k), "u1", "u2")
        t = copy(compare(match(t)))
    return t


def _pqm_order(n: int):
    return (("p", n), ("u1", 1), ("u2", 1), ("m", n))


def pqm_store(patterns) -> EncodingResult:
    """Store distinct binary patterns as ``(1/sqrt(M)) sum |p_k>`` in register m."""
    if isinstance(patterns, Dataset):
        patterns = patterns.patterns
    patterns, n = _check_patterns(patterns)
    layout = pqm_layout(n)
    u1, u2 = layout.qubits("u")
    gates, marks = _pqm_gates(patterns, layout.qubits("p"), u1, u2, layout.qubits("m"))
    final = _pqm_terms(patterns).dense(layout, _pqm_order(n))
    initial = new_state(layout, "0" * n + "01" + "0" * n)
    return EncodingResult(
        encoder=PQM,
        dataset=Dataset.from_patterns(patterns),
        final_state=final,
        circuit=Circuit(layout, tuple(gates), 0, tuple(marks)),
        initial_state=initial,
        postselect_probability=DETERMINISTIC,
        register_of_interest="m",
        prep=(Gate.x(layout.qubit("u", 1), tag="prep u2"),),
    )


def pqm_memory_vector(patterns: list[str]) -> np.ndarray:
    """Memory-register amplitudes left by PQM (p and u factor out)."""
    n = len(patterns[0])
    t = _pqm_terms(patterns)
    outside = (t["p"] != int(patterns[-1], 2)) | (t["u1"] != 0) | (t["u2"] != 0)
    if np.any(np.abs(t.amps[outside]) > 1e-12):
        raise AssertionError("PQM left weight outside |p_last;00>")
    amps = np.zeros(2**n, dtype=np.complex128)
    np.add.at(amps, t["m"][~outside], t.amps[~outside])
    return amps


# ---------------------------------------------------------------- FFP-QRAM


def ffp_qram_encode(data: Dataset) -> EncodingResult:
    """PQM prepares the address superposition over exactly the stored
    patterns, then FF-QRAM loads the amplitudes.

    The circuit runs on ``(p:n, u:2, B:n, R:1)``.  Because p and u end in the
    fixed basis state ``|p_last;00>``, ``final_state`` keeps only ``(B, R)``.
    """
    n = data.n
    xs = _real_amplitudes(data, FFP_QRAM)
    thetas = [theta_for_amplitude(x, f"record {k}, pattern {p}") for k, (x, p) in enumerate(zip(xs, data.patterns))]
    layout = ffp_layout(n)
    u1, u2 = layout.qubits("u")
    b_q = layout.qubits("B")
    pqm_gates, _ = _pqm_gates(data.patterns, layout.qubits("p"), u1, u2, b_q)
    ff_gates, marks = _ff_gates(data.patterns, thetas, b_q, layout.qubit("R", 0), len(pqm_gates))
    circuit = Circuit(layout, tuple(pqm_gates + ff_gates), 0, tuple(marks))

    address = pqm_memory_vector(data.patterns)
    start = np.kron(address, np.array([1.0, 0.0]))
    final = StateVector(ff_layout(n), _ff_direct(start, n, [r.index for r in data.records], thetas))
    # at n = 11 the full register set (2n + 3 qubits) is too wide to simulate densely
    initial = None
    if layout.total_qubits <= MAX_QUBITS:
        initial = new_state(layout, "0" * n + "01" + "0" * n + "0")
    return EncodingResult(
        encoder=FFP_QRAM,
        dataset=data,
        final_state=final,
        circuit=circuit,
        initial_state=initial,
        postselect_probability=outcome_probability(final, n, 1),
        register_of_interest="R",
        prep=(Gate.x(u2, tag="prep u2"),),
    )


def preprocess_max_scale(data: Dataset) -> tuple[Dataset, float]:
    """Divide every amplitude by ``c = max |x_k|`` so the largest becomes 1."""
    c = max(abs(r.amplitude) for r in data.records)
    if c == 0:
        raise DatasetError("cannot rescale: every amplitude is zero")
    scaled = data.with_amplitudes([r.amplitude / c for r in data.records], normalized=False)
    return scaled, float(c)


# ---------------------------------------------------------------- A-PQM


def _a_pqm_loads(data: Dataset) -> list[Optional[LoadGateSpec]]:
    """Per-record load specs following gamma_k = gamma_{k-1} - |x_{k-1}|^2.

    ``None`` marks a zero amplitude met after the mass is exhausted (identity).
    """
    data.require_normalized(A_PQM)
    # remove the up-to-1e-9 normalization slack so gamma ends at ~0, not below
    norm = math.sqrt(data.norm_squared)
    specs: list[Optional[LoadGateSpec]] = []
    gamma = 1.0
    for k, rec in enumerate(data.records):
        x = rec.amplitude / norm
        label = f"record {k}, pattern {rec.pattern}"
        if gamma < GAMMA_FLOOR:
            if abs(x) ** 2 > CLAMP_TOL:
                raise NormalizationError(
                    f"remaining mass gamma = {gamma:.3g} is exhausted before {label}; "
                    "sum |x_k|^2 exceeds 1"
                )
            specs.append(None)
            continue
        specs.append(LoadGateSpec(x, gamma, label))
        gamma -= abs(x) ** 2
    return specs


def _a_pqm_gates(data: Dataset, specs, u1, u2, m_q):
    gates: list[Gate] = []
    marks: list[int] = []
    match_controls = [(q, 1) for q in m_q]
    for k, (rec, spec) in enumerate(zip(data.records, specs)):
        layer = [
            classical_quantum_gate(int(b), u2, m_q[j], tag=f"p{k}[{j}]") for j, b in enumerate(rec.pattern)
        ]
        match = Gate.x(u1, match_controls, tag="match")
        if spec is None:
            load = Gate.u(np.eye(2), u2, [(u1, 1)], params=(0.0, 0.0, 0.0), tag=f"U3 x{k}")
        else:
            params = u3_params(spec.x, spec.gamma, spec.label)
            load = Gate.u(u3_matrix(spec), u2, [(u1, 1)], params=params.qasm_order(), tag=f"U3 x{k}")
        gates += layer + [match, load, match] + layer[::-1]
        marks.append(len(gates))
    return gates, marks


def _a_pqm_terms(data: Dataset, specs, upto: Optional[int] = None) -> _Terms:
    """Direct evolution over registers ``u1, u2, m``."""
    ones = (1 << data.n) - 1
    t = _Terms.basis(u1=0, u2=1, m=0)
    for rec, spec in list(zip(data.records, specs))[:upto]:
        pk = rec.index
        flip0 = ~pk & ones  # X where the classical bit is 0, CX(u2) where it is 1

        def layer(t):
            return t.relabel(m=t["m"] ^ flip0 ^ np.where(t["u2"] == 1, pk, 0))

        def match(t):
            return t.relabel(u1=t["u1"] ^ (t["m"] == ones))

        t = match(layer(t))
        if spec is not None:
            t = t.controlled(u3_matrix(spec), "u1", "u2")
        t = layer(match(t))
    return t


def _a_pqm_order(n: int):
    return (("u1", 1), ("u2", 1), ("m", n))


def a_pqm_encode(data: Dataset) -> EncodingResult:
    """Deterministic loading of normalized complex data on ``(u:2, m:n)``."""
    specs = _a_pqm_loads(data)
    n = data.n
    layout = a_pqm_layout(n)
    u1, u2 = layout.qubits("u")
    gates, marks = _a_pqm_gates(data, specs, u1, u2, layout.qubits("m"))
    final = _a_pqm_terms(data, specs).dense(layout, _a_pqm_order(n))
    return EncodingResult(
        encoder=A_PQM,
        dataset=data,
        final_state=final,
        circuit=Circuit(layout, tuple(gates), 0, tuple(marks)),
        initial_state=new_state(layout, "01" + "0" * n),
        postselect_probability=DETERMINISTIC,
        register_of_interest="m",
        prep=(Gate.x(layout.qubit("u", 1), tag="prep u2"),),
    )


def a_pqm_intermediate(data: Dataset, iterations: int) -> StateVector:
    """Direct A-PQM state after the first ``iterations`` records."""
    specs = _a_pqm_loads(data)
    return _a_pqm_terms(data, specs, iterations).dense(a_pqm_layout(data.n), _a_pqm_order(data.n))


# ---------------------------------------------------------------- dispatch


def encode(encoder: str, data: Dataset, preprocess: bool = False, initial: Optional[StateVector] = None) -> EncodingResult:
    """Run a loader by name.

    ``preprocess`` applies max-scaling before the FF-QRAM family; the
    deterministic loaders take the data as is.
    """
    if encoder == A_PQM:
        return a_pqm_encode(data)
    if encoder == PQM:
        return pqm_store(data.patterns)
    if encoder not in (FF_QRAM, FFP_QRAM):
        raise ValidationError(f"unknown encoder {encoder!r}; choose from {ENCODERS}")
    scale = 1.0
    if preprocess:
        data, scale = preprocess_max_scale(data)
    if encoder == FF_QRAM:
        result = ff_qram_encode(data, initial)
    else:
        if initial is not None:
            raise ValidationError("ffp-qram prepares its own initial state")
        result = ffp_qram_encode(data)
    if scale != 1.0:
        result = replace(result, scale=scale)
    return result
