"""Dense statevector storage and gate application.

Basis convention: registers are laid out in the order they are listed and
each register is written most-significant-bit first, so the ket ``|01;00>``
over layout ``(u:2, m:2)`` is index ``0b0100``.  Qubit ``q`` (global index,
counted from the left of the ket) is bit ``total_qubits - 1 - q`` of the
basis index, which is also axis ``q`` of ``amplitudes.reshape([2] * N)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import LayoutError, NonUnitaryError, ZeroProbabilityError

MAX_QUBITS = 24
UNITARY_TOL = 1e-10
NORM_TOL = 1e-12
ZERO_PROBABILITY = 1e-15

Controls = Sequence[tuple[int, int]]


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered named qubit registers."""

    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        regs = tuple((str(name), int(width)) for name, width in self.registers)
        object.__setattr__(self, "registers", regs)
        names = [name for name, _ in regs]
        if not regs:
            raise LayoutError("layout needs at least one register")
        if len(set(names)) != len(names):
            raise LayoutError(f"register names must be unique, got {names}")
        for name, width in regs:
            if width < 1:
                raise LayoutError(f"register {name!r} has width {width} < 1")

    @classmethod
    def of(cls, *registers: tuple[str, int]) -> "RegisterLayout":
        return cls(tuple(registers))

    @property
    def total_qubits(self) -> int:
        return sum(width for _, width in self.registers)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.registers)

    def width(self, name: str) -> int:
        for reg, width in self.registers:
            if reg == name:
                return width
        raise LayoutError(f"unknown register {name!r}; layout has {self.names}")

    def offset(self, name: str) -> int:
        """Global index of the first (most significant) qubit of ``name``."""
        start = 0
        for reg, width in self.registers:
            if reg == name:
                return start
            start += width
        raise LayoutError(f"unknown register {name!r}; layout has {self.names}")

    def qubits(self, name: str) -> list[int]:
        start = self.offset(name)
        return list(range(start, start + self.width(name)))

    def qubit(self, name: str, j: int) -> int:
        width = self.width(name)
        if not 0 <= j < width:
            raise LayoutError(f"register {name!r} has no qubit {j}")
        return self.offset(name) + j

    def extend(self, *registers: tuple[str, int]) -> "RegisterLayout":
        return RegisterLayout(self.registers + tuple(registers))

    def __str__(self) -> str:
        return "(" + ", ".join(f"{n}:{w}" for n, w in self.registers) + ")"


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over a :class:`RegisterLayout`.

    Treated as an immutable value: every operation returns a new instance and
    the amplitude array is flagged read-only.
    """

    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        n = self.layout.total_qubits
        if n > MAX_QUBITS:
            raise LayoutError(f"{n} qubits exceeds the dense cap of {MAX_QUBITS}")
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != 1 << n:
            raise LayoutError(
                f"expected {1 << n} amplitudes for layout {self.layout}, got {amps.shape[0]}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("state contains NaN or Inf amplitudes")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_qubits(self) -> int:
        return self.layout.total_qubits

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def amplitude(self, ket: str) -> complex:
        """Amplitude of a ket written like ``"01;00"`` (separators optional)."""
        return complex(self.amplitudes[_ket_index(ket, self.num_qubits)])

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape([2] * self.num_qubits)

    def __repr__(self) -> str:
        return f"StateVector(layout={self.layout}, norm={self.norm():.12g})"


def _ket_index(ket: str, num_qubits: int) -> int:
    bits = "".join(ch for ch in ket if ch not in "; ,|>")
    if len(bits) != num_qubits or set(bits) - {"0", "1"}:
        raise LayoutError(f"ket {ket!r} is not a {num_qubits}-bit basis label")
    return int(bits, 2)


def new_state(layout: RegisterLayout, basis_index: int | str = 0) -> StateVector:
    """Computational basis state ``|basis_index>``; strings are read as kets."""
    n = layout.total_qubits
    if n > MAX_QUBITS:
        raise LayoutError(f"{n} qubits exceeds the dense cap of {MAX_QUBITS}")
    if isinstance(basis_index, str):
        basis_index = _ket_index(basis_index, n)
    if not 0 <= basis_index < (1 << n):
        raise LayoutError(f"basis index {basis_index} out of range for layout {layout}")
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[basis_index] = 1.0
    return StateVector(layout, amps)


def check_unitary(matrix, tol: float = UNITARY_TOL) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.complex128)
    if m.shape != (2, 2):
        raise NonUnitaryError(f"expected a 2x2 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonUnitaryError("matrix has non-finite entries")
    err = np.max(np.abs(m.conj().T @ m - np.eye(2)))
    if err > tol:
        raise NonUnitaryError(f"matrix is not unitary (max |U^dag U - I| = {err:.3g})")
    return m


def _check_indices(num_qubits: int, target: int, controls: Controls) -> None:
    if not 0 <= target < num_qubits:
        raise LayoutError(f"target qubit {target} out of range [0, {num_qubits})")
    seen = {target}
    for q, polarity in controls:
        if not 0 <= q < num_qubits:
            raise LayoutError(f"control qubit {q} out of range [0, {num_qubits})")
        if q in seen:
            raise LayoutError(f"qubit {q} used twice in one gate (target {target})")
        if polarity not in (0, 1):
            raise LayoutError(f"control polarity must be 0 or 1, got {polarity!r}")
        seen.add(q)


def apply_matrix(
    amplitudes: np.ndarray, num_qubits: int, matrix: np.ndarray, target: int, controls: Controls = ()
) -> np.ndarray:
    """Apply a (multi-)controlled 2x2 matrix to a raw amplitude array.

    Works on unnormalized vectors and returns a new array. Amplitudes of basis
    states that fail the control condition are copied untouched.
    """
    psi = np.array(amplitudes, dtype=np.complex128).reshape([2] * num_qubits)
    index: list = [slice(None)] * num_qubits
    for q, polarity in controls:
        index[q] = polarity
    sub = psi[tuple(index)]
    axis = target - sum(1 for q, _ in controls if q < target)
    view = np.moveaxis(sub, axis, 0)
    a0 = view[0].copy()
    a1 = view[1].copy()
    view[0] = matrix[0, 0] * a0 + matrix[0, 1] * a1
    view[1] = matrix[1, 0] * a0 + matrix[1, 1] * a1
    return psi.reshape(-1)


def apply_unitary(
    state: StateVector, matrix, target: int, quantum_controls: Controls = ()
) -> StateVector:
    """Apply ``matrix`` to ``target`` iff every ``(qubit, polarity)`` control matches."""
    m = check_unitary(matrix)
    controls = [(int(q), int(p)) for q, p in quantum_controls]
    _check_indices(state.num_qubits, target, controls)
    out = apply_matrix(state.amplitudes, state.num_qubits, m, target, controls)
    return StateVector(state.layout, out)


HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)


def apply_plus_layer(state: StateVector, register: str) -> StateVector:
    """Hadamard on every qubit of ``register``."""
    out = state.amplitudes
    for q in state.layout.qubits(register):
        out = apply_matrix(out, state.num_qubits, HADAMARD, q)
    return StateVector(state.layout, out)


@dataclass(frozen=True)
class MeasurementOutcome:
    bitstring: str
    count: int


def marginal_probabilities(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Distribution over the listed qubits, indexed MSB-first in list order."""
    n = state.num_qubits
    for q in qubits:
        if not 0 <= q < n:
            raise LayoutError(f"qubit {q} out of range [0, {n})")
    if len(set(qubits)) != len(qubits):
        raise LayoutError(f"repeated qubit in {list(qubits)}")
    probs = state.probabilities().reshape([2] * n)
    others = tuple(q for q in range(n) if q not in qubits)
    marg = probs.sum(axis=others) if others else probs
    # axes left over are the measured ones in ascending order; reorder to list order
    ascending = sorted(qubits)
    marg = np.transpose(marg, [ascending.index(q) for q in qubits])
    return marg.reshape(-1)


def measure_shots(
    state: StateVector, qubits: Sequence[int], shots: int, seed: int = 0
) -> list[MeasurementOutcome]:
    """Sample ``shots`` computational-basis measurements of ``qubits``.

    Only outcomes that occurred are returned, sorted by bitstring.
    """
    qubits = list(qubits)
    if not qubits:
        raise LayoutError("measure_shots needs at least one qubit")
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    probs = marginal_probabilities(state, qubits)
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, probs)
    k = len(qubits)
    return [
        MeasurementOutcome(format(i, f"0{k}b"), int(c)) for i, c in enumerate(counts) if c > 0
    ]


def outcome_probability(state: StateVector, qubit: int, outcome: int) -> float:
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
    return float(marginal_probabilities(state, [qubit])[outcome])


def project_postselect(state: StateVector, qubit: int, outcome: int) -> tuple[StateVector, float]:
    """Project ``qubit`` onto ``outcome`` and renormalize.

    Returns the post-measurement state and the probability of the outcome
    before projection.
    """
    p = outcome_probability(state, qubit, outcome)
    if p < ZERO_PROBABILITY:
        raise ZeroProbabilityError(
            f"outcome {outcome} on qubit {qubit} has probability {p:.3g} (< {ZERO_PROBABILITY})"
        )
    psi = np.array(state.amplitudes).reshape([2] * state.num_qubits)
    index: list = [slice(None)] * state.num_qubits
    index[qubit] = 1 - outcome
    psi[tuple(index)] = 0.0
    return StateVector(state.layout, psi.reshape(-1) / np.sqrt(p)), p


def fidelity(a: StateVector, b: StateVector) -> float:
    """Phase-insensitive overlap ``|<a|b>|^2``."""
    if a.layout != b.layout:
        raise LayoutError(f"layout mismatch: {a.layout} vs {b.layout}")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def register_density(state: StateVector, registers: Iterable[str]) -> np.ndarray:
    """Reduced density matrix of ``registers`` (kept in layout order)."""
    keep = set(registers)
    kept = [q for name in state.layout.names if name in keep for q in state.layout.qubits(name)]
    rest = [q for q in range(state.num_qubits) if q not in kept]
    psi = np.transpose(state.tensor(), kept + rest).reshape(1 << len(kept), -1)
    return psi @ psi.conj().T


def register_fidelity(state: StateVector, target: StateVector) -> float:
    """``<t|rho|t>`` where ``rho`` is the reduced state on ``target``'s registers.

    The registers of ``target`` must appear in ``state`` with equal widths.
    """
    for name, width in target.layout.registers:
        if state.layout.width(name) != width:
            raise LayoutError(f"register {name!r} width differs")
    order = [n for n in state.layout.names if n in target.layout.names]
    if tuple(order) != target.layout.names:
        raise LayoutError("target registers must keep the state's register order")
    rho = register_density(state, target.layout.names)
    t = target.amplitudes
    return float(np.real(np.vdot(t, rho @ t)))


def factor_out(state: StateVector, keep: Sequence[str], tol: float = 1e-10) -> StateVector:
    """Pure state of the ``keep`` registers when the others sit in a basis state.

    Raises :class:`LayoutError` when the discarded registers are not in a
    single computational basis state (i.e. the state does not factor).
    """
    kept = [q for name in state.layout.names if name in keep for q in state.layout.qubits(name)]
    rest = [q for q in range(state.num_qubits) if q not in kept]
    layout = RegisterLayout(tuple(r for r in state.layout.registers if r[0] in keep))
    if not rest:
        return state
    psi = np.transpose(state.tensor(), rest + kept).reshape(1 << len(rest), 1 << len(kept))
    weights = np.sum(np.abs(psi) ** 2, axis=1)
    best = int(np.argmax(weights))
    if weights.sum() - weights[best] > tol:
        raise LayoutError(
            f"registers outside {list(keep)} are not in a basis state "
            f"(leaked weight {weights.sum() - weights[best]:.3g})"
        )
    return StateVector(layout, psi[best])
