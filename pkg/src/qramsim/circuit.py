"""Gate-list circuit representation, Toffoli-ladder lowering and QASM output."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import LayoutError, UnexpressibleGateError
from .statevector import (
    HADAMARD,
    RegisterLayout,
    StateVector,
    apply_matrix,
    check_unitary,
    new_state,
)

GATE_KINDS = ("x", "h", "ry", "u")
ANCILLA_REGISTER = "anc"

_PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)


@dataclass(frozen=True)
class Gate:
    """One single-qubit operation with optional quantum controls.

    ``kind`` is ``"x"``, ``"h"``, ``"ry"`` (uses ``theta``) or ``"u"`` (uses
    ``matrix``, a 2x2 tuple).  ``params`` optionally carries the
    ``(theta, phi, lambda)`` U3 angles of a ``"u"`` payload so that emission
    prints exactly the angles it was built from.  ``tag`` is a free-form
    provenance note such as ``"flip p3[2]"``.
    """

    kind: str
    target: int
    controls: tuple[tuple[int, int], ...] = ()
    theta: Optional[float] = None
    matrix: Optional[tuple[tuple[complex, complex], tuple[complex, complex]]] = None
    params: Optional[tuple[float, float, float]] = None
    tag: str = ""

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        controls = tuple((int(q), int(p)) for q, p in self.controls)
        object.__setattr__(self, "controls", controls)
        qubits = [q for q, _ in controls]
        if len(set(qubits)) != len(qubits) or self.target in qubits:
            raise LayoutError(f"gate controls {qubits} overlap each other or target {self.target}")
        if any(p not in (0, 1) for _, p in controls):
            raise LayoutError(f"control polarity must be 0 or 1 in {controls}")
        if self.kind == "ry" and self.theta is None:
            raise ValueError("ry gate needs theta")
        if self.kind == "u":
            if self.matrix is None:
                raise ValueError("u gate needs a matrix")
            m = check_unitary(self.matrix)
            object.__setattr__(
                self, "matrix", ((complex(m[0, 0]), complex(m[0, 1])), (complex(m[1, 0]), complex(m[1, 1])))
            )

    @classmethod
    def x(cls, target: int, controls: Iterable[tuple[int, int]] = (), tag: str = "") -> "Gate":
        return cls("x", target, tuple(controls), tag=tag)

    @classmethod
    def ry(cls, theta: float, target: int, controls: Iterable[tuple[int, int]] = (), tag: str = "") -> "Gate":
        return cls("ry", target, tuple(controls), theta=float(theta), tag=tag)

    @classmethod
    def u(cls, matrix, target: int, controls: Iterable[tuple[int, int]] = (), params=None, tag: str = "") -> "Gate":
        m = np.asarray(matrix, dtype=np.complex128)
        mt = ((complex(m[0, 0]), complex(m[0, 1])), (complex(m[1, 0]), complex(m[1, 1])))
        return cls("u", target, tuple(controls), matrix=mt, params=params, tag=tag)

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.controls) + (self.target,)

    def unitary(self) -> np.ndarray:
        if self.kind == "x":
            return _PAULI_X
        if self.kind == "h":
            return HADAMARD
        if self.kind == "ry":
            c, s = math.cos(self.theta / 2), math.sin(self.theta / 2)
            return np.array([[c, -s], [s, c]], dtype=np.complex128)
        return np.array(self.matrix, dtype=np.complex128)


@dataclass(frozen=True)
class Circuit:
    """Ordered gates over a layout plus ``ancilla_count`` trailing ancillae.

    ``marks`` holds the gate count after each completed loader iteration, so
    ``gates[:marks[k]]`` is the circuit after record ``k``.
    """

    layout: RegisterLayout
    gates: tuple[Gate, ...] = ()
    ancilla_count: int = 0
    marks: tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "marks", tuple(self.marks))
        width = self.num_qubits
        for i, g in enumerate(self.gates):
            if max(g.qubits) >= width or min(g.qubits) < 0:
                raise LayoutError(f"gate {i} ({g.kind} on {g.qubits}) exceeds {width} qubits")

    @property
    def num_qubits(self) -> int:
        return self.layout.total_qubits + self.ancilla_count

    @property
    def full_layout(self) -> RegisterLayout:
        if self.ancilla_count:
            return self.layout.extend((ANCILLA_REGISTER, self.ancilla_count))
        return self.layout

    def __len__(self) -> int:
        return len(self.gates)

    def prefix(self, iterations: int) -> "Circuit":
        """The circuit truncated after ``iterations`` loader iterations."""
        if iterations == 0:
            return replace(self, gates=(), marks=())
        end = self.marks[iterations - 1]
        return replace(self, gates=self.gates[:end], marks=self.marks[:iterations])


def simulate(circuit: Circuit, initial: StateVector | None = None) -> StateVector:
    """Run ``circuit`` gate by gate on a dense statevector.

    ``initial`` is over ``circuit.layout``; ancillae (if any) start in ``|0>``.
    The result is over ``circuit.full_layout``.
    """
    if initial is None:
        initial = new_state(circuit.layout, 0)
    if initial.layout != circuit.layout:
        raise LayoutError(f"initial layout {initial.layout} != circuit layout {circuit.layout}")
    amps = initial.amplitudes
    if circuit.ancilla_count:
        anc = np.zeros(1 << circuit.ancilla_count, dtype=np.complex128)
        anc[0] = 1.0
        amps = np.kron(amps, anc)
    n = circuit.num_qubits
    for g in circuit.gates:
        amps = apply_matrix(amps, n, g.unitary(), g.target, g.controls)
    return StateVector(circuit.full_layout, amps)


# ---------------------------------------------------------------- decomposition


def decompose_mcx(gate: Gate, ancillae: Sequence[int]) -> list[Gate]:
    """Lower a gate with k >= 2 controls to a Toffoli ladder.

    Uses k-1 ancillae (which must start and end in ``|0>``): k-1 Toffolis
    compute the AND of the controls, the payload is applied with a single
    control on the last ancilla, then the ladder is uncomputed.  A plain
    Toffoli (X with exactly two controls) is already primitive and is
    returned unchanged.
    """
    k = len(gate.controls)
    if k < 2:
        raise ValueError(f"decompose_mcx needs >= 2 controls, gate has {k}")
    if gate.kind == "x" and k == 2:
        return [gate]
    if len(ancillae) < k - 1:
        raise LayoutError(f"{k} controls need {k - 1} ancillae, got {len(ancillae)}")
    anc = list(ancillae[: k - 1])
    c = list(gate.controls)
    ladder = [Gate.x(anc[0], [c[0], c[1]], tag="anc compute")]
    for i in range(2, k):
        ladder.append(Gate.x(anc[i - 1], [c[i], (anc[i - 2], 1)], tag="anc compute"))
    payload = replace(gate, controls=((anc[-1], 1),))
    undo = [replace(g, tag="anc uncompute") for g in reversed(ladder)]
    return ladder + [payload] + undo


def decompose_circuit(circuit: Circuit) -> Circuit:
    """Lower every gate with more than two controls (or a controlled non-X
    gate with two controls) onto a dedicated ancilla register."""
    if circuit.ancilla_count:
        raise ValueError("circuit is already decomposed")
    need = 0
    for g in circuit.gates:
        k = len(g.controls)
        if k >= 2 and not (g.kind == "x" and k == 2):
            need = max(need, k - 1)
    base = circuit.layout.total_qubits
    ancillae = list(range(base, base + need))
    gates: list[Gate] = []
    marks: list[int] = []
    mark_iter = iter(circuit.marks)
    next_mark = next(mark_iter, None)
    for i, g in enumerate(circuit.gates):
        if len(g.controls) >= 2:
            gates.extend(decompose_mcx(g, ancillae))
        else:
            gates.append(g)
        while next_mark is not None and next_mark == i + 1:
            marks.append(len(gates))
            next_mark = next(mark_iter, None)
    return Circuit(circuit.layout, tuple(gates), need, tuple(marks))


# ---------------------------------------------------------------- QASM output


def matrix_to_u3(matrix) -> tuple[float, float, float, float]:
    """Return ``(theta, phi, lam, alpha)`` with ``U = e^{i alpha} U3(theta, phi, lam)``."""
    m = np.asarray(matrix, dtype=np.complex128)
    c, s = abs(m[0, 0]), abs(m[1, 0])
    theta = 2.0 * math.atan2(s, c)
    eps = 1e-12
    if c > eps:
        alpha = float(np.angle(m[0, 0]))
    else:
        alpha = 0.0
    if s > eps:
        phi = float(np.angle(m[1, 0])) - alpha
        lam = float(np.angle(-m[0, 1])) - alpha
    else:
        lam = 0.0
        phi = float(np.angle(m[1, 1])) - alpha
    return theta, _wrap(phi), _wrap(lam), _wrap(alpha)


def _wrap(angle: float) -> float:
    a = math.remainder(angle, 2 * math.pi)
    return 0.0 if abs(a) < 1e-15 else a


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _qreg_names(layout: RegisterLayout) -> dict[str, str]:
    # QASM 2.0 identifiers must start with a lowercase letter
    names: dict[str, str] = {}
    used: set[str] = set()
    for reg in layout.names:
        base = reg.lower()
        if not base[:1].isalpha():
            base = "r" + base
        base = "".join(ch if ch.isalnum() or ch == "_" else "_" for ch in base)
        name, i = base, 1
        while name in used:
            name, i = f"{base}{i}", i + 1
        used.add(name)
        names[reg] = name
    return names


def _gate_lines(g: Gate, ref) -> list[str]:
    k = len(g.controls)
    t = ref(g.target)
    ctl = [ref(q) for q, _ in g.controls]
    if g.kind == "x" and k <= 2:
        op = {0: "x", 1: "cx", 2: "ccx"}[k]
        body = [f"{op} {', '.join(ctl + [t])};"]
    elif g.kind == "h" and k == 0:
        body = [f"h {t};"]
    elif g.kind == "ry" and k == 0:
        body = [f"ry({_fmt(g.theta)}) {t};"]
    elif g.kind == "ry" and k == 1:
        body = [f"cu3({_fmt(g.theta)},0,0) {ctl[0]}, {t};"]
    elif g.kind == "u" and k <= 1:
        if g.params is not None:
            theta, phi, lam = g.params
            alpha = 0.0
        else:
            theta, phi, lam, alpha = matrix_to_u3(g.matrix)
        args = f"({_fmt(theta)},{_fmt(phi)},{_fmt(lam)})"
        if k == 0:
            body = [f"u3{args} {t};"]
        else:
            body = [f"cu3{args} {ctl[0]}, {t};"]
            if alpha:
                body.append(f"u1({_fmt(alpha)}) {ctl[0]};")
    else:
        raise UnexpressibleGateError(
            f"{g.kind} gate with {k} controls has no QASM 2.0 form; emit with decompose=True"
        )
    flips = [f"x {ref(q)};" for q, p in g.controls if p == 0]
    return flips + body + flips


def emit_qasm(circuit: Circuit, decompose: bool = False, prep: Sequence[Gate] = ()) -> str:
    """OpenQASM 2.0 text for ``circuit``.

    Negative controls are sandwiched between X gates.  With ``decompose`` the
    multi-controlled gates are first lowered onto a trailing ``anc`` register.
    ``prep`` gates (state preparation from ``|0...0>``) are written first so
    the file is self-contained.
    """
    if decompose and not circuit.ancilla_count:
        circuit = decompose_circuit(circuit)
    layout = circuit.full_layout
    names = _qreg_names(layout)
    lookup: list[str] = []
    for reg, width in layout.registers:
        lookup.extend(f"{names[reg]}[{j}]" for j in range(width))
    lines = ['OPENQASM 2.0;', 'include "qelib1.inc";']
    lines += [f"qreg {names[reg]}[{width}];" for reg, width in layout.registers]
    for g in (*prep, *circuit.gates):
        lines.extend(_gate_lines(g, lookup.__getitem__))
    return "\n".join(lines) + "\n"
