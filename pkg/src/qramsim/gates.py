"""Matrices and classical-control helpers used by the loaders.

``s_r_matrix`` is the binary-pattern splitting gate, ``u3_matrix`` its
complex-amplitude generalisation parameterised by the amplitude ``x`` and the
residual mass ``gamma`` of the branch still being processed.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .circuit import Gate
from .errors import AmplitudeDomainError, NormalizationError

GAMMA_FLOOR = 1e-12
CLAMP_TOL = 1e-12

FlipPolarity = Literal["flip-on-zero", "flip-on-one"]


@dataclass(frozen=True)
class U3Params:
    theta: float
    lam: float
    phi: float

    def matrix(self) -> np.ndarray:
        """U3(theta, phi, lambda) in the qelib1 convention."""
        c, s = math.cos(self.theta / 2), math.sin(self.theta / 2)
        return np.array(
            [
                [c, -cmath.exp(1j * self.lam) * s],
                [cmath.exp(1j * self.phi) * s, cmath.exp(1j * (self.lam + self.phi)) * c],
            ],
            dtype=np.complex128,
        )

    def qasm_order(self) -> tuple[float, float, float]:
        return (self.theta, self.phi, self.lam)


@dataclass(frozen=True)
class LoadGateSpec:
    """Amplitude ``x`` to split off a branch whose remaining mass is ``gamma``."""

    x: complex
    gamma: float
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "x", complex(self.x))
        object.__setattr__(self, "gamma", float(self.gamma))
        _check_load(self.x, self.gamma, self.label)

    @property
    def residual(self) -> float:
        """``gamma - |x|^2`` clamped to zero within round-off."""
        if self.x == 0:
            return self.gamma
        r = self.gamma - abs(self.x) ** 2
        return 0.0 if r < CLAMP_TOL else r


def _check_load(x: complex, gamma: float, label: str) -> None:
    where = f" ({label})" if label else ""
    if not math.isfinite(gamma) or gamma <= 0:
        raise NormalizationError(f"gamma must be > 0, got {gamma!r}{where}")
    if abs(x) ** 2 > gamma + CLAMP_TOL:
        raise AmplitudeDomainError(
            f"|x|^2 = {abs(x) ** 2:.15g} exceeds remaining mass gamma = {gamma:.15g}{where}"
        )


def s_r_matrix(r: int) -> np.ndarray:
    if int(r) != r or r < 1:
        raise ValueError(f"S^r needs a positive integer r, got {r!r}")
    a, b = math.sqrt((r - 1) / r), 1 / math.sqrt(r)
    return np.array([[a, b], [-b, a]], dtype=np.complex128)


def u3_params(x: complex, gamma: float, label: str = "") -> U3Params:
    """Angles that make ``U3(theta, phi, lam)`` equal ``u3_matrix(x, gamma)``.

    ``lam`` is the phase of ``-x`` (zero when ``x`` is zero) and ``phi = -lam``.
    """
    spec = LoadGateSpec(x, gamma, label)
    # same angle as 2 arccos(sqrt(residual / gamma)), but accurate for tiny |x|
    theta = 2.0 * math.atan2(abs(spec.x), math.sqrt(spec.residual))
    lam = 0.0 if spec.x == 0 else math.atan2(-spec.x.imag, -spec.x.real)
    return U3Params(theta=theta, lam=lam, phi=-lam)


def u3_matrix(spec: LoadGateSpec | complex, gamma: float | None = None) -> np.ndarray:
    """``[[sqrt((g-|x|^2)/g), x/sqrt(g)], [-conj(x)/sqrt(g), sqrt((g-|x|^2)/g)]]``.

    Accepts either a :class:`LoadGateSpec` or ``(x, gamma)``.
    """
    if not isinstance(spec, LoadGateSpec):
        spec = LoadGateSpec(spec, gamma)
    diag = math.sqrt(spec.residual / spec.gamma)
    if spec.x == 0:
        off = 0j
    elif spec.residual == 0.0:
        off = spec.x / abs(spec.x)  # |x|^2 == gamma up to round-off
    else:
        off = spec.x / math.sqrt(spec.gamma)
    return np.array([[diag, off], [-off.conjugate(), diag]], dtype=np.complex128)


def ry_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _bits(pattern: str) -> str:
    if not pattern or set(pattern) - {"0", "1"}:
        raise ValueError(f"pattern must be a nonempty bitstring, got {pattern!r}")
    return pattern


def classical_flip_layer(
    pattern: str,
    polarity: FlipPolarity,
    qubits: Sequence[int] | None = None,
    label: str = "p",
) -> list[Gate]:
    """X on ``qubits[j]`` wherever ``pattern[j]`` triggers the classical control.

    ``"flip-on-zero"`` flips where the bit is 0 (the flip/flop layer),
    ``"flip-on-one"`` where it is 1.  ``qubits`` defaults to ``0..n-1``.
    """
    bits = _bits(pattern)
    if polarity not in ("flip-on-zero", "flip-on-one"):
        raise ValueError(f"unknown polarity {polarity!r}")
    if qubits is None:
        qubits = range(len(bits))
    if len(qubits) != len(bits):
        raise ValueError(f"pattern has {len(bits)} bits but {len(qubits)} qubits were given")
    trigger = "0" if polarity == "flip-on-zero" else "1"
    return [
        Gate.x(q, tag=f"flip {label}[{j}]") for j, (b, q) in enumerate(zip(bits, qubits)) if b == trigger
    ]


def classical_quantum_gate(p: int, u2: int, m: int, tag: str = "") -> Gate:
    """X on ``m`` when the classical bit is 0, CX from ``u2`` to ``m`` when it is 1."""
    if p not in (0, 1):
        raise ValueError(f"classical bit must be 0 or 1, got {p!r}")
    if p == 0:
        return Gate.x(m, tag=tag)
    return Gate.x(m, [(u2, 1)], tag=tag)
