"""Dense statevector engine for small n-qubit pure states.

Basis index ``b`` holds qubit ``i`` in state ``(b >> (n - 1 - i)) & 1``, so
qubit 0 is the leftmost tensor factor. Global phase is never tracked; compare
states with :func:`overlap`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import pi, sqrt

import numpy as np

MAX_QUBITS = 24
NORM_TOL = 1e-12


class CapacityError(ValueError):
    """Requested register size is outside 1..MAX_QUBITS."""


class PauliAxis(str, enum.Enum):
    X = "X"
    Y = "Y"
    Z = "Z"


_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_H = np.array([[1, 1], [1, -1]], dtype=complex) / sqrt(2)
_SDG = np.array([[1, 0], [0, -1j]], dtype=complex)
# Rotations taking the +1/-1 eigenvectors of each axis to |0>/|1>.
_TO_Z = {
    PauliAxis.X: _H,
    PauliAxis.Y: _H @ _SDG,
    PauliAxis.Z: np.eye(2, dtype=complex),
}


@dataclass(frozen=True)
class PauliString:
    """An n-slot word over I, X, Y, Z."""

    slots: tuple[str, ...]

    def __post_init__(self):
        bad = [s for s in self.slots if s not in _PAULI]
        if bad:
            raise ValueError(f"invalid Pauli slots {bad!r}")

    @classmethod
    def parse(cls, text: str) -> PauliString:
        return cls(tuple(text.upper()))

    def __len__(self) -> int:
        return len(self.slots)

    def __str__(self) -> str:
        return "".join(self.slots)

    def axes(self) -> list[PauliAxis | None]:
        return [None if s == "I" else PauliAxis(s) for s in self.slots]

    def matrix(self) -> np.ndarray:
        """Full 2^n x 2^n Kronecker product. Only sensible for small n."""
        out = np.ones((1, 1), dtype=complex)
        for s in self.slots:
            out = np.kron(out, _PAULI[s])
        return out


@dataclass(frozen=True)
class PhaseGate:
    """diag(1, exp(i*pi/2**level)); level 0 is Pauli Z."""

    level: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("phase gate level must be >= 0")

    @property
    def phase(self) -> complex:
        if self.level == 0:
            return -1.0 + 0j
        return complex(np.exp(1j * pi / 2**self.level))

    def matrix(self) -> np.ndarray:
        return np.diag([1.0 + 0j, self.phase])


class Statevector:
    __slots__ = ("n_qubits", "amps")

    def __init__(self, n_qubits: int, amps: np.ndarray):
        _check_size(n_qubits)
        amps = np.asarray(amps, dtype=complex)
        if amps.shape != (2**n_qubits,):
            raise ValueError(f"expected {2**n_qubits} amplitudes, got shape {amps.shape}")
        self.n_qubits = n_qubits
        self.amps = amps

    @classmethod
    def basis(cls, n_qubits: int, index: int = 0) -> Statevector:
        _check_size(n_qubits)
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def product(cls, qubit_states) -> Statevector:
        """Tensor product of single-qubit amplitude pairs, qubit 0 first."""
        amps = np.ones(1, dtype=complex)
        for q in qubit_states:
            amps = np.kron(amps, np.asarray(q, dtype=complex))
        return cls(int(np.log2(len(amps))), amps)

    def copy(self) -> Statevector:
        return Statevector(self.n_qubits, self.amps.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def __repr__(self) -> str:
        return f"Statevector(n_qubits={self.n_qubits})"


def _check_size(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise CapacityError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n}")


def _check_qubit(state: Statevector, qubit: int) -> None:
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {state.n_qubits}-qubit state")


def _split(state: Statevector, qubit: int) -> np.ndarray:
    # view with the target qubit as the middle axis
    return state.amps.reshape(2**qubit, 2, 2 ** (state.n_qubits - qubit - 1))


def _apply_1q(amps_view: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    return np.einsum("ab,ibj->iaj", matrix, amps_view)


def make_ghz(n: int, sign: str = "minus") -> Statevector:
    """(|0..0> - |1..1>)/sqrt2 for sign="minus", (|0..0> + |1..1>)/sqrt2 for "plus"."""
    _check_size(n)
    if sign not in ("minus", "plus"):
        raise ValueError("sign must be 'minus' or 'plus'")
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = 1 / sqrt(2)
    amps[-1] = (-1 if sign == "minus" else 1) / sqrt(2)
    return Statevector(n, amps)


def apply_unitary(state: Statevector, qubit: int, matrix: np.ndarray) -> Statevector:
    _check_qubit(state, qubit)
    out = _apply_1q(_split(state, qubit), np.asarray(matrix, dtype=complex))
    return Statevector(state.n_qubits, out.reshape(-1))


def apply_phase_gate(state: Statevector, qubit: int, gate: PhaseGate | int) -> Statevector:
    if isinstance(gate, int):
        gate = PhaseGate(gate)
    _check_qubit(state, qubit)
    out = state.copy()
    _split(out, qubit)[:, 1, :] *= gate.phase
    return out


def apply_pauli(state: Statevector, op: PauliString) -> Statevector:
    """op|state> without collapsing anything."""
    if len(op) != state.n_qubits:
        raise ValueError(f"Pauli string of length {len(op)} on {state.n_qubits} qubits")
    out = state
    for q, s in enumerate(op.slots):
        if s != "I":
            out = apply_unitary(out, q, _PAULI[s])
    return out if out is not state else state.copy()


def expectation(state: Statevector, op: PauliString) -> float:
    value = np.vdot(state.amps, apply_pauli(state, op).amps)
    if abs(value.imag) > 1e-9:
        raise ArithmeticError(f"non-real Pauli expectation {value}")
    return float(value.real)


def overlap(a: Statevector, b: Statevector) -> float:
    """|<a|b>|, insensitive to global phase."""
    return float(abs(np.vdot(a.amps, b.amps)))


def measure_pauli(state: Statevector, qubit: int, axis: PauliAxis | str,
                  rng: np.random.Generator) -> tuple[int, Statevector]:
    """Projective measurement of one qubit in a Pauli eigenbasis.

    The qubit is rotated so the axis eigenbasis lines up with Z, measured
    there, and the collapsed state is rotated back. Returns the +1/-1
    eigenvalue and the normalised post-measurement state.
    """
    axis = PauliAxis(axis)
    _check_qubit(state, qubit)
    u = _TO_Z[axis]
    view = _apply_1q(_split(state, qubit), u)
    p_plus = float(np.sum(np.abs(view[:, 0, :]) ** 2))
    p_plus = min(max(p_plus, 0.0), 1.0)
    bit = 0 if rng.random() < p_plus else 1
    view[:, 1 - bit, :] = 0
    view /= sqrt(p_plus if bit == 0 else 1.0 - p_plus)
    back = _apply_1q(view, u.conj().T)
    return (1 if bit == 0 else -1), Statevector(state.n_qubits, back.reshape(-1))


def measure_all(state: Statevector, axes, rng: np.random.Generator) -> tuple[list[int], Statevector]:
    """Measure qubit i in axes[i], one after another from qubit 0."""
    if len(axes) != state.n_qubits:
        raise ValueError("need one axis per qubit")
    outcomes = []
    for q, axis in enumerate(axes):
        o, state = measure_pauli(state, q, axis, rng)
        outcomes.append(o)
    return outcomes, state


def outcome_distribution(state: Statevector, axes) -> dict[tuple[int, ...], float]:
    """Exact Born probabilities of every +1/-1 outcome tuple for a joint
    local Pauli measurement (one axis per qubit)."""
    if len(axes) != state.n_qubits:
        raise ValueError("need one axis per qubit")
    rotated = state
    for q, axis in enumerate(axes):
        rotated = apply_unitary(rotated, q, _TO_Z[PauliAxis(axis)])
    probs = np.abs(rotated.amps) ** 2
    n = state.n_qubits
    dist = {}
    for b, p in enumerate(probs):
        key = tuple(1 - 2 * ((b >> (n - 1 - q)) & 1) for q in range(n))
        dist[key] = float(p)
    return dist


def ghz_discriminate(state: Statevector, rng: np.random.Generator) -> tuple[str, list[int]]:
    """Tell |Psi_n> from |Psi_n^perp> by measuring every qubit in X.

    Product -1 means "psi" and +1 means "psi_perp". The individual outcomes
    are returned too since they are what the parties announce.
    """
    outcomes, _ = measure_all(state, [PauliAxis.X] * state.n_qubits, rng)
    return ("psi" if np.prod(outcomes) == -1 else "psi_perp"), outcomes
