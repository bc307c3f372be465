"""Pure-state simulator: state vectors, gates, and projective measurement.

Conventions (fixed once, used everywhere):

* Little-endian indexing: qubit k is bit k of the amplitude index, so
  ``|q1 q0>`` maps to index ``q0 + 2*q1`` and a ket written ``|xy>``
  (x = first qubit, y = second qubit) maps to index ``x + 2*y``.
* Bell states follow the source convention
  ``psi+- = (|00> +- |11>)/sqrt(2)``, ``phi+- = (|01> +- |10>)/sqrt(2)``.
* ``iY`` denotes the real matrix [[0, 1], [-1, 0]].
* States differing only by a global phase are considered equal;
  use :func:`states_equal` in tests.

The default qubit cap is 24 (double precision leaves ample headroom
there; see NORM_TOL / ALGEBRA_TOL).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .errors import CapacityError

MAX_QUBITS = 24

# 1e-9 for norms/probabilities, 1e-12 for exact algebraic identities.
NORM_TOL = 1e-9
ALGEBRA_TOL = 1e-12

_SQRT2_INV = 1.0 / math.sqrt(2.0)


class PauliOp(Enum):
    I = "I"
    X = "X"
    IY = "iY"
    Z = "Z"

    @property
    def matrix(self) -> np.ndarray:
        return _PAULI_MATRICES[self]


_PAULI_MATRICES = {
    PauliOp.I: np.eye(2, dtype=complex),
    PauliOp.X: np.array([[0, 1], [1, 0]], dtype=complex),
    PauliOp.IY: np.array([[0, 1], [-1, 0]], dtype=complex),
    PauliOp.Z: np.array([[1, 0], [0, -1]], dtype=complex),
}

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV


class BellKind(Enum):
    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"

    @property
    def amplitudes(self) -> np.ndarray:
        """4-vector over (first, second) in little-endian order."""
        v = np.zeros(4, dtype=complex)
        if self in (BellKind.PSI_PLUS, BellKind.PSI_MINUS):
            v[0] = _SQRT2_INV                       # |00>
            v[3] = _SQRT2_INV if self is BellKind.PSI_PLUS else -_SQRT2_INV  # |11>
        else:
            v[2] = _SQRT2_INV                       # |01>: first=0, second=1
            v[1] = _SQRT2_INV if self is BellKind.PHI_PLUS else -_SQRT2_INV  # |10>
        return v

    @property
    def letter(self) -> str:
        return "psi" if self in (BellKind.PSI_PLUS, BellKind.PSI_MINUS) else "phi"

    @property
    def sign(self) -> int:
        return 1 if self in (BellKind.PSI_PLUS, BellKind.PHI_PLUS) else -1


class MeasBasis(Enum):
    COMPUTATIONAL = "computational"
    DIAGONAL = "diagonal"
    BELL = "bell"


@dataclass
class StateVector:
    """Complex amplitudes over an n-qubit register."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        expected = 1 << self.num_qubits
        if self.amplitudes.shape != (expected,):
            raise ValueError(
                f"amplitude vector has length {self.amplitudes.shape}, expected {expected}"
            )

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))


def new_register(n: int) -> StateVector:
    """|0>^(x)n; n = 0 gives the scalar register (single amplitude 1)."""
    if n < 0:
        raise ValueError("qubit count must be non-negative")
    if n > MAX_QUBITS:
        raise CapacityError(f"requested {n} qubits, cap is {MAX_QUBITS}")
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = 1.0
    return StateVector(n, amps)


def ket(bits: str) -> StateVector:
    """Computational basis state from a ket label, e.g. ket("01").

    The leftmost character is the first qubit (qubit 0).
    """
    n = len(bits)
    sv = new_register(n)
    index = 0
    for pos, ch in enumerate(bits):
        if ch == "1":
            index |= 1 << pos
        elif ch != "0":
            raise ValueError(f"invalid ket label {bits!r}")
    sv.amplitudes[0] = 0.0
    sv.amplitudes[index] = 1.0
    return sv


def bell_state(kind: BellKind) -> StateVector:
    return StateVector(2, kind.amplitudes.copy())


def apply_single(state: StateVector, op, target: int) -> StateVector:
    """Apply a 2x2 unitary (PauliOp or matrix) to one qubit; returns a new state."""
    if not 0 <= target < state.num_qubits:
        raise IndexError(f"qubit {target} out of range for {state.num_qubits}-qubit state")
    m = op.matrix if isinstance(op, PauliOp) else np.asarray(op, dtype=complex)
    out = state.amplitudes.copy()
    kernels.apply_1q(out, m[0, 0], m[0, 1], m[1, 0], m[1, 1], target)
    return StateVector(state.num_qubits, out)


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    if control == target:
        raise ValueError("control and target must differ")
    for q in (control, target):
        if not 0 <= q < state.num_qubits:
            raise IndexError(f"qubit {q} out of range")
    out = state.amplitudes.copy()
    kernels.apply_cnot(out, control, target)
    return StateVector(state.num_qubits, out)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """Hermitian inner product <a|b>."""
    if a.num_qubits != b.num_qubits:
        raise ValueError("states have different qubit counts")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def states_equal(a: StateVector, b: StateVector, tol: float = NORM_TOL) -> bool:
    """Equality up to a global phase."""
    if a.num_qubits != b.num_qubits:
        return False
    return abs(abs(inner_product(a, b)) - 1.0) < tol


def _measure_one_computational(amps: np.ndarray, target: int, rng) -> int:
    p1 = kernels.prob_one(amps, target)
    outcome = 1 if rng.random() < p1 else 0
    norm = math.sqrt(p1 if outcome == 1 else max(1.0 - p1, 0.0))
    kernels.collapse(amps, target, outcome, norm)
    return outcome


def measure(state: StateVector, targets, basis: MeasBasis, rng):
    """Projective measurement; returns (outcome label, collapsed state).

    Outcome labels: "0"/"1" (computational), "+"/"-" (diagonal),
    BellKind (Bell basis, exactly two targets in (first, second) order).
    """
    targets = list(targets)
    if basis is MeasBasis.BELL:
        if len(targets) != 2:
            raise ValueError("Bell measurement requires exactly 2 targets")
    elif len(targets) != 1:
        raise ValueError(f"{basis.value} measurement requires exactly 1 target")
    for q in targets:
        if not 0 <= q < state.num_qubits:
            raise IndexError(f"qubit {q} out of range")

    amps = state.amplitudes.copy()
    if basis is MeasBasis.COMPUTATIONAL:
        outcome = _measure_one_computational(amps, targets[0], rng)
        return str(outcome), StateVector(state.num_qubits, amps)

    if basis is MeasBasis.DIAGONAL:
        h = HADAMARD
        kernels.apply_1q(amps, h[0, 0], h[0, 1], h[1, 0], h[1, 1], targets[0])
        outcome = _measure_one_computational(amps, targets[0], rng)
        kernels.apply_1q(amps, h[0, 0], h[0, 1], h[1, 0], h[1, 1], targets[0])
        return ("-" if outcome else "+"), StateVector(state.num_qubits, amps)

    # Bell basis: rotate (first, second) into the computational frame with
    # CNOT(first -> second) then H(first); first qubit carries the sign bit,
    # second qubit the psi/phi letter bit.
    first, second = targets
    if first == second:
        raise ValueError("Bell measurement targets must differ")
    h = HADAMARD
    kernels.apply_cnot(amps, first, second)
    kernels.apply_1q(amps, h[0, 0], h[0, 1], h[1, 0], h[1, 1], first)
    sign_bit = _measure_one_computational(amps, first, rng)
    letter_bit = _measure_one_computational(amps, second, rng)
    kernels.apply_1q(amps, h[0, 0], h[0, 1], h[1, 0], h[1, 1], first)
    kernels.apply_cnot(amps, first, second)
    kind = _BELL_FROM_BITS[(letter_bit, sign_bit)]
    return kind, StateVector(state.num_qubits, amps)


_BELL_FROM_BITS = {
    (0, 0): BellKind.PSI_PLUS,
    (0, 1): BellKind.PSI_MINUS,
    (1, 0): BellKind.PHI_PLUS,
    (1, 1): BellKind.PHI_MINUS,
}


def outcome_probabilities(state: StateVector, targets, basis: MeasBasis) -> dict:
    """Born-rule probabilities of each outcome without collapsing."""
    targets = list(targets)
    probs = {}
    if basis is MeasBasis.BELL:
        for kind in BellKind:
            probs[kind] = _bell_probability(state, targets[0], targets[1], kind)
    elif basis is MeasBasis.COMPUTATIONAL:
        p1 = kernels.prob_one(state.amplitudes.copy(), targets[0])
        probs["0"], probs["1"] = 1.0 - p1, p1
    else:
        amps = state.amplitudes.copy()
        h = HADAMARD
        kernels.apply_1q(amps, h[0, 0], h[0, 1], h[1, 0], h[1, 1], targets[0])
        p1 = kernels.prob_one(amps, targets[0])
        probs["+"], probs["-"] = 1.0 - p1, p1
    return probs


def _bell_probability(state: StateVector, first: int, second: int, kind: BellKind) -> float:
    amps = state.amplitudes.copy()
    h = HADAMARD
    kernels.apply_cnot(amps, first, second)
    kernels.apply_1q(amps, h[0, 0], h[0, 1], h[1, 0], h[1, 1], first)
    letter_bit = 0 if kind.letter == "psi" else 1
    sign_bit = 0 if kind.sign == 1 else 1
    n = state.num_qubits
    idx = np.arange(1 << n)
    mask = (((idx >> first) & 1) == sign_bit) & (((idx >> second) & 1) == letter_bit)
    return float(np.sum(np.abs(amps[mask]) ** 2))


def party_rng(seed: int, party_index: int) -> np.random.Generator:
    """Independent, documented PCG64 stream for one party of a session."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(party_index,))
    return np.random.Generator(np.random.PCG64(ss))
