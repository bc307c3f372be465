"""Session register: many qubits, factored into entangled clusters.

Semantically the register is one joint state over all live qubits. Since
protocol sessions entangle qubits only in small groups, the joint state
always factorizes, and each factor ("cluster") is stored as its own
amplitude vector. Gates that span clusters merge them; measurement
factors the measured qubits back out. The per-cluster qubit cap bounds
the entanglement width, not the total number of qubits in a session.

Qubit handles are opaque integers. Within a cluster, position p maps to
bit p of the amplitude index (same little-endian rule as qsim).
"""
from __future__ import annotations

import math

import numpy as np

from . import kernels
from .errors import CapacityError, ImpossibleOutcomeError
from .qsim import (
    BellKind,
    HADAMARD,
    MAX_QUBITS,
    MeasBasis,
    PauliOp,
    StateVector,
)


class _Cluster:
    __slots__ = ("amps", "qubits")

    def __init__(self, amps: np.ndarray, qubits: list):
        self.amps = amps
        self.qubits = qubits


class Register:
    def __init__(self, cap: int = MAX_QUBITS):
        self.cap = cap
        self._clusters: dict[int, _Cluster] = {}
        self._next_handle = 0

    # -- allocation ---------------------------------------------------------

    def alloc(self, amplitudes=None) -> int:
        """One fresh qubit, |0> by default (or a given 2-vector)."""
        if amplitudes is None:
            amps = np.array([1.0, 0.0], dtype=complex)
        else:
            amps = np.asarray(amplitudes, dtype=complex).copy()
            if amps.shape != (2,):
                raise ValueError("single-qubit amplitudes must have length 2")
        h = self._next_handle
        self._next_handle += 1
        self._clusters[h] = _Cluster(amps, [h])
        return h

    def alloc_group(self, state: StateVector) -> list[int]:
        """Fresh qubits initialized jointly to `state`; returns their handles."""
        n = state.num_qubits
        if n > self.cap:
            raise CapacityError(f"group of {n} qubits exceeds cap {self.cap}")
        handles = list(range(self._next_handle, self._next_handle + n))
        self._next_handle += n
        cluster = _Cluster(state.amplitudes.copy(), list(handles))
        for h in handles:
            self._clusters[h] = cluster
        return handles

    @property
    def num_qubits(self) -> int:
        return len(self._clusters)

    # -- internals ----------------------------------------------------------

    def _pos(self, h: int):
        try:
            c = self._clusters[h]
        except KeyError:
            raise IndexError(f"unknown qubit handle {h}") from None
        return c, c.qubits.index(h)

    def _merge(self, a: _Cluster, b: _Cluster) -> _Cluster:
        if a is b:
            return a
        if len(a.qubits) + len(b.qubits) > self.cap:
            raise CapacityError(
                f"merging clusters of {len(a.qubits)} and {len(b.qubits)} qubits "
                f"exceeds cap {self.cap}"
            )
        # kron puts the second factor in the low bits: keep a's qubits low.
        merged = _Cluster(np.kron(b.amps, a.amps), a.qubits + b.qubits)
        for h in merged.qubits:
            self._clusters[h] = merged
        return merged

    def _extract(self, cluster: _Cluster, pos: int, outcome: int, prob: float):
        """Collapse + factor out the qubit at `pos`; renormalizes the remainder."""
        low = 1 << pos
        view = cluster.amps.reshape(-1, 2, low)
        sub = view[:, outcome, :].ravel().copy()
        sub /= math.sqrt(prob)
        removed = cluster.qubits.pop(pos)
        cluster.amps = sub
        if not cluster.qubits:
            pass  # scalar factor; dropped
        return removed

    def _measure_comp_at(self, cluster: _Cluster, pos: int, rng) -> int:
        p1 = kernels.prob_one(cluster.amps, pos)
        outcome = 1 if rng.random() < p1 else 0
        prob = p1 if outcome else max(1.0 - p1, 0.0)
        if prob <= 0.0:
            raise ImpossibleOutcomeError("sampled a zero-probability branch")
        self._extract(cluster, pos, outcome, prob)
        return outcome

    # -- gates --------------------------------------------------------------

    def apply_single(self, handle: int, op) -> None:
        c, pos = self._pos(handle)
        m = op.matrix if isinstance(op, PauliOp) else np.asarray(op, dtype=complex)
        kernels.apply_1q(c.amps, m[0, 0], m[0, 1], m[1, 0], m[1, 1], pos)

    def apply_cnot(self, control: int, target: int) -> None:
        if control == target:
            raise ValueError("control and target must differ")
        cc, _ = self._pos(control)
        ct, _ = self._pos(target)
        merged = self._merge(cc, ct)
        kernels.apply_cnot(
            merged.amps, merged.qubits.index(control), merged.qubits.index(target)
        )

    # -- measurement --------------------------------------------------------

    def measure(self, handles, basis: MeasBasis, rng):
        """Measure and factor out; returns the outcome label.

        Measured qubits stay allocated, left in their post-measurement
        (product) state.
        """
        handles = list(handles)
        if basis is MeasBasis.BELL:
            if len(handles) != 2:
                raise ValueError("Bell measurement requires exactly 2 targets")
            return self._measure_bell(handles[0], handles[1], rng)
        if len(handles) != 1:
            raise ValueError(f"{basis.value} measurement requires exactly 1 target")
        h = handles[0]
        c, pos = self._pos(h)
        if basis is MeasBasis.DIAGONAL:
            m = HADAMARD
            kernels.apply_1q(c.amps, m[0, 0], m[0, 1], m[1, 0], m[1, 1], pos)
        outcome = self._measure_comp_at(c, pos, rng)
        if basis is MeasBasis.DIAGONAL:
            post = HADAMARD[:, outcome].copy()
            label = "-" if outcome else "+"
        else:
            post = np.zeros(2, dtype=complex)
            post[outcome] = 1.0
            label = str(outcome)
        self._clusters[h] = _Cluster(post, [h])
        return label

    def _measure_bell(self, first: int, second: int, rng) -> BellKind:
        if first == second:
            raise ValueError("Bell measurement targets must differ")
        cf, _ = self._pos(first)
        cs, _ = self._pos(second)
        c = self._merge(cf, cs)
        p1, p2 = c.qubits.index(first), c.qubits.index(second)
        m = HADAMARD
        kernels.apply_cnot(c.amps, p1, p2)
        kernels.apply_1q(c.amps, m[0, 0], m[0, 1], m[1, 0], m[1, 1], p1)
        sign_bit = self._measure_comp_at(c, p1, rng)
        letter_bit = self._measure_comp_at(c, c.qubits.index(second), rng)
        kind = _BELL_FROM_BITS[(letter_bit, sign_bit)]
        pair = _Cluster(kind.amplitudes.copy(), [first, second])
        self._clusters[first] = pair
        self._clusters[second] = pair
        return kind

    # -- inspection (tests and decoders) ------------------------------------

    def joint_state(self, handles) -> StateVector:
        """Joint state of `handles` (in the given qubit order).

        The handles must form complete clusters (no partial traces here);
        otherwise a ValueError is raised.
        """
        handles = list(handles)
        clusters = []
        for h in handles:
            c, _ = self._pos(h)
            if c not in clusters:
                clusters.append(c)
        covered = [q for c in clusters for q in c.qubits]
        if sorted(covered) != sorted(handles):
            raise ValueError("handles do not cover whole clusters")
        amps = np.array([1.0], dtype=complex)
        order: list[int] = []
        for c in clusters:
            amps = np.kron(c.amps, amps)
            order.extend(c.qubits)
        # Reorder qubits to match the requested handle order.
        n = len(order)
        state = amps.reshape([2] * n)  # axis i (from the right) = order[i]
        perm = [n - 1 - order.index(h) for h in reversed(handles)]
        state = np.transpose(state, axes=perm)
        return StateVector(n, state.ravel().copy())


_BELL_FROM_BITS = {
    (0, 0): BellKind.PSI_PLUS,
    (0, 1): BellKind.PSI_MINUS,
    (1, 0): BellKind.PHI_PLUS,
    (1, 1): BellKind.PHI_MINUS,
}
