"""Attack strategies: outsider channel attacks and participant cheats.

Outsider attacks are applied by the session to the qubits of one
quantum transmission leg. Participant cheats change a party's behavior
inside a protocol run and are interpreted by the run functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .primitives import BB84_STATES, Permutation, bb84_amplitudes
from .qsim import MeasBasis
from .register import Register


class AttackKind(Enum):
    INTERCEPT_RESEND = "intercept-resend"
    ENTANGLE_MEASURE = "entangle-measure"
    CORRELATION_ELICITATION = "correlation-elicitation"
    X_FLIP_ALL = "x-flip-all"
    CHARLIE_FAKE_SEQUENCE = "charlie-fake-sequence"
    ALICE_KEY_CHANGE = "alice-key-change"
    ALICE_WRONG_PERMUTATION = "alice-wrong-permutation"
    BOB_PREMATURE_DECODE = "bob-premature-decode"


OUTSIDER_KINDS = {
    AttackKind.INTERCEPT_RESEND,
    AttackKind.ENTANGLE_MEASURE,
    AttackKind.CORRELATION_ELICITATION,
    AttackKind.X_FLIP_ALL,
}


@dataclass(frozen=True)
class AttackStrategy:
    """Immutable description of one attack; session-local state lives elsewhere.

    ``target_leg`` of None attacks every quantum transmission.
    """

    kind: AttackKind
    f: float = 1.0                      # attacked fraction (intercept-resend)
    beta: complex = 1.0                 # ancilla |1> amplitude (entangle-measure)
    basis_policy: str = "random"        # "random", "computational", or "diagonal"
    key_prime: str | None = None        # announced key K' (alice-key-change)
    pi_prime: Permutation | None = None  # announced permutation (wrong-permutation)
    target_leg: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.f <= 1.0:
            raise ValueError("attacked fraction f must lie in [0, 1]")
        if abs(self.beta) > 1.0 + 1e-12:
            raise ValueError("|beta| must not exceed 1")

    @property
    def alpha(self) -> float:
        return math.sqrt(max(0.0, 1.0 - abs(self.beta) ** 2))

    def applies_to(self, leg: str) -> bool:
        return self.target_leg is None or self.target_leg == leg


@dataclass
class AttackReport:
    eve_inferred_bits: str | None = None
    detected: bool = False
    leg_error_rate: float = 0.0
    per_qubit_success: float | None = None
    notes: dict = field(default_factory=dict)


# -- outsider channel operations --------------------------------------------

def intercept_resend(reg: Register, handles, f: float, rng, basis_policy: str = "random"):
    """Measure a fraction f of the leg's qubits in a random (or fixed) basis.

    The post-measurement state is exactly the freshly prepared resend
    state, so measuring in place models the attack. Returns Eve's notes
    as {handle: (basis, bit)}.
    """
    notes = {}
    for h in handles:
        if f < 1.0 and rng.random() >= f:
            continue
        if basis_policy == "computational":
            basis = MeasBasis.COMPUTATIONAL
        elif basis_policy == "diagonal":
            basis = MeasBasis.DIAGONAL
        else:
            basis = MeasBasis.COMPUTATIONAL if rng.random() < 0.5 else MeasBasis.DIAGONAL
        label = reg.measure([h], basis, rng)
        bit = 0 if label in ("0", "+") else 1
        notes[h] = (basis, bit)
    return notes


def entangle_measure(reg: Register, handles, beta: complex, rng):
    """Entangle a fresh ancilla (alpha|0> + beta|1>) with every leg qubit.

    The CNOT is driven by the ancilla onto the travel qubit: this leaves
    diagonal-basis decoys separable and flips computational-basis decoys
    with probability |beta|^2, for a total detection probability of
    |beta|^2 / 2 over the four equiprobable decoy states. Returns
    {travel handle: ancilla handle} for Eve's later measurements.
    """
    alpha = math.sqrt(max(0.0, 1.0 - abs(beta) ** 2))
    ancillae = {}
    for h in handles:
        anc = reg.alloc(np.array([alpha, beta], dtype=complex))
        reg.apply_cnot(anc, h)
        ancillae[h] = anc
    return ancillae


def correlation_elicitation(reg: Register, handles, rng, pairing=None):
    """CNOT both qubits of each guessed pair into a |0> ancilla and
    measure it, learning psi-vs-phi parity. Without position knowledge
    Eve pairs the leg's qubits at random. Returns [(h1, h2, parity)].
    """
    if pairing is None:
        order = [handles[int(i)] for i in rng.permutation(len(handles))]
        pairing = [(order[2 * i], order[2 * i + 1]) for i in range(len(order) // 2)]
    notes = []
    for h1, h2 in pairing:
        anc = reg.alloc()
        reg.apply_cnot(h1, anc)
        reg.apply_cnot(h2, anc)
        parity = int(reg.measure([anc], MeasBasis.COMPUTATIONAL, rng))
        notes.append((h1, h2, parity))
    return notes


def x_flip_all(reg: Register, handles):
    """Disturbance attack: X on every transmitted qubit of the leg."""
    from .qsim import PauliOp

    for h in handles:
        reg.apply_single(h, PauliOp.X)


def fake_bb84_sequence(reg: Register, length: int, rng):
    """Charlie's substitute sequence: fresh qubits in known random BB84 states.

    Returns (handles, records) with records as (basis, value).
    """
    handles, records = [], []
    for _ in range(length):
        basis, value = BB84_STATES[int(rng.integers(4))]
        handles.append(reg.alloc(bb84_amplitudes(basis, value)))
        records.append((basis, value))
    return handles, records


# -- participant-attack convenience runners ----------------------------------

def charlie_fake_sequence(protocol: str, n: int, msg: str, seed: int = 0, **kwargs) -> AttackReport:
    """Run CLZ/HYJ/P1 with Charlie's capture-and-substitute attack installed."""
    from . import protocols

    runner = {"clz": protocols.run_clz, "hyj": protocols.run_hyj, "p1": protocols.run_p1}
    if protocol not in runner:
        raise ValueError(f"fake-sequence attack applies to clz/hyj/p1, not {protocol!r}")
    strategy = AttackStrategy(AttackKind.CHARLIE_FAKE_SEQUENCE, target_leg="alice->bob")
    outcome = runner[protocol](n, msg, attack=strategy, seed=seed, **kwargs)
    return outcome.attack_report


def alice_cheats(protocol: str, n: int, msg: str, variant: AttackKind, seed: int = 0,
                 key: str | None = None, key_prime: str | None = None,
                 pi_prime: Permutation | None = None, **kwargs) -> AttackReport:
    """Run a protocol with a dishonest Alice (key change or wrong permutation)."""
    from . import protocols

    if variant is AttackKind.ALICE_KEY_CHANGE:
        if protocol != "hyj":
            raise ValueError("key change applies to hyj only")
        strategy = AttackStrategy(variant, key_prime=key_prime)
        outcome = protocols.run_hyj(n, msg, key=key, attack=strategy, seed=seed, **kwargs)
    elif variant is AttackKind.ALICE_WRONG_PERMUTATION:
        if protocol not in ("p1", "p2"):
            raise ValueError("wrong permutation applies to p1/p2 only")
        strategy = AttackStrategy(variant, pi_prime=pi_prime)
        runner = {"p1": protocols.run_p1, "p2": protocols.run_p2}[protocol]
        outcome = runner(n, msg, attack=strategy, seed=seed, **kwargs)
    else:
        raise ValueError(f"not a participant cheat of Alice: {variant}")
    return outcome.attack_report
