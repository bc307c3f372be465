"""Protocol building blocks: entangled-state preparation, message encoders,
particle permutation, and the two decoy-based eavesdrop checks.

Decoy subroutines:

* BB84 check: single-qubit decoys drawn uniformly from {|0>, |1>, |+>, |->},
  verified by measuring each decoy in its preparation basis.
* GV check: psi+ decoy pairs, verified by Bell-measuring each reunited pair
  once positions (and pairings) are disclosed. One decoy unit is one pair;
  both halves may live in one traveling sequence (whole-pair placement) or
  be split across two sequences (split placement).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .qsim import BellKind, MeasBasis, PauliOp, StateVector, bell_state
from .register import Register


class Role(Enum):
    MESSAGE = "message"
    DECOY = "decoy"
    REDUNDANT = "redundant"


@dataclass(frozen=True)
class SeqEntry:
    qubit: int
    role: Role
    partner: int | None = None
    origin: str = ""


class ParticleSequence:
    """Ordered qubit handles with role tags and entanglement partner links."""

    def __init__(self, entries=()):
        self.entries: list[SeqEntry] = list(entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def handles(self) -> list[int]:
        return [e.qubit for e in self.entries]

    def append(self, entry: SeqEntry) -> None:
        self.entries.append(entry)

    def only(self, role: Role) -> "ParticleSequence":
        return ParticleSequence(e for e in self.entries if e.role is role)

    def position_of(self, handle: int) -> int:
        for i, e in enumerate(self.entries):
            if e.qubit == handle:
                return i
        raise ValueError(f"handle {handle} not in sequence")

    def copy(self) -> "ParticleSequence":
        return ParticleSequence(self.entries)


@dataclass(frozen=True)
class Permutation:
    """Reordering with the convention output[i] = input[mapping[i]]."""

    mapping: tuple

    def __post_init__(self):
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise ValueError("mapping is not a bijection on [0, n)")

    def __len__(self):
        return len(self.mapping)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Permutation":
        return cls(tuple(int(i) for i in rng.permutation(n)))

    @classmethod
    def random_non_identity(cls, n: int, rng: np.random.Generator) -> "Permutation":
        if n < 2:
            raise ValueError("no non-identity permutation exists for n < 2")
        while True:
            p = cls.random(n, rng)
            if p.mapping != tuple(range(n)):
                return p

    def invert(self) -> "Permutation":
        inv = [0] * len(self.mapping)
        for i, j in enumerate(self.mapping):
            inv[j] = i
        return Permutation(tuple(inv))

    def apply_list(self, items):
        if len(items) != len(self.mapping):
            raise ValueError("permutation length does not match sequence length")
        return [items[j] for j in self.mapping]

    def is_identity(self) -> bool:
        return self.mapping == tuple(range(len(self.mapping)))


def apply_permutation(seq: ParticleSequence, p: Permutation) -> ParticleSequence:
    return ParticleSequence(p.apply_list(seq.entries))


@dataclass(frozen=True)
class GhzLikeSpec:
    """3-qubit channel (1/sqrt(2))(|psi1>_12 |a>_3 + sign |psi2>_12 |b>_3)."""

    psi1: BellKind
    psi2: BellKind
    a: int = 0
    b: int = 1
    sign: int = 1

    def __post_init__(self):
        if self.psi1 is self.psi2:
            raise ValueError("psi1 and psi2 must differ")
        if self.a == self.b or self.a not in (0, 1) or self.b not in (0, 1):
            raise ValueError("a and b must be orthogonal basis labels 0/1")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")


CANONICAL_GHZ = GhzLikeSpec(BellKind.PSI_PLUS, BellKind.PSI_MINUS, 0, 1, 1)


def ghz_like_state(spec: GhzLikeSpec) -> StateVector:
    amps = np.zeros(8, dtype=complex)
    amps[spec.a * 4: spec.a * 4 + 4] += spec.psi1.amplitudes
    amps[spec.b * 4: spec.b * 4 + 4] += spec.sign * spec.psi2.amplitudes
    amps /= np.sqrt(2.0)
    return StateVector(3, amps)


def make_bell(kind: BellKind, reg: Register) -> tuple[int, int]:
    """Two fresh partner-linked qubits in the named Bell state."""
    h1, h2 = reg.alloc_group(bell_state(kind))
    return h1, h2


def make_ghz_like(spec: GhzLikeSpec, reg: Register) -> tuple[int, int, int]:
    h1, h2, h3 = reg.alloc_group(ghz_like_state(spec))
    return h1, h2, h3


# -- message encoders -------------------------------------------------------

def encode_lm05(bit: int) -> PauliOp:
    """0 -> I, 1 -> iY (flips the value in both preparation bases)."""
    return PauliOp.IY if bit else PauliOp.I


def encode_dense(dibit) -> PauliOp:
    """00 -> I, 01 -> X, 10 -> iY, 11 -> Z."""
    key = _as_dibit(dibit)
    return _DENSE_ENCODE[key]


def encode_z(bit: int) -> PauliOp:
    """0 -> I, 1 -> Z."""
    return PauliOp.Z if bit else PauliOp.I


_DENSE_ENCODE = {
    (0, 0): PauliOp.I,
    (0, 1): PauliOp.X,
    (1, 0): PauliOp.IY,
    (1, 1): PauliOp.Z,
}

# Bell outcome when the encoding Pauli acted on the first qubit of psi+.
DENSE_OUTCOME_PSI_PLUS = {
    (0, 0): BellKind.PSI_PLUS,
    (0, 1): BellKind.PHI_PLUS,
    (1, 0): BellKind.PHI_MINUS,
    (1, 1): BellKind.PSI_MINUS,
}
# Same, for a psi- reference pair (P4: controller's outcome selects this).
DENSE_OUTCOME_PSI_MINUS = {
    (0, 0): BellKind.PSI_MINUS,
    (0, 1): BellKind.PHI_MINUS,
    (1, 0): BellKind.PHI_PLUS,
    (1, 1): BellKind.PSI_PLUS,
}


def decode_dense(outcome: BellKind, reference: BellKind = BellKind.PSI_PLUS):
    table = (
        DENSE_OUTCOME_PSI_PLUS if reference is BellKind.PSI_PLUS else DENSE_OUTCOME_PSI_MINUS
    )
    for dibit, kind in table.items():
        if kind is outcome:
            return dibit
    raise ValueError(f"unsupported reference state {reference}")


def _as_dibit(dibit) -> tuple[int, int]:
    if isinstance(dibit, str):
        if len(dibit) != 2 or any(c not in "01" for c in dibit):
            raise ValueError(f"invalid dibit {dibit!r}")
        return int(dibit[0]), int(dibit[1])
    b0, b1 = dibit
    return int(b0), int(b1)


# -- decoy machinery --------------------------------------------------------

class Subroutine(Enum):
    BB84 = "bb84"
    GV = "gv"


BB84_STATES = (
    (MeasBasis.COMPUTATIONAL, 0),
    (MeasBasis.COMPUTATIONAL, 1),
    (MeasBasis.DIAGONAL, 0),
    (MeasBasis.DIAGONAL, 1),
)


def bb84_amplitudes(basis: MeasBasis, value: int) -> np.ndarray:
    if basis is MeasBasis.COMPUTATIONAL:
        v = np.zeros(2, dtype=complex)
        v[value] = 1.0
        return v
    s = 1.0 if value == 0 else -1.0
    return np.array([1.0, s], dtype=complex) / np.sqrt(2.0)


def bb84_label(basis: MeasBasis, value: int) -> str:
    if basis is MeasBasis.COMPUTATIONAL:
        return str(value)
    return "+" if value == 0 else "-"


@dataclass(frozen=True)
class Bb84Record:
    handle: int
    basis: MeasBasis
    value: int


@dataclass(frozen=True)
class GvRecord:
    handle_1: int
    handle_2: int
    kind: BellKind
    split: bool = False  # halves live in two different sequences


@dataclass
class DecoyBatch:
    subroutine: Subroutine
    records: list = field(default_factory=list)

    def handles(self) -> set[int]:
        hs = set()
        for r in self.records:
            if isinstance(r, Bb84Record):
                hs.add(r.handle)
            else:
                hs.update((r.handle_1, r.handle_2))
        return hs


def _random_insert(seq: ParticleSequence, entries, rng) -> ParticleSequence:
    """Insert `entries` at uniformly random distinct positions of the
    enlarged sequence; relative order of existing entries is preserved."""
    total = len(seq) + len(entries)
    positions = sorted(int(p) for p in rng.choice(total, size=len(entries), replace=False))
    out = []
    it = iter(seq.entries)
    eit = iter(entries)
    pos_set = set(positions)
    for i in range(total):
        out.append(next(eit) if i in pos_set else next(it))
    return ParticleSequence(out)


def insert_decoys(
    seq: ParticleSequence,
    subroutine: Subroutine,
    count: int,
    reg: Register,
    rng: np.random.Generator,
    origin: str = "",
) -> tuple[ParticleSequence, DecoyBatch]:
    """Insert `count` decoy qubits at random positions (whole-pair GV
    placement: pairs live inside this one sequence; odd counts round up
    to a whole pair)."""
    batch = DecoyBatch(subroutine)
    if count == 0:
        return seq.copy(), batch
    entries = []
    if subroutine is Subroutine.BB84:
        for _ in range(count):
            basis, value = BB84_STATES[int(rng.integers(4))]
            h = reg.alloc(bb84_amplitudes(basis, value))
            batch.records.append(Bb84Record(h, basis, value))
            entries.append(SeqEntry(h, Role.DECOY, origin=origin))
    else:
        pairs = (count + 1) // 2
        for _ in range(pairs):
            h1, h2 = make_bell(BellKind.PSI_PLUS, reg)
            batch.records.append(GvRecord(h1, h2, BellKind.PSI_PLUS))
            entries.append(SeqEntry(h1, Role.DECOY, partner=h2, origin=origin))
            entries.append(SeqEntry(h2, Role.DECOY, partner=h1, origin=origin))
    order = rng.permutation(len(entries))
    entries = [entries[int(i)] for i in order]
    return _random_insert(seq, entries, rng), batch


def insert_gv_decoys_split(
    seq_a: ParticleSequence,
    seq_b: ParticleSequence,
    pairs: int,
    reg: Register,
    rng: np.random.Generator,
    origin: str = "",
) -> tuple[ParticleSequence, ParticleSequence, DecoyBatch]:
    """Split placement: first halves go into seq_a, second halves into seq_b."""
    batch = DecoyBatch(Subroutine.GV)
    first_halves, second_halves = [], []
    for _ in range(pairs):
        h1, h2 = make_bell(BellKind.PSI_PLUS, reg)
        batch.records.append(GvRecord(h1, h2, BellKind.PSI_PLUS, split=True))
        first_halves.append(SeqEntry(h1, Role.DECOY, partner=h2, origin=origin))
        second_halves.append(SeqEntry(h2, Role.DECOY, partner=h1, origin=origin))
    out_a = _random_insert(seq_a, first_halves, rng)
    out_b = _random_insert(seq_b, second_halves, rng)
    return out_a, out_b, batch


def verify_decoys(batch: DecoyBatch, reg: Register, rng: np.random.Generator) -> float:
    """Measure the batch's decoys out and return the observed error rate.

    BB84: each decoy measured in its preparation basis; an error is any
    outcome differing from the prepared value. GV: each pair is
    Bell-measured; an error is any outcome differing from the prepared
    Bell state.
    """
    if not batch.records:
        return 0.0
    errors = 0
    for r in batch.records:
        if isinstance(r, Bb84Record):
            label = reg.measure([r.handle], r.basis, rng)
            if label != bb84_label(r.basis, r.value):
                errors += 1
        else:
            kind = reg.measure([r.handle_1, r.handle_2], MeasBasis.BELL, rng)
            if kind is not r.kind:
                errors += 1
    return errors / len(batch.records)
