"""The six online-shopping protocol sessions.

Parties: Alice (buyer), Bob (merchant), Charlie (controller). Each run
function executes one full session over a fresh register, with per-party
deterministic RNG streams derived from the session seed, and returns a
SessionOutcome carrying the decoded message (or an abort), the ordered
transcript, and the resource ledger.

Resource-ledger convention (normative for this artifact; the efficiency
table depends on it):

* c = message bits carried by the session.
* q = number of distinct qubits of the quantum channel resource: every
  qubit that traverses a quantum channel is counted once (decoys
  included, re-transmissions not double counted), plus qubits a party
  retains as its half of a shared entangled channel (the controller's
  third qubits in the dense-coding protocol). Qubits prepared and
  measured locally by the same party (the buyer's encoding pairs in the
  swapping protocol) are excluded.
* b = non-check classical bits: initial-state disclosures, keys,
  permutation disclosures, and controller outcomes count n bits per n
  disclosed items; acknowledgments and all eavesdrop-check communication
  are excluded.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .adversary import (
    AttackKind,
    AttackReport,
    AttackStrategy,
    correlation_elicitation,
    entangle_measure,
    fake_bb84_sequence,
    intercept_resend,
    x_flip_all,
)
from .errors import ImpossibleOutcomeError, ProtocolStateError
from .primitives import (
    BB84_STATES,
    ParticleSequence,
    Permutation,
    Role,
    SeqEntry,
    Subroutine,
    apply_permutation,
    bb84_amplitudes,
    bb84_label,
    CANONICAL_GHZ,
    decode_dense,
    encode_dense,
    encode_lm05,
    encode_z,
    insert_decoys,
    insert_gv_decoys_split,
    make_bell,
    make_ghz_like,
    verify_decoys,
)
from .qsim import BellKind, MeasBasis, party_rng
from .register import Register

DEFAULT_THRESHOLD = 0.17
LEDGER_CONVENTION = "distinct-channel-qubits-v1"

PROTOCOL_NAMES = ("clz", "hyj", "p1", "p2", "p3", "p4")


class PartyId(Enum):
    ALICE = "alice"
    BOB = "bob"
    CHARLIE = "charlie"
    EVE = "eve"


_PARTY_STREAM = {PartyId.ALICE: 0, PartyId.BOB: 1, PartyId.CHARLIE: 2, PartyId.EVE: 3}


@dataclass
class ResourceLedger:
    c: int = 0
    q: int = 0
    b: int = 0
    convention: str = LEDGER_CONVENTION


@dataclass(frozen=True)
class QuantumSend:
    frm: PartyId
    to: PartyId
    leg: str
    handles: tuple

    def line(self) -> str:
        return f"SEND from={self.frm.value} to={self.to.value} leg={self.leg} qubits={len(self.handles)}"


@dataclass(frozen=True)
class ClassicalAnnounce:
    frm: PartyId
    payload: str
    authenticated: bool = True

    def line(self) -> str:
        return f"ANNOUNCE from={self.frm.value} auth={int(self.authenticated)} payload={self.payload}"


@dataclass(frozen=True)
class CheckResult:
    leg: str
    error_rate: float
    passed: bool

    def line(self) -> str:
        return f"CHECK leg={self.leg} rate={self.error_rate:.6f} pass={int(self.passed)}"


@dataclass(frozen=True)
class Decode:
    by: PartyId
    bits: str

    def line(self) -> str:
        return f"DECODE by={self.by.value} bits={self.bits}"


@dataclass
class ProtocolTranscript:
    events: list = field(default_factory=list)

    def record(self, event) -> None:
        self.events.append(event)

    def serialize(self) -> str:
        return "\n".join(e.line() for e in self.events) + "\n"

    def checks(self):
        return [e for e in self.events if isinstance(e, CheckResult)]


@dataclass
class SessionOutcome:
    decoded: str | None
    aborted: bool
    abort_leg: str | None
    ledger: ResourceLedger
    transcript: ProtocolTranscript
    attack_report: AttackReport | None = None


def _bits(s: str, n: int, what: str) -> str:
    if len(s) != n or any(c not in "01" for c in s):
        raise ValueError(f"{what} must be a bit string of length {n}, got {s!r}")
    return s


def _xor(a: str, b: str) -> str:
    return "".join("1" if x != y else "0" for x, y in zip(a, b))


class _Session:
    """Mutable per-run state: register, RNG streams, transcript, ledger."""

    def __init__(self, seed: int, threshold: float, attack: AttackStrategy | None):
        self.reg = Register()
        self.rng = {p: party_rng(seed, i) for p, i in _PARTY_STREAM.items()}
        self.transcript = ProtocolTranscript()
        self.ledger = ResourceLedger()
        self.threshold = threshold
        self.attack = attack
        self.report = AttackReport() if attack is not None else None
        self.aborted = False
        self.abort_leg: str | None = None
        self.disclosed: set[str] = set()
        self.counted: set[int] = set()
        # Eve / dishonest-party working state
        self.eve_notes: dict = {}
        self.eve_ancillae: dict = {}
        self.eve_parities: list = []
        self.captured: ParticleSequence | None = None

    def count_resource(self, handles) -> None:
        for h in handles:
            if h not in self.counted:
                self.counted.add(h)
                self.ledger.q += 1

    def send(self, frm: PartyId, to: PartyId, leg: str, seq: ParticleSequence) -> ParticleSequence:
        self.count_resource(seq.handles())
        self.transcript.record(QuantumSend(frm, to, leg, tuple(seq.handles())))
        a = self.attack
        if a is None or not a.applies_to(leg):
            return seq
        rng = self.rng[PartyId.EVE]
        if a.kind is AttackKind.INTERCEPT_RESEND:
            self.eve_notes.update(
                intercept_resend(self.reg, seq.handles(), a.f, rng, a.basis_policy)
            )
        elif a.kind is AttackKind.ENTANGLE_MEASURE:
            self.eve_ancillae.update(entangle_measure(self.reg, seq.handles(), a.beta, rng))
        elif a.kind is AttackKind.CORRELATION_ELICITATION:
            self.eve_parities.extend(correlation_elicitation(self.reg, seq.handles(), rng))
        elif a.kind is AttackKind.X_FLIP_ALL:
            x_flip_all(self.reg, seq.handles())
        elif a.kind is AttackKind.CHARLIE_FAKE_SEQUENCE:
            # Charlie captures the whole sequence and substitutes fresh
            # qubits in states known to him.
            self.captured = seq
            handles, records = fake_bb84_sequence(
                self.reg, len(seq), self.rng[PartyId.CHARLIE]
            )
            self.fake_records = records
            return ParticleSequence(
                SeqEntry(h, Role.MESSAGE, origin="fake") for h in handles
            )
        return seq

    def announce(self, frm: PartyId, payload: str, b_bits: int = 0, authenticated: bool = True):
        self.transcript.record(ClassicalAnnounce(frm, payload, authenticated))
        self.ledger.b += b_bits

    def check(self, leg: str, error_rate: float) -> bool:
        passed = error_rate <= self.threshold
        self.transcript.record(CheckResult(leg, error_rate, passed))
        if self.report is not None and self.attack.applies_to(leg.split(":")[0]):
            self.report.leg_error_rate = max(self.report.leg_error_rate, error_rate)
            if not passed:
                self.report.detected = True
        if not passed and not self.aborted:
            self.aborted = True
            self.abort_leg = leg
        return passed

    def require_disclosed(self, name: str) -> None:
        if name not in self.disclosed:
            raise ProtocolStateError(f"decode attempted before disclosure of {name}")

    def outcome(self, decoded: str | None) -> SessionOutcome:
        if decoded is not None:
            self.transcript.record(Decode(PartyId.BOB, decoded))
        return SessionOutcome(
            decoded=decoded,
            aborted=self.aborted,
            abort_leg=self.abort_leg,
            ledger=self.ledger,
            transcript=self.transcript,
            attack_report=self.report,
        )


# ---------------------------------------------------------------------------
# CLZ / HYJ / Protocol 1 (single-photon, LM05 encoding)
# ---------------------------------------------------------------------------

def _lm05_first_leg(s: _Session, n: int):
    """Controller's 2n random qubits to Alice plus the first BB84 check.

    Returns the n surviving message carriers as (handle, basis, value),
    or None on abort.
    """
    c_rng, a_rng = s.rng[PartyId.CHARLIE], s.rng[PartyId.ALICE]
    prep = []
    entries = []
    for _ in range(2 * n):
        basis, value = BB84_STATES[int(c_rng.integers(4))]
        h = s.reg.alloc(bb84_amplitudes(basis, value))
        prep.append((h, basis, value))
        entries.append(SeqEntry(h, Role.MESSAGE, origin="controller-prep"))
    s.send(PartyId.CHARLIE, PartyId.ALICE, "charlie->alice", ParticleSequence(entries))

    check_pos = sorted(int(p) for p in a_rng.choice(2 * n, size=n, replace=False))
    s.announce(PartyId.ALICE, "first-check-positions=" + ",".join(map(str, check_pos)))
    s.announce(
        PartyId.CHARLIE,
        "first-check-preparations="
        + ",".join(f"{bb84_label(prep[p][1], prep[p][2])}" for p in check_pos),
    )
    errors = 0
    for p in check_pos:
        h, basis, value = prep[p]
        if s.reg.measure([h], basis, a_rng) != bb84_label(basis, value):
            errors += 1
    if not s.check("charlie->alice", errors / n):
        return None
    chosen = set(check_pos)
    return [prep[p] for p in range(2 * n) if p not in chosen]


def _eve_intercept_success(s: _Session, carriers) -> None:
    """Fraction of intercepted message carriers whose bit Eve inferred right."""
    if s.report is None or s.attack.kind is not AttackKind.INTERCEPT_RESEND:
        return
    hits, total = 0, 0
    for h, basis, value in carriers:
        if h in s.eve_notes:
            total += 1
            _, bit = s.eve_notes[h]
            hits += int(bit == value)
    if total:
        s.report.per_qubit_success = hits / total
        s.report.notes["intercepted_carriers"] = total


def _run_lm05_family(
    protocol: str,
    n: int,
    msg: str,
    *,
    key: str | None = None,
    announced_key: str | None = None,
    pi: Permutation | None = None,
    announced_pi: Permutation | None = None,
    attack: AttackStrategy | None = None,
    seed: int = 0,
    threshold: float = DEFAULT_THRESHOLD,
) -> SessionOutcome:
    msg = _bits(msg, n, "message")
    s = _Session(seed, threshold, attack)
    s.ledger.c = n
    a_rng, b_rng, c_rng = (s.rng[p] for p in (PartyId.ALICE, PartyId.BOB, PartyId.CHARLIE))

    carriers = _lm05_first_leg(s, n)
    if carriers is None:
        return s.outcome(None)
    _eve_intercept_success(s, carriers)

    # Encoding: LM05 (I / iY) on the carriers, in original carrier order.
    if protocol == "hyj":
        if key is None:
            key = "".join(str(int(b)) for b in a_rng.integers(0, 2, size=n))
        else:
            key = _bits(key, n, "key")
        wire = _xor(msg, key)
    else:
        wire = msg
    for i, (h, _, _) in enumerate(carriers):
        s.reg.apply_single(h, encode_lm05(int(wire[i])))
    mseq = ParticleSequence(
        SeqEntry(h, Role.MESSAGE, origin="encoded") for h, _, _ in carriers
    )

    if protocol == "p1":
        if pi is None:
            pi = Permutation.random(n, a_rng)
        if announced_pi is None:
            announced_pi = pi
        if attack is not None and attack.kind is AttackKind.ALICE_WRONG_PERMUTATION:
            announced_pi = attack.pi_prime or Permutation.random_non_identity(n, a_rng)
        mseq = apply_permutation(mseq, pi)

    out, batch = insert_decoys(mseq, Subroutine.BB84, n, s.reg, a_rng, origin="alice-decoy")
    delivered = s.send(PartyId.ALICE, PartyId.BOB, "alice->bob", out)

    # Decoy disclosure and second BB84 check, on the delivered sequence.
    s.announce(PartyId.BOB, "ack")
    decoy_info = [(out.position_of(r.handle), r.basis, r.value) for r in batch.records]
    decoy_info.sort()
    s.announce(
        PartyId.ALICE,
        "decoy-disclosure="
        + ",".join(f"{p}:{bb84_label(b, v)}" for p, b, v in decoy_info),
    )
    errors = 0
    for pos, basis, value in decoy_info:
        if s.reg.measure([delivered[pos].qubit], basis, b_rng) != bb84_label(basis, value):
            errors += 1
    rate = errors / n

    if attack is not None and attack.kind is AttackKind.CHARLIE_FAKE_SEQUENCE:
        # Charlie discards the (now public) decoy positions from his captured
        # sequence and measures the rest in his own preparation bases.
        prep_by_handle = {h: (basis, value) for h, basis, value in carriers}
        decoy_pos = {p for p, _, _ in decoy_info}
        inferred = []
        for p in range(len(s.captured)):
            if p in decoy_pos:
                continue
            h = s.captured[p].qubit
            basis, value = prep_by_handle[h]
            label = s.reg.measure([h], basis, c_rng)
            inferred.append("0" if label == bb84_label(basis, value) else "1")
        s.report.eve_inferred_bits = "".join(inferred)

    if not s.check("alice->bob", rate):
        return s.outcome(None)

    # Final disclosures and decode.
    s.announce(
        PartyId.CHARLIE,
        "initial-states=" + ",".join(bb84_label(b, v) for _, b, v in carriers),
        b_bits=n,
    )
    s.disclosed.add("initial-states")
    decoy_pos = {p for p, _, _ in decoy_info}
    received_msgs = [delivered[p] for p in range(len(delivered)) if p not in decoy_pos]

    if protocol == "p1":
        s.announce(
            PartyId.ALICE,
            "permutation=" + ",".join(map(str, announced_pi.mapping)),
            b_bits=n,
        )
        s.disclosed.add("permutation")
        aligned = announced_pi.invert().apply_list(received_msgs)
    else:
        aligned = received_msgs

    bits = []
    for i, entry in enumerate(aligned):
        _, basis, value = carriers[i]
        label = s.reg.measure([entry.qubit], basis, b_rng)
        bits.append("0" if label == bb84_label(basis, value) else "1")
    raw = "".join(bits)

    if protocol == "hyj":
        if attack is not None and attack.kind is AttackKind.ALICE_KEY_CHANGE:
            announced_key = attack.key_prime
        if announced_key is None:
            announced_key = key
        s.announce(PartyId.ALICE, "key=" + announced_key, b_bits=n)
        decoded = _xor(raw, announced_key)
        if s.report is not None and attack.kind is AttackKind.ALICE_KEY_CHANGE:
            s.report.notes["wire"] = wire
            s.report.notes["decoded"] = decoded
        return s.outcome(decoded)

    if protocol == "p1":
        # Order confirmation: the buyer's claimed order is compared with the
        # merchant's decode (hash comparison over the authenticated channel;
        # modeled as a check event). A wrong announced permutation garbles
        # the decode at displaced positions and cannot be predicted by the
        # buyer, who never learns the controller's preparations.
        sigma = [pi.mapping[j] for j in announced_pi.invert().mapping]
        claimed = "".join(msg[k] for k in sigma)
        mismatch = sum(d != c for d, c in zip(raw, claimed)) / n
        if s.report is not None and attack.kind is AttackKind.ALICE_WRONG_PERMUTATION:
            s.report.leg_error_rate = mismatch
            s.report.detected = mismatch > threshold
            s.report.notes["decoded"] = raw
        if not s.check("order-confirmation", mismatch):
            return s.outcome(None)
        return s.outcome(raw)

    return s.outcome(raw)


def run_clz(n, msg, attack=None, seed=0, threshold=DEFAULT_THRESHOLD) -> SessionOutcome:
    """Single-photon protocol in which the controller learns nothing only if
    honest; its known flaw (capture-and-substitute) is reproducible via the
    fake-sequence attack."""
    return _run_lm05_family("clz", n, msg, attack=attack, seed=seed, threshold=threshold)


def run_hyj(n, msg, key=None, announced_key=None, attack=None, seed=0,
            threshold=DEFAULT_THRESHOLD) -> SessionOutcome:
    """CLZ plus a one-time-pad key announced only after the checks; carries
    the key-change loophole (announced_key != key goes undetected)."""
    return _run_lm05_family(
        "hyj", n, msg, key=key, announced_key=announced_key,
        attack=attack, seed=seed, threshold=threshold,
    )


def run_p1(n, msg, pi=None, announced_pi=None, attack=None, seed=0,
           threshold=DEFAULT_THRESHOLD) -> SessionOutcome:
    """Permutation-of-particles variant: the secret order replaces the key."""
    return _run_lm05_family(
        "p1", n, msg, pi=pi, announced_pi=announced_pi,
        attack=attack, seed=seed, threshold=threshold,
    )


# ---------------------------------------------------------------------------
# Protocol 2 (Bell states, dense coding, cryptographic switch)
# ---------------------------------------------------------------------------

def run_p2(n, msg, pis=None, attack=None, seed=0, threshold=DEFAULT_THRESHOLD,
           gv_placement="whole-pair", redundant=0, confirm_order=False) -> SessionOutcome:
    msg = _bits(msg, 2 * n, "message")
    s = _Session(seed, threshold, attack)
    s.ledger.c = 2 * n
    a_rng, b_rng, c_rng = (s.rng[p] for p in (PartyId.ALICE, PartyId.BOB, PartyId.CHARLIE))

    pair_a, pair_b = [], []
    for i in range(n):
        ha, hb = make_bell(BellKind.PSI_PLUS, s.reg)
        pair_a.append(SeqEntry(ha, Role.MESSAGE, partner=hb, origin=f"pair-{i}"))
        pair_b.append(SeqEntry(hb, Role.MESSAGE, partner=ha, origin=f"pair-{i}"))
    pa = ParticleSequence(pair_a)
    pi_n = (pis[0] if pis else None) or Permutation.random(n, c_rng)
    pb = ParticleSequence(pi_n.apply_list(pair_b))

    if gv_placement == "whole-pair":
        pa_full, batch_a = insert_decoys(pa, Subroutine.GV, n, s.reg, c_rng, "controller-decoy")
        pb_full, batch_b = insert_decoys(pb, Subroutine.GV, n, s.reg, c_rng, "controller-decoy")
    elif gv_placement == "split-pair":
        pa_full, pb_full, batch_ab = insert_gv_decoys_split(
            pa, pb, n, s.reg, c_rng, "controller-decoy"
        )
    else:
        raise ValueError(f"unknown gv_placement {gv_placement!r}")

    delivered_a = s.send(PartyId.CHARLIE, PartyId.ALICE, "charlie->alice", pa_full)
    delivered_b = s.send(PartyId.CHARLIE, PartyId.BOB, "charlie->bob", pb_full)
    s.announce(PartyId.ALICE, "ack")
    s.announce(PartyId.BOB, "ack")
    s.announce(PartyId.CHARLIE, "decoy-disclosure=positions+pairs")
    if gv_placement == "whole-pair":
        ok = s.check("charlie->alice", verify_decoys(batch_a, s.reg, a_rng))
        ok = s.check("charlie->bob", verify_decoys(batch_b, s.reg, b_rng)) and ok
    else:
        rate = verify_decoys(batch_ab, s.reg, a_rng)
        ok = s.check("charlie->alice", rate)
        ok = s.check("charlie->bob", rate) and ok
    if not ok:
        return s.outcome(None)

    # Dense-coding by Alice on her halves, then her own decoys + permutation.
    alice_msgs = [e for e in delivered_a if e.role is Role.MESSAGE]
    for i, e in enumerate(alice_msgs):
        s.reg.apply_single(e.qubit, encode_dense(msg[2 * i: 2 * i + 2]))
    out = ParticleSequence(alice_msgs)
    out, batch_alice = insert_decoys(out, Subroutine.GV, n, s.reg, a_rng, "alice-decoy")
    red_records = []
    if redundant:
        for _ in range(redundant):
            v = int(a_rng.integers(2))
            h = s.reg.alloc(np.array([1 - v, v], dtype=complex))
            out.append(SeqEntry(h, Role.REDUNDANT, origin="redundant"))
            red_records.append((h, v))
    pi_prime = Permutation.random(len(out), a_rng)
    out_t = apply_permutation(out, pi_prime)
    s.send(PartyId.ALICE, PartyId.BOB, "alice->bob", out_t)
    s.announce(PartyId.BOB, "ack")
    s.announce(PartyId.ALICE, "alice-decoy-disclosure=positions+pairs")
    if not s.check("alice->bob", verify_decoys(batch_alice, s.reg, b_rng)):
        return s.outcome(None)
    if red_records:
        s.announce(PartyId.ALICE, "redundant-disclosure=positions+values")
        wrong = sum(
            s.reg.measure([h], MeasBasis.COMPUTATIONAL, b_rng) != str(v)
            for h, v in red_records
        )
        if not s.check("alice->bob:redundant", wrong / len(red_records)):
            return s.outcome(None)

    s.announce(
        PartyId.ALICE,
        "message-permutation=" + ",".join(map(str, pi_prime.mapping)),
        b_bits=n,
    )
    s.disclosed.add("message-permutation")

    # Premature decode: Bob pairs the qubits under a uniformly random guess
    # of the withheld pairing permutation.
    if attack is not None and attack.kind is AttackKind.BOB_PREMATURE_DECODE:
        guess = Permutation.random(n, b_rng)
        bob_msgs = [e for e in delivered_b if e.role is Role.MESSAGE]
        bits = []
        for i in range(n):
            kind = s.reg.measure(
                [alice_msgs[i].qubit, bob_msgs[guess.mapping[i]].qubit],
                MeasBasis.BELL, b_rng,
            )
            d = decode_dense(kind)
            bits.append(f"{d[0]}{d[1]}")
        decoded = "".join(bits)
        s.report.notes["decoded"] = decoded
        s.report.notes["premature"] = True
        return s.outcome(decoded)

    s.announce(PartyId.CHARLIE, "pairing-permutation=" + ",".join(map(str, pi_n.mapping)), b_bits=n)
    s.disclosed.add("pairing-permutation")
    s.require_disclosed("pairing-permutation")
    s.require_disclosed("message-permutation")

    # Bob aligns Alice's qubits via her disclosed permutation, locates each
    # partner via the controller's, and Bell-measures pair by pair.
    aligned = pi_prime.invert().apply_list(out_t.entries)
    aligned_msgs = [e for e in aligned if e.role is Role.MESSAGE]
    sigma = list(range(n))
    if attack is not None and attack.kind is AttackKind.ALICE_WRONG_PERMUTATION:
        cheat = attack.pi_prime or Permutation.random_non_identity(n, a_rng)
        sigma = list(cheat.mapping)
        aligned_msgs = [aligned_msgs[k] for k in sigma]
    bob_msgs = [e for e in delivered_b if e.role is Role.MESSAGE]
    bob_by_pair = pi_n.invert().apply_list(bob_msgs)

    bits = []
    for i in range(n):
        kind = s.reg.measure(
            [aligned_msgs[i].qubit, bob_by_pair[i].qubit], MeasBasis.BELL, b_rng
        )
        d = decode_dense(kind)
        bits.append(f"{d[0]}{d[1]}")
    decoded = "".join(bits)

    if confirm_order:
        claimed = "".join(msg[2 * k: 2 * k + 2] for k in sigma)
        mismatch = sum(d != c for d, c in zip(decoded, claimed)) / (2 * n)
        if s.report is not None and attack.kind is AttackKind.ALICE_WRONG_PERMUTATION:
            s.report.leg_error_rate = mismatch
            s.report.detected = mismatch > threshold
            s.report.notes["decoded"] = decoded
        if not s.check("order-confirmation", mismatch):
            return s.outcome(None)
    return s.outcome(decoded)


# ---------------------------------------------------------------------------
# Protocol 3 (GHZ-like states, entanglement swapping)
# ---------------------------------------------------------------------------

def decode_swap(alice_outcome_1: BellKind, alice_outcome_2: BellKind, bob_bit: int) -> int:
    """Decode one message bit from the swap outcomes and Bob's qubit-3 bit.

    Identical outcomes pass the bit through; same-letter opposite-sign
    outcomes complement it. Cross-letter pairs have zero amplitude.
    """
    if alice_outcome_1.letter != alice_outcome_2.letter:
        raise ImpossibleOutcomeError(
            f"cross-letter Bell pair ({alice_outcome_1}, {alice_outcome_2}) has zero amplitude"
        )
    if alice_outcome_1 is alice_outcome_2:
        return bob_bit
    return 1 - bob_bit


def run_p3(n, msg, pi=None, attack=None, seed=0, threshold=DEFAULT_THRESHOLD,
           decoy_subroutine=Subroutine.BB84) -> SessionOutcome:
    msg = _bits(msg, n, "message")
    s = _Session(seed, threshold, attack)
    s.ledger.c = n
    a_rng, b_rng, c_rng = (s.rng[p] for p in (PartyId.ALICE, PartyId.BOB, PartyId.CHARLIE))

    q1s, q2s, q3s = [], [], []
    for i in range(n):
        h1, h2, h3 = make_ghz_like(CANONICAL_GHZ, s.reg)
        q1s.append(SeqEntry(h1, Role.MESSAGE, origin=f"ghz-{i}"))
        q2s.append(SeqEntry(h2, Role.MESSAGE, origin=f"ghz-{i}"))
        q3s.append(SeqEntry(h3, Role.MESSAGE, origin=f"ghz-{i}"))
    pi = pi or Permutation.random(n, c_rng)
    pb = ParticleSequence(pi.apply_list(q3s))

    pa1, batch_1 = insert_decoys(ParticleSequence(q1s), decoy_subroutine, n, s.reg, c_rng)
    pa2, batch_2 = insert_decoys(ParticleSequence(q2s), decoy_subroutine, n, s.reg, c_rng)
    pb_full, batch_3 = insert_decoys(pb, decoy_subroutine, n, s.reg, c_rng)

    s.send(PartyId.CHARLIE, PartyId.ALICE, "charlie->alice-1", pa1)
    s.send(PartyId.CHARLIE, PartyId.ALICE, "charlie->alice-2", pa2)
    delivered_b = s.send(PartyId.CHARLIE, PartyId.BOB, "charlie->bob", pb_full)
    s.announce(PartyId.ALICE, "ack")
    s.announce(PartyId.BOB, "ack")
    s.announce(PartyId.CHARLIE, "decoy-disclosure=positions+preparations")
    ok = s.check("charlie->alice-1", verify_decoys(batch_1, s.reg, a_rng))
    ok = s.check("charlie->alice-2", verify_decoys(batch_2, s.reg, a_rng)) and ok
    ok = s.check("charlie->bob", verify_decoys(batch_3, s.reg, b_rng)) and ok
    if not ok:
        return s.outcome(None)

    # Alice's local encoding pairs never traverse a channel: excluded from q.
    outcomes = []
    for i in range(n):
        a1, a2 = make_bell(BellKind.PSI_PLUS, s.reg)
        if msg[i] == "1":
            s.reg.apply_single(a1, encode_z(1))
        o1 = s.reg.measure([a1, q1s[i].qubit], MeasBasis.BELL, a_rng)
        o2 = s.reg.measure([a2, q2s[i].qubit], MeasBasis.BELL, a_rng)
        outcomes.append((o1, o2))
    s.announce(
        PartyId.ALICE,
        "swap-outcomes=" + ",".join(f"{o1.value}:{o2.value}" for o1, o2 in outcomes),
        b_bits=n,
    )

    if attack is not None and attack.kind is AttackKind.BOB_PREMATURE_DECODE:
        guess = Permutation.random(n, b_rng)
        bob_msgs = [e for e in delivered_b if e.role is Role.MESSAGE]
        aligned = guess.invert().apply_list(bob_msgs)
        bits = []
        for i in range(n):
            bob_bit = int(s.reg.measure([aligned[i].qubit], MeasBasis.COMPUTATIONAL, b_rng))
            bits.append(str(decode_swap(outcomes[i][0], outcomes[i][1], bob_bit)))
        decoded = "".join(bits)
        s.report.notes["decoded"] = decoded
        s.report.notes["premature"] = True
        return s.outcome(decoded)

    s.announce(PartyId.CHARLIE, "permutation=" + ",".join(map(str, pi.mapping)), b_bits=n)
    s.disclosed.add("permutation")
    s.require_disclosed("permutation")

    bob_msgs = [e for e in delivered_b if e.role is Role.MESSAGE]
    aligned = pi.invert().apply_list(bob_msgs)
    # Cross-letter outcome pairs have zero amplitude over an undisturbed
    # channel; seeing one is proof of tampering and aborts the session.
    if any(o1.letter != o2.letter for o1, o2 in outcomes):
        s.check("swap-consistency", 1.0)
        return s.outcome(None)
    bits = []
    for i in range(n):
        bob_bit = int(s.reg.measure([aligned[i].qubit], MeasBasis.COMPUTATIONAL, b_rng))
        bits.append(str(decode_swap(outcomes[i][0], outcomes[i][1], bob_bit)))
    return s.outcome("".join(bits))


# ---------------------------------------------------------------------------
# Protocol 4 (GHZ-like states, dense coding, controller keeps qubit 3)
# ---------------------------------------------------------------------------

def run_p4(n, msg, attack=None, seed=0, threshold=DEFAULT_THRESHOLD,
           decoy_subroutine=Subroutine.BB84) -> SessionOutcome:
    msg = _bits(msg, 2 * n, "message")
    s = _Session(seed, threshold, attack)
    s.ledger.c = 2 * n
    a_rng, b_rng, c_rng = (s.rng[p] for p in (PartyId.ALICE, PartyId.BOB, PartyId.CHARLIE))

    q1s, q2s, q3s = [], [], []
    for i in range(n):
        h1, h2, h3 = make_ghz_like(CANONICAL_GHZ, s.reg)
        q1s.append(SeqEntry(h1, Role.MESSAGE, origin=f"ghz-{i}"))
        q2s.append(SeqEntry(h2, Role.MESSAGE, origin=f"ghz-{i}"))
        q3s.append(h3)
    # The controller's retained qubits are half of the shared channel state.
    s.count_resource(q3s)

    pa, batch_a = insert_decoys(ParticleSequence(q1s), decoy_subroutine, n, s.reg, c_rng)
    pb, batch_b = insert_decoys(ParticleSequence(q2s), decoy_subroutine, n, s.reg, c_rng)
    delivered_b = s.send(PartyId.CHARLIE, PartyId.BOB, "charlie->bob", pb)
    s.send(PartyId.CHARLIE, PartyId.ALICE, "charlie->alice", pa)
    s.announce(PartyId.ALICE, "ack")
    s.announce(PartyId.BOB, "ack")
    s.announce(PartyId.CHARLIE, "decoy-disclosure=positions+preparations")
    ok = s.check("charlie->alice", verify_decoys(batch_a, s.reg, a_rng))
    ok = s.check("charlie->bob", verify_decoys(batch_b, s.reg, b_rng)) and ok
    if not ok:
        return s.outcome(None)

    for i in range(n):
        s.reg.apply_single(q1s[i].qubit, encode_dense(msg[2 * i: 2 * i + 2]))
    out = ParticleSequence(q1s)
    out, batch_alice = insert_decoys(out, decoy_subroutine, n, s.reg, a_rng, "alice-decoy")
    pi_prime = Permutation.random(len(out), a_rng)
    out_t = apply_permutation(out, pi_prime)
    s.send(PartyId.ALICE, PartyId.BOB, "alice->bob", out_t)
    s.announce(PartyId.BOB, "ack")
    s.announce(PartyId.ALICE, "alice-decoy-disclosure=positions+preparations")
    if not s.check("alice->bob", verify_decoys(batch_alice, s.reg, b_rng)):
        return s.outcome(None)

    s.announce(
        PartyId.ALICE,
        "message-permutation=" + ",".join(map(str, pi_prime.mapping)),
        b_bits=n,
    )
    s.disclosed.add("message-permutation")
    aligned = pi_prime.invert().apply_list(out_t.entries)
    aligned_msgs = [e for e in aligned if e.role is Role.MESSAGE]
    bob_msgs = [e for e in delivered_b if e.role is Role.MESSAGE]

    if attack is not None and attack.kind is AttackKind.BOB_PREMATURE_DECODE:
        # Controller's outcomes withheld: Bob guesses the reference Bell
        # state of each triple uniformly.
        bits = []
        for i in range(n):
            kind = s.reg.measure(
                [aligned_msgs[i].qubit, bob_msgs[i].qubit], MeasBasis.BELL, b_rng
            )
            ref = BellKind.PSI_PLUS if b_rng.random() < 0.5 else BellKind.PSI_MINUS
            d = decode_dense(kind, ref)
            bits.append(f"{d[0]}{d[1]}")
        decoded = "".join(bits)
        s.report.notes["decoded"] = decoded
        s.report.notes["premature"] = True
        return s.outcome(decoded)

    controller_bits = [
        int(s.reg.measure([h], MeasBasis.COMPUTATIONAL, c_rng)) for h in q3s
    ]
    s.announce(
        PartyId.CHARLIE,
        "controller-outcomes=" + "".join(map(str, controller_bits)),
        b_bits=n,
    )
    s.disclosed.add("controller-outcomes")
    s.announce(PartyId.CHARLIE, "initial-state-reference=psi+:0,psi-:1", b_bits=n)
    s.require_disclosed("controller-outcomes")

    bits = []
    for i in range(n):
        kind = s.reg.measure(
            [aligned_msgs[i].qubit, bob_msgs[i].qubit], MeasBasis.BELL, b_rng
        )
        ref = BellKind.PSI_PLUS if controller_bits[i] == 0 else BellKind.PSI_MINUS
        d = decode_dense(kind, ref)
        bits.append(f"{d[0]}{d[1]}")
    return s.outcome("".join(bits))


RUNNERS = {
    "clz": run_clz,
    "hyj": run_hyj,
    "p1": run_p1,
    "p2": run_p2,
    "p3": run_p3,
    "p4": run_p4,
}


def message_length(protocol: str, n: int) -> int:
    """Message capacity in bits for n message units."""
    return 2 * n if protocol in ("p2", "p4") else n
