import numpy as np
import pytest

from qshop.adversary import (
    AttackKind,
    AttackStrategy,
    OUTSIDER_KINDS,
    alice_cheats,
    charlie_fake_sequence,
    correlation_elicitation,
    entangle_measure,
    fake_bb84_sequence,
    intercept_resend,
    x_flip_all,
)
from qshop.primitives import (
    BB84_STATES,
    Permutation,
    bb84_amplitudes,
    bb84_label,
    make_bell,
)
from qshop.qsim import BellKind, MeasBasis, party_rng, states_equal
from qshop.register import Register


def test_strategy_validation():
    with pytest.raises(ValueError):
        AttackStrategy(AttackKind.INTERCEPT_RESEND, f=1.5)
    with pytest.raises(ValueError):
        AttackStrategy(AttackKind.ENTANGLE_MEASURE, beta=1.2)
    s = AttackStrategy(AttackKind.ENTANGLE_MEASURE, beta=0.6)
    assert abs(s.alpha - 0.8) < 1e-12


def test_applies_to_legs():
    s = AttackStrategy(AttackKind.X_FLIP_ALL, target_leg="alice->bob")
    assert s.applies_to("alice->bob")
    assert not s.applies_to("charlie->alice")
    everywhere = AttackStrategy(AttackKind.INTERCEPT_RESEND)
    assert everywhere.applies_to("charlie->bob")


def test_outsider_kinds():
    assert AttackKind.INTERCEPT_RESEND in OUTSIDER_KINDS
    assert AttackKind.ALICE_KEY_CHANGE not in OUTSIDER_KINDS


def test_intercept_resend_notes_and_fraction():
    rng = party_rng(0, 3)
    reg = Register()
    handles = [reg.alloc() for _ in range(40)]
    notes = intercept_resend(reg, handles, 1.0, rng)
    assert set(notes) == set(handles)
    notes = intercept_resend(Register(), [], 1.0, rng)
    assert notes == {}
    reg = Register()
    handles = [reg.alloc() for _ in range(400)]
    notes = intercept_resend(reg, handles, 0.25, rng)
    assert 0.1 < len(notes) / 400 < 0.45


def test_intercept_resend_success_rate():
    # Eve recovers the prepared bit of a random BB84 qubit w.p. 3/4
    rng = party_rng(1, 3)
    hits = total = 0
    for seed in range(2000):
        reg = Register()
        basis, value = BB84_STATES[seed % 4]
        h = reg.alloc(bb84_amplitudes(basis, value))
        notes = intercept_resend(reg, [h], 1.0, rng)
        _, bit = notes[h]
        hits += int(bit == value)
        total += 1
    assert abs(hits / total - 0.75) < 0.04


def test_intercept_basis_policy():
    rng = party_rng(2, 3)
    reg = Register()
    h = reg.alloc()
    notes = intercept_resend(reg, [h], 1.0, rng, basis_policy="computational")
    assert notes[h] == (MeasBasis.COMPUTATIONAL, 0)


def test_entangle_measure_detection_probability():
    # detection per decoy = |beta|^2 / 2, averaged over BB84 decoy states
    rng = party_rng(3, 3)
    for beta2, expect in ((0.0, 0.0), (0.5, 0.25), (1.0, 0.5)):
        errors = 0
        trials = 4000
        for seed in range(trials):
            reg = Register()
            basis, value = BB84_STATES[seed % 4]
            h = reg.alloc(bb84_amplitudes(basis, value))
            entangle_measure(reg, [h], np.sqrt(beta2), rng)
            if reg.measure([h], basis, rng) != bb84_label(basis, value):
                errors += 1
        assert abs(errors / trials - expect) < 0.03


def test_correlation_elicitation_learns_letter_parity():
    # a psi pair CNOTs to ancilla parity 0, a phi pair to parity 1
    rng = party_rng(4, 3)
    for kind, parity in ((BellKind.PSI_PLUS, 0), (BellKind.PHI_MINUS, 1)):
        reg = Register()
        h1, h2 = make_bell(kind, reg)
        notes = correlation_elicitation(reg, [h1, h2], rng, pairing=[(h1, h2)])
        assert notes == [(h1, h2, parity)]


def test_correlation_elicitation_random_pairing_covers_all():
    rng = party_rng(5, 3)
    reg = Register()
    handles = [reg.alloc() for _ in range(8)]
    notes = correlation_elicitation(reg, handles, rng)
    paired = {h for h1, h2, _ in notes for h in (h1, h2)}
    assert paired == set(handles)
    assert len(notes) == 4


def test_x_flip_all():
    from qshop.qsim import ket

    reg = Register()
    h = reg.alloc()
    x_flip_all(reg, [h])
    assert states_equal(reg.joint_state([h]), ket("1"))
    x_flip_all(reg, [])  # no-op


def test_fake_bb84_sequence():
    rng = party_rng(6, 2)
    reg = Register()
    handles, records = fake_bb84_sequence(reg, 12, rng)
    assert len(handles) == len(records) == 12
    r2 = party_rng(7, 0)
    for h, (basis, value) in zip(handles, records):
        assert reg.measure([h], basis, r2) == bb84_label(basis, value)


# -- convenience runners -----------------------------------------------------

def test_charlie_fake_sequence_runner():
    report = charlie_fake_sequence("clz", 6, "110010", seed=3)
    assert report.eve_inferred_bits == "110010"
    with pytest.raises(ValueError):
        charlie_fake_sequence("p2", 4, "10101010")


def test_alice_cheats_key_change():
    report = alice_cheats(
        "hyj", 6, "100101", AttackKind.ALICE_KEY_CHANGE,
        seed=5, key="010010", key_prime="001011",
    )
    assert not report.detected
    assert report.notes["decoded"] == "111100"
    with pytest.raises(ValueError):
        alice_cheats("clz", 4, "1010", AttackKind.ALICE_KEY_CHANGE)


def test_alice_cheats_wrong_permutation():
    report = alice_cheats(
        "p1", 16, "1011010010110100", AttackKind.ALICE_WRONG_PERMUTATION, seed=0
    )
    assert report.leg_error_rate > 0.17
    assert report.detected
    report = alice_cheats(
        "p2", 8, "10" * 8, AttackKind.ALICE_WRONG_PERMUTATION,
        seed=0, confirm_order=True,
    )
    assert report.detected
    with pytest.raises(ValueError):
        alice_cheats("p3", 4, "1010", AttackKind.ALICE_WRONG_PERMUTATION)
    with pytest.raises(ValueError):
        alice_cheats("p1", 4, "1010", AttackKind.BOB_PREMATURE_DECODE)


def test_explicit_wrong_permutation():
    pi_prime = Permutation((1, 0, 2, 3))
    report = alice_cheats(
        "p1", 4, "1010", AttackKind.ALICE_WRONG_PERMUTATION, seed=2, pi_prime=pi_prime
    )
    # only two displaced positions: detection is possible but not certain
    assert 0.0 <= report.leg_error_rate <= 0.5
