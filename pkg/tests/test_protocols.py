import numpy as np
import pytest

from qshop.adversary import AttackKind, AttackStrategy
from qshop.errors import ImpossibleOutcomeError
from qshop.primitives import Permutation, Subroutine
from qshop.protocols import (
    RUNNERS,
    decode_swap,
    message_length,
    run_clz,
    run_hyj,
    run_p1,
    run_p2,
    run_p3,
    run_p4,
)
from qshop.qsim import BellKind


def random_msg(protocol, n, rng):
    return "".join(str(int(b)) for b in rng.integers(0, 2, size=message_length(protocol, n)))


# -- honest completeness -----------------------------------------------------

@pytest.mark.parametrize("protocol", list(RUNNERS))
def test_honest_run_decodes_message(protocol):
    rng = np.random.default_rng(hash(protocol) % 2 ** 32)
    for seed in range(5):
        n = int(rng.integers(1, 9))
        msg = random_msg(protocol, n, rng)
        out = RUNNERS[protocol](n, msg, seed=seed)
        assert not out.aborted
        assert out.decoded == msg


def test_outcome_invariant_aborted_xor_decoded():
    # intercept-resend at f=1 on the first leg aborts most runs; aborted
    # outcomes carry no decode and vice versa
    attack = AttackStrategy(AttackKind.INTERCEPT_RESEND, target_leg="charlie->alice")
    for seed in range(30):
        out = run_clz(8, "10110100", attack=attack, seed=seed)
        assert out.aborted == (out.decoded is None)
        if out.aborted:
            assert out.abort_leg is not None


def test_message_validation():
    with pytest.raises(ValueError):
        run_clz(4, "101")
    with pytest.raises(ValueError):
        run_p2(4, "0101")  # needs 2n bits
    with pytest.raises(ValueError):
        run_clz(4, "10a1")


# -- ledger accounting -------------------------------------------------------

LEDGER_PER_N = {
    "clz": (1, 3, 1),
    "hyj": (1, 3, 2),
    "p1": (1, 3, 2),
    "p2": (2, 5, 2),
    "p3": (1, 6, 2),
    "p4": (2, 6, 3),
}


@pytest.mark.parametrize("protocol", list(RUNNERS))
@pytest.mark.parametrize("n", [2, 4, 6])
def test_ledger_scales_linearly(protocol, n):
    msg = "10" * (message_length(protocol, n) // 2)
    out = RUNNERS[protocol](n, msg, seed=1)
    c, q, b = LEDGER_PER_N[protocol]
    assert (out.ledger.c, out.ledger.q, out.ledger.b) == (c * n, q * n, b * n)


# -- transcript --------------------------------------------------------------

def test_transcript_serialization_format():
    out = run_clz(4, "1010", seed=2)
    text = out.transcript.serialize()
    lines = text.strip().split("\n")
    assert any(l.startswith("SEND from=charlie to=alice leg=charlie->alice") for l in lines)
    assert any(l.startswith("CHECK leg=charlie->alice") for l in lines)
    assert lines[-1] == "DECODE by=bob bits=1010"
    # one event per line, each with a known tag
    assert all(l.split(" ", 1)[0] in ("SEND", "ANNOUNCE", "CHECK", "DECODE") for l in lines)


def test_transcript_deterministic_for_same_seed():
    a = run_p2(3, "101011", seed=9).transcript.serialize()
    b = run_p2(3, "101011", seed=9).transcript.serialize()
    assert a == b
    c = run_p2(3, "101011", seed=10).transcript.serialize()
    assert a != c


def test_checks_pass_on_clean_channel():
    out = run_p4(4, "10110100", seed=3)
    for ev in out.transcript.checks():
        assert ev.passed and ev.error_rate == 0.0


# -- worked example (one-time-pad key protocol) -------------------------------

def test_key_protocol_worked_example():
    out = run_hyj(6, "100101", key="010010", announced_key="001011", seed=5)
    assert not out.aborted
    assert out.decoded == "111100"


def test_key_protocol_honest_key_announcement():
    out = run_hyj(6, "100101", key="010010", seed=5)
    assert out.decoded == "100101"


# -- swap decoding rule ------------------------------------------------------

def test_decode_swap_rules():
    # identical outcomes pass the bit through
    assert decode_swap(BellKind.PSI_PLUS, BellKind.PSI_PLUS, 0) == 0
    assert decode_swap(BellKind.PHI_MINUS, BellKind.PHI_MINUS, 1) == 1
    # same letter, opposite sign complements
    assert decode_swap(BellKind.PSI_PLUS, BellKind.PSI_MINUS, 0) == 1
    assert decode_swap(BellKind.PHI_MINUS, BellKind.PHI_PLUS, 1) == 0
    # cross-letter pairs are impossible over a clean channel
    with pytest.raises(ImpossibleOutcomeError):
        decode_swap(BellKind.PSI_PLUS, BellKind.PHI_PLUS, 0)


# -- protocol options --------------------------------------------------------

def test_p2_split_pair_placement():
    out = run_p2(4, "10110100", seed=6, gv_placement="split-pair")
    assert out.decoded == "10110100"
    with pytest.raises(ValueError):
        run_p2(4, "10110100", gv_placement="nope")


def test_p2_redundant_qubits_harmless_when_honest():
    out = run_p2(4, "10110100", seed=6, redundant=3)
    assert out.decoded == "10110100"


def test_p3_p4_gv_decoys():
    out = run_p3(4, "1011", seed=7, decoy_subroutine=Subroutine.GV)
    assert out.decoded == "1011"
    out = run_p4(4, "10110100", seed=7, decoy_subroutine=Subroutine.GV)
    assert out.decoded == "10110100"


def test_p1_explicit_permutation():
    pi = Permutation((3, 1, 0, 2))
    out = run_p1(4, "1011", pi=pi, seed=8)
    assert out.decoded == "1011"


# -- attacks routed through sessions -----------------------------------------

def test_x_flip_on_p2_flips_second_dibit_bits():
    msg = "1001110010"
    attack = AttackStrategy(AttackKind.X_FLIP_ALL, target_leg="alice->bob")
    out = run_p2(5, msg, attack=attack, seed=4)
    assert not out.aborted  # whole-pair decoys are blind to collective X
    expected = "".join(
        b if i % 2 == 0 else str(1 - int(b)) for i, b in enumerate(msg)
    )
    assert out.decoded == expected
    assert out.attack_report.leg_error_rate == 0.0
    assert not out.attack_report.detected


def test_x_flip_caught_by_redundant_qubits():
    attack = AttackStrategy(AttackKind.X_FLIP_ALL, target_leg="alice->bob")
    for seed in range(10):
        out = run_p2(4, "10110100", attack=attack, seed=seed, redundant=2)
        assert out.aborted
        assert out.abort_leg == "alice->bob:redundant"
        assert out.attack_report.detected


def test_fake_sequence_reveals_plain_message():
    attack = AttackStrategy(AttackKind.CHARLIE_FAKE_SEQUENCE, target_leg="alice->bob")
    detected = 0
    for seed in range(20):
        out = run_clz(6, "101100", attack=attack, seed=seed)
        assert out.attack_report.eve_inferred_bits == "101100"
        assert out.aborted == out.attack_report.detected
        detected += int(out.attack_report.detected)
    # each fake decoy passes the check with probability 1/2, so detection
    # is very likely but not certain at n=6 — and always after the
    # information is already gone
    assert detected >= 14


def test_fake_sequence_on_key_protocol_sees_only_ciphertext():
    attack = AttackStrategy(AttackKind.CHARLIE_FAKE_SEQUENCE, target_leg="alice->bob")
    out = run_hyj(6, "100101", key="010010", attack=attack, seed=1)
    assert out.attack_report.eve_inferred_bits == "110111"  # msg xor key


def test_key_change_goes_undetected():
    attack = AttackStrategy(AttackKind.ALICE_KEY_CHANGE, key_prime="001011")
    out = run_hyj(6, "100101", key="010010", attack=attack, seed=5)
    assert not out.aborted
    assert not out.attack_report.detected
    assert out.decoded == "111100"
    for ev in out.transcript.checks():
        assert ev.passed


def test_wrong_permutation_detected():
    attack = AttackStrategy(AttackKind.ALICE_WRONG_PERMUTATION)
    hits = 0
    for seed in range(40):
        out = run_p1(16, "1011010010110100", attack=attack, seed=seed)
        hits += int(out.attack_report.detected)
        if out.attack_report.detected:
            assert out.aborted and out.abort_leg == "order-confirmation"
    assert hits >= 38


def test_wrong_permutation_on_dense_protocol():
    attack = AttackStrategy(AttackKind.ALICE_WRONG_PERMUTATION)
    hits = 0
    for seed in range(20):
        out = run_p2(8, "10" * 8, attack=attack, seed=seed, confirm_order=True)
        hits += int(out.attack_report.detected)
    assert hits >= 18


def test_premature_decode_yields_noise():
    for protocol, run in (("p2", run_p2), ("p3", run_p3), ("p4", run_p4)):
        attack = AttackStrategy(AttackKind.BOB_PREMATURE_DECODE)
        msg = "10" * (message_length(protocol, 8) // 2)
        errs = []
        for seed in range(40):
            out = run(8, msg, attack=attack, seed=seed)
            assert not out.attack_report.detected
            errs.append(np.mean([a != b for a, b in zip(out.decoded, msg)]))
        assert 0.3 < np.mean(errs) < 0.7


def test_p3_aborts_on_cross_letter_swap_outcomes():
    # heavy intercept-resend on the entangled legs eventually produces a
    # cross-letter outcome pair, which is treated as proof of tampering
    attack = AttackStrategy(AttackKind.INTERCEPT_RESEND)
    saw_swap_abort = False
    for seed in range(60):
        out = run_p3(4, "1011", attack=attack, seed=seed, threshold=0.9)
        assert out.aborted == (out.decoded is None)
        if out.abort_leg == "swap-consistency":
            saw_swap_abort = True
    assert saw_swap_abort
