from fractions import Fraction

import numpy as np
import pytest

from qshop import analysis
from qshop.adversary import AttackKind, AttackStrategy
from qshop.protocols import ResourceLedger


def test_efficiency_exact_fractions():
    full, qubit = analysis.efficiency(ResourceLedger(c=4, q=12, b=4))
    assert full == Fraction(1, 4) and qubit == Fraction(1, 3)
    assert isinstance(full, Fraction)


def test_efficiency_table_matches_expected():
    for row in analysis.efficiency_table(n=4, seed=0):
        exp = analysis.EXPECTED_EFFICIENCY[row["protocol"]]
        assert (row["eta_full"], row["eta_qubit"]) == exp


def test_efficiency_independent_of_n():
    # the ratios are scale-free: a different n gives the same fractions
    for row in analysis.efficiency_table(n=6, seed=3):
        exp = analysis.EXPECTED_EFFICIENCY[row["protocol"]]
        assert (row["eta_full"], row["eta_qubit"]) == exp


def test_binary_entropy():
    assert analysis.binary_entropy(0.0) == 0.0
    assert analysis.binary_entropy(1.0) == 0.0
    assert abs(analysis.binary_entropy(0.5) - 1.0) < 1e-12
    assert abs(analysis.binary_entropy(0.25) - analysis.binary_entropy(0.75)) < 1e-12


def test_tradeoff_curves():
    assert analysis.eve_information(1.0) == 0.5
    assert analysis.detection_probability(1.0) == 0.25
    assert analysis.detection_probability(0.0) == 0.0
    assert analysis.entangle_detection_probability(1.0) == 0.5
    assert analysis.entangle_detection_probability(0.5) == 0.125


def test_solve_threshold():
    t = analysis.solve_threshold()
    assert abs(t.f_star - 0.68) < 0.005
    assert abs(t.e_star - 0.17) < 0.002
    assert t.residual < 1e-10
    assert t.iterations <= 200
    # the root balances information gain against channel disturbance
    lhs = 1.0 - analysis.binary_entropy(t.f_star / 4.0)
    assert abs(lhs - t.f_star / 2.0) < 1e-9


def test_simulate_eve_success():
    p = analysis.simulate_eve_success(m=8, trials=50_000, seed=1)
    assert abs(p - 0.75) < 0.01


def test_simulate_decoy_error():
    assert analysis.simulate_decoy_error(0.0, trials=1000, seed=0) == 0.0
    e = analysis.simulate_decoy_error(1.0, trials=50_000, seed=2)
    assert abs(e - 0.25) < 0.01
    e = analysis.simulate_decoy_error(0.5, trials=50_000, seed=3)
    assert abs(e - 0.125) < 0.01


def test_wilson_interval():
    lo, hi = analysis.wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert hi - lo < 0.21
    lo, hi = analysis.wilson_interval(0, 20)
    assert lo == 0.0 and hi > 0.0
    lo, hi = analysis.wilson_interval(20, 20)
    assert hi == 1.0
    with pytest.raises(ValueError):
        analysis.wilson_interval(1, 0)


def test_aggregate_detection():
    attack = AttackStrategy(AttackKind.INTERCEPT_RESEND, target_leg="charlie->alice")
    summary = analysis.aggregate_detection("clz", attack, n=8, runs=30, seed0=0)
    assert summary.runs == 30
    assert summary.ci_low <= summary.frequency <= summary.ci_high
    assert summary.frequency > 0.3
    assert summary.mean_leg_error > 0.1


def test_mutual_information_extremes():
    rng = np.random.default_rng(0)
    xs = rng.integers(0, 2, size=4000)
    # identical sequences: MI = H(X) ~ 1 bit
    assert analysis.mutual_information_bits(xs, xs) > 0.9
    # independent sequences: MI ~ 0
    ys = rng.integers(0, 2, size=4000)
    assert analysis.mutual_information_bits(xs, ys) < 0.01
    # complement is as informative as identity
    assert analysis.mutual_information_bits(xs, 1 - xs) > 0.9
    with pytest.raises(ValueError):
        analysis.mutual_information_bits([0, 1], [0])
    with pytest.raises(ValueError):
        analysis.mutual_information_bits([], [])


def test_fake_sequence_leakage_masked_by_key():
    mi = analysis.fake_sequence_leakage("hyj", n=6, runs=120, seed0=0)
    assert mi < 0.05


def test_fake_sequence_leakage_unmasked():
    # without the key, the captured bits are the message itself
    mi = analysis.fake_sequence_leakage("clz", n=6, runs=60, seed0=0)
    assert mi > 0.9
