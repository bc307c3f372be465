import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qshop import kernels
from qshop.errors import CapacityError
from qshop.qsim import (
    ALGEBRA_TOL,
    BellKind,
    HADAMARD,
    MAX_QUBITS,
    MeasBasis,
    NORM_TOL,
    PauliOp,
    StateVector,
    apply_cnot,
    apply_single,
    bell_state,
    inner_product,
    ket,
    measure,
    new_register,
    outcome_probabilities,
    party_rng,
    states_equal,
)

RNG = np.random.default_rng(1234)


def random_state(n, rng=RNG):
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    amps /= np.linalg.norm(amps)
    return StateVector(n, amps)


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")


def test_new_register_and_cap():
    sv = new_register(3)
    assert sv.num_qubits == 3
    assert sv.amplitudes[0] == 1.0
    assert abs(sv.norm - 1.0) < NORM_TOL
    with pytest.raises(CapacityError):
        new_register(MAX_QUBITS + 1)
    with pytest.raises(ValueError):
        new_register(-1)


def test_ket_little_endian():
    # leftmost label char is qubit 0 = least significant bit
    sv = ket("10")
    assert sv.amplitudes[1] == 1.0
    sv = ket("01")
    assert sv.amplitudes[2] == 1.0
    with pytest.raises(ValueError):
        ket("0x1")


def test_bell_state_conventions():
    s = 1 / math.sqrt(2)
    np.testing.assert_allclose(
        bell_state(BellKind.PSI_PLUS).amplitudes, [s, 0, 0, s], atol=ALGEBRA_TOL
    )
    np.testing.assert_allclose(
        bell_state(BellKind.PSI_MINUS).amplitudes, [s, 0, 0, -s], atol=ALGEBRA_TOL
    )
    np.testing.assert_allclose(
        bell_state(BellKind.PHI_PLUS).amplitudes, [0, s, s, 0], atol=ALGEBRA_TOL
    )
    np.testing.assert_allclose(
        bell_state(BellKind.PHI_MINUS).amplitudes, [0, -s, s, 0], atol=ALGEBRA_TOL
    )


def test_bell_letters_and_signs():
    assert BellKind.PSI_PLUS.letter == "psi" and BellKind.PSI_PLUS.sign == 1
    assert BellKind.PHI_MINUS.letter == "phi" and BellKind.PHI_MINUS.sign == -1


def test_iy_matrix():
    # iY|0> = -|1>, iY|1> = |0>
    m = PauliOp.IY.matrix
    np.testing.assert_allclose(m, [[0, 1], [-1, 0]], atol=ALGEBRA_TOL)
    out = apply_single(ket("0"), PauliOp.IY, 0)
    np.testing.assert_allclose(out.amplitudes, [0, -1], atol=ALGEBRA_TOL)
    assert states_equal(out, ket("1"))  # up to global phase


def test_pauli_algebra():
    x, z, iy = PauliOp.X.matrix, PauliOp.Z.matrix, PauliOp.IY.matrix
    np.testing.assert_allclose(z @ x, iy, atol=ALGEBRA_TOL)
    np.testing.assert_allclose(iy @ iy, -np.eye(2), atol=ALGEBRA_TOL)


def test_apply_single_targets_right_qubit():
    sv = ket("00")
    out = apply_single(sv, PauliOp.X, 1)
    assert states_equal(out, ket("01"))
    out = apply_single(sv, PauliOp.X, 0)
    assert states_equal(out, ket("10"))
    with pytest.raises(IndexError):
        apply_single(sv, PauliOp.X, 2)


def test_cnot_truth_table():
    assert states_equal(apply_cnot(ket("10"), 0, 1), ket("11"))
    assert states_equal(apply_cnot(ket("01"), 0, 1), ket("01"))
    assert states_equal(apply_cnot(ket("01"), 1, 0), ket("11"))
    with pytest.raises(ValueError):
        apply_cnot(ket("00"), 0, 0)


def test_bell_from_circuit():
    # H on qubit 0 then CNOT(0 -> 1) builds psi+ from |00>
    sv = apply_single(ket("00"), HADAMARD, 0)
    sv = apply_cnot(sv, 0, 1)
    assert states_equal(sv, bell_state(BellKind.PSI_PLUS))


def test_inner_product_and_equality():
    a = bell_state(BellKind.PSI_PLUS)
    b = StateVector(2, a.amplitudes * np.exp(1j * 0.37))
    assert states_equal(a, b)
    assert abs(inner_product(a, bell_state(BellKind.PSI_MINUS))) < NORM_TOL
    with pytest.raises(ValueError):
        inner_product(a, ket("0"))


def test_measure_computational_deterministic():
    rng = party_rng(0, 0)
    label, post = measure(ket("01"), [1], MeasBasis.COMPUTATIONAL, rng)
    assert label == "1"
    assert states_equal(post, ket("01"))


def test_measure_diagonal():
    rng = party_rng(0, 0)
    plus = apply_single(ket("0"), HADAMARD, 0)
    label, post = measure(plus, [0], MeasBasis.DIAGONAL, rng)
    assert label == "+"
    assert states_equal(post, plus)


def test_measure_bell_identifies_all_four():
    rng = party_rng(3, 0)
    for kind in BellKind:
        label, post = measure(bell_state(kind), [0, 1], MeasBasis.BELL, rng)
        assert label is kind
        assert states_equal(post, bell_state(kind))


def test_measure_argument_errors():
    rng = party_rng(0, 0)
    with pytest.raises(ValueError):
        measure(ket("00"), [0], MeasBasis.BELL, rng)
    with pytest.raises(ValueError):
        measure(ket("00"), [0, 1], MeasBasis.COMPUTATIONAL, rng)
    with pytest.raises(IndexError):
        measure(ket("00"), [5], MeasBasis.COMPUTATIONAL, rng)
    with pytest.raises(ValueError):
        measure(ket("00"), [0, 0], MeasBasis.BELL, rng)


def test_outcome_probabilities_bell():
    probs = outcome_probabilities(bell_state(BellKind.PHI_MINUS), [0, 1], MeasBasis.BELL)
    assert abs(probs[BellKind.PHI_MINUS] - 1.0) < NORM_TOL
    assert abs(sum(probs.values()) - 1.0) < NORM_TOL


def test_outcome_probabilities_single():
    plus = apply_single(ket("0"), HADAMARD, 0)
    probs = outcome_probabilities(plus, [0], MeasBasis.COMPUTATIONAL)
    assert abs(probs["0"] - 0.5) < NORM_TOL
    probs = outcome_probabilities(plus, [0], MeasBasis.DIAGONAL)
    assert abs(probs["+"] - 1.0) < NORM_TOL


def test_party_rng_streams_independent_and_reproducible():
    a1, a2 = party_rng(42, 0), party_rng(42, 0)
    b = party_rng(42, 1)
    xs1, xs2 = a1.random(16), a2.random(16)
    np.testing.assert_array_equal(xs1, xs2)
    assert not np.array_equal(xs1, b.random(16))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.sampled_from(list(PauliOp)), st.integers(0, 10 ** 6))
def test_unitaries_preserve_norm(target, op, seed):
    sv = random_state(4, np.random.default_rng(seed))
    out = apply_single(sv, op, target)
    assert abs(out.norm - 1.0) < NORM_TOL


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_measurement_preserves_norm_and_probability(seed):
    rng = np.random.default_rng(seed)
    sv = random_state(3, rng)
    probs = outcome_probabilities(sv, [1], MeasBasis.COMPUTATIONAL)
    assert abs(sum(probs.values()) - 1.0) < NORM_TOL
    _, post = measure(sv, [1], MeasBasis.COMPUTATIONAL, rng)
    assert abs(post.norm - 1.0) < NORM_TOL


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_bell_probabilities_sum_to_one(seed):
    sv = random_state(3, np.random.default_rng(seed))
    probs = outcome_probabilities(sv, [0, 2], MeasBasis.BELL)
    assert abs(sum(probs.values()) - 1.0) < NORM_TOL


def test_backends_agree():
    from qshop.kernels import _fallback

    rng = np.random.default_rng(5)
    for _ in range(10):
        amps = rng.normal(size=8) + 1j * rng.normal(size=8)
        amps /= np.linalg.norm(amps)
        a, b = amps.copy(), amps.copy()
        m = HADAMARD
        kernels.apply_1q(a, m[0, 0], m[0, 1], m[1, 0], m[1, 1], 1)
        _fallback.apply_1q(b, m[0, 0], m[0, 1], m[1, 0], m[1, 1], 1)
        np.testing.assert_allclose(a, b, atol=ALGEBRA_TOL)
        kernels.apply_cnot(a, 0, 2)
        _fallback.apply_cnot(b, 0, 2)
        np.testing.assert_allclose(a, b, atol=ALGEBRA_TOL)
        assert abs(kernels.prob_one(a, 2) - _fallback.prob_one(b, 2)) < ALGEBRA_TOL


def test_env_var_selects_python_backend():
    import os
    import subprocess
    import sys

    code = (
        "from qshop import kernels\n"
        "from qshop.protocols import run_clz\n"
        "assert kernels.BACKEND == 'python'\n"
        "assert run_clz(4, '1011', seed=0).decoded == '1011'\n"
        "print('ok')\n"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        env=dict(os.environ, QSHOP_KERNELS="py"),
        capture_output=True, text=True,
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "ok"
