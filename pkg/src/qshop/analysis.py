"""Efficiency accounting and security analysis.

Efficiency of a session ledger (c message bits, q channel qubits, b
non-check classical bits) is reported two ways, both as exact fractions:

* full efficiency  c / (q + b)
* qubit efficiency c / q

Security quantities for the intercept-resend eavesdropper attacking a
fraction f of a leg: information gain f/2 bits per message bit, per-decoy
detection probability f/4, and the break-even threshold f* solving
1 - H(f/4) = f/2 (H the binary entropy), beyond which the disturbance
reveals more than Eve gains.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .protocols import RUNNERS, SessionOutcome, message_length

EXPECTED_EFFICIENCY = {
    "clz": (Fraction(1, 4), Fraction(1, 3)),
    "hyj": (Fraction(1, 5), Fraction(1, 3)),
    "p1": (Fraction(1, 5), Fraction(1, 3)),
    "p2": (Fraction(2, 7), Fraction(2, 5)),
    "p3": (Fraction(1, 8), Fraction(1, 6)),
    "p4": (Fraction(2, 9), Fraction(1, 3)),
}


def efficiency(ledger) -> tuple[Fraction, Fraction]:
    """(full, qubit-only) efficiency of a resource ledger, as exact fractions."""
    return Fraction(ledger.c, ledger.q + ledger.b), Fraction(ledger.c, ledger.q)


def efficiency_row(protocol: str, n: int = 4, seed: int = 0) -> dict:
    """Ledger and efficiencies of one honest run."""
    run = RUNNERS[protocol]
    msg = "01" * (message_length(protocol, n) // 2)
    if len(msg) != message_length(protocol, n):
        msg += "0"
    out: SessionOutcome = run(n, msg, seed=seed)
    if out.aborted:
        raise RuntimeError(f"honest {protocol} run aborted on {out.abort_leg}")
    full, qubit = efficiency(out.ledger)
    return {
        "protocol": protocol,
        "c": out.ledger.c,
        "q": out.ledger.q,
        "b": out.ledger.b,
        "eta_full": full,
        "eta_qubit": qubit,
    }


def efficiency_table(n: int = 4, seed: int = 0) -> list[dict]:
    return [efficiency_row(p, n, seed) for p in RUNNERS]


# ---------------------------------------------------------------------------
# Intercept-resend tradeoff
# ---------------------------------------------------------------------------

def binary_entropy(p: float) -> float:
    """H(p) in bits; H(0) = H(1) = 0."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def eve_information(f: float) -> float:
    """Bits of message information per bit gained by intercepting fraction f."""
    return f / 2.0


def detection_probability(f: float) -> float:
    """Per-decoy error probability induced by intercepting fraction f."""
    return f / 4.0


def entangle_detection_probability(beta: complex) -> float:
    """Per-decoy detection probability of the ancilla-entangling attack."""
    return abs(beta) ** 2 / 2.0


@dataclass(frozen=True)
class ThresholdResult:
    f_star: float
    e_star: float
    residual: float
    iterations: int


def solve_threshold(tol: float = 1e-10, max_iter: int = 200) -> ThresholdResult:
    """Bisection root of 1 - H(f/4) = f/2 on (0.01, 0.99).

    f* is the attacked fraction at which Eve's information gain equals
    the channel's information loss; e* = f*/4 is the matching tolerable
    decoy error rate.
    """
    def g(f: float) -> float:
        return 1.0 - binary_entropy(f / 4.0) - f / 2.0

    lo, hi = 0.01, 0.99
    if g(lo) <= 0.0 or g(hi) >= 0.0:
        raise ValueError("bracket does not straddle the root")
    iterations = 0
    for iterations in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    f_star = 0.5 * (lo + hi)
    return ThresholdResult(f_star, f_star / 4.0, abs(g(f_star)), iterations)


# ---------------------------------------------------------------------------
# Monte-Carlo validators (vectorized; independent of the simulator)
# ---------------------------------------------------------------------------

def simulate_eve_success(m: int = 8, trials: int = 100_000, seed: int = 0) -> float:
    """Empirical probability that Eve's random-basis measurement of a
    uniformly random BB84-state qubit recovers the prepared bit.

    Matching basis reads the bit exactly; mismatched basis yields a
    uniform outcome. Analytic value: 3/4.
    """
    rng = np.random.default_rng(seed)
    prep_basis = rng.integers(0, 2, size=(trials, m))
    eve_basis = rng.integers(0, 2, size=(trials, m))
    coin = rng.integers(0, 2, size=(trials, m))
    correct = (prep_basis == eve_basis) | (coin == 0)
    return float(correct.mean())


def simulate_eve_joint_success(m: int = 8, trials: int = 100_000, seed: int = 0) -> float:
    """Empirical probability that Eve recovers all m qubits of a block.

    Analytic value: (3/4)^m.
    """
    rng = np.random.default_rng(seed)
    prep_basis = rng.integers(0, 2, size=(trials, m))
    eve_basis = rng.integers(0, 2, size=(trials, m))
    coin = rng.integers(0, 2, size=(trials, m))
    correct = (prep_basis == eve_basis) | (coin == 0)
    return float(correct.all(axis=1).mean())


def simulate_decoy_error(f: float = 1.0, m: int = 8, trials: int = 100_000,
                         seed: int = 0) -> float:
    """Empirical per-decoy error rate under intercept-resend of fraction f.

    A decoy errs iff it was attacked, Eve's basis mismatched, and the
    verifier's re-measurement collapsed to the wrong value: f * 1/2 * 1/2.
    """
    rng = np.random.default_rng(seed)
    attacked = rng.random(size=(trials, m)) < f
    mismatch = rng.integers(0, 2, size=(trials, m)) == 1
    flipped = rng.integers(0, 2, size=(trials, m)) == 1
    return float((attacked & mismatch & flipped).mean())


# ---------------------------------------------------------------------------
# Detection aggregation
# ---------------------------------------------------------------------------

def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score confidence interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class DetectionSummary:
    protocol: str
    runs: int
    detected: int
    frequency: float
    ci_low: float
    ci_high: float
    mean_leg_error: float


def aggregate_detection(protocol: str, attack, n: int, runs: int,
                        seed0: int = 0, msg: str | None = None,
                        z: float = 1.96, **kwargs) -> DetectionSummary:
    """Run `runs` attacked sessions (seeds seed0..seed0+runs-1) and
    summarize the detection frequency with a Wilson interval."""
    run = RUNNERS[protocol]
    mlen = message_length(protocol, n)
    msg_rng = np.random.default_rng(seed0 + 7919)
    detected, rates = 0, []
    for i in range(runs):
        m = msg or "".join(str(int(b)) for b in msg_rng.integers(0, 2, size=mlen))
        out = run(n, m, attack=attack, seed=seed0 + i, **kwargs)
        r = out.attack_report
        detected += int(r.detected)
        rates.append(r.leg_error_rate)
    lo, hi = wilson_interval(detected, runs, z)
    return DetectionSummary(
        protocol, runs, detected, detected / runs, lo, hi, float(np.mean(rates))
    )


# ---------------------------------------------------------------------------
# Leakage estimation
# ---------------------------------------------------------------------------

def mutual_information_bits(xs, ys) -> float:
    """Plug-in estimate of I(X;Y) in bits for two paired binary samples."""
    xs = np.asarray(xs, dtype=int)
    ys = np.asarray(ys, dtype=int)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("paired one-dimensional samples required")
    n = xs.size
    if n == 0:
        raise ValueError("empty sample")
    mi = 0.0
    for x in (0, 1):
        px = np.mean(xs == x)
        for y in (0, 1):
            pxy = np.mean((xs == x) & (ys == y))
            py = np.mean(ys == y)
            if pxy > 0.0:
                mi += pxy * math.log2(pxy / (px * py))
    return mi


def fake_sequence_leakage(protocol: str = "hyj", n: int = 6, runs: int = 1000,
                          seed0: int = 0) -> float:
    """Pooled per-bit mutual information between the order and the bits the
    dishonest controller infers via capture-and-substitute."""
    from .adversary import charlie_fake_sequence

    msg_rng = np.random.default_rng(seed0 + 104729)
    msg_bits, inferred_bits = [], []
    for i in range(runs):
        m = "".join(str(int(b)) for b in msg_rng.integers(0, 2, size=n))
        report = charlie_fake_sequence(protocol, n, m, seed=seed0 + i)
        msg_bits.extend(int(c) for c in m)
        inferred_bits.extend(int(c) for c in report.eve_inferred_bits)
    return mutual_information_bits(msg_bits, inferred_bits)
