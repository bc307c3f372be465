"""Pure-numpy gate kernels.

All functions mutate the amplitude array in place. Amplitudes are a
contiguous complex128 array of length 2**n with little-endian qubit
indexing (qubit k is bit k of the amplitude index).
"""
import numpy as np

BACKEND = "python"


def _split(amps, target):
    """View amps as (high, 2, low) with the target qubit on the middle axis."""
    n = amps.shape[0]
    low = 1 << target
    return amps.reshape(n // (2 * low), 2, low)


def apply_1q(amps, m00, m01, m10, m11, target):
    """In-place 2x2 unitary on the target qubit."""
    v = _split(amps, target)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    v[:, 0, :] = m00 * a0 + m01 * a1
    v[:, 1, :] = m10 * a0 + m11 * a1


def apply_cnot(amps, control, target):
    """In-place controlled-NOT."""
    n_amp = amps.shape[0]
    idx = np.arange(n_amp)
    mask = (idx >> control) & 1 == 1
    flipped = idx[mask] ^ (1 << target)
    src = amps.copy()
    amps[idx[mask]] = src[flipped]


def prob_one(amps, target):
    """Probability that the target qubit measures 1."""
    v = _split(amps, target)
    return float(np.sum(np.abs(v[:, 1, :]) ** 2))


def collapse(amps, target, outcome, norm):
    """Project the target qubit onto `outcome` and rescale by 1/norm."""
    v = _split(amps, target)
    v[:, 1 - outcome, :] = 0.0
    amps *= 1.0 / norm
