"""Compare the compiled and pure-Python state-vector kernels.

Usage: python benchmarks/bench_kernels.py [--qubits N] [--reps R]

Times the four kernel primitives on an N-qubit state and a full honest
session of each protocol under both backends (set via QSHOP_KERNELS).
"""
import argparse
import importlib
import os
import subprocess
import sys
import time

import numpy as np


def bench_kernels(mod, n, reps):
    rng = np.random.default_rng(0)
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    amps /= np.linalg.norm(amps)
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    results = {}

    t0 = time.perf_counter()
    for i in range(reps):
        mod.apply_1q(amps, h[0, 0], h[0, 1], h[1, 0], h[1, 1], i % n)
    results["apply_1q"] = (time.perf_counter() - t0) / reps

    t0 = time.perf_counter()
    for i in range(reps):
        mod.apply_cnot(amps, i % n, (i + 1) % n)
    results["apply_cnot"] = (time.perf_counter() - t0) / reps

    t0 = time.perf_counter()
    for i in range(reps):
        mod.prob_one(amps, i % n)
    results["prob_one"] = (time.perf_counter() - t0) / reps
    return results


def bench_sessions(backend, n, trials):
    """Run the protocol suite in a subprocess pinned to one backend."""
    code = (
        "import time, numpy as np\n"
        "from qshop.protocols import RUNNERS, message_length\n"
        "from qshop import kernels\n"
        f"n, trials = {n}, {trials}\n"
        "t0 = time.perf_counter()\n"
        "for name, run in RUNNERS.items():\n"
        "    m = '01' * (message_length(name, n) // 2)\n"
        "    for s in range(trials):\n"
        "        run(n, m, seed=s)\n"
        "print(kernels.BACKEND, (time.perf_counter() - t0) / (trials * len(RUNNERS)))\n"
    )
    env = dict(os.environ, QSHOP_KERNELS=backend)
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    used, per_session = out.stdout.split()
    return used, float(per_session)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--qubits", type=int, default=16)
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--session-n", type=int, default=8)
    ap.add_argument("--session-trials", type=int, default=30)
    args = ap.parse_args()

    from qshop.kernels import _fallback

    rows = {"python": bench_kernels(_fallback, args.qubits, args.reps)}
    try:
        _core = importlib.import_module("qshop.kernels._core")
        rows["cython"] = bench_kernels(_core, args.qubits, args.reps)
    except ImportError:
        print("compiled kernels unavailable; benchmarking fallback only")

    print(f"kernel primitives on a {args.qubits}-qubit state ({args.reps} reps):")
    for op in ("apply_1q", "apply_cnot", "prob_one"):
        line = f"  {op:10s}"
        for backend, r in rows.items():
            line += f"  {backend}={r[op] * 1e6:9.2f} us"
        if len(rows) == 2:
            line += f"  speedup={rows['python'][op] / rows['cython'][op]:5.2f}x"
        print(line)

    print(f"\nfull sessions (n={args.session_n}, {args.session_trials} trials x 6 protocols):")
    session = {}
    for backend in rows:
        used, per = bench_sessions("py" if backend == "python" else "c", args.session_n,
                                   args.session_trials)
        session[used] = per
        print(f"  {used:7s} {per * 1e3:7.2f} ms/session")
    if len(session) == 2:
        print(f"  speedup={session['python'] / session['cython']:5.2f}x")


if __name__ == "__main__":
    main()
