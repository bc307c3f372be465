# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled gate kernels. Same contract as qshop.kernels._fallback."""

BACKEND = "cython"


def apply_1q(double complex[::1] amps, double complex m00, double complex m01,
             double complex m10, double complex m11, int target):
    cdef Py_ssize_t n = amps.shape[0]
    cdef Py_ssize_t low = 1 << target
    cdef Py_ssize_t block = low << 1
    cdef Py_ssize_t base, j, i0, i1
    cdef double complex a0, a1
    for base in range(0, n, block):
        for j in range(low):
            i0 = base + j
            i1 = i0 + low
            a0 = amps[i0]
            a1 = amps[i1]
            amps[i0] = m00 * a0 + m01 * a1
            amps[i1] = m10 * a0 + m11 * a1


def apply_cnot(double complex[::1] amps, int control, int target):
    cdef Py_ssize_t n = amps.shape[0]
    cdef Py_ssize_t cbit = 1 << control
    cdef Py_ssize_t tbit = 1 << target
    cdef Py_ssize_t i, j
    cdef double complex tmp
    for i in range(n):
        if (i & cbit) and not (i & tbit):
            j = i | tbit
            tmp = amps[i]
            amps[i] = amps[j]
            amps[j] = tmp


def prob_one(double complex[::1] amps, int target):
    cdef Py_ssize_t n = amps.shape[0]
    cdef Py_ssize_t tbit = 1 << target
    cdef Py_ssize_t i
    cdef double p = 0.0
    cdef double complex a
    for i in range(n):
        if i & tbit:
            a = amps[i]
            p += a.real * a.real + a.imag * a.imag
    return p


def collapse(double complex[::1] amps, int target, int outcome, double norm):
    cdef Py_ssize_t n = amps.shape[0]
    cdef Py_ssize_t tbit = 1 << target
    cdef Py_ssize_t i
    cdef double scale = 1.0 / norm
    cdef int keep
    for i in range(n):
        keep = 1 if (i & tbit) else 0
        if keep != outcome:
            amps[i] = 0.0
        else:
            amps[i] = amps[i] * scale
