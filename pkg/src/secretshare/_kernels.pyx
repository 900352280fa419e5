# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Semantics must stay identical to ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()

BACKEND = "compiled"


def enumerate_counts(const int[:, :, :, ::1] contrib):
    """Sum per-cell contributions over every decoding table.

    ``contrib[f, c, k, d]`` is the score vector gained when cell ``c`` of
    encoder pair ``f`` is decoded to choice ``k``. Decoding tables are indexed
    in mixed radix with cell 0 as the least significant digit.
    """
    cdef Py_ssize_t F = contrib.shape[0], C = contrib.shape[1]
    cdef Py_ssize_t K = contrib.shape[2], D = contrib.shape[3]
    cdef Py_ssize_t H = K ** C
    out_arr = np.zeros((F, H, D), dtype=np.intc)
    cdef int[:, :, ::1] out = out_arr
    cdef int[::1] digit = np.zeros(C, dtype=np.intc)
    cdef int[::1] acc = np.zeros(D, dtype=np.intc)
    cdef Py_ssize_t f, h, c, d
    with nogil:
        for f in range(F):
            for c in range(C):
                digit[c] = 0
            for d in range(D):
                acc[d] = 0
                for c in range(C):
                    acc[d] += contrib[f, c, 0, d]
            for h in range(H):
                for d in range(D):
                    out[f, h, d] = acc[d]
                # odometer increment, keeping ``acc`` in sync
                c = 0
                while c < C:
                    for d in range(D):
                        acc[d] -= contrib[f, c, digit[c], d]
                    if digit[c] + 1 < K:
                        digit[c] += 1
                        for d in range(D):
                            acc[d] += contrib[f, c, digit[c], d]
                        break
                    digit[c] = 0
                    for d in range(D):
                        acc[d] += contrib[f, c, 0, d]
                    c += 1
    return out_arr


cdef inline void _element(int kind, double param, double complex* m) noexcept nogil:
    cdef double c2, s2
    if kind == 1:
        c2 = cos(2 * param)
        s2 = sin(2 * param)
        m[0] = c2
        m[1] = s2
        m[2] = s2
        m[3] = -c2
    elif kind == 2:
        m[0] = 1
        m[1] = 0
        m[2] = 0
        m[3] = cos(param) + 1j * sin(param)
    else:
        m[0] = 1
        m[1] = 0
        m[2] = 0
        m[3] = 1


cdef inline void _chain(const signed char[:] kinds, const double[:] params,
                        double complex* w) noexcept nogil:
    cdef double complex m[4]
    cdef double complex t0, t1, t2, t3
    cdef Py_ssize_t j
    w[0] = 1
    w[1] = 0
    w[2] = 0
    w[3] = 1
    for j in range(kinds.shape[0]):
        if kinds[j] == 0:
            continue
        _element(kinds[j], params[j], m)
        t0 = m[0] * w[0] + m[1] * w[2]
        t1 = m[0] * w[1] + m[1] * w[3]
        t2 = m[2] * w[0] + m[3] * w[2]
        t3 = m[2] * w[1] + m[3] * w[3]
        w[0] = t0
        w[1] = t1
        w[2] = t2
        w[3] = t3


def propagate(const signed char[:, :] kinds1, const double[:, :] params1,
              const signed char[:, :] kinds2, const double[:, :] params2,
              const double complex[::1] source, int meas_kind):
    """Outcome probabilities of every event's optical pipeline.

    Each row of ``kinds``/``params`` lists the elements one qubit meets in
    order (0 absent, 1 half-wave plate at angle ``param``, 2 phase shifter
    with phase ``param``). ``meas_kind`` 0 is the polarisation basis on both
    photons (outcome ``2*o1 + o2``), 1 the partial Bell analyser
    (phi+, phi-, rest).
    """
    cdef Py_ssize_t N = kinds1.shape[0]
    cdef Py_ssize_t K = 4 if meas_kind == 0 else 3
    probs_arr = np.empty((N, K), dtype=np.float64)
    cdef double[:, ::1] probs = probs_arr
    cdef double complex w1[4]
    cdef double complex w2[4]
    cdef double complex psi[4]
    cdef double complex a, b
    cdef Py_ssize_t n, i, j, k, l
    with nogil:
        for n in range(N):
            _chain(kinds1[n], params1[n], w1)
            _chain(kinds2[n], params2[n], w2)
            for i in range(2):
                for j in range(2):
                    a = 0
                    for k in range(2):
                        for l in range(2):
                            a = a + w1[2 * i + k] * w2[2 * j + l] * source[2 * k + l]
                    psi[2 * i + j] = a
            if meas_kind == 0:
                for k in range(4):
                    probs[n, k] = psi[k].real * psi[k].real + psi[k].imag * psi[k].imag
            else:
                a = psi[0] + psi[3]
                b = psi[0] - psi[3]
                probs[n, 0] = 0.5 * (a.real * a.real + a.imag * a.imag)
                probs[n, 1] = 0.5 * (b.real * b.real + b.imag * b.imag)
                probs[n, 2] = (psi[1].real * psi[1].real + psi[1].imag * psi[1].imag
                               + psi[2].real * psi[2].real + psi[2].imag * psi[2].imag)
    return probs_arr
