# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simulation kernel; mirrors ``_pykernel.run_trial`` operation for operation."""

import numpy as np

cdef double UNDERFLOW = 1e-300


def run_trial(const double[:, ::1] weights, const double[:, :, ::1] lik,
              const long long[:, ::1] signals, const double[:, ::1] gamma,
              const double[:, ::1] mu0, Py_ssize_t stride):
    cdef Py_ssize_t n = mu0.shape[0], m = mu0.shape[1], steps = signals.shape[0]
    cdef Py_ssize_t i, k, l, t, z, rec
    cdef double g, den, s
    cdef bint clipped
    cdef Py_ssize_t bad_agent = -1, bad_time = -1

    out_arr = np.empty((steps // stride + 1, n, m))
    a_arr = np.array(mu0, dtype=np.float64, copy=True)
    b_arr = np.empty((n, m))
    psi_arr = np.empty((n, m))
    cdef double[:, :, ::1] out = out_arr
    cdef double[:, ::1] cur = a_arr
    cdef double[:, ::1] nxt = b_arr
    cdef double[:, ::1] psi = psi_arr
    cdef double[:, ::1] tmp

    with nogil:
        for k in range(n):
            for t in range(m):
                out[0, k, t] = cur[k, t]
        for i in range(steps):
            for k in range(n):
                g = gamma[i, k]
                if g == 0:
                    for t in range(m):
                        psi[k, t] = cur[k, t]
                    continue
                z = signals[i, k]
                den = 0.0
                for t in range(m):
                    den = den + cur[k, t] * lik[k, t, z]
                if den <= 0:
                    bad_agent = k
                    bad_time = i + 1
                    break
                for t in range(m):
                    psi[k, t] = (1 - g) * cur[k, t] + g * ((cur[k, t] * lik[k, t, z]) / den)
            if bad_agent >= 0:
                break
            for k in range(n):
                for t in range(m):
                    s = 0.0
                    for l in range(n):
                        s = s + weights[l, k] * psi[l, t]
                    nxt[k, t] = s
            for k in range(n):
                clipped = False
                for t in range(m):
                    if nxt[k, t] < UNDERFLOW:
                        clipped = True
                if clipped:
                    for t in range(m):
                        if nxt[k, t] < UNDERFLOW:
                            nxt[k, t] = 0.0
                    s = nxt[k, 0]
                    for t in range(1, m):
                        s = s + nxt[k, t]
                    for t in range(m):
                        nxt[k, t] = nxt[k, t] / s
            tmp = cur
            cur = nxt
            nxt = tmp
            if (i + 1) % stride == 0:
                rec = (i + 1) // stride
                for k in range(n):
                    for t in range(m):
                        out[rec, k, t] = cur[k, t]
    return out_arr, bad_agent, bad_time
