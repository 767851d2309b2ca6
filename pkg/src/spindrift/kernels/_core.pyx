# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: dipolar moment sums and the implicit PDE stepper.

Contracts mirror spindrift.kernels._ref; dispatch happens in
spindrift.kernels at import time.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def weighted_d2_sums(double[:, ::1] unit, double[::1] inv_r3,
                     double[::1] weight, double[:, ::1] dirs):
    cdef Py_ssize_t n = unit.shape[0], m = dirs.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(m)
    cdef double[::1] ov = out
    cdef Py_ssize_t k, o
    cdef double px, py, pz, c, g
    for o in range(m):
        px = dirs[o, 0]; py = dirs[o, 1]; pz = dirs[o, 2]
        for k in range(n):
            c = unit[k, 0] * px + unit[k, 1] * py + unit[k, 2] * pz
            g = (3.0 * c * c - 1.0) * 0.5 * inv_r3[k]
            ov[o] += weight[k] * g * g
    return out


def zq_detuning_sums(double[:, ::1] i_unit, double[::1] i_inv_r3,
                     double[:, ::1] j_unit, double[::1] j_inv_r3,
                     long[::1] offsets,
                     double[:, ::1] t_unit, double[::1] t_inv_r3,
                     double[:, ::1] dirs, bint rate_weighted):
    cdef Py_ssize_t n_t = offsets.shape[0] - 1, m = dirs.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(m)
    cdef double[::1] ov = out
    cdef Py_ssize_t t, k, o
    cdef double px, py, pz, ci, cj, gi, gj, d, acc, wsum, w, gt
    if n_t == 0:
        return out
    for o in range(m):
        px = dirs[o, 0]; py = dirs[o, 1]; pz = dirs[o, 2]
        acc = 0.0
        wsum = 0.0
        for t in range(n_t):
            d = 0.0
            for k in range(offsets[t], offsets[t + 1]):
                ci = i_unit[k, 0] * px + i_unit[k, 1] * py + i_unit[k, 2] * pz
                gi = (3.0 * ci * ci - 1.0) * 0.5 * i_inv_r3[k]
                cj = j_unit[k, 0] * px + j_unit[k, 1] * py + j_unit[k, 2] * pz
                gj = (3.0 * cj * cj - 1.0) * 0.5 * j_inv_r3[k]
                d += (gi - gj) * (gi - gj)
            if rate_weighted:
                ci = t_unit[t, 0] * px + t_unit[t, 1] * py + t_unit[t, 2] * pz
                gt = (3.0 * ci * ci - 1.0) * 0.5 * t_inv_r3[t]
                w = gt * gt
            else:
                w = 1.0
            acc += w * d
            wsum += w
        if wsum > 0.0:
            ov[o] = acc / wsum
    return out


def be_relax_steps(double[::1] sub, double[::1] dia, double[::1] sup,
                   double[::1] q, double[::1] bcoef, double[::1] btarget,
                   double[::1] relax, double[::1] p, double[::1] vol,
                   double shell_sum, double inv_vtot, Py_ssize_t n_steps):
    cdef Py_ssize_t n = p.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] avgs = np.empty(n_steps)
    cdef double[::1] av = avgs
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cp_ = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dp_ = np.empty(n)
    cdef double[::1] cp = cp_
    cdef double[::1] dp = dp_
    cdef Py_ssize_t s, i
    cdef double m, acc, g
    # increment form with flux-difference right-hand side: uniform fields are
    # stationary bit-exactly, keeping conservation at huge diffusion numbers
    for s in range(n_steps):
        g = bcoef[0] * (btarget[0] - p[0])
        if n > 1:
            g -= sup[0] * (p[1] - p[0])
        cp[0] = sup[0] / dia[0]
        dp[0] = g / dia[0]
        for i in range(1, n):
            g = bcoef[i] * (btarget[i] - p[i]) - sub[i] * (p[i - 1] - p[i])
            if i < n - 1:
                g -= sup[i] * (p[i + 1] - p[i])
            m = dia[i] - sub[i] * cp[i - 1]
            cp[i] = sup[i] / m
            dp[i] = (g - sub[i] * dp[i - 1]) / m
        p[n - 1] = (p[n - 1] + dp[n - 1]) * relax[n - 1]
        for i in range(n - 2, -1, -1):
            dp[i] = dp[i] - cp[i] * dp[i + 1]
            p[i] = (p[i] + dp[i]) * relax[i]
        acc = shell_sum
        for i in range(n):
            acc += p[i] * vol[i]
        av[s] = acc * inv_vtot
    return avgs
