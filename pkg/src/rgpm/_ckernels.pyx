# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-step kernels.  Mirrors ``_pykernels`` call for call."""
import numpy as np

from libc.math cimport exp

from .errors import NumericalError

cdef double NEG_VARIANCE_TOL = 1e-9


def gain_row(const double[::1] x, const double[:, ::1] vertices,
             const double[:, ::1] K_I, double sigma2, double length_scale):
    cdef Py_ssize_t P = vertices.shape[0], n = vertices.shape[1]
    cdef Py_ssize_t a, b, i
    cdef double sq, d, acc, inv2l = 1.0 / (2.0 * length_scale)
    kx_arr = np.empty(P)
    J_arr = np.zeros(P)
    cdef double[::1] kx = kx_arr
    cdef double[::1] J = J_arr
    for a in range(P):
        sq = 0.0
        for i in range(n):
            d = vertices[a, i] - x[i]
            sq += d * d
        kx[a] = sigma2 * exp(-sq * inv2l)
    for a in range(P):
        acc = kx[a]
        for b in range(P):
            J[b] += acc * K_I[a, b]
    return kx_arr, J_arr


def measurement_update(double[::1] mu, double[:, ::1] C, const double[:, ::1] K,
                       const double[::1] J, double kxx, double y, double sigma_y2):
    cdef Py_ssize_t P = mu.shape[0]
    cdef Py_ssize_t a, b
    cdef double accC, accK, mean_p = 0.0, jcj = 0.0, jkj = 0.0, var_p, s, innov, va
    CJ_arr = np.empty(P)
    cdef double[::1] CJ = CJ_arr
    for a in range(P):
        accC = 0.0
        accK = 0.0
        for b in range(P):
            accC += C[a, b] * J[b]
            accK += K[a, b] * J[b]
        CJ[a] = accC
        mean_p += J[a] * mu[a]
        jcj += J[a] * accC
        jkj += J[a] * accK
    var_p = kxx + jcj - jkj
    if var_p < 0.0:
        if var_p < -NEG_VARIANCE_TOL:
            raise NumericalError(f"negative predictive variance {var_p:.3e}")
        var_p = 0.0
    s = var_p + sigma_y2
    if not s > 0.0:
        raise NumericalError(f"nonpositive innovation variance {s:.3e}")
    innov = (y - mean_p) / s
    for a in range(P):
        mu[a] += CJ[a] * innov
    # rank-1 downdate written once per pair keeps C exactly symmetric
    for a in range(P):
        va = CJ[a] / s
        for b in range(a, P):
            C[a, b] = 0.5 * (C[a, b] + C[b, a]) - va * CJ[b]
            C[b, a] = C[a, b]
    return mean_p, var_p


def constraint_pass(double[::1] mu, double[:, ::1] C, const double[:, ::1] H,
                    double sign, double activation_bound, double delta_b,
                    double target_bound, Py_ssize_t max_updates, double r_ic, long long[::1] activated):
    cdef Py_ssize_t P = mu.shape[0], R = H.shape[0]
    cdef Py_ssize_t a, b, j
    cdef Py_ssize_t n_up = 0, n_viol = 0
    cdef double acc, s, hm, corr
    t_arr = np.empty(R)
    Ch_arr = np.empty(P)
    cdef double[::1] t = t_arr
    cdef double[::1] Ch = Ch_arr
    for j in range(R):
        acc = 0.0
        for b in range(P):
            acc += H[j, b] * mu[b]
        t[j] = acc
    for j in range(R):
        if sign * (t[j] - activation_bound) > delta_b:
            n_viol += 1
            if n_up >= max_updates:
                continue
            s = r_ic
            hm = 0.0
            for a in range(P):
                acc = 0.0
                for b in range(P):
                    acc += C[a, b] * H[j, b]
                Ch[a] = acc
                s += H[j, a] * acc
                hm += H[j, a] * mu[a]
            if not s > 0.0:
                raise NumericalError(f"nonpositive pseudo-measurement variance {s:.3e}")
            corr = (hm - target_bound) / s
            for a in range(P):
                mu[a] -= Ch[a] * corr
            for a in range(P):
                acc = Ch[a] / s
                for b in range(P):
                    C[a, b] -= acc * Ch[b]
            activated[n_up] = j
            n_up += 1
    return n_up, n_viol
