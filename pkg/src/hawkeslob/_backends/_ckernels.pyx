# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: exponential recursion/likelihood, per-dimension
compensators, and the truncated power-law likelihood.

Signatures and loop order match ``pykernels`` exactly; the Python module is
the fallback backend when this extension is not built.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, pow, INFINITY, isnan

cnp.import_array()

BACKEND_NAME = "compiled"


def exp_recursion(const double[::1] times, const double[::1] marks, double beta):
    cdef Py_ssize_t n = times.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k
    cdef double r = 0.0, dt
    if n == 0:
        return out_arr
    out[0] = 0.0
    for k in range(1, n):
        dt = times[k] - times[k - 1]
        if dt < 0:
            raise ValueError("event times must be non-decreasing")
        r = exp(-beta * dt) * (marks[k - 1] + r)
        out[k] = r
    return out_arr


cdef double _exp_loglik_1d(const double[::1] times, const double[::1] marks,
                           double mu, double alpha, double beta, double T):
    cdef Py_ssize_t n = times.shape[0]
    cdef Py_ssize_t k
    cdef double ll = 0.0, comp = mu * T, aob = alpha / beta
    cdef double r = 0.0, t_prev = 0.0, t, lam
    for k in range(n):
        t = times[k]
        if k > 0:
            r = exp(-beta * (t - t_prev)) * (marks[k - 1] + r)
        lam = mu + alpha * r
        if not lam > 0.0:
            return -INFINITY
        ll += log(lam)
        comp += aob * marks[k] * (1.0 - exp(-beta * (T - t)))
        t_prev = t
    return ll - comp


def exp_loglik(const double[::1] times, const long[::1] dims, const double[::1] marks,
               const double[::1] mu, const double[:, ::1] alpha, const double[:, ::1] beta,
               double T):
    cdef Py_ssize_t d = mu.shape[0]
    cdef Py_ssize_t n = times.shape[0]
    if d == 1:
        return _exp_loglik_1d(times, marks, mu[0], alpha[0, 0], beta[0, 0], T)

    S_arr = np.zeros((d, d), dtype=np.float64)
    cdef double[:, ::1] S = S_arr
    cdef Py_ssize_t k, a, b
    cdef long i
    cdef double ll = 0.0, comp = 0.0
    cdef double t_prev = 0.0, t, v, lam, dt
    for a in range(d):
        comp += mu[a]
    comp *= T
    for k in range(n):
        t = times[k]
        i = dims[k]
        v = marks[k]
        if k > 0:
            dt = t - t_prev
            for a in range(d):
                for b in range(d):
                    S[a, b] *= exp(-beta[a, b] * dt)
        lam = mu[i]
        for b in range(d):
            lam += alpha[i, b] * S[i, b]
        if not lam > 0.0:
            return -INFINITY
        ll += log(lam)
        for a in range(d):
            comp += v * (alpha[a, i] / beta[a, i]) * (1.0 - exp(-beta[a, i] * (T - t)))
        for a in range(d):
            S[a, i] += v
        t_prev = t
    return ll - comp


def exp_compensator_at_events(const double[::1] times, const long[::1] dims,
                              const double[::1] marks, double mu_i,
                              const double[::1] alpha_row, const double[::1] beta_row,
                              long target):
    cdef Py_ssize_t d = alpha_row.shape[0]
    cdef Py_ssize_t n = times.shape[0]
    S_arr = np.zeros(d, dtype=np.float64)
    cdef double[::1] S = S_arr
    out_list = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_list
    cdef Py_ssize_t k, a, m = 0
    cdef double total = 0.0, t_prev = 0.0, t, dt, dec
    for k in range(n):
        t = times[k]
        dt = t - t_prev
        if dt > 0:
            total += mu_i * dt
            for a in range(d):
                dec = exp(-beta_row[a] * dt)
                total += (alpha_row[a] / beta_row[a]) * S[a] * (1.0 - dec)
                S[a] *= dec
        if dims[k] == target:
            out[m] = total
            m += 1
        S[dims[k]] += marks[k]
        t_prev = t
    return np.asarray(out_list[:m]).copy()


def exp_loglik_row(const double[::1] times, const long[::1] dims, const double[::1] marks,
                   double mu_i, const double[::1] alpha_row, const double[::1] beta_row,
                   long target, double T):
    cdef Py_ssize_t d = alpha_row.shape[0]
    cdef Py_ssize_t n = times.shape[0]
    S_arr = np.zeros(d, dtype=np.float64)
    cdef double[::1] S = S_arr
    cdef Py_ssize_t k, a
    cdef long j
    cdef double ll = 0.0, comp = mu_i * T
    cdef double t_prev = 0.0, t, dt, lam
    for k in range(n):
        t = times[k]
        j = dims[k]
        dt = t - t_prev
        if dt > 0:
            for a in range(d):
                S[a] *= exp(-beta_row[a] * dt)
        if j == target:
            lam = mu_i
            for a in range(d):
                lam += alpha_row[a] * S[a]
            if not lam > 0.0:
                return -INFINITY
            ll += log(lam)
        comp += marks[k] * (alpha_row[j] / beta_row[j]) * (1.0 - exp(-beta_row[j] * (T - t)))
        S[j] += marks[k]
        t_prev = t
    return ll - comp


def powerlaw_loglik_1d(const double[::1] times, const double[::1] marks,
                       double mu, double alpha, double c, double gamma,
                       double T, double window):
    if mu <= 0.0 or alpha < 0.0 or c <= 0.0 or gamma <= 1.0:
        return -INFINITY
    cdef Py_ssize_t n = times.shape[0]
    cdef Py_ssize_t k, j, lo
    cdef double ll = 0.0, t, s, lam, cutoff, mass, comp
    for k in range(n):
        t = times[k]
        s = 0.0
        cutoff = t - window
        for j in range(k - 1, -1, -1):
            if times[j] < cutoff:
                break
            s += marks[j] * pow(1.0 + (t - times[j]) / c, -gamma)
        lam = mu + alpha * s
        if not lam > 0.0:
            return -INFINITY
        ll += log(lam)
    mass = alpha * c / (gamma - 1.0)
    comp = mu * T
    for k in range(n):
        comp += mass * marks[k] * (1.0 - pow(1.0 + (T - times[k]) / c, 1.0 - gamma))
    return ll - comp
