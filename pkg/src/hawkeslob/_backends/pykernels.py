"""Pure-Python reference implementations of the hot numeric kernels.

Selected at import time when the compiled extension is unavailable (see
``hawkeslob._backends``).  Loop structure mirrors ``_ckernels.pyx`` so both
backends agree to floating-point noise.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"


def exp_recursion(times: np.ndarray, marks: np.ndarray, beta: float) -> np.ndarray:
    """Per-event excitation state R for an exponential kernel.

    R[0] = 0 and R[k] = exp(-beta * (t_k - t_{k-1})) * (v_{k-1} + R[k-1]),
    i.e. R[k] = sum_{j<k} v_j * exp(-beta * (t_k - t_j)).  Unit marks recover
    the classic unmarked recursion.
    """
    n = len(times)
    out = np.empty(n, dtype=np.float64)
    if n == 0:
        return out
    out[0] = 0.0
    r = 0.0
    for k in range(1, n):
        dt = times[k] - times[k - 1]
        if dt < 0:
            raise ValueError("event times must be non-decreasing")
        r = math.exp(-beta * dt) * (marks[k - 1] + r)
        out[k] = r
    return out


def _exp_loglik_1d(times, marks, mu, alpha, beta, T):
    n = len(times)
    ll = 0.0
    comp = mu * T
    aob = alpha / beta
    r = 0.0
    t_prev = 0.0
    for k in range(n):
        t = times[k]
        if k > 0:
            r = math.exp(-beta * (t - t_prev)) * (marks[k - 1] + r)
        lam = mu + alpha * r
        if not lam > 0.0:
            return -math.inf
        ll += math.log(lam)
        comp += aob * marks[k] * (1.0 - math.exp(-beta * (T - t)))
        t_prev = t
    return ll - comp


def exp_loglik(
    times: np.ndarray,
    dims: np.ndarray,
    marks: np.ndarray,
    mu: np.ndarray,
    alpha: np.ndarray,
    beta: np.ndarray,
    T: float,
) -> float:
    """Multivariate exponential-kernel log-likelihood in O(n d^2).

    ``marks`` are the effective (excitation-scaled) marks.  Returns -inf when
    any event sits at non-positive intensity.
    """
    d = len(mu)
    if d == 1:
        return _exp_loglik_1d(
            times, marks, float(mu[0]), float(alpha[0, 0]), float(beta[0, 0]), T
        )
    n = len(times)
    S = np.zeros((d, d), dtype=np.float64)
    aob = alpha / beta
    ll = 0.0
    comp = float(np.sum(mu)) * T
    t_prev = 0.0
    for k in range(n):
        t = times[k]
        i = dims[k]
        v = marks[k]
        if k > 0:
            S *= np.exp(-beta * (t - t_prev))
        lam = mu[i] + float(alpha[i] @ S[i])
        if not lam > 0.0:
            return -math.inf
        ll += math.log(lam)
        comp += v * float(aob[:, i] @ (1.0 - np.exp(-beta[:, i] * (T - t))))
        S[:, i] += v
        t_prev = t
    return ll - comp


def exp_compensator_at_events(
    times: np.ndarray,
    dims: np.ndarray,
    marks: np.ndarray,
    mu_i: float,
    alpha_row: np.ndarray,
    beta_row: np.ndarray,
    target: int,
) -> np.ndarray:
    """Compensator of one dimension, evaluated at that dimension's events.

    One pass over the merged stream: the running integral accumulates the
    closed-form segment contribution of every decayed source state, and the
    value is recorded just before each target-dimension event adds its own
    excitation (left-limit convention).
    """
    d = len(alpha_row)
    n = len(times)
    S = np.zeros(d, dtype=np.float64)
    aob = alpha_row / beta_row
    out = []
    total = 0.0
    t_prev = 0.0
    for k in range(n):
        t = times[k]
        dt = t - t_prev
        if dt > 0:
            decay = np.exp(-beta_row * dt)
            total += mu_i * dt + float(aob @ (S * (1.0 - decay)))
            S *= decay
        if dims[k] == target:
            out.append(total)
        S[dims[k]] += marks[k]
        t_prev = t
    return np.asarray(out, dtype=np.float64)


def exp_loglik_row(
    times: np.ndarray,
    dims: np.ndarray,
    marks: np.ndarray,
    mu_i: float,
    alpha_row: np.ndarray,
    beta_row: np.ndarray,
    target: int,
    T: float,
) -> float:
    """Log-likelihood contribution of one target dimension.

    Dimension i's likelihood depends only on row i of the kernel matrix
    (events of every dimension act as sources, only dimension-i events are
    scored), which is what makes per-row MLE separable.
    """
    d = len(alpha_row)
    n = len(times)
    S = np.zeros(d, dtype=np.float64)
    aob = alpha_row / beta_row
    ll = 0.0
    comp = mu_i * T
    t_prev = 0.0
    for k in range(n):
        t = times[k]
        j = dims[k]
        dt = t - t_prev
        if dt > 0:
            S *= np.exp(-beta_row * dt)
        if j == target:
            lam = mu_i + float(alpha_row @ S)
            if not lam > 0.0:
                return -math.inf
            ll += math.log(lam)
        comp += marks[k] * aob[j] * (1.0 - math.exp(-beta_row[j] * (T - t)))
        S[j] += marks[k]
        t_prev = t
    return ll - comp


def powerlaw_loglik_1d(
    times: np.ndarray,
    marks: np.ndarray,
    mu: float,
    alpha: float,
    c: float,
    gamma: float,
    T: float,
    window: float,
) -> float:
    """Univariate power-law log-likelihood, direct sum over pairs.

    ``window`` truncates the excitation lookback (pass +inf for the exact
    sum); the compensator term is always exact.
    """
    if mu <= 0.0 or alpha < 0.0 or c <= 0.0 or gamma <= 1.0:
        return -math.inf
    n = len(times)
    ll = 0.0
    for k in range(n):
        t = times[k]
        lo = 0
        if window < math.inf:
            lo = int(np.searchsorted(times, t - window, side="left"))
        u = t - times[lo:k]
        s = float(np.sum(marks[lo:k] * (1.0 + u / c) ** (-gamma)))
        lam = mu + alpha * s
        if not lam > 0.0:
            return -math.inf
        ll += math.log(lam)
    mass = alpha * c / (gamma - 1.0)
    comp = mu * T + mass * float(
        np.sum(marks * (1.0 - (1.0 + (T - times) / c) ** (1.0 - gamma)))
    )
    return ll - comp


def exp_loglik_grad_1d(
    times: np.ndarray,
    marks: np.ndarray,
    mu: float,
    alpha: float,
    beta: float,
    T: float,
) -> tuple[float, np.ndarray]:
    """Univariate exponential log-likelihood and its gradient in (mu, alpha, beta).

    Companion state B[k] = sum_{j<k} v_j (t_k - t_j) exp(-beta (t_k - t_j))
    gives the beta-derivative of the excitation recursion.
    """
    n = len(times)
    ll = 0.0
    dmu = -T
    dalpha = 0.0
    dbeta = 0.0
    r = 0.0
    b = 0.0
    t_prev = 0.0
    for k in range(n):
        t = times[k]
        if k > 0:
            dt = t - t_prev
            e = math.exp(-beta * dt)
            b = e * (b + dt * (r + marks[k - 1]))
            r = e * (marks[k - 1] + r)
        lam = mu + alpha * r
        if not lam > 0.0:
            return -math.inf, np.zeros(3)
        inv = 1.0 / lam
        ll += math.log(lam)
        dmu += inv
        dalpha += r * inv
        dbeta -= alpha * b * inv
        t_prev = t
    # compensator and its derivatives
    tail = T - times
    decay = np.exp(-beta * tail)
    g = float(np.sum(marks * (1.0 - decay)))
    h = float(np.sum(marks * tail * decay))
    ll -= mu * T + (alpha / beta) * g
    dalpha -= g / beta
    dbeta -= alpha * (h / beta - g / (beta * beta))
    return ll, np.array([dmu, dalpha, dbeta])
