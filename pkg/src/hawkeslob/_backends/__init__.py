"""Backend selection for the hot numeric kernels.

The compiled Cython extension is preferred; the pure-Python module is the
fallback.  ``HAWKESLOB_BACKEND=python`` (or ``compiled``) forces a choice,
which the benchmark suite uses to compare the two.
"""
from __future__ import annotations

import os

import numpy as np

from . import pykernels as _py

_forced = os.environ.get("HAWKESLOB_BACKEND", "").strip().lower()

if _forced == "python":
    _impl = _py
elif _forced == "compiled":
    from . import _ckernels as _impl  # noqa: F401  (ImportError is the answer)
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _py

BACKEND = _impl.BACKEND_NAME


def backend_name() -> str:
    """Name of the kernel backend selected at import ('compiled' or 'python')."""
    return BACKEND


def _f64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def _i64(x):
    return np.ascontiguousarray(x, dtype=np.int64)


def exp_recursion(times, marks, beta):
    return _impl.exp_recursion(_f64(times), _f64(marks), float(beta))


def exp_loglik(times, dims, marks, mu, alpha, beta, T):
    return _impl.exp_loglik(
        _f64(times), _i64(dims), _f64(marks), _f64(mu),
        _f64(alpha), _f64(beta), float(T),
    )


def exp_compensator_at_events(times, dims, marks, mu_i, alpha_row, beta_row, target):
    return _impl.exp_compensator_at_events(
        _f64(times), _i64(dims), _f64(marks), float(mu_i),
        _f64(alpha_row), _f64(beta_row), int(target),
    )


def exp_loglik_row(times, dims, marks, mu_i, alpha_row, beta_row, target, T):
    return _impl.exp_loglik_row(
        _f64(times), _i64(dims), _f64(marks), float(mu_i),
        _f64(alpha_row), _f64(beta_row), int(target), float(T),
    )


def powerlaw_loglik_1d(times, marks, mu, alpha, c, gamma, T, window):
    return _impl.powerlaw_loglik_1d(
        _f64(times), _f64(marks), float(mu), float(alpha), float(c),
        float(gamma), float(T), float(window),
    )


def exp_loglik_grad_1d(times, marks, mu, alpha, beta, T):
    # gradient path is python-only: it runs once per optimizer step, not per event
    return _py.exp_loglik_grad_1d(
        _f64(times), _f64(marks), float(mu), float(alpha), float(beta), float(T)
    )
