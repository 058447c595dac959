"""Goodness-of-fit via time-rescaling residuals, KS testing, QQ data,
autocorrelation, and model-comparison summaries."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backends as bk
from .fitting import (
    FitResult,
    _effective_marks,
    _exp_arrays,
    _mass_remaining,
    _require_dims,
    _require_linear,
    log_likelihood,
)
from .models import EventStream, HawkesModel

__all__ = [
    "DiagnosticsReport",
    "ComparisonRow",
    "rescaled_residuals",
    "uniform_residuals",
    "ks_statistic",
    "KsResult",
    "acf",
    "compare_models",
    "build_report",
]


def rescaled_residuals(
    model: HawkesModel, stream: EventStream, i: int
) -> np.ndarray:
    """Time-rescaling residuals tau_k = Lambda_i(T_k) - Lambda_i(T_{k-1})
    over the dimension-i event times (T_0 = 0).

    Under the true generating model these are i.i.d. Exponential(1).  The
    compensator runs over the full multivariate history; an empty stream
    yields an empty sequence.
    """
    _require_linear(model)
    _require_dims(model, stream)
    if not 0 <= i < model.d:
        raise IndexError(f"dimension {i} out of range for d={model.d}")
    if len(stream) == 0:
        return np.empty(0)
    marks_eff = _effective_marks(model, stream)
    exp_ab = _exp_arrays(model)
    if exp_ab is not None:
        alpha, beta = exp_ab
        lam_values = bk.exp_compensator_at_events(
            stream.times, stream.dims, marks_eff,
            float(model.mu[i]), alpha[i], beta[i], i,
        )
    else:
        lam_values = _compensator_at_events_generic(model, stream, marks_eff, i)
    return np.diff(lam_values, prepend=0.0)


def _compensator_at_events_generic(model, stream, marks_eff, i) -> np.ndarray:
    times, dims = stream.times, stream.dims
    targets = np.flatnonzero(dims == i)
    out = np.empty(len(targets))
    for m, k in enumerate(targets):
        t = times[k]
        total = float(model.mu[i]) * t
        for j in range(model.d):
            sel = dims[:k] == j
            if np.any(sel):
                u = t - times[:k][sel]
                total += float(
                    np.sum(_mass_remaining(model.kernels[i][j], u)
                           * marks_eff[:k][sel])
                )
        out[m] = total
    return out


def uniform_residuals(tau: np.ndarray) -> np.ndarray:
    """Probability-integral transform U_k = 1 - exp(-tau_k) onto [0, 1)."""
    tau = np.asarray(tau, dtype=np.float64)
    if np.any(tau < 0):
        raise ValueError("residuals must be >= 0")
    return 1.0 - np.exp(-tau)


@dataclass(frozen=True)
class KsResult:
    stat: float
    pvalue: float


def _kolmogorov_sf(lam: float) -> float:
    """Asymptotic Kolmogorov survival Q(lam) = 2 sum (-1)^(k-1) exp(-2 k^2 lam^2),
    truncated when terms drop below 1e-10.  The series is ill-conditioned for
    tiny lam where the true value is 1 to double precision."""
    if lam < 0.2:
        return 1.0
    total = 0.0
    sign = 1.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * lam * lam)
        if term < 1e-10:
            break
        total += sign * term
        sign = -sign
        k += 1
    return min(1.0, max(0.0, 2.0 * total))


def ks_statistic(sample: np.ndarray, reference: str = "exp1") -> KsResult:
    """One-sample KS statistic and asymptotic p-value.

    D_n = max_k max(|F(x_k) - (k-1)/n|, |F(x_k) - k/n|) over the sorted
    sample; the p-value uses the Kolmogorov series with the small-sample
    effective lambda (sqrt(n) + 0.12 + 0.11/sqrt(n)) D_n.
    """
    sample = np.sort(np.asarray(sample, dtype=np.float64))
    n = len(sample)
    if n == 0:
        raise ValueError("KS test needs at least one observation")
    if reference == "exp1":
        cdf = 1.0 - np.exp(-np.maximum(sample, 0.0))
    elif reference == "uniform01":
        cdf = np.clip(sample, 0.0, 1.0)
    else:
        raise ValueError(f"unknown reference {reference!r}")
    grid = np.arange(n, dtype=np.float64)
    d_lo = np.abs(cdf - grid / n)
    d_hi = np.abs(cdf - (grid + 1.0) / n)
    stat = float(np.max(np.maximum(d_lo, d_hi)))
    sqrt_n = math.sqrt(n)
    lam = (sqrt_n + 0.12 + 0.11 / sqrt_n) * stat
    return KsResult(stat=stat, pvalue=_kolmogorov_sf(lam))


def acf(series: np.ndarray, max_lag: int) -> np.ndarray:
    """Sample autocorrelation for lags 0..max_lag with the biased (1/n)
    normalization, so the sequence is positive semi-definite and acf[0] = 1."""
    x = np.asarray(series, dtype=np.float64)
    n = len(x)
    if n <= max_lag:
        raise ValueError(f"series length {n} must exceed max_lag {max_lag}")
    xc = x - np.mean(x)
    denom = float(np.dot(xc, xc))
    if denom <= 0.0:
        raise ValueError("series has zero variance")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = float(np.dot(xc[:-k], xc[k:])) / denom
    return out


def _pooled_residuals(model: HawkesModel, stream: EventStream) -> np.ndarray:
    return np.concatenate(
        [rescaled_residuals(model, stream, i) for i in range(model.d)]
    )


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    nll_per_event: float
    ks_stat: float
    acf1: float
    aic: float


def compare_models(fits: list[FitResult], stream: EventStream) -> list[ComparisonRow]:
    """Rank fitted models on one stream by AIC ascending (ties by name).

    Residual statistics pool the per-dimension rescaled residuals in
    dimension order.
    """
    for fit in fits:
        if fit.horizon != stream.horizon:
            raise ValueError(
                f"fit {fit.label!r} has horizon {fit.horizon}, "
                f"stream has {stream.horizon}"
            )
    rows = []
    for fit in fits:
        tau = _pooled_residuals(fit.model, stream)
        ks = ks_statistic(tau, "exp1")
        acf1 = float(acf(tau, 1)[1]) if len(tau) > 1 else 0.0
        rows.append(
            ComparisonRow(
                name=fit.label or fit.kernel_family,
                nll_per_event=fit.nll_per_event,
                ks_stat=ks.stat,
                acf1=acf1,
                aic=fit.aic,
            )
        )
    return sorted(rows, key=lambda r: (r.aic, r.name))


@dataclass(frozen=True)
class DiagnosticsReport:
    dim: int
    residuals: np.ndarray
    uniforms: np.ndarray
    ks_stat: float
    ks_pvalue: float
    acf: np.ndarray
    qq_theoretical: np.ndarray
    qq_empirical: np.ndarray
    aic: float
    loglik: float


def build_report(
    model: HawkesModel, stream: EventStream, dim: int = 0, max_lag: int = 20
) -> DiagnosticsReport:
    """Full diagnostics for one dimension of a stream under a model.

    QQ pairs use plotting positions (k - 1/2)/n against Exponential(1)
    quantiles; AIC counts the model's point-process parameters.
    """
    tau = rescaled_residuals(model, stream, dim)
    uniforms = uniform_residuals(tau)
    n = len(tau)
    if n == 0:
        raise ValueError("cannot diagnose an empty residual sequence")
    ks = ks_statistic(tau, "exp1")
    lag = min(max_lag, n - 1)
    try:
        acf_values = acf(tau, lag) if lag >= 1 else np.array([1.0])
    except ValueError:
        acf_values = np.array([1.0])
    positions = (np.arange(1, n + 1) - 0.5) / n
    ll = log_likelihood(model, stream)
    return DiagnosticsReport(
        dim=dim,
        residuals=tau,
        uniforms=uniforms,
        ks_stat=ks.stat,
        ks_pvalue=ks.pvalue,
        acf=acf_values,
        qq_theoretical=-np.log(1.0 - positions),
        qq_empirical=np.sort(tau),
        aic=2.0 * model.free_parameter_count - 2.0 * ll,
        loglik=ll,
    )
