"""Parameter model, intensity evaluation, and stability analysis for
d-dimensional marked Hawkes processes.

Conventions used throughout the package:

* kernel matrix entry (i, j) is the influence of dimension j on dimension i;
* intensities use the left-limit convention (events strictly before t count);
* excitation marks default to unit mean (``normalize_excitation``), so the
  branching mass of an exponential kernel is alpha/beta regardless of the
  raw mark scale, while raw marks remain available as volumes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ExpKernel",
    "PowerLawKernel",
    "ZeroKernel",
    "LogNormalMarks",
    "ExponentialMarks",
    "DeterministicMarks",
    "IdentityLink",
    "PositivePartLink",
    "SaturatedLinearLink",
    "HawkesModel",
    "EventStream",
    "StabilityError",
    "StabilityReport",
    "excitation_matrix",
    "spectral_radius",
    "stability_check",
    "stationary_mean_intensity",
    "intensity_at",
]


class StabilityError(ValueError):
    """Raised when an operation requires a subcritical model and rho(LG) >= 1."""

    def __init__(self, message: str, rho: float):
        super().__init__(message)
        self.rho = rho


# ---------------------------------------------------------------------------
# Excitation kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpKernel:
    """phi(u) = alpha * exp(-beta * u), branching mass alpha / beta."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")

    def evaluate(self, u):
        u = np.asarray(u, dtype=np.float64)
        if np.any(u < 0):
            raise ValueError("kernel argument must be >= 0")
        return self.alpha * np.exp(-self.beta * u)

    def integral(self) -> float:
        return self.alpha / self.beta


@dataclass(frozen=True)
class PowerLawKernel:
    """phi(u) = alpha * (1 + u/c)^(-gamma), gamma > 1 so the mass
    alpha * c / (gamma - 1) is finite.  Bounded at u = 0 by alpha."""

    alpha: float
    c: float
    gamma: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.c <= 0:
            raise ValueError(f"c must be > 0, got {self.c}")
        if self.gamma <= 1:
            raise ValueError(f"gamma must be > 1 for a finite integral, got {self.gamma}")

    def evaluate(self, u):
        u = np.asarray(u, dtype=np.float64)
        if np.any(u < 0):
            raise ValueError("kernel argument must be >= 0")
        return self.alpha * (1.0 + u / self.c) ** (-self.gamma)

    def integral(self) -> float:
        return self.alpha * self.c / (self.gamma - 1.0)


@dataclass(frozen=True)
class ZeroKernel:
    """No excitation; reduces the dimension pair to Poisson behaviour."""

    def evaluate(self, u):
        u = np.asarray(u, dtype=np.float64)
        if np.any(u < 0):
            raise ValueError("kernel argument must be >= 0")
        return np.zeros_like(u)

    def integral(self) -> float:
        return 0.0


Kernel = ExpKernel | PowerLawKernel | ZeroKernel


# ---------------------------------------------------------------------------
# Mark distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogNormalMarks:
    """log V ~ N(mu_v, sigma_v^2); mean exp(mu_v + sigma_v^2 / 2)."""

    mu_v: float
    sigma_v: float
    normalize_excitation: bool = True

    def __post_init__(self):
        if self.sigma_v <= 0:
            raise ValueError(f"sigma_v must be > 0, got {self.sigma_v}")

    def mean(self) -> float:
        return math.exp(self.mu_v + 0.5 * self.sigma_v**2)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.lognormal(self.mu_v, self.sigma_v, size)


@dataclass(frozen=True)
class ExponentialMarks:
    rate: float
    normalize_excitation: bool = True

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError(f"rate must be > 0, got {self.rate}")

    def mean(self) -> float:
        return 1.0 / self.rate

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.exponential(1.0 / self.rate, size)


@dataclass(frozen=True)
class DeterministicMarks:
    value: float
    normalize_excitation: bool = True

    def __post_init__(self):
        # the mark mean must be finite and strictly positive
        if self.value <= 0:
            raise ValueError(f"value must be > 0, got {self.value}")

    def mean(self) -> float:
        return self.value

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, self.value, dtype=np.float64)


MarkDistribution = LogNormalMarks | ExponentialMarks | DeterministicMarks


def effective_mark_scale(marks: MarkDistribution) -> float:
    """Factor applied to raw marks inside the intensity sum (1/mean when
    excitation is normalized to unit-mean marks, else 1)."""
    return 1.0 / marks.mean() if marks.normalize_excitation else 1.0


def effective_mark_mean(marks: MarkDistribution) -> float:
    return 1.0 if marks.normalize_excitation else marks.mean()


# ---------------------------------------------------------------------------
# Link functions (all 1-Lipschitz and non-decreasing by construction)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityLink:
    lipschitz: float = field(default=1.0, init=False)

    def __call__(self, x: float) -> float:
        return x


@dataclass(frozen=True)
class PositivePartLink:
    floor: float = 0.0
    lipschitz: float = field(default=1.0, init=False)

    def __post_init__(self):
        if self.floor < 0:
            raise ValueError(f"floor must be >= 0, got {self.floor}")

    def __call__(self, x: float) -> float:
        return max(self.floor, x)


@dataclass(frozen=True)
class SaturatedLinearLink:
    cap: float
    lipschitz: float = field(default=1.0, init=False)

    def __post_init__(self):
        if self.cap <= 0:
            raise ValueError(f"cap must be > 0, got {self.cap}")

    def __call__(self, x: float) -> float:
        return min(self.cap, x)


LinkFunction = IdentityLink | PositivePartLink | SaturatedLinearLink


# ---------------------------------------------------------------------------
# Model and event stream
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HawkesModel:
    """Full parameterization of a d-dimensional marked Hawkes process.

    ``kernels[i][j]`` is the excitation of dimension i by events of
    dimension j.  Baselines must be strictly positive; marks and links are
    per dimension.
    """

    mu: np.ndarray
    kernels: tuple[tuple[Kernel, ...], ...]
    marks: tuple[MarkDistribution, ...]
    links: tuple[LinkFunction, ...]

    def __init__(self, mu, kernels, marks=None, links=None):
        mu = np.array(mu, dtype=np.float64, copy=True).reshape(-1)
        d = len(mu)
        if d < 1:
            raise ValueError("model needs at least one dimension")
        if np.any(mu <= 0) or not np.all(np.isfinite(mu)):
            raise ValueError("baseline intensities must all be finite and > 0")
        kernels = tuple(tuple(row) for row in kernels)
        if len(kernels) != d or any(len(row) != d for row in kernels):
            raise ValueError(f"kernel matrix must be exactly {d}x{d}")
        if marks is None:
            marks = tuple(DeterministicMarks(1.0) for _ in range(d))
        else:
            marks = tuple(marks)
        if links is None:
            links = tuple(IdentityLink() for _ in range(d))
        else:
            links = tuple(links)
        if len(marks) != d or len(links) != d:
            raise ValueError(f"marks and links must both have length {d}")
        mu.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "kernels", kernels)
        object.__setattr__(self, "marks", marks)
        object.__setattr__(self, "links", links)

    @property
    def d(self) -> int:
        return len(self.mu)

    @property
    def is_linear(self) -> bool:
        return all(isinstance(link, IdentityLink) for link in self.links)

    @property
    def free_parameter_count(self) -> int:
        """Point-process parameters: baselines plus kernel shape parameters."""
        per_kernel = {ExpKernel: 2, PowerLawKernel: 3, ZeroKernel: 0}
        return self.d + sum(
            per_kernel[type(k)] for row in self.kernels for k in row
        )

    @classmethod
    def exponential(cls, mu, alpha, beta, marks=None, links=None) -> "HawkesModel":
        """Build a model with exponential kernels from (mu, alpha, beta) arrays.

        Scalars are accepted for the univariate case.
        """
        mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
        d = len(mu)
        alpha = np.broadcast_to(np.asarray(alpha, dtype=np.float64), (d, d))
        beta = np.broadcast_to(np.asarray(beta, dtype=np.float64), (d, d))
        kernels = tuple(
            tuple(ExpKernel(float(alpha[i, j]), float(beta[i, j])) for j in range(d))
            for i in range(d)
        )
        return cls(mu, kernels, marks=marks, links=links)

    @classmethod
    def poisson(cls, mu, marks=None) -> "HawkesModel":
        mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
        d = len(mu)
        kernels = tuple(tuple(ZeroKernel() for _ in range(d)) for _ in range(d))
        return cls(mu, kernels, marks=marks)


@dataclass(frozen=True)
class EventStream:
    """Timestamp-sorted marked events across d dimensions on (0, horizon]."""

    times: np.ndarray
    dims: np.ndarray
    marks: np.ndarray
    horizon: float
    d: int

    def __init__(self, times, dims, marks, horizon, d):
        times = np.array(times, dtype=np.float64, copy=True).reshape(-1)
        dims = np.array(dims, dtype=np.int64, copy=True).reshape(-1)
        marks = np.array(marks, dtype=np.float64, copy=True).reshape(-1)
        if not (len(times) == len(dims) == len(marks)):
            raise ValueError("times, dims and marks must have equal length")
        if horizon <= 0:
            raise ValueError(f"horizon must be > 0, got {horizon}")
        if len(times) > 0:
            if np.any(np.diff(times) <= 0):
                raise ValueError("event times must be strictly increasing")
            if times[0] < 0:
                raise ValueError("event times must be >= 0")
            if times[-1] > horizon:
                raise ValueError("event times must not exceed the horizon")
            if np.any(marks < 0):
                raise ValueError("marks must be >= 0")
            if np.any((dims < 0) | (dims >= d)):
                raise ValueError(f"dims must lie in [0, {d})")
        for arr in (times, dims, marks):
            arr.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "marks", marks)
        object.__setattr__(self, "horizon", float(horizon))
        object.__setattr__(self, "d", int(d))

    def __len__(self) -> int:
        return len(self.times)

    def times_of(self, i: int) -> np.ndarray:
        return self.times[self.dims == i]

    def counts(self) -> np.ndarray:
        return np.bincount(self.dims, minlength=self.d)


# ---------------------------------------------------------------------------
# Excitation matrix and stability
# ---------------------------------------------------------------------------

def excitation_matrix(model: HawkesModel) -> np.ndarray:
    """G[i, j] = (effective mark mean of j) * integral(phi_ij)."""
    d = model.d
    mark_means = np.array([effective_mark_mean(m) for m in model.marks])
    G = np.empty((d, d), dtype=np.float64)
    for i in range(d):
        for j in range(d):
            G[i, j] = mark_means[j] * model.kernels[i][j].integral()
    return G


def spectral_radius(G: np.ndarray) -> float:
    """Largest eigenvalue modulus of a square non-negative matrix."""
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {G.shape}")
    if G.shape[0] == 1:
        return abs(float(G[0, 0]))
    return float(np.max(np.abs(np.linalg.eigvals(G))))


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    rho: float        # rho(LG): Lipschitz-weighted spectral radius
    branching: float  # rho(G)


def stability_check(model: HawkesModel) -> StabilityReport:
    """Subcriticality test: stable iff rho(LG) < 1, L = diag(link Lipschitz).

    All link variants are 1-Lipschitz, so rho equals the branching ratio
    rho(G) whenever links are present; the L factor is still applied rather
    than assumed away.
    """
    G = excitation_matrix(model)
    L = np.diag([link.lipschitz for link in model.links])
    rho = spectral_radius(L @ G)
    branching = spectral_radius(G)
    return StabilityReport(stable=rho < 1.0, rho=rho, branching=branching)


def stationary_mean_intensity(model: HawkesModel) -> np.ndarray:
    """Mean intensity vector (I - G)^(-1) mu of the stationary regime.

    Refuses to produce a value for supercritical models.
    """
    report = stability_check(model)
    if not report.stable:
        raise StabilityError(
            f"no stationary regime: rho(LG) = {report.rho:.6g} >= 1", report.rho
        )
    G = excitation_matrix(model)
    d = model.d
    return np.linalg.solve(np.eye(d) - G, np.asarray(model.mu))


# ---------------------------------------------------------------------------
# Conditional intensity
# ---------------------------------------------------------------------------

def intensity_at(model: HawkesModel, history: EventStream, i: int, t: float) -> float:
    """Conditional intensity of dimension i at time t given strictly prior
    events (left limit: an event exactly at t does not count)."""
    if not 0 <= i < model.d:
        raise IndexError(f"dimension {i} out of range for d={model.d}")
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    mask = history.times < t
    total = float(model.mu[i])
    for j in range(model.d):
        sel = mask & (history.dims == j)
        if not np.any(sel):
            continue
        u = t - history.times[sel]
        v = history.marks[sel] * effective_mark_scale(model.marks[j])
        total += float(np.sum(model.kernels[i][j].evaluate(u) * v))
    return model.links[i](total)
