"""Array-in/array-out bindings over the ``hawkeslob`` command-line tool.

Every numeric result is produced by the CLI and parsed back, never
recomputed here, so binding outputs are bit-identical to the command-line
artifacts on the same build.  Only arrays and plain dicts cross the
boundary.

    from hawkes_simulator import HawkesProcess

    hp = HawkesProcess(mu=0.5, alpha=1.5, beta=2.0,
                       kernel="exponential", seed=42)
    events = hp.simulate(T=100.0)
"""
from __future__ import annotations

import json
import os
import re
import shutil
import subprocess
import tempfile
from typing import NamedTuple

import numpy as np

__all__ = ["HawkesProcess", "EventArrays", "UnstableModelError", "CliError"]

__version__ = "0.1.0"


class CliError(RuntimeError):
    """The backing CLI failed; carries its exit code and stderr."""

    def __init__(self, message: str, returncode: int, stderr: str):
        super().__init__(message)
        self.returncode = returncode
        self.stderr = stderr


class UnstableModelError(CliError):
    """Simulation refused: spectral radius at or above one."""

    def __init__(self, rho: float, returncode: int, stderr: str):
        super().__init__(
            f"model is unstable (rho = {rho:.6g})", returncode, stderr
        )
        self.rho = rho


class EventArrays(NamedTuple):
    times: np.ndarray
    dims: np.ndarray
    marks: np.ndarray


def _cli_path() -> str:
    override = os.environ.get("HAWKESLOB_CLI")
    if override:
        return override
    found = shutil.which("hawkeslob")
    if found is None:
        raise CliError(
            "hawkeslob CLI not found on PATH (set HAWKESLOB_CLI to override)",
            returncode=-1,
            stderr="",
        )
    return found


_RHO_PATTERN = re.compile(r"rho\(LG\) = ([0-9.eE+-]+)")


def _run_cli(args: list[str]) -> subprocess.CompletedProcess:
    proc = subprocess.run(
        [_cli_path(), *args], capture_output=True, text=True
    )
    if proc.returncode == 1:
        match = _RHO_PATTERN.search(proc.stderr)
        if match:
            raise UnstableModelError(
                float(match.group(1)), proc.returncode, proc.stderr
            )
    if proc.returncode not in (0, 3):  # 3 = fit did not converge (result written)
        raise CliError(
            f"hawkeslob {args[0]} failed with exit code {proc.returncode}: "
            f"{proc.stderr.strip()}",
            proc.returncode,
            proc.stderr,
        )
    return proc


def _as_matrix(value, d: int, name: str) -> list[list[float]]:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full((d, d), float(arr))
    if arr.shape != (d, d):
        raise ValueError(f"{name} must be scalar or {d}x{d}, got shape {arr.shape}")
    return [[float(x) for x in row] for row in arr]


def _read_events_csv(path) -> EventArrays:
    times, dims, marks = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "time,dim,mark":
            raise CliError(f"unexpected events header {header!r}", -1, "")
        for raw in fh:
            if raw.strip():
                t, d, v = raw.strip().split(",")
                times.append(float(t))
                dims.append(int(d))
                marks.append(float(v))
    return EventArrays(
        np.ascontiguousarray(times, dtype=np.float64),
        np.ascontiguousarray(dims, dtype=np.int64),
        np.ascontiguousarray(marks, dtype=np.float64),
    )


def _write_events_csv(path, times, dims, marks) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("time,dim,mark\n")
        for t, d, v in zip(times, dims, marks):
            fh.write(f"{float(t):.17f},{int(d)},{float(v)!r}\n")


def _validate_arrays(times, dims, marks):
    times = np.asarray(times, dtype=np.float64)
    dims = np.asarray(dims, dtype=np.int64)
    marks = np.asarray(marks, dtype=np.float64)
    if not (len(times) == len(dims) == len(marks)):
        raise ValueError("times, dims and marks must have equal length")
    if len(times) and np.any(np.diff(times) <= 0):
        raise ValueError("event times must be strictly increasing")
    return times, dims, marks


class HawkesProcess:
    """Handle on one Hawkes model parameterization plus a root seed.

    Parameters are validated eagerly with the same rules the engine
    enforces (positive baselines and decays, finite tail exponents), so
    bad models raise here rather than inside a subprocess.
    """

    def __init__(self, mu, alpha, beta=None, kernel="exponential", seed=0,
                 c=None, gamma=None):
        mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
        self.d = len(mu_arr)
        if np.any(mu_arr <= 0) or not np.all(np.isfinite(mu_arr)):
            raise ValueError("baseline intensities must all be finite and > 0")
        self.mu = [float(x) for x in mu_arr]
        self.kernel = kernel
        self.seed = int(seed)
        alpha_m = _as_matrix(alpha, self.d, "alpha")
        if np.any(np.asarray(alpha_m) < 0):
            raise ValueError("alpha must be >= 0")
        self.alpha = alpha_m
        if kernel == "exponential":
            if beta is None:
                raise ValueError("exponential kernel needs beta")
            beta_m = _as_matrix(beta, self.d, "beta")
            if np.any(np.asarray(beta_m) <= 0):
                raise ValueError("beta must be > 0")
            self.beta = beta_m
            self.c = self.gamma = None
        elif kernel == "powerlaw":
            if c is None or gamma is None:
                raise ValueError("powerlaw kernel needs c and gamma")
            c_m = _as_matrix(c, self.d, "c")
            g_m = _as_matrix(gamma, self.d, "gamma")
            if np.any(np.asarray(c_m) <= 0):
                raise ValueError("c must be > 0")
            if np.any(np.asarray(g_m) <= 1):
                raise ValueError("gamma must be > 1")
            self.c, self.gamma = c_m, g_m
            self.beta = None
        else:
            raise ValueError(f"unknown kernel {kernel!r}")

    # -- model document ------------------------------------------------------

    def _kernel_dict(self, i, j) -> dict:
        if self.kernel == "exponential":
            return {
                "type": "exponential",
                "alpha": self.alpha[i][j],
                "beta": self.beta[i][j],
            }
        return {
            "type": "powerlaw",
            "alpha": self.alpha[i][j],
            "c": self.c[i][j],
            "gamma": self.gamma[i][j],
        }

    def model_dict(self) -> dict:
        return {
            "mu": self.mu,
            "kernels": [
                [self._kernel_dict(i, j) for j in range(self.d)]
                for i in range(self.d)
            ],
        }

    # -- operations ------------------------------------------------------

    def simulate(self, T: float, allow_unstable: bool = False) -> EventArrays:
        """Simulate over (0, T]; identical values to the simulate command
        with the same model and seed."""
        if T < 0:
            raise ValueError(f"T must be >= 0, got {T}")
        if T == 0:
            return EventArrays(
                np.empty(0), np.empty(0, dtype=np.int64), np.empty(0)
            )
        with tempfile.TemporaryDirectory(prefix="hawkes_sim_") as tmp:
            config = {
                "model": self.model_dict(),
                "sim": {"horizon": float(T), "seed": self.seed,
                        "method": "thinning"},
            }
            cfg_path = os.path.join(tmp, "config.json")
            with open(cfg_path, "w", encoding="utf-8") as fh:
                json.dump(config, fh)
            out = os.path.join(tmp, "events.csv")
            args = ["simulate", "--config", cfg_path, "--out", out]
            if allow_unstable:
                args.append("--allow-unstable")
            _run_cli(args)
            return _read_events_csv(out)

    def fit(self, times, dims, marks, T: float, kernel: str | None = None):
        """Maximum-likelihood fit via the fit command; returns
        (parameter mapping, log-likelihood).  Numerically identical to the
        CLI because it *is* the CLI."""
        times, dims, marks = _validate_arrays(times, dims, marks)
        with tempfile.TemporaryDirectory(prefix="hawkes_fit_") as tmp:
            events = os.path.join(tmp, "events.csv")
            _write_events_csv(events, times, dims, marks)
            out = os.path.join(tmp, "fit.json")
            proc = _run_cli(
                ["fit", "--input", events, "--out", out,
                 "--horizon", repr(float(T)),
                 "--kernel", kernel or self.kernel]
            )
            with open(out, "r", encoding="utf-8") as fh:
                result = json.load(fh)
        model = result["model"]
        params: dict = {"mu": model["mu"]}
        keys = (
            ("alpha", "beta") if result["kernel_family"] == "exponential"
            else ("alpha", "c", "gamma")
        )
        for key in keys:
            params[key] = [
                [entry[key] for entry in row] for row in model["kernels"]
            ]
        if len(model["mu"]) == 1:
            params = {
                k: (v[0] if k == "mu" else v[0][0]) for k, v in params.items()
            }
        params["converged"] = result["converged"]
        return params, float(result["loglik"])

    def residuals(self, times, dims, marks, T: float, params: dict | None = None,
                  dim: int = 0) -> np.ndarray:
        """Time-rescaling residuals from the diagnose command.

        ``params`` takes the same keyword shape as the constructor and
        defaults to this process's own parameters.
        """
        times, dims, marks = _validate_arrays(times, dims, marks)
        if len(times) == 0:
            return np.empty(0)
        source = self if params is None else HawkesProcess(**params)
        if dim >= source.d:
            raise ValueError(f"dimension {dim} out of range for d={source.d}")
        with tempfile.TemporaryDirectory(prefix="hawkes_diag_") as tmp:
            events = os.path.join(tmp, "events.csv")
            _write_events_csv(events, times, dims, marks)
            model_path = os.path.join(tmp, "model.json")
            with open(model_path, "w", encoding="utf-8") as fh:
                json.dump(source.model_dict(), fh)
            out = os.path.join(tmp, "report.json")
            _run_cli(
                ["diagnose", "--input", events, "--params", model_path,
                 "--out", out, "--horizon", repr(float(T)),
                 "--dim", str(dim)]
            )
            tau = []
            with open(out + ".residuals.csv", "r", encoding="utf-8") as fh:
                fh.readline()
                for raw in fh:
                    if raw.strip():
                        tau.append(float(raw.split(",")[1]))
        return np.ascontiguousarray(tau, dtype=np.float64)
