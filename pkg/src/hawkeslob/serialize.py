"""JSON schemas and CSV formats for every artifact the CLI reads or writes.

Parsing is strict: unknown keys are rejected, not ignored.  Writers go
through a temp-file-and-rename so no command leaves a partial artifact, and
all output is deterministic (sorted keys, repr-exact floats).
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .book import Execution, Snapshot
from .bridge import FlowMapping, QuoteRow
from .diagnostics import DiagnosticsReport
from .fitting import FitResult, FitSettings
from .ingest import BookOp
from .models import (
    DeterministicMarks,
    EventStream,
    ExpKernel,
    ExponentialMarks,
    HawkesModel,
    IdentityLink,
    LogNormalMarks,
    PositivePartLink,
    PowerLawKernel,
    SaturatedLinearLink,
    ZeroKernel,
)
from .simulate import SimConfig

SCHEMA_VERSION = 1

# CSV times use 17 fractional digits: the format contract requires >= 9, and
# 17 makes re-parsing bit-exact at event-time magnitudes


# ---------------------------------------------------------------------------
# Atomic file helpers
# ---------------------------------------------------------------------------

def write_text_atomic(path, text: str) -> None:
    path = os.fspath(path)
    parent = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(path, obj) -> None:
    write_text_atomic(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _check_keys(obj: dict, allowed: set[str], required: set[str], context: str):
    if not isinstance(obj, dict):
        raise ValueError(f"{context}: expected an object, got {type(obj).__name__}")
    unknown = set(obj) - allowed
    if unknown:
        raise ValueError(f"{context}: unknown keys {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ValueError(f"{context}: missing keys {sorted(missing)}")


# ---------------------------------------------------------------------------
# Model schema
# ---------------------------------------------------------------------------

def kernel_to_dict(kernel) -> dict:
    if isinstance(kernel, ExpKernel):
        return {"type": "exponential", "alpha": kernel.alpha, "beta": kernel.beta}
    if isinstance(kernel, PowerLawKernel):
        return {
            "type": "powerlaw",
            "alpha": kernel.alpha,
            "c": kernel.c,
            "gamma": kernel.gamma,
        }
    if isinstance(kernel, ZeroKernel):
        return {"type": "zero"}
    raise TypeError(f"unknown kernel {type(kernel).__name__}")


def kernel_from_dict(obj: dict, context: str = "kernel"):
    _check_keys(obj, {"type", "alpha", "beta", "c", "gamma"}, {"type"}, context)
    kind = obj["type"]
    if kind == "exponential":
        _check_keys(obj, {"type", "alpha", "beta"}, {"type", "alpha", "beta"}, context)
        return ExpKernel(float(obj["alpha"]), float(obj["beta"]))
    if kind == "powerlaw":
        _check_keys(obj, {"type", "alpha", "c", "gamma"}, {"type", "alpha", "c", "gamma"}, context)
        return PowerLawKernel(float(obj["alpha"]), float(obj["c"]), float(obj["gamma"]))
    if kind == "zero":
        _check_keys(obj, {"type"}, {"type"}, context)
        return ZeroKernel()
    raise ValueError(f"{context}: unknown kernel type {kind!r}")


def mark_to_dict(mark) -> dict:
    if isinstance(mark, LogNormalMarks):
        return {
            "type": "lognormal",
            "mu_v": mark.mu_v,
            "sigma_v": mark.sigma_v,
            "normalize_excitation": mark.normalize_excitation,
        }
    if isinstance(mark, ExponentialMarks):
        return {
            "type": "exponential",
            "rate": mark.rate,
            "normalize_excitation": mark.normalize_excitation,
        }
    if isinstance(mark, DeterministicMarks):
        return {
            "type": "deterministic",
            "value": mark.value,
            "normalize_excitation": mark.normalize_excitation,
        }
    raise TypeError(f"unknown mark distribution {type(mark).__name__}")


def mark_from_dict(obj: dict, context: str = "marks"):
    allowed = {"type", "mu_v", "sigma_v", "rate", "value", "normalize_excitation"}
    _check_keys(obj, allowed, {"type"}, context)
    kind = obj["type"]
    norm = bool(obj.get("normalize_excitation", True))
    if kind == "lognormal":
        return LogNormalMarks(float(obj["mu_v"]), float(obj["sigma_v"]), norm)
    if kind == "exponential":
        return ExponentialMarks(float(obj["rate"]), norm)
    if kind == "deterministic":
        return DeterministicMarks(float(obj["value"]), norm)
    raise ValueError(f"{context}: unknown mark type {kind!r}")


def link_to_dict(link) -> dict:
    if isinstance(link, IdentityLink):
        return {"type": "identity"}
    if isinstance(link, PositivePartLink):
        return {"type": "positive_part", "floor": link.floor}
    if isinstance(link, SaturatedLinearLink):
        return {"type": "saturated_linear", "cap": link.cap}
    raise TypeError(f"unknown link {type(link).__name__}")


def link_from_dict(obj: dict, context: str = "links"):
    _check_keys(obj, {"type", "floor", "cap"}, {"type"}, context)
    kind = obj["type"]
    if kind == "identity":
        return IdentityLink()
    if kind == "positive_part":
        return PositivePartLink(float(obj.get("floor", 0.0)))
    if kind == "saturated_linear":
        return SaturatedLinearLink(float(obj["cap"]))
    raise ValueError(f"{context}: unknown link type {kind!r}")


def model_to_dict(model: HawkesModel) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "d": model.d,
        "mu": [float(x) for x in model.mu],
        "kernels": [[kernel_to_dict(k) for k in row] for row in model.kernels],
        "marks": [mark_to_dict(m) for m in model.marks],
        "links": [link_to_dict(l) for l in model.links],
    }


def model_from_dict(obj: dict) -> HawkesModel:
    _check_keys(
        obj,
        {"schema_version", "d", "mu", "kernels", "marks", "links"},
        {"mu", "kernels"},
        "model",
    )
    mu = obj["mu"]
    kernels = tuple(
        tuple(kernel_from_dict(k, f"model.kernels[{i}][{j}]") for j, k in enumerate(row))
        for i, row in enumerate(obj["kernels"])
    )
    marks = None
    if "marks" in obj:
        marks = tuple(
            mark_from_dict(m, f"model.marks[{i}]") for i, m in enumerate(obj["marks"])
        )
    links = None
    if "links" in obj:
        links = tuple(
            link_from_dict(l, f"model.links[{i}]") for i, l in enumerate(obj["links"])
        )
    model = HawkesModel(mu, kernels, marks=marks, links=links)
    if "d" in obj and int(obj["d"]) != model.d:
        raise ValueError(f"model: declared d={obj['d']} but mu has length {model.d}")
    return model


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiagnosticsConfig:
    max_lag: int = 20
    ks_level: float = 0.05
    dim: int = 0


@dataclass(frozen=True)
class FitConfig:
    kernel: str = "exponential"
    settings: FitSettings = FitSettings()
    bootstrap_reps: int | None = None


@dataclass(frozen=True)
class RunConfig:
    model: HawkesModel
    sim: SimConfig
    mapping: FlowMapping | None = None
    fit: FitConfig | None = None
    diagnostics: DiagnosticsConfig = DiagnosticsConfig()
    input_path: str | None = None
    out_path: str | None = None


def sim_config_from_dict(obj: dict) -> SimConfig:
    _check_keys(
        obj,
        {"horizon", "seed", "method", "max_events", "burn_in"},
        {"horizon"},
        "sim",
    )
    return SimConfig(
        horizon=float(obj["horizon"]),
        seed=int(obj.get("seed", 0)),
        method=str(obj.get("method", "auto")),
        max_events=int(obj.get("max_events", 10_000_000)),
        burn_in=float(obj.get("burn_in", 0.0)),
    )


def sim_config_to_dict(cfg: SimConfig) -> dict:
    return {
        "horizon": cfg.horizon,
        "seed": cfg.seed,
        "method": cfg.method,
        "max_events": cfg.max_events,
        "burn_in": cfg.burn_in,
    }


def mapping_from_dict(obj: dict) -> FlowMapping:
    _check_keys(
        obj,
        {"actions", "offset_p", "volume_scale", "reference_price"},
        {"actions"},
        "mapping",
    )
    return FlowMapping(
        actions=tuple(obj["actions"]),
        offset_p=float(obj.get("offset_p", 0.5)),
        volume_scale=float(obj.get("volume_scale", 1.0)),
        reference_price=int(obj.get("reference_price", 10_000)),
    )


def mapping_to_dict(mapping: FlowMapping) -> dict:
    return {
        "actions": [a.value for a in mapping.actions],
        "offset_p": mapping.offset_p,
        "volume_scale": mapping.volume_scale,
        "reference_price": mapping.reference_price,
    }


def fit_settings_from_dict(obj: dict, context: str = "fit") -> FitSettings:
    return FitSettings(
        method=str(obj.get("method", "nelder-mead")),
        max_iter=int(obj.get("max_iter", 2000)),
        tol=float(obj.get("tol", 1e-9)),
    )


def fit_config_from_dict(obj: dict) -> FitConfig:
    _check_keys(
        obj,
        {"kernel", "method", "max_iter", "tol", "bootstrap_reps"},
        set(),
        "fit",
    )
    reps = obj.get("bootstrap_reps")
    return FitConfig(
        kernel=str(obj.get("kernel", "exponential")),
        settings=fit_settings_from_dict(obj),
        bootstrap_reps=None if reps is None else int(reps),
    )


def diagnostics_config_from_dict(obj: dict) -> DiagnosticsConfig:
    _check_keys(obj, {"max_lag", "ks_level", "dim"}, set(), "diagnostics")
    return DiagnosticsConfig(
        max_lag=int(obj.get("max_lag", 20)),
        ks_level=float(obj.get("ks_level", 0.05)),
        dim=int(obj.get("dim", 0)),
    )


def run_config_from_dict(obj: dict) -> RunConfig:
    _check_keys(
        obj,
        {"schema_version", "model", "sim", "mapping", "fit", "diagnostics", "io"},
        {"model", "sim"},
        "config",
    )
    io = obj.get("io", {})
    _check_keys(io, {"input", "out"}, set(), "io")
    return RunConfig(
        model=model_from_dict(obj["model"]),
        sim=sim_config_from_dict(obj["sim"]),
        mapping=mapping_from_dict(obj["mapping"]) if "mapping" in obj else None,
        fit=fit_config_from_dict(obj["fit"]) if "fit" in obj else None,
        diagnostics=diagnostics_config_from_dict(obj.get("diagnostics", {})),
        input_path=io.get("input"),
        out_path=io.get("out"),
    )


def load_run_config(path) -> RunConfig:
    return run_config_from_dict(load_json(path))


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

def fit_settings_to_dict(settings: FitSettings) -> dict:
    return {
        "method": settings.method,
        "max_iter": settings.max_iter,
        "tol": settings.tol,
    }


def fit_result_to_dict(fit: FitResult) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "label": fit.label,
        "kernel_family": fit.kernel_family,
        "model": model_to_dict(fit.model),
        "loglik": fit.loglik,
        "nll_per_event": fit.nll_per_event,
        "aic": fit.aic,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "horizon": fit.horizon,
        "settings": fit_settings_to_dict(fit.settings),
        "std_errors": fit.std_errors,
        "bootstrap_failures": fit.bootstrap_failures,
    }


def report_to_dict(report: DiagnosticsReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "dim": report.dim,
        "n": int(len(report.residuals)),
        "residuals": [float(x) for x in report.residuals],
        "uniforms": [float(x) for x in report.uniforms],
        "ks_stat": report.ks_stat,
        "ks_pvalue": report.ks_pvalue,
        "acf": [float(x) for x in report.acf],
        "qq_theoretical": [float(x) for x in report.qq_theoretical],
        "qq_empirical": [float(x) for x in report.qq_empirical],
        "aic": report.aic,
        "loglik": report.loglik,
    }


def snapshot_to_dict(snap: Snapshot) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "bids": [[p, v] for p, v in snap.bids],
        "asks": [[p, v] for p, v in snap.asks],
        "best_bid": snap.best_bid,
        "best_ask": snap.best_ask,
        "spread": snap.spread,
        "mid": snap.mid,
        "depth": snap.depth,
        "imbalance": snap.imbalance,
    }


# ---------------------------------------------------------------------------
# CSV formats
# ---------------------------------------------------------------------------

def events_csv_text(stream: EventStream) -> str:
    lines = ["time,dim,mark"]
    for t, d, v in zip(stream.times, stream.dims, stream.marks):
        lines.append(f"{t:.17f},{d},{float(v)!r}")
    return "\n".join(lines) + "\n"


def write_events_csv(path, stream: EventStream) -> None:
    write_text_atomic(path, events_csv_text(stream))


def read_events_csv(path, horizon: float | None = None, d: int | None = None) -> EventStream:
    """Read an events CSV; horizon defaults to the last event time and the
    dimension count to max(dim) + 1 when not supplied."""
    times, dims, marks = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "time,dim,mark":
            raise ValueError(f"bad events header {header!r}")
        for line_no, raw in enumerate(fh, start=2):
            if not raw.strip():
                continue
            fields = raw.strip().split(",")
            if len(fields) != 3:
                raise ValueError(f"line {line_no}: expected 3 columns")
            times.append(float(fields[0]))
            dims.append(int(fields[1]))
            marks.append(float(fields[2]))
    if d is None:
        d = max(dims) + 1 if dims else 1
    if horizon is None:
        if not times:
            raise ValueError("cannot infer a horizon from an empty stream")
        horizon = times[-1]
    return EventStream(times, dims, marks, horizon=horizon, d=d)


def _opt(x) -> str:
    return "" if x is None else (repr(x) if isinstance(x, float) else str(x))


def quotes_csv_text(quotes: list[QuoteRow]) -> str:
    lines = ["time,best_bid,best_ask,mid,spread"]
    for q in quotes:
        lines.append(
            f"{q.time:.17f},{_opt(q.best_bid)},{_opt(q.best_ask)},"
            f"{_opt(q.mid)},{_opt(q.spread)}"
        )
    return "\n".join(lines) + "\n"


def tape_csv_text(tape: list[Execution]) -> str:
    lines = ["time,taker_side,price,volume,maker_id"]
    for e in tape:
        lines.append(
            f"{e.timestamp:.17f},{e.taker_side},{e.price},{e.volume},{e.maker_order_id}"
        )
    return "\n".join(lines) + "\n"


def residuals_csv_text(tau: np.ndarray, uniforms: np.ndarray) -> str:
    lines = ["k,tau,u"]
    for k, (t, u) in enumerate(zip(tau, uniforms), start=1):
        lines.append(f"{k},{float(t)!r},{float(u)!r}")
    return "\n".join(lines) + "\n"


def qq_csv_text(theoretical: np.ndarray, empirical: np.ndarray) -> str:
    lines = ["theoretical,empirical"]
    for t, e in zip(theoretical, empirical):
        lines.append(f"{float(t)!r},{float(e)!r}")
    return "\n".join(lines) + "\n"


def ops_csv_text(ops: list[BookOp]) -> str:
    lines = ["time,op,order_id,side,price,volume"]
    for op in ops:
        lines.append(
            f"{op.time:.17f},{op.kind},{op.order_id},"
            f"{op.side or ''},{'' if op.price is None else op.price},{op.volume}"
        )
    return "\n".join(lines) + "\n"


def read_ops_csv(path) -> list[BookOp]:
    ops = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "time,op,order_id,side,price,volume":
            raise ValueError(f"bad ops header {header!r}")
        for line_no, raw in enumerate(fh, start=2):
            if not raw.strip():
                continue
            fields = raw.strip().split(",")
            if len(fields) != 6:
                raise ValueError(f"line {line_no}: expected 6 columns")
            time, kind, order_id, side, price, volume = fields
            if kind not in ("submit", "reduce", "cancel", "execute"):
                raise ValueError(f"line {line_no}: unknown op {kind!r}")
            ops.append(
                BookOp(
                    kind=kind,
                    time=float(time),
                    order_id=int(order_id),
                    side=side or None,
                    price=int(price) if price else None,
                    volume=int(volume),
                )
            )
    return ops
