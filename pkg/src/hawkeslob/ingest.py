"""Parsers and preprocessors turning Binance trade exports and LOBSTER
message files into event streams and replayable order operation sequences."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .models import DeterministicMarks, EventStream, LogNormalMarks

__all__ = [
    "ParseError",
    "LobsterMessage",
    "TradeRecord",
    "BookOp",
    "LobsterReplaySpec",
    "parse_lobster",
    "parse_binance_trades",
    "aggregate_trades",
    "lobster_to_orders",
    "fit_lognormal_marks",
]

TIE_PERTURBATION = 1e-9  # one nanosecond keeps merged streams simple


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class LobsterMessage:
    time: float        # seconds since midnight
    event_type: int    # 1 submit, 2 partial cancel, 3 delete, 4 execute, 5 hidden
    order_id: int
    size: int          # shares
    price: int         # 1e-4 dollar units
    direction: int     # +1 buy, -1 sell


@dataclass(frozen=True)
class TradeRecord:
    time: float  # epoch seconds
    side: str    # "buy" | "sell" (taker)
    volume: float
    price: float


def _split_row(raw: str, expected: int, line: int) -> list[str]:
    fields = raw.strip().split(",")
    if len(fields) != expected:
        raise ParseError(
            f"expected {expected} columns, got {len(fields)}", line
        )
    return fields


def parse_lobster(path) -> list[LobsterMessage]:
    """Parse a LOBSTER message file (time,type,order_id,size,price,direction).

    Unknown event types and malformed fields fail with the offending line;
    decreasing timestamps only warn and are stably sorted away.
    """
    messages = []
    prev_time = -math.inf
    sorted_ok = True
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            fields = _split_row(raw, 6, line_no)
            try:
                time = float(fields[0])
                event_type = int(fields[1])
                order_id = int(fields[2])
                size = int(fields[3])
                price = int(fields[4])
                direction = int(fields[5])
            except ValueError as exc:
                raise ParseError(f"malformed field ({exc})", line_no) from exc
            if event_type not in (1, 2, 3, 4, 5):
                raise ParseError(f"unknown event type {event_type}", line_no)
            if size <= 0:
                raise ParseError(f"size must be > 0, got {size}", line_no)
            if price <= 0:
                raise ParseError(f"price must be > 0, got {price}", line_no)
            if direction not in (1, -1):
                raise ParseError(f"direction must be +1 or -1, got {direction}", line_no)
            if time < prev_time:
                sorted_ok = False
            prev_time = time
            messages.append(
                LobsterMessage(time, event_type, order_id, size, price, direction)
            )
    if not sorted_ok:
        warnings.warn("message times decreased; applying stable sort", stacklevel=2)
        messages.sort(key=lambda m: m.time)
    return messages


_TRUTHY = {"true": True, "1": True, "false": False, "0": False}


def parse_binance_trades(path) -> list[TradeRecord]:
    """Parse a Binance trade export
    (trade_id,price,qty,quote_qty,time_ms,is_buyer_maker).

    The taker side is Sell when the buyer was the maker.  A header row is
    skipped if present; times convert from integer milliseconds to seconds.
    """
    trades = []
    sorted_ok = True
    prev_time = -math.inf
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            stripped = raw.strip()
            if not stripped:
                continue
            first = stripped.split(",", 1)[0]
            if line_no == 1 and not first.lstrip("-").isdigit():
                continue  # header row
            fields = _split_row(raw, 6, line_no)
            try:
                price = float(fields[1])
                qty = float(fields[2])
                time_ms = int(fields[4])
            except ValueError as exc:
                raise ParseError(f"malformed field ({exc})", line_no) from exc
            flag = fields[5].strip().lower()
            if flag not in _TRUTHY:
                raise ParseError(f"is_buyer_maker must be boolean, got {fields[5]!r}", line_no)
            if qty <= 0:
                raise ParseError(f"qty must be > 0, got {qty}", line_no)
            if price <= 0:
                raise ParseError(f"price must be > 0, got {price}", line_no)
            time = time_ms / 1000.0
            if time < prev_time:
                sorted_ok = False
            prev_time = time
            side = "sell" if _TRUTHY[flag] else "buy"
            trades.append(TradeRecord(time, side, qty, price))
    if not sorted_ok:
        warnings.warn("trade times decreased; applying stable sort", stacklevel=2)
        trades.sort(key=lambda t: t.time)
    return trades


def aggregate_trades(trades: list[TradeRecord], window: float) -> EventStream:
    """Merge same-side trades within tumbling windows (aligned to t = 0)
    into single events at the window's first trade time, volumes summed as
    marks.  Dimension 0 carries buys, dimension 1 sells; simultaneous
    merged events are kept simple by nudging the later one forward by 1 ns.
    """
    if window <= 0:
        raise ValueError(f"window must be > 0, got {window}")
    if not trades:
        raise ValueError("no trades to aggregate")
    buckets: dict[tuple[int, int], list[float]] = {}  # (window idx, dim) -> [t0, vol]
    for trade in trades:
        dim = 0 if trade.side == "buy" else 1
        key = (int(trade.time // window), dim)
        slot = buckets.get(key)
        if slot is None:
            buckets[key] = [trade.time, trade.volume]
        else:
            slot[0] = min(slot[0], trade.time)
            slot[1] += trade.volume
    events = sorted(
        ((t0, dim, vol) for (_w, dim), (t0, vol) in buckets.items()),
        key=lambda e: (e[0], e[1]),  # buys before sells at equal times
    )
    times = np.array([e[0] for e in events])
    dims = np.array([e[1] for e in events])
    marks = np.array([e[2] for e in events])
    for k in range(1, len(times)):
        if times[k] <= times[k - 1]:
            times[k] = times[k - 1] + TIE_PERTURBATION
    last_window_end = (int(trades[-1].time // window) + 1) * window
    horizon = max(last_window_end, float(times[-1]))
    return EventStream(times, dims, marks, horizon=horizon, d=2)


def fit_lognormal_marks(stream: EventStream):
    """Per-dimension log-normal mark models by moment matching on
    log-volumes; degenerate dimensions fall back to a deterministic mark."""
    out = []
    for i in range(stream.d):
        v = stream.marks[stream.dims == i]
        v = v[v > 0]
        if len(v) == 0:
            out.append(DeterministicMarks(1.0))
            continue
        logs = np.log(v)
        sigma = float(np.std(logs))
        if sigma <= 0:
            out.append(DeterministicMarks(float(v[0])))
        else:
            out.append(LogNormalMarks(float(np.mean(logs)), sigma))
    return tuple(out)


# ---------------------------------------------------------------------------
# LOBSTER -> replayable operations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BookOp:
    kind: str          # submit | reduce | cancel | execute
    time: float
    order_id: int
    side: str | None   # "bid" | "ask" for submits
    price: int | None  # ticks (1e-4 dollars), submits only
    volume: int


@dataclass(frozen=True)
class LobsterReplaySpec:
    ops: list[BookOp]
    orphans: list[LobsterMessage]  # refs to ids never submitted in this file
    hidden_skipped: int


def lobster_to_orders(messages: list[LobsterMessage]) -> LobsterReplaySpec:
    """Translate LOBSTER messages into book operations.

    Type 1 submits; Type 2 reduces volume in place (queue position
    preserved); Type 3 deletes; Type 4 consumes resting volume as an
    execution-consistency event; Type 5 (hidden) is skipped with a count.
    References to order ids with no prior submission in the file are
    collected as orphans and excluded from the replayable sequence.
    """
    ops: list[BookOp] = []
    orphans: list[LobsterMessage] = []
    hidden = 0
    seen: set[int] = set()
    for msg in messages:
        if msg.event_type == 5:
            hidden += 1
            continue
        if msg.event_type == 1:
            seen.add(msg.order_id)
            side = "bid" if msg.direction == 1 else "ask"
            ops.append(
                BookOp("submit", msg.time, msg.order_id, side, msg.price, msg.size)
            )
            continue
        if msg.order_id not in seen:
            orphans.append(msg)
            continue
        if msg.event_type == 2:
            ops.append(BookOp("reduce", msg.time, msg.order_id, None, None, msg.size))
        elif msg.event_type == 3:
            ops.append(BookOp("cancel", msg.time, msg.order_id, None, None, msg.size))
        else:  # type 4: execution of a visible resting order
            ops.append(BookOp("execute", msg.time, msg.order_id, None, None, msg.size))
    return LobsterReplaySpec(ops=ops, orphans=orphans, hidden_skipped=hidden)
