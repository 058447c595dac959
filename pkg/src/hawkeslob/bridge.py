"""Couples the stochastic layer to the matching engine: maps Hawkes event
streams to order messages and replays them, emitting trade and quote tapes."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .book import Book, Execution, Order, Side
from .models import EventStream, HawkesModel
from .simulate import SimConfig, derive_seed, simulate

__all__ = ["Action", "FlowMapping", "QuoteRow", "ReplayResult", "replay", "replay_stream"]


class Action(str, Enum):
    LIMIT_BUY = "limit_buy"
    LIMIT_SELL = "limit_sell"
    MARKET_BUY = "market_buy"
    MARKET_SELL = "market_sell"
    CANCEL_BUY = "cancel_buy"
    CANCEL_SELL = "cancel_sell"


_LIMIT_SIDE = {Action.LIMIT_BUY: Side.BID, Action.LIMIT_SELL: Side.ASK}
_MARKET_SIDE = {Action.MARKET_BUY: "buy", Action.MARKET_SELL: "sell"}
_CANCEL_SIDE = {Action.CANCEL_BUY: Side.BID, Action.CANCEL_SELL: Side.ASK}


@dataclass(frozen=True)
class FlowMapping:
    """Per-dimension action mapping plus the placement/sizing rules.

    Limit prices sit a geometric number of ticks behind the same-side best
    (the reference price anchors placement when that side is empty); volumes
    are round(mark * volume_scale) with a floor of one unit.
    """

    actions: tuple[Action, ...]
    offset_p: float = 0.5
    volume_scale: float = 1.0
    reference_price: int = 10_000

    def __post_init__(self):
        object.__setattr__(
            self, "actions", tuple(Action(a) for a in self.actions)
        )
        if not 0.0 < self.offset_p < 1.0:
            raise ValueError(f"offset_p must lie in (0, 1), got {self.offset_p}")
        if self.volume_scale <= 0:
            raise ValueError(f"volume_scale must be > 0, got {self.volume_scale}")
        if self.reference_price <= 0:
            raise ValueError(
                f"reference_price must be > 0 ticks, got {self.reference_price}"
            )


@dataclass(frozen=True)
class QuoteRow:
    time: float
    best_bid: int | None
    best_ask: int | None
    mid: float | None
    spread: int | None


@dataclass(frozen=True)
class ReplayResult:
    stream: EventStream
    tape: list[Execution]
    quotes: list[QuoteRow]
    book: Book
    skipped_cancels: int
    rested_volume: int
    executed_volume: int
    cancelled_volume: int


def replay(
    model: HawkesModel,
    mapping: FlowMapping,
    cfg: SimConfig,
    init: Book | None = None,
) -> ReplayResult:
    """Simulate a stream from the model and replay it through the book."""
    if len(mapping.actions) != model.d:
        raise ValueError(
            f"mapping covers {len(mapping.actions)} dimensions, model has {model.d}"
        )
    stream = simulate(model, cfg)
    return replay_stream(stream, mapping, cfg.seed, init)


def replay_stream(
    stream: EventStream,
    mapping: FlowMapping,
    seed: int,
    init: Book | None = None,
) -> ReplayResult:
    """Replay an existing stream in time order.

    Cancels pick a uniformly random live order on the mapped side from the
    "replay" sub-stream; a cancel against an empty side is recorded as
    skipped.  Deterministic given (stream, mapping, seed, init).
    """
    if len(mapping.actions) != stream.d:
        raise ValueError(
            f"mapping covers {len(mapping.actions)} dimensions, stream has {stream.d}"
        )
    book = init if init is not None else Book()
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, "replay")))
    next_id = book.max_seen_id + 1
    tape: list[Execution] = []
    quotes: list[QuoteRow] = []
    skipped = 0
    rested = 0
    executed = 0
    cancelled = 0

    for t, dim, mark in zip(stream.times, stream.dims, stream.marks):
        action = mapping.actions[dim]
        volume = max(1, int(round(mark * mapping.volume_scale)))
        if action in _LIMIT_SIDE:
            side = _LIMIT_SIDE[action]
            anchor = book.best_price(side)
            if anchor is None:
                anchor = mapping.reference_price
            offset = int(rng.geometric(mapping.offset_p)) - 1
            price = anchor - offset if side is Side.BID else anchor + offset
            price = max(1, price)
            execs = book.submit_limit(Order(next_id, side, price, volume, float(t)))
            next_id += 1
            filled = sum(e.volume for e in execs)
            rested += volume - filled
            executed += filled
            tape.extend(execs)
        elif action in _MARKET_SIDE:
            execs, _unfilled = book.submit_market(
                _MARKET_SIDE[action], volume, float(t)
            )
            executed += sum(e.volume for e in execs)
            tape.extend(execs)
        else:
            side = _CANCEL_SIDE[action]
            live = book.live_ids(side)
            if not live:
                skipped += 1
            else:
                victim = live[int(rng.integers(len(live)))]
                cancelled += book.cancel(victim).volume
        best_bid = book.best_bid()
        best_ask = book.best_ask()
        mid = spread = None
        if best_bid is not None and best_ask is not None:
            if best_bid >= best_ask:
                raise AssertionError("book crossed during replay")
            mid = (best_bid + best_ask) / 2.0
            spread = best_ask - best_bid
        quotes.append(QuoteRow(float(t), best_bid, best_ask, mid, spread))

    return ReplayResult(
        stream=stream,
        tape=tape,
        quotes=quotes,
        book=book,
        skipped_cancels=skipped,
        rested_volume=rested,
        executed_volume=executed,
        cancelled_volume=cancelled,
    )
