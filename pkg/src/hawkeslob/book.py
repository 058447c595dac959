"""Deterministic limit order book with price-time priority.

Prices are integer ticks (floats break priority determinism); volumes are
integer units.  Cancelled orders become zero-volume tombstones that the
matching loop skips, which keeps cancel O(1) while preserving FIFO order
within each price level.
"""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "Side",
    "Order",
    "Execution",
    "Snapshot",
    "Book",
    "OrderNotFoundError",
    "DuplicateOrderError",
]


class Side(str, Enum):
    BID = "bid"
    ASK = "ask"

    @property
    def opposite(self) -> "Side":
        return Side.ASK if self is Side.BID else Side.BID


# taker side names as they appear on the tape
_TAKER_FOR = {Side.BID: "sell", Side.ASK: "buy"}  # keyed by maker side


class OrderNotFoundError(KeyError):
    pass


class DuplicateOrderError(ValueError):
    pass


@dataclass
class Order:
    id: int
    side: Side
    price: int
    volume: int
    timestamp: float = 0.0


@dataclass(frozen=True)
class Execution:
    taker_side: str  # "buy" | "sell"
    maker_order_id: int
    price: int
    volume: int
    timestamp: float


@dataclass(frozen=True)
class Snapshot:
    bids: list[tuple[int, int]]  # (price, resting volume), best first
    asks: list[tuple[int, int]]
    best_bid: int | None
    best_ask: int | None
    spread: int | None
    mid: float | None
    depth: int
    imbalance: float | None


class _Level:
    __slots__ = ("orders", "volume", "live")

    def __init__(self):
        self.orders: deque[Order] = deque()
        self.volume = 0
        self.live = 0


class Book:
    """Two-sided book: price -> FIFO queue, heap-tracked best prices,
    id index for O(1) cancels."""

    def __init__(self, tick_size: float = 0.01):
        if tick_size <= 0:
            raise ValueError("tick_size must be > 0")
        self.tick_size = tick_size
        self._levels: dict[Side, dict[int, _Level]] = {Side.BID: {}, Side.ASK: {}}
        self._heaps: dict[Side, list[int]] = {Side.BID: [], Side.ASK: []}
        self._index: dict[int, Order] = {}
        self._filled: set[int] = set()
        self._cancelled: set[int] = set()
        self._resting = 0
        self._max_id = 0

    # -- queries ------------------------------------------------------------

    def best_price(self, side: Side) -> int | None:
        heap = self._heaps[side]
        levels = self._levels[side]
        while heap:
            price = -heap[0] if side is Side.BID else heap[0]
            level = levels.get(price)
            if level is not None and level.live > 0:
                return price
            heapq.heappop(heap)
        return None

    def best_bid(self) -> int | None:
        return self.best_price(Side.BID)

    def best_ask(self) -> int | None:
        return self.best_price(Side.ASK)

    def resting_volume(self) -> int:
        return self._resting

    def recompute_resting(self) -> int:
        """O(book) recount, for conservation cross-checks in tests."""
        return sum(
            level.volume
            for side_levels in self._levels.values()
            for level in side_levels.values()
        )

    def live_ids(self, side: Side) -> list[int]:
        return sorted(o.id for o in self._index.values() if o.side is side)

    @property
    def max_seen_id(self) -> int:
        return self._max_id

    def __contains__(self, order_id: int) -> bool:
        return order_id in self._index

    def __len__(self) -> int:
        return len(self._index)

    # -- mutations ----------------------------------------------------------

    def submit_limit(self, order: Order) -> list[Execution]:
        """Match a crossing limit against the opposite side per price-time
        priority; any remainder rests at the tail of its price level."""
        if order.volume <= 0:
            raise ValueError(f"order volume must be > 0, got {order.volume}")
        if order.price <= 0:
            raise ValueError(f"order price must be > 0, got {order.price}")
        if (
            order.id in self._index
            or order.id in self._filled
            or order.id in self._cancelled
        ):
            raise DuplicateOrderError(f"order id {order.id} already used")
        if not isinstance(order.side, Side):
            raise ValueError(f"invalid side {order.side!r}")
        self._max_id = max(self._max_id, order.id)

        taker = "buy" if order.side is Side.BID else "sell"
        remaining = order.volume
        executions: list[Execution] = []
        while remaining > 0:
            best = self.best_price(order.side.opposite)
            if best is None:
                break
            if order.side is Side.BID and best > order.price:
                break
            if order.side is Side.ASK and best < order.price:
                break
            remaining = self._match_level(
                order.side.opposite, best, remaining, taker,
                order.timestamp, executions,
            )
        if remaining > 0:
            rest = Order(order.id, order.side, order.price, remaining, order.timestamp)
            level = self._levels[order.side].get(order.price)
            if level is None:
                level = _Level()
                self._levels[order.side][order.price] = level
                heapq.heappush(
                    self._heaps[order.side],
                    -order.price if order.side is Side.BID else order.price,
                )
            level.orders.append(rest)
            level.volume += remaining
            level.live += 1
            self._index[order.id] = rest
            self._resting += remaining
        else:
            self._filled.add(order.id)
        return executions

    def submit_market(
        self, side: str, volume: int, timestamp: float = 0.0
    ) -> tuple[list[Execution], int]:
        """Walk the best opposite levels front-of-queue first.

        Returns (executions in match order, unfilled remainder); the
        remainder is discarded, never rested.
        """
        if side not in ("buy", "sell"):
            raise ValueError(f"market side must be 'buy' or 'sell', got {side!r}")
        if volume <= 0:
            raise ValueError(f"market volume must be > 0, got {volume}")
        book_side = Side.ASK if side == "buy" else Side.BID
        remaining = volume
        executions: list[Execution] = []
        while remaining > 0:
            best = self.best_price(book_side)
            if best is None:
                break
            remaining = self._match_level(
                book_side, best, remaining, side, timestamp, executions
            )
        return executions, remaining

    def _match_level(self, side, price, remaining, taker, timestamp, executions):
        level = self._levels[side][price]
        queue = level.orders
        while remaining > 0 and level.live > 0:
            front = queue[0]
            if front.volume == 0:  # cancelled tombstone
                queue.popleft()
                continue
            fill = min(remaining, front.volume)
            executions.append(
                Execution(
                    taker_side=taker,
                    maker_order_id=front.id,
                    price=price,
                    volume=fill,
                    timestamp=timestamp,
                )
            )
            front.volume -= fill
            level.volume -= fill
            self._resting -= fill
            remaining -= fill
            if front.volume == 0:
                queue.popleft()
                level.live -= 1
                del self._index[front.id]
                self._filled.add(front.id)
        if level.live == 0:
            del self._levels[side][price]
        return remaining

    def cancel(self, order_id: int) -> Order:
        """Remove a live order; remaining FIFO order is unchanged.

        Raises OrderNotFoundError for unknown ids, with already-filled and
        already-cancelled ids called out as such.
        """
        order = self._index.pop(order_id, None)
        if order is None:
            if order_id in self._filled:
                raise OrderNotFoundError(
                    f"order {order_id} was already fully executed"
                )
            if order_id in self._cancelled:
                raise OrderNotFoundError(f"order {order_id} was already cancelled")
            raise OrderNotFoundError(f"unknown order id {order_id}")
        cancelled = Order(
            order.id, order.side, order.price, order.volume, order.timestamp
        )
        level = self._levels[order.side][order.price]
        level.volume -= order.volume
        level.live -= 1
        self._resting -= order.volume
        order.volume = 0  # tombstone; popped lazily by matching
        self._cancelled.add(order_id)
        if level.live == 0:
            del self._levels[order.side][order.price]
        return cancelled

    def reduce(self, order_id: int, volume: int) -> int:
        """Reduce a resting order's volume in place, preserving its queue
        position.  A reduction covering the full size cancels the order.
        Returns the remaining volume."""
        if volume <= 0:
            raise ValueError(f"reduction volume must be > 0, got {volume}")
        order = self._index.get(order_id)
        if order is None:
            self.cancel(order_id)  # not live: raises the matching not-found error
        if volume >= order.volume:
            self.cancel(order_id)
            return 0
        order.volume -= volume
        level = self._levels[order.side][order.price]
        level.volume -= volume
        self._resting -= volume
        return order.volume

    def fill_resting(self, order_id: int, volume: int, timestamp: float = 0.0) -> Execution:
        """Execute against one specific resting order (tape replay of an
        exchange-reported execution).  The taker side is inferred as the
        opposite of the maker's side."""
        order = self._index.get(order_id)
        if order is None:
            raise OrderNotFoundError(f"unknown order id {order_id}")
        if volume <= 0 or volume > order.volume:
            raise ValueError(
                f"execution volume {volume} invalid for resting volume {order.volume}"
            )
        level = self._levels[order.side][order.price]
        order.volume -= volume
        level.volume -= volume
        self._resting -= volume
        if order.volume == 0:
            level.live -= 1
            del self._index[order_id]
            self._filled.add(order_id)
            if level.live == 0:
                del self._levels[order.side][order.price]
        return Execution(
            taker_side=_TAKER_FOR[order.side],
            maker_order_id=order_id,
            price=order.price,
            volume=volume,
            timestamp=timestamp,
        )

    # -- snapshots ----------------------------------------------------------

    def depth_ladder(self, side: Side, levels: int) -> list[tuple[int, int]]:
        prices = sorted(
            (p for p, lvl in self._levels[side].items() if lvl.live > 0),
            reverse=(side is Side.BID),
        )
        return [(p, self._levels[side][p].volume) for p in prices[:levels]]

    def snapshot(self, levels: int = 10) -> Snapshot:
        if levels < 1:
            raise ValueError("levels must be >= 1")
        bids = self.depth_ladder(Side.BID, levels)
        asks = self.depth_ladder(Side.ASK, levels)
        best_bid = bids[0][0] if bids else None
        best_ask = asks[0][0] if asks else None
        spread = mid = None
        if best_bid is not None and best_ask is not None:
            spread = best_ask - best_bid
            mid = (best_bid + best_ask) / 2.0
        bid_depth = sum(v for _, v in bids)
        ask_depth = sum(v for _, v in asks)
        depth = bid_depth + ask_depth
        imbalance = (bid_depth - ask_depth) / depth if depth > 0 else None
        return Snapshot(
            bids=bids,
            asks=asks,
            best_bid=best_bid,
            best_ask=best_ask,
            spread=spread,
            mid=mid,
            depth=depth,
            imbalance=imbalance,
        )


def price_to_ticks(price: float | str, tick_size: float) -> int:
    """Convert a decimal price to integer ticks, exactly or not at all."""
    from decimal import Decimal, InvalidOperation

    try:
        ratio = Decimal(str(price)) / Decimal(str(tick_size))
    except InvalidOperation as exc:
        raise ValueError(f"cannot parse price {price!r}") from exc
    if ratio != ratio.to_integral_value():
        raise ValueError(
            f"price {price} is not an integer multiple of tick size {tick_size}"
        )
    return int(ratio)
