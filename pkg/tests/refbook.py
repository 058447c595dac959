"""Naive reference order book for differential testing: a flat list with
O(n) scans for everything, written independently of the engine."""
from __future__ import annotations

import numpy as np

from hawkeslob import (
    Book,
    DuplicateOrderError,
    Order,
    OrderNotFoundError,
    Side,
)


class NaiveBook:
    """Flat sorted lists, O(n) everything.

    Each side is one Python list of [id, price, volume] kept in priority
    order (best price first, FIFO within a price) by linear-scan insertion;
    matching just consumes the head of the opposite list.
    """

    def __init__(self):
        self.bids = []  # [id, price, volume], price descending
        self.asks = []  # [id, price, volume], price ascending
        self.seen = set()
        self.filled = set()
        self.cancelled = set()

    def best_bid(self):
        return self.bids[0][1] if self.bids else None

    def best_ask(self):
        return self.asks[0][1] if self.asks else None

    def _insert(self, side_list, is_bid, oid, price, volume):
        pos = len(side_list)
        for idx, entry in enumerate(side_list):  # O(n) priority placement
            if (is_bid and entry[1] < price) or (not is_bid and entry[1] > price):
                pos = idx
                break
        side_list.insert(pos, [oid, price, volume])

    def _match(self, against_bids, volume, limit=None):
        """Consume the head of one side; returns (tape, unfilled)."""
        side_list = self.bids if against_bids else self.asks
        tape = []
        while volume > 0 and side_list:
            front = side_list[0]
            if limit is not None:
                if against_bids and front[1] < limit:
                    break
                if not against_bids and front[1] > limit:
                    break
            fill = volume if volume < front[2] else front[2]
            tape.append((front[0], front[1], fill))
            front[2] -= fill
            volume -= fill
            if front[2] == 0:
                side_list.pop(0)
                self.filled.add(front[0])
        return tape, volume

    def submit_limit(self, oid, is_bid, price, volume):
        if oid in self.seen:
            return "duplicate", []
        self.seen.add(oid)
        tape, remaining = self._match(not is_bid, volume, limit=price)
        if remaining > 0:
            self._insert(self.bids if is_bid else self.asks, is_bid, oid, price, remaining)
        else:
            self.filled.add(oid)
        return "ok", tape

    def submit_market(self, is_buy, volume):
        return self._match(not is_buy, volume)

    def cancel(self, oid):
        for side_list in (self.bids, self.asks):
            for entry in side_list:
                if entry[0] == oid:
                    side_list.remove(entry)
                    self.cancelled.add(oid)
                    return "ok", entry[2]
        if oid in self.filled:
            return "filled", 0
        if oid in self.cancelled:
            return "cancelled", 0
        return "unknown", 0

    def ladders(self):
        out = []
        for side_list in (self.bids, self.asks):
            levels = []
            for oid, price, volume in side_list:  # already priority-sorted
                if levels and levels[-1][0] == price:
                    levels[-1][1] += volume
                else:
                    levels.append([price, volume])
            out.append([tuple(lv) for lv in levels])
        return out[0], out[1]

    def resting(self):
        return sum(o[2] for o in self.bids) + sum(o[2] for o in self.asks)


def _engine_cancel(book, oid):
    try:
        return "ok", book.cancel(oid).volume
    except OrderNotFoundError as err:
        text = str(err)
        if "executed" in text:
            return "filled", 0
        if "already cancelled" in text:
            return "cancelled", 0
        return "unknown", 0


def run_differential(n_ops: int, seed: int, snapshot_every: int = 2000):
    """Drive both books through the same random op stream; returns stats.

    Raises AssertionError on the first divergence of tapes, best prices,
    ladders, status codes, or any engine invariant.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    engine = Book()
    naive = NaiveBook()

    # pre-drawn randomness keeps the loop tight
    op_draw = rng.random(n_ops)
    side_draw = rng.random(n_ops)
    price_off = rng.integers(-10, 11, n_ops)
    vol_draw = rng.integers(1, 50, n_ops)
    mkt_vol = rng.integers(1, 120, n_ops)
    cancel_pick = rng.random(n_ops)

    mid = 10_000
    next_id = 1
    recent_ids = []
    counts = {"limit": 0, "market": 0, "cancel": 0, "executions": 0}
    rested = executed = cancelled_vol = 0

    for k in range(n_ops):
        # alternate growth- and drain-biased phases every 50k ops so the
        # book cycles between deep (multi-level queues) and nearly empty
        phase = (k // 50_000) % 2
        limit_p, market_p = (0.66, 0.80) if phase == 0 else (0.42, 0.74)
        if k % 500 == 499:
            mid += int(side_draw[k] * 3) - 1
        r = op_draw[k]
        if r < limit_p or not recent_ids:
            counts["limit"] += 1
            is_bid = side_draw[k] < 0.5
            price = max(1, mid + (-1 if is_bid else 1) + int(price_off[k]))
            vol = int(vol_draw[k])
            side = Side.BID if is_bid else Side.ASK
            try:
                tape_e = engine.submit_limit(Order(next_id, side, price, vol, float(k)))
                status_e = "ok"
            except DuplicateOrderError:
                tape_e, status_e = [], "duplicate"
            status_n, tape_n = naive.submit_limit(next_id, is_bid, price, vol)
            assert status_e == status_n, f"op {k}: limit status diverged"
            if tape_e or tape_n:
                assert [(e.maker_order_id, e.price, e.volume) for e in tape_e] == tape_n, (
                    f"op {k}: limit tape diverged"
                )
            filled = sum(e.volume for e in tape_e)
            executed += filled
            rested += vol - filled
            recent_ids.append(next_id)
            next_id += 1
            counts["executions"] += len(tape_e)
        elif r < market_p:
            counts["market"] += 1
            is_buy = side_draw[k] < 0.5
            vol = int(mkt_vol[k])
            tape_e, unfilled_e = engine.submit_market(
                "buy" if is_buy else "sell", vol, float(k)
            )
            tape_n, unfilled_n = naive.submit_market(is_buy, vol)
            assert unfilled_e == unfilled_n, f"op {k}: market remainder diverged"
            if tape_e or tape_n:
                assert [(e.maker_order_id, e.price, e.volume) for e in tape_e] == tape_n, (
                    f"op {k}: market tape diverged"
                )
                # price priority: monotone fill prices within one taker order
                prices = [e.price for e in tape_e]
                assert prices == sorted(prices, reverse=not is_buy), (
                    f"op {k}: fill prices not monotone"
                )
            executed += vol - unfilled_e
            counts["executions"] += len(tape_e)
        else:
            counts["cancel"] += 1
            pick = recent_ids[int(cancel_pick[k] * len(recent_ids))]
            status_e, vol_e = _engine_cancel(engine, pick)
            status_n, vol_n = naive.cancel(pick)
            assert (status_e, vol_e) == (status_n, vol_n), (
                f"op {k}: cancel outcome diverged ({status_e},{vol_e}) vs "
                f"({status_n},{vol_n})"
            )
            cancelled_vol += vol_e
            if len(recent_ids) > 3000:
                del recent_ids[:1000]

        bb_e, ba_e = engine.best_bid(), engine.best_ask()
        if bb_e is not None and ba_e is not None:
            assert bb_e < ba_e, f"op {k}: engine book crossed"

        if k % snapshot_every == snapshot_every - 1 or k == n_ops - 1:
            bb_n, ba_n = naive.best_bid(), naive.best_ask()
            assert (bb_e, ba_e) == (bb_n, ba_n), f"op {k}: best prices diverged"
            bids_n, asks_n = naive.ladders()
            assert engine.depth_ladder(Side.BID, 1 << 30) == bids_n, (
                f"op {k}: bid ladder diverged"
            )
            assert engine.depth_ladder(Side.ASK, 1 << 30) == asks_n, (
                f"op {k}: ask ladder diverged"
            )
            assert engine.resting_volume() == naive.resting()
            assert engine.resting_volume() == rested - executed - cancelled_vol, (
                f"op {k}: volume conservation violated"
            )

    assert engine.recompute_resting() == engine.resting_volume()
    counts["resting"] = engine.resting_volume()
    counts["live_orders"] = len(engine)
    return counts
