import numpy as np
import pytest

from hawkeslob import (
    Action,
    Book,
    FlowMapping,
    HawkesModel,
    Order,
    SimConfig,
    Side,
    replay,
    replay_stream,
)

from conftest import make_stream


def deep_ask_book(levels=40, volume=10_000):
    book = Book()
    for k in range(levels):
        book.submit_limit(Order(k + 1, Side.ASK, 10_001 + k, volume, 0.0))
    return book


class TestFlowMapping:
    def test_validation(self):
        with pytest.raises(ValueError):
            FlowMapping(actions=(Action.LIMIT_BUY,), offset_p=1.0)
        with pytest.raises(ValueError):
            FlowMapping(actions=(Action.LIMIT_BUY,), volume_scale=0.0)
        with pytest.raises(ValueError):
            FlowMapping(actions=("not_an_action",))

    def test_actions_parse_from_strings(self):
        m = FlowMapping(actions=("limit_buy", "market_sell"))
        assert m.actions == (Action.LIMIT_BUY, Action.MARKET_SELL)

    def test_unmapped_dimension_rejected(self, uni_model):
        mapping = FlowMapping(actions=(Action.MARKET_BUY, Action.MARKET_SELL))
        with pytest.raises(ValueError):
            replay(uni_model, mapping, SimConfig(horizon=10.0, seed=1))


class TestReplay:
    def test_market_buy_against_deep_ladder_trades_every_event(self, uni_model):
        mapping = FlowMapping(actions=(Action.MARKET_BUY,), volume_scale=1.0)
        cfg = SimConfig(horizon=50.0, seed=3)
        result = replay(uni_model, mapping, cfg, init=deep_ask_book())
        assert len(result.stream) > 0
        # one execution per event against a deep static ladder
        assert len(result.tape) == len(result.stream)

    def test_all_cancel_on_empty_book(self, uni_model):
        mapping = FlowMapping(actions=(Action.CANCEL_SELL,))
        result = replay(uni_model, mapping, SimConfig(horizon=50.0, seed=4))
        assert result.tape == []
        assert result.skipped_cancels == len(result.stream)

    def test_determinism(self, uni_model):
        mapping = FlowMapping(actions=(Action.LIMIT_BUY,), reference_price=5000)
        cfg = SimConfig(horizon=100.0, seed=5)
        a = replay(uni_model, mapping, cfg)
        b = replay(uni_model, mapping, cfg)
        assert a.tape == b.tape
        assert a.quotes == b.quotes
        assert a.book.snapshot(levels=100) == b.book.snapshot(levels=100)

    def test_causality_tape_times_are_event_times(self):
        model = HawkesModel.exponential([0.5, 0.5], 0.3, 1.0)
        mapping = FlowMapping(
            actions=(Action.LIMIT_SELL, Action.MARKET_BUY), reference_price=1000
        )
        result = replay(model, mapping, SimConfig(horizon=300.0, seed=6))
        event_times = set(result.stream.times.tolist())
        tape_times = [e.timestamp for e in result.tape]
        assert all(t in event_times for t in tape_times)
        assert tape_times == sorted(tape_times)

    def test_liquidity_accounting(self):
        model = HawkesModel.exponential([0.4] * 4, 0.1, 1.0)
        mapping = FlowMapping(
            actions=(
                Action.LIMIT_BUY,
                Action.LIMIT_SELL,
                Action.MARKET_SELL,
                Action.CANCEL_BUY,
            ),
            reference_price=2000,
            volume_scale=3.0,
        )
        result = replay(model, mapping, SimConfig(horizon=500.0, seed=7))
        final = result.book.resting_volume()
        assert final == result.rested_volume - result.executed_volume - result.cancelled_volume
        assert final == result.book.recompute_resting()

    def test_symmetric_six_dim_imbalance(self):
        # symmetric buy/sell configuration: signed trade imbalance ~ 0
        model = HawkesModel.exponential([0.5] * 6, 0.05, 1.0)
        mapping = FlowMapping(
            actions=(
                Action.LIMIT_BUY,
                Action.LIMIT_SELL,
                Action.MARKET_BUY,
                Action.MARKET_SELL,
                Action.CANCEL_BUY,
                Action.CANCEL_SELL,
            ),
            reference_price=10_000,
            volume_scale=5.0,
        )
        result = replay(model, mapping, SimConfig(horizon=3000.0, seed=8))
        signed = sum(
            e.volume if e.taker_side == "buy" else -e.volume for e in result.tape
        )
        total = sum(e.volume for e in result.tape)
        assert total > 0
        # binomial-style 3 sigma band on the signed sum
        assert abs(signed) <= 3.0 * np.sqrt(np.sum([e.volume**2 for e in result.tape]))

    def test_quotes_recorded_per_event(self, uni_model):
        mapping = FlowMapping(actions=(Action.LIMIT_BUY,))
        result = replay(uni_model, mapping, SimConfig(horizon=50.0, seed=9))
        assert len(result.quotes) == len(result.stream)
        assert all(q.best_bid is not None for q in result.quotes)

    def test_volume_rule_floor_one(self):
        stream = make_stream([1.0, 2.0], marks=[0.001, 2.6], horizon=3.0)
        mapping = FlowMapping(actions=(Action.LIMIT_BUY,), volume_scale=1.0)
        result = replay_stream(stream, mapping, seed=1)
        vols = [v for _, v in result.book.depth_ladder(Side.BID, 10)]
        assert sum(vols) == 1 + 3  # round(0.001) -> floor 1, round(2.6) -> 3

    def test_limit_prices_never_cross_same_side_anchor(self):
        stream = make_stream(np.linspace(1, 50, 200), horizon=51.0)
        mapping = FlowMapping(
            actions=(Action.LIMIT_BUY,), reference_price=500, offset_p=0.3
        )
        result = replay_stream(stream, mapping, seed=11)
        assert result.book.best_bid() <= 500
