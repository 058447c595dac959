import json

import numpy as np
import pytest

from hawkeslob import (
    DeterministicMarks,
    ExpKernel,
    ExponentialMarks,
    HawkesModel,
    LogNormalMarks,
    PositivePartLink,
    PowerLawKernel,
    SaturatedLinearLink,
    SimConfig,
    ZeroKernel,
    fit_mle,
    simulate_thinning,
)
from hawkeslob import serialize as ser


def rich_model():
    return HawkesModel(
        [0.5, 1.1],
        (
            (ExpKernel(1.2, 1.5), PowerLawKernel(0.3, 0.8, 2.1)),
            (ZeroKernel(), ExpKernel(0.4, 2.0)),
        ),
        marks=(LogNormalMarks(0.1, 0.6), ExponentialMarks(2.0, normalize_excitation=False)),
        links=(PositivePartLink(0.05), SaturatedLinearLink(40.0)),
    )


class TestModelRoundTrip:
    def test_full_round_trip(self):
        model = rich_model()
        data = ser.model_to_dict(model)
        back = ser.model_from_dict(json.loads(json.dumps(data)))
        assert np.array_equal(back.mu, model.mu)
        assert back.kernels == model.kernels
        assert back.marks == model.marks
        assert back.links == model.links

    def test_unknown_keys_rejected_everywhere(self):
        data = ser.model_to_dict(rich_model())
        data["kernlels"] = []
        with pytest.raises(ValueError, match="unknown keys"):
            ser.model_from_dict(data)
        data2 = ser.model_to_dict(rich_model())
        data2["kernels"][0][0]["alfa"] = 1.0
        with pytest.raises(ValueError, match="unknown keys"):
            ser.model_from_dict(data2)

    def test_declared_d_checked(self):
        data = ser.model_to_dict(rich_model())
        data["d"] = 3
        with pytest.raises(ValueError, match="declared d"):
            ser.model_from_dict(data)

    def test_minimal_model_defaults(self):
        model = ser.model_from_dict(
            {"mu": [1.0], "kernels": [[{"type": "zero"}]]}
        )
        assert isinstance(model.marks[0], DeterministicMarks)


class TestRunConfig:
    def test_round_trip_with_mapping(self):
        raw = {
            "model": {"mu": [1.0], "kernels": [[{"type": "zero"}]]},
            "sim": {"horizon": 10.0, "seed": 3},
            "mapping": {"actions": ["market_buy"], "volume_scale": 2.0},
            "fit": {"kernel": "powerlaw", "max_iter": 500},
            "diagnostics": {"max_lag": 10},
            "io": {"input": "in.csv", "out": "out.csv"},
        }
        cfg = ser.run_config_from_dict(raw)
        assert cfg.sim == SimConfig(horizon=10.0, seed=3)
        assert cfg.mapping.volume_scale == 2.0
        assert cfg.fit.kernel == "powerlaw"
        assert cfg.fit.settings.max_iter == 500
        assert cfg.diagnostics.max_lag == 10
        assert cfg.input_path == "in.csv"

    def test_missing_required(self):
        with pytest.raises(ValueError, match="missing keys"):
            ser.run_config_from_dict({"model": {"mu": [1.0], "kernels": [[{"type": "zero"}]]}})

    def test_unknown_top_level(self):
        raw = {
            "model": {"mu": [1.0], "kernels": [[{"type": "zero"}]]},
            "sim": {"horizon": 1.0},
            "simulate": {},
        }
        with pytest.raises(ValueError, match="unknown keys"):
            ser.run_config_from_dict(raw)


class TestEventsCsv:
    def test_round_trip_exact(self, tmp_path):
        model = HawkesModel.exponential(0.8, 0.5, 1.0, marks=(LogNormalMarks(0.0, 0.7),))
        stream = simulate_thinning(model, SimConfig(horizon=200.0, seed=4))
        path = tmp_path / "events.csv"
        ser.write_events_csv(path, stream)
        back = ser.read_events_csv(path, horizon=stream.horizon, d=1)
        assert np.array_equal(back.marks, stream.marks), "marks exact"
        assert np.allclose(back.times, stream.times, atol=1e-9)
        # 12 fractional digits round-trip exactly at this magnitude
        assert np.array_equal(back.times, stream.times)

    def test_header_enforced(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b,c\n")
        with pytest.raises(ValueError):
            ser.read_events_csv(path)

    def test_atomic_write_replaces(self, tmp_path):
        path = tmp_path / "f.txt"
        ser.write_text_atomic(path, "one")
        ser.write_text_atomic(path, "two")
        assert path.read_text() == "two"
        assert list(tmp_path.iterdir()) == [path]  # no temp litter


class TestFitResultJson:
    def test_serializes_cleanly(self):
        model = HawkesModel.exponential(0.5, 1.2, 1.5)
        stream = simulate_thinning(model, SimConfig(horizon=300.0, seed=5))
        fit = fit_mle(stream)
        data = ser.fit_result_to_dict(fit)
        text = json.dumps(data, sort_keys=True)
        parsed = json.loads(text)
        assert parsed["converged"] is True
        assert parsed["settings"]["method"] == "nelder-mead"
        refit_model = ser.model_from_dict(parsed["model"])
        assert refit_model.d == 1
