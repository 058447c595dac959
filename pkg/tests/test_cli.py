import json
from pathlib import Path

import numpy as np
import pytest

from hawkeslob import serialize as ser
from hawkeslob.cli import main

FIXTURES = Path(__file__).parent / "fixtures"


def base_config(seed=42, horizon=60.0, mu=0.5, alpha=1.2, beta=1.5, extra=None):
    cfg = {
        "model": {
            "mu": [mu],
            "kernels": [[{"type": "exponential", "alpha": alpha, "beta": beta}]],
        },
        "sim": {"horizon": horizon, "seed": seed, "method": "thinning"},
    }
    if extra:
        cfg.update(extra)
    return cfg


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


class TestSimulateCommand:
    def test_writes_events_and_sidecar(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        out = str(tmp_path / "events.csv")
        assert main(["simulate", "--config", cfg, "--out", out]) == 0
        stream = ser.read_events_csv(out)
        assert len(stream) > 10
        sidecar = json.loads(Path(out + ".stability.json").read_text())
        assert sidecar["rho_g"] == pytest.approx(0.8)
        assert sidecar["stable"] is True
        assert sidecar["mean_intensity"][0] == pytest.approx(2.5)

    def test_reference_parameters_sidecar(self, tmp_path):
        # the interface-shape example: mu 0.5, alpha 1.5, beta 2.0 -> rho 0.75
        cfg = write_config(tmp_path, base_config(alpha=1.5, beta=2.0, horizon=100.0))
        out = str(tmp_path / "events.csv")
        assert main(["simulate", "--config", cfg, "--out", out]) == 0
        sidecar = json.loads(Path(out + ".stability.json").read_text())
        assert sidecar["rho_lg"] == pytest.approx(0.75)

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        out1, out2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        main(["simulate", "--config", cfg, "--out", out1])
        main(["simulate", "--config", cfg, "--out", out2])
        assert Path(out1).read_bytes() == Path(out2).read_bytes()
        assert (
            Path(out1 + ".stability.json").read_bytes()
            == Path(out2 + ".stability.json").read_bytes()
        )

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = write_config(tmp_path, base_config(seed=1))
        out1, out2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        main(["simulate", "--config", cfg, "--out", out1, "--seed", "2"])
        main(["simulate", "--config", cfg, "--out", out2])
        assert Path(out1).read_bytes() != Path(out2).read_bytes()

    def test_unstable_refused_without_flag(self, tmp_path, capsys):
        cfg = write_config(tmp_path, base_config(alpha=1.2, beta=1.0))  # rho 1.2
        out = str(tmp_path / "events.csv")
        assert main(["simulate", "--config", cfg, "--out", out]) == 1
        assert "rho(LG) = 1.2" in capsys.readouterr().err
        assert not Path(out).exists()  # no partial artifacts

    def test_unstable_allowed_with_flag(self, tmp_path):
        cfg = write_config(
            tmp_path, base_config(alpha=1.2, beta=1.0, horizon=5.0)
        )
        out = str(tmp_path / "events.csv")
        code = main(["simulate", "--config", cfg, "--out", out, "--allow-unstable"])
        assert code == 0
        assert json.loads(Path(out + ".stability.json").read_text())["stable"] is False

    def test_unknown_config_keys_rejected(self, tmp_path):
        cfg = write_config(tmp_path, base_config(extra={"simulator": {}}))
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2

    def test_unknown_nested_keys_rejected(self, tmp_path):
        raw = base_config()
        raw["sim"]["horizont"] = 10.0
        cfg = write_config(tmp_path, raw)
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2

    def test_burn_in_flag_shifts_stream(self, tmp_path):
        cfg = write_config(tmp_path, base_config(horizon=50.0))
        plain, burned = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        main(["simulate", "--config", cfg, "--out", plain])
        main(["simulate", "--config", cfg, "--out", burned, "--burn-in", "25"])
        a = ser.read_events_csv(plain, horizon=50.0)
        b = ser.read_events_csv(burned, horizon=50.0)
        assert b.times[-1] <= 50.0
        assert len(b) != len(a) or not np.allclose(a.times, b.times)

    def test_out_falls_back_to_config_io(self, tmp_path):
        out = str(tmp_path / "from_config.csv")
        raw = base_config(extra={"io": {"out": out}})
        cfg = write_config(tmp_path, raw)
        assert main(["simulate", "--config", cfg]) == 0
        assert Path(out).exists()
        raw2 = base_config()
        cfg2 = write_config(tmp_path, raw2, name="c2.json")
        assert main(["simulate", "--config", cfg2]) == 2  # no path anywhere


@pytest.fixture(scope="module")
def events_path(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("fit")
    cfg = write_config(tmp, base_config(horizon=400.0, seed=101))
    out = str(tmp / "events.csv")
    main(["simulate", "--config", cfg, "--out", out])
    return out


@pytest.fixture(scope="module")
def diag_setup(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("diag")
    cfg = write_config(tmp, base_config(horizon=400.0, seed=11))
    events = str(tmp / "events.csv")
    main(["simulate", "--config", cfg, "--out", events])
    params = tmp / "model.json"
    params.write_text(
        json.dumps(
            {
                "mu": [0.5],
                "kernels": [[{"type": "exponential", "alpha": 1.2, "beta": 1.5}]],
            }
        )
    )
    return events, str(params), tmp


class TestFitCommand:
    def test_fit_recovers_and_exits_zero(self, events_path, tmp_path):
        out = str(tmp_path / "fit.json")
        code = main(["fit", "--input", events_path, "--out", out, "--horizon", "400"])
        assert code == 0
        result = json.loads(Path(out).read_text())
        assert result["converged"] is True
        k = result["model"]["kernels"][0][0]
        assert abs(result["model"]["mu"][0] - 0.5) < 3 * 0.031
        assert abs(k["alpha"] - 1.2) < 3 * 0.098
        assert abs(k["beta"] - 1.5) < 3 * 0.121

    def test_fit_deterministic(self, events_path, tmp_path):
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        main(["fit", "--input", events_path, "--out", a, "--horizon", "400"])
        main(["fit", "--input", events_path, "--out", b, "--horizon", "400"])
        assert Path(a).read_bytes() == Path(b).read_bytes()

    def test_empty_input_exit_2(self, tmp_path):
        bad = tmp_path / "empty.csv"
        bad.write_text("time,dim,mark\n")
        assert main(["fit", "--input", str(bad), "--out", str(tmp_path / "f.json")]) == 2

    def test_garbage_input_exit_2(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("not,a,header\n1,2,3\n")
        assert main(["fit", "--input", str(bad), "--out", str(tmp_path / "f.json")]) == 2

    def test_non_convergence_exit_3_best_so_far_written(self, events_path, tmp_path):
        out = str(tmp_path / "fit.json")
        code = main(
            ["fit", "--input", events_path, "--out", out,
             "--horizon", "400", "--max-iter", "3"]
        )
        assert code == 3
        result = json.loads(Path(out).read_text())
        assert result["converged"] is False
        assert result["model"]["mu"][0] > 0  # best-so-far still valid

    def test_config_supplies_fit_defaults(self, events_path, tmp_path):
        raw = base_config(horizon=400.0, seed=101)
        raw["fit"] = {"kernel": "exponential", "max_iter": 3}
        raw["io"] = {"input": events_path, "out": str(tmp_path / "fit.json")}
        cfg = write_config(tmp_path, raw)
        code = main(["fit", "--config", cfg, "--horizon", "400"])
        assert code == 3  # three iterations cannot converge
        assert json.loads((tmp_path / "fit.json").read_text())["converged"] is False
        # flags override the config
        code = main(["fit", "--config", cfg, "--horizon", "400",
                     "--max-iter", "2000"])
        assert code == 0

    def test_missing_paths_exit_2(self, tmp_path):
        assert main(["fit", "--out", str(tmp_path / "f.json")]) == 2
        assert main(["diagnose", "--out", str(tmp_path / "r.json")]) == 2

    def test_bootstrap_flag_adds_std_errors(self, events_path, tmp_path):
        out = str(tmp_path / "fit.json")
        code = main(
            ["fit", "--input", events_path, "--out", out, "--horizon", "400",
             "--bootstrap", "5", "--seed", "7"]
        )
        assert code == 0
        result = json.loads(Path(out).read_text())
        assert set(result["std_errors"]) == {"mu", "alpha", "beta"}


class TestDiagnoseCommand:
    def test_true_model_diagnosis(self, diag_setup, tmp_path, capsys):
        events, params, _ = diag_setup
        out = str(tmp_path / "report.json")
        code = main(
            ["diagnose", "--input", events, "--params", params,
             "--out", out, "--horizon", "400"]
        )
        assert code == 0
        printed = capsys.readouterr().out
        assert "KS=" in printed and "ACF1=" in printed
        report = json.loads(Path(out).read_text())
        assert report["ks_pvalue"] >= 0.05
        assert Path(out + ".residuals.csv").exists()
        assert Path(out + ".qq.csv").exists()

    def test_poisson_params_fail_diagnosis(self, diag_setup, tmp_path):
        events, params, tmp = diag_setup
        stream = ser.read_events_csv(events, horizon=400.0)
        poisson = tmp / "poisson.json"
        poisson.write_text(
            json.dumps({"mu": [len(stream) / 400.0], "kernels": [[{"type": "zero"}]]})
        )
        out = str(tmp_path / "report.json")
        main(["diagnose", "--input", events, "--params", str(poisson),
              "--out", out, "--horizon", "400"])
        report = json.loads(Path(out).read_text())
        assert report["ks_pvalue"] < 0.05
        # KS statistic an order of magnitude above the true model's
        out_true = str(tmp_path / "true.json")
        main(["diagnose", "--input", events, "--params", params,
              "--out", out_true, "--horizon", "400"])
        true_report = json.loads(Path(out_true).read_text())
        assert report["ks_stat"] >= 5.0 * true_report["ks_stat"]

    def test_dimension_mismatch_exit_2(self, diag_setup, tmp_path):
        events, params, _ = diag_setup
        code = main(
            ["diagnose", "--input", events, "--params", params,
             "--out", str(tmp_path / "r.json"), "--dim", "5"]
        )
        assert code == 2

    def test_byte_identical(self, diag_setup, tmp_path):
        events, params, _ = diag_setup
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        for out in (a, b):
            main(["diagnose", "--input", events, "--params", params,
                  "--out", out, "--horizon", "400"])
        assert Path(a).read_bytes() == Path(b).read_bytes()

    def test_config_supplies_model_and_paths(self, diag_setup, tmp_path):
        events, params, _ = diag_setup
        out = str(tmp_path / "via_config.json")
        raw = base_config(horizon=400.0)
        raw["io"] = {"input": events, "out": out}
        raw["diagnostics"] = {"dim": 0, "max_lag": 5}
        cfg = write_config(tmp_path, raw)
        assert main(["diagnose", "--config", cfg, "--horizon", "400"]) == 0
        report = json.loads(Path(out).read_text())
        assert len(report["acf"]) == 6  # config max_lag honored
        # equal to the flag-driven run on the same model
        flag_out = str(tmp_path / "via_flags.json")
        main(["diagnose", "--input", events, "--params", params,
              "--out", flag_out, "--horizon", "400", "--max-lag", "5"])
        assert Path(out).read_bytes() == Path(flag_out).read_bytes()


class TestReplayCommand:
    def replay_config(self, tmp_path, horizon=200.0):
        cfg = {
            "model": {
                "mu": [0.4] * 6,
                "kernels": [
                    [
                        {"type": "exponential", "alpha": 0.05, "beta": 1.0}
                        for _ in range(6)
                    ]
                    for _ in range(6)
                ],
            },
            "sim": {"horizon": horizon, "seed": 3, "method": "thinning"},
            "mapping": {
                "actions": [
                    "limit_buy", "limit_sell", "market_buy",
                    "market_sell", "cancel_buy", "cancel_sell",
                ],
                "reference_price": 10000,
                "volume_scale": 5.0,
            },
        }
        return write_config(tmp_path, cfg)

    def test_writes_three_artifacts(self, tmp_path):
        cfg = self.replay_config(tmp_path)
        prefix = str(tmp_path / "run")
        assert main(["replay", "--config", cfg, "--out-prefix", prefix]) == 0
        quotes = Path(prefix + "_quotes.csv").read_text().splitlines()
        assert quotes[0] == "time,best_bid,best_ask,mid,spread"
        assert len(quotes) > 10
        tape = Path(prefix + "_tape.csv").read_text().splitlines()
        assert tape[0] == "time,taker_side,price,volume,maker_id"
        book = json.loads(Path(prefix + "_book.json").read_text())
        assert "bids" in book and "asks" in book

    def test_byte_identical(self, tmp_path):
        cfg = self.replay_config(tmp_path)
        p1, p2 = str(tmp_path / "r1"), str(tmp_path / "r2")
        main(["replay", "--config", cfg, "--out-prefix", p1])
        main(["replay", "--config", cfg, "--out-prefix", p2])
        for suffix in ("_tape.csv", "_quotes.csv", "_book.json"):
            assert Path(p1 + suffix).read_bytes() == Path(p2 + suffix).read_bytes()

    def test_missing_mapping_exit_2(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        assert main(["replay", "--config", cfg, "--out-prefix", str(tmp_path / "r")]) == 2

    def test_zero_horizon_valid_empty_outputs(self, tmp_path):
        raw = base_config(extra={"mapping": {"actions": ["market_buy"]}})
        raw["sim"]["horizon"] = 0
        cfg = write_config(tmp_path, raw)
        prefix = str(tmp_path / "empty")
        assert main(["replay", "--config", cfg, "--out-prefix", prefix]) == 0
        assert Path(prefix + "_tape.csv").read_text() == "time,taker_side,price,volume,maker_id\n"
        quotes = Path(prefix + "_quotes.csv").read_text()
        assert quotes == "time,best_bid,best_ask,mid,spread\n"
        book = json.loads(Path(prefix + "_book.json").read_text())
        assert book["bids"] == [] and book["asks"] == []

    def test_short_mapping_exit_2(self, tmp_path):
        raw = base_config(extra={"mapping": {"actions": []}})
        cfg = write_config(tmp_path, raw)
        assert main(["replay", "--config", cfg, "--out-prefix", str(tmp_path / "r")]) == 2

    def test_lobster_mode(self, tmp_path):
        ops_out = str(tmp_path / "ops.csv")
        assert main(
            ["ingest", "--source", "lobster",
             "--input", str(FIXTURES / "lobster_sample.csv"), "--out", ops_out]
        ) == 0
        prefix = str(tmp_path / "lob")
        assert main(["replay", "--lobster", ops_out, "--out-prefix", prefix]) == 0
        tape = Path(prefix + "_tape.csv").read_text().splitlines()
        assert len(tape) == 2  # header + the one type-4 execution
        assert ",sell,5859000,60,11885113" in tape[1]


class TestIngestCommand:
    def test_binance_conserves_volume(self, tmp_path, capsys):
        out = str(tmp_path / "events.csv")
        code = main(
            ["ingest", "--source", "binance",
             "--input", str(FIXTURES / "binance_sample.csv"), "--out", out]
        )
        assert code == 0
        stream = ser.read_events_csv(out, d=2)
        assert np.sum(stream.marks[stream.dims == 0]) == pytest.approx(0.110)
        assert np.sum(stream.marks[stream.dims == 1]) == pytest.approx(0.100)
        marks_meta = json.loads(Path(out + ".marks.json").read_text())
        assert len(marks_meta["marks"]) == 2

    def test_wrong_column_count_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,2,3\n")
        code = main(
            ["ingest", "--source", "binance", "--input", str(bad),
             "--out", str(tmp_path / "o.csv")]
        )
        assert code == 2
        assert "line 1" in capsys.readouterr().err

    def test_lobster_warnings_on_stderr(self, tmp_path, capsys):
        out = str(tmp_path / "ops.csv")
        main(["ingest", "--source", "lobster",
              "--input", str(FIXTURES / "lobster_sample.csv"), "--out", out])
        err = capsys.readouterr().err
        assert "hidden" in err
        assert "before this file" in err
