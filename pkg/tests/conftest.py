import numpy as np
import pytest

from hawkeslob import EventStream, HawkesModel, SimConfig, simulate_thinning


def pytest_terminal_summary(terminalreporter):
    """One visible pass/fail line per acceptance criterion."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, ok in RESULTS:
            terminalreporter.write_line(
                f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}"
            )


@pytest.fixture
def uni_model():
    """The synthetic calibration setup: mu=0.5, alpha=1.2, beta=1.5."""
    return HawkesModel.exponential(0.5, 1.2, 1.5)


@pytest.fixture
def btc_model():
    """The calibrated BTCUSDT exponential parameterization."""
    return HawkesModel.exponential(4.127, 1.854, 2.321)


@pytest.fixture
def medium_stream(uni_model):
    """~1000 events from the synthetic setup; session-stable seed."""
    return simulate_thinning(uni_model, SimConfig(horizon=400.0, seed=2024))


def make_stream(times, dims=None, marks=None, horizon=None, d=1):
    times = np.asarray(times, dtype=float)
    n = len(times)
    if dims is None:
        dims = np.zeros(n, dtype=int)
    if marks is None:
        marks = np.ones(n)
    if horizon is None:
        horizon = float(times[-1]) if n else 1.0
    return EventStream(times, dims, marks, horizon=horizon, d=d)
