"""Marked multivariate Hawkes order flow coupled to a deterministic
price-time-priority limit order book.

Simulation (thinning and cluster), maximum-likelihood calibration with the
O(n) exponential recursion, time-rescaling goodness-of-fit diagnostics, LOB
matching and replay, and Binance/LOBSTER ingestion.  Hot kernels run on a
compiled backend when built, with a pure-Python fallback
(``hawkeslob.backend_name()`` reports which one is active).
"""
from ._backends import backend_name
from .book import Book, DuplicateOrderError, Execution, Order, OrderNotFoundError, Side, Snapshot
from .bridge import Action, FlowMapping, QuoteRow, ReplayResult, replay, replay_stream
from .diagnostics import (
    ComparisonRow,
    DiagnosticsReport,
    KsResult,
    acf,
    build_report,
    compare_models,
    ks_statistic,
    rescaled_residuals,
    uniform_residuals,
)
from .fitting import (
    BootstrapResult,
    FitResult,
    FitSettings,
    attach_bootstrap,
    bootstrap_std_errors,
    compensator,
    excitation_state,
    fit_mle,
    log_likelihood,
)
from .ingest import (
    BookOp,
    LobsterMessage,
    LobsterReplaySpec,
    ParseError,
    TradeRecord,
    aggregate_trades,
    fit_lognormal_marks,
    lobster_to_orders,
    parse_binance_trades,
    parse_lobster,
)
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
    StabilityError,
    StabilityReport,
    ZeroKernel,
    excitation_matrix,
    intensity_at,
    spectral_radius,
    stability_check,
    stationary_mean_intensity,
)
from .simulate import (
    ExplosionError,
    SimConfig,
    derive_seed,
    simulate,
    simulate_cluster,
    simulate_thinning,
)

__version__ = "0.1.0"
