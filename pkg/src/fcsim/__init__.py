"""Monte Carlo simulator and fitting harness for two-photon polarization
coincidence experiments of the Freedman-Clauser type."""

__version__ = "0.1.0"

from .config import (  # noqa: F401
    AnalyzerEfficiencies,
    ExperimentConfig,
    default_config,
)
from .errors import ConfigError, InfeasibleFitError, WeightingError  # noqa: F401
from .models import ModelKind, PairOutcome, simulate_pair  # noqa: F401
from .physics import (  # noqa: F401
    classical_coincidence_ratio,
    collapse_expected_ratio,
    local_realistic_expected_ratio,
    matched_f2,
    qm_coincidence_ratio,
    sigma_star,
    smeared_expected_ratio,
    transmission_probability,
)
from .streams import accept, derive_stream, gaussian_angle, uniform_angle  # noqa: F401
from .runner import (  # noqa: F401
    AngleStats,
    BatchResult,
    ExperimentResult,
    run_batch,
    run_experiment,
    summarize,
)
from .fitting import FitResult, fit_f2, fit_sigma, mean_chi_squared  # noqa: F401
from .analysis import (  # noqa: F401
    CorrelationLength,
    DeviationReport,
    correlation_length,
    deviation_report,
)
from .io import parse_config  # noqa: F401
from .plotting import emit_plot  # noqa: F401
