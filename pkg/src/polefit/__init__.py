"""Pole-zero identification toolkit for amplifier stability analysis.

Core workflow: sample or synthesize a frequency response, identify a
pole-residue model with automatic order selection (resonant or
non-resonant), screen the terms with the normalized residue factor rho,
and study robustness with Monte-Carlo parameter dispersion.
"""

__version__ = "0.1.0"

from .errors import (
    ArgumentError,
    DegenerateModelError,
    DegenerateResonanceError,
    EmptyModelError,
    EvaluationError,
    FormatError,
    IllConditionedError,
    MetricError,
    PoleAtOriginError,
    PolefitError,
    RelocationDegenerateError,
)
from .freqresp import (
    FrequencyGrid,
    FrequencyResponse,
    band_split,
    load_csv,
    make_linear_grid,
    make_log_grid,
    save_csv,
)
from .identification import FitOptions, fit_residues, identify, relocate_poles
from .montecarlo import (
    DispersionSpec,
    PoleMap,
    ScatterStats,
    classify_stability,
    run_mc,
    scatter_stats,
)
from .order_selection import (
    OrderSelectionConfig,
    estimate_initial_pairs,
    nonresonant_order_selection,
    resonant_order_selection,
    select_order,
)
from .rational import (
    PoleTerm,
    RationalModel,
    evaluate,
    load_model,
    phase_error_deg,
    save_model,
    zeros,
)
from .residues import (
    MimoResult,
    RhoRecord,
    RhoReport,
    cancellation_report,
    mimo_identify,
    prune,
    rank_ports,
    rho_complex,
    rho_real,
)
from .synth import (
    CircuitTemplate,
    FloquetImageSpec,
    Resonator,
    ThermalCell,
    floquet_images,
    preset,
    synth_response,
    template_poles,
    thermal_cell_poles,
)
