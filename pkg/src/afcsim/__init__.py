"""Cavity-enhanced atomic-frequency-comb memory simulator."""

from .analytics import (
    DecayFit,
    DepthOptimum,
    EfficiencyModel,
    eta_cavity,
    eta_dephasing,
    eta_forward,
    fit_decay,
    impedance_matched_depth,
    optimize_depth,
    optimize_forward_depth,
)
from .cavity import (
    CavitySpec,
    LinewidthReport,
    cavity_reflection,
    cavity_transmission,
    check_impedance,
    resonance_linewidth,
    round_trip_phase,
)
from .errors import (
    AfcSimError,
    BalanceError,
    ConfigError,
    GridMismatchError,
    GridResolutionError,
    NoResonanceError,
    PulseClippedError,
    UnmatchedConfigError,
    ValidationError,
)
from .medium import (
    AbsorptionProfile,
    CombSpec,
    FrequencyGrid,
    ToothShape,
    TransferFunction,
    build_comb_profile,
    comb_effective_depth,
    flat_profile,
    kramers_kronig_phase,
    peak_od_for_depth,
    single_pass_transfer,
    unity_transfer,
)
from .montecarlo import (
    CountHistogram,
    CountingConfig,
    HistogramTag,
    estimate_efficiency,
    fringe_counts,
    run_counting,
    trace_to_bin_means,
)
from .propagation import (
    BandwidthPoint,
    PulseEnvelope,
    StoragePipeline,
    StorageResult,
    StorageTimePoint,
    grid_for_comb,
    make_gaussian_pulse,
    matched_comb,
    propagate,
    scan_bandwidth,
    scan_storage_time,
    storage_efficiency,
)
from .timebin import (
    FidelityReport,
    FringeScan,
    TimeBinQubit,
    analyzer_phase,
    analyzer_transfer,
    balance_analyzer,
    fidelity_report,
    fit_fringe,
    fringe_scan,
    make_timebin_qubit,
    pole_fidelity,
    wcs_threshold,
)

__version__ = "0.1.0"
