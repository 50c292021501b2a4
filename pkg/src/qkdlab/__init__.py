"""Key-rate modeling for weak-coherent-pulse BB84 with and without decoy states."""

from .channel import (
    PRESETS,
    ConditionalYields,
    DetectionStats,
    ExperimentPreset,
    LinkEfficiencies,
    dark_adjusted,
    detection_stats,
    get_preset,
    i_photon_transmittance,
    key_bit_rate,
    link_efficiency,
    link_from_eta,
)
from .config import dump_config, load_config
from .decoy import (
    DecoyObservation,
    YieldEstimate,
    expected_vacuum_stats,
    multi_decoy_solve,
    simulate_decoy_observations,
    vacuum_consistency_check,
    weak_decoy_estimate,
)
from .errors import ConfigurationError, DomainError, QKDLabError
from .optimizer import (
    OptimizationResult,
    cutoff_distance,
    maximize_rate_over_mu,
    optimal_mu_decoy_approx,
    optimal_mu_no_decoy_approx,
)
from .postprocessing import (
    DEFAULT_EC_TABLE,
    PROTOCOLS,
    EcEfficiencyTable,
    RateResult,
    TaggedClass,
    binary_entropy,
    ec_efficiency,
    rate_for_protocol,
    residue_decoy,
    residue_gllp,
    residue_lutkenhaus,
    residue_tagged_general,
)
from .sweep import SweepSpec, emit_csv, run_sweep

__version__ = "0.1.0"

__all__ = [
    "PRESETS",
    "ConditionalYields",
    "DetectionStats",
    "ExperimentPreset",
    "LinkEfficiencies",
    "dark_adjusted",
    "detection_stats",
    "get_preset",
    "i_photon_transmittance",
    "key_bit_rate",
    "link_efficiency",
    "link_from_eta",
    "DecoyObservation",
    "YieldEstimate",
    "expected_vacuum_stats",
    "multi_decoy_solve",
    "simulate_decoy_observations",
    "vacuum_consistency_check",
    "weak_decoy_estimate",
    "OptimizationResult",
    "cutoff_distance",
    "maximize_rate_over_mu",
    "optimal_mu_decoy_approx",
    "optimal_mu_no_decoy_approx",
    "DEFAULT_EC_TABLE",
    "PROTOCOLS",
    "EcEfficiencyTable",
    "RateResult",
    "TaggedClass",
    "binary_entropy",
    "ec_efficiency",
    "rate_for_protocol",
    "residue_decoy",
    "residue_gllp",
    "residue_lutkenhaus",
    "residue_tagged_general",
    "dump_config",
    "load_config",
    "ConfigurationError",
    "DomainError",
    "QKDLabError",
    "SweepSpec",
    "emit_csv",
    "run_sweep",
]
