from .clustering import ClusterResult, correlation_clusters, ward_linkage
from .impact import (
    COMPONENTS,
    ComponentImpact,
    EventProfile,
    ImpactReport,
    InterconnectReport,
    RiskProfile,
    cross_layer_impact,
    intra_inter_impact,
    multi_event_profile,
    profile,
    risk_profile,
)
from .sensitivity import ErrorMix, SensitivityResult, sensitivity_run
from .stats import ConnectivityTables, connectivity_stats, intra_fraction_per_p_country
from .sweep import SweepRow, parse_probabilities, probability_sweep

__all__ = [
    "COMPONENTS",
    "ClusterResult",
    "ComponentImpact",
    "ConnectivityTables",
    "ErrorMix",
    "EventProfile",
    "ImpactReport",
    "InterconnectReport",
    "RiskProfile",
    "SensitivityResult",
    "SweepRow",
    "connectivity_stats",
    "correlation_clusters",
    "cross_layer_impact",
    "intra_fraction_per_p_country",
    "intra_inter_impact",
    "multi_event_profile",
    "parse_probabilities",
    "probability_sweep",
    "profile",
    "risk_profile",
    "sensitivity_run",
    "ward_linkage",
]
