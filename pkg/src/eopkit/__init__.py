"""Entanglement-of-purification gaps, stabilizer counts, and recovery bounds."""

from .qdense import (
    PartySpec,
    PureState,
    DensityOperator,
    partial_trace,
    entropy,
    entropy_of_region,
    mutual_information,
    conditional_mutual_information,
    relative_entropy,
    fidelity,
    log_negativity,
    canonical_purification,
    reflected_entropy,
    markov_gap,
    haar_random_pure,
)
from .stab import (
    StabilizerTableau,
    TripartiteCounts,
    from_strings,
    parse_tableau,
    format_tableau,
    random_stabilizer,
    region_entropy,
    tripartite_counts,
    pairwise_counts,
    to_dense,
    canonical_state_key,
    enumerate_stabilizer_states,
)
from .eop import (
    AncillaPartition,
    OptimizerConfig,
    EopResult,
    GapReport,
    PolygamyReport,
    MonotonicityReport,
    eop_bipartite,
    gap_bipartite,
    generalized_eop,
    generalized_gap,
    purified_state,
    bipartite_marginal,
    verify_polygamy,
    verify_monotonicity,
    params_from_unitary,
    unitary_from_params,
)
from .recovery import (
    PetzSpec,
    QuadratureWeight,
    beta0,
    default_quadrature,
    petz_kraus,
    petz_apply,
    local_petz_recover,
    rotated_locc_recover,
    measured_relent_lb,
)
from .structure import (
    GsdForm,
    Certificate,
    VERDICT_CERTIFIED,
    VERDICT_NOT,
    VERDICT_REFUTED,
    gsd_detect,
    gsd_values,
    certify_2producible,
    certify_tableau,
    pairwise_gap_scan,
)

__version__ = "0.1.0"

__all__ = [
    "PartySpec", "PureState", "DensityOperator",
    "partial_trace", "entropy", "entropy_of_region",
    "mutual_information", "conditional_mutual_information",
    "relative_entropy", "fidelity", "log_negativity",
    "canonical_purification", "reflected_entropy", "markov_gap",
    "haar_random_pure",
    "StabilizerTableau", "TripartiteCounts",
    "from_strings", "parse_tableau", "format_tableau",
    "random_stabilizer", "region_entropy", "tripartite_counts",
    "pairwise_counts", "to_dense", "canonical_state_key",
    "enumerate_stabilizer_states",
    "AncillaPartition", "OptimizerConfig", "EopResult", "GapReport",
    "PolygamyReport", "MonotonicityReport",
    "eop_bipartite", "gap_bipartite", "generalized_eop", "generalized_gap",
    "purified_state", "bipartite_marginal",
    "verify_polygamy", "verify_monotonicity",
    "params_from_unitary", "unitary_from_params",
    "PetzSpec", "QuadratureWeight", "beta0", "default_quadrature",
    "petz_kraus", "petz_apply", "local_petz_recover", "rotated_locc_recover",
    "measured_relent_lb",
    "GsdForm", "Certificate",
    "VERDICT_CERTIFIED", "VERDICT_NOT", "VERDICT_REFUTED",
    "gsd_detect", "gsd_values", "certify_2producible", "certify_tableau",
    "pairwise_gap_scan",
]
