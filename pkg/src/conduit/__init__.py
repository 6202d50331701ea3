"""Withholding-tax network analysis: conduit jurisdictions and communities."""

__version__ = "0.1.0"

from .centrality import (
    CentralityScores,
    Kind,
    RankingTable,
    betweenness_centrality,
    load_centrality,
    pair_load,
    rank,
    sweep_centrality,
)
from .community import (
    AffinityGraph,
    LouvainConfig,
    Mode,
    ModularityCurve,
    Partition,
    community_report,
    delta_q,
    louvain,
    modularity,
    sweep_modularity,
    to_affinity,
)
from .graph import (
    DEFAULT_THRESHOLDS,
    TaxGraph,
    UndirectedTaxGraph,
    Weight,
    apply_threshold,
    apply_threshold_undirected,
    build_directed,
    isolated_vertices,
    to_undirected,
)
from .paths import Route, ShortestPathDag, best_routes, dijkstra_dag, min_cost
from .registry import (
    IncomeType,
    JurisdictionRegistry,
    RateMatrix,
    ValidationReport,
    default_registry,
    generate_synthetic,
    load_registry,
    parse_rate_matrix,
    validate,
)

__all__ = [
    "AffinityGraph", "CentralityScores", "DEFAULT_THRESHOLDS", "IncomeType", "JurisdictionRegistry", "Kind",
    "LouvainConfig", "Mode", "ModularityCurve", "Partition", "RankingTable", "RateMatrix", "Route",
    "ShortestPathDag", "TaxGraph", "UndirectedTaxGraph", "ValidationReport", "Weight", "apply_threshold",
    "apply_threshold_undirected", "best_routes", "betweenness_centrality", "build_directed", "community_report",
    "default_registry", "delta_q", "dijkstra_dag", "generate_synthetic", "isolated_vertices", "load_centrality",
    "load_registry", "louvain", "min_cost", "modularity", "pair_load", "parse_rate_matrix", "rank",
    "sweep_centrality", "sweep_modularity", "to_affinity", "to_undirected", "validate",
]
