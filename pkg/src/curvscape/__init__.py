"""Curvature filtrations and persistence landscapes for comparing graph distributions."""

from curvscape.curvature import (
    EdgeFunction,
    MeasureConfig,
    NodeMeasure,
    curvature,
    forman,
    node_measure,
    ollivier_ricci,
    resistance_curvature,
    resistance_data,
    wasserstein1,
)
from curvscape.errors import (
    ComputationError,
    CurvscapeError,
    DegenerateMeasureError,
    DisconnectedError,
    ExhaustionError,
    InputError,
    UndefinedCorrelationError,
)
from curvscape.graph import (
    Graph,
    GraphSet,
    PerturbationSpec,
    generate_community,
    generate_er,
    load_edge_list,
    load_graph,
    load_graph_set,
    named_graph,
    perturb,
    sample_graphon,
)
from curvscape.landscape import (
    DistanceReport,
    LandscapeGrid,
    PersistenceLandscape,
    PipelineConfig,
    average,
    landscape_distance,
    landscape_norm,
    set_distance,
    to_landscape,
)
from curvscape.persistence import (
    PersistenceDiagram,
    betti_oracle,
    bottleneck,
    build_filtration,
    diagram,
    diagram_bound_lower,
    diagram_bound_upper,
    persistence_diagram,
)
from curvscape.stats import (
    BoundCheckReport,
    PermutationTestResult,
    PerturbationReport,
    adjusted_rand_index,
    check_forman_bounds,
    check_orc_bounds,
    check_resistance_bounds,
    pairwise_distinguish,
    pearson,
    permutation_test,
    perturbation_sweep,
    spectral_cluster,
)

__version__ = "0.1.0"
