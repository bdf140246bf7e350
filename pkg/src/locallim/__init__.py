"""locallim: marked rooted trees, unimodular Galton-Watson samplers, colored
configuration models, and graph-ensemble entropy at desk scale."""

__version__ = "0.1.0"

from .trees import (
    CanonicalTree,
    GraphicalPair,
    HalfTree,
    MarkSpace,
    NotGraphicalError,
    StructureError,
    canonicalize,
    depth1_type_counts,
    eh_count,
    eh_table,
    extract_graphical,
    half_tree_cut,
    leaf,
    odot,
    oplus,
    otimes,
    tree_from_graphical,
    tree_from_json,
    tree_to_json,
    truncate,
)
from .graphs import (
    CanonicalGraph,
    MarkedGraph,
    MarkCountVectors,
    colored_degree,
    empirical_dist,
    etype,
    girth,
    graph_from_json,
    graph_to_json,
    is_h_treelike,
    mark_counts,
    neighborhood,
)
from .dists import (
    DegenerateDistributionError,
    NeighborhoodDist,
    SizeBiasedKernel,
    SupportExplosionError,
    e_p,
    extend_exact,
    is_admissible,
    j_h,
    pi_p,
    point_mass,
    shannon_entropy,
    size_biased,
    truncate_dist,
)
from .ugwt import (
    ColoredDegreeLaw,
    ColoredTreeSample,
    InvolutionReport,
    SampledTree,
    UgwtSampler,
    degree_truncate,
    involution_check,
    log_weight,
    sample_cugwt,
    sample_ugwt,
)
from .colored import (
    ColoredDegreeSequence,
    DirectedColoredMultigraph,
    Multigraph,
    ResourceLimitError,
    acceptance_fraction,
    enumerate_girth_constrained,
    exact_config_count,
    girth_at_most,
    log_config_count,
    log_count_girth,
    sample_cm,
    sample_girth_constrained,
)
from .convert import (
    RealizationPlan,
    TypeTable,
    adapted_counts,
    colored_of,
    exact_n_h,
    log_n_h,
    mcb,
    message_types,
    n_perm_count,
    realize,
)
from .metrics import (
    DistanceReport,
    brute_force_ball_count,
    exact_count,
    exact_log_count,
    lp_upper,
    stirling_log_count,
    tv_distance,
)
