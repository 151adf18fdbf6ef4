"""Step-kernel densities for bipartite graphs, degree-regularization
transforms, reflective tree decompositions, and Sidorenko-gap search."""

from .errors import PreconditionError, SchemaError
from .bigraph import (
    Bigraph,
    Flag,
    DegreeProfile,
    edge,
    star,
    path,
    even_cycle,
    book,
    complete_bipartite,
    standard,
    induced,
    remove_vertex,
    remove_edges,
    dual,
    degree_profile,
    left_edge_flag,
    right_edge_flag,
    left_star_flag,
    amalgamate,
    flag_power,
    two_core,
    find_isomorphism,
    isomorphic,
    is_connected,
    components,
    connected_bigraphs,
    trees,
)
from .stepfn import (
    IDENTITY_RTOL,
    CHECK_RTOL,
    StepBigraphon,
    FlagDensityTable,
    uniform_kernel,
    constant_kernel,
    density,
    flag_density,
    left_degrees,
    right_degrees,
    edge_density,
    tensor,
    tensor_power,
    restrict,
    dual_kernel,
    scale,
    biregularity_defect,
    density_gradient,
)
from .transforms import (
    TransformReport,
    TrimTrace,
    PipelineResult,
    flag_regularize,
    lower_regularize,
    star_lower_regularize,
    biregularize,
    stars_pipeline,
    symmetric_flag_regularize,
    trim_mass_floor,
    trim_step_bound,
    select_trim_alpha,
)
from .decomp import (
    TreeDecomposition,
    DecompositionCheck,
    ReflectiveCertificate,
    TreeRatioReport,
    DecompositionSearchResult,
    verify_decomposition,
    verify_reflective,
    decomposition_weight,
    tree_ratio_check,
    find_reflective_decomposition,
)
from .search import (
    GapReport,
    EvidenceReport,
    CounterexampleSearchResult,
    sidorenko_gap,
    sample_biregular,
    weak_domination_evidence,
    counterexample_search,
    tensor_power_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]
