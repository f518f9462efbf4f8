"""Fuzzy topic modeling over document embeddings.

Projects a corpus of embeddings to 2-D, clusters it with a density-based
hierarchy, assigns every document a fuzzy membership vector over the
discovered topics, and refines each topic in a second pass to produce
representative-article reports without a preset topic count.
"""

from .hierarchy import (
    NOISE,
    ClusterSelection,
    CondensedTree,
    build_mst,
    condense,
    dump_condensed_tree,
    glosh_scores,
    select_clusters,
    single_linkage,
)
from .io import (
    Document,
    EmbeddingSet,
    load_embeddings,
    make_set,
    mean_pool,
    write_embeddings,
)
from .membership import (
    MembershipMatrix,
    cluster_exemplars,
    distance_membership,
    fuse_membership,
    joint_membership,
    membership_matrix,
    outlier_membership,
    representatives,
    softmax,
)
from .metric import (
    MetricConfig,
    MutualReachability,
    core_distances,
    lambda_of,
    mutual_reachability,
    pairwise_distances,
)
from .pipeline import (
    NoClustersError,
    PhaseResult,
    PipelineConfig,
    Topic,
    TopicReport,
    assemble_report,
    grid_search_mcs,
    run_phase1,
    run_phase2,
    run_pipeline,
)
from .report import RenderSpec, render_scatter, write_plots, write_report
from .tsne import (
    Projection,
    TsneConfig,
    calibrate_affinities,
    gradient,
    kl_divergence,
    project,
)

__version__ = "0.1.0"

__all__ = [
    "NOISE",
    "ClusterSelection",
    "CondensedTree",
    "Document",
    "EmbeddingSet",
    "MembershipMatrix",
    "MetricConfig",
    "MutualReachability",
    "NoClustersError",
    "PhaseResult",
    "PipelineConfig",
    "Projection",
    "RenderSpec",
    "Topic",
    "TopicReport",
    "TsneConfig",
    "assemble_report",
    "build_mst",
    "calibrate_affinities",
    "cluster_exemplars",
    "condense",
    "core_distances",
    "distance_membership",
    "dump_condensed_tree",
    "fuse_membership",
    "glosh_scores",
    "gradient",
    "grid_search_mcs",
    "joint_membership",
    "kl_divergence",
    "lambda_of",
    "load_embeddings",
    "make_set",
    "mean_pool",
    "membership_matrix",
    "mutual_reachability",
    "outlier_membership",
    "pairwise_distances",
    "project",
    "render_scatter",
    "representatives",
    "run_phase1",
    "run_phase2",
    "run_pipeline",
    "select_clusters",
    "single_linkage",
    "softmax",
    "write_embeddings",
    "write_plots",
    "write_report",
]
