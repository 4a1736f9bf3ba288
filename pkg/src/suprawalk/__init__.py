"""Multilayer network embeddings over a Jaccard-coupled supra graph,
with skip-gram training and cluster-aware refinement."""

from .errors import NumericError, ParseError, ValidationError
from .graph import (
    LabelTable,
    Layer,
    MultilayerNetwork,
    SupraNode,
    load_labels,
    load_multilayer,
    save_multilayer,
)
from .supra import SupraGraph, build_supra, counterpart_pairs, jaccard_coupling, save_supra
from .walks import WalkConfig, WalkCorpus, generate_walks, save_corpus
from .sgns import (
    EmbeddingTable,
    NoiseDistribution,
    SgnsConfig,
    extract_pairs,
    load_embeddings,
    save_embeddings,
    sgns_step,
    train,
)
from .modularity import (
    ModularityParams,
    PartitionState,
    load_partition,
    modularity_multislice,
    modularity_single,
    node_fitness,
    save_partition,
)
from .refine import (
    RefineConfig,
    RefineNet,
    RefineResult,
    init_clusters,
    kl_backward,
    kl_loss,
    modularity_moves,
    mse_loss,
    pretrain_autoencoder,
    rank_probabilities,
    refine,
    sample_low_fitness,
    soft_assign,
    target_distribution,
)
from .evaluate import (
    LinearClassifier,
    SbmSample,
    SbmSpec,
    aggregate_node_vectors,
    auroc,
    community_detection_eval,
    format_summary,
    generate_sbm,
    link_prediction_eval,
    nmi,
    node_classification_eval,
    write_results_csv,
)
from .config import RunConfig, load_config, save_config

__version__ = "0.1.0"

__all__ = [
    "NumericError",
    "ParseError",
    "ValidationError",
    "LabelTable",
    "Layer",
    "MultilayerNetwork",
    "SupraNode",
    "load_labels",
    "load_multilayer",
    "save_multilayer",
    "SupraGraph",
    "build_supra",
    "counterpart_pairs",
    "jaccard_coupling",
    "save_supra",
    "WalkConfig",
    "WalkCorpus",
    "generate_walks",
    "save_corpus",
    "EmbeddingTable",
    "NoiseDistribution",
    "SgnsConfig",
    "extract_pairs",
    "load_embeddings",
    "save_embeddings",
    "sgns_step",
    "train",
    "ModularityParams",
    "PartitionState",
    "load_partition",
    "modularity_multislice",
    "modularity_single",
    "node_fitness",
    "save_partition",
    "RefineConfig",
    "RefineNet",
    "RefineResult",
    "init_clusters",
    "kl_backward",
    "kl_loss",
    "modularity_moves",
    "mse_loss",
    "pretrain_autoencoder",
    "rank_probabilities",
    "refine",
    "sample_low_fitness",
    "soft_assign",
    "target_distribution",
    "LinearClassifier",
    "SbmSample",
    "SbmSpec",
    "aggregate_node_vectors",
    "auroc",
    "community_detection_eval",
    "format_summary",
    "generate_sbm",
    "link_prediction_eval",
    "nmi",
    "node_classification_eval",
    "write_results_csv",
    "RunConfig",
    "load_config",
    "save_config",
    "__version__",
]
