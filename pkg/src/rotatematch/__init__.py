"""Rotation-aware image matching pipeline.

Stages: dataset-adaptive candidate pairing, rotation-augmented local feature
extraction, two-stage gated matching, match-graph scene clustering, and
clustering-based evaluation metrics.
"""

from .core import (
    ALL_ORIENTATIONS,
    CandidatePair,
    Clustering,
    DatasetManifest,
    EvalReport,
    FeatureSet,
    GlobalDescriptor,
    ImageRecord,
    Keypoint,
    Orientation,
    PairMatchResult,
    PipelineConfig,
    load_manifest,
    save_manifest,
    validate_manifest,
)
from .evaluation import (
    align_clusters,
    compute_cl,
    compute_maa,
    evaluate_dataset,
    evaluate_datasets,
    final_score,
)
from .global_desc import builtin_global_descriptor, load_external_descriptors
from .local_features import (
    builtin_detect,
    extract_features,
    load_external_features,
    rotate_image,
    rotate_point,
    unrotate_point,
)
from .matching import match_all, match_pair_two_stage, mutual_nn_match
from .pairing import adaptive_pairs, exhaustive_pairs, retrieval_pairs
from .scene_graph import build_clusters
from .synthetic import SynthConfig, generate_dataset

__version__ = "0.1.0"
