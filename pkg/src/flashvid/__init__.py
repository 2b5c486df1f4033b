"""Training-free visual-token compression for video feature tensors.

Pipeline: partition the frame sequence into segments, select a diverse
informative token subset per frame, merge the remaining tokens along
spatiotemporal redundancy trees within each segment, and trim the merged
tokens with density-peaks clustering to hit an exact token budget derived
from a FLOPs model.
"""

from ._kernels import backend
from .adts import AdtsSelection, adts_select, calibrate_distance, mmdp_select
from .budget import (
    BudgetPlan,
    ModelShape,
    budget_align,
    dpcknn_reduce,
    flops_gqa,
    flops_standard,
    inner_llm_prune,
)
from .partition import Boundary, Segment, dyseg_cuts, dyseg_partition
from .pipeline import Strategy, flashvid_compress, resolve_budget, run_strategy
from .similarity import (
    CalibrationVectors,
    FrameEmbeddings,
    cls_attention_derive,
    cosine_matrix,
    event_relevance,
    frame_embeddings,
    pairwise_distance,
    transition_similarities,
)
from .synth import EvalReport, StrategyReport, SynthSpec, evaluate, generate
from .tensor import (
    AttentionStack,
    CompressionConfig,
    CompressionResult,
    ConfigError,
    FlashvidError,
    InternalError,
    TensorFormatError,
    TensorRankError,
    TensorValueError,
    TokenRef,
    VideoFeatures,
    load_result,
    load_tensor,
    save_result,
    write_npy,
)
from .tstm import (
    FrameTokens,
    MergeForest,
    TstmConstraints,
    aggregate_forest,
    build_forest,
    ttm_baseline,
)

__version__ = "0.1.0"

__all__ = [
    "AdtsSelection",
    "AttentionStack",
    "Boundary",
    "BudgetPlan",
    "CalibrationVectors",
    "CompressionConfig",
    "CompressionResult",
    "ConfigError",
    "EvalReport",
    "FlashvidError",
    "FrameEmbeddings",
    "FrameTokens",
    "InternalError",
    "MergeForest",
    "ModelShape",
    "Segment",
    "Strategy",
    "StrategyReport",
    "SynthSpec",
    "TensorFormatError",
    "TensorRankError",
    "TensorValueError",
    "TokenRef",
    "TstmConstraints",
    "VideoFeatures",
    "adts_select",
    "aggregate_forest",
    "backend",
    "budget_align",
    "build_forest",
    "calibrate_distance",
    "cls_attention_derive",
    "cosine_matrix",
    "dpcknn_reduce",
    "dyseg_cuts",
    "dyseg_partition",
    "evaluate",
    "event_relevance",
    "flashvid_compress",
    "flops_gqa",
    "flops_standard",
    "frame_embeddings",
    "generate",
    "inner_llm_prune",
    "load_result",
    "load_tensor",
    "mmdp_select",
    "pairwise_distance",
    "resolve_budget",
    "run_strategy",
    "save_result",
    "transition_similarities",
    "ttm_baseline",
    "write_npy",
    "__version__",
]
