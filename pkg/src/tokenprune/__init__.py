"""Visual-token pruning toolkit.

Complexity metrics (attention entropy, effective rank), token selectors
(attention top-K, farthest-point sampling, fixed and adaptive hybrids,
adaptive similarity thresholding), caption hallucination scoring, a binary
dump format, and a synthetic-data harness with brute-force oracles.
"""

from .core import (
    AttentionVector,
    ComplexityProfile,
    PruneConfig,
    SelectionDiagnostics,
    SelectionResult,
    TokenMatrix,
    validate_pair,
)
from .chair import (
    CaptionRecord,
    ChairReport,
    ObjectLexicon,
    chair_metrics,
    extract_objects,
)
from .dataio import (
    TokenDumpHeader,
    cli_dispatch,
    read_dump,
    reference_stats,
    write_dump,
)
from .errors import (
    BadMagic,
    DimensionMismatch,
    EmptyCorpus,
    EmptyInput,
    HeaderMismatch,
    InvalidValue,
    IoFailure,
    NonPositiveAverage,
    StartOutOfRange,
    TokenPruneError,
    TruncatedFile,
    ZeroMass,
    ZeroMatrix,
)
from .harness import (
    FpsCheck,
    SweepPoint,
    SyntheticSpec,
    generate,
    oracle_erank,
    oracle_fps_check,
    run_tau_sweep,
)
from .metrics import (
    CorpusStats,
    attention_entropy,
    complexity_profile,
    corpus_stats,
    erank_auto,
    erank_fast,
    erank_svd,
)
from .selectors import (
    ThresholdStep,
    ThresholdTrace,
    adaptive_budget,
    adaptive_mix_ratio,
    dynamic_tau,
    select_adaptive_threshold,
    select_fps,
    select_hybrid_adaptive,
    select_hybrid_fixed,
    select_tokens,
    select_topk_attention,
)

__version__ = "0.1.0"

__all__ = [
    "AttentionVector",
    "BadMagic",
    "CaptionRecord",
    "ChairReport",
    "ComplexityProfile",
    "CorpusStats",
    "DimensionMismatch",
    "EmptyCorpus",
    "EmptyInput",
    "FpsCheck",
    "HeaderMismatch",
    "InvalidValue",
    "IoFailure",
    "NonPositiveAverage",
    "ObjectLexicon",
    "PruneConfig",
    "SelectionDiagnostics",
    "SelectionResult",
    "StartOutOfRange",
    "SweepPoint",
    "SyntheticSpec",
    "ThresholdStep",
    "ThresholdTrace",
    "TokenDumpHeader",
    "TokenMatrix",
    "TokenPruneError",
    "TruncatedFile",
    "ZeroMass",
    "ZeroMatrix",
    "adaptive_budget",
    "adaptive_mix_ratio",
    "attention_entropy",
    "chair_metrics",
    "cli_dispatch",
    "complexity_profile",
    "corpus_stats",
    "dynamic_tau",
    "erank_auto",
    "erank_fast",
    "erank_svd",
    "extract_objects",
    "generate",
    "oracle_erank",
    "oracle_fps_check",
    "read_dump",
    "reference_stats",
    "run_tau_sweep",
    "select_adaptive_threshold",
    "select_fps",
    "select_hybrid_adaptive",
    "select_hybrid_fixed",
    "select_tokens",
    "select_topk_attention",
    "validate_pair",
    "write_dump",
]
