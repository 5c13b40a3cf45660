"""Domain types for token pruning: embedding matrices, attention scores, configs, results.

All types validate their invariants at construction and are immutable
afterwards, so instances are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyInput,
    InvalidValue,
    ZeroMass,
)

SELECTION_METHODS = frozenset(
    {"attention_topk", "fps", "hybrid_fixed", "hybrid_adaptive", "adaptive_threshold"}
)
COMPLEXITY_SIGNALS = frozenset({"erank", "attention_entropy"})

# Reference band for the adaptive attention/diversity mix: lower and upper
# quartiles of effective rank measured on a CLIP-L, 576-token LLaVA-style
# training corpus. Override per corpus.
DEFAULT_MIX_LO = 81.59
DEFAULT_MIX_HI = 108.80


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TokenMatrix:
    """N x d matrix of visual-token embeddings, row i = token i in encoder order.

    Values are held as float64 (single precision is widened on ingestion)
    and must all be finite.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise InvalidValue(f"token matrix must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise EmptyInput(f"token matrix must be at least 1x1, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise InvalidValue("token matrix contains NaN or Inf")
        object.__setattr__(self, "values", _freeze(arr))

    @classmethod
    def coerce(cls, matrix) -> "TokenMatrix":
        if isinstance(matrix, TokenMatrix):
            return matrix
        return cls(np.asarray(matrix, dtype=np.float64))

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class AttentionVector:
    """Head-averaged CLS-to-patch attention scores, CLS self-score already removed.

    Scores are non-negative, finite, and not all zero; they need not be
    normalized (entropy renormalizes internally).
    """

    scores: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=np.float64)
        if arr.ndim != 1:
            raise InvalidValue(f"attention scores must be 1-D, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise EmptyInput("attention vector is empty")
        if not np.isfinite(arr).all():
            raise InvalidValue("attention scores contain NaN or Inf")
        if (arr < 0).any():
            raise InvalidValue("attention scores must be non-negative")
        if not (arr > 0).any():
            raise ZeroMass("attention scores are all zero")
        object.__setattr__(self, "scores", _freeze(arr))

    @classmethod
    def coerce(cls, scores) -> "AttentionVector":
        if isinstance(scores, AttentionVector):
            return scores
        return cls(np.asarray(scores, dtype=np.float64))

    def __len__(self) -> int:
        return self.scores.shape[0]


def validate_pair(matrix, attn) -> None:
    """Check that a token matrix and attention vector form a consistent pair.

    Accepts raw arrays as well as domain types; coercion re-runs each
    type's invariant checks, so malformed raw input raises the same
    errors as direct construction (InvalidValue, EmptyInput, ZeroMass).

    Raises:
        DimensionMismatch: attention length differs from the token count.
    """
    m = TokenMatrix.coerce(matrix)
    a = AttentionVector.coerce(attn)
    if len(a) != m.rows:
        raise DimensionMismatch(
            f"attention length {len(a)} != token count {m.rows}"
        )


@dataclass(frozen=True)
class ComplexityProfile:
    """Effective rank and attention entropy of one input."""

    erank: float
    attention_entropy: float
    n_tokens: int

    def __post_init__(self):
        if self.n_tokens < 1:
            raise EmptyInput("profile requires at least one token")
        if not (self.erank >= 1.0):
            raise InvalidValue(f"erank {self.erank} below 1")
        # ln(N) bound; allow exact equality at the uniform limit.
        if not (0.0 <= self.attention_entropy <= math.log(self.n_tokens) + 1e-9):
            raise InvalidValue(
                f"entropy {self.attention_entropy} outside [0, ln {self.n_tokens}]"
            )


@dataclass(frozen=True)
class PruneConfig:
    """Selection budget, method, and the knobs shared by the adaptive strategies.

    tau_scale = 0 disables similarity pruning entirely (adaptive_threshold
    then degenerates to plain attention top-K); the production value is 0.01.
    erank_avg / entropy_avg are corpus reference averages and have no baked
    default: supply them explicitly (see data/llava_clip_l_576_stats.json
    for one published corpus).
    """

    budget: int
    method: str = "adaptive_threshold"
    tau_max: float = 0.25
    tau_scale: float = 0.01
    erank_avg: float | None = None
    entropy_avg: float | None = None
    complexity_signal: str = "erank"
    mix_lo: float = DEFAULT_MIX_LO
    mix_hi: float = DEFAULT_MIX_HI
    fixed_ratio: float = 0.5
    budget_adapt_fraction: float = 0.0

    def __post_init__(self):
        if self.budget < 1:
            raise InvalidValue(f"budget must be >= 1, got {self.budget}")
        if self.method not in SELECTION_METHODS:
            raise InvalidValue(
                f"unknown method {self.method!r}; expected one of {sorted(SELECTION_METHODS)}"
            )
        if not (0.0 < self.tau_max <= 1.0):
            raise InvalidValue(f"tau_max must be in (0, 1], got {self.tau_max}")
        if self.tau_scale < 0.0:
            raise InvalidValue(f"tau_scale must be >= 0, got {self.tau_scale}")
        if self.erank_avg is not None and self.erank_avg <= 0.0:
            raise InvalidValue(f"erank_avg must be > 0, got {self.erank_avg}")
        if self.entropy_avg is not None and self.entropy_avg <= 0.0:
            raise InvalidValue(f"entropy_avg must be > 0, got {self.entropy_avg}")
        if self.complexity_signal not in COMPLEXITY_SIGNALS:
            raise InvalidValue(
                f"unknown complexity signal {self.complexity_signal!r}"
            )
        if not (self.mix_lo < self.mix_hi):
            raise InvalidValue(
                f"mix_lo must be < mix_hi, got {self.mix_lo} >= {self.mix_hi}"
            )
        if not (0.0 <= self.fixed_ratio <= 1.0):
            raise InvalidValue(f"fixed_ratio must be in [0, 1], got {self.fixed_ratio}")
        if not (0.0 <= self.budget_adapt_fraction <= 0.2):
            raise InvalidValue(
                f"budget_adapt_fraction must be in [0, 0.2], got {self.budget_adapt_fraction}"
            )

    def complexity_average(self) -> float:
        """Corpus reference average for the configured complexity signal."""
        from .errors import NonPositiveAverage

        avg = self.erank_avg if self.complexity_signal == "erank" else self.entropy_avg
        if avg is None or avg <= 0.0:
            raise NonPositiveAverage(
                f"no positive {self.complexity_signal} reference average configured"
            )
        return avg


@dataclass(frozen=True)
class SelectionDiagnostics:
    """Per-selection measurements; fields a selector cannot compute stay None.

    selection_order records the greedy pick order (farthest-point and
    threshold selectors) since `indices` is re-sorted to encoder order.
    """

    erank_retained: float | None = None
    entropy_input: float | None = None
    erank_input: float | None = None
    thresholds_applied: tuple[float, ...] = ()
    refilled: int = 0
    selection_order: tuple[int, ...] | None = None

    def to_dict(self) -> dict:
        return {
            "erank_retained": self.erank_retained,
            "entropy_input": self.entropy_input,
            "erank_input": self.erank_input,
            "thresholds_applied": list(self.thresholds_applied),
            "refilled": self.refilled,
            "selection_order": (
                None if self.selection_order is None else list(self.selection_order)
            ),
        }


@dataclass(frozen=True)
class SelectionResult:
    """Retained token indices in ascending encoder order, plus diagnostics."""

    indices: tuple[int, ...]
    k_effective: int
    diagnostics: SelectionDiagnostics = field(default_factory=SelectionDiagnostics)

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if list(idx) != sorted(set(idx)):
            raise InvalidValue("retained indices must be unique and ascending")
        if any(i < 0 for i in idx):
            raise InvalidValue("retained indices must be non-negative")
        if self.k_effective != len(idx):
            raise InvalidValue(
                f"k_effective {self.k_effective} != number of indices {len(idx)}"
            )
        object.__setattr__(self, "indices", idx)

    def to_dict(self) -> dict:
        return {
            "indices": list(self.indices),
            "k_effective": self.k_effective,
            "diagnostics": self.diagnostics.to_dict(),
        }
