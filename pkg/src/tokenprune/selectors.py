"""Token selection strategies.

Five strategies share one result type:

* attention top-K,
* farthest-point sampling (FPS) for spatial diversity,
* a fixed attention/diversity budget split,
* an adaptive split driven by input complexity,
* adaptive similarity thresholding, where a per-step cosine threshold
  prunes near-duplicates of each kept token and scales with complexity.

Every selector returns indices in ascending encoder order and exactly
min(K, N) of them; the greedy pick order is preserved separately in
diagnostics.selection_order.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .core import (
    AttentionVector,
    PruneConfig,
    SelectionDiagnostics,
    SelectionResult,
    TokenMatrix,
    validate_pair,
)
from .errors import InvalidValue, NonPositiveAverage, StartOutOfRange, ZeroMatrix
from .metrics import attention_entropy, erank_auto, erank_fast


def _round_half_away(x: float) -> int:
    """Round with halves away from zero (0.5 -> 1), for non-negative x."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class ThresholdStep:
    """One thresholding step: the kept token, its 1-based selection order,
    the threshold applied, and how many candidates that threshold pruned."""

    token_index: int
    order: int
    tau: float
    pruned_count: int

    def to_dict(self) -> dict:
        return {
            "token_index": self.token_index,
            "order": self.order,
            "tau": self.tau,
            "pruned_count": self.pruned_count,
        }


@dataclass(frozen=True)
class ThresholdTrace:
    """Full record of an adaptive-threshold run: one step per kept token
    plus the indices re-admitted by refill, in refill order."""

    steps: tuple[ThresholdStep, ...]
    refilled_indices: tuple[int, ...] = ()

    def __post_init__(self):
        orders = [s.order for s in self.steps]
        if any(b <= a for a, b in zip(orders, orders[1:])):
            raise InvalidValue("trace orders must be strictly increasing")

    def to_dict(self) -> dict:
        return {
            "steps": [s.to_dict() for s in self.steps],
            "refilled_indices": list(self.refilled_indices),
        }


def _descending_attention(scores: np.ndarray) -> np.ndarray:
    # Stable sort on the negated scores: descending, ties to the lower index.
    return np.argsort(-scores, kind="stable")


def _erank_or_none(values: np.ndarray) -> float | None:
    try:
        return erank_auto(values)
    except ZeroMatrix:
        return None


def select_topk_attention(attn, k: int) -> SelectionResult:
    """Keep the min(k, N) highest-attention tokens.

    Ties break toward the lower token index. No embeddings are consumed,
    so the rank diagnostics stay None.
    """
    a = AttentionVector.coerce(attn)
    if k < 1:
        raise InvalidValue(f"budget must be >= 1, got {k}")
    k_eff = min(k, len(a))
    order = _descending_attention(a.scores)
    picks = [int(i) for i in order[:k_eff]]
    return SelectionResult(
        indices=tuple(sorted(picks)),
        k_effective=k_eff,
        diagnostics=SelectionDiagnostics(
            entropy_input=attention_entropy(a),
            selection_order=tuple(picks),
        ),
    )


def _fps_extend(values: np.ndarray, initial: list[int], n_total: int) -> list[int]:
    """Greedily extend `initial` to n_total points by max-min Euclidean distance.

    Each candidate's distance to the selected set is a running minimum,
    updated once per new pick: O(n_total * N) distance evaluations. Argmax
    ties resolve to the lower index, so exact duplicates of selected points
    (distance zero) are taken in index order once all distinct points are in.
    """
    n = values.shape[0]
    selected = list(initial)
    min_dist = np.full(n, np.inf)
    for s in selected:
        np.minimum(min_dist, np.linalg.norm(values - values[s], axis=1), out=min_dist)
    min_dist[selected] = -np.inf
    while len(selected) < n_total:
        pick = int(np.argmax(min_dist))
        selected.append(pick)
        np.minimum(min_dist, np.linalg.norm(values - values[pick], axis=1), out=min_dist)
        min_dist[pick] = -np.inf
    return selected


def select_fps(matrix, k: int, start="max_attention", attn=None) -> SelectionResult:
    """Farthest-point sampling over token embeddings.

    The start token is the attention argmax when scores are given (token 0
    otherwise); pass an integer to pin it explicitly. Each later pick
    maximizes the minimum Euclidean distance to the already-selected set,
    ties going to the lower index.

    Raises:
        StartOutOfRange: integer start outside [0, N).
    """
    m = TokenMatrix.coerce(matrix)
    if k < 1:
        raise InvalidValue(f"budget must be >= 1, got {k}")
    a = None
    if attn is not None:
        a = AttentionVector.coerce(attn)
        validate_pair(m, a)
    if isinstance(start, (int, np.integer)):
        seed = int(start)
        if not (0 <= seed < m.rows):
            raise StartOutOfRange(f"start index {seed} outside [0, {m.rows})")
    elif start == "max_attention":
        seed = int(np.argmax(a.scores)) if a is not None else 0
    else:
        raise InvalidValue(f"unknown start {start!r}")
    k_eff = min(k, m.rows)
    picks = _fps_extend(m.values, [seed], k_eff)
    idx = tuple(sorted(picks))
    return SelectionResult(
        indices=idx,
        k_effective=k_eff,
        diagnostics=SelectionDiagnostics(
            erank_retained=_erank_or_none(m.values[list(idx)]),
            entropy_input=None if a is None else attention_entropy(a),
            erank_input=erank_auto(m),
            selection_order=tuple(picks),
        ),
    )


def _hybrid(m: TokenMatrix, a: AttentionVector, k: int, ratio: float) -> SelectionResult:
    k_eff = min(k, m.rows)
    k_att = min(_round_half_away(ratio * k_eff), k_eff)
    order = _descending_attention(a.scores)
    # With zero attention slots the diversity stage still starts from the
    # attention argmax, which makes ratio 0 coincide with plain FPS.
    initial = [int(i) for i in order[: max(k_att, 1)]]
    picks = _fps_extend(m.values, initial, k_eff)
    idx = tuple(sorted(picks))
    return SelectionResult(
        indices=idx,
        k_effective=k_eff,
        diagnostics=SelectionDiagnostics(
            erank_retained=_erank_or_none(m.values[list(idx)]),
            entropy_input=attention_entropy(a),
            erank_input=erank_auto(m),
            selection_order=tuple(picks),
        ),
    )


def select_hybrid_fixed(matrix, attn, k: int, ratio: float) -> SelectionResult:
    """Split the budget: a `ratio` share to attention top scorers, the rest
    to FPS picks over the residual pool.

    The attention slot count is round(ratio * k), halves away from zero.
    The diversity stage treats the attention picks as already selected, so
    its first pick is the token farthest from that set. Ratio 1 reduces to
    attention top-K; ratio 0 to FPS started at the attention argmax.
    """
    m = TokenMatrix.coerce(matrix)
    a = AttentionVector.coerce(attn)
    validate_pair(m, a)
    if k < 1:
        raise InvalidValue(f"budget must be >= 1, got {k}")
    if not (0.0 <= ratio <= 1.0):
        raise InvalidValue(f"ratio must be in [0, 1], got {ratio}")
    return _hybrid(m, a, k, ratio)


def adaptive_mix_ratio(complexity_value: float, mix_lo: float, mix_hi: float) -> float:
    """Attention share of the budget as a function of input complexity.

    Linear from 1 at complexity <= mix_lo down to 0 at complexity >= mix_hi:
    simple inputs lean on attention, complex inputs on diversity.
    """
    if not (mix_lo < mix_hi):
        raise InvalidValue(f"mix_lo must be < mix_hi, got {mix_lo} >= {mix_hi}")
    r = (mix_hi - complexity_value) / (mix_hi - mix_lo)
    return min(max(r, 0.0), 1.0)


def select_hybrid_adaptive(matrix, attn, k: int, config: PruneConfig) -> SelectionResult:
    """Hybrid selection whose attention/diversity split is set per input.

    The configured complexity signal (effective rank by default, attention
    entropy as the alternative) is measured on the input and mapped through
    adaptive_mix_ratio against the [mix_lo, mix_hi] reference band.
    """
    m = TokenMatrix.coerce(matrix)
    a = AttentionVector.coerce(attn)
    validate_pair(m, a)
    if k < 1:
        raise InvalidValue(f"budget must be >= 1, got {k}")
    if config.complexity_signal == "erank":
        signal = erank_fast(m)
    else:
        signal = attention_entropy(a)
    ratio = adaptive_mix_ratio(signal, config.mix_lo, config.mix_hi)
    return _hybrid(m, a, k, ratio)


def dynamic_tau(
    order: int,
    complexity_input: float,
    complexity_avg: float,
    tau_scale: float,
    tau_max: float,
) -> float:
    """Similarity-pruning threshold for the `order`-th kept token (1-based).

    Equals order * (complexity_input / complexity_avg) * tau_scale, capped
    at tau_max. Later picks carry lower attention, so their near-duplicates
    are pruned more aggressively, and more complex inputs raise every
    threshold proportionally.

    Raises:
        NonPositiveAverage: complexity_avg <= 0.
    """
    if order < 1:
        raise InvalidValue(f"selection order must be >= 1, got {order}")
    if complexity_avg <= 0.0:
        raise NonPositiveAverage(f"complexity average must be > 0, got {complexity_avg}")
    if complexity_input < 0.0:
        raise InvalidValue(f"complexity input must be >= 0, got {complexity_input}")
    return min(order * (complexity_input / complexity_avg) * tau_scale, tau_max)


def _cosine_distance_to(values: np.ndarray, idx: int, candidates: np.ndarray) -> np.ndarray:
    """1 - cosine similarity from row idx to each candidate row.

    Zero-norm rows get distance 1 to everything: with thresholds capped at
    tau_max <= 1 and the comparison strict, they are never similarity-pruned.
    """
    v = values[idx]
    vnorm = float(np.linalg.norm(v))
    cand = values[candidates]
    cnorm = np.linalg.norm(cand, axis=1)
    denom = vnorm * cnorm
    sims = np.zeros(len(candidates))
    ok = denom > 0.0
    if vnorm > 0.0:
        sims[ok] = np.clip((cand[ok] @ v) / denom[ok], -1.0, 1.0)
    return 1.0 - sims


def select_adaptive_threshold(
    matrix, attn, k: int, config: PruneConfig
) -> tuple[SelectionResult, ThresholdTrace]:
    """Attention-ordered selection with per-step near-duplicate pruning.

    Tokens are visited in descending attention order (ties to the lower
    index). Each kept token prunes every still-unprocessed candidate whose
    cosine distance to it falls below dynamic_tau for that step, until
    min(k, N) tokens are kept. If pruning exhausts the pool first, pruned
    tokens are re-admitted in descending attention order and listed in the
    trace's refilled_indices. With config.budget_adapt_fraction > 0 the
    budget is first rescaled via adaptive_budget.

    Requires a corpus reference average for the configured complexity
    signal (config.erank_avg or config.entropy_avg).

    Returns the result plus the per-step threshold trace.
    """
    m = TokenMatrix.coerce(matrix)
    a = AttentionVector.coerce(attn)
    validate_pair(m, a)
    if k < 1:
        raise InvalidValue(f"budget must be >= 1, got {k}")

    entropy_in = attention_entropy(a)
    erank_in = erank_fast(m)
    signal = erank_in if config.complexity_signal == "erank" else entropy_in
    avg = config.complexity_average()

    k_budget = k
    if config.budget_adapt_fraction > 0.0:
        k_budget = adaptive_budget(signal, avg, k, config.budget_adapt_fraction)
    k_eff = min(k_budget, m.rows)

    order = _descending_attention(a.scores)
    AVAILABLE, SELECTED, PRUNED = 0, 1, 2
    status = np.full(m.rows, AVAILABLE, dtype=np.int8)
    picks: list[int] = []
    taus: list[float] = []
    steps: list[ThresholdStep] = []

    for t in order:
        if len(picks) == k_eff:
            break
        t = int(t)
        if status[t] != AVAILABLE:
            continue
        status[t] = SELECTED
        picks.append(t)
        tau = dynamic_tau(len(picks), signal, avg, config.tau_scale, config.tau_max)
        taus.append(tau)
        candidates = np.flatnonzero(status == AVAILABLE)
        pruned_count = 0
        if len(candidates) and tau > 0.0:
            dist = _cosine_distance_to(m.values, t, candidates)
            hit = candidates[dist < tau]
            if len(hit):
                status[hit] = PRUNED
                pruned_count = len(hit)
        steps.append(
            ThresholdStep(token_index=t, order=len(picks), tau=tau, pruned_count=pruned_count)
        )

    refilled: list[int] = []
    if len(picks) < k_eff:
        for t in order:
            if len(picks) == k_eff:
                break
            t = int(t)
            if status[t] == PRUNED:
                status[t] = SELECTED
                picks.append(t)
                refilled.append(t)

    idx = tuple(sorted(picks))
    result = SelectionResult(
        indices=idx,
        k_effective=len(picks),
        diagnostics=SelectionDiagnostics(
            erank_retained=_erank_or_none(m.values[list(idx)]),
            entropy_input=entropy_in,
            erank_input=erank_in,
            thresholds_applied=tuple(taus),
            refilled=len(refilled),
            selection_order=tuple(picks),
        ),
    )
    return result, ThresholdTrace(steps=tuple(steps), refilled_indices=tuple(refilled))


def adaptive_budget(
    complexity_input: float, complexity_avg: float, k_ref: int, fraction: float
) -> int:
    """Rescale a reference budget by input complexity, within a banded range.

    The multiplier 1 + fraction * (complexity_input / complexity_avg - 1)
    is clamped to [1 - fraction, 1 + fraction], then the result is rounded
    half away from zero and floored at 1. Inputs at the corpus average keep
    k_ref exactly.

    Raises:
        NonPositiveAverage: complexity_avg <= 0.
    """
    if k_ref < 1:
        raise InvalidValue(f"reference budget must be >= 1, got {k_ref}")
    if not (0.0 <= fraction <= 0.2):
        raise InvalidValue(f"fraction must be in [0, 0.2], got {fraction}")
    if complexity_avg <= 0.0:
        raise NonPositiveAverage(f"complexity average must be > 0, got {complexity_avg}")
    if complexity_input < 0.0:
        raise InvalidValue(f"complexity input must be >= 0, got {complexity_input}")
    scale = 1.0 + fraction * (complexity_input / complexity_avg - 1.0)
    scale = min(max(scale, 1.0 - fraction), 1.0 + fraction)
    return max(1, _round_half_away(k_ref * scale))


def select_tokens(matrix, attn, config: PruneConfig) -> SelectionResult:
    """Dispatch to the selector named by config.method, using config.budget."""
    if config.method == "attention_topk":
        return select_topk_attention(attn, config.budget)
    if config.method == "fps":
        return select_fps(matrix, config.budget, attn=attn)
    if config.method == "hybrid_fixed":
        return select_hybrid_fixed(matrix, attn, config.budget, config.fixed_ratio)
    if config.method == "hybrid_adaptive":
        return select_hybrid_adaptive(matrix, attn, config.budget, config)
    result, _ = select_adaptive_threshold(matrix, attn, config.budget, config)
    return result
