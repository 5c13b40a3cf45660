"""Synthetic corpora, brute-force oracles, and the threshold-sweep experiment.

Two synthetic populations realize the regimes the selectors are designed
around: "simple" inputs (few clusters, tight spread, peaked attention) sit
at low effective rank and low attention entropy, "complex" inputs (many
clusters, wider spread, flat attention) at high values of both. Population
constants below were calibrated so the two regimes separate by several
population standard deviations in mean effective rank under default sizes;
they are frozen here and treated as fixtures.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import AttentionVector, PruneConfig, SelectionResult, TokenMatrix
from .errors import EmptyCorpus, InvalidValue, ZeroMatrix
from .metrics import corpus_stats
from .selectors import select_adaptive_threshold

POPULATION_DEFAULTS = {
    "simple": {"n_clusters": 2, "cluster_spread": 0.002, "attention_peakedness": 8.0},
    "complex": {"n_clusters": 32, "cluster_spread": 0.035, "attention_peakedness": 0.5},
}

# Per-cluster tightness multipliers run linearly across this band, so a
# multi-cluster input carries near-duplicate pairs at a range of cosine
# distances rather than one scale. That spread is what lets a threshold
# sweep separate its grid values instead of saturating after the first.
CLUSTER_TIGHTNESS_BAND = (0.3, 2.5)

ORACLE_MAX_SIDE = 64


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic (matrix, attention) pair.

    Unset cluster parameters fall back to the population's calibrated
    defaults; generation is deterministic per seed.
    """

    population: str
    n_tokens: int = 256
    dim: int = 160
    n_clusters: int | None = None
    cluster_spread: float | None = None
    attention_peakedness: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.population not in POPULATION_DEFAULTS:
            raise InvalidValue(
                f"population must be one of {sorted(POPULATION_DEFAULTS)}, got {self.population!r}"
            )
        defaults = POPULATION_DEFAULTS[self.population]
        for name in ("n_clusters", "cluster_spread", "attention_peakedness"):
            if getattr(self, name) is None:
                object.__setattr__(self, name, defaults[name])
        if self.n_tokens < 1:
            raise InvalidValue(f"n_tokens must be >= 1, got {self.n_tokens}")
        if self.dim < 1:
            raise InvalidValue(f"dim must be >= 1, got {self.dim}")
        if self.n_clusters < 1:
            raise InvalidValue(f"n_clusters must be >= 1, got {self.n_clusters}")
        if self.cluster_spread < 0.0:
            raise InvalidValue(f"cluster_spread must be >= 0, got {self.cluster_spread}")
        if self.attention_peakedness < 0.0:
            raise InvalidValue(
                f"attention_peakedness must be >= 0, got {self.attention_peakedness}"
            )


def generate(spec: SyntheticSpec) -> tuple[TokenMatrix, AttentionVector]:
    """Sample one synthetic input.

    Tokens are Gaussian clusters around random unit-norm centers, with
    round-robin assignment keeping clusters balanced and each cluster's
    noise scaled by cluster_spread times its slot in the tightness band.
    Attention is a softmax over the negated distance to the first center,
    scaled by attention_peakedness, so cluster 0 plays the salient region.
    Same spec, same output, always.
    """
    rng = np.random.default_rng(spec.seed)
    centers = rng.standard_normal((spec.n_clusters, spec.dim))
    norms = np.linalg.norm(centers, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    centers /= norms
    assign = np.arange(spec.n_tokens) % spec.n_clusters
    tightness = np.linspace(*CLUSTER_TIGHTNESS_BAND, spec.n_clusters)
    noise_scale = spec.cluster_spread * tightness[assign]
    rows = centers[assign] + noise_scale[:, None] * rng.standard_normal(
        (spec.n_tokens, spec.dim)
    )
    dist = np.linalg.norm(rows - centers[0], axis=1)
    logits = -spec.attention_peakedness * dist
    logits -= logits.max()
    weights = np.exp(logits)
    scores = weights / weights.sum()
    return TokenMatrix(rows), AttentionVector(scores)


@dataclass(frozen=True)
class FpsCheck:
    """Outcome of replaying a farthest-point selection against brute force."""

    ok: bool
    first_violation: int | None = None
    message: str = ""


def oracle_fps_check(matrix, result: SelectionResult, start: int) -> FpsCheck:
    """Verify a claimed FPS selection step by step against brute force.

    Replays the greedy recurrence: at every step, each unselected token's
    distance to the selected set is recomputed from scratch, and the claimed
    pick must achieve the maximum (exact tie with the maximum is allowed).
    Intended for matrices of at most 64 tokens.
    """
    m = TokenMatrix.coerce(matrix)
    if m.rows > ORACLE_MAX_SIDE:
        raise InvalidValue(f"oracle limited to {ORACLE_MAX_SIDE} tokens, got {m.rows}")
    order = result.diagnostics.selection_order
    if order is None:
        return FpsCheck(False, None, "result carries no selection_order diagnostic")
    if sorted(order) != list(result.indices):
        return FpsCheck(False, None, "selection_order disagrees with indices")
    if len(order) != result.k_effective:
        return FpsCheck(False, None, "selection_order length differs from k_effective")
    if int(order[0]) != int(start):
        return FpsCheck(False, 0, f"first pick {order[0]} is not the start token {start}")
    values = m.values
    for step in range(1, len(order)):
        selected = list(order[:step])
        candidates = [j for j in range(m.rows) if j not in set(selected)]
        dists = np.array(
            [min(float(np.linalg.norm(values[j] - values[s])) for s in selected) for j in candidates]
        )
        best = dists.max()
        claimed = dists[candidates.index(int(order[step]))]
        if claimed < best:
            return FpsCheck(
                False,
                step,
                f"step {step}: pick {order[step]} has min-distance {claimed}, "
                f"best available {best}",
            )
    return FpsCheck(True)


def oracle_erank(matrix) -> float:
    """Reference effective rank: full SVD, no small-value dropping, entropy
    accumulated in extended precision. Limited to 64 x 64 inputs.

    Raises:
        ZeroMatrix: no nonzero singular values.
    """
    m = TokenMatrix.coerce(matrix)
    if m.rows > ORACLE_MAX_SIDE or m.cols > ORACLE_MAX_SIDE:
        raise InvalidValue(
            f"oracle limited to {ORACLE_MAX_SIDE}x{ORACLE_MAX_SIDE}, got {m.rows}x{m.cols}"
        )
    sigma = np.linalg.svd(m.values, compute_uv=False).astype(np.longdouble)
    sigma = sigma[sigma > 0.0]
    if sigma.size == 0:
        raise ZeroMatrix("matrix has no nonzero singular values")
    q = sigma / sigma.sum()
    h = -(q * np.log(q)).sum()
    return float(np.exp(h))


@dataclass(frozen=True)
class SweepPoint:
    """Aggregated adaptive-threshold diagnostics for one tau_scale value."""

    tau_scale: float
    mean_erank_retained: float
    mean_refilled: float

    def to_dict(self) -> dict:
        return {
            "tau_scale": self.tau_scale,
            "mean_erank_retained": self.mean_erank_retained,
            "mean_refilled": self.mean_refilled,
        }


def run_tau_sweep(corpus, k: int, grid, base_config: PruneConfig | None = None) -> list[SweepPoint]:
    """Prune every corpus sample at each tau_scale and aggregate diagnostics.

    corpus is a sequence of (matrix, attention) pairs. Unless base_config
    supplies them, the corpus's own mean effective rank (and mean entropy)
    serve as the reference averages, so the sweep is self-contained. Grid
    order is preserved in the output.
    """
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpus("sweep needs a non-empty corpus")
    grid = [float(g) for g in grid]
    if not grid:
        raise InvalidValue("sweep needs a non-empty tau_scale grid")
    if k < 1:
        raise InvalidValue(f"budget must be >= 1, got {k}")
    if base_config is None:
        stats = corpus_stats(corpus)
        base_config = PruneConfig(
            budget=k,
            method="adaptive_threshold",
            erank_avg=stats.erank_mean,
            entropy_avg=stats.entropy_mean if stats.entropy_mean > 0.0 else None,
        )
    points = []
    for g in grid:
        config = replace(base_config, tau_scale=g)
        retained = []
        refilled = []
        for mat, att in corpus:
            result, _ = select_adaptive_threshold(mat, att, k, config)
            if result.diagnostics.erank_retained is not None:
                retained.append(result.diagnostics.erank_retained)
            refilled.append(result.diagnostics.refilled)
        if not retained:
            raise InvalidValue("no sample yielded a measurable retained-set rank")
        points.append(
            SweepPoint(
                tau_scale=g,
                mean_erank_retained=float(np.mean(retained)),
                mean_refilled=float(np.mean(refilled)),
            )
        )
    return points
