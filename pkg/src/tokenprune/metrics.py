"""Input-complexity metrics: attention entropy, effective rank, corpus summaries."""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .core import AttentionVector, ComplexityProfile, TokenMatrix, validate_pair
from .errors import EmptyCorpus, InvalidValue, ZeroMatrix

# Relative floor below which singular values are treated as numerical noise
# and dropped before the spectral-entropy sum.
SPECTRUM_DROP_REL = 1e-12


def attention_entropy(attn) -> float:
    """Shannon entropy (natural log) of the normalized attention distribution.

    Scores are renormalized to a probability vector first, so the result is
    invariant to positive rescaling of the input. Zero-probability terms
    contribute nothing. Range: [0, ln N] for N scores.
    """
    a = AttentionVector.coerce(attn)
    p = a.scores / a.scores.sum()
    nz = p[p > 0.0]
    h = -float(np.sum(nz * np.log(nz)))
    return max(h, 0.0)


def _spectral_erank(sigma: np.ndarray, limit: int) -> float:
    """exp of the entropy of the normalized singular-value distribution."""
    smax = float(sigma.max(initial=0.0))
    if smax <= 0.0:
        raise ZeroMatrix("matrix has no nonzero singular values")
    kept = sigma[sigma >= SPECTRUM_DROP_REL * smax]
    q = kept / kept.sum()
    h = -float(np.sum(q * np.log(q)))
    # Floating error can push the result marginally outside the
    # mathematically guaranteed [1, min(N, d)] interval; project back.
    return min(max(math.exp(h), 1.0), float(limit))


def erank_svd(matrix) -> float:
    """Effective rank of the token matrix via its singular values.

    Singular values are normalized to a distribution q, and the result is
    exp(-sum q_i ln q_i). Equals r for a matrix with r equal nonzero
    singular values; 1.0 for any rank-one matrix.

    Raises:
        ZeroMatrix: every entry is zero, so the spectrum is empty.
    """
    m = TokenMatrix.coerce(matrix)
    sigma = np.linalg.svd(m.values, compute_uv=False)
    return _spectral_erank(sigma, min(m.rows, m.cols))


def erank_fast(matrix) -> float:
    """Effective rank via eigenvalues of the N x N Gram matrix X X^T.

    Algebraically identical to erank_svd (singular values are the square
    roots of the Gram eigenvalues) but sidesteps the d-dimensional SVD,
    which pays off when d exceeds N. Eigenvalues that come out negative or
    below N * eps relative to the largest are rounding artifacts of the
    symmetric eigensolver and are zeroed before the square root.
    """
    m = TokenMatrix.coerce(matrix)
    gram = m.values @ m.values.T
    lam = np.linalg.eigvalsh(gram)
    lam = np.where(lam > 0.0, lam, 0.0)
    lmax = float(lam.max(initial=0.0))
    if lmax > 0.0:
        lam[lam < m.rows * np.finfo(np.float64).eps * lmax] = 0.0
    sigma = np.sqrt(lam)
    return _spectral_erank(sigma, min(m.rows, m.cols))


def erank_auto(matrix) -> float:
    """Effective rank via the cheaper path for the shape: the Gram form
    when N <= d, the plain SVD otherwise."""
    m = TokenMatrix.coerce(matrix)
    if m.rows <= m.cols:
        return erank_fast(m)
    return erank_svd(m)


def complexity_profile(matrix, attn) -> ComplexityProfile:
    """Measure both complexity signals for one (matrix, attention) pair."""
    m = TokenMatrix.coerce(matrix)
    a = AttentionVector.coerce(attn)
    validate_pair(m, a)
    return ComplexityProfile(
        erank=erank_auto(m),
        attention_entropy=attention_entropy(a),
        n_tokens=m.rows,
    )


@dataclass(frozen=True)
class CorpusStats:
    """Mean and quartiles of both complexity signals over a corpus.

    Quartiles use linear interpolation between order statistics. The label
    is free-form provenance text (encoder, token count, dataset).
    """

    erank_mean: float
    erank_q1: float
    erank_q3: float
    entropy_mean: float
    n_samples: int
    entropy_q1: float | None = None
    entropy_q3: float | None = None
    label: str = ""

    def __post_init__(self):
        if self.n_samples < 1:
            raise EmptyCorpus("corpus statistics require at least one sample")
        if not (self.erank_q1 <= self.erank_q3):
            raise InvalidValue("erank quartiles out of order")
        if (
            self.entropy_q1 is not None
            and self.entropy_q3 is not None
            and not (self.entropy_q1 <= self.entropy_q3)
        ):
            raise InvalidValue("entropy quartiles out of order")

    def to_dict(self) -> dict:
        return {
            "erank_mean": self.erank_mean,
            "erank_q1": self.erank_q1,
            "erank_q3": self.erank_q3,
            "entropy_mean": self.entropy_mean,
            "entropy_q1": self.entropy_q1,
            "entropy_q3": self.entropy_q3,
            "n_samples": self.n_samples,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "CorpusStats":
        try:
            return cls(
                erank_mean=float(payload["erank_mean"]),
                erank_q1=float(payload["erank_q1"]),
                erank_q3=float(payload["erank_q3"]),
                entropy_mean=float(payload["entropy_mean"]),
                n_samples=int(payload["n_samples"]),
                entropy_q1=(
                    None if payload.get("entropy_q1") is None else float(payload["entropy_q1"])
                ),
                entropy_q3=(
                    None if payload.get("entropy_q3") is None else float(payload["entropy_q3"])
                ),
                label=str(payload.get("label", "")),
            )
        except KeyError as exc:
            raise InvalidValue(f"corpus stats payload missing key {exc}") from exc


def corpus_stats(samples, label: str = "") -> CorpusStats:
    """Summarize complexity over an iterable of (matrix, attention) pairs.

    Per-sample effective rank uses the Gram-matrix path; quartiles are
    linearly interpolated.

    Raises:
        EmptyCorpus: no samples were given.
        DimensionMismatch: a pair disagrees on token count.
    """
    eranks = []
    entropies = []
    for mat, att in samples:
        m = TokenMatrix.coerce(mat)
        a = AttentionVector.coerce(att)
        validate_pair(m, a)
        eranks.append(erank_fast(m))
        entropies.append(attention_entropy(a))
    if not eranks:
        raise EmptyCorpus("corpus is empty")
    er = np.asarray(eranks)
    en = np.asarray(entropies)
    return CorpusStats(
        erank_mean=float(er.mean()),
        erank_q1=float(np.quantile(er, 0.25)),
        erank_q3=float(np.quantile(er, 0.75)),
        entropy_mean=float(en.mean()),
        n_samples=len(eranks),
        entropy_q1=float(np.quantile(en, 0.25)),
        entropy_q3=float(np.quantile(en, 0.75)),
        label=label,
    )
