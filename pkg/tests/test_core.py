"""Domain type construction, validation, and immutability."""

import math

import numpy as np
import pytest

from tokenprune import (
    AttentionVector,
    ComplexityProfile,
    DimensionMismatch,
    EmptyInput,
    InvalidValue,
    NonPositiveAverage,
    PruneConfig,
    SelectionDiagnostics,
    SelectionResult,
    TokenMatrix,
    ZeroMass,
    validate_pair,
)


class TestTokenMatrix:
    def test_accepts_2d_finite(self):
        m = TokenMatrix(np.ones((3, 2)))
        assert m.rows == 3
        assert m.cols == 2
        assert m.values.dtype == np.float64

    def test_widens_single_precision(self):
        m = TokenMatrix.coerce(np.ones((2, 2), dtype=np.float32))
        assert m.values.dtype == np.float64

    def test_rejects_wrong_rank(self):
        with pytest.raises(InvalidValue):
            TokenMatrix(np.ones(4))
        with pytest.raises(InvalidValue):
            TokenMatrix(np.ones((2, 2, 2)))

    def test_rejects_empty(self):
        with pytest.raises(EmptyInput):
            TokenMatrix(np.empty((0, 3)))
        with pytest.raises(EmptyInput):
            TokenMatrix(np.empty((3, 0)))

    def test_rejects_nan_and_inf(self):
        with pytest.raises(InvalidValue):
            TokenMatrix(np.array([[1.0, np.nan]]))
        with pytest.raises(InvalidValue):
            TokenMatrix(np.array([[np.inf, 1.0]]))

    def test_values_are_read_only(self):
        m = TokenMatrix(np.ones((2, 2)))
        with pytest.raises(ValueError):
            m.values[0, 0] = 7.0

    def test_coerce_passthrough(self):
        m = TokenMatrix(np.ones((2, 2)))
        assert TokenMatrix.coerce(m) is m


class TestAttentionVector:
    def test_accepts_nonnegative(self):
        a = AttentionVector([0.0, 0.5, 1.0])
        assert len(a) == 3

    def test_rejects_negative(self):
        with pytest.raises(InvalidValue):
            AttentionVector([0.1, -0.2])

    def test_rejects_all_zero(self):
        with pytest.raises(ZeroMass):
            AttentionVector([0.0, 0.0])

    def test_rejects_nan(self):
        with pytest.raises(InvalidValue):
            AttentionVector([np.nan, 1.0])

    def test_rejects_empty(self):
        with pytest.raises(EmptyInput):
            AttentionVector([])

    def test_scores_read_only(self):
        a = AttentionVector([1.0, 2.0])
        with pytest.raises(ValueError):
            a.scores[0] = 3.0


class TestValidatePair:
    def test_consistent_pair_passes(self):
        validate_pair(np.ones((4, 2)), [0.1, 0.2, 0.3, 0.4])

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            validate_pair(np.ones((4, 2)), [0.1, 0.2, 0.3])

    def test_nan_attention_is_invalid(self):
        with pytest.raises(InvalidValue):
            validate_pair(np.ones((2, 2)), [np.nan, 1.0])

    def test_accepts_domain_types(self):
        m = TokenMatrix(np.ones((2, 3)))
        a = AttentionVector([1.0, 2.0])
        validate_pair(m, a)


class TestComplexityProfile:
    def test_bounds_enforced(self):
        ComplexityProfile(erank=1.0, attention_entropy=0.0, n_tokens=1)
        ComplexityProfile(erank=3.5, attention_entropy=math.log(4), n_tokens=4)
        with pytest.raises(InvalidValue):
            ComplexityProfile(erank=0.9, attention_entropy=0.0, n_tokens=4)
        with pytest.raises(InvalidValue):
            ComplexityProfile(erank=2.0, attention_entropy=math.log(4) + 0.1, n_tokens=4)
        with pytest.raises(EmptyInput):
            ComplexityProfile(erank=1.0, attention_entropy=0.0, n_tokens=0)


class TestPruneConfig:
    def test_defaults_are_valid(self):
        cfg = PruneConfig(budget=64)
        assert cfg.method == "adaptive_threshold"
        assert cfg.tau_max == 0.25
        assert cfg.tau_scale == 0.01
        assert cfg.mix_lo < cfg.mix_hi

    def test_budget_must_be_positive(self):
        with pytest.raises(InvalidValue):
            PruneConfig(budget=0)

    def test_unknown_method(self):
        with pytest.raises(InvalidValue):
            PruneConfig(budget=4, method="random")

    def test_tau_max_range(self):
        with pytest.raises(InvalidValue):
            PruneConfig(budget=4, tau_max=0.0)
        with pytest.raises(InvalidValue):
            PruneConfig(budget=4, tau_max=1.5)
        PruneConfig(budget=4, tau_max=1.0)

    def test_tau_scale_zero_is_allowed(self):
        # Zero disables similarity pruning and is a supported boundary.
        cfg = PruneConfig(budget=4, tau_scale=0.0)
        assert cfg.tau_scale == 0.0
        with pytest.raises(InvalidValue):
            PruneConfig(budget=4, tau_scale=-0.01)

    def test_mix_band_ordering(self):
        with pytest.raises(InvalidValue):
            PruneConfig(budget=4, mix_lo=5.0, mix_hi=5.0)

    def test_ratio_range(self):
        with pytest.raises(InvalidValue):
            PruneConfig(budget=4, fixed_ratio=1.2)

    def test_budget_adapt_fraction_range(self):
        PruneConfig(budget=4, budget_adapt_fraction=0.2)
        with pytest.raises(InvalidValue):
            PruneConfig(budget=4, budget_adapt_fraction=0.25)

    def test_nonpositive_averages_rejected(self):
        with pytest.raises(InvalidValue):
            PruneConfig(budget=4, erank_avg=0.0)
        with pytest.raises(InvalidValue):
            PruneConfig(budget=4, entropy_avg=-1.0)

    def test_complexity_average_lookup(self):
        cfg = PruneConfig(budget=4, erank_avg=90.0)
        assert cfg.complexity_average() == 90.0
        cfg = PruneConfig(budget=4, complexity_signal="attention_entropy", entropy_avg=4.8)
        assert cfg.complexity_average() == 4.8

    def test_complexity_average_missing(self):
        with pytest.raises(NonPositiveAverage):
            PruneConfig(budget=4).complexity_average()
        with pytest.raises(NonPositiveAverage):
            PruneConfig(budget=4, complexity_signal="attention_entropy", erank_avg=5.0).complexity_average()


class TestSelectionResult:
    def test_round_trip_dict(self):
        r = SelectionResult(indices=(1, 4, 6), k_effective=3)
        d = r.to_dict()
        assert d["indices"] == [1, 4, 6]
        assert d["k_effective"] == 3
        assert d["diagnostics"]["refilled"] == 0

    def test_rejects_unsorted(self):
        with pytest.raises(InvalidValue):
            SelectionResult(indices=(4, 1), k_effective=2)

    def test_rejects_duplicates(self):
        with pytest.raises(InvalidValue):
            SelectionResult(indices=(1, 1), k_effective=2)

    def test_rejects_negative_index(self):
        with pytest.raises(InvalidValue):
            SelectionResult(indices=(-1, 2), k_effective=2)

    def test_rejects_wrong_count(self):
        with pytest.raises(InvalidValue):
            SelectionResult(indices=(0, 1), k_effective=3)

    def test_diagnostics_serialization(self):
        diag = SelectionDiagnostics(
            erank_retained=2.5,
            thresholds_applied=(0.01, 0.02),
            refilled=1,
            selection_order=(3, 0),
        )
        r = SelectionResult(indices=(0, 3), k_effective=2, diagnostics=diag)
        d = r.to_dict()["diagnostics"]
        assert d["thresholds_applied"] == [0.01, 0.02]
        assert d["selection_order"] == [3, 0]
