import math

import numpy as np
import pytest

from rml.errors import DegenerateDenominator, InvalidParams
from rml.ratio import (deviation, lemma2_audit, lemma2_randomized_audit,
                       pisier_check, ratio_estimate, write_audit_csv)


class TestRatioEstimate:
    def test_equal_weights_mean(self):
        stats = ratio_estimate([1.0, 1.0, 1.0], [2.0, 4.0, 6.0])
        assert stats.r_hat == pytest.approx(4.0)
        assert stats.d_hat == pytest.approx(1.0)

    def test_weighted_example(self):
        stats = ratio_estimate([1.0, 0.0, 3.0], [10.0, 99.0, 2.0])
        assert stats.r_hat == pytest.approx(4.0, rel=1e-15)
        assert stats.weights == pytest.approx([0.25, 0.0, 0.75])

    def test_degenerate_flag(self):
        stats = ratio_estimate([0.0, 0.0], [1.0, 2.0])
        assert stats.degenerate
        assert stats.r_hat is None
        assert stats.weights is None
        with pytest.raises(DegenerateDenominator):
            deviation(stats, 1.0)

    def test_negative_u_rejected(self):
        with pytest.raises(InvalidParams):
            ratio_estimate([1.0, -0.5], [1.0, 1.0])

    def test_weights_sum_to_one(self):
        gen = np.random.default_rng(12)
        for _ in range(50):
            n = int(gen.integers(1, 200))
            u = gen.exponential(1.0, n)
            stats = ratio_estimate(u, gen.normal(size=n))
            assert abs(stats.weights.sum() - 1.0) <= 1e-12

    def test_convex_hull(self):
        gen = np.random.default_rng(99)
        for _ in range(200):
            n = int(gen.integers(1, 100))
            u = gen.uniform(0, 1, n)
            v = gen.standard_t(3, n)
            stats = ratio_estimate(u, v)
            if stats.degenerate:
                continue
            pad = 4 * np.finfo(float).eps * max(1.0, abs(stats.r_hat))
            assert v.min() - pad <= stats.r_hat <= v.max() + pad

    def test_scale_invariance_power_of_two_exact(self):
        gen = np.random.default_rng(5)
        u = gen.uniform(0, 1, 64)
        v = gen.normal(size=64)
        base = ratio_estimate(u, v).r_hat
        for c in (2.0, 0.25, 1024.0):
            # power-of-two scalings are exact in binary floating point
            assert ratio_estimate(c * u, v).r_hat == base

    def test_scale_invariance_general(self):
        gen = np.random.default_rng(6)
        u = gen.uniform(0, 1, 64)
        v = gen.normal(size=64)
        base = ratio_estimate(u, v).r_hat
        for c in (3.0, 0.7, 123.456):
            assert ratio_estimate(c * u, v).r_hat == pytest.approx(base, rel=1e-13)

    def test_deviation_examples(self):
        stats = ratio_estimate([1.0], [4.0])
        assert deviation(stats, 4.0) == 0.0
        assert deviation(stats, 3.5) == pytest.approx(0.5)
        assert deviation(stats, 3.5) == pytest.approx(-(3.5 - stats.r_hat))


class TestDecompositionIdentity:
    def test_relative_error_form_reproduces_deviation(self):
        # the ratio deviation equals (N_hat / D) / (1 - z) - N/D
        # with z = (D - D_hat)/D, whenever D_hat is nonzero
        gen = np.random.default_rng(31)
        for _ in range(100):
            n = int(gen.integers(1, 60))
            u = gen.exponential(1.0, n)
            v = gen.normal(size=n)
            stats = ratio_estimate(u, v)
            if stats.degenerate:
                continue
            d_center = gen.uniform(0.1, 3.0)
            n_center = gen.normal()
            z = (d_center - stats.d_hat) / d_center
            lhs = stats.n_hat / d_center / (1.0 - z) - n_center / d_center
            rhs = stats.r_hat - n_center / d_center
            assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


class TestLemma2Audit:
    def test_single_point_exact(self):
        audit = lemma2_audit([1.0], [3.0], 2.0, 1.0, 0.5)
        # with D_hat = D = 1 the last two terms vanish
        assert audit.lhs == pytest.approx(1.0)
        assert audit.rhs == pytest.approx(1.0)
        assert audit.slack == pytest.approx(0.0, abs=1e-15)

    def test_worked_example(self):
        audit = lemma2_audit([1.0, 3.0], [2.0, -1.0], 0.4, 1.8, 0.5)
        assert audit.d_hat == pytest.approx(2.0)
        assert audit.n_hat == pytest.approx(-0.5)
        assert audit.lhs == pytest.approx(0.85, rel=1e-12)
        assert audit.rhs == pytest.approx(1.0888888888888889, rel=1e-12)
        assert audit.slack >= 0.0

    def test_requires_positive_centers(self):
        with pytest.raises(DegenerateDenominator):
            lemma2_audit([1.0], [1.0], 0.0, 0.0, 0.5)

    def test_requires_alpha_in_unit_interval(self):
        with pytest.raises(InvalidParams):
            lemma2_audit([1.0], [1.0], 0.0, 1.0, 1.0)

    def test_zero_u_sum_skipped(self):
        with pytest.raises(DegenerateDenominator):
            lemma2_audit([0.0, 0.0], [1.0, 2.0], 0.0, 1.0, 0.5)

    def test_randomized_suite_small(self):
        summary = lemma2_randomized_audit(5000, seed=20090401)
        assert summary.violations == 0
        assert summary.min_rel_slack >= -1e-12
        assert summary.audited + summary.excluded == 5000

    def test_csv_export(self, tmp_path):
        summary = lemma2_randomized_audit(50, seed=3, keep_rows=True)
        out = tmp_path / "audit.csv"
        with open(out, "w") as fh:
            write_audit_csv(summary, fh)
        lines = out.read_text().splitlines()
        assert lines[0] == "seed,n,lhs,rhs,slack,alpha,excluded"
        assert len(lines) == 51


class TestPisier:
    def test_singleton(self):
        assert pisier_check([2.0], 3.0) == (8.0, 8.0)

    def test_pair(self):
        lhs, rhs = pisier_check([1.0, 2.0], 2.0)
        assert (lhs, rhs) == (4.0, pytest.approx(5.0))

    def test_random_dominance(self):
        gen = np.random.default_rng(17)
        for _ in range(100):
            v = gen.standard_t(3, int(gen.integers(1, 100)))
            e = float(gen.uniform(0.1, 4.0))
            lhs, rhs = pisier_check(v, e)
            assert lhs <= rhs * (1 + 1e-12)

    def test_rejects_empty(self):
        with pytest.raises(InvalidParams):
            pisier_check([], 1.0)
