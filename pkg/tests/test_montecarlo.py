import io
import math

import numpy as np
import pytest

from rml import montecarlo
from rml.errors import (DegenerateFit, EmptySample, InvalidParams, InvalidSpec,
                        TooManyExclusions)
from rml.montecarlo import (ExperimentConfig, NormRow, NormTable, clt_check,
                            empirical_lp, fit_rate, lp_stderr, make_config,
                            replicate, write_norms_csv)
from rml.processes import ar1_pairs, iid_pairs, iid_regression


def wsum_config(M=200, n_grid=(256, 512, 1024, 2048), seed=11, **kw):
    return make_config(iid_pairs("const:1", "normal:3.5,1"), "weighted_sum",
                       2, 4, n_grid, M, seed, **kw)


class TestEmpiricalLp:
    def test_examples(self):
        assert empirical_lp([3.0, -4.0], 2) == pytest.approx(math.sqrt(12.5))
        assert empirical_lp([3.0, -4.0], 1) == pytest.approx(3.5)
        assert empirical_lp([-2.7], 7.3) == pytest.approx(2.7)

    def test_empty(self):
        with pytest.raises(EmptySample):
            empirical_lp([], 2)

    def test_power_mean_monotonicity(self):
        gen = np.random.default_rng(0)
        x = gen.standard_t(3, 500)
        norms = [empirical_lp(x, p) for p in (0.5, 1, 2, 4)]
        assert norms == sorted(norms)

    def test_stderr_of_constant_sample_is_zero(self):
        assert lp_stderr(np.full(10, 2.0), 2) == 0.0


class TestExperimentConfig:
    def test_grid_validation(self):
        with pytest.raises(InvalidSpec):
            wsum_config(n_grid=(256, 512))
        with pytest.raises(InvalidSpec):
            wsum_config(n_grid=(256, 256, 512))

    def test_estimator_process_mismatch(self):
        with pytest.raises(InvalidSpec):
            make_config(iid_pairs(), "nw_pointwise", 2, 4, (8, 16, 32), 10, 0)
        with pytest.raises(InvalidSpec):
            make_config(iid_regression(), "weighted_sum", 2, 4, (8, 16, 32), 10, 0)

    def test_bandwidths(self):
        cfg = make_config(iid_regression(), "nw_pointwise", 2, 4,
                          (512, 1024, 2048), 10, 0, x=0.5, rho=2.0)
        assert cfg.bandwidth(1024) == pytest.approx(0.25)
        cfg = make_config(iid_regression(), "nw_sup", 2, 4,
                          (512, 1024, 2048), 10, 0, bandwidth_rule="uniform",
                          rho=2.0)
        assert cfg.bandwidth(1024) == pytest.approx(
            (math.log(1024) / 1024) ** 0.2)
        assert cfg.abscissa_kind() == "n_over_log_n"

    def test_default_tolerances(self):
        assert wsum_config().tolerance() == 0.08
        ar = make_config(ar1_pairs(), "weighted_sum", 2, 4, (8, 16, 32), 10, 0)
        assert ar.tolerance() == 0.10


class TestReplicate:
    def test_norms_match_exact_mean_norm(self):
        # U = 1, V ~ N(R, 1): the L2 deviation norm is exactly n^{-1/2}
        table = replicate(wsum_config(M=400))
        for row in table.primary_rows():
            assert abs(row.norm - row.n ** -0.5) <= 3.0 * row.stderr
            assert row.excluded == 0

    def test_noiseless_constant_regression_all_zero(self):
        spec = iid_regression("const_uniform", noise_sd=0.0)
        cfg = make_config(spec, "nw_pointwise", 2, 4, (64, 128, 256), 50, 5,
                          x=0.5, rho=2.0, target="truth")
        table = replicate(cfg)
        for row in table.primary_rows():
            assert row.norm == 0.0
        with pytest.raises(DegenerateFit):
            fit_rate(table)

    def test_doubling_m_consistent(self):
        small = replicate(wsum_config(M=150, seed=21)).primary_rows()
        large = replicate(wsum_config(M=300, seed=21)).primary_rows()
        for a, b in zip(small, large):
            gap = abs(a.norm - b.norm)
            assert gap <= 3.0 * (a.stderr + b.stderr)

    def test_bitwise_determinism_across_threads(self, monkeypatch):
        cfg = wsum_config(M=64)
        monkeypatch.setenv("RML_THREADS", "1")
        one = replicate(cfg)
        monkeypatch.setenv("RML_THREADS", "8")
        eight = replicate(cfg)
        assert [r.norm for r in one.rows] == [r.norm for r in eight.rows]
        assert [r.stderr for r in one.rows] == [r.stderr for r in eight.rows]

    def test_exclusion_accounting_and_limit(self):
        # U sum is zero with probability (1/2)^n: n=4 gives ~6% exclusions
        spec = iid_pairs("discrete:0@0.5,1@0.5", "normal:0,1")
        cfg = make_config(spec, "weighted_sum", 2, 4, (4, 8, 16), 300, 3)
        with pytest.raises(TooManyExclusions):
            replicate(cfg)

    def test_multiple_p_rows(self):
        cfg = wsum_config(M=100, extra_p=(1.0, 4.0))
        table = replicate(cfg)
        ns = {row.n for row in table.rows}
        for n in ns:
            by_p = sorted((row.p, row.norm) for row in table.rows if row.n == n)
            norms = [v for _, v in by_p]
            assert norms == sorted(norms)
        assert len(table.primary_rows()) == len(cfg.n_grid)


class TestFitRate:
    def _table(self, norms, ns=(100, 400, 1600)):
        cfg = wsum_config(n_grid=ns)
        rows = tuple(NormRow(n=n, p=2.0, norm=v, stderr=0.0, excluded=0, h=None)
                     for n, v in zip(ns, norms))
        return NormTable(rows=rows, config=cfg)

    def test_exact_power_law(self):
        table = self._table([n ** -0.5 for n in (100, 400, 1600)])
        fit = fit_rate(table)
        assert fit.slope == pytest.approx(-0.5, abs=1e-12)
        assert fit.residual_ss < 1e-20
        assert fit.passed

    def test_intercept_absorbs_constant(self):
        table = self._table([7.3 * n ** -0.4 for n in (100, 400, 1600)])
        fit = fit_rate(table)
        assert fit.slope == pytest.approx(-0.4, abs=1e-12)
        assert fit.residual_ss < 1e-20

    def test_zero_norm_degenerate(self):
        table = self._table([0.1, 0.0, 0.01])
        with pytest.raises(DegenerateFit):
            fit_rate(table)

    def test_abscissa_n_over_log_n(self):
        ns = (128, 512, 2048, 8192)
        norms = [(n / math.log(n)) ** -0.4 for n in ns]
        cfg = make_config(iid_regression(), "nw_sup", 2, 4, ns, 10, 0,
                          bandwidth_rule="uniform", rho=2.0)
        rows = tuple(NormRow(n=n, p=2.0, norm=v, stderr=0.0, excluded=0, h=0.1)
                     for n, v in zip(ns, norms))
        fit = fit_rate(NormTable(rows=rows, config=cfg))
        assert fit.abscissa == "n_over_log_n"
        assert fit.slope == pytest.approx(-0.4, abs=1e-12)
        assert fit.theoretical == pytest.approx(0.4)


class TestCltCheck:
    def test_unit_weight_limits(self):
        cfg = wsum_config(M=800, n_grid=(1024, 2048, 4096), seed=8)
        res = clt_check(cfg, 1.0)
        sigma = 1.0
        assert res.limit == pytest.approx(sigma * math.sqrt(2 / math.pi), rel=1e-12)
        assert res.rel_gap < 0.05
        res2 = clt_check(cfg, 1.999)
        assert res2.limit == pytest.approx(
            sigma * oracle_abs_norm(1.999), rel=1e-12)

    def test_requires_iid(self):
        cfg = make_config(ar1_pairs(), "weighted_sum", 2, 4, (64, 128, 256), 50, 2)
        with pytest.raises(InvalidSpec):
            clt_check(cfg, 1.0)

    def test_requires_smaller_order(self):
        with pytest.raises(InvalidParams):
            clt_check(wsum_config(), 2.5)


def oracle_abs_norm(a):
    from rml.oracle import normal_abs_moment
    return normal_abs_moment(a) ** (1.0 / a)


class TestCsv:
    def test_header_and_shape(self):
        table = replicate(wsum_config(M=20, n_grid=(64, 128, 256)))
        buf = io.StringIO()
        write_norms_csv(table, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "n,p,norm,stderr,excluded,h_used"
        assert len(lines) == 4
        # weighted sums carry no bandwidth
        assert lines[1].endswith(",")
