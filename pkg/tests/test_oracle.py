import csv
import math
from pathlib import Path

import numpy as np
import pytest

from rml import oracle
from rml.errors import (DegenerateDenominator, InvalidParams, InvalidSpec,
                        StateSpaceTooLarge)
from rml.kernels import make_kernel
from rml.nw import ModelSpec, get_model
from rml.processes import SeedSpec, iid_pairs, simulate_pairs
from rml.ratio import ratio_hat

FIXTURES = Path(__file__).parent / "data" / "oracle_fixtures.csv"


def load_fixtures():
    out = {}
    with open(FIXTURES) as fh:
        for row in csv.DictReader(r for r in fh if not r.startswith("#")):
            out[row["name"]] = float(row["value"])
    return out


def linear_model(a=0.2, b=0.6):
    return ModelSpec(name="linear", d=1,
                     f=lambda x: a + b * np.asarray(x, dtype=float),
                     r=lambda x: np.full_like(np.asarray(x, dtype=float), 3.0),
                     rho=2.0, B=(0.3, 0.7),
                     x_sampler=lambda gen, n: gen.uniform(0, 1, n))


class TestExpectedFhat:
    def test_flat_density(self):
        model = get_model("sin_uniform")
        k = make_kernel()
        assert oracle.expected_fhat(model, k, 0.5, 0.3) == pytest.approx(1.0, abs=1e-10)

    def test_linear_density_exact_at_center(self):
        # symmetric kernel kills the odd term; Simpson is exact on cubics
        model = linear_model()
        k = make_kernel()
        assert oracle.expected_fhat(model, k, 0.5, 0.2) == pytest.approx(0.5, abs=1e-12)

    def test_normal_fixture(self):
        fixtures = load_fixtures()
        model = get_model("sin_gauss")
        k = make_kernel()
        got = oracle.expected_fhat(model, k, 0.0, 0.5)
        assert got == pytest.approx(
            fixtures["expected_fhat_gauss_x0_h0.5_epanechnikov"], abs=1e-8)

    def test_bounded_by_sup_f(self):
        model = get_model("sin_gauss")
        k = make_kernel()
        for x in (-0.5, 0.0, 0.7):
            v = oracle.expected_fhat(model, k, x, 0.4)
            assert 0.0 <= v <= 1.0 / math.sqrt(2 * math.pi) + 1e-12


class TestExpectedGhat:
    def test_constant_r_factorizes(self):
        model = linear_model()
        k = make_kernel()
        fh = oracle.expected_fhat(model, k, 0.5, 0.2)
        gh = oracle.expected_ghat(model, k, 0.5, 0.2)
        assert gh == pytest.approx(3.0 * fh, rel=1e-12)

    def test_small_h_limit(self):
        model = get_model("sin_gauss")
        k = make_kernel()
        x = 0.3
        want = math.sin(2 * math.pi * x) * math.exp(-x * x / 2) / math.sqrt(2 * math.pi)
        got = oracle.expected_ghat(model, k, x, 1e-3)
        assert got == pytest.approx(want, abs=1e-4)

    def test_sin_fixture(self):
        fixtures = load_fixtures()
        model = get_model("sin_gauss")
        k = make_kernel()
        got = oracle.expected_ghat(model, k, 0.25, 0.2)
        assert got == pytest.approx(
            fixtures["expected_ghat_sin_gauss_x0.25_h0.2_epanechnikov"], abs=1e-8)

    def test_odd_point_is_second_order_small(self):
        # r(0.5) = 0 for the sine model with a flat density
        model = get_model("sin_uniform")
        k = make_kernel()
        got = oracle.expected_ghat(model, k, 0.5, 0.05)
        assert abs(got) < 1e-10


class TestBias:
    def test_constant_regression_zero_bias(self):
        model = get_model("const_uniform")
        k = make_kernel()
        assert oracle.bias_at(model, k, 0.5, 0.1) == pytest.approx(0.0, abs=1e-12)

    def test_fixture(self):
        fixtures = load_fixtures()
        model = get_model("sin_gauss")
        k = make_kernel()
        got = oracle.bias_at(model, k, 0.25, 0.1)
        assert got == pytest.approx(
            fixtures["bias_sin_gauss_x0.25_h0.1_epanechnikov"], abs=1e-8)

    def test_quadratic_decay(self):
        model = get_model("sin_gauss")
        k = make_kernel()
        b1 = oracle.bias_at(model, k, 0.25, 0.2)
        b2 = oracle.bias_at(model, k, 0.25, 0.1)
        assert b1 / b2 == pytest.approx(4.0, rel=0.15)

    def test_slope_matches_regularity(self):
        model = get_model("sin_gauss")
        k = make_kernel()
        hs = [0.4 * 2 ** -j for j in range(6)]
        biases = [oracle.bias_at(model, k, 0.25, h) for h in hs]
        assert all(b > 0 for b in biases)
        assert biases == sorted(biases, reverse=True)
        slope = np.polyfit(np.log(hs), np.log(biases), 1)[0]
        assert model.rho - 0.2 <= slope <= model.rho + 0.2


class TestDeltaMethodVariance:
    def test_unit_weights(self):
        spec = iid_pairs("const:1", "normal:0,1.3")
        assert oracle.delta_method_variance(spec) == pytest.approx(1.3 ** 2, rel=1e-12)

    def test_independent_formula(self):
        spec = iid_pairs("uniform:0.5,1.5", "normal:2,1")
        # E U^2 Var V / (E U)^2 = (1 + 1/12) * 1 / 1
        assert oracle.delta_method_variance(spec) == pytest.approx(13.0 / 12.0, rel=1e-12)

    def test_rejects_dependent(self):
        from rml.processes import ar1_pairs
        with pytest.raises(InvalidSpec):
            oracle.delta_method_variance(ar1_pairs())

    def test_matches_simulation(self):
        spec = iid_pairs("uniform:0.5,1.5", "normal:2,1")
        sigma2 = oracle.delta_method_variance(spec)
        n, reps = 100_000, 400
        vals = np.empty(reps)
        for j in range(reps):
            path = simulate_pairs(spec, n, SeedSpec(606, j))
            _, _, r_hat = ratio_hat(path.u, path.v)
            vals[j] = math.sqrt(n) * (r_hat - spec.truth["R"])
        sample_var = vals.var(ddof=1)
        se = sample_var * math.sqrt(2.0 / (reps - 1))
        assert abs(sample_var - sigma2) <= 3.0 * se


class TestNormalAbsMoment:
    def test_known_values(self):
        assert oracle.normal_abs_moment(1) == pytest.approx(math.sqrt(2 / math.pi))
        assert oracle.normal_abs_moment(2) == pytest.approx(1.0)
        assert oracle.normal_abs_moment(4) == pytest.approx(3.0)


class TestBruteForce:
    def test_two_outcome_example(self):
        spec = iid_pairs("const:1", "discrete:0@0.5,2@0.5")
        result = oracle.brute_force_moment(spec, 1, 2)
        assert result.value == pytest.approx(1.0, rel=1e-12)
        assert result.excluded_prob == 0.0

    def test_constant_v_gives_zero(self):
        spec = iid_pairs("discrete:0@0.5,1@0.5", "const:4.5")
        result = oracle.brute_force_moment(spec, 2, 2)
        assert result.value == pytest.approx(0.0, abs=1e-15)
        assert result.excluded_prob == pytest.approx(0.25, rel=1e-12)

    def test_monte_carlo_agreement(self):
        third = 1.0 / 3.0
        spec = iid_pairs(
            f"discrete:0@{third!r},1@{third!r},2@{1 - 2 * third!r}",
            f"discrete:-1@{third!r},0@{third!r},1@{1 - 2 * third!r}")
        exact = oracle.brute_force_moment(spec, 3, 2)
        gen = np.random.Generator(np.random.Philox(key=np.array([11, 0], dtype=np.uint64)))
        m = 1_000_000
        u = spec.params["u"].sample(gen, (3 * m)).reshape(m, 3)
        v = spec.params["v"].sample(gen, (3 * m)).reshape(m, 3)
        su = u.sum(axis=1)
        keep = su > 0
        deltas = (u[keep] * v[keep]).sum(axis=1) / su[keep] - spec.truth["R"]
        powers = deltas ** 2
        mc = powers.mean()
        se = powers.std(ddof=1) / math.sqrt(powers.size)
        assert abs(mc - exact.value) <= 3.0 * se
        # exclusion mass agrees too
        assert (~keep).mean() == pytest.approx(exact.excluded_prob, abs=3e-4)

    def test_state_space_cap(self):
        third = 1.0 / 3.0
        spec = iid_pairs(
            f"discrete:0@{third!r},1@{third!r},2@{1 - 2 * third!r}",
            f"discrete:-1@{third!r},0@{third!r},1@{1 - 2 * third!r}")
        with pytest.raises(StateSpaceTooLarge):
            oracle.brute_force_moment(spec, 12, 2)

    def test_rejects_continuous(self):
        with pytest.raises(InvalidSpec):
            oracle.brute_force_moment(iid_pairs("const:1", "normal:0,1"), 2, 2)

    def test_all_degenerate(self):
        spec = iid_pairs("const:0", "discrete:1@1.0")
        with pytest.raises(DegenerateDenominator):
            oracle.brute_force_moment(spec, 2, 2)


class TestQuadratureGuard:
    def test_two_resolutions_must_agree(self):
        # a needle much narrower than the rule's resolution
        model = ModelSpec(
            name="needle", d=1,
            f=lambda x: 1.0 + 1e3 * np.exp(-np.abs(np.asarray(x) - 0.5004) * 2e4),
            r=lambda x: np.ones_like(np.asarray(x, dtype=float)),
            rho=2.0, B=(0.3, 0.7),
            x_sampler=lambda gen, n: gen.uniform(0, 1, n))
        from rml.errors import QuadratureFailure
        with pytest.raises(QuadratureFailure):
            oracle.expected_fhat(model, make_kernel(), 0.5, 0.2,
                                 oracle.QuadratureSpec(nodes=64, tol=1e-10))

    def test_spec_validation(self):
        with pytest.raises(InvalidParams):
            oracle.QuadratureSpec(nodes=10)
        with pytest.raises(InvalidParams):
            oracle.QuadratureSpec(tol=0.0)
