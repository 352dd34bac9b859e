import numpy as np
import pytest

from rml.errors import InvalidParams, UnsupportedKernel
from rml.kernels import KERNEL_IDS, eval_scaled, make_kernel, verify_order


def simpson(fun, lo, hi, panels=512):
    xs = np.linspace(lo, hi, panels + 1)
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(np.sum(w * fun(xs))) * (hi - lo) / panels / 3.0


class TestMakeKernel:
    def test_epanechnikov_profile(self):
        k = make_kernel("epanechnikov", 1)
        assert k.profile(0.0) == pytest.approx(0.75)
        assert k.profile(0.5) == pytest.approx(0.5625)
        assert k.profile(1.0) == 0.0
        assert k.profile(1.5) == 0.0

    def test_triangle_profile(self):
        k = make_kernel("triangle", 1)
        assert k.profile(0.0) == 1.0
        assert k.profile(0.25) == 0.75
        assert k.profile(-2.0) == 0.0

    def test_unknown_kernel(self):
        with pytest.raises(UnsupportedKernel):
            make_kernel("gaussian", 1)

    def test_bad_dimension(self):
        with pytest.raises(InvalidParams):
            make_kernel("epanechnikov", 0)

    @pytest.mark.parametrize("name", sorted(KERNEL_IDS))
    def test_unit_integral_1d(self, name):
        k = make_kernel(name, 1)
        assert simpson(k.profile, -1, 1) == pytest.approx(1.0, abs=1e-9)

    def test_product_kernel_unit_integral_2d(self):
        k = make_kernel("epanechnikov", 2)
        nodes = np.linspace(-1, 1, 201)
        w = np.ones(201)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= (2.0 / 200) / 3.0
        u1, u2 = np.meshgrid(nodes, nodes, indexing="ij")
        vals = k.evaluate(np.column_stack([u1.ravel(), u2.ravel()]))
        total = float(np.sum((w[:, None] * w[None, :]).ravel() * vals))
        assert total == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("name", sorted(KERNEL_IDS))
    def test_nonnegative_on_dense_grid(self, name):
        k = make_kernel(name, 1)
        grid = np.linspace(-1.5, 1.5, 20001)
        assert np.all(k.profile(grid) >= 0.0)

    @pytest.mark.parametrize("name", sorted(KERNEL_IDS))
    def test_lipschitz_sampled(self, name):
        k = make_kernel(name, 2)
        gen = np.random.default_rng(3)
        u = gen.uniform(-1.2, 1.2, size=(500, 2))
        v = gen.uniform(-1.2, 1.2, size=(500, 2))
        lhs = np.abs(k.evaluate(u) - k.evaluate(v))
        rhs = k.lipschitz_const * np.abs(u - v).sum(axis=1)
        assert np.all(lhs <= rhs * (1 + 1e-12) + 1e-15)


class TestEvalScaled:
    def test_center_value(self):
        k = make_kernel("epanechnikov", 1)
        assert eval_scaled(k, 0.3, 0.3, 0.5) == pytest.approx(1.5)

    def test_outside_support(self):
        k = make_kernel("epanechnikov", 1)
        assert eval_scaled(k, 0.0, 2.0 * 0.7, 0.7) == 0.0

    def test_homogeneity(self):
        k = make_kernel("quartic", 1)
        x, c, h = 0.1, 0.4, 0.25
        near = eval_scaled(k, x, c, h)
        far = eval_scaled(k, x, x + 2 * (c - x), 2 * h)
        assert far == pytest.approx(near / 2.0, rel=1e-12)

    def test_vectorized_centers(self):
        k = make_kernel("epanechnikov", 1)
        centers = np.array([0.0, 0.5, 3.0])
        out = eval_scaled(k, 0.0, centers, 1.0)
        assert out == pytest.approx([0.75, 0.5625, 0.0])

    def test_rejects_bad_h(self):
        k = make_kernel("epanechnikov", 1)
        with pytest.raises(InvalidParams):
            eval_scaled(k, 0.0, 0.0, 0.0)

    def test_integrates_to_one_across_h(self):
        k = make_kernel("epanechnikov", 1)
        for h in np.geomspace(0.01, 10.0, 7):
            total = simpson(lambda t: eval_scaled(k, 0.0, t, h), -h, h, 2048)
            assert total == pytest.approx(1.0, abs=1e-8)


class TestVerifyOrder:
    @pytest.mark.parametrize("name", sorted(KERNEL_IDS))
    @pytest.mark.parametrize("d", [1, 2])
    def test_a2_suite(self, name, d):
        report = verify_order(make_kernel(name, d))
        assert abs(report.integral - 1.0) <= 1e-6
        assert report.max_low_moment <= 1e-8
        assert report.ok
        assert report.order <= 2

    def test_epanechnikov_second_moment(self):
        report = verify_order(make_kernel("epanechnikov", 1))
        assert report.first_nonvanishing == (2,)
        assert report.first_value == pytest.approx(0.2, abs=1e-8)

    def test_rejects_bad_order(self):
        with pytest.raises(InvalidParams):
            verify_order(make_kernel(), k=3)
