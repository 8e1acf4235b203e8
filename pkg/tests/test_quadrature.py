import numpy as np
import pytest
from numpy.testing import assert_allclose

from ultraslow.exceptions import QuadratureDivergence
from ultraslow.quadrature import adaptive_gauss_kronrod, composite_rule, graded_breakpoints


class TestGradedRule:
    def test_breakpoints_sorted_and_cover_interval(self):
        bp = graded_breakpoints(0.0, 1.0, 10, 5)
        assert bp[0] == 0.0 and bp[-1] == 1.0
        assert np.all(np.diff(bp) > 0)
        assert bp[1] == pytest.approx(0.125 * 2.0**-10)

    def test_polynomial_exactness(self):
        x, w = composite_rule(graded_breakpoints(0.0, 1.0, 4, 4), 16)
        for k in range(0, 31, 5):
            assert_allclose(np.sum(w * x**k), 1.0 / (k + 1), rtol=1e-14)

    def test_endpoint_singularity_resolved(self):
        # error is dominated by the innermost panel, ~ its width**(1/2)
        x, w = composite_rule(graded_breakpoints(0.0, 1.0, 50, 4), 16)
        assert_allclose(np.sum(w * x**-0.5), 2.0, rtol=1e-9)

    def test_empty_interval(self):
        with pytest.raises(ValueError):
            graded_breakpoints(1.0, 1.0)


class TestAdaptiveGaussKronrod:
    def test_vector_outputs(self):
        f = lambda x: np.stack([np.exp(-x), np.cos(x), 1.0 / (1.0 + x**2)], axis=1)
        val, nodes, weights = adaptive_gauss_kronrod(f, 0.0, 10.0, rtol=1e-13)
        assert_allclose(val, [1 - np.exp(-10), np.sin(10), np.arctan(10)], rtol=1e-12)
        assert_allclose(np.sum(weights), 10.0, rtol=1e-14)
        assert np.all(np.diff(nodes) > 0)

    def test_mesh_reusable(self):
        _, nodes, weights = adaptive_gauss_kronrod(lambda x: np.exp(-x)[:, None], 0.0, 30.0)
        assert_allclose(np.sum(weights * x_exp(nodes)), 1 - np.exp(-30), rtol=1e-10)

    def test_non_finite_raises(self):
        with pytest.raises(QuadratureDivergence):
            adaptive_gauss_kronrod(lambda x: np.full((len(x), 1), np.nan), 0.0, 1.0)


def x_exp(x):
    return np.exp(-x)
