import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from ultraslow import relaxation, weight
from ultraslow.estimators import DistributedCaputo, PowerLawDecay, RelaxationModel


class TestRelaxationModel:
    def test_params_roundtrip(self):
        m = RelaxationModel(weight={"family": "supported", "delta": 0.4}, lam=2.0, method="series")
        c = clone(m)
        assert c.get_params() == m.get_params()
        c.set_params(lam=3.0)
        assert c.lam == 3.0 and m.lam == 2.0

    def test_predict_matches_solver(self, linear):
        t = np.array([2.0, 0.0, 0.5, 1.0])
        m = RelaxationModel(weight=linear, lam=1.5).fit()
        ref = relaxation.solve_integral(linear, 1.5, 1.0, np.array([0.0, 0.5, 1.0, 2.0]), with_residual=False)
        np.testing.assert_allclose(m.predict(t[:, None]), ref.values[[3, 0, 1, 2]], rtol=1e-12)

    @pytest.mark.parametrize("method", ["series", "l1"])
    def test_marching_methods(self, method):
        t = np.linspace(0.0, 3.0, 7)
        exact = RelaxationModel(lam=1.0).fit().predict(t)
        approx = RelaxationModel(lam=1.0, method=method).fit().predict(t)
        np.testing.assert_allclose(approx, exact, atol=5e-3)

    def test_errors(self):
        with pytest.raises(NotFittedError):
            RelaxationModel().predict(np.array([1.0]))
        with pytest.raises(ValueError):
            RelaxationModel(method="euler").fit()
        with pytest.raises(ValueError):
            RelaxationModel(lam=0.0).fit()
        with pytest.raises(ValueError):
            RelaxationModel().fit().predict(np.array([-1.0]))


class TestDistributedCaputo:
    def test_linear_function(self, uniform):
        # D t = k * 1 = K(t) exactly under the L1 scheme
        t = relaxation.default_grid(2.0, 100)
        est = DistributedCaputo(weight=uniform).fit(t[:, None])
        out = est.transform(np.column_stack([t, 3 * t]))
        ref = relaxation.distributed_caputo(uniform, t, t)
        np.testing.assert_allclose(out[:, 0], ref, rtol=1e-13, atol=1e-15)
        np.testing.assert_allclose(out[:, 1], 3 * out[:, 0], rtol=1e-13, atol=1e-15)

    def test_constants_vanish(self):
        t = np.linspace(0.0, 1.0, 30)
        out = DistributedCaputo().fit(t).transform(np.full(30, 4.2))
        np.testing.assert_allclose(out, 0.0, atol=1e-13)

    def test_shape_mismatch(self):
        est = DistributedCaputo().fit(np.linspace(0.0, 1.0, 10))
        with pytest.raises(ValueError):
            est.transform(np.ones(9))


class TestPowerLawDecay:
    def test_recovers_power(self):
        t = np.geomspace(1.0, 1e4, 50)
        est = PowerLawDecay(window=(1.0, 1e4)).fit(t[:, None], 3.0 * t**-0.7)
        assert est.slope_ == pytest.approx(-0.7, abs=1e-12)
        assert np.exp(est.intercept_) == pytest.approx(3.0, rel=1e-10)
        np.testing.assert_allclose(est.predict(t[:5]), 3.0 * t[:5] ** -0.7, rtol=1e-10)

    def test_score(self):
        t = np.geomspace(1.0, 1e4, 50)
        y = t**-0.3
        assert PowerLawDecay().fit(t, y).score(t[:, None], y) == pytest.approx(1.0)
