import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ultraslow import decay, weight
from ultraslow.decay import DecayBound, evaluate_bound, fit_power_exponent, verify_bound
from ultraslow.exceptions import BelowValidity, DegenerateFit
from ultraslow.relaxation import RelaxationSolution, solve_integral


def window_solution(mu, lo, hi, n=200, lam=1.0):
    grid = np.concatenate([[0.0], np.geomspace(lo, hi, n)])
    return solve_integral(mu, lam, 1.0, grid, with_residual=False)


def synthetic(t, v):
    return RelaxationSolution(np.asarray(t), np.asarray(v), 1.0, 1.0, "synthetic")


# parameters chosen so the pairwise ordering already holds at t = 1e12
ORDERED = [
    DecayBound("Polynomial", 1.0, delta=0.4),
    DecayBound("LogLogPoly", 1.0),
    DecayBound("StretchedLog", 1.0, kappa=1.0, beta=0.01, m=1.0),
    DecayBound("PowerLog", 1.0, kappa=0.5),
    DecayBound("Log", 1.0),
]


class TestEvaluate:
    def test_log_at_e(self):
        assert evaluate_bound(DecayBound("Log", 1.0), math.e) == pytest.approx(1.0, rel=1e-15)

    def test_polynomial(self):
        b = DecayBound("Polynomial", 2.0, delta=0.4)
        np.testing.assert_allclose(evaluate_bound(b, 100.0), 2.0 * 100.0**-0.4, rtol=1e-15)
        assert evaluate_bound(b, 100.0) == pytest.approx(0.316979, abs=1e-6)

    def test_powerlog(self):
        b = DecayBound("PowerLog", 1.0, kappa=1.0)
        assert evaluate_bound(b, math.e**2) == pytest.approx(0.25, rel=1e-14)

    def test_stretched_formula(self):
        b = DecayBound("StretchedLog", 1.0, kappa=0.5, beta=2.0, m=2.0, q=0.3)
        t = 1e9
        lt = math.log(t)
        pre = math.gamma(1.5) / 0.7**1.5 / lt**1.5
        rate = 2 ** (1 / 3) * 1.5 * (0.3**2 * 2.0) ** (1 / 3)
        assert evaluate_bound(b, t) == pytest.approx(pre * math.exp(-rate * lt ** (2 / 3)), rel=1e-13)

    def test_loglogpoly(self):
        t = 1e10
        b = DecayBound("LogLogPoly", 3.0)
        assert evaluate_bound(b, t) == pytest.approx(3.0 * t ** (-1.0 / math.log(math.log(t))), rel=1e-13)

    @pytest.mark.parametrize(
        "b, t",
        [
            (DecayBound("Log"), 2.0),
            (DecayBound("PowerLog", kappa=1.0), 2.5),
            (DecayBound("StretchedLog", beta=1.0, m=1.0, q=0.5), 7.0),
            (DecayBound("LogLogPoly"), 15.0),
            (DecayBound("Polynomial", delta=0.5), 0.5),
            (DecayBound("Polynomial", delta=0.5, t_min=10.0), 9.0),
        ],
    )
    def test_below_validity(self, b, t):
        with pytest.raises(BelowValidity):
            evaluate_bound(b, t)

    def test_floor_is_admissible(self):
        b = DecayBound("LogLogPoly", 1.0)
        assert evaluate_bound(b, b.floor) == pytest.approx(math.exp(-math.e))

    @pytest.mark.parametrize(
        "kw",
        [
            dict(regime="Bogus"),
            dict(regime="Log", c=0.0),
            dict(regime="StretchedLog", q=1.0),
            dict(regime="StretchedLog", beta=-1.0),
            dict(regime="PowerLog", kappa=-1.0),
            dict(regime="Polynomial", delta=0.0),
        ],
    )
    def test_invalid_parameters(self, kw):
        with pytest.raises(ValueError):
            DecayBound(**kw)


class TestEnvelopeProperties:
    @pytest.mark.parametrize("b", ORDERED, ids=lambda b: b.regime)
    def test_strictly_decreasing(self, b):
        t = np.geomspace(b.floor * 1.0001, 1e30, 1000)
        v = evaluate_bound(b, t)
        assert np.all(v > 0)
        assert np.all(np.diff(v) < 0)

    def test_regime_ordering_at_1e12(self):
        vals = [evaluate_bound(b, 1e12) for b in ORDERED]
        assert all(a < b for a, b in zip(vals[:-1], vals[1:])), vals

    def test_bound_for_reads_weight(self, linear):
        b = decay.bound_for(linear, "PowerLog")
        assert b.kappa == 1.0 and b.tail_exponent == 1.0 and b.tail_mass == pytest.approx(1.0)
        s = decay.bound_for(weight.stretched_exp(1.0, 0.5, 2.0, 3.0), "StretchedLog")
        assert (s.kappa, s.beta, s.m) == (0.5, 2.0, 3.0)
        p = decay.bound_for(weight.supported(0.4), "Polynomial")
        assert p.delta == 0.4 and p.tail_mass == 0.0


class TestVerifyBound:
    def test_powerlog_linear_weight(self, linear):
        v = window_solution(linear, 1e3, 1e8)
        rep = verify_bound(v, decay.bound_for(linear, "PowerLog"), (1e3, 1e8))
        assert rep.valid and rep.passed
        assert rep.growth <= decay.STABILITY_RATIO

    def test_polynomial_indicator(self):
        mu = weight.supported(0.4)
        v = window_solution(mu, 1e2, 1e6)
        rep = verify_bound(v, decay.bound_for(mu, "Polynomial"), (1e2, 1e6))
        assert rep.passed

    def test_log_uniform_advisory(self, uniform):
        # the stated hypothesis excludes mu = 1; checked for stability only
        v = window_solution(uniform, 1e3, 1e8)
        rep = verify_bound(v, DecayBound("Log"), (1e3, 1e8))
        assert np.isfinite(rep.c_star)
        assert rep.growth <= decay.STABILITY_RATIO

    def test_wrong_regime_fails(self):
        # indicator [0.2, 1] decays like t**-0.2, too slow for t**-0.4
        mu = weight.supported(0.2)
        v = window_solution(mu, 1e2, 1e8)
        rep = verify_bound(v, DecayBound("Polynomial", delta=0.4), (1e2, 1e8))
        assert not rep.passed and rep.growth > decay.STABILITY_RATIO

    def test_window_below_floor_invalid(self):
        t = np.geomspace(3.0, 1e3, 50)
        rep = verify_bound(synthetic(t, 1 / np.log(t)), DecayBound("LogLogPoly"), (3.0, 1e3))
        assert not rep.valid and not rep.passed

    def test_too_few_samples(self):
        t = np.geomspace(10.0, 100.0, 10)
        with pytest.raises(DegenerateFit):
            verify_bound(synthetic(t, t**-0.5), DecayBound("Polynomial", delta=0.5), (10.0, 100.0))

    def test_exact_envelope(self):
        t = np.geomspace(10.0, 1e6, 100)
        b = DecayBound("Polynomial", 3.0, delta=0.3)
        rep = verify_bound(synthetic(t, 2.0 * t**-0.3), b, (10.0, 1e6))
        assert rep.c_star == pytest.approx(2.0, rel=1e-14)
        assert rep.growth == pytest.approx(1.0, rel=1e-14)
        assert rep.passed
        assert not verify_bound(synthetic(t, 4.0 * t**-0.3), b, (10.0, 1e6)).passed

    @settings(max_examples=40, deadline=None)
    @given(c=st.floats(0.1, 10.0), factor=st.floats(1.0, 100.0), amp=st.floats(0.05, 20.0))
    def test_monotone_in_c(self, c, factor, amp):
        t = np.geomspace(10.0, 1e6, 60)
        v = synthetic(t, amp * t**-0.5 * (1 + 0.1 * np.sin(np.log(t))))
        lo = verify_bound(v, DecayBound("Polynomial", c, delta=0.5), (10.0, 1e6))
        hi = verify_bound(v, DecayBound("Polynomial", c * factor, delta=0.5), (10.0, 1e6))
        assert (not lo.passed) or hi.passed

    def test_csv_and_summary(self):
        t = np.geomspace(10.0, 1e6, 100)
        rep = verify_bound(synthetic(t, t**-0.3), DecayBound("Polynomial", delta=0.3), (10.0, 1e6))
        text = decay.reports_to_csv([rep])
        header, row = text.strip().splitlines()
        assert header == "regime,c_star,window_lo,window_hi,pass"
        assert row.split(",")[0] == "Polynomial" and row.endswith("true")
        assert "PASS" in rep.summary()


class TestFitPowerExponent:
    @settings(max_examples=50, deadline=None)
    @given(slope=st.floats(-3.0, 0.0), amp=st.floats(1e-3, 1e3))
    def test_exact_on_power_law(self, slope, amp):
        t = np.geomspace(1.0, 1e6, 40)
        assert fit_power_exponent(synthetic(t, amp * t**slope), (1.0, 1e6)) == pytest.approx(slope, abs=1e-12)

    def test_example(self):
        t = np.geomspace(1e3, 1e6, 30)
        assert fit_power_exponent(synthetic(t, t**-0.4), (1e3, 1e6)) == pytest.approx(-0.4, abs=1e-12)

    def test_reverse_direction(self):
        # mass below 0.4 gives a slope above -0.4
        v = window_solution(weight.supported(0.2), 1e3, 1e6)
        assert fit_power_exponent(v, (1e3, 1e6)) > -0.35

    def test_degenerate(self):
        t = np.array([1.0, 2.0, 3.0, 4.0])
        with pytest.raises(DegenerateFit):
            fit_power_exponent(synthetic(t, t**-1.0), (0.5, 10.0))
        t = np.geomspace(1.0, 10.0, 10)
        with pytest.raises(DegenerateFit):
            fit_power_exponent(synthetic(t, -t), (1.0, 10.0))
