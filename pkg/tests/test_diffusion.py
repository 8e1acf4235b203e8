import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ultraslow import diffusion, mloracle, relaxation, weight
from ultraslow.diffusion import SpectralProblem, assemble_stiffness, march
from ultraslow.exceptions import NotSPD

GRID = relaxation.default_grid(5.0, 400)


@pytest.fixture(scope="module")
def heat_state():
    mu = weight.supported(0.4)
    prob = SpectralProblem(np.pi, 6, mu, np.array([1.0, 1.0]) / np.sqrt(2.0))
    return march(prob, GRID)


class TestBasis:
    def test_orthonormal(self):
        p = SpectralProblem(2.5, 6, weight.constant(1.0), [1.0])
        gram = (p._phi * p.wx) @ p._phi.T
        np.testing.assert_allclose(gram, np.eye(6), atol=1e-14)

    def test_eigenpairs(self):
        # -phi'' = lam phi, checked with a centred second difference
        L, x, h = 2.0, np.linspace(0.3, 1.7, 9), 1e-4
        lam = diffusion.eigenvalues(L, 4)
        phi = diffusion.basis(L, 4, x)
        d2 = (diffusion.basis(L, 4, x + h) - 2 * phi + diffusion.basis(L, 4, x - h)) / h**2
        np.testing.assert_allclose(-d2, lam[:, None] * phi, rtol=1e-6, atol=1e-6)
        np.testing.assert_allclose(lam, (np.arange(1, 5) * np.pi / L) ** 2, rtol=1e-15)

    def test_poincare(self):
        assert diffusion.poincare_constant(np.pi) == pytest.approx(1.0)
        assert diffusion.poincare_constant(3.0) == pytest.approx(3.0 / np.pi)


class TestStiffness:
    def test_laplacian_diagonal(self):
        p = SpectralProblem(1.7, 8, weight.constant(1.0), [1.0])
        A = assemble_stiffness(p, 0.0)
        np.testing.assert_allclose(A, np.diag(diffusion.eigenvalues(1.7, 8)), rtol=1e-13, atol=1e-12)

    def test_reaction_shift(self):
        p = SpectralProblem(1.0, 5, weight.constant(1.0), [1.0], c=-1.0)
        A = assemble_stiffness(p, 0.0)
        np.testing.assert_allclose(A, np.diag(diffusion.eigenvalues(1.0, 5) + 1.0), rtol=1e-13, atol=1e-12)

    @pytest.mark.parametrize("t", [0.0, 0.7, 2.0, 3.1])
    def test_variable_coefficient_bounds(self, t):
        L, n = 2.0, 7
        p = SpectralProblem(L, n, weight.constant(1.0), [1.0],
                            a=lambda x, t: 1 + 0.5 * np.sin(np.pi * x / L) * np.cos(t), lam1=0.5, lam2=1.5)
        A = assemble_stiffness(p, t)
        np.testing.assert_array_equal(A, A.T)
        ev = np.linalg.eigvalsh(A)
        lam = diffusion.eigenvalues(L, n)
        assert ev[0] >= 0.5 * lam[0] and ev[-1] <= 1.5 * lam[-1]

    def test_positive_reaction_rejected(self):
        p = SpectralProblem(1.0, 3, weight.constant(1.0), [1.0], c=lambda x, t: 0.1 + 0 * x)
        with pytest.raises(NotSPD):
            p.check_coefficients(GRID)

    def test_ellipticity_violation(self):
        p = SpectralProblem(1.0, 3, weight.constant(1.0), [1.0],
                            a=lambda x, t: 1 + 0.9 * np.sin(np.pi * x) + 0 * t, lam1=0.5, lam2=1.5)
        with pytest.raises(NotSPD):
            march(p, GRID)

    def test_indefinite(self):
        p = SpectralProblem(np.pi, 3, weight.constant(1.0), [1.0], a=1.0, c=-1.0)
        p.c = 5.0  # bypass declaration checks: A = diag(k^2 - 5) is indefinite
        with pytest.raises(NotSPD):
            assemble_stiffness(p, 0.0)

    def test_bad_problem(self):
        with pytest.raises(ValueError):
            SpectralProblem(-1.0, 3, weight.constant(1.0), [1.0])
        with pytest.raises(ValueError):
            SpectralProblem(1.0, 2, weight.constant(1.0), [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            SpectralProblem(1.0, 2, weight.constant(1.0), [1.0], a=lambda x, t: 1 + 0 * x)


class TestMarch:
    def test_initial_slice(self, heat_state):
        np.testing.assert_array_equal(heat_state.coeffs[:, 0], heat_state.problem.u0)

    def test_zero_data(self):
        p = SpectralProblem(1.0, 4, weight.constant(1.0), np.zeros(4))
        assert np.all(march(p, GRID).coeffs == 0.0)

    def test_narrow_box_single_mode(self):
        alpha0 = 0.6
        p = SpectralProblem(np.pi, 4, weight.box(alpha0, 0.01), [1.0])
        s = march(p, GRID)
        ref = mloracle.single_order_relaxation(alpha0, 1.0, GRID)
        np.testing.assert_allclose(s.coeffs[0], ref, atol=1e-2)
        np.testing.assert_allclose(s.coeffs[1:], 0.0, atol=1e-15)

    def test_mode_decoupling(self, linear):
        a, c, L = 0.8, -0.5, 1.5
        u0 = np.array([0.3, -1.0, 0.6])
        p = SpectralProblem(L, 3, linear, u0, a=a, c=c)
        s = march(p, GRID)
        for k, lam in enumerate(a * diffusion.eigenvalues(L, 3) - c):
            ref = relaxation.solve_l1(linear, lam, u0[k], GRID, op=s.op, with_residual=False).values
            np.testing.assert_allclose(s.coeffs[k], ref, rtol=1e-8)

    def test_time_dependent_coefficients(self):
        L = 2.0
        p = SpectralProblem(L, 5, weight.constant(1.0), [1.0, 0.5],
                            a=lambda x, t: 1 + 0.5 * np.sin(np.pi * x / L) * np.cos(t), lam1=0.5, lam2=1.5)
        s = march(p, GRID)
        norm = diffusion.l2_trajectory(s)
        assert np.all(np.isfinite(s.coeffs))
        # with memory and a weakening a(t) the norm may rise for a while;
        # the comparison bound still holds
        b = diffusion.comparison_bound(p.mu, p.lam1, diffusion.poincare_constant(L), norm[0], GRID)
        assert np.all(norm <= b.values * (1 + 1e-6))


class TestTrajectory:
    def test_single_mode(self):
        p = SpectralProblem(np.pi, 3, weight.constant(1.0), [-2.0])
        s = march(p, GRID)
        np.testing.assert_allclose(diffusion.l2_trajectory(s), np.abs(s.coeffs[0]), rtol=1e-15)

    def test_normalized(self, heat_state):
        norm = diffusion.l2_trajectory(heat_state)
        assert norm[0] == pytest.approx(1.0, rel=1e-15)
        assert np.all(np.diff(norm) <= 1e-12)

    def test_parseval(self, heat_state):
        p = heat_state.problem
        j = 100
        u = heat_state.field(p.x, j)
        assert np.sqrt(np.sum(p.wx * u**2)) == pytest.approx(diffusion.l2_trajectory(heat_state)[j], rel=1e-12)

    def test_comparison_rate(self):
        mu = weight.constant(1.0)
        t = np.array([0.0, 0.5, 2.0])
        b = diffusion.comparison_bound(mu, 1.0, diffusion.poincare_constant(np.pi), 1.0, t)
        assert b.lam == pytest.approx(1.0)
        with pytest.raises(ValueError):
            diffusion.comparison_bound(mu, 0.0, 1.0, 1.0, t)

    def test_comparison_principle(self, heat_state):
        p = heat_state.problem
        b = diffusion.comparison_bound(p.mu, p.lam1, diffusion.poincare_constant(p.L), 1.0, GRID)
        assert np.nanmin(diffusion.comparison_margins(heat_state, b)) >= -1e-6

    def test_bessel_domination(self):
        mu = weight.supported(0.4)
        u0 = np.array([1.0, -0.5, 0.25, 0.1])
        norm0 = float(np.linalg.norm(u0))
        b = diffusion.comparison_bound(mu, 1.0, diffusion.poincare_constant(np.pi), norm0, GRID)
        op = relaxation.L1Operator(mu, GRID)
        for n in (1, 2, 4):
            s = march(SpectralProblem(np.pi, n, mu, u0[:n]), GRID, op=op)
            assert np.all(diffusion.l2_trajectory(s) <= b.values * (1 + 1e-6))

    def test_csv(self, heat_state):
        p = heat_state.problem
        b = diffusion.comparison_bound(p.mu, p.lam1, diffusion.poincare_constant(p.L), 1.0, GRID)
        lines = diffusion.trajectory_to_csv(heat_state, b).splitlines()
        assert lines[0] == "t,l2_norm,bound,margin," + ",".join(f"mode_{k}" for k in range(1, 7))
        assert len(lines) == len(GRID) + 1
        first = [float(v) for v in lines[1].split(",")]
        assert first[0] == 0.0 and first[1] == pytest.approx(1.0)


class TestLpInequality:
    @pytest.mark.parametrize("s, p, expected", [(1.0, 3.0, 0.0), (0.0, 2.0, 0.5), (-1.0, 2.0, 2.0)])
    def test_lp_G_values(self, s, p, expected):
        assert diffusion.lp_G(s, p) == pytest.approx(expected, abs=1e-15)

    @settings(max_examples=300, deadline=None)
    @given(s=st.floats(-50.0, 50.0), p=st.floats(1.0, 8.0))
    def test_lp_G_nonnegative(self, s, p):
        g = diffusion.lp_G(s, p)
        assert g >= -1e-12 * max(1.0, abs(s) ** p)
        if p > 1.05 and abs(s - 1.0) > 1e-3:
            assert g > 0

    def test_lp_G_vectorized(self, rng):
        s = rng.uniform(-5, 5, 10_000)
        p = rng.uniform(1, 6, 10_000)
        assert np.all(diffusion.lp_G(s, p) >= -1e-12)
        with pytest.raises(ValueError):
            diffusion.lp_G(0.5, 0.5)

    def test_single_mode_p2(self):
        mu = weight.supported(0.4)
        s = march(SpectralProblem(np.pi, 3, mu, [1.0]), GRID)
        for t in (0.5, 1.0, 4.0):
            rep = diffusion.lp_inequality_check(s, 2.0, t)
            assert rep.margin >= -1e-6

    @pytest.mark.parametrize("p", [1.0, 2.0, 3.0, 4.0])
    def test_two_mode(self, heat_state, p):
        for t in np.geomspace(0.05, 5.0, 10):
            assert diffusion.lp_inequality_check(heat_state, p, t).passed

    def test_rejects_origin(self, heat_state):
        with pytest.raises(ValueError):
            diffusion.lp_inequality_check(heat_state, 2.0, 0.0)


class TestExtremum:
    T = relaxation.default_grid(2.0, 400)

    def test_parabola(self, weights):
        for name, mu in weights.items():
            rep = diffusion.extremum_principle_check(self.T * (2 - self.T), mu, self.T)
            assert not rep.skipped and rep.passed, name
            assert rep.t0 == pytest.approx(1.0, abs=0.01)

    def test_negative_parabola(self, linear):
        rep = diffusion.extremum_principle_check(-((self.T - 1) ** 2), linear, self.T)
        assert rep.value >= 0.0

    def test_max_at_origin_skipped(self, uniform):
        rep = diffusion.extremum_principle_check(np.exp(-self.T), uniform, self.T)
        assert rep.skipped and rep.passed

    def test_terminal_max(self, uniform):
        rep = diffusion.extremum_principle_check(np.sqrt(self.T), uniform, self.T)
        assert rep.t0 == 2.0 and rep.value > 0
