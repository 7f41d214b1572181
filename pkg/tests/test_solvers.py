import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

import oracles
from patternlab.numerics import equicorrelation
from patternlab.polytope import contains, directional_subdifferential, subdifferential_at
from patternlab.regularizers import fused_lasso, lasso, penalty_value, ridge, slope
from patternlab.solvers import (
    SolverConfig,
    SolveReport,
    isotonic_decreasing,
    prox_penalty,
    prox_slope,
    prox_slope_directional,
    prox_soft_threshold,
    solve_penalized_ls,
    solve_V_min,
    solve_V_min_batch,
)

LAM3 = np.array([3.0, 2.0, 1.0])


# ---------------------------------------------------------------------------
# proximal operators
# ---------------------------------------------------------------------------

def test_soft_threshold_formula(rng):
    y = rng.normal(size=30) * 3
    np.testing.assert_allclose(prox_soft_threshold(y, 1.2),
                               np.sign(y) * np.maximum(np.abs(y) - 1.2, 0.0))


def test_soft_threshold_zero_level(rng):
    y = rng.normal(size=5)
    np.testing.assert_array_equal(prox_soft_threshold(y, 0.0), y)


class TestProxSlope:
    def test_against_qp_oracle(self, rng):
        for _ in range(25):
            y = rng.normal(size=4) * 3
            lam = np.sort(rng.uniform(0.2, 2.5, 4))[::-1]
            np.testing.assert_allclose(prox_slope(y, lam),
                                       oracles.prox_sorted_l1_qp(lam, y), atol=1e-7)

    def test_against_enumeration(self, rng):
        for _ in range(25):
            y = rng.normal(size=3) * 2
            lam = np.sort(rng.uniform(0.2, 2.5, 3))[::-1]
            np.testing.assert_allclose(prox_slope(y, lam),
                                       oracles.prox_enumerated(np.zeros(3), lam, y),
                                       atol=1e-10)

    def test_reduces_to_soft_threshold_on_constant_weights(self, rng):
        y = rng.normal(size=6) * 2
        lam = np.full(6, 0.8)
        np.testing.assert_allclose(prox_slope(y, lam),
                                   prox_soft_threshold(y, 0.8), atol=1e-12)

    def test_directional_against_enumeration(self, rng):
        beta0 = np.array([1.0, 1.0, 0.0])
        for _ in range(25):
            y = rng.normal(size=3) * 2
            np.testing.assert_allclose(prox_slope_directional(beta0, LAM3, y),
                                       oracles.prox_enumerated(beta0, LAM3, y),
                                       atol=1e-10)

    def test_directional_at_zero_base_is_plain_prox(self, rng):
        y = rng.normal(size=4)
        lam = np.array([2.0, 1.5, 1.0, 0.5])
        np.testing.assert_allclose(prox_slope_directional(np.zeros(4), lam, y),
                                   prox_slope(y, lam), atol=1e-12)


def test_isotonic_matches_exhaustive(rng):
    for _ in range(15):
        z = rng.normal(size=7) * 2
        np.testing.assert_allclose(isotonic_decreasing(z),
                                   oracles.isotonic_exhaustive(z), atol=1e-10)


class TestProxPenalty:
    def test_lasso_scale_enters_threshold(self, rng):
        y = rng.normal(size=5) * 3
        np.testing.assert_allclose(prox_penalty(lasso(0.7), y, 2.0),
                                   prox_soft_threshold(y, 1.4), atol=1e-12)

    def test_alpha_multiplies(self, rng):
        y = rng.normal(size=5) * 3
        np.testing.assert_allclose(prox_penalty(lasso(0.7, alpha=2.0), y, 1.0),
                                   prox_soft_threshold(y, 1.4), atol=1e-12)

    def test_ridge_closed_form(self, rng):
        y = rng.normal(size=4)
        np.testing.assert_allclose(prox_penalty(ridge(3.0), y, 0.5),
                                   y / (1.0 + 1.5), atol=1e-12)

    def test_zero_scale_is_identity(self, rng):
        y = rng.normal(size=4)
        lam = np.array([2.0, 1.5, 1.0, 0.5])
        np.testing.assert_array_equal(prox_penalty(slope(lam), y, 0.0), y)

    def test_slope_routes_to_prox_slope(self, rng):
        y = rng.normal(size=3) * 2
        np.testing.assert_allclose(prox_penalty(slope(LAM3), y, 1.3),
                                   prox_slope(y, 1.3 * LAM3), atol=1e-12)

    def test_fused_satisfies_prox_optimality(self, rng):
        # x = prox_{s f}(y)  <=>  y - x in s * (subdifferential of f at x)
        spec = fused_lasso([1.0, 1.0], sparsity=0.5)
        for _ in range(10):
            y = rng.normal(size=3) * 2
            s = rng.uniform(0.3, 2.0)
            x = prox_penalty(spec, y, s)
            d = subdifferential_at(spec.with_scale(s * spec.global_scale), x)
            assert contains(d, y - x, tol=1e-6)


# ---------------------------------------------------------------------------
# limiting-objective solver
# ---------------------------------------------------------------------------

class TestSolveVMin:
    def test_identity_C_reduces_to_directional_prox(self, rng):
        I3 = equicorrelation(3, 0.0)
        beta0 = np.array([1.0, 1.0, 0.0])
        spec = slope(LAM3, alpha=1.3)
        for _ in range(8):
            W = rng.normal(size=3) * 2
            rep = solve_V_min(I3, W, spec, beta0)
            assert rep.converged
            np.testing.assert_allclose(rep.solution,
                                       prox_slope_directional(beta0, 1.3 * LAM3, W),
                                       atol=1e-9)

    @pytest.mark.parametrize("spec,beta0", [
        (lasso(0.8), np.array([1.0, 0.0, -2.0])),
        (slope(LAM3), np.array([1.0, 1.0, 0.0])),
        (fused_lasso([1.0, 1.0], sparsity=0.4), np.array([2.0, 2.0, 0.0])),
    ])
    def test_kkt_membership(self, spec, beta0, rng):
        C = equicorrelation(3, 0.4)
        for _ in range(6):
            W = rng.normal(size=3) * 2
            rep = solve_V_min(C, W, spec, beta0)
            assert rep.converged
            grad_gap = W - C.entries @ rep.solution
            d = directional_subdifferential(spec, beta0, rep.solution)
            assert contains(d, grad_gap, tol=1e-6)

    def test_matches_nelder_mead_objective(self, rng):
        C = equicorrelation(3, 0.4)
        beta0 = np.array([1.0, 1.0, 0.0])
        W = rng.normal(size=3) * 2
        rep = solve_V_min(C, W, slope(LAM3), beta0)

        def V(u):
            return (0.5 * u @ C.entries @ u - u @ W
                    + oracles.directional_penalty_value(beta0, LAM3, u))

        nm = min((minimize(V, x0, method="Nelder-Mead",
                           options=dict(xatol=1e-10, fatol=1e-14, maxiter=20000))
                  for x0 in [np.zeros(3), rep.solution + 0.1, rng.normal(size=3)]),
                 key=lambda m: m.fun)
        assert V(rep.solution) <= nm.fun + 1e-10

    def test_zero_alpha_solves_linear_system(self, rng):
        C = equicorrelation(4, 0.3)
        W = rng.normal(size=4)
        rep = solve_V_min(C, W, lasso(1.0, alpha=0.0), np.zeros(4))
        np.testing.assert_allclose(rep.solution, np.linalg.solve(C.entries, W),
                                   atol=1e-10)

    def test_report_is_structured(self, rng):
        C = equicorrelation(2, 0.2)
        rep = solve_V_min(C, rng.normal(size=2), lasso(0.5), np.zeros(2))
        assert isinstance(rep, SolveReport)
        assert rep.iterations >= 0 and rep.kkt_residual >= 0.0

    def test_nonconvergence_is_flagged_not_raised(self, rng):
        cfg = SolverConfig(max_iter=2)
        C = equicorrelation(6, 0.8)
        W = rng.normal(size=6) * 3
        beta0 = np.array([1.0, 1.0, 0.0, 0.0, 2.0, 2.0])
        rep = solve_V_min(C, W, fused_lasso(np.ones(5), sparsity=0.7), beta0, cfg)
        assert not rep.converged
        rep2 = solve_V_min(C, W, slope(np.linspace(3, 1, 6)), np.zeros(6), cfg)
        assert not rep2.converged

    def test_dimension_mismatch_raises(self, rng):
        C = equicorrelation(3, 0.2)
        with pytest.raises(ValueError):
            solve_V_min(C, np.zeros(4), lasso(1.0), np.zeros(3))


class TestSolveVMinBatch:
    def test_agrees_with_single(self, rng):
        C = equicorrelation(3, 0.4)
        beta0 = np.array([1.0, 0.0, -1.0])
        WB = rng.normal(size=(6, 3)) * 2
        for spec in (lasso(0.5), slope(LAM3), fused_lasso([1.0, 1.0], sparsity=0.3)):
            U, res, it, conv = solve_V_min_batch(C, WB, spec, beta0)
            assert U.shape == (6, 3)
            assert conv.all()
            for i, w in enumerate(WB):
                single = solve_V_min(C, w, spec, beta0)
                np.testing.assert_allclose(U[i], single.solution, atol=1e-7)

    def test_ridge_and_zero_alpha_rows(self, rng):
        C = equicorrelation(3, 0.2)
        WB = rng.normal(size=(4, 3))
        U0, _, _, conv0 = solve_V_min_batch(C, WB, lasso(1.0, alpha=0.0), np.zeros(3))
        np.testing.assert_allclose(U0, np.linalg.solve(C.entries, WB.T).T, atol=1e-10)
        assert conv0.all()
        beta0 = np.array([1.0, -2.0, 0.5])
        Ur, _, _, convr = solve_V_min_batch(C, WB, ridge(0.7), beta0)
        assert convr.all()
        for i, w in enumerate(WB):
            single = solve_V_min(C, w, ridge(0.7), beta0)
            np.testing.assert_allclose(Ur[i], single.solution, atol=1e-10)


# ---------------------------------------------------------------------------
# penalized least squares
# ---------------------------------------------------------------------------

class TestPenalizedLS:
    def _design(self, rng, n=40, p=4):
        X = rng.normal(size=(n, p))
        beta = np.array([2.0, 0.0, -1.0, 0.0])
        y = X @ beta + 0.1 * rng.normal(size=n)
        return X, y

    def test_lasso_kkt(self, rng):
        X, y = self._design(rng)
        spec = lasso(0.5, alpha=3.0)
        rep = solve_penalized_ls(X, y, spec)
        assert rep.converged
        grad_gap = X.T @ (y - X @ rep.solution)
        assert contains(subdifferential_at(spec, rep.solution), grad_gap, tol=1e-5)

    def test_slope_objective_beats_perturbations(self, rng):
        X, y = self._design(rng)
        lam = np.array([4.0, 3.0, 2.0, 1.0])
        spec = slope(lam)
        rep = solve_penalized_ls(X, y, spec)
        assert rep.converged

        def obj(b):
            return 0.5 * np.sum((y - X @ b) ** 2) + penalty_value(spec, b)

        base = obj(rep.solution)
        for _ in range(30):
            assert base <= obj(rep.solution + 1e-3 * rng.normal(size=4)) + 1e-12

    def test_ridge_closed_form(self, rng):
        X, y = self._design(rng)
        rep = solve_penalized_ls(X, y, ridge(2.0))
        expect = np.linalg.solve(X.T @ X + 2.0 * np.eye(4), X.T @ y)
        np.testing.assert_allclose(rep.solution, expect, atol=1e-8)

    def test_step_override_reaches_same_answer(self, rng):
        X, y = self._design(rng)
        spec = lasso(0.5)
        a = solve_penalized_ls(X, y, spec)
        b = solve_penalized_ls(X, y, spec, step=1e-3)
        assert b.converged
        np.testing.assert_allclose(a.solution, b.solution, atol=1e-6)

    def test_alpha_zero_is_least_squares(self, rng):
        X, y = self._design(rng)
        rep = solve_penalized_ls(X, y, lasso(1.0, alpha=0.0))
        np.testing.assert_allclose(rep.solution,
                                   np.linalg.lstsq(X, y, rcond=None)[0], atol=1e-10)

    def test_shape_validation(self, rng):
        X = rng.normal(size=(10, 3))
        with pytest.raises(ValueError):
            solve_penalized_ls(X, np.zeros(11), lasso(1.0))
        with pytest.raises(ValueError):
            solve_penalized_ls(np.zeros((10, 3)), np.zeros(10), lasso(1.0))


@given(st.integers(0, 10_000))
@settings(max_examples=30)
def test_prox_slope_randomized_against_oracle(seed):
    r = np.random.default_rng(seed)
    p = int(r.integers(2, 5))
    y = r.normal(size=p) * 3
    lam = np.sort(r.uniform(0.1, 3.0, p))[::-1]
    got = prox_slope(y, lam)
    ref = oracles.prox_enumerated(np.zeros(p), lam, y)
    np.testing.assert_allclose(got, ref, atol=1e-9)
