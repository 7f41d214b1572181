"""Self-contained correctness checks runnable from the command line.

Every check builds its own fixtures and verifies one component against an
independent computation: proximal outputs against optimality certificates
from the polytope module, isotonic regression against exhaustive
partition enumeration, membership tests against linear-programming hull
feasibility, and the two recovery-probability estimators against each
other. No network access, data files, or test-only dependencies.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import asymptotics, polytope, regularizers, solvers
from .numerics import RngStream, SPDMatrix, equicorrelation


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _rng(tag: int) -> np.random.Generator:
    return RngStream(20260819, tag).generator


# ---------------------------------------------------------------------------
# Proximal operators: optimality certificates
# ---------------------------------------------------------------------------


def _check_prox_slope(quick: bool) -> CheckResult:
    g = _rng(1)
    n_inst = 40 if quick else 300
    worst = 0.0
    for _ in range(n_inst):
        p = int(g.integers(1, 9))
        lam = np.sort(g.uniform(0.0, 2.0, p))[::-1]
        y = g.normal(0.0, 3.0, p)
        s = float(g.uniform(0.2, 2.0))
        z = solvers.prox_slope(y, s * lam)
        spec = regularizers.slope(lam, alpha=s)
        desc = polytope.subdifferential_at(spec, z)
        resid = float(polytope.membership_residual(desc, y - z)[0])
        worst = max(worst, resid / (1.0 + np.abs(y - z).max(initial=0.0)))
    ok = worst <= 1e-7
    return CheckResult("prox_slope optimality", ok,
                       f"{n_inst} instances, worst normalized slack {worst:.2e}")


def _check_prox_slope_directional(quick: bool) -> CheckResult:
    g = _rng(2)
    n_inst = 40 if quick else 300
    worst = 0.0
    for _ in range(n_inst):
        p = int(g.integers(2, 8))
        lam = np.sort(g.uniform(0.1, 2.0, p))[::-1]
        beta0 = g.choice([-2.0, -1.0, 0.0, 1.0, 2.0], p)
        y = g.normal(0.0, 3.0, p)
        z = solvers.prox_slope_directional(beta0, lam, y)
        spec = regularizers.slope(lam)
        desc = polytope.directional_subdifferential(spec, beta0, z)
        resid = float(polytope.membership_residual(desc, y - z)[0])
        worst = max(worst, resid / (1.0 + np.abs(y - z).max(initial=0.0)))
    ok = worst <= 1e-7
    return CheckResult("prox_slope_directional optimality", ok,
                       f"{n_inst} instances, worst normalized slack {worst:.2e}")


def _isotonic_exhaustive(z: np.ndarray) -> np.ndarray:
    """Best nonincreasing fit by enumerating consecutive-block partitions."""
    p = z.size
    best, best_val = None, np.inf
    for k in range(p):
        for cuts in itertools.combinations(range(1, p), k):
            bounds = [0, *cuts, p]
            fit = np.empty(p)
            means = []
            for a, b in zip(bounds[:-1], bounds[1:]):
                m = z[a:b].mean()
                means.append(m)
                fit[a:b] = m
            if np.any(np.diff(means) > 0):
                continue
            val = float(np.sum((z - fit) ** 2))
            if val < best_val:
                best, best_val = fit, val
    return best


def _check_isotonic(quick: bool) -> CheckResult:
    g = _rng(3)
    n_inst = 30 if quick else 150
    worst = 0.0
    for _ in range(n_inst):
        p = int(g.integers(1, 7))
        z = g.normal(0.0, 2.0, p)
        got = solvers.isotonic_decreasing(z)
        want = _isotonic_exhaustive(z)
        worst = max(worst, float(np.abs(got - want).max()))
    ok = worst <= 1e-10
    return CheckResult("isotonic_decreasing vs exhaustive partitions", ok,
                       f"{n_inst} instances, worst abs deviation {worst:.2e}")


# ---------------------------------------------------------------------------
# Polytope membership vs linear programming
# ---------------------------------------------------------------------------


def _hull_feasible(V: np.ndarray, q: np.ndarray) -> bool:
    k = V.shape[0]
    A_eq = np.vstack([V.T, np.ones((1, k))])
    b_eq = np.concatenate([q, [1.0]])
    res = linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, None)] * k, method="highs")
    return bool(res.success)


def _membership_fixtures():
    yield regularizers.slope([3.0, 2.0]), np.array([1.0, 0.0])
    yield regularizers.slope([3.0, 2.0, 1.0]), np.array([2.0, -2.0, 0.0])
    yield regularizers.lasso(1.5), np.array([1.0, 0.0, -1.0])
    yield regularizers.fused_lasso([1.0, 1.0], sparsity=1.0), np.array([1.0, 1.0, 0.0])
    yield regularizers.fused_lasso([2.0, 1.0, 1.5]), np.array([1.0, 1.0, 0.0, -1.0])


def _check_membership_lp(quick: bool) -> CheckResult:
    g = _rng(4)
    n_query = 30 if quick else 150
    disagreements = 0
    total = 0
    for spec, x in _membership_fixtures():
        desc = polytope.subdifferential_at(spec, x)
        V = polytope.enumerate_vertices(desc).vertices
        p = V.shape[1]
        scale = float(np.abs(V).max(initial=1.0))
        for j in range(n_query):
            if j % 2 == 0:
                w = g.dirichlet(np.ones(V.shape[0]))
                q = V.T @ w
                expect = True
            else:
                d = g.normal(size=p)
                d /= np.linalg.norm(d)
                q = V[np.argmax(V @ d)] + 1e-3 * scale * d
                expect = False
            got = polytope.contains(desc, q, tol=1e-8 * (1 + scale))
            lp = _hull_feasible(V, q)
            total += 1
            if got != expect or lp != expect:
                disagreements += 1
    ok = disagreements == 0
    return CheckResult("contains vs LP hull feasibility", ok,
                       f"{total} queries, {disagreements} disagreements")


def _check_hausdorff(quick: bool) -> CheckResult:
    del quick
    g = _rng(5)
    failures = []
    V = g.normal(size=(12, 3))
    A = polytope.VPolytope(V)
    if polytope.hausdorff_distance(A, A) > 1e-12:
        failures.append("self-distance nonzero")
    # shifting a set by t moves the Hausdorff distance to exactly ||t||
    t = np.array([0.3, -0.4, 1.2])
    B = polytope.VPolytope(V + t)
    d = polytope.hausdorff_distance(A, B)
    if abs(d - np.linalg.norm(t)) > 1e-6:
        failures.append(f"translation distance {d:.6f} != {np.linalg.norm(t):.6f}")
    # scaling a centered cross-polytope: distance |1-s| * max vertex norm
    E = np.vstack([np.eye(3), -np.eye(3)])
    d2 = polytope.hausdorff_distance(polytope.VPolytope(E), polytope.VPolytope(2.0 * E))
    if abs(d2 - 1.0) > 1e-6:
        failures.append(f"scaling distance {d2:.6f} != 1")
    ok = not failures
    return CheckResult("hausdorff_distance closed-form fixtures", ok,
                       "; ".join(failures) if failures else "3 fixtures exact")


# ---------------------------------------------------------------------------
# Estimator cross-checks
# ---------------------------------------------------------------------------


def _check_ridge_closed_form(quick: bool) -> CheckResult:
    g = _rng(6)
    n_draw = 10 if quick else 50
    C = equicorrelation(3, 0.4)
    beta0 = np.array([1.0, -2.0, 0.0])
    spec = regularizers.ridge(1.3, alpha=0.7)
    worst = 0.0
    for _ in range(n_draw):
        W = g.normal(size=3)
        u = solvers.solve_V_min(C, W, spec, beta0).solution
        expect = C.solve(W - 0.7 * 1.3 * beta0)
        worst = max(worst, float(np.abs(u - expect).max()))
    ok = worst <= 1e-10
    return CheckResult("ridge V-minimizer closed form", ok,
                       f"{n_draw} draws, worst abs deviation {worst:.2e}")


def _cross_cells():
    yield ("lasso p2", regularizers.lasso(1.0, alpha=3.0),
           asymptotics.ModelSpec(np.array([1.0, 0.0]), equicorrelation(2, 0.3), 1.0))
    yield ("slope 3-2", regularizers.slope([3.0, 2.0], alpha=2.0),
           asymptotics.ModelSpec(np.array([1.0, 0.0]), equicorrelation(2, 0.3), 0.5))
    yield ("fused p3", regularizers.fused_lasso([1.0, 1.0], sparsity=1.0, alpha=2.0),
           asymptotics.ModelSpec(np.array([2.0, 2.0, 0.0]), SPDMatrix(np.eye(3)), 1.0))


def _check_cross_oracle(quick: bool) -> CheckResult:
    reps = 500 if quick else 2000
    worst = 0.0
    lines = []
    for name, spec, model in _cross_cells():
        direct = asymptotics.recovery_probability_direct(model, spec, reps, seed=11)
        closed = asymptotics.recovery_probability_closed_form(model, spec, reps, seed=12)
        se = float(np.hypot(direct.se, closed.se))
        gap = abs(direct.p_hat - closed.p_hat)
        ratio = gap / max(se, 1e-12)
        worst = max(worst, ratio)
        lines.append(f"{name}: |{direct.p_hat:.3f}-{closed.p_hat:.3f}|={ratio:.1f}se")
    ok = worst <= 4.0
    return CheckResult("direct vs closed-form recovery probability", ok, "; ".join(lines))


_CHECKS = (
    _check_prox_slope,
    _check_prox_slope_directional,
    _check_isotonic,
    _check_membership_lp,
    _check_hausdorff,
    _check_ridge_closed_form,
    _check_cross_oracle,
)


def run_all(quick: bool = False) -> list:
    """Run every check; returns a list of CheckResult."""
    return [chk(quick) for chk in _CHECKS]
