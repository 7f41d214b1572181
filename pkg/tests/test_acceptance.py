"""End-to-end acceptance battery.

Each test covers one release criterion and prints a single
``[ n] <label> ... PASS/FAIL`` line (visible even under plain
``pytest``), then asserts the criterion at its stated tolerance.
Seeds are frozen so every line is reproducible bit-for-bit.
"""

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
from oracles import (
    hull_distance_lp,
    isotonic_exhaustive,
    prox_enumerated,
    prox_subgradient,
)

from patternlab.asymptotics import (
    ModelSpec,
    irrepresentability_check,
    recovery_probability_closed_form,
    recovery_probability_direct,
    rmse_curve,
)
from patternlab.estimators import (
    generate_data,
    three_step_pipeline,
    two_step_recovery_rate,
)
from patternlab.numerics import RngStream, SPDMatrix, block_covariance, equicorrelation
from patternlab.polytope import (
    contains,
    directional_subdifferential,
    enumerate_vertices,
    hausdorff_distance,
    subdifferential_at,
)
from patternlab.regularizers import (
    concavified_sequence,
    fused_lasso,
    lasso,
    pattern_of,
    ridge,
    slope,
    slope_bh,
    slope_linear,
)
from patternlab.solvers import (
    isotonic_decreasing,
    prox_slope,
    prox_slope_directional,
    solve_V_min_batch,
)

REPS = 10_000


def _emit(capsys, idx, label, passed, detail=""):
    tail = f"  ({detail})" if detail else ""
    with capsys.disabled():
        print(f"\n[{idx:2d}] {label} ... {'PASS' if passed else 'FAIL'}{tail}")


def _closed_curve(model, spec, alphas, seed):
    return np.array([
        recovery_probability_closed_form(
            model, spec.with_scale(spec.global_scale * a), REPS, seed).p_hat
        for a in alphas
    ])


def test_01_phase_transition_at_critical_correlation(capsys):
    """Recovery flips from certain to impossible across rho = 2/3."""
    t0 = time.monotonic()
    grid = np.geomspace(0.25, 50.0, 8)
    spec = slope(np.array([3.0, 2.0]))
    curves = {}
    for rho in (2 / 3 - 0.05, 2 / 3 + 0.05, 2 / 3):
        model = ModelSpec(np.array([1.0, 0.0]), equicorrelation(2, rho), 0.2)
        curves[rho] = _closed_curve(model, spec, grid, seed=17)
    elapsed = time.monotonic() - t0

    lo, hi, mid = curves[2 / 3 - 0.05], curves[2 / 3 + 0.05], curves[2 / 3]
    crosses = bool((lo >= 0.95).any())
    A = np.vstack([grid, np.ones_like(grid)]).T
    hi_trend = float(np.linalg.lstsq(A, hi, rcond=None)[0][0])
    hi_ok = hi[-1] <= 0.6 and hi_trend <= 0.0
    upper = mid[len(grid) // 2:]
    mid_ok = bool(((upper >= 0.35) & (upper <= 0.65)).all())
    ok = crosses and hi_ok and mid_ok and elapsed <= 120.0

    _emit(capsys, 1, "phase transition at the critical correlation", ok,
          f"below: max p={lo.max():.3f}; above: last p={hi[-1]:.3f}, "
          f"trend={hi_trend:+.4f}; at: mid range [{upper.min():.3f},"
          f"{upper.max():.3f}]; {elapsed:.0f}s")
    assert crosses, "recovery never exceeds 0.95 below the critical rho"
    assert hi_ok, f"above critical rho: last p={hi[-1]:.3f}, trend={hi_trend:+.4f}"
    assert mid_ok, f"at critical rho the upper-half curve leaves [0.35, 0.65]: {upper}"
    assert elapsed <= 120.0


def test_02_fused_equal_weight_cap_and_concavified_recovery(capsys):
    """Equal difference weights cap recovery at 1/2 on a monotone signal;
    a strictly concave weight triple with a dominating sparsity weight
    recovers it with probability -> 1."""
    t0 = time.monotonic()
    model = ModelSpec(np.array([1.0, 2.0, 2.0, 3.0]), equicorrelation(4, 0.0), 1.0)
    equal = fused_lasso(np.ones(3), 1.0)
    grid = np.geomspace(0.5, 60.0, 10)
    ps, ses = [], []
    for a in grid:
        r = recovery_probability_closed_form(model, equal.with_scale(a), REPS, 23)
        ps.append(r.p_hat)
        ses.append(r.se)
    ps, ses = np.array(ps), np.array(ses)
    cap_ok = bool((ps <= 0.5 + 3.0 * ses).all())

    weights = np.array([1.6, 1.8, 1.6])
    assert weights[0] / 2 + weights[2] / 2 < weights[1]  # strict concavity
    pad = np.concatenate([[0.0], weights, [0.0]])
    assert 3.6 > (pad[:-1] + pad[1:]).max()  # sparsity dominates adjacent sums
    conc = fused_lasso(weights, 3.6)
    p_conc = recovery_probability_closed_form(model, conc.with_scale(80.0), REPS, 23).p_hat
    elapsed = time.monotonic() - t0
    ok = cap_ok and p_conc >= 0.95 and elapsed <= 120.0

    _emit(capsys, 2, "fused equal-weight cap and concavified recovery", ok,
          f"equal max p={ps.max():.3f}, concavified p={p_conc:.3f}, {elapsed:.0f}s")
    assert cap_ok, f"equal-weight curve exceeds 1/2 + 3SE: {ps}"
    assert p_conc >= 0.95
    assert elapsed <= 120.0


# (label, beta0, rho, alpha, spec) grid spanning all three penalty families.
_CONC_W = np.asarray(concavified_sequence(3, 1.0, 0.2).weights)
AGREEMENT_CELLS = [
    ("lasso p2 lo", [1.0, 0.0], 0.3, 1.0, lasso(1.0)),
    ("lasso p2 hi", [1.0, 0.0], 0.3, 2.5, lasso(1.0)),
    ("lasso p3", [1.0, 1.0, 0.0], 0.0, 1.0, lasso(1.0)),
    ("lasso mixed", [2.0, -1.0, 0.0], 0.4, 1.5, lasso(1.0)),
    ("slope p2 lo", [1.0, 0.0], 0.3, 0.6, slope(np.array([3.0, 2.0]))),
    ("slope p2 hi", [1.0, 0.0], 0.75, 1.0, slope(np.array([3.0, 2.0]))),
    ("slope p3", [1.0, 1.0, 0.0], 0.0, 0.8, slope(np.array([3.0, 2.0, 1.0]))),
    ("slope null", [0.0, 0.0, 0.0], 0.2, 0.5, slope(np.array([3.0, 2.0, 1.0]))),
    ("fused flat", [1.0, 1.0, 1.0, 1.0], 0.0, 0.8, fused_lasso(np.ones(3), 1.0)),
    ("fused stair", [0.0, 1.0, 1.0, 2.0], 0.0, 1.0, fused_lasso(_CONC_W, 3.6)),
    ("fused bump", [1.0, 2.0, 2.0, 1.0], 0.2, 0.7, fused_lasso(np.ones(3))),
    ("fused sparse", [1.0, 1.0, 0.0], 0.0, 1.2, fused_lasso(np.ones(2), 0.8)),
]


def test_03_direct_vs_closed_form_agreement(capsys):
    """Monte-Carlo pattern counting and the projected-noise closed form
    estimate the same probability on every cell."""
    worst = 0.0
    fails = []
    for name, b, rho, alpha, spec in AGREEMENT_CELLS:
        model = ModelSpec(np.array(b), equicorrelation(len(b), rho), 1.0)
        eff = spec.with_scale(spec.global_scale * alpha)
        d = recovery_probability_direct(model, eff, REPS, 41)
        c = recovery_probability_closed_form(model, eff, REPS, 42)
        se = float(np.sqrt(d.se**2 + c.se**2))
        gap = abs(d.p_hat - c.p_hat)
        worst = max(worst, gap / se if se > 0 else 0.0)
        if gap > 3.0 * se:
            fails.append((name, d.p_hat, c.p_hat))
    ok = not fails
    _emit(capsys, 3, "direct vs closed-form recovery agreement (12 cells)", ok,
          f"worst z={worst:.2f}" if ok else f"disagree: {fails}")
    assert not fails, fails


def test_04_log_gap_decays_linearly_in_alpha_squared(capsys):
    """Where the mean-in-relative-interior certificate holds, log(1 - p)
    is linear in alpha^2 with negative slope."""
    cells = [
        ("lasso", [1.0, 0.0], 0.3, lasso(1.0), np.linspace(0.5, 3.0, 9)),
        ("slope", [1.0, 0.0], 0.3, slope(np.array([3.0, 2.0])), np.linspace(0.3, 1.8, 9)),
        ("fused", [0.0, 1.0, 1.0, 2.0], 0.0, fused_lasso(_CONC_W), np.linspace(1.0, 14.0, 9)),
    ]
    results = []
    for name, b, rho, spec, grid in cells:
        model = ModelSpec(np.array(b), equicorrelation(len(b), rho), 1.0)
        cert = irrepresentability_check(model, spec)
        assert cert.holds and cert.margin > 0, name
        ps = _closed_curve(model, spec, grid, seed=47)
        keep = ps <= 0.999
        x = grid[keep] ** 2
        yv = np.log(1.0 - ps[keep])
        A = np.vstack([x, np.ones_like(x)]).T
        coef = np.linalg.lstsq(A, yv, rcond=None)[0]
        resid = yv - A @ coef
        r2 = 1.0 - resid @ resid / ((yv - yv.mean()) @ (yv - yv.mean()))
        results.append((name, float(coef[0]), float(r2)))
    ok = all(s < 0 and r2 >= 0.9 for _, s, r2 in results)
    _emit(capsys, 4, "log-gap decay linear in alpha^2", ok,
          " ".join(f"{n}: slope={s:.3f} R2={r2:.3f}" for n, s, r2 in results))
    for name, s, r2 in results:
        assert s < 0.0, (name, s)
        assert r2 >= 0.9, (name, r2)


def test_05_prox_operators_vs_brute_force(capsys):
    """Closed-form prox operators against two independent brute-force
    routes: multi-start subgradient descent (polished over the flat
    complex to 1e-10) and exhaustive flat enumeration at p <= 4; the
    isotonic projection against exhaustive active-set enumeration."""
    rng = RngStream(83).generator
    worst_plain = 0.0
    for k in range(1000):
        p = int(rng.integers(2, 5))
        lam = np.sort(rng.uniform(0.1, 2.0, size=p))[::-1]
        y = rng.standard_normal(p) * 2.0
        got = prox_slope(y, lam)
        sub, _ = prox_subgradient(np.zeros(p), lam, y, n_iter=400, n_starts=3, seed=k)
        enu = prox_enumerated(np.zeros(p), lam, y)
        worst_plain = max(worst_plain,
                          float(np.abs(got - sub).max()),
                          float(np.abs(got - enu).max()))

    worst_dir = 0.0
    for k in range(1000):
        p = int(rng.integers(2, 5))
        lam = np.sort(rng.uniform(0.1, 2.0, size=p))[::-1]
        beta0 = rng.integers(-1, 2, size=p).astype(float) * rng.uniform(1.0, 3.0)
        y = rng.standard_normal(p) * 2.0
        got = prox_slope_directional(beta0, lam, y)
        sub, _ = prox_subgradient(beta0, lam, y, n_iter=400, n_starts=3, seed=1000 + k)
        enu = prox_enumerated(beta0, lam, y)
        worst_dir = max(worst_dir,
                        float(np.abs(got - sub).max()),
                        float(np.abs(got - enu).max()))

    worst_iso = 0.0
    for _ in range(1000):
        p = int(rng.integers(1, 7))
        y = rng.standard_normal(p) * 3.0
        worst_iso = max(worst_iso,
                        float(np.abs(isotonic_decreasing(y) - isotonic_exhaustive(y)).max()))

    ok = worst_plain <= 1e-6 and worst_dir <= 1e-6 and worst_iso <= 1e-10
    _emit(capsys, 5, "prox operators vs brute-force solvers", ok,
          f"plain={worst_plain:.1e} directional={worst_dir:.1e} isotonic={worst_iso:.1e}")
    assert worst_plain <= 1e-6
    assert worst_dir <= 1e-6
    assert worst_iso <= 1e-10


def test_06_ridge_closed_form_and_unpenalized_rmse(capsys):
    """Ridge limiting errors have mean -lam*C^{-1}beta0 and covariance
    sigma^2 C^{-1}; with the penalty off, RMSE is sigma*sqrt(tr C^{-1})."""
    C = equicorrelation(3, 0.3)
    beta0 = np.array([1.0, -2.0, 0.5])
    sigma, lam_r = 0.7, 1.3
    model = ModelSpec(beta0, C, sigma)
    N = 100_000
    Cinv = C.inv()

    factor = sigma * C.sqrt()
    W = RngStream(211).generator.standard_normal((N, 3)) @ factor.T
    U, _, _, conv = solve_V_min_batch(C, W, ridge(lam_r), beta0)
    assert conv.all()
    mean_th = -lam_r * Cinv @ beta0
    cov_th = sigma**2 * Cinv
    mu = U.mean(axis=0)
    z_mean = float(np.abs((mu - mean_th) / (U.std(axis=0, ddof=1) / np.sqrt(N))).max())
    S = np.cov(U.T)
    se_cov = np.sqrt((np.outer(np.diag(cov_th), np.diag(cov_th)) + cov_th**2) / N)
    z_cov = float(np.abs((S - cov_th) / se_cov).max())

    row = rmse_curve(model, ridge(1.0), alphas=[0.0], reps=N, seed=313)[0]
    target = sigma * np.sqrt(np.trace(Cinv))
    z_rmse = abs(row["rmse"] - target) / row["rmse_se"]

    ok = z_mean <= 3.0 and z_cov <= 3.0 and z_rmse <= 3.0
    _emit(capsys, 6, "ridge closed form and unpenalized RMSE", ok,
          f"z_mean={z_mean:.2f} z_cov={z_cov:.2f} z_rmse={z_rmse:.2f}")
    assert z_mean <= 3.0
    assert z_cov <= 3.0
    assert z_rmse <= 3.0


MEMBERSHIP_FIXTURES = [
    (lasso(1.0), np.array([1.0, 0.0, -1.0, 0.0])),
    (slope(np.array([3.0, 2.0])), np.array([1.0, 0.0])),
    (slope(np.array([3.0, 2.0, 1.0])), np.array([1.0, 1.0, 0.0])),
    (fused_lasso(np.ones(3), 1.0), np.array([0.0, 1.0, 1.0, 2.0])),
    (fused_lasso(np.array([1.5, 0.5])), np.array([2.0, 2.0, -1.0])),
]


def test_07_membership_vs_lp_feasibility(capsys):
    """contains() agrees with exact LP hull feasibility on 1000 queries:
    convex combinations of vertices (members) and support-direction
    displacements with margin >= 1e-4 (non-members)."""
    rng = RngStream(71).generator
    checks = disagreements = 0
    for spec, x in MEMBERSHIP_FIXTURES:
        desc = subdifferential_at(spec, x)
        V = enumerate_vertices(desc, max_vertices=200).vertices
        p = V.shape[1]
        for q_i in range(200):
            if q_i % 2 == 0:
                q = rng.dirichlet(np.ones(V.shape[0])) @ V
                member = True
            else:
                d = rng.standard_normal(p)
                d /= np.linalg.norm(d)
                q = V[np.argmax(V @ d)] + d * rng.uniform(1e-4, 2.0)
                member = False
            assert (hull_distance_lp(V, q) <= 1e-7) == member
            for tol in (1e-6, 1e-8):
                checks += 1
                if contains(desc, q, tol=tol) != member:
                    disagreements += 1
    ok = disagreements == 0
    _emit(capsys, 7, "polytope membership vs LP feasibility", ok,
          f"{checks} checks, {disagreements} disagreements")
    assert disagreements == 0


def _hausdorff_fixture(rng):
    fam = rng.integers(0, 3)
    if fam == 0:
        p = int(rng.integers(2, 6))
        spec = lasso(float(rng.uniform(0.5, 2.0)))
    elif fam == 1:
        p = int(rng.integers(2, 5))
        spec = slope(np.sort(rng.uniform(0.5, 3.0, size=p))[::-1])
    else:
        p = int(rng.integers(2, 6))
        spec = fused_lasso(rng.uniform(0.5, 2.0, size=p - 1), float(rng.uniform(0.5, 1.5)))
    x = rng.integers(-2, 3, size=p).astype(float)
    # direction magnitudes chosen so pattern breakpoints fall between
    # n = 1e2 and n = 1e4: some distances start positive, all vanish.
    u = rng.choice([-1.0, 1.0], size=p) * rng.uniform(5.0, 25.0, size=p)
    return spec, x, u


def test_08_subdifferential_hausdorff_convergence(capsys):
    rng = RngStream(1234).generator
    started_positive = 0
    worst_final = 0.0
    monotone = True
    for _ in range(50):
        spec, x, u = _hausdorff_fixture(rng)
        target = enumerate_vertices(directional_subdifferential(spec, x, u),
                                    max_vertices=4000)
        ds = [
            hausdorff_distance(
                enumerate_vertices(subdifferential_at(spec, x + u / np.sqrt(n)),
                                   max_vertices=4000),
                target)
            for n in (1e2, 1e4, 1e6)
        ]
        started_positive += ds[0] > 1e-9
        monotone &= ds[0] >= ds[1] - 1e-12 and ds[1] >= ds[2] - 1e-12
        worst_final = max(worst_final, ds[2])
    ok = monotone and worst_final <= 1e-9
    _emit(capsys, 8, "subdifferential Hausdorff convergence", ok,
          f"{started_positive}/50 start positive, final max={worst_final:.1e}")
    assert monotone
    assert worst_final <= 1e-9
    assert started_positive >= 10  # the battery must exercise actual decay


def test_09_per_signal_best_family_ordering(capsys):
    """On the paired-correlation design each penalty family wins at its
    own signal shape, comparing per-family RMSE minima over the grid."""
    Cm = np.eye(4)
    Cm[0, 2] = Cm[2, 0] = 0.8
    Cm[1, 3] = Cm[3, 1] = 0.8
    C = SPDMatrix(Cm)
    pens = {
        "lasso": lasso(1.0),
        "slope": slope(slope_linear(4, 4.0)),
        "fused": fused_lasso(np.ones(3), 1.0),
    }
    grid = np.geomspace(0.05, 8.0, 12)
    cases = [
        ((0.0, 0.0, 1.0, 0.0), "lasso"),
        ((1.0, 1.0, 1.0, 1.0), "fused"),
        ((1.0, 0.0, 1.0, 0.0), "slope"),
    ]
    outcomes = []
    for sig, expected in cases:
        model = ModelSpec(np.array(sig), C, 0.2)
        mins = {name: min(r["rmse"] for r in rmse_curve(model, pen, grid, 4000, 31))
                for name, pen in pens.items()}
        outcomes.append((sig, expected, min(mins, key=mins.get), mins))
    ok = all(w == e for _, e, w, _ in outcomes)
    _emit(capsys, 9, "per-signal best penalty family ordering", ok,
          "; ".join(f"{s}: {w}" for s, _, w, _ in outcomes))
    for sig, expected, winner, mins in outcomes:
        assert winner == expected, (sig, mins)


RESCUE_FIXTURES = [
    ("slope rho=0.75", np.array([1.0, 0.0]), equicorrelation(2, 0.75),
     slope(np.array([3.0, 2.0]))),
    ("slope rho=0.85", np.array([1.0, 0.0]), equicorrelation(2, 0.85),
     slope(np.array([3.0, 2.0]))),
    ("lasso corr A", np.array([1.0, 1.0, 0.0]),
     SPDMatrix(np.array([[1.0, 0.2, 0.7], [0.2, 1.0, 0.7], [0.7, 0.7, 1.0]])),
     lasso(1.0)),
    ("lasso corr B", np.array([1.0, 1.0, 0.0]),
     SPDMatrix(np.array([[1.0, 0.1, 0.7], [0.1, 1.0, 0.7], [0.7, 0.7, 1.0]])),
     lasso(1.0)),
]


def test_10_two_step_rescues_failed_one_step(capsys):
    """Where the certificate fails, one-step recovery stalls below 0.6
    but the OLS-then-truncate estimator still recovers the pattern."""
    rows = []
    for name, beta0, C, spec in RESCUE_FIXTURES:
        model = ModelSpec(beta0, C, 0.5)
        cert = irrepresentability_check(model, spec)
        assert not cert.holds, name
        one = recovery_probability_closed_form(model, spec.with_scale(6.0), REPS, 53).p_hat
        two = two_step_recovery_rate(model, spec, n=10_000, alphas=[6.0],
                                     reps=250, seed=59)[0]["rate"]
        rows.append((name, one, two))
    ok = all(one <= 0.6 and two > 0.9 for _, one, two in rows)
    _emit(capsys, 10, "two-step rescue where one-step fails", ok,
          "; ".join(f"{n}: one={o:.2f} two={t:.2f}" for n, o, t in rows))
    for name, one, two in rows:
        assert one <= 0.6, (name, one)
        assert two > 0.9, (name, two)


def test_11_staged_pipeline_on_block_design(capsys):
    """High-dimensional staged run (n=100, p=200, 20 correlated blocks,
    clusters of 65/52/83 coefficients at 20/10/0): exact pattern recovery
    rate across 50 seeds, then conditional error contraction and
    conditional componentwise unbiasedness of the reduced OLS refit."""
    p = 200
    C = block_covariance(20, 10, 0.8)
    beta0 = np.concatenate([np.full(65, 20.0), np.full(52, 10.0), np.zeros(83)])
    model = ModelSpec(beta0, C, 0.8)
    stage1 = slope(slope_bh(p, 0.5), alpha=0.7)
    stage2 = slope(slope_bh(p, 0.5))

    hits = 0
    err2, err3, E3 = [], [], []
    for r in range(50):
        data = generate_data(model, 100, RngStream(4242, r))
        res = three_step_pipeline(data, stage1, stage2, 42.0)
        if res.recovered:
            hits += 1
            err2.append(float(np.linalg.norm(res.beta2 - beta0)))
            if res.beta3 is not None:
                err3.append(float(np.linalg.norm(res.beta3 - beta0)))
                E3.append(res.beta3 - beta0)
    rate = hits / 50.0

    ratio = np.nan
    z_max = np.nan
    if err3:
        rmse2 = float(np.sqrt(np.mean(np.square(err2))))
        rmse3 = float(np.sqrt(np.mean(np.square(err3))))
        ratio = rmse3 / rmse2
        E3 = np.array(E3)
        se = E3.std(axis=0, ddof=1) / np.sqrt(E3.shape[0])
        z = np.where(se > 0, np.abs(E3.mean(axis=0)) / np.where(se > 0, se, 1.0), 0.0)
        z_max = float(z.max())

    rate_ok = rate >= 0.5
    ratio_ok = bool(err3) and ratio <= 0.25
    unbiased_ok = bool(err3) and z_max <= 3.0
    ok = rate_ok and ratio_ok and unbiased_ok
    _emit(capsys, 11, "staged pipeline on the 100x200 block design", ok,
          f"stage-2 rate={rate:.2f} [{'PASS' if rate_ok else 'FAIL'}], "
          f"rmse ratio={ratio:.4f} [{'PASS' if ratio_ok else 'FAIL'}], "
          f"max |z|={z_max:.2f} [{'PASS' if unbiased_ok else 'FAIL'}]")
    assert ratio_ok, f"conditional RMSE ratio {ratio}"
    assert unbiased_ok, f"conditional componentwise max |z| = {z_max}"
    assert rate_ok, (
        f"stage-2 exact recovery rate {rate:.2f} < 0.5 at the pinned stage "
        f"scales; per-seed success windows for the truncation scale sit well "
        f"above the pinned value, so this criterion fails as specified"
    )
