"""Finite-sample estimation pipeline.

Synthetic data generation, penalized least-squares fits with the
root-n penalty scaling, the two-step proximal truncation, and the
three-step reduced OLS refit. These are the finite-n counterparts of
the limiting quantities in :mod:`patternlab.asymptotics`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .asymptotics import ModelSpec
from .numerics import RngStream
from .regularizers import (
    Pattern,
    PenaltySpec,
    pattern_basis,
    pattern_of,
    pattern_representative,
)
from .solvers import SolverConfig, prox_penalty, solve_penalized_ls

SCALE_RULES = ("sqrt_n", "fixed")


@dataclass(frozen=True, eq=False)
class Dataset:
    """One synthetic draw y = X beta0 + eps.

    ``seed`` records the (seed, stream) key of the generating stream, so
    the draw can be regenerated bit-exactly with
    ``generate_data(model, n, RngStream(*seed))``.
    """

    X: NDArray
    y: NDArray
    model: ModelSpec
    seed: tuple

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True, eq=False)
class PipelineResult:
    """The three stages of one pipeline run.

    ``beta3`` is None when the stage-2 pattern dimension exceeds what the
    data can identify (rank-deficient reduced design).
    """

    beta1: NDArray
    beta2: NDArray
    beta3: Optional[NDArray]
    pattern2: Pattern
    recovered: bool


def generate_data(model: ModelSpec, n: int, rng: RngStream) -> Dataset:
    """Rows of X i.i.d. N(0, C), eps i.i.d. N(0, sigma^2)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = model.dim
    Z = rng.standard_normal((n, p))
    X = Z @ model.C.sqrt()
    eps = model.sigma * rng.standard_normal(n)
    y = X @ model.beta0 + eps
    return Dataset(X, y, model, (rng.seed, rng.stream))


def _power_lambda_max(G: NDArray, iters: int = 20) -> float:
    """Largest-eigenvalue estimate by power iteration from the ones vector."""
    v = np.ones(G.shape[0]) / math.sqrt(G.shape[0])
    for _ in range(iters):
        w = G @ v
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            return 0.0
        v = w / nrm
    return float(v @ (G @ v))


def fit_stage1(data: Dataset, spec: PenaltySpec, scale_rule: str = "sqrt_n",
               cfg: Optional[SolverConfig] = None) -> NDArray:
    """Penalized least-squares fit of the dataset.

    ``scale_rule="sqrt_n"`` multiplies the penalty's global scale by
    sqrt(n) — the scaling under which the error sqrt(n)(beta_hat - beta0)
    has a nondegenerate limit — while ``"fixed"`` uses ``spec`` as given.
    A zero global scale requests plain OLS and requires full column rank.
    """
    if scale_rule not in SCALE_RULES:
        raise ValueError(f"scale_rule must be one of {SCALE_RULES}")
    X, y = data.X, data.y
    n, p = X.shape
    if spec.global_scale == 0.0:
        beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
        if rank < p:
            raise ValueError(
                f"OLS requested but X has rank {rank} < {p}; add a penalty"
            )
        return beta
    eff = spec
    if scale_rule == "sqrt_n":
        eff = spec.with_scale(spec.global_scale * math.sqrt(n))
    step = None
    if p > 150 and eff.family in ("slope", "lasso"):
        # large-p path: avoid the dense eigensolve inside the solver
        G = X.T @ X
        if eff.smooth_part:
            G = G + eff.global_scale * eff.smooth_part * np.eye(p)
        est = _power_lambda_max(G)
        if est > 0:
            step = 1.0 / (1.1 * est)
    return solve_penalized_ls(X, y, eff, cfg, step=step).solution


def two_step(beta1, spec: PenaltySpec, alpha: float, n: int) -> NDArray:
    """Proximal truncation of an initial estimate at scale alpha/sqrt(n)."""
    beta1 = np.asarray(beta1, dtype=float)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if n < 1:
        raise ValueError("n must be >= 1")
    if alpha == 0.0:
        return beta1.copy()
    return prox_penalty(spec, beta1, alpha / math.sqrt(n))


def three_step(data: Dataset, pattern: Pattern, spec: PenaltySpec) -> NDArray:
    """OLS on the pattern subspace, lifted back to full coordinates.

    The fit is invariant to the choice of pattern-space basis: any two
    bases differ by an invertible map that cancels in U (U'X'XU)^{-1} U'.
    """
    rep = pattern_representative(spec, pattern)
    basis = pattern_basis(spec, rep)
    p = data.p
    if basis.rank == 0:
        return np.zeros(p)
    U = basis.columns
    XM = data.X @ U
    theta, _, rank, sv = np.linalg.lstsq(XM, data.y, rcond=None)
    if rank < basis.rank or sv[-1] <= 1e-10 * sv[0]:
        raise ValueError(
            f"reduced design is rank-deficient for a pattern of dimension "
            f"{basis.rank} (rank {rank} at n = {data.n})"
        )
    return U @ theta


def three_step_pipeline(data: Dataset, stage1_spec: PenaltySpec,
                        stage2_spec: PenaltySpec, alpha2: float,
                        scale_rule: str = "fixed",
                        cfg: Optional[SolverConfig] = None) -> PipelineResult:
    """Run all three stages on one dataset and compare the stage-2 pattern
    against the pattern of the true signal."""
    beta1 = fit_stage1(data, stage1_spec, scale_rule, cfg)
    beta2 = two_step(beta1, stage2_spec, alpha2, data.n)
    snap = 1e-6 * max(1.0, float(np.abs(beta2).max(initial=0.0)))
    pattern2 = pattern_of(stage2_spec, beta2, tol=snap)
    target = pattern_of(stage2_spec, data.model.beta0)
    recovered = pattern2 == target
    beta3 = None
    if basis_dim_fits(pattern2, stage2_spec, data.n):
        try:
            beta3 = three_step(data, pattern2, stage2_spec)
        except ValueError:
            beta3 = None
    return PipelineResult(beta1, beta2, beta3, pattern2, recovered)


def basis_dim_fits(pattern: Pattern, spec: PenaltySpec, n: int) -> bool:
    """True when the pattern dimension can be identified from n samples."""
    try:
        rep = pattern_representative(spec, pattern)
    except ValueError:
        return False
    return pattern_basis(spec, rep).rank <= n


def _finite_snap(beta: NDArray) -> float:
    return 1e-6 * max(1.0, float(np.abs(beta).max(initial=0.0)))


def empirical_recovery_rate(model: ModelSpec, spec: PenaltySpec, n_grid, alpha: float,
                            reps: int, seed: int,
                            cfg: Optional[SolverConfig] = None) -> list:
    """Fraction of replicates whose fitted pattern equals the true one.

    Per grid point n, fits reps independent datasets with the penalty
    sqrt(n)*alpha*f and snaps the fitted pattern at
    1e-6*max(1, ||beta_hat||_inf). Converges to the limiting recovery
    probability as n grows.
    """
    n_grid = [int(n) for n in np.atleast_1d(n_grid)]
    if not n_grid or reps < 1:
        raise ValueError("n grid must be nonempty and reps >= 1")
    target = pattern_of(spec, model.beta0)
    fit_spec = spec.with_scale(spec.global_scale * alpha)
    rows = []
    for n in n_grid:
        hits = 0
        nonconverged = 0
        for r in range(reps):
            data = generate_data(model, n, RngStream(seed, r))
            eff = fit_spec.with_scale(fit_spec.global_scale * math.sqrt(n))
            report = solve_penalized_ls(data.X, data.y, eff, cfg)
            if not report.converged:
                nonconverged += 1
            beta = report.solution
            if pattern_of(spec, beta, tol=_finite_snap(beta)) == target:
                hits += 1
        rate = hits / reps
        rows.append(
            {
                "n": n,
                "alpha": float(alpha),
                "rate": rate,
                "se": float(np.sqrt(rate * (1.0 - rate) / reps)),
                "reps": reps,
                "nonconverged": nonconverged,
            }
        )
    return rows


def two_step_recovery_rate(model: ModelSpec, spec: PenaltySpec, n: int, alphas,
                           reps: int, seed: int) -> list:
    """Recovery rate of the two-step estimator over a grid of alphas.

    Stage 1 is OLS (requires n >= p with full rank); every grid point
    reuses the same stage-1 fits, so the curve varies only through the
    truncation scale.
    """
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    p = model.dim
    if n < p:
        raise ValueError("two-step with an OLS first stage requires n >= p")
    target = pattern_of(spec, model.beta0)
    B1 = np.empty((reps, p))
    for r in range(reps):
        data = generate_data(model, n, RngStream(seed, r))
        B1[r] = fit_stage1(data, spec.with_scale(0.0))
    rows = []
    for a in alphas:
        hits = 0
        for r in range(reps):
            b2 = two_step(B1[r], spec, float(a), n)
            if pattern_of(spec, b2, tol=_finite_snap(b2)) == target:
                hits += 1
        rate = hits / reps
        rows.append(
            {
                "n": int(n),
                "alpha": float(a),
                "rate": rate,
                "se": float(np.sqrt(rate * (1.0 - rate) / reps)),
                "reps": reps,
            }
        )
    return rows
