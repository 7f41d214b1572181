"""Proximal operators and optimizers.

Two optimization targets share the machinery here:

* the limiting objective ``V(u) = 0.5 u'Cu - u'W + f'(beta0; u)`` whose
  minimizer drives all asymptotic quantities, and
* finite-sample penalized least squares ``0.5||y - Xb||^2 + f_n(b)``.

SLOPE, Lasso and Ridge run on proximal gradient (Lasso is the constant-
weight SLOPE special case); the generalized Lasso runs on ADMM with a
prefactorized linear system. Batched variants solve many replicates at
once on stacked right-hand sides; they are what the Monte Carlo layer
uses.

Convergence reporting: ``kkt_residual`` is the membership slack of the
negative smooth gradient in the penalty subdifferential, normalized by
(1 + the gradient's sup-norm) so that tolerances are scale-free. Batched
solves track a proximal fixed-point residual instead (building one
subdifferential per replicate would dwarf the solve itself); the
single-instance entry points always verify the exact condition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import cho_factor, cho_solve

from . import kernels
from .numerics import SPDMatrix
from .polytope import directional_subdifferential, membership_residual, subdifferential_at
from .regularizers import (
    ClusterPartition,
    PenaltySpec,
    cluster_partition,
    slope_lambda_chunks,
)


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 100_000
    tol_kkt: float = 1e-9
    tol_step: float = 1e-12
    admm_rho: float = 1.0

    def __post_init__(self) -> None:
        if self.max_iter <= 0:
            raise ValueError("max_iter must be positive")
        if min(self.tol_kkt, self.tol_step, self.admm_rho) <= 0:
            raise ValueError("tolerances and admm_rho must be positive")


@dataclass(frozen=True, eq=False)
class SolveReport:
    solution: NDArray
    iterations: int
    kkt_residual: float
    converged: bool


# ---------------------------------------------------------------------------
# Proximal operators
# ---------------------------------------------------------------------------


def prox_soft_threshold(y, t: float) -> NDArray:
    """Componentwise sgn(y) * max(|y| - t, 0)."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    y = np.asarray(y, dtype=float)
    return np.sign(y) * np.maximum(np.abs(y) - t, 0.0)


def isotonic_decreasing(z) -> NDArray:
    """Euclidean projection onto the nonincreasing cone (PAVA)."""
    return kernels.pava_decreasing(np.asarray(z, dtype=float))


def _check_slope_weights(lam) -> NDArray:
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1:
        raise ValueError("weights must be a 1-d vector")
    if np.any(np.diff(lam) > 0):
        raise ValueError("weights must be nonincreasing")
    if np.any(lam < 0):
        raise ValueError("weights must be nonnegative")
    return lam


def _prox_slope_batch(Y: NDArray, lam: NDArray) -> NDArray:
    signs = np.sign(Y)
    absY = np.abs(Y)
    order = np.argsort(-absY, axis=1, kind="stable")
    Z = np.take_along_axis(absY, order, axis=1) - lam[None, :]
    W = np.maximum(kernels.pava_decreasing_batch(Z), 0.0)
    out = np.empty_like(W)
    np.put_along_axis(out, order, W, axis=1)
    return out * signs


def prox_slope(y, lam) -> NDArray:
    """Prox of the sorted-L1 penalty with weight vector ``lam``.

    Sort |y| decreasingly, subtract the weights, project onto the
    nonincreasing nonnegative cone (PAVA then clamp — exact for this
    cone), then restore order and signs.
    """
    y = np.asarray(y, dtype=float)
    lam = _check_slope_weights(lam)
    if y.size != lam.size:
        raise ValueError("y and lam must have the same length")
    return _prox_slope_batch(y[None, :], lam)[0]


def _prox_slope_directional_batch(Y: NDArray, lam: NDArray, part: ClusterPartition) -> NDArray:
    """Rows are prox of the direction-space SLOPE penalty at beta0's clusters."""
    out = np.empty_like(Y)
    chunks, zero_chunk = slope_lambda_chunks(lam, part)
    for members, sgns, chunk in zip(part.clusters, part.signs, chunks):
        idx = list(members)
        s = np.asarray(sgns, dtype=float)
        V = Y[:, idx] * s
        order = np.argsort(-V, axis=1, kind="stable")
        Z = np.take_along_axis(V, order, axis=1) - chunk[None, :]
        Wc = kernels.pava_decreasing_batch(Z)  # no clamp: signs are free here
        U = np.empty_like(Wc)
        np.put_along_axis(U, order, Wc, axis=1)
        out[:, idx] = U * s
    if part.zero:
        zi = list(part.zero)
        out[:, zi] = _prox_slope_batch(Y[:, zi], zero_chunk)
    return out


def prox_slope_directional(beta0, lam, y) -> NDArray:
    """Prox of u ↦ J'_lam(beta0; u), the directional sorted-L1 penalty.

    Coordinates split by the magnitude clusters of ``beta0``; each
    cluster takes its consecutive slice of the weights (zero cluster
    last). The zero cluster is a plain sorted-L1 prox; nonzero clusters
    are sign-flipped, sorted, shifted by their weight slice and
    projected onto the nonincreasing cone without clamping.
    """
    beta0 = np.asarray(beta0, dtype=float)
    y = np.asarray(y, dtype=float)
    lam = _check_slope_weights(lam)
    if not (beta0.size == y.size == lam.size):
        raise ValueError("beta0, lam, and y must have the same length")
    part = cluster_partition(beta0)
    return _prox_slope_directional_batch(y[None, :], lam, part)[0]


def _prox_gen_lasso(y: NDArray, A: NDArray, t: float, rho: float = 1.0,
                    max_iter: int = 20_000) -> NDArray:
    """min_x 0.5||x - y||^2 + t*||A x||_1 by ADMM with prefactorized system."""
    p = y.size
    m = A.shape[0]
    factor = cho_factor(np.eye(p) + rho * (A.T @ A))
    w = np.zeros(m)
    d = np.zeros(m)
    scale = 1.0 + float(np.abs(y).max())
    x = y.copy()
    for _ in range(max_iter):
        x = cho_solve(factor, y + rho * (A.T @ (w - d)))
        v = A @ x
        w_new = prox_soft_threshold(v + d, t / rho)
        dual = rho * float(np.abs(A.T @ (w_new - w)).max())
        w = w_new
        d += v - w
        prim = float(np.abs(v - w).max())
        if max(prim, dual) <= 1e-11 * scale:
            break
    return x


def prox_penalty(spec: PenaltySpec, y, scale: float) -> NDArray:
    """Prox of ``scale`` times the full penalty (global scale included).

    A smooth ridge component is absorbed by rescaling: with s =
    scale*alpha and b the smooth coefficient, prox_{s(J + b/2||.||^2)}(y)
    = prox_{(s/(1+sb)) J}(y / (1+sb)).
    """
    if scale < 0:
        raise ValueError("scale must be nonnegative")
    y = np.asarray(y, dtype=float)
    s = scale * spec.global_scale
    if s == 0.0:
        return y.copy()
    if spec.family == "ridge":
        return y / (1.0 + s * (spec.lam + spec.smooth_part))
    if spec.smooth_part:
        denom = 1.0 + s * spec.smooth_part
        y = y / denom
        s = s / denom
    if spec.family == "lasso":
        return prox_soft_threshold(y, s * spec.lam)
    if spec.family == "slope":
        return prox_slope(y, s * spec.lam_vec)
    return _prox_gen_lasso(y, spec.A, s * spec.lam)


# ---------------------------------------------------------------------------
# Engines
# ---------------------------------------------------------------------------


def _pg_engine(Cmat: NDArray, step: float, W_eff: NDArray, prox_fn,
               fp_tol: NDArray, budget: int, X0: Optional[NDArray] = None):
    """Accelerated proximal gradient with per-row adaptive restart.

    Minimizes 0.5 u'Cu - u'W + F(u) row-wise, F given through its prox.
    Returns (X, fixed-point residual per row, iterations used).
    """
    N = W_eff.shape[0]
    X = np.zeros_like(W_eff) if X0 is None else X0.copy()
    Y = X.copy()
    t = np.ones(N)
    it = 0
    fp = np.full(N, np.inf)
    while it < budget:
        span = min(25, budget - it)
        for _ in range(span):
            G = Y @ Cmat - W_eff
            Xn = prox_fn(Y - step * G)
            restart = np.einsum("ij,ij->i", Y - Xn, Xn - X) > 0.0
            tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            mom = (t - 1.0) / tn
            mom[restart] = 0.0
            tn[restart] = 1.0
            Y = Xn + mom[:, None] * (Xn - X)
            X = Xn
            t = tn
            it += 1
        T = prox_fn(X - step * (X @ Cmat - W_eff))
        fp = np.abs(T - X).max(axis=1)
        if np.all(fp <= fp_tol):
            X = T
            break
    return X, fp, it


def _admm_engine(Qmat: NDArray, RHS: NDArray, A: NDArray, lin_coef: NDArray,
                 abs_weight: NDArray, abs_mask: NDArray, rho: float,
                 eps: NDArray, budget: int, state=None):
    """ADMM for rows of: min_u 0.5 u'Qu - u'rhs + h(Au).

    h(w) = sum over fixed rows lin_coef_j * w_j + sum over abs rows
    abs_weight_j * |w_j|. Returns (U, state, residual per row, iterations).
    """
    N = RHS.shape[0]
    m = A.shape[0]
    factor = cho_factor(Qmat + rho * (A.T @ A))
    if state is None:
        Wv = np.zeros((N, m))
        D = np.zeros((N, m))
    else:
        Wv, D = state
    scale = eps  # per-row absolute thresholds
    U = np.zeros_like(RHS)
    res = np.full(N, np.inf)
    it = 0
    while it < budget:
        span = min(25, budget - it)
        for _ in range(span):
            U = cho_solve(factor, (RHS + rho * ((Wv - D) @ A)).T).T
            V = U @ A.T
            arg = V + D
            soft = np.sign(arg) * np.maximum(np.abs(arg) - abs_weight[None, :] / rho, 0.0)
            Wn = np.where(abs_mask[None, :], soft, arg - lin_coef[None, :] / rho)
            dual = rho * np.abs((Wn - Wv) @ A).max(axis=1)
            Wv = Wn
            D = D + V - Wv
            prim = np.abs(V - Wv).max(axis=1)
            it += 1
        res = np.maximum(prim, dual)
        if np.all(res <= scale):
            break
    return U, (Wv, D), res, it


def _lam_max(M: NDArray) -> float:
    return float(np.linalg.eigvalsh(M)[-1])


def _kkt_of(spec: PenaltySpec, beta0_or_x: NDArray, u: Optional[NDArray],
            grad_target: NDArray, directional: bool) -> float:
    """Normalized membership slack of grad_target in the penalty subdifferential."""
    if directional:
        desc = directional_subdifferential(spec, beta0_or_x, u)
    else:
        desc = subdifferential_at(spec, beta0_or_x)
    raw = float(membership_residual(desc, grad_target)[0])
    return max(raw, 0.0) / (1.0 + float(np.abs(grad_target).max(initial=0.0)))


def _dir_prox_factory(spec: PenaltySpec, beta0: NDArray, step: float):
    """Batched prox of step * f'(beta0; .) for the pattern part of the penalty."""
    alpha = spec.global_scale
    part = cluster_partition(beta0)
    if spec.family == "slope":
        lam = step * alpha * spec.lam_vec
    else:  # lasso as constant-weight SLOPE
        lam = np.full(beta0.size, step * alpha * spec.lam)
    return lambda Y: _prox_slope_directional_batch(Y, lam, part)


def solve_V_min_batch(C: SPDMatrix, W_batch, spec: PenaltySpec, beta0,
                      cfg: Optional[SolverConfig] = None):
    """Minimize V row-wise for stacked noise vectors W (N×p).

    Returns ``(U, residual, iterations, converged)`` where ``residual``
    is the proximal fixed-point (or ADMM) residual per row — see the
    module docstring for how this relates to the exact condition.
    """
    cfg = cfg or SolverConfig()
    W_batch = np.atleast_2d(np.asarray(W_batch, dtype=float))
    beta0 = np.asarray(beta0, dtype=float)
    p = C.dim
    if W_batch.shape[1] != p or beta0.size != p:
        raise ValueError("dimension mismatch between C, W, and beta0")
    alpha = spec.global_scale
    scale_rows = 1.0 + np.abs(W_batch).max(axis=1)

    if alpha == 0.0:
        U = C.solve(W_batch.T).T
        res = np.abs(W_batch - U @ C.entries).max(axis=1)
        return U, res, 0, np.ones(W_batch.shape[0], dtype=bool)
    if spec.family == "ridge":
        shift = alpha * (spec.lam + spec.smooth_part) * beta0
        U = C.solve((W_batch - shift).T).T
        res = np.abs(W_batch - shift - U @ C.entries).max(axis=1)
        return U, res, 0, np.ones(W_batch.shape[0], dtype=bool)

    W_eff = W_batch
    if spec.smooth_part:
        W_eff = W_batch - alpha * spec.smooth_part * beta0

    if spec.family in ("slope", "lasso"):
        step = 1.0 / C.lambda_max()
        prox_fn = _dir_prox_factory(spec, beta0, step)
        fp_tol = 1e-11 * scale_rows
        U, fp, it = _pg_engine(C.entries, step, W_eff, prox_fn, fp_tol, cfg.max_iter)
        return U, fp, it, fp <= fp_tol

    # generalized lasso: ADMM on w = A u with the directional penalty
    A = spec.A
    z = A @ beta0
    zero_rows = np.abs(z) <= 1e-12 * max(1.0, float(np.abs(z).max(initial=0.0)))
    lin_coef = np.where(zero_rows, 0.0, alpha * spec.lam * np.sign(z))
    abs_weight = np.where(zero_rows, alpha * spec.lam, 0.0)
    eps = 1e-10 * scale_rows
    U, _, res, it = _admm_engine(
        C.entries, W_eff, A, lin_coef, abs_weight, zero_rows,
        cfg.admm_rho, eps, cfg.max_iter,
    )
    return U, res, it, res <= eps


def solve_V_min(C: SPDMatrix, W, spec: PenaltySpec, beta0,
                cfg: Optional[SolverConfig] = None) -> SolveReport:
    """Minimizer of V(u) = 0.5 u'Cu - u'W + f'(beta0; u).

    Dispatch: closed forms for a zero global scale (u = C^{-1}W) and for
    Ridge (u = C^{-1}(W - alpha*lam*beta0)); proximal gradient for
    SLOPE/Lasso; ADMM for the generalized Lasso. The report's
    ``kkt_residual`` is the normalized membership slack of W - Cu in
    the directional subdifferential at the solution.
    """
    cfg = cfg or SolverConfig()
    W = np.asarray(W, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    Wb = W[None, :]

    if spec.global_scale == 0.0 or spec.family == "ridge":
        U, _, it, _ = solve_V_min_batch(C, Wb, spec, beta0, cfg)
        u = U[0]
        g = W - C.entries @ u
        kkt = _kkt_of(spec, beta0, u, g, directional=True)
        return SolveReport(u, it, kkt, kkt <= cfg.tol_kkt)

    total = 0
    u = None
    kkt = np.inf
    tighten = 1.0
    state = None
    while total < cfg.max_iter:
        budget = cfg.max_iter - total
        if spec.family in ("slope", "lasso"):
            step = 1.0 / C.lambda_max()
            prox_fn = _dir_prox_factory(spec, beta0, step)
            W_eff = Wb - spec.global_scale * spec.smooth_part * beta0 \
                if spec.smooth_part else Wb
            fp_tol = np.array([1e-11 * (1.0 + np.abs(W).max()) * tighten])
            U, _, it = _pg_engine(C.entries, step, W_eff, prox_fn, fp_tol, budget,
                                  X0=None if u is None else u[None, :])
        else:
            A = spec.A
            z = A @ beta0
            zero_rows = np.abs(z) <= 1e-12 * max(1.0, float(np.abs(z).max(initial=0.0)))
            lin_coef = np.where(zero_rows, 0.0, spec.global_scale * spec.lam * np.sign(z))
            abs_weight = np.where(zero_rows, spec.global_scale * spec.lam, 0.0)
            W_eff = Wb - spec.global_scale * spec.smooth_part * beta0 \
                if spec.smooth_part else Wb
            eps = np.array([1e-10 * (1.0 + np.abs(W).max()) * tighten])
            U, state, _, it = _admm_engine(
                C.entries, W_eff, A, lin_coef, abs_weight, zero_rows,
                cfg.admm_rho, eps, budget, state=state,
            )
        total += max(it, 1)
        u = U[0]
        g = W - C.entries @ u
        kkt = _kkt_of(spec, beta0, u, g, directional=True)
        if kkt <= cfg.tol_kkt:
            return SolveReport(u, total, kkt, True)
        tighten *= 1e-2
        if tighten < 1e-6 and total >= cfg.max_iter // 2:
            break
    return SolveReport(u, total, float(kkt), False)


def solve_penalized_ls(X, y, spec: PenaltySpec,
                       cfg: Optional[SolverConfig] = None, *,
                       step: Optional[float] = None) -> SolveReport:
    """Minimizer of 0.5||y - X b||^2 + penalty(b), in Gram form.

    SLOPE/Lasso run FISTA with the plain penalty prox; the generalized
    Lasso runs ADMM on w = A b; Ridge is a closed-form solve. A smooth
    ridge component is folded into the quadratic term. Non-convergence
    is reported through the ``converged`` flag, never raised.

    ``step`` overrides the proximal-gradient step size (default
    ``1/lambda_max(X'X)`` computed by a dense eigensolve); pass a value
    from e.g. power iteration when a dense solve is unwanted.
    """
    cfg = cfg or SolverConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("X rows must match y")
    if not np.any(X):
        raise ValueError("X must be nonzero")
    p = X.shape[1]
    G = X.T @ X
    b = X.T @ y
    alpha = spec.global_scale

    if alpha == 0.0:
        beta = np.linalg.lstsq(X, y, rcond=None)[0]
        g = b - G @ beta
        kkt = float(np.abs(g).max()) / (1.0 + float(np.abs(b).max()))
        return SolveReport(beta, 0, kkt, kkt <= cfg.tol_kkt)
    if spec.family == "ridge":
        lam_tot = alpha * (spec.lam + spec.smooth_part)
        beta = np.linalg.solve(G + lam_tot * np.eye(p), b)
        g = b - G @ beta
        kkt = _kkt_of(spec, beta, None, g, directional=False)
        return SolveReport(beta, 0, kkt, kkt <= cfg.tol_kkt)

    G_eff = G + alpha * spec.smooth_part * np.eye(p) if spec.smooth_part else G
    scale_kkt = 1.0 + float(np.abs(b).max())

    if spec.family in ("slope", "lasso"):
        if step is None:
            step = 1.0 / max(_lam_max(G_eff), np.finfo(float).tiny)
        if spec.family == "slope":
            lam = step * alpha * spec.lam_vec
        else:
            lam = np.full(p, step * alpha * spec.lam)
        prox_fn = lambda Y: _prox_slope_batch(Y, lam)  # noqa: E731
        total = 0
        beta = None
        kkt = np.inf
        tighten = 1.0
        while total < cfg.max_iter:
            fp_tol = np.array([1e-11 * scale_kkt * tighten])
            U, _, it = _pg_engine(G_eff, step, b[None, :], prox_fn, fp_tol,
                                  cfg.max_iter - total,
                                  X0=None if beta is None else beta[None, :])
            total += max(it, 1)
            beta = U[0]
            g = b - G @ beta
            kkt = _kkt_of(spec, beta, None, g, directional=False)
            if kkt <= cfg.tol_kkt:
                return SolveReport(beta, total, kkt, True)
            tighten *= 1e-2
            if tighten < 1e-6:
                break
        return SolveReport(beta, total, float(kkt), False)

    # generalized lasso
    A = spec.A
    m = A.shape[0]
    lin_coef = np.zeros(m)
    abs_weight = np.full(m, alpha * spec.lam)
    abs_mask = np.ones(m, dtype=bool)
    total = 0
    beta = None
    kkt = np.inf
    tighten = 1.0
    state = None
    while total < cfg.max_iter:
        eps = np.array([1e-10 * scale_kkt * tighten])
        U, state, _, it = _admm_engine(G_eff, b[None, :], A, lin_coef, abs_weight,
                                       abs_mask, cfg.admm_rho, eps,
                                       cfg.max_iter - total, state=state)
        total += max(it, 1)
        beta = U[0]
        g = b - G @ beta
        kkt = _kkt_of(spec, beta, None, g, directional=False)
        if kkt <= cfg.tol_kkt:
            return SolveReport(beta, total, kkt, True)
        tighten *= 1e-2
        if tighten < 1e-6:
            break
    return SolveReport(beta, total, float(kkt), False)
