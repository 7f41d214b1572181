"""Penalty families and their pattern structure.

Four families are supported: Lasso, Generalized Lasso (a weighted analysis
penalty ``lam * ||A x||_1``), SLOPE (sorted-L1), and Ridge. Any family may
carry an extra smooth ridge term and a global scale factor ``alpha``; the
full penalty is ``alpha * (f_family(x) + smooth_part/2 * ||x||^2)``.

Each non-smooth family induces a notion of *pattern* (sign vector, sign
vector of differences, rank-sign vector) together with a pattern subspace.
This module computes those objects, the limiting pattern along a
direction, and directional derivatives, all in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.stats import norm as _norm

from .numerics import Basis

FAMILIES = ("lasso", "gen_lasso", "slope", "ridge")


@dataclass(frozen=True, eq=False)
class PenaltySpec:
    """Immutable description of a scaled penalty.

    Use the module-level constructors (:func:`lasso`, :func:`gen_lasso`,
    :func:`slope`, :func:`ridge`, :func:`fused_lasso`) rather than
    building instances directly.

    Attributes
    ----------
    family : str
        One of ``"lasso"``, ``"gen_lasso"``, ``"slope"``, ``"ridge"``.
    lam : float
        Scalar tuning parameter (unused for SLOPE).
    lam_vec : ndarray or None
        SLOPE weight vector, nonincreasing and nonnegative.
    A : ndarray or None
        Analysis matrix of the generalized Lasso, no zero rows.
    smooth_part : float
        Coefficient of an optional ridge term added to the family value.
    global_scale : float
        Overall factor ``alpha`` multiplying the whole penalty.
    """

    family: str
    lam: float = 0.0
    lam_vec: Optional[NDArray] = None
    A: Optional[NDArray] = None
    smooth_part: float = 0.0
    global_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown penalty family {self.family!r}")
        if self.smooth_part < 0:
            raise ValueError("smooth ridge coefficient must be nonnegative")
        if self.global_scale < 0:
            raise ValueError("global scale must be nonnegative")
        if self.family == "lasso":
            if not self.lam > 0:
                raise ValueError("lasso requires lam > 0")
        elif self.family == "ridge":
            if self.lam < 0:
                raise ValueError("ridge requires lam >= 0")
        elif self.family == "gen_lasso":
            if not self.lam > 0:
                raise ValueError("generalized lasso requires lam > 0")
            A = self.A
            if A is None or A.ndim != 2 or A.shape[0] == 0:
                raise ValueError("generalized lasso requires a nonempty 2-d matrix A")
            if np.any(np.abs(A).max(axis=1) == 0.0):
                raise ValueError("A must have no zero rows")
        elif self.family == "slope":
            lam = self.lam_vec
            if lam is None or lam.ndim != 1 or lam.size == 0:
                raise ValueError("slope requires a 1-d weight vector")
            if np.any(lam < 0):
                raise ValueError("slope weights must be nonnegative")
            if np.any(np.diff(lam) > 0):
                raise ValueError("slope weights must be nonincreasing")

    @property
    def dim(self) -> Optional[int]:
        """Ambient dimension when the family pins it down, else None."""
        if self.family == "slope":
            return int(self.lam_vec.size)
        if self.family == "gen_lasso":
            return int(self.A.shape[1])
        return None

    def with_scale(self, alpha: float) -> "PenaltySpec":
        """Same penalty with a different global scale."""
        return replace(self, global_scale=float(alpha))

    def with_smooth(self, coef: float) -> "PenaltySpec":
        """Same penalty with a different smooth ridge coefficient."""
        return replace(self, smooth_part=float(coef))

    def __repr__(self) -> str:  # pragma: no cover
        bits = [f"family={self.family!r}"]
        if self.family == "slope":
            bits.append(f"lam_vec={np.round(self.lam_vec, 6).tolist()}")
        else:
            bits.append(f"lam={self.lam}")
        if self.family == "gen_lasso":
            bits.append(f"A shape {self.A.shape}")
        if self.smooth_part:
            bits.append(f"smooth_part={self.smooth_part}")
        if self.global_scale != 1.0:
            bits.append(f"alpha={self.global_scale}")
        return "PenaltySpec(" + ", ".join(bits) + ")"


def lasso(lam: float = 1.0, *, smooth_part: float = 0.0, alpha: float = 1.0) -> PenaltySpec:
    """L1 penalty ``alpha * lam * ||x||_1``."""
    return PenaltySpec("lasso", lam=float(lam), smooth_part=smooth_part, global_scale=alpha)


def gen_lasso(A, lam: float = 1.0, *, smooth_part: float = 0.0, alpha: float = 1.0) -> PenaltySpec:
    """Analysis penalty ``alpha * lam * ||A x||_1``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return PenaltySpec("gen_lasso", lam=float(lam), A=A, smooth_part=smooth_part, global_scale=alpha)


def slope(lam_vec, *, smooth_part: float = 0.0, alpha: float = 1.0) -> PenaltySpec:
    """Sorted-L1 penalty ``alpha * sum_i lam_i |x|_(i)`` (|x| sorted decreasingly)."""
    lam_vec = np.asarray(lam_vec, dtype=float).copy()
    lam_vec.flags.writeable = False
    return PenaltySpec("slope", lam_vec=lam_vec, smooth_part=smooth_part, global_scale=alpha)


def ridge(lam: float = 1.0, *, alpha: float = 1.0) -> PenaltySpec:
    """Smooth penalty ``alpha * lam/2 * ||x||^2``."""
    return PenaltySpec("ridge", lam=float(lam), global_scale=alpha)


def fused_lasso(
    weights: Sequence[float],
    sparsity: Optional[float] = None,
    lam: float = 1.0,
    *,
    alpha: float = 1.0,
) -> PenaltySpec:
    """Weighted total-variation penalty on a chain, as a generalized Lasso.

    Builds the analysis matrix with rows ``a_i (e_i - e_{i+1})`` for the
    clustering weights ``a_1..a_{p-1}``, plus rows ``a * e_i`` when a
    positive sparsity weight ``a`` is given. The penalty is then
    ``alpha * lam * (sum_i a_i |x_i - x_{i+1}| + a * ||x||_1)``.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("need at least one clustering weight")
    if np.any(w <= 0):
        raise ValueError("clustering weights must be positive")
    p = w.size + 1
    D = np.zeros((w.size, p))
    idx = np.arange(w.size)
    D[idx, idx] = w
    D[idx, idx + 1] = -w
    if sparsity is not None:
        if sparsity <= 0:
            raise ValueError("sparsity weight must be positive when given")
        D = np.vstack([D, sparsity * np.eye(p)])
    return gen_lasso(D, lam=lam, alpha=alpha)


def slope_linear(p: int, total: float) -> NDArray:
    """Linearly decaying SLOPE weights lam_i ∝ (p+1-i), summing to ``total``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if total <= 0:
        raise ValueError("total must be positive")
    ranks = np.arange(p, 0, -1, dtype=float)
    return total * ranks / ranks.sum()


def slope_bh(p: int, q: float, scale: float = 1.0) -> NDArray:
    """Benjamini–Hochberg-style SLOPE weights.

    lam_i = scale * Phi^{-1}(1 - q*i/(2p)), i = 1..p. Requires
    0 < q < 1 so that every weight is positive.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if not 0 < q < 1:
        raise ValueError("q must be in (0, 1)")
    i = np.arange(1, p + 1, dtype=float)
    lam = scale * _norm.ppf(1.0 - q * i / (2.0 * p))
    if lam[-1] <= 0:
        raise ValueError("weights are not all positive; decrease q")
    return lam


# ---------------------------------------------------------------------------
# Patterns and clusters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Pattern:
    """Canonical pattern code of a point under a penalty family.

    ``code`` is a tuple of ints: signs for Lasso, signs of Ax for the
    generalized Lasso, rank-sign values for SLOPE (zeros are 0, the
    smallest nonzero magnitude has rank 1), and empty for Ridge.
    """

    family: str
    code: tuple

    @property
    def is_null(self) -> bool:
        """True when the code is the all-zero pattern."""
        return all(c == 0 for c in self.code)

    def __repr__(self) -> str:  # pragma: no cover
        return f"Pattern({self.family}, {self.code})"


@dataclass(frozen=True)
class ClusterPartition:
    """Partition of coordinates by |x| value.

    ``clusters`` lists the index sets of the nonzero-magnitude clusters in
    decreasing magnitude order; ``signs`` and ``magnitudes`` align with
    it. ``zero`` holds the indices of the zero cluster (possibly empty).
    """

    zero: tuple
    clusters: tuple
    signs: tuple
    magnitudes: tuple

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def cluster_sizes(self) -> tuple:
        return tuple(len(c) for c in self.clusters)


def pattern_tolerance(x: NDArray) -> float:
    """Default snapping tolerance used by the pattern functions."""
    top = float(np.max(np.abs(x))) if x.size else 0.0
    return 1e-9 * max(1.0, top)


def _group_values(values: NDArray, tol: float):
    """Group sorted-close values: labels, 0-based, in ascending value order."""
    order = np.argsort(values, kind="stable")
    labels = np.empty(values.size, dtype=int)
    g = 0
    prev = None
    for pos in order:
        v = values[pos]
        if prev is not None and v - prev > tol:
            g += 1
        labels[pos] = g
        prev = v
    return labels, g + 1 if values.size else 0


def cluster_partition(x, tol: Optional[float] = None) -> ClusterPartition:
    """Cluster structure of ``x``: zero set plus equal-|x| groups.

    Magnitudes within ``tol`` of each other are merged; ``tol`` defaults
    to :func:`pattern_tolerance`.
    """
    x = np.asarray(x, dtype=float)
    if tol is None:
        tol = pattern_tolerance(x)
    absx = np.abs(x)
    nz = absx > tol
    zero = tuple(np.flatnonzero(~nz).tolist())
    if not np.any(nz):
        return ClusterPartition(zero=zero, clusters=(), signs=(), magnitudes=())
    nz_idx = np.flatnonzero(nz)
    labels, n_groups = _group_values(absx[nz_idx], tol)
    clusters = []
    signs = []
    mags = []
    for g in range(n_groups - 1, -1, -1):  # descending magnitude
        members = nz_idx[labels == g]
        clusters.append(tuple(members.tolist()))
        signs.append(tuple(int(np.sign(x[i])) for i in members))
        mags.append(float(np.mean(absx[members])))
    return ClusterPartition(
        zero=zero, clusters=tuple(clusters), signs=tuple(signs), magnitudes=tuple(mags)
    )


def slope_lambda_chunks(lam_vec: NDArray, part: ClusterPartition):
    """Split a SLOPE weight vector across the clusters of a partition.

    The largest-magnitude cluster receives the leading weights, and the
    zero cluster receives whatever remains at the tail. Returns
    ``(chunks, zero_chunk)`` with ``chunks[j]`` aligned to
    ``part.clusters[j]``.
    """
    lam_vec = np.asarray(lam_vec, dtype=float)
    sizes = part.cluster_sizes()
    if sum(sizes) + len(part.zero) != lam_vec.size:
        raise ValueError("partition does not match the weight vector length")
    chunks = []
    start = 0
    for s in sizes:
        chunks.append(lam_vec[start : start + s])
        start += s
    return chunks, lam_vec[start:]


def _require_slope_pattern(spec: PenaltySpec) -> None:
    lam = spec.lam_vec
    if np.any(np.diff(lam) >= 0) or lam[-1] <= 0:
        raise ValueError(
            "SLOPE pattern operations require strictly decreasing positive weights"
        )


def _check_dim(spec: PenaltySpec, x: NDArray) -> None:
    d = spec.dim
    if d is not None and x.shape[-1] != d:
        raise ValueError(f"vector has dimension {x.shape[-1]}, penalty expects {d}")


def pattern_of(spec: PenaltySpec, x, tol: Optional[float] = None) -> Pattern:
    """Canonical pattern of ``x`` under the penalty family.

    Components (or analysis-row values) with magnitude at most ``tol``
    are snapped to zero and, for SLOPE, magnitudes within ``tol`` are
    merged into one cluster; ``tol`` defaults to
    :func:`pattern_tolerance` of the relevant vector.

    SLOPE patterns are only meaningful for strictly decreasing positive
    weight vectors; other SLOPE specs raise ``ValueError``.
    """
    x = np.asarray(x, dtype=float)
    _check_dim(spec, x)
    if spec.family == "ridge":
        return Pattern("ridge", ())
    if spec.family == "lasso":
        t = pattern_tolerance(x) if tol is None else tol
        code = np.where(np.abs(x) <= t, 0, np.sign(x)).astype(int)
        return Pattern("lasso", tuple(code.tolist()))
    if spec.family == "gen_lasso":
        z = spec.A @ x
        t = pattern_tolerance(z) if tol is None else tol
        code = np.where(np.abs(z) <= t, 0, np.sign(z)).astype(int)
        return Pattern("gen_lasso", tuple(code.tolist()))
    # SLOPE
    _require_slope_pattern(spec)
    part = cluster_partition(x, tol)
    code = np.zeros(x.size, dtype=int)
    m = part.n_clusters
    for j, (members, sgns) in enumerate(zip(part.clusters, part.signs)):
        rank = m - j  # clusters are stored largest first
        for i, s in zip(members, sgns):
            code[i] = rank * s
    return Pattern("slope", tuple(code.tolist()))


def limiting_pattern(spec: PenaltySpec, x, u, eps0: Optional[float] = None) -> Pattern:
    """Pattern of ``x + eps*u`` for all sufficiently small eps > 0.

    Computed symbolically: zero components take the sign of ``u``, and
    SLOPE clusters are split lexicographically by the perturbation rates
    rather than by evaluating at a numeric eps. ``eps0`` is accepted for
    interface compatibility with brute-force checkers and is not used.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != u.shape:
        raise ValueError("x and u must have the same shape")
    _check_dim(spec, x)
    if eps0 is not None and eps0 <= 0:
        raise ValueError("eps0 must be positive when given")
    if spec.family == "ridge":
        return Pattern("ridge", ())

    if spec.family == "lasso":
        tx, tu = pattern_tolerance(x), pattern_tolerance(u)
        sx = np.where(np.abs(x) <= tx, 0, np.sign(x))
        su = np.where(np.abs(u) <= tu, 0, np.sign(u))
        code = np.where(sx != 0, sx, su).astype(int)
        return Pattern("lasso", tuple(code.tolist()))

    if spec.family == "gen_lasso":
        z = spec.A @ x
        w = spec.A @ u
        tz, tw = pattern_tolerance(z), pattern_tolerance(w)
        sz = np.where(np.abs(z) <= tz, 0, np.sign(z))
        sw = np.where(np.abs(w) <= tw, 0, np.sign(w))
        code = np.where(sz != 0, sz, sw).astype(int)
        return Pattern("gen_lasso", tuple(code.tolist()))

    # SLOPE: |x_i + eps u_i| = |x_i| + eps t_i + o(eps), with t_i the
    # signed rate below. Coordinates tie in the limit iff both the
    # magnitude and the rate tie.
    _require_slope_pattern(spec)
    tx, tu = pattern_tolerance(x), pattern_tolerance(u)
    absx = np.abs(x)
    nz = absx > tx
    t = np.where(nz, np.sign(x) * u, np.abs(u))
    mag_labels, _ = _group_values(np.where(nz, absx, 0.0), tx)
    rate_labels, _ = _group_values(t, tu)
    sign_new = np.where(nz, np.sign(x), np.where(np.abs(u) <= tu, 0.0, np.sign(u)))

    keys = {}
    for i in range(x.size):
        keys.setdefault((mag_labels[i], rate_labels[i]), []).append(i)
    code = np.zeros(x.size, dtype=int)
    rank = 0
    for key in sorted(keys):  # ascending magnitude, then ascending rate
        members = keys[key]
        if all(sign_new[i] == 0 for i in members):
            continue  # the zero cluster of the perturbed point
        rank += 1
        for i in members:
            code[i] = rank * int(sign_new[i])
    return Pattern("slope", tuple(code.tolist()))


def pattern_basis(spec: PenaltySpec, x, tol: Optional[float] = None) -> Basis:
    """Basis of the pattern subspace of ``x``.

    Lasso: coordinate vectors on the support. Generalized Lasso: a basis
    of the null space of the analysis rows active at ``x`` (computed by
    SVD with relative tolerance 1e-10). SLOPE: signed indicator vectors
    of the nonzero clusters. Ridge: the identity (no pattern structure).
    """
    x = np.asarray(x, dtype=float)
    _check_dim(spec, x)
    p = x.size
    if spec.family == "ridge":
        return Basis(np.eye(p))
    if spec.family == "lasso":
        t = pattern_tolerance(x) if tol is None else tol
        support = np.flatnonzero(np.abs(x) > t)
        return Basis(np.eye(p)[:, support])
    if spec.family == "gen_lasso":
        z = spec.A @ x
        t = pattern_tolerance(z) if tol is None else tol
        active = np.flatnonzero(np.abs(z) <= t)
        if active.size == 0:
            return Basis(np.eye(p))
        M = spec.A[active]
        U_, s, Vh = np.linalg.svd(M)
        rank = int(np.sum(s > 1e-10 * s[0])) if s.size else 0
        return Basis(Vh[rank:].T)
    # SLOPE
    _require_slope_pattern(spec)
    part = cluster_partition(x, tol)
    cols = np.zeros((p, part.n_clusters))
    for j, (members, sgns) in enumerate(zip(part.clusters, part.signs)):
        for i, s in zip(members, sgns):
            cols[i, j] = s
    return Basis(cols)


def pattern_representative(spec: PenaltySpec, pat: Pattern) -> NDArray:
    """A point whose pattern under ``spec`` is ``pat``.

    Lasso and SLOPE codes are their own representatives (integer rank or
    sign values). For the generalized Lasso a linear feasibility problem
    is solved for the sign vector of ``Ax``; not every sign vector is
    realizable, in which case ``ValueError`` is raised.
    """
    if pat.family != spec.family:
        raise ValueError(
            f"pattern family {pat.family!r} does not match spec family {spec.family!r}"
        )
    code = np.asarray(pat.code, dtype=float)
    if spec.family == "ridge":
        raise ValueError("ridge has no pattern structure to represent")
    if spec.family == "lasso":
        return code.copy()
    if spec.family == "slope":
        ranks = sorted({abs(int(c)) for c in pat.code if c != 0})
        if ranks != list(range(1, len(ranks) + 1)):
            raise ValueError(f"rank-sign code {pat.code} has rank gaps")
        return code.copy()
    # generalized Lasso
    from scipy.optimize import linprog

    A = spec.A
    m, p = A.shape
    if code.size != m:
        raise ValueError(
            f"pattern length {code.size} does not match the {m} analysis rows"
        )
    zero_rows = code == 0
    sign_rows = ~zero_rows
    A_eq = b_eq = None
    if np.any(zero_rows):
        A_eq = A[zero_rows]
        b_eq = np.zeros(int(zero_rows.sum()))
    A_ub = b_ub = None
    if np.any(sign_rows):
        A_ub = -(code[sign_rows, None] * A[sign_rows])
        b_ub = -np.ones(int(sign_rows.sum()))
    res = linprog(
        c=np.zeros(p), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
        bounds=[(None, None)] * p, method="highs",
    )
    if not res.success:
        raise ValueError(f"no point realizes the pattern {pat.code}")
    return np.asarray(res.x, dtype=float)


def penalty_value(spec: PenaltySpec, x) -> float:
    """Evaluate the full scaled penalty at ``x``."""
    x = np.asarray(x, dtype=float)
    _check_dim(spec, x)
    if spec.family == "lasso":
        core = spec.lam * float(np.sum(np.abs(x)))
    elif spec.family == "gen_lasso":
        core = spec.lam * float(np.sum(np.abs(spec.A @ x)))
    elif spec.family == "slope":
        mags = np.sort(np.abs(x))[::-1]
        core = float(mags @ spec.lam_vec)
    else:  # ridge
        core = 0.5 * spec.lam * float(x @ x)
    if spec.smooth_part:
        core += 0.5 * spec.smooth_part * float(x @ x)
    return spec.global_scale * core


def directional_derivative(spec: PenaltySpec, x, u) -> float:
    """One-sided directional derivative of the full penalty at ``x`` along ``u``.

    Zero tests on ``x`` (and on the analysis values ``A x``) are exact:
    this is the mathematical derivative at the given point, with no
    snapping. Positively homogeneous in ``u``.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != u.shape:
        raise ValueError("x and u must have the same shape")
    _check_dim(spec, x)
    if spec.family == "lasso":
        core = spec.lam * float(np.sum(np.where(x != 0, np.sign(x) * u, np.abs(u))))
    elif spec.family == "gen_lasso":
        z = spec.A @ x
        w = spec.A @ u
        core = spec.lam * float(np.sum(np.where(z != 0, np.sign(z) * w, np.abs(w))))
    elif spec.family == "slope":
        core = slope_directional_value(spec.lam_vec, x, u)
    else:  # ridge
        core = spec.lam * float(x @ u)
    if spec.smooth_part:
        core += spec.smooth_part * float(x @ u)
    return spec.global_scale * core


def slope_directional_value(lam_vec: NDArray, x: NDArray, u: NDArray) -> float:
    """Directional derivative of the (unscaled) sorted-L1 norm.

    Weights follow the order that sorts ``|x + eps*u|`` decreasingly for
    small eps: primarily by |x|, ties broken by the signed rates.
    """
    t = np.where(x != 0, np.sign(x) * u, np.abs(u))
    order = np.lexsort((-t, -np.abs(x)))
    return float(lam_vec @ t[order])


# ---------------------------------------------------------------------------
# Concavified Fused Lasso tuning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConcaveFusedTuning:
    """Clustering weights and sparsity weight for the concavified fused penalty.

    ``weights`` holds a_1..a_{p-1}; ``sparsity`` is the common weight of
    the |x_i| terms (None when unset). Generator parameters are recorded
    when the tuning was produced by :func:`concavified_sequence`.
    """

    weights: tuple
    sparsity: Optional[float] = None
    nu: Optional[float] = None
    kappa: Optional[float] = None

    def __post_init__(self) -> None:
        if any(w <= 0 for w in self.weights):
            raise ValueError("clustering weights must be positive")
        if self.sparsity is not None and self.sparsity < 0:
            raise ValueError("sparsity weight must be nonnegative")


def concavified_sequence(m: int, nu: float, kappa: float) -> ConcaveFusedTuning:
    """Parametric clustering weights a_i = nu * (1 + kappa*i*(m+1-i)).

    ``m`` is the number of difference terms (p-1 for a chain of length
    p). With kappa = 0 this is the constant sequence of the standard
    fused lasso; any kappa > 0 makes the zero-padded sequence strictly
    concave. The sparsity weight is left unset.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if nu <= 0:
        raise ValueError("nu must be positive")
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    i = np.arange(1, m + 1, dtype=float)
    a = nu * (1.0 + kappa * i * (m + 1 - i))
    return ConcaveFusedTuning(weights=tuple(a.tolist()), nu=nu, kappa=kappa)


def check_concavified(tuning: ConcaveFusedTuning) -> dict:
    """Check the strict-concavity and sparsity-dominance conditions.

    The zero-padded sequence (0, a_1, ..., a_{p-1}, 0) must have all
    second differences strictly negative, and the sparsity weight must
    exceed every adjacent sum a_i + a_{i+1} (with a_0 = a_p = 0). When
    the sparsity weight is unset only the concavity half is checked.
    Returns ``{"valid": bool, "violations": [str, ...]}``.
    """
    a = np.asarray(tuning.weights, dtype=float)
    padded = np.concatenate([[0.0], a, [0.0]])
    violations = []
    second = padded[:-2] - 2.0 * padded[1:-1] + padded[2:]
    for idx in np.flatnonzero(second >= 0):
        violations.append(
            f"second difference at position {idx + 1} is {second[idx]:.6g} (needs < 0)"
        )
    if tuning.sparsity is not None:
        bound = float(np.max(padded[:-1] + padded[1:]))
        if not tuning.sparsity > bound:
            violations.append(
                f"sparsity weight {tuning.sparsity:.6g} is not above "
                f"max adjacent sum {bound:.6g}"
            )
    return {"valid": not violations, "violations": violations}
