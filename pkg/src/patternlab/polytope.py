"""Structured subdifferential polytopes.

Subdifferentials of the supported penalties are never materialized as
vertex lists; each family has a compact descriptor with exact membership
tests:

* ``BoxProduct`` — per-coordinate intervals (Lasso, Ridge points).
* ``AffineImage`` — image of a box under a linear map (generalized Lasso).
* ``ClusterSum`` — direct sum of per-cluster (signed) permutohedra (SLOPE),
  tested via majorization inequalities.
* ``Shifted`` — any of the above translated by the gradient of a smooth
  ridge term.

Vertex enumeration is provided only as an oracle for small instances, and
Hausdorff distance operates on such enumerated vertex lists.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numpy.typing import NDArray

from .regularizers import PenaltySpec, pattern_tolerance, _group_values

__all__ = [
    "BoxProduct",
    "AffineImage",
    "ClusterBlock",
    "ClusterSum",
    "Shifted",
    "VPolytope",
    "subdifferential_at",
    "directional_subdifferential",
    "membership_residual",
    "contains",
    "contains_ri",
    "representative_point",
    "dimension",
    "enumerate_vertices",
    "distance_to_hull",
    "hausdorff_distance",
]


@dataclass(frozen=True, eq=False)
class BoxProduct:
    """Product of per-coordinate intervals [lo_i, hi_i] (lo_i = hi_i pins a coordinate)."""

    lo: NDArray
    hi: NDArray

    def __post_init__(self) -> None:
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be 1-d arrays of equal length")
        if np.any(lo > hi):
            raise ValueError("box requires lo <= hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim_ambient(self) -> int:
        return self.lo.size

    @property
    def interval_mask(self) -> NDArray:
        return self.hi > self.lo


@dataclass(frozen=True, eq=False)
class AffineImage:
    """Set {At @ w : w in box} for a p×m matrix At."""

    At: NDArray
    box: BoxProduct

    def __post_init__(self) -> None:
        At = np.asarray(self.At, dtype=float)
        if At.ndim != 2 or At.shape[1] != self.box.dim_ambient:
            raise ValueError("At columns must match the box dimension")
        object.__setattr__(self, "At", At)

    @property
    def dim_ambient(self) -> int:
        return self.At.shape[0]


@dataclass(frozen=True, eq=False)
class ClusterBlock:
    """One direct summand of a SLOPE subdifferential.

    ``signs`` of +/-1 mark a fixed-sign block: the permutohedron of
    ``weights``, reflected by the signs (membership = majorization with
    total equality). ``signs=None`` marks the zero-cluster block: the
    convex hull of all signed permutations of ``weights`` (membership =
    weak majorization of the absolute values).
    """

    indices: tuple
    weights: NDArray
    signs: Optional[tuple]

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size != len(self.indices):
            raise ValueError("weights must align with indices")
        if np.any(np.diff(w) > 1e-12 * max(1.0, abs(float(w[0])) if w.size else 1.0)):
            raise ValueError("block weights must be nonincreasing")
        if np.any(w < 0):
            raise ValueError("block weights must be nonnegative")
        if self.signs is not None and len(self.signs) != len(self.indices):
            raise ValueError("signs must align with indices")
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return len(self.indices)

    def is_point(self) -> bool:
        """True when the block is a single vector (fixed-sign, equal weights)."""
        if self.signs is None:
            return False
        w = self.weights
        return w.size <= 1 or (w[0] - w[-1]) <= 1e-12 * max(1.0, w[0])


@dataclass(frozen=True, eq=False)
class ClusterSum:
    """Direct sum of cluster blocks covering coordinates 0..p-1."""

    p: int
    blocks: tuple

    def __post_init__(self) -> None:
        seen = [i for b in self.blocks for i in b.indices]
        if sorted(seen) != list(range(self.p)):
            raise ValueError("blocks must partition the coordinate set")


@dataclass(frozen=True, eq=False)
class Shifted:
    """A base descriptor translated by an offset (smooth-part gradient)."""

    base: Union[BoxProduct, AffineImage, ClusterSum]
    offset: NDArray

    def __post_init__(self) -> None:
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float))


SubdifferentialDesc = Union[BoxProduct, AffineImage, ClusterSum, Shifted]


@dataclass(frozen=True, eq=False)
class VPolytope:
    """Explicit vertex list (rows), for oracles on small instances."""

    vertices: NDArray

    def __post_init__(self) -> None:
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if V.size == 0:
            raise ValueError("vertex list must be nonempty")
        object.__setattr__(self, "vertices", V)

    def __len__(self) -> int:
        return self.vertices.shape[0]


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _sign_box(values: NDArray, rates: NDArray, radius: float, tol_v: float, tol_r: float) -> BoxProduct:
    """Box for the subdifferential of a weighted L1 term along a direction.

    Coordinates with |value| > tol are pinned at radius*sign(value);
    otherwise |rate| > tol pins at radius*sign(rate); otherwise the full
    interval [-radius, radius].
    """
    lo = np.empty(values.size)
    hi = np.empty(values.size)
    for i in range(values.size):
        if abs(values[i]) > tol_v:
            lo[i] = hi[i] = radius * np.sign(values[i])
        elif abs(rates[i]) > tol_r:
            lo[i] = hi[i] = radius * np.sign(rates[i])
        else:
            lo[i], hi[i] = -radius, radius
    return BoxProduct(lo, hi)


def directional_subdifferential(
    spec: PenaltySpec, x, u=None, tol: Optional[float] = None
) -> SubdifferentialDesc:
    """Subdifferential of v ↦ f'(x; v) at v = u (full scaled penalty f).

    With ``u = None`` (or zero) this is the subdifferential of f at
    ``x`` itself. Magnitudes of ``x`` (and of the direction) within the
    snapping tolerance are treated as tied/zero, matching the pattern
    functions; ``tol`` overrides the tolerance for ``x``.
    """
    x = np.asarray(x, dtype=float)
    p = x.size
    if u is None:
        u = np.zeros(p)
    else:
        u = np.asarray(u, dtype=float)
        if u.shape != x.shape:
            raise ValueError("x and u must have the same shape")
    alpha = spec.global_scale
    tx = pattern_tolerance(x) if tol is None else tol
    tu = pattern_tolerance(u)

    if spec.family == "lasso":
        base: SubdifferentialDesc = _sign_box(x, u, alpha * spec.lam, tx, tu)
    elif spec.family == "ridge":
        g = alpha * (spec.lam + spec.smooth_part) * x
        return BoxProduct(g, g)
    elif spec.family == "gen_lasso":
        z = spec.A @ x
        w = spec.A @ u
        tz = pattern_tolerance(z) if tol is None else tol
        box = _sign_box(z, w, alpha * spec.lam, tz, pattern_tolerance(w))
        base = AffineImage(spec.A.T, box)
    else:  # slope
        base = _slope_cluster_sum(spec, x, u, tx, tu)

    if spec.smooth_part:
        return Shifted(base, alpha * spec.smooth_part * x)
    return base


def _slope_cluster_sum(spec: PenaltySpec, x, u, tx, tu) -> ClusterSum:
    # valid for any nonincreasing weights; strict decrease is only needed
    # for pattern identification, which regularizers enforces separately
    p = x.size
    lam = spec.global_scale * spec.lam_vec
    absx = np.abs(x)
    nz = absx > tx
    zero_mask = (~nz) & (np.abs(u) <= tu)
    live = np.flatnonzero(~zero_mask)

    groups: dict = {}
    if live.size:
        mag_labels, _ = _group_values(np.where(nz, absx, 0.0), tx)
        rate = np.where(nz, np.sign(x) * u, np.abs(u))
        rate_labels, _ = _group_values(rate, tu)
        for i in live:
            groups.setdefault((mag_labels[i], rate_labels[i]), []).append(int(i))

    blocks = []
    start = 0
    for key in sorted(groups, reverse=True):  # descending limiting magnitude
        members = groups[key]
        k = len(members)
        signs = tuple(
            int(np.sign(x[i])) if nz[i] else int(np.sign(u[i])) for i in members
        )
        blocks.append(ClusterBlock(tuple(members), lam[start : start + k], signs))
        start += k
    zero_idx = np.flatnonzero(zero_mask)
    if zero_idx.size:
        blocks.append(ClusterBlock(tuple(zero_idx.tolist()), lam[start:], None))
    return ClusterSum(p=p, blocks=tuple(blocks))


def subdifferential_at(spec: PenaltySpec, x, tol: Optional[float] = None) -> SubdifferentialDesc:
    """Subdifferential of the full scaled penalty at ``x``."""
    return directional_subdifferential(spec, x, None, tol)


# ---------------------------------------------------------------------------
# Membership
# ---------------------------------------------------------------------------


def _box_lsq(M: NDArray, V: NDArray, lo: NDArray, hi: NDArray,
             max_iter: int = 60000, gtol_rel: float = 1e-11):
    """min_w 0.5*||M w - v||^2 over lo <= w <= hi, batched over columns of V.

    Accelerated projected gradient with function-value restarts. Returns
    (W, residuals) where residuals[n] = ||M W[:, n] - V[:, n]||.
    """
    m = M.shape[1]
    N = V.shape[1]
    if m == 0:
        return np.zeros((0, N)), np.linalg.norm(V, axis=0), True
    sig = np.linalg.norm(M, 2)
    if sig == 0.0:
        W = np.clip(np.zeros((m, N)), lo[:, None], hi[:, None])
        return W, np.linalg.norm(V, axis=0), True
    L = sig * sig
    step = 1.0 / L
    scale = 1.0 + np.abs(V).max(axis=0)
    gtol = gtol_rel * L * scale  # threshold on the gradient-mapping norm

    W = np.clip(np.zeros((m, N)), lo[:, None], hi[:, None])
    Y = W.copy()
    t_acc = 1.0
    f_prev = np.full(N, np.inf)
    check_every = 25
    converged = False
    for it in range(1, max_iter + 1):
        G = M.T @ (M @ Y - V)
        W_new = np.clip(Y - step * G, lo[:, None], hi[:, None])
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_acc * t_acc))
        Y = W_new + ((t_acc - 1.0) / t_new) * (W_new - W)
        W, t_acc = W_new, t_new
        if it % check_every == 0 or it == max_iter:
            R = M @ W - V
            f_val = 0.5 * np.einsum("ij,ij->j", R, R)
            if np.any(f_val > f_prev):  # momentum overshoot: restart
                Y = W.copy()
                t_acc = 1.0
            f_prev = f_val
            Gw = M.T @ R
            mapped = (W - np.clip(W - step * Gw, lo[:, None], hi[:, None])) * L
            if np.all(np.linalg.norm(mapped, axis=0) <= gtol):
                converged = True
                break
    return W, np.linalg.norm(M @ W - V, axis=0), converged


def _affine_residual(desc: AffineImage, P: NDArray) -> NDArray:
    box = desc.box
    fixed = ~box.interval_mask
    V = P.T.copy()  # p × N
    if np.any(fixed):
        V -= desc.At[:, fixed] @ box.lo[fixed][:, None]
    M = desc.At[:, box.interval_mask]
    _, res, converged = _box_lsq(M, V, box.lo[box.interval_mask], box.hi[box.interval_mask])
    if not converged:
        raise RuntimeError(
            "box-constrained least squares did not converge; "
            f"largest residual {res.max():.3e}"
        )
    return res


def _majorization_excess(Z: NDArray, w: NDArray, full_equality: bool) -> NDArray:
    """Max prefix-sum excess of rows of Z over the weight vector w.

    Rows are sorted decreasingly before prefix sums. With
    ``full_equality`` the last prefix sum must match exactly (both
    directions count as violation); otherwise the last prefix is an
    inequality like the rest.
    """
    Zs = -np.sort(-Z, axis=1)
    lhs = np.cumsum(Zs, axis=1)
    rhs = np.cumsum(w)
    diff = lhs - rhs
    if full_equality:
        head = diff[:, :-1].max(axis=1) if w.size > 1 else np.full(Z.shape[0], -np.inf)
        return np.maximum(head, np.abs(diff[:, -1]))
    return diff.max(axis=1)


def membership_residual(desc: SubdifferentialDesc, points) -> NDArray:
    """Per-point constraint violation; <= 0 (or tiny) means membership.

    Box and cluster descriptors report the largest violated inequality
    (exact tests); affine images report the box-constrained
    least-squares residual, which is nonnegative even for interior
    points. Accepts a single vector or an (N, p) array.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(desc, Shifted):
        return membership_residual(desc.base, P - desc.offset[None, :])
    if isinstance(desc, BoxProduct):
        under = (desc.lo[None, :] - P).max(axis=1)
        over = (P - desc.hi[None, :]).max(axis=1)
        return np.maximum(under, over)
    if isinstance(desc, AffineImage):
        return _affine_residual(desc, P)
    if isinstance(desc, ClusterSum):
        out = np.full(P.shape[0], -np.inf)
        for b in desc.blocks:
            Z = P[:, list(b.indices)]
            if b.signs is None:
                exc = _majorization_excess(np.abs(Z), b.weights, full_equality=False)
            else:
                exc = _majorization_excess(Z * np.asarray(b.signs), b.weights, full_equality=True)
            out = np.maximum(out, exc)
        return out
    raise TypeError(f"unknown descriptor {type(desc).__name__}")


def default_tol(point) -> float:
    return 1e-8 * (1.0 + float(np.linalg.norm(point)))


def contains(desc: SubdifferentialDesc, point, tol: Optional[float] = None) -> bool:
    """Membership test with tolerance (default ``1e-8 * (1 + ||point||)``)."""
    point = np.asarray(point, dtype=float)
    if tol is None:
        tol = default_tol(point)
    r = membership_residual(desc, point)
    return bool(r[0] <= tol)


def contains_batch(desc: SubdifferentialDesc, points, tol: Optional[float] = None) -> NDArray:
    """Vectorized :func:`contains` over rows of ``points``."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    r = membership_residual(desc, P)
    if tol is None:
        tols = 1e-8 * (1.0 + np.linalg.norm(P, axis=1))
    else:
        tols = np.full(P.shape[0], float(tol))
    return r <= tols


# ---------------------------------------------------------------------------
# Relative interior
# ---------------------------------------------------------------------------


def _ri_box(lo, hi, v, aff_tol):
    margin = np.inf
    for i in range(v.size):
        if hi[i] > lo[i]:
            margin = min(margin, v[i] - lo[i], hi[i] - v[i])
        elif abs(v[i] - lo[i]) > aff_tol:
            raise ValueError(
                f"point is off the affine hull: coordinate {i} fixed at {lo[i]:.6g}, "
                f"got {v[i]:.6g}"
            )
    return margin


def _ri_cluster(desc: ClusterSum, v, aff_tol):
    margin = np.inf
    for b in desc.blocks:
        z = v[list(b.indices)]
        w = b.weights
        if b.signs is None:
            lhs = np.cumsum(-np.sort(-np.abs(z)))
            slack = np.cumsum(w) - lhs
            margin = min(margin, float(slack.min()))
            continue
        z = z * np.asarray(b.signs)
        if b.is_point():
            if np.max(np.abs(z - w)) > aff_tol:
                raise ValueError("point is off the affine hull of a degenerate cluster block")
            continue
        lhs = np.cumsum(-np.sort(-z))
        rhs = np.cumsum(w)
        if abs(lhs[-1] - rhs[-1]) > aff_tol:
            raise ValueError(
                "point is off the affine hull: cluster sum "
                f"{lhs[-1]:.6g} != {rhs[-1]:.6g}"
            )
        if w.size > 1:
            margin = min(margin, float((rhs[:-1] - lhs[:-1]).min()))
    return margin


def _ri_affine(desc: AffineImage, v, aff_tol):
    # ri of a linear image is the image of ri (Rockafellar Thm 6.6), so
    # v in ri(At @ box) iff some preimage sits strictly inside the box.
    # The largest uniform strict clearance is a single LP in (w, t):
    # max t s.t. At w = v, lo + t <= w <= hi - t on interval coordinates.
    box = desc.box
    J = box.interval_mask
    fixed = ~J
    target = v.copy()
    if np.any(fixed):
        target = target - desc.At[:, fixed] @ box.lo[fixed]
    M = desc.At[:, J]
    if M.shape[1] == 0:
        if np.linalg.norm(target) > aff_tol:
            raise ValueError("point is off the affine hull of a point polytope")
        return np.inf
    w_free, *_ = np.linalg.lstsq(M, target, rcond=None)
    if np.linalg.norm(M @ w_free - target) > aff_tol:
        raise ValueError("point is off the affine hull of the affine image")

    from scipy.optimize import linprog

    lo, hi = box.lo[J], box.hi[J]
    k = M.shape[1]
    t_max = float((0.5 * (hi - lo)).min())
    # variables (w_1..w_k, t); t free so the margin goes negative outside
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A_eq = np.hstack([M, np.zeros((M.shape[0], 1))])
    ones = np.ones((k, 1))
    A_ub = np.vstack([
        np.hstack([-np.eye(k), ones]),   # lo + t <= w
        np.hstack([np.eye(k), ones]),    # w <= hi - t
    ])
    b_ub = np.concatenate([-lo, hi])
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=target,
                  bounds=[(None, None)] * (k + 1), method="highs")
    if not res.success:
        # numerically infeasible despite the affine-hull check: fall back
        # to the unshrunk distance as a (negative) margin
        _, resid, _ = _box_lsq(M, target[:, None], lo, hi)
        return -float(resid[0])
    t_star = float(res.x[-1])
    # boundary points solve to t = 0 up to LP tolerance; snap to exact 0
    if abs(t_star) <= 1e-9 * (1.0 + t_max):
        t_star = 0.0
    return min(t_star, t_max)


def contains_ri(desc: SubdifferentialDesc, point) -> dict:
    """Relative-interior membership with the minimal slack as margin.

    The point must lie on the affine hull of the descriptor (within
    ``1e-8 * (1 + ||point||)``); anything else raises, since callers
    construct the point from the descriptor's own geometry. Returns
    ``{"inside": bool, "margin": float}`` where margin > 0 iff inside;
    degenerate descriptors that are single points report margin = inf.
    """
    v = np.asarray(point, dtype=float)
    aff_tol = 1e-8 * (1.0 + np.linalg.norm(v))
    if isinstance(desc, Shifted):
        return contains_ri(desc.base, v - desc.offset)
    if isinstance(desc, BoxProduct):
        margin = _ri_box(desc.lo, desc.hi, v, aff_tol)
    elif isinstance(desc, ClusterSum):
        margin = _ri_cluster(desc, v, aff_tol)
    elif isinstance(desc, AffineImage):
        margin = _ri_affine(desc, v, aff_tol)
    else:
        raise TypeError(f"unknown descriptor {type(desc).__name__}")
    eps = 1e-12
    return {"inside": bool(margin > eps), "margin": float(margin)}


def representative_point(desc: SubdifferentialDesc) -> NDArray:
    """A canonical member: box midpoints, cluster centroids, shifted accordingly."""
    if isinstance(desc, Shifted):
        return representative_point(desc.base) + desc.offset
    if isinstance(desc, BoxProduct):
        return 0.5 * (desc.lo + desc.hi)
    if isinstance(desc, AffineImage):
        return desc.At @ (0.5 * (desc.box.lo + desc.box.hi))
    if isinstance(desc, ClusterSum):
        v = np.zeros(desc.p)
        for b in desc.blocks:
            if b.signs is not None:
                v[list(b.indices)] = float(np.mean(b.weights)) * np.asarray(b.signs)
        return v
    raise TypeError(f"unknown descriptor {type(desc).__name__}")


# ---------------------------------------------------------------------------
# Dimension and vertices
# ---------------------------------------------------------------------------


def dimension(desc: SubdifferentialDesc) -> int:
    """Dimension of the affine hull."""
    if isinstance(desc, Shifted):
        return dimension(desc.base)
    if isinstance(desc, BoxProduct):
        return int(np.sum(desc.interval_mask))
    if isinstance(desc, AffineImage):
        M = desc.At[:, desc.box.interval_mask]
        if M.shape[1] == 0:
            return 0
        s = np.linalg.svd(M, compute_uv=False)
        return int(np.sum(s > 1e-10 * s[0]))
    if isinstance(desc, ClusterSum):
        d = 0
        for b in desc.blocks:
            if b.signs is None:
                d += b.size
            elif not b.is_point():
                d += b.size - 1
        return d
    raise TypeError(f"unknown descriptor {type(desc).__name__}")


def _count_vertices(desc: SubdifferentialDesc) -> int:
    if isinstance(desc, Shifted):
        return _count_vertices(desc.base)
    if isinstance(desc, BoxProduct):
        return 2 ** int(np.sum(desc.interval_mask))
    if isinstance(desc, AffineImage):
        return _count_vertices(desc.box)
    if isinstance(desc, ClusterSum):
        total = 1
        for b in desc.blocks:
            _, counts = np.unique(np.round(b.weights, 12), return_counts=True)
            perms = math.factorial(b.size) // math.prod(
                math.factorial(int(c)) for c in counts
            )
            if b.signs is None:
                nz = int(np.sum(b.weights > 0))
                perms *= 2**nz
            total *= perms
        return total
    raise TypeError(f"unknown descriptor {type(desc).__name__}")


def _block_vertices(b: ClusterBlock):
    perms = set(itertools.permutations(b.weights.tolist()))
    if b.signs is None:
        out = set()
        for perm in perms:
            choices = [(v, -v) if v != 0 else (v,) for v in perm]
            out.update(itertools.product(*choices))
        return sorted(out)
    s = np.asarray(b.signs, dtype=float)
    return sorted(tuple(s * np.asarray(perm)) for perm in perms)


def enumerate_vertices(desc: SubdifferentialDesc, max_vertices: int = 10_000) -> VPolytope:
    """Explicit generating points of the descriptor (duplicates removed at 1e-12).

    Refuses when the implied count exceeds ``max_vertices``. For affine
    images the box-vertex images are returned; non-extreme images may be
    present, which is harmless for hull-based oracles.
    """
    n = _count_vertices(desc)
    if n > max_vertices:
        raise ValueError(f"vertex count {n} exceeds the limit {max_vertices}")
    if isinstance(desc, Shifted):
        base = enumerate_vertices(desc.base, max_vertices)
        return VPolytope(base.vertices + desc.offset[None, :])
    if isinstance(desc, BoxProduct):
        choices = [
            (desc.lo[i], desc.hi[i]) if desc.hi[i] > desc.lo[i] else (desc.lo[i],)
            for i in range(desc.dim_ambient)
        ]
        V = np.array(list(itertools.product(*choices)))
    elif isinstance(desc, AffineImage):
        box = enumerate_vertices(desc.box, max_vertices)
        V = box.vertices @ desc.At.T
    elif isinstance(desc, ClusterSum):
        V = np.zeros((1, desc.p))
        for b in desc.blocks:
            bv = np.asarray(_block_vertices(b))
            expanded = np.repeat(V, bv.shape[0], axis=0)
            tiles = np.tile(bv, (V.shape[0], 1))
            expanded[:, list(b.indices)] = tiles
            V = expanded
    else:
        raise TypeError(f"unknown descriptor {type(desc).__name__}")
    _, keep = np.unique(np.round(V / 1e-12), axis=0, return_index=True)
    return VPolytope(V[np.sort(keep)])


# ---------------------------------------------------------------------------
# Hausdorff distance
# ---------------------------------------------------------------------------


def distance_to_hull(x, vertices, tol: float = 1e-9, max_iter: int = 200_000) -> float:
    """Euclidean distance from ``x`` to the convex hull of ``vertices``.

    Frank-Wolfe with away steps on the simplex formulation, seeded at
    the nearest vertex (so a point that *is* a vertex returns 0.0
    exactly). ``tol`` bounds the absolute error of the distance.
    """
    x = np.asarray(x, dtype=float)
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    n = V.shape[0]
    d2 = np.einsum("ij,ij->i", V - x, V - x)
    j0 = int(np.argmin(d2))
    if d2[j0] == 0.0:
        return 0.0
    w = {j0: 1.0}
    y = V[j0].copy()
    for _ in range(max_iter):
        g = y - x
        scores = V @ g
        s = int(np.argmin(scores))
        active = list(w)
        a = active[int(np.argmax(scores[active]))]
        fw_gap = float(g @ y - scores[s])
        # stop when the duality gap certifies the distance to tol
        f_val = 0.5 * float(g @ g)
        if fw_gap <= max(tol * tol * 0.5, tol * math.sqrt(2.0 * f_val) * 0.5):
            break
        away_gap = float(scores[a] - g @ y)
        if fw_gap >= away_gap:
            d = V[s] - y
            gamma_max = 1.0
            target = s
            is_away = False
        else:
            d = y - V[a]
            wa = w[a]
            gamma_max = wa / (1.0 - wa) if wa < 1.0 else 0.0
            target = a
            is_away = True
        dd = float(d @ d)
        if dd == 0.0 or gamma_max == 0.0:
            break
        gamma = min(gamma_max, max(0.0, -float(g @ d) / dd))
        if gamma == 0.0:
            break
        if is_away:
            for k in list(w):
                w[k] *= 1.0 + gamma
            w[target] = w[target] - gamma
            if w[target] <= 1e-16:
                del w[target]
        else:
            for k in list(w):
                w[k] *= 1.0 - gamma
            w[target] = w.get(target, 0.0) + gamma
        y = y + gamma * d
    return float(np.linalg.norm(y - x))


def hausdorff_distance(A: VPolytope, B: VPolytope, tol: float = 1e-9) -> float:
    """Hausdorff distance between convex hulls of two vertex lists."""
    d = 0.0
    for v in A.vertices:
        d = max(d, distance_to_hull(v, B.vertices, tol))
    for v in B.vertices:
        d = max(d, distance_to_hull(v, A.vertices, tol))
    return d
