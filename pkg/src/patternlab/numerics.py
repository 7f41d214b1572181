"""Dense linear-algebra and randomness primitives shared by all modules.

Everything here is deterministic and pure: matrices are validated once at
construction, decompositions are cached on the instance, and random draws
are keyed by an explicit ``(seed, stream)`` pair so that Monte Carlo
replicates are reproducible independently of scheduling order.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray


class SPDMatrix:
    """Symmetric positive-definite matrix with a cached eigendecomposition.

    Parameters
    ----------
    entries : array_like, shape (p, p)
        Matrix to wrap. Must be symmetric to relative tolerance ``1e-12``
        and have smallest eigenvalue above ``1e-12`` times the largest.

    Raises
    ------
    ValueError
        If the matrix is not square, not symmetric, or numerically
        singular / indefinite.
    """

    def __init__(self, entries) -> None:
        A = np.asarray(entries, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {A.shape}")
        scale = np.linalg.norm(A)
        if scale == 0.0:
            raise ValueError("zero matrix is not positive definite")
        if np.linalg.norm(A - A.T) > 1e-12 * scale:
            raise ValueError("matrix is not symmetric within 1e-12 relative tolerance")
        A = 0.5 * (A + A.T)
        w, V = np.linalg.eigh(A)
        if w[0] <= 1e-12 * w[-1] or w[-1] <= 0.0:
            raise ValueError(
                f"matrix is not positive definite: eigenvalue range [{w[0]:.3e}, {w[-1]:.3e}]"
            )
        self.entries: NDArray = A
        self._eigvals = w
        self._eigvecs = V

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def eigenvalues(self) -> NDArray:
        return self._eigvals

    def lambda_max(self) -> float:
        return float(self._eigvals[-1])

    def _transform(self, fn) -> NDArray:
        V = self._eigvecs
        return (V * fn(self._eigvals)) @ V.T

    def sqrt(self) -> NDArray:
        """Symmetric square root S with S @ S = entries."""
        return self._transform(np.sqrt)

    def inv_sqrt(self) -> NDArray:
        return self._transform(lambda w: 1.0 / np.sqrt(w))

    def inv(self) -> NDArray:
        return self._transform(lambda w: 1.0 / w)

    def solve(self, b: NDArray) -> NDArray:
        V = self._eigvecs
        return V @ ((V.T @ b).T / self._eigvals).T

    def __repr__(self) -> str:  # pragma: no cover
        return f"SPDMatrix(dim={self.dim})"


class Basis:
    """Matrix of linearly independent columns spanning a subspace.

    The rank condition (smallest singular value above ``1e-10`` times the
    largest) is checked at construction; an empty basis (k = 0 columns)
    represents the trivial subspace and is allowed.
    """

    def __init__(self, columns) -> None:
        U = np.asarray(columns, dtype=float)
        if U.ndim != 2:
            raise ValueError(f"expected a 2-d array of columns, got shape {U.shape}")
        p, k = U.shape
        if k > p:
            raise ValueError(f"more columns ({k}) than rows ({p})")
        if k > 0:
            s = np.linalg.svd(U, compute_uv=False)
            if s[-1] <= 1e-10 * s[0] or s[0] == 0.0:
                raise ValueError("columns are not linearly independent (rank-deficient within 1e-10)")
        self.columns: NDArray = U

    @property
    def dim(self) -> int:
        """Ambient dimension p."""
        return self.columns.shape[0]

    @property
    def rank(self) -> int:
        """Number of columns k."""
        return self.columns.shape[1]

    def orthonormal(self) -> NDArray:
        """Orthonormal basis of the same span (p x k)."""
        if self.rank == 0:
            return self.columns
        Q, _ = np.linalg.qr(self.columns)
        return Q

    def projector(self) -> NDArray:
        """Orthogonal projector onto the span (p x p)."""
        Q = self.orthonormal()
        return Q @ Q.T

    def __repr__(self) -> str:  # pragma: no cover
        return f"Basis(dim={self.dim}, rank={self.rank})"


class RngStream:
    """Counter-based random stream keyed by ``(seed, stream)``.

    Two streams with the same key produce bitwise-identical draw sequences
    regardless of how many other streams exist or in which order they are
    consumed, which makes parallel Monte Carlo reductions deterministic.
    """

    def __init__(self, seed: int, stream: int = 0) -> None:
        self.seed = int(seed)
        self.stream = int(stream)
        key = np.array([self.seed % 2**64, self.stream % 2**64], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def standard_normal(self, size=None) -> NDArray:
        return self._gen.standard_normal(size)

    def spawn(self, stream: int) -> "RngStream":
        """Fresh stream with the same seed and a new stream index."""
        return RngStream(self.seed, stream)

    def __repr__(self) -> str:  # pragma: no cover
        return f"RngStream(seed={self.seed}, stream={self.stream})"


def matrix_sqrt(C: SPDMatrix) -> SPDMatrix:
    """Symmetric square root of an SPD matrix via eigendecomposition.

    Returns S as an :class:`SPDMatrix` with ``S @ S = C`` to 1e-10
    relative Frobenius error. The symmetric (not Cholesky) root is used
    because downstream projection formulas require C^{1/2} = (C^{1/2})^T.
    """
    return SPDMatrix(C.sqrt())


def weighted_projection(C: SPDMatrix, U: Basis):
    """Projection onto C^{1/2}<U> and the associated mean map.

    Parameters
    ----------
    C : SPDMatrix
    U : Basis
        Pattern-space basis; full column rank enforced at construction.

    Returns
    -------
    P : ndarray, shape (p, p)
        Orthogonal projection onto the column span of C^{1/2} U.
    mu_map : callable
        Maps a vector v0 to C^{1/2} P C^{-1/2} v0.
    """
    if U.dim != C.dim:
        raise ValueError(f"basis dimension {U.dim} does not match matrix dimension {C.dim}")
    S = C.sqrt()
    Si = C.inv_sqrt()
    if U.rank == 0:
        P = np.zeros((C.dim, C.dim))
    else:
        M = S @ U.columns
        G = M.T @ M
        P = M @ np.linalg.solve(G, M.T)
        P = 0.5 * (P + P.T)

    def mu_map(v0):
        v0 = np.asarray(v0, dtype=float)
        return S @ (P @ (Si @ v0))

    return P, mu_map


def equicorrelation(p: int, rho: float) -> SPDMatrix:
    """Unit-diagonal matrix with constant off-diagonal entry ``rho``.

    Positive definite for -1/(p-1) < rho < 1; the constructor rejects
    values outside that range.
    """
    M = np.full((p, p), float(rho))
    np.fill_diagonal(M, 1.0)
    return SPDMatrix(M)


def block_covariance(n_blocks: int, block_size: int, rho: float) -> SPDMatrix:
    """Block-diagonal covariance of equicorrelated unit-variance blocks."""
    if n_blocks < 1 or block_size < 1:
        raise ValueError("need at least one block of size one")
    B = np.full((block_size, block_size), float(rho))
    np.fill_diagonal(B, 1.0)
    blocks = [B] * n_blocks
    M = np.zeros((n_blocks * block_size, n_blocks * block_size))
    for k in range(n_blocks):
        s = k * block_size
        M[s:s + block_size, s:s + block_size] = blocks[k]
    return SPDMatrix(M)


def gaussian_sample(mean, cov, rng: RngStream) -> NDArray:
    """Draw ``mean + factor @ z`` with z standard normal.

    ``cov`` may be an :class:`SPDMatrix` (its symmetric square root is
    used as the factor) or an explicit square-root factor given as an
    ndarray. The factor form admits singular covariances, e.g. those
    supported on a proper subspace.
    """
    mean = np.asarray(mean, dtype=float)
    if isinstance(cov, SPDMatrix):
        factor = cov.sqrt()
    else:
        factor = np.asarray(cov, dtype=float)
        if factor.ndim != 2:
            raise ValueError("covariance factor must be a matrix")
    if factor.shape[0] != mean.shape[0]:
        raise ValueError(
            f"factor rows {factor.shape[0]} do not match mean dimension {mean.shape[0]}"
        )
    z = rng.standard_normal(factor.shape[1])
    return mean + factor @ z
