"""Symmetric-matrix helpers and the vectorizations used by the data equations.

Symmetric matrices are plain ``numpy`` arrays; :func:`as_symmetric` is the
single gate that validates and symmetrizes them.  ``vecs`` stacks the upper
triangle row by row with no scaling of the off-diagonal entries, and
``quad_basis`` carries the factor 2 on cross products instead, so that
``quad_basis(x) @ vecs(P) == x @ P @ x``.
"""

import numpy as np

ASYMMETRY_TOL = 1e-8


class DimensionError(ValueError):
    pass


def as_symmetric(X, tol=ASYMMETRY_TOL):
    """Return ``(X + X.T) / 2`` as a float array.

    Raises
    ------
    DimensionError
        If ``X`` is not square or is empty.
    ValueError
        If the largest entry of ``|X - X.T|`` exceeds ``tol`` (scaled by
        ``max(1, max|X|)``).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {X.shape}")
    asym = np.max(np.abs(X - X.T))
    scale = max(1.0, np.max(np.abs(X)))
    if asym > tol * scale:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    return 0.5 * (X + X.T)


def sym_dim(length):
    """Return ``n`` such that ``n*(n+1)/2 == length`` or raise DimensionError."""
    n = int(round((np.sqrt(8 * length + 1) - 1) / 2))
    if n < 1 or n * (n + 1) // 2 != length:
        raise DimensionError(f"length {length} is not a triangular number")
    return n


def vecs(S):
    """Upper triangle of ``S`` stacked row by row: [s11, s12, ..., s1n, s22, ..., snn]."""
    S = np.asarray(S, dtype=float)
    return S[np.triu_indices(S.shape[0])]


def mat_from_vecs(v):
    """Inverse of :func:`vecs`."""
    v = np.asarray(v, dtype=float).ravel()
    n = sym_dim(v.size)
    S = np.zeros((n, n))
    iu = np.triu_indices(n)
    S[iu] = v
    S.T[iu] = v
    return S


def vec(M):
    """Column-stacking vectorization."""
    return np.asarray(M, dtype=float).ravel(order="F")


def unvec(v, rows, cols):
    return np.asarray(v, dtype=float).reshape((rows, cols), order="F")


def kron(A, B):
    return np.kron(np.atleast_2d(A), np.atleast_2d(B))


def _cross_weights(q):
    iu = np.triu_indices(q)
    w = np.where(iu[0] == iu[1], 1.0, 2.0)
    return iu, w


def quad_basis(xi):
    """Quadratic monomials of ``xi`` with doubled cross terms.

    ``[x1^2, 2 x1 x2, ..., 2 x1 xq, x2^2, 2 x2 x3, ..., xq^2]``.  Accepts a
    batch: the last axis is the vector axis, so an array of shape
    ``(..., q)`` maps to shape ``(..., q(q+1)/2)``.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 0 or xi.shape[-1] < 1:
        raise DimensionError("quad_basis needs a vector of length >= 1")
    (i, j), w = _cross_weights(xi.shape[-1])
    return w * xi[..., i] * xi[..., j]


def outer_basis(x, u):
    """Batched ``kron(x, u)`` over the last axis (``x`` index varies slowest)."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    return (x[..., :, None] * u[..., None, :]).reshape(*x.shape[:-1], -1)


def is_psd(S, tol=1e-10):
    return bool(np.linalg.eigvalsh(S)[0] >= -tol)


def is_pd(S, tol=0.0):
    return bool(np.linalg.eigvalsh(S)[0] > tol)
