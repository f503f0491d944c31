"""Raw-data ingestion into the sequence/matrix models.

Density samples become empirical trigonometric coefficients with the
prescribed noise proxy sigma_n^2 = C log(n) / n (the log factor stays; its
removal is conjectural).  Sample covariance rows become the dominating-term
matrix observation.  Graph adjacency becomes the Laplacian eigenbasis,
ascending, which orders coordinates for the truncation family.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionMismatchError

TRIG_SUP_BOUND = math.sqrt(2.0)  # sup norm of the trigonometric basis


def trig_basis_value(i: int, x: np.ndarray) -> np.ndarray:
    """phi_1 = 1, phi_{2k}(x) = sqrt(2) cos(2 pi k x), phi_{2k+1}(x) = sqrt(2) sin(2 pi k x).

    ``i`` is 1-based to keep the usual basis numbering.
    """
    if i == 1:
        return np.ones_like(x)
    k = i // 2
    if i % 2 == 0:
        return math.sqrt(2.0) * np.cos(2.0 * math.pi * k * x)
    return math.sqrt(2.0) * np.sin(2.0 * math.pi * k * x)


def density_to_sequence(samples, n_coeffs: int, C: float = 1.0):
    """Empirical Fourier coefficients of a density on [0, 1] and sigma_n.

    Returns (Y, sigma_n) with Y_i the sample mean of phi_i and
    sigma_n = sqrt(C log(n) / n).
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("samples must be a nonempty 1-d array")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("samples must lie in [0, 1]")
    if n_coeffs < 1:
        raise ValueError("n_coeffs >= 1 required")
    n = x.size
    Y = np.array([trig_basis_value(i, x).mean() for i in range(1, n_coeffs + 1)])
    assert np.all(np.abs(Y) <= TRIG_SUP_BOUND)
    sigma_n = math.sqrt(C * math.log(n) / n)
    return Y, sigma_n


def covariance_to_matrix(rows) -> np.ndarray:
    """(1/n) sum of x_l x_l^T over the sample rows; symmetric by construction."""
    X = np.asarray(rows, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise DimensionMismatchError("need an n x p sample matrix with n >= 1")
    out = X.T @ X / X.shape[0]
    return 0.5 * (out + out.T)  # remove asymmetric rounding residue


def laplacian_eigen_order(adjacency) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal Laplacian eigenbasis of a connected simple graph.

    Returns (basis, eigenvalues) with columns ordered by ascending eigenvalue;
    the first eigenvalue is ~0 with the constant eigenvector.  Signs are
    canonicalized so each column's first significantly nonzero entry is
    positive.
    """
    A = np.asarray(adjacency, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatchError("adjacency must be square")
    if not np.array_equal(A, A.T):
        raise ValueError("adjacency must be symmetric")
    if np.any(np.diag(A) != 0):
        raise ValueError("self-loops are not allowed")
    if not np.all(np.isin(A, (0.0, 1.0))):
        raise ValueError("adjacency must be 0/1")
    n = A.shape[0]
    if n > 1:
        # connectivity via breadth-first search
        seen = {0}
        frontier = [0]
        while frontier:
            v = frontier.pop()
            for w in np.flatnonzero(A[v]):
                if w not in seen:
                    seen.add(int(w))
                    frontier.append(int(w))
        if len(seen) != n:
            raise ValueError("graph must be connected")
    lap = np.diag(A.sum(axis=1)) - A
    eigvals, eigvecs = np.linalg.eigh(lap)
    order = np.argsort(eigvals, kind="stable")
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    for j in range(n):
        col = eigvecs[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-9 * np.abs(col).max())
        if nz.size and col[nz[0]] < 0:
            eigvecs[:, j] = -col
    return eigvecs, eigvals


def graph_coefficients(basis: np.ndarray, values) -> np.ndarray:
    """Coordinates of vertex values in the Laplacian eigenbasis."""
    values = np.asarray(values, dtype=float)
    if basis.shape[0] != values.size:
        raise DimensionMismatchError("basis and value vector sizes differ")
    return basis.T @ values
