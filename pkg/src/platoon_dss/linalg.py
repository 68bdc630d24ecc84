"""Small dense matrix primitives used by the contraction conditions.

All functions accept anything ``numpy.asarray`` understands and return plain
floats or new arrays; inputs are never modified.
"""

import numpy as np


class DimensionError(ValueError):
    """Raised when a matrix has the wrong shape for an operation."""


class NumericError(ArithmeticError):
    """Raised when an eigen/singular value computation fails to converge."""


def _as_matrix(a, square=False):
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"expected a 2-D matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def symmetric_part(a):
    """Return ``(A + A^T) / 2``.

    The result is symmetric bit-for-bit: the upper triangle is mirrored
    into the lower one instead of relying on floating point commutativity.
    """
    m = _as_matrix(a, square=True)
    s = 0.5 * (m + m.T)
    upper = np.triu(s)
    return upper + np.triu(s, 1).T


def _eigvalsh(s):
    try:
        return np.linalg.eigvalsh(s)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            f"symmetric eigenvalue iteration did not converge for a "
            f"{s.shape[0]}x{s.shape[1]} matrix (max |entry| = {np.abs(s).max():.3e}): {exc}"
        ) from exc


def matrix_measure_2(a):
    """Matrix measure induced by the Euclidean norm.

    This is the largest eigenvalue of the symmetric part of ``a``; negative
    values certify contraction at that rate.

    Parameters
    ----------
    a : array_like, shape (n, n)

    Returns
    -------
    float
    """
    return float(_eigvalsh(symmetric_part(a))[-1])


def singular_value_extremes(a):
    """Return ``(sigma_min, sigma_max)`` of a square matrix."""
    m = _as_matrix(a, square=True)
    try:
        s = np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge for shape {m.shape}: {exc}") from exc
    return float(s[-1]), float(s[0])


def spectral_norm_2(a):
    """Induced 2-norm, i.e. the largest singular value."""
    m = _as_matrix(a)
    if not m.any():
        return 0.0
    try:
        return float(np.linalg.norm(m, 2))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge for shape {m.shape}: {exc}") from exc
