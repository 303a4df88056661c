"""Dense tensor primitives: contraction, truncated SVD and Hermitian exponentials.

Tensors are plain complex ``numpy.ndarray`` objects in C (row-major) order.
Every function here is pure and returns fresh arrays.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericalError, ParameterError, ValidationError

# singular values below this fraction of the largest are always dropped
SVD_FLOOR = 1e-14
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class SvdResult:
    """Truncated singular value decomposition ``m ~ u @ diag(s) @ v_dagger``.

    Attributes
    ----------
    u : ndarray, shape (m, k)
        Left isometry.
    s : ndarray, shape (k,)
        Kept singular values, non-negative and descending.
    v_dagger : ndarray, shape (k, n)
        Right isometry.
    discarded_weight : float
        Sum of the squared singular values that were dropped.
    """

    u: np.ndarray
    s: np.ndarray
    v_dagger: np.ndarray
    discarded_weight: float

    @property
    def rank(self) -> int:
        return self.s.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.v_dagger


def _check_finite(t: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(t)):
        raise NumericalError(f"{what} produced non-finite entries")
    return t


def contract(a: np.ndarray, b: np.ndarray, axis_pairs: Sequence[Tuple[int, int]]) -> np.ndarray:
    """Sum over paired axes of ``a`` and ``b``.

    The result carries the free axes of ``a`` followed by those of ``b``, each
    in their original order.

    >>> contract(np.eye(2), np.array([1.0, 0.0]), [(1, 0)])
    array([1., 0.])
    """
    a = np.asarray(a)
    b = np.asarray(b)
    axes_a = [p[0] for p in axis_pairs]
    axes_b = [p[1] for p in axis_pairs]
    for ia, ib in zip(axes_a, axes_b):
        if not (-a.ndim <= ia < a.ndim and -b.ndim <= ib < b.ndim):
            raise DimensionError(f"axis pair ({ia}, {ib}) out of range for ranks {a.ndim}, {b.ndim}")
        if a.shape[ia] != b.shape[ib]:
            raise DimensionError(
                f"cannot contract axis {ia} (length {a.shape[ia]}) with axis {ib} (length {b.shape[ib]})"
            )
    return _check_finite(np.tensordot(a, b, axes=(axes_a, axes_b)), "contract")


def _svd(m: np.ndarray):
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge; gesvd is slower but robust
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")


def svd_truncate(m: np.ndarray, chi_max: int, rel_tol: float = 0.0) -> SvdResult:
    """SVD of a matrix keeping at most ``chi_max`` singular values.

    Values with ``s_i / s_1 < max(rel_tol, 1e-14)`` are dropped as well. At
    least one value is always kept so the bond never vanishes.
    """
    m = np.asarray(m)
    if m.ndim != 2:
        raise DimensionError(f"svd_truncate needs a matrix, got rank {m.ndim}")
    if chi_max is None or chi_max < 1:
        raise ParameterError(f"chi_max must be a positive integer, got {chi_max}")
    if rel_tol < 0:
        raise ParameterError("rel_tol must be non-negative")
    _check_finite(m, "svd_truncate input")
    u, s, vh = _svd(m)
    if s.size == 0:
        raise DimensionError("cannot decompose an empty matrix")
    cutoff = max(rel_tol, SVD_FLOOR) * s[0]
    keep = int(np.count_nonzero(s > cutoff)) if s[0] > 0 else 1
    keep = max(1, min(keep, int(chi_max)))
    discarded = float(np.sum(s[keep:] ** 2))
    return SvdResult(u[:, :keep], s[:keep], vh[:keep, :], discarded)


def is_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return h.ndim == 2 and h.shape[0] == h.shape[1] and np.allclose(h, h.conj().T, rtol=0.0, atol=tol)


def matrix_exp(h: np.ndarray, scale: complex) -> np.ndarray:
    """``exp(scale * h)`` for a small Hermitian ``h`` via its eigendecomposition."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionError(f"matrix_exp needs a square matrix, got shape {h.shape}")
    if not is_hermitian(h):
        raise ValidationError("matrix_exp generator is not Hermitian")
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    return _check_finite((v * np.exp(scale * w)) @ v.conj().T, "matrix_exp")
