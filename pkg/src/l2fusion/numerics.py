"""Dense complex linear-algebra kernels.

Matrices are plain ``numpy.ndarray`` objects of complex dtype. Every routine
takes a tolerance defaulting to :data:`DEFAULT_TOL`.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import NoConvergence, NotHermitian, NotPSD

DEFAULT_TOL = 1e-9


class EigDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def fro(m) -> float:
    return float(np.linalg.norm(m))


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def is_hermitian(m, tol: float = DEFAULT_TOL) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and fro(m - dagger(m)) <= tol * max(1.0, fro(m))


def hermitian_eig(m, tol: float = DEFAULT_TOL) -> EigDecomposition:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.

    >>> hermitian_eig(np.diag([2.0, -1.0])).eigenvalues
    array([-1.,  2.])
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise NotHermitian(f"matrix is not square: {m.shape}")
    skew = fro(m - dagger(m))
    if skew > tol * fro(m):
        raise NotHermitian(f"asymmetry {skew:.3e} exceeds tolerance")
    h = (m + dagger(m)) / 2
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(str(exc)) from exc
    return EigDecomposition(w, v)


def _support(w: np.ndarray, tol: float) -> np.ndarray:
    top = max(float(np.max(np.abs(w))) if w.size else 0.0, 0.0)
    return w > tol * top if top > 0 else np.zeros(w.shape, dtype=bool)


def matrix_power(m, z, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``m**z`` for PSD ``m`` via spectral calculus on the support.

    Eigenvalues at or below ``tol * max eigenvalue`` are treated as zero and
    ``0**z`` is taken to be 0 (for every ``z``, including ``z == 0``, so that
    ``m**0`` is the support projection).
    """
    m = as_matrix(m)
    w, v = hermitian_eig(m, tol=max(tol, 1e-12))
    top = float(np.max(np.abs(w))) if w.size else 0.0
    if w.size and w.min() < -max(tol * top, 1e-14):
        raise NotPSD(f"negative eigenvalue {w.min():.3e}")
    keep = _support(w, tol)
    vals = np.zeros(w.shape, dtype=complex)
    vals[keep] = np.power(w[keep].astype(complex), complex(z))
    return (v * vals) @ dagger(v)


def psd_sqrt(m, tol: float = DEFAULT_TOL) -> np.ndarray:
    r = matrix_power(m, 0.5, tol)
    return (r + dagger(r)) / 2


def support_projection(m, tol: float = DEFAULT_TOL) -> np.ndarray:
    w, v = hermitian_eig(m, tol=max(tol, 1e-12))
    keep = _support(w, tol)
    return v[:, keep] @ dagger(v[:, keep])


def pinv_hermitian(m, tol: float = DEFAULT_TOL) -> np.ndarray:
    w, v = hermitian_eig(m, tol=max(tol, 1e-12))
    keep = _support(np.abs(w), tol)
    inv = np.zeros(w.shape)
    inv[keep] = 1.0 / w[keep]
    return (v * inv) @ dagger(v)


def is_psd(m, tol: float = DEFAULT_TOL) -> bool:
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m, tol):
        return False
    w = np.linalg.eigvalsh((m + dagger(m)) / 2)
    return bool(w.size == 0 or w.min() >= -tol * max(1.0, float(np.abs(w).max())))


def polar_decompose(m) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(w, p)`` with ``m = w p``, ``p = (m* m)^{1/2}``.

    ``w`` is a partial isometry whose initial space is the support of ``p``.
    """
    m = as_matrix(m)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    top = s.max() if s.size else 0.0
    keep = s > DEFAULT_TOL * top if top > 0 else np.zeros(s.shape, dtype=bool)
    w = u[:, keep] @ vh[keep, :]
    p = (dagger(vh) * s) @ vh
    return w, (p + dagger(p)) / 2


def null_space(m, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of the numerical kernel of ``m``."""
    m = np.asarray(m, dtype=complex)
    n = m.shape[1]
    if m.shape[0] == 0 or fro(m) == 0:
        return np.eye(n, dtype=complex)
    _, s, vh = scipy.linalg.svd(m, full_matrices=True, lapack_driver="gesvd")
    rank = int(np.sum(s > tol * s[0]))
    return dagger(vh[rank:, :])


def hermitian_null_space(gram: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Kernel of a PSD operator ``gram`` (cheaper than an SVD of its factor)."""
    w, v = np.linalg.eigh((gram + dagger(gram)) / 2)
    top = float(np.abs(w).max()) if w.size else 0.0
    if top < 1e-20:
        # roundoff only: everything is in the kernel
        return v
    return v[:, w <= tol * top]


def range_basis(m, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of the column space of ``m``."""
    m = np.asarray(m, dtype=complex)
    if m.size == 0:
        return np.zeros((m.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((m.shape[0], 0), dtype=complex)
    return u[:, s > tol * s[0]]


def unitarity_residual(u: np.ndarray) -> float:
    u = np.asarray(u)
    a = fro(dagger(u) @ u - np.eye(u.shape[1]))
    b = fro(u @ dagger(u) - np.eye(u.shape[0]))
    return max(a, b)


def isometry_residual(u: np.ndarray) -> float:
    return fro(dagger(u) @ u - np.eye(u.shape[1]))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_matrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    z = random_matrix(n, n, rng)
    return (z + dagger(z)) / 2


def random_psd(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    z = random_matrix(n, n if rank is None else rank, rng)
    return z @ dagger(z)
