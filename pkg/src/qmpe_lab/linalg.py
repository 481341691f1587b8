"""Dense complex matrix kernel.

Row-major vectorization of operators, Kronecker products, norms, general
(non-Hermitian) eigendecomposition and matrix-exponential action, sized for
superoperators up to 400x400 (probe dimension d <= 20).

Conventions
-----------
Operators and superoperators are plain ``numpy.ndarray`` of dtype complex128.
Vectorization stacks rows, i.e. ``vec(M)[i*d + j] = M[i, j]``, so the basis
operator ``|i><j|`` maps to the unit vector at index ``i*d + j`` and the
product rule reads ``(A (x) B) vec(C) = vec(A C B^T)``.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

__all__ = [
    "DimensionError",
    "EigenConvergenceError",
    "vectorize",
    "devectorize",
    "kron",
    "frobenius_norm",
    "trace_norm",
    "eig_general",
    "expm_action",
]

#: Default residual tolerance for eigendecompositions, relative to ||m||_F.
EIG_RESIDUAL_RTOL = 1e-9


class DimensionError(ValueError):
    """Input has an incompatible or non-square shape."""


class EigenConvergenceError(RuntimeError):
    """Eigendecomposition failed to meet the residual contract.

    Attributes
    ----------
    worst_residual : float
        Largest relative residual ||m v - lambda v|| / (||m||_F ||v||).
    """

    def __init__(self, message: str, worst_residual: float):
        super().__init__(message)
        self.worst_residual = worst_residual


def _as_complex(a) -> np.ndarray:
    return np.asarray(a, dtype=np.complex128)


def vectorize(m) -> np.ndarray:
    """Row-major vectorization of a square matrix: vec(M)[i*d+j] = M[i,j]."""
    m = _as_complex(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"vectorize expects a square matrix, got shape {m.shape}")
    return m.reshape(-1)


def devectorize(v) -> np.ndarray:
    """Inverse of :func:`vectorize`; the length must be a perfect square."""
    v = _as_complex(v)
    if v.ndim != 1:
        raise DimensionError(f"devectorize expects a vector, got shape {v.shape}")
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DimensionError(f"vector length {v.size} is not a perfect square")
    return v.reshape(d, d)


def kron(a, b) -> np.ndarray:
    """Kronecker product; satisfies (A (x) B) vec(C) = vec(A C B^T)."""
    return np.kron(_as_complex(a), _as_complex(b))


def frobenius_norm(m) -> float:
    """sqrt of the sum of squared moduli of the entries."""
    return float(np.linalg.norm(np.asarray(m)))


def trace_norm(m) -> float:
    """Sum of singular values of a square matrix.

    For Hermitian input this equals the sum of absolute eigenvalues.
    """
    m = _as_complex(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"trace_norm expects a square matrix, got shape {m.shape}")
    return float(np.linalg.svd(m, compute_uv=False).sum())


def eig_general(m, residual_rtol: float = EIG_RESIDUAL_RTOL):
    """Full eigendecomposition of a general complex matrix.

    Parameters
    ----------
    m : array_like, shape (n, n), n <= 400
        Matrix to decompose.
    residual_rtol : float
        Accepted relative residual ||m v - lambda v|| / (||m||_F ||v||).

    Returns
    -------
    w : ndarray, shape (n,)
        Eigenvalues, counting multiplicity.
    v : ndarray, shape (n, n)
        Right eigenvectors as columns, unit 2-norm.

    Raises
    ------
    EigenConvergenceError
        If any eigenpair violates the residual contract.
    """
    m = _as_complex(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"eig_general expects a square matrix, got shape {m.shape}")
    if m.shape[0] > 400:
        raise DimensionError(f"dimension {m.shape[0]} exceeds the supported 400")
    w, v = np.linalg.eig(m)
    scale = frobenius_norm(m)
    if scale > 0.0:
        residuals = np.linalg.norm(m @ v - v * w, axis=0) / (
            scale * np.linalg.norm(v, axis=0)
        )
        worst = float(residuals.max())
        if worst > residual_rtol:
            raise EigenConvergenceError(
                f"eigendecomposition residual {worst:.3e} exceeds {residual_rtol:.1e}",
                worst,
            )
    return w, v


def expm_action(m, v, t: float) -> np.ndarray:
    """Apply the matrix exponential: returns exp(t*m) @ v for t >= 0."""
    if t < 0:
        raise ValueError(f"expm_action requires t >= 0, got {t}")
    m = _as_complex(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expm_action expects a square matrix, got shape {m.shape}")
    v = _as_complex(v)
    if t == 0.0:
        return v.copy()
    return scipy.linalg.expm(m * t) @ v


def expm_dense(m, t: float) -> np.ndarray:
    """Dense propagator exp(t*m); shared by step-reusing trajectory evolvers."""
    if t < 0:
        raise ValueError(f"expm_dense requires t >= 0, got {t}")
    return scipy.linalg.expm(_as_complex(m) * t)


def apply_super(superop, rho) -> np.ndarray:
    """Apply a vectorized superoperator to an operator: devec(S @ vec(rho))."""
    return devectorize(_as_complex(superop) @ vectorize(rho))
