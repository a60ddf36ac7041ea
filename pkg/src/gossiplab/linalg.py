"""Dense symmetric eigensolver, pseudoinverse, B-norms and exact projections.

All rank decisions use ``default_zero_tol``: eigenvalues at or below
``1e-9 * max |lambda|`` count as zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _backend

__all__ = [
    "NodeWeights",
    "EigenDecomposition",
    "InconsistentSystemError",
    "sym_eigen",
    "default_zero_tol",
    "lambda_min_plus",
    "lambda_max",
    "pseudo_inverse",
    "project_solution_set",
    "weighted_norm_sq",
    "as_weights",
]

SYM_TOL = 1e-12
JACOBI_MAX_N = 24
JACOBI_MAX_N_COMPILED = 200


class InconsistentSystemError(ValueError):
    """The right-hand side is not in the range of the system matrix."""


@dataclass(frozen=True)
class NodeWeights:
    """Positive node weights ``w``; the geometry matrix is ``B = Diag(w)``."""

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be finite and strictly positive")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "w", w)

    @classmethod
    def identity(cls, n: int) -> "NodeWeights":
        return cls(np.ones(n))

    @classmethod
    def degree(cls, g) -> "NodeWeights":
        """``B = D``; requires every node to have at least one neighbor."""
        return cls(g.degrees.astype(float))

    @property
    def n(self) -> int:
        return self.w.size

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.w == 1.0))

    def matrix(self) -> np.ndarray:
        return np.diag(self.w)


def as_weights(w, n: int | None = None) -> np.ndarray:
    """Normalize ``None`` / ``NodeWeights`` / array-like to a float vector."""
    if w is None:
        if n is None:
            raise ValueError("node count needed for identity weights")
        return np.ones(n)
    arr = w.w if isinstance(w, NodeWeights) else NodeWeights(w).w
    if n is not None and arr.size != n:
        raise ValueError(f"expected {n} weights, got {arr.size}")
    return arr


class EigenDecomposition(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def _check_symmetric(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    asym = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asym > SYM_TOL * scale:
        raise ValueError(f"matrix is not symmetric (max |M - M^T| = {asym:.3e})")
    return 0.5 * (M + M.T)


def sym_eigen(M, method: str = "auto") -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    Parameters
    ----------
    M : array_like, shape (n, n)
        Symmetric to ``1e-12`` relative to its largest entry.
    method : {"auto", "jacobi", "lapack"}
        ``"jacobi"`` runs cyclic Jacobi rotations in the kernel backend.
        ``"lapack"`` defers to ``numpy.linalg.eigh``.  ``"auto"`` uses
        Jacobi when the compiled backend is present or ``n`` is small.
    """
    A = _check_symmetric(M)
    n = A.shape[0]
    if method == "auto":
        method = "jacobi" if (_backend.NAME == "cython" and n <= JACOBI_MAX_N_COMPILED) or n <= JACOBI_MAX_N else "lapack"
    if method == "lapack":
        vals, vecs = np.linalg.eigh(A)
        return EigenDecomposition(vals, vecs)
    if method != "jacobi":
        raise ValueError(f"unknown eigensolver {method!r}")
    a = np.ascontiguousarray(A)
    vecs = np.zeros_like(a)
    sweeps = _backend.kernels.jacobi_eigh(a, vecs, 1e-15, 100)
    if sweeps < 0:
        raise np.linalg.LinAlgError("Jacobi iteration did not converge in 100 sweeps")
    vals = np.diag(a).copy()
    order = np.argsort(vals, kind="stable")
    return EigenDecomposition(vals[order], vecs[:, order])


def default_zero_tol(values) -> float:
    """``1e-9`` relative to the largest eigenvalue magnitude."""
    values = np.asarray(values)
    top = float(np.max(np.abs(values))) if values.size else 0.0
    return 1e-9 * top if top > 0 else np.finfo(float).tiny


def lambda_min_plus(M, zero_tol: float | None = None, eig: EigenDecomposition | None = None) -> float:
    """Smallest eigenvalue above ``zero_tol`` of a PSD matrix."""
    vals = (eig or sym_eigen(M)).values
    tol = default_zero_tol(vals) if zero_tol is None else zero_tol
    pos = vals[vals > tol]
    if pos.size == 0:
        raise ValueError("matrix has no eigenvalue above the zero tolerance")
    return float(pos[0])


def lambda_max(M, eig: EigenDecomposition | None = None) -> float:
    return float((eig or sym_eigen(M)).values[-1])


def pseudo_inverse(M, zero_tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a symmetric matrix via its eigendecomposition."""
    vals, vecs = sym_eigen(M)
    tol = default_zero_tol(vals) if zero_tol is None else zero_tol
    keep = np.abs(vals) > tol
    inv = np.zeros_like(vals)
    inv[keep] = 1.0 / vals[keep]
    return (vecs * inv) @ vecs.T


def weighted_norm_sq(x, w=None) -> float:
    """``sum_i w_i x_i**2``."""
    x = np.asarray(x, dtype=float)
    if w is None:
        return float(x @ x)
    return float(as_weights(w, x.size) @ (x * x))


def project_solution_set(x, A, b=None, w=None) -> np.ndarray:
    """B-orthogonal projection of ``x`` onto ``{z : A z = b}``.

    Computes ``x - B^-1 A^T (A B^-1 A^T)^+ (A x - b)``.

    Raises
    ------
    InconsistentSystemError
        If the projected point misses ``A z = b`` by more than ``1e-9``
        relative to the problem scale.
    """
    x = np.asarray(x, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[1] != x.size:
        raise ValueError(f"A has {A.shape[1]} columns but x has length {x.size}")
    b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)
    if A.shape[0] == 0:
        return x.copy()
    winv = 1.0 / as_weights(w, x.size)
    AB = A * winv
    G = AB @ A.T
    z = x - AB.T @ (pseudo_inverse(G) @ (A @ x - b))
    miss = float(np.max(np.abs(A @ z - b)))
    scale = max(1.0, float(np.max(np.abs(b))), float(np.max(np.abs(A))) * float(np.max(np.abs(x))))
    if miss > 1e-9 * scale:
        raise InconsistentSystemError(f"system is inconsistent: residual {miss:.3e} after projection")
    return z
