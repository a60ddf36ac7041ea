"""Edge-based dual gossip: randomized Newton ascent on the consensus dual.

The dual variable ``y`` lives on edges (ordered as ``Graph.edges``).  With
``B = I`` and unit stepsize the primal iterate ``x0 + Q^T y`` tracks block
gossip exactly when both are driven by the same edge sets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, incidence_matrix
from .linalg import as_weights, pseudo_inverse

__all__ = [
    "DualState",
    "dual_objective",
    "step_rnm",
    "primal_from_dual",
    "advice",
    "dual_optimum",
]


@dataclass(frozen=True)
class DualState:
    """Edge weights ``y`` with the frozen initial node values ``x0``."""

    y: np.ndarray
    x0: np.ndarray
    k: int = 0

    @classmethod
    def initial(cls, g: Graph, x0) -> "DualState":
        x0 = np.array(x0, dtype=float)
        if x0.size != g.n:
            raise ValueError(f"x0 has length {x0.size}, graph has {g.n} nodes")
        return cls(np.zeros(g.m), x0, 0)


def dual_objective(y, A, x0, b=None, w=None) -> float:
    """``(b - A x0)^T y - 0.5 * ||A^T y||^2_{B^-1}``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    y = np.asarray(y, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)
    z = A.T @ y
    winv = 1.0 / as_weights(w, x0.size)
    return float((b - A @ x0) @ y - 0.5 * (winv @ (z * z)))


def _incidence(g: Graph, Q):
    return incidence_matrix(g) if Q is None else Q


def advice(dual: DualState, g: Graph, Q=None) -> np.ndarray:
    """Per-node correction ``Q^T y`` that turns ``x0`` into the primal iterate."""
    return _incidence(g, Q).T @ dual.y


def primal_from_dual(dual: DualState, g: Graph, Q=None) -> np.ndarray:
    return dual.x0 + advice(dual, g, Q)


def step_rnm(dual: DualState, edges, g: Graph, Q=None) -> DualState:
    """Exact maximization of the dual over the coordinates ``edges``.

    Only the entries of ``y`` indexed by ``edges`` change; the update solves
    the ``|C| x |C|`` Newton system with the pseudoinverse of the principal
    submatrix of ``Q Q^T``.
    """
    C = sorted(set(int(e) for e in edges))
    y = dual.y.copy()
    if C:
        Q = _incidence(g, Q)
        QC = Q[C]
        r = QC @ (dual.x0 + Q.T @ dual.y)
        y[C] -= pseudo_inverse(QC @ QC.T) @ r
    return DualState(y, dual.x0, dual.k + 1)


def dual_optimum(g: Graph, x0, Q=None) -> tuple[np.ndarray, float]:
    """Least-norm dual maximizer and the optimal value ``0.5 * ||x0 - x*||^2``."""
    Q = _incidence(g, Q)
    x0 = np.asarray(x0, dtype=float)
    y = -pseudo_inverse(Q @ Q.T) @ (Q @ x0)
    return y, dual_objective(y, Q, x0)
