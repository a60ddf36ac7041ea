"""Nesterov-accelerated gossip and its parameter schedules.

The iteration runs on the normalized incidence system (rows
``(e_i - e_j) / sqrt(2)``), for which ``A^T A = L / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import default_zero_tol, lambda_min_plus, pseudo_inverse, sym_eigen

__all__ = [
    "AccState",
    "AccSchedule",
    "schedule_option1",
    "schedule_option2",
    "compute_nu",
    "pencil_max",
    "step_accgossip",
]


@dataclass(frozen=True)
class AccState:
    x: np.ndarray
    v: np.ndarray
    k: int = 0

    @classmethod
    def initial(cls, c) -> "AccState":
        x = np.array(c, dtype=float)
        return cls(x, x.copy(), 0)


@dataclass(frozen=True)
class AccSchedule:
    """Per-iteration scalars ``(alpha_k, beta_k, gamma_k)``.

    Option 1 stores the sequences up to the point where ``gamma_k`` stops
    changing in floating point; later iterations reuse the last entry.
    Option 2 stores constants as length-1 arrays.
    """

    option: int
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    inputs: dict = field(default_factory=dict)

    def at(self, k: int) -> tuple[float, float, float]:
        t = min(k, self.alpha.size - 1)
        return float(self.alpha[t]), float(self.beta[t]), float(self.gamma[t])

    def arrays(self, k0: int, count: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Scalars for iterations ``k0 .. k0 + count - 1``."""
        idx = np.minimum(np.arange(k0, k0 + count), self.alpha.size - 1)
        return (np.ascontiguousarray(self.alpha[idx]), np.ascontiguousarray(self.beta[idx]),
                np.ascontiguousarray(self.gamma[idx]))


def schedule_option1(m: int, lam: float, K: int | None = None) -> AccSchedule:
    """Sequences from the largest root of ``g^2 - g/m = (1 - g*lam/m) g_prev^2``.

    Parameters
    ----------
    m : int
        Number of rows (edges).
    lam : float
        Lower estimate of ``lambda_min^+(A^T A)``.
    K : int, optional
        Horizon; by default the recursion runs until ``gamma`` is stationary.
    """
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if lam >= m * m:
        raise ValueError(f"lambda={lam} too large: need lambda < m^2 = {m * m}")
    horizon = K if K is not None else 10_000_000
    gam, prev = [], 0.0
    for k in range(horizon + 1):
        bcoef = (lam * prev * prev - 1.0) / m
        g = 0.5 * (-bcoef + math.sqrt(bcoef * bcoef + 4.0 * prev * prev))
        if not g > 0 or g * lam >= m:
            raise ValueError(f"schedule breaks down at k={k}: gamma={g}, lambda={lam}")
        gam.append(g)
        if K is None and abs(g - prev) <= 4.0 * np.finfo(float).eps * g:
            break
        prev = g
    gamma = np.array(gam)
    beta = 1.0 - gamma * lam / m
    alpha = (m - gamma * lam) / (gamma * (m * m - lam))
    alpha[0] = 1.0  # gamma_0 = 1/m exactly, so the first y is v; avoid rounding above 1
    return AccSchedule(1, alpha, beta, gamma, {"m": m, "lambda": lam})


def schedule_option2(lam_min_plus_W: float, nu: float) -> AccSchedule:
    """Constant scalars from ``lambda_min^+(W)`` with ``W = A^T A / m`` and ``nu``."""
    if not lam_min_plus_W > 0:
        raise ValueError(f"lambda_min^+(W) must be positive, got {lam_min_plus_W}")
    if not nu >= 1.0:
        raise ValueError(f"nu must be at least 1, got {nu}")
    beta = 1.0 - math.sqrt(lam_min_plus_W / nu)
    gamma = math.sqrt(1.0 / (lam_min_plus_W * nu))
    alpha = 1.0 / (1.0 + gamma * nu)
    return AccSchedule(2, np.array([alpha]), np.array([beta]), np.array([gamma]),
                       {"lambda_W": lam_min_plus_W, "nu": nu})


def pencil_max(N, C) -> float:
    """``max u^T N u / u^T C u`` over ``u`` in the range of PSD ``C``."""
    vals, vecs = sym_eigen(C)
    keep = vals > default_zero_tol(vals)
    U = vecs[:, keep] / np.sqrt(vals[keep])
    R = U.T @ N @ U
    return float(sym_eigen(0.5 * (R + R.T)).values[-1])


def compute_nu(A, check_bounds: bool = True) -> float:
    """Acceleration parameter ``nu`` of a row-normalized matrix.

    ``nu`` is the largest generalized Rayleigh quotient of
    ``sum_i a_i^T a_i (A^T A)^+ a_i^T a_i`` against ``A^T A / m`` on the
    range of ``A^T``.  The result is checked against
    ``1 <= nu <= min(m, 1 / lambda_min^+(W))`` up to ``1e-9``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    norms = np.linalg.norm(A, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-10):
        raise ValueError("rows of A must have unit Euclidean norm")
    m = A.shape[0]
    G = A.T @ A
    lev = np.einsum("ij,jk,ik->i", A, pseudo_inverse(G), A)
    M1 = (A.T * lev) @ A
    M2 = G / m
    nu = pencil_max(M1, M2)
    if check_bounds:
        upper = min(m, 1.0 / lambda_min_plus(M2))
        if not (1.0 - 1e-9 <= nu <= upper * (1.0 + 1e-9)):
            raise ArithmeticError(f"nu={nu} violates 1 <= nu <= {upper}")
    return nu


def step_accgossip(state: AccState, edge, sched: AccSchedule, k: int | None = None) -> AccState:
    """One accelerated gossip iteration on edge ``(i, j)`` using the scalars of iteration ``k``."""
    i, j = int(edge[0]), int(edge[1])
    a, b, g = sched.at(state.k if k is None else k)
    y = a * state.v + (1.0 - a) * state.x
    x = y.copy()
    v = b * state.v + (1.0 - b) * y
    h = (y[i] - y[j]) / 2.0
    x[i] = x[j] = (y[i] + y[j]) / 2.0
    v[i] -= g * h
    v[j] += g * h
    return AccState(x, v, state.k + 1)
