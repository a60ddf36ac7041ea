"""Theoretical rate calculators built from graph spectra.

For a sketch distribution over rows of an AC system ``A`` (incidence ``Q``
or Laplacian ``L``) and weights ``B = Diag(w)``, the expected projection
matrix is ``E[Z] = sum_S p_S A^T S (S^T A B^-1 A^T S)^+ S^T A`` and the
rate matrix is ``W = B^-1/2 E[Z] B^-1/2``.  The expected squared B-error of
sketch-and-project contracts by ``rho = 1 - omega (2 - omega) lambda_min^+(W)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import accel
from ._rng import make_rng
from .graph import Graph, UnionFind, incidence_matrix, laplacian
from .linalg import as_weights, default_zero_tol, lambda_min_plus, sym_eigen

__all__ = [
    "ENUMERATION_LIMIT",
    "ExpectedZ",
    "MomentumCheck",
    "ExactnessResult",
    "SpectralReport",
    "system_matrix",
    "row_probabilities",
    "expected_Z",
    "w_matrix",
    "rate_rho",
    "t_ave_bound",
    "acc_complexity",
    "check_exactness",
    "momentum_rate_check",
    "heavy_ball_beta",
    "algebraic_connectivity",
    "spectral_report",
]

ENUMERATION_LIMIT = 100_000
SYSTEMS = ("incidence", "laplacian")


def system_matrix(g: Graph, system: str = "incidence") -> np.ndarray:
    if system == "incidence":
        return incidence_matrix(g)
    if system == "laplacian":
        return laplacian(g)
    raise ValueError(f"unknown system {system!r}; choose from {SYSTEMS}")


def row_probabilities(A: np.ndarray, w=None, sampling: str = "weighted") -> np.ndarray:
    """Single-row sampling distribution.

    ``"weighted"`` draws row ``i`` with probability proportional to
    ``||B^-1/2 A_i||^2``; ``"uniform"`` draws every row equally.
    """
    if sampling == "uniform":
        return np.full(A.shape[0], 1.0 / A.shape[0])
    if sampling != "weighted":
        raise ValueError(f"unknown row sampling {sampling!r}")
    winv = 1.0 / as_weights(w, A.shape[1])
    p = (A * A) @ winv
    return p / p.sum()


@dataclass(frozen=True)
class ExpectedZ:
    """``E[Z]`` with provenance; ``stderr`` is set for Monte Carlo estimates."""

    matrix: np.ndarray
    method: str
    samples: int
    stderr: float | None = None

    @property
    def approximate(self) -> bool:
        return self.method == "monte-carlo"


def _normalize_sampling(sampling: str) -> str:
    aliases = {
        "weighted-edge": "weighted", "weighted-node": "weighted",
        "uniform-edge": "uniform", "uniform-node": "uniform",
    }
    return aliases.get(sampling, sampling)


def _component_term(n: int, ei, ej, subset, w: np.ndarray) -> np.ndarray:
    """``B (I - Pi_C)`` where ``Pi_C`` takes B-weighted means over components of ``C``."""
    uf = UnionFind(n)
    for e in subset:
        uf.union(int(ei[e]), int(ej[e]))
    groups: dict[int, list[int]] = {}
    for v in set(int(ei[e]) for e in subset) | set(int(ej[e]) for e in subset):
        groups.setdefault(uf.find(v), []).append(v)
    Z = np.zeros((n, n))
    for nodes in groups.values():
        idx = np.array(nodes)
        wv = w[idx]
        Z[np.ix_(idx, idx)] -= np.outer(wv, wv) / wv.sum()
        Z[idx, idx] += wv
    return Z


def expected_Z(g: Graph, system: str = "incidence", w=None, sampling: str = "weighted",
               tau: int = 1, probs=None, mc_samples: int = 100_000, seed=0) -> ExpectedZ:
    """Expected projection matrix of a row-sketch distribution.

    Parameters
    ----------
    g : Graph
    system : {"incidence", "laplacian"}
    w : array_like, optional
        Node weights; identity when omitted.
    sampling : str
        ``"weighted"`` (rows by B-norm), ``"uniform"`` (rows equally likely)
        or ``"uniform-edge-set"`` (uniform ``tau``-subsets of incidence rows).
        Protocol-style names such as ``"weighted-edge"`` are accepted.
    probs : array_like, optional
        Explicit single-row probabilities; overrides ``sampling``.
    mc_samples : int
        Monte Carlo budget when the number of ``tau``-subsets exceeds
        ``ENUMERATION_LIMIT``.
    """
    A = system_matrix(g, system)
    wv = as_weights(w, g.n)
    winv = 1.0 / wv
    sampling = _normalize_sampling(sampling)
    if probs is not None or sampling in ("weighted", "uniform"):
        p = row_probabilities(A, wv, sampling) if probs is None else np.asarray(probs, dtype=float)
        if p.shape != (A.shape[0],) or np.any(p < 0) or not math.isclose(p.sum(), 1.0, rel_tol=1e-9):
            raise ValueError("row probabilities must be a distribution over the rows")
        scale = (A * A) @ winv
        EZ = (A.T * (p / scale)) @ A
        return ExpectedZ(EZ, "closed-form", A.shape[0])
    if sampling != "uniform-edge-set":
        raise ValueError(f"unsupported sampling {sampling!r}")
    if system != "incidence":
        raise ValueError("edge-set sampling is defined on the incidence system only")
    m = g.m
    if not 1 <= tau <= m:
        raise ValueError(f"tau must lie in [1, {m}], got {tau}")
    ei, ej = g.ei, g.ej
    total = math.comb(m, tau)
    if total <= ENUMERATION_LIMIT:
        EZ = np.zeros((g.n, g.n))
        for C in combinations(range(m), tau):
            EZ += _component_term(g.n, ei, ej, C, wv)
        return ExpectedZ(EZ / total, "enumeration", total)
    rng = make_rng(seed)
    acc = np.zeros((g.n, g.n))
    acc_sq = np.zeros((g.n, g.n))
    for _ in range(mc_samples):
        C = rng.choice(m, tau, replace=False)
        Z = _component_term(g.n, ei, ej, C, wv)
        acc += Z
        acc_sq += Z * Z
    mean = acc / mc_samples
    var = np.maximum(acc_sq / mc_samples - mean * mean, 0.0)
    stderr = float(np.sqrt(var.max() / mc_samples))
    return ExpectedZ(mean, "monte-carlo", mc_samples, stderr)


def w_matrix(EZ, w=None) -> np.ndarray:
    """``W = B^-1/2 E[Z] B^-1/2``."""
    EZ = EZ.matrix if isinstance(EZ, ExpectedZ) else np.asarray(EZ, dtype=float)
    s = 1.0 / np.sqrt(as_weights(w, EZ.shape[0]))
    return EZ * np.outer(s, s)


def rate_rho(W, omega: float = 1.0) -> float:
    """``1 - omega (2 - omega) lambda_min^+(W)``; ``W`` may be a matrix or that eigenvalue."""
    if not 0.0 < omega < 2.0:
        raise ValueError(f"omega must lie in (0, 2), got {omega}")
    lam = float(W) if np.ndim(W) == 0 else lambda_min_plus(W)
    return 1.0 - omega * (2.0 - omega) * lam


def t_ave_bound(rho: float, eps: float) -> tuple[float, float]:
    """Averaging-time bounds ``3 log(1/eps) / log(1/rho)`` and ``3 log(1/eps) / (1 - rho)``."""
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    num = 3.0 * math.log(1.0 / eps)
    return num / math.log(1.0 / rho), num / (1.0 - rho)


def acc_complexity(m: int, lam_min_plus_ATA: float, nu: float) -> tuple[float, float]:
    """Leading factors ``m / sqrt(lam)`` and ``sqrt(nu m / lam)`` of the two accelerated schedules."""
    if m < 1 or not lam_min_plus_ATA > 0 or not nu > 0:
        raise ValueError("m, lambda and nu must be positive")
    return m / math.sqrt(lam_min_plus_ATA), math.sqrt(nu * m / lam_min_plus_ATA)


@dataclass(frozen=True)
class ExactnessResult:
    exact: bool
    null_dim_EZ: int
    null_dim_A: int
    min_positive_eig: float

    def __bool__(self) -> bool:
        return self.exact


def _null_dim(M: np.ndarray) -> tuple[int, np.ndarray]:
    vals, vecs = sym_eigen(M)
    tol = default_zero_tol(vals)
    return int(np.sum(vals <= tol)), vals[vals > tol]


def check_exactness(g: Graph, system: str = "incidence", w=None, sampling: str = "weighted",
                    tau: int = 1, probs=None, EZ: ExpectedZ | None = None) -> ExactnessResult:
    """Whether ``Null(E[Z]) == Null(A)``.

    ``Null(A)`` is always contained in ``Null(E[Z])``, so equality of the
    two dimensions decides the question.
    """
    A = system_matrix(g, system)
    if EZ is None:
        EZ = expected_Z(g, system, w, sampling, tau, probs)
    dz, posz = _null_dim(EZ.matrix)
    da, _ = _null_dim(A.T @ A)
    return ExactnessResult(dz == da, dz, da, float(posz[0]) if posz.size else 0.0)


@dataclass(frozen=True)
class MomentumCheck:
    a1: float
    a2: float
    q: float
    admissible: bool
    in_accelerated_range: bool


def momentum_rate_check(lam_min: float, lam_max: float, omega: float, beta: float) -> MomentumCheck:
    """Heavy-ball contraction bound ``q`` and the two admissibility flags.

    ``admissible`` is ``a1 + a2 < 1``.  ``in_accelerated_range`` tests
    ``(1 - sqrt(omega lam_min))^2 < beta < 1`` with ``omega <= 1 / lam_max``.
    The bound is evaluated for any positive ``omega`` (``1 / lam_max`` can
    reach 2); the flags carry the admissibility verdict.
    """
    if not omega > 0.0:
        raise ValueError(f"omega must be positive, got {omega}")
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    a1 = 1.0 + 3.0 * beta + 2.0 * beta * beta - (omega * (2.0 - omega) + omega * beta) * lam_min
    a2 = beta + 2.0 * beta * beta + omega * beta * lam_max
    q = 0.5 * (a1 + math.sqrt(a1 * a1 + 4.0 * a2))
    acc_range = (1.0 - math.sqrt(omega * lam_min)) ** 2 < beta < 1.0 and omega <= 1.0 / lam_max
    return MomentumCheck(a1, a2, q, a1 + a2 < 1.0, acc_range)


def heavy_ball_beta(lam_min: float) -> float:
    """Heavy-ball momentum ``(1 - sqrt(0.99 lam_min))^2`` paired with ``omega = 1``."""
    return (1.0 - math.sqrt(0.99 * lam_min)) ** 2


def algebraic_connectivity(g: Graph) -> float:
    return lambda_min_plus(laplacian(g))


@dataclass(frozen=True)
class SpectralReport:
    """Spectral summary of a (graph, system, weights, sampling, stepsize) tuple."""

    lambda_min_plus: float
    lambda_max: float
    algebraic_connectivity: float
    rho: float
    omega: float
    nu: float | None = None
    approximate: bool = False
    notes: dict = field(default_factory=dict)

    def t_ave_bound(self, eps: float) -> tuple[float, float]:
        return t_ave_bound(self.rho, eps)

    def as_items(self, eps: float = 0.01) -> list[tuple[str, object]]:
        tight, loose = self.t_ave_bound(eps) if 0 < self.rho < 1 else (math.inf, math.inf)
        items = [
            ("lambda_min_plus", self.lambda_min_plus),
            ("lambda_max", self.lambda_max),
            ("algebraic_connectivity", self.algebraic_connectivity),
            ("omega", self.omega),
            ("rho", self.rho),
            ("nu", self.nu),
            ("t_ave_eps", eps),
            ("t_ave_bound", tight),
            ("t_ave_bound_loose", loose),
            ("approximate", self.approximate),
        ]
        items.extend(self.notes.items())
        return items


def spectral_report(g: Graph, system: str = "incidence", w=None, sampling: str = "weighted",
                    omega: float = 1.0, tau: int = 1, with_nu: bool = True) -> SpectralReport:
    """Rates for simple and block gossip plus the accelerated complexity factors."""
    EZ = expected_Z(g, system, w, sampling, tau)
    W = w_matrix(EZ, w)
    eig = sym_eigen(W)
    lmin = lambda_min_plus(W, eig=eig)
    lmax = float(eig.values[-1])
    alpha = algebraic_connectivity(g)
    notes: dict = {"system": system, "sampling": sampling, "tau": tau, "ez_method": EZ.method}
    if EZ.stderr is not None:
        notes["ez_stderr"] = EZ.stderr
    nu = None
    if with_nu:
        An = incidence_matrix(g, normalized=True)
        nu = accel.compute_nu(An)
        lam_ata = alpha / 2.0
        opt1, opt2 = acc_complexity(g.m, lam_ata, nu)
        notes.update({"acc_lambda_ATA": lam_ata, "acc_option1_factor": opt1, "acc_option2_factor": opt2,
                      "pairwise_factor": 2.0 * g.m / alpha})
    return SpectralReport(lmin, lmax, alpha, rate_rho(lmin, omega), omega, nu, EZ.approximate, notes)
