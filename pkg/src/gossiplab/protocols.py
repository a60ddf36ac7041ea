"""Single-step transitions of the primal gossip protocols.

Each step takes a ``GossipState`` and a structural sketch (an edge, a node
or a set of edges) and returns a new state; inputs are never mutated.
Sketch matrices are never formed: every update uses its closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .graph import Graph, connected_components
from .linalg import as_weights, pseudo_inverse

__all__ = [
    "PROTOCOLS",
    "SAMPLING_MODES",
    "GossipState",
    "ProtocolConfig",
    "SketchSample",
    "edge_probabilities",
    "node_probabilities",
    "sample",
    "sample_batch",
    "step_pairwise_weighted",
    "step_laplacian_rk",
    "step_laplacian_block",
    "step_block",
    "step_mrk",
    "step_shift_register",
    "step_gge",
    "step_kaczmarz_motzkin",
]

PROTOCOLS = (
    "pairwise",        # scaled RK on the incidence system
    "laplacian",       # scaled RK on the Laplacian system
    "block",           # RBK / mRBK on random edge sets
    "mrk",             # heavy-ball RK, one edge per step
    "shift-register",  # two-register gossip, momentum only at the active pair
    "gge",             # greedy gossip with eavesdropping
    "accgossip",       # Nesterov-accelerated gossip
    "rnm",             # dual randomized Newton method on edge sets
)

SAMPLING_MODES = ("uniform-edge", "weighted-edge", "uniform-node", "weighted-node", "uniform-edge-set")


@dataclass(frozen=True)
class GossipState:
    """Node values ``x`` at iteration ``k`` and the previous iterate ``x_prev``."""

    x: np.ndarray
    x_prev: np.ndarray
    k: int = 0

    def __post_init__(self):
        if self.x.shape != self.x_prev.shape or self.x.ndim != 1:
            raise ValueError("x and x_prev must be vectors of equal length")

    @classmethod
    def initial(cls, c) -> "GossipState":
        x = np.array(c, dtype=float)
        return cls(x, x.copy(), 0)

    @property
    def n(self) -> int:
        return self.x.size

    def advance(self, x_new: np.ndarray, x_prev: np.ndarray | None = None) -> "GossipState":
        return GossipState(x_new, self.x.copy() if x_prev is None else x_prev, self.k + 1)


@dataclass(frozen=True)
class ProtocolConfig:
    """Protocol id with stepsize ``omega``, momentum ``beta`` and block size ``tau``.

    ``allow_divergent`` lifts the ``omega in (0, 2)`` and ``beta in [0, 1)``
    guards for experiments that probe instability on purpose.
    """

    protocol: str = "pairwise"
    omega: float = 1.0
    beta: float = 0.0
    tau: int = 1
    sampling: str = "uniform-edge"
    seed: int = 0
    allow_divergent: bool = False
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}; choose from {PROTOCOLS}")
        if self.sampling not in SAMPLING_MODES:
            raise ValueError(f"unknown sampling mode {self.sampling!r}; choose from {SAMPLING_MODES}")
        if not self.allow_divergent:
            if not 0.0 < self.omega < 2.0:
                raise ValueError(f"omega must lie in (0, 2), got {self.omega}")
            if not 0.0 <= self.beta < 1.0:
                raise ValueError(f"beta must lie in [0, 1), got {self.beta}")
        if self.tau < 1:
            raise ValueError(f"tau must be at least 1, got {self.tau}")
        node_mode = self.sampling in ("uniform-node", "weighted-node")
        if self.protocol in ("laplacian", "gge") and not node_mode:
            raise ValueError(f"{self.protocol} samples nodes; use uniform-node or weighted-node")
        if self.protocol not in ("laplacian", "gge") and node_mode:
            raise ValueError(f"{self.protocol} samples edges, not nodes")
        if self.protocol in ("block", "rnm") and self.sampling != "uniform-edge-set":
            object.__setattr__(self, "sampling", "uniform-edge-set")

    def with_(self, **kw) -> "ProtocolConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class SketchSample:
    """Structural sketch: ``kind`` is ``"edge"``, ``"node"`` or ``"edge-set"``."""

    kind: str
    index: int = -1
    indices: tuple[int, ...] = ()


def edge_probabilities(g: Graph, w=None) -> np.ndarray:
    """Row probabilities proportional to ``1/w_i + 1/w_j`` on the incidence system."""
    winv = 1.0 / as_weights(w, g.n)
    p = winv[g.ei] + winv[g.ej]
    return p / p.sum()


def node_probabilities(g: Graph, w=None) -> np.ndarray:
    """Row probabilities ``||B^-1/2 L_i||^2`` normalized, for the Laplacian system."""
    winv = 1.0 / as_weights(w, g.n)
    d = g.degrees.astype(float)
    indptr, nbr, _ = g.csr
    p = d * d * winv
    np.add.at(p, np.repeat(np.arange(g.n), np.diff(indptr)), winv[nbr])
    return p / p.sum()


def sample_batch(g: Graph, config: ProtocolConfig, rng: np.random.Generator, size: int, w=None) -> np.ndarray:
    """Draw ``size`` sketches at once.

    Returns edge indices ``(size,)``, node indices ``(size,)`` or, for edge
    sets, an ``(size, tau)`` array whose rows are uniform ``tau``-subsets.
    """
    mode = config.sampling
    if mode == "uniform-edge":
        return rng.integers(0, g.m, size=size, dtype=np.int64)
    if mode == "weighted-edge":
        return rng.choice(g.m, size=size, p=edge_probabilities(g, w)).astype(np.int64)
    if mode == "uniform-node":
        return rng.integers(0, g.n, size=size, dtype=np.int64)
    if mode == "weighted-node":
        return rng.choice(g.n, size=size, p=node_probabilities(g, w)).astype(np.int64)
    tau = config.tau
    if tau > g.m:
        raise ValueError(f"tau={tau} exceeds the edge count m={g.m}")
    if tau == g.m:
        return np.tile(np.arange(g.m, dtype=np.int64), (size, 1))
    keys = rng.random((size, g.m))
    return np.ascontiguousarray(np.argpartition(keys, tau - 1, axis=1)[:, :tau], dtype=np.int64)


def sample(g: Graph, config: ProtocolConfig, rng: np.random.Generator, w=None) -> SketchSample:
    draw = sample_batch(g, config, rng, 1, w)[0]
    if config.sampling == "uniform-edge-set":
        return SketchSample("edge-set", indices=tuple(sorted(int(e) for e in draw)))
    if config.sampling in ("uniform-node", "weighted-node"):
        return SketchSample("node", index=int(draw))
    return SketchSample("edge", index=int(draw))


def _pair(edge) -> tuple[int, int]:
    i, j = int(edge[0]), int(edge[1])
    if i == j:
        raise ValueError("edge endpoints must differ")
    return i, j


def step_pairwise_weighted(state: GossipState, edge, omega: float = 1.0, w=None) -> GossipState:
    """Scaled RK on incidence row ``(i, j)``; ``sum_l w_l x_l`` is invariant."""
    i, j = _pair(edge)
    wv = as_weights(w, state.n)
    x = state.x.copy()
    xi, xj, wi, wj = x[i], x[j], wv[i], wv[j]
    d = xi - xj
    x[i] = xi - omega * wj / (wi + wj) * d
    x[j] = xj + omega * wi / (wi + wj) * d
    return state.advance(x)


def step_laplacian_rk(state: GossipState, g: Graph, node: int, omega: float = 1.0, w=None) -> GossipState:
    """Scaled RK on Laplacian row ``node``: moves the node and all its neighbors."""
    wv = as_weights(w, state.n)
    indptr, nbr, _ = g.csr
    nb = nbr[indptr[node]:indptr[node + 1]]
    x = state.x.copy()
    di = len(nb)
    r = di * x[node]
    den = di * di / wv[node]
    for j in nb:
        r -= x[j]
        den += 1.0 / wv[j]
    coef = omega * r / den
    x[node] = x[node] - coef * di / wv[node]
    for j in nb:
        x[j] = x[j] + coef / wv[j]
    return state.advance(x)


def step_laplacian_block(state: GossipState, g: Graph, nodes, omega: float = 1.0, w=None) -> GossipState:
    """Block sketch-and-project on the Laplacian rows ``nodes`` (dense algebra)."""
    from .graph import laplacian

    rows = sorted(set(int(v) for v in nodes))
    if not rows:
        return state.advance(state.x.copy())
    winv = 1.0 / as_weights(w, state.n)
    LS = laplacian(g)[rows]
    LB = LS * winv
    x = state.x - omega * LB.T @ (pseudo_inverse(LB @ LS.T) @ (LS @ state.x))
    return state.advance(x)


def step_block(state: GossipState, g: Graph, edges, omega: float = 1.0, beta: float = 0.0,
               w=None) -> GossipState:
    """Block gossip with momentum on the edge set ``edges``.

    Every node moves to ``omega * avg + (1 - omega) * x + beta * (x - x_prev)``
    where ``avg`` is the B-weighted mean of its component in the subgraph of
    selected edges (a singleton's own value when untouched).
    """
    wv = as_weights(w, state.n)
    part = connected_components(g, edges)
    x, xp = state.x, state.x_prev
    num = np.zeros(part.q)
    den = np.zeros(part.q)
    np.add.at(num, part.component_of, wv * x)
    np.add.at(den, part.component_of, wv)
    avg = num[part.component_of] / den[part.component_of]
    x_new = x + beta * (x - xp) + omega * (avg - x)
    return state.advance(x_new)


def step_mrk(state: GossipState, edge, omega: float = 1.0, beta: float = 0.0, w=None) -> GossipState:
    """Heavy-ball RK on edge ``(i, j)``; idle nodes still take the momentum term."""
    i, j = _pair(edge)
    wv = as_weights(w, state.n)
    x, xp = state.x, state.x_prev
    x_new = x + beta * (x - xp)
    wi, wj = wv[i], wv[j]
    d = x[i] - x[j]
    x_new[i] -= omega * wj / (wi + wj) * d
    x_new[j] += omega * wi / (wi + wj) * d
    return state.advance(x_new)


def step_shift_register(state: GossipState, edge, omega: float) -> GossipState:
    """Shift-register gossip; only the active pair refreshes ``x_prev``.

    Raises
    ------
    ValueError
        If ``omega`` lies outside ``[1, 2)``.
    """
    if not 1.0 <= omega < 2.0:
        raise ValueError(f"shift-register gossip needs omega in [1, 2), got {omega}")
    i, j = _pair(edge)
    x, xp = state.x.copy(), state.x_prev.copy()
    xi, xj = x[i], x[j]
    h = omega * (xi + xj) / 2.0
    x[i] = h + (1.0 - omega) * xp[i]
    x[j] = h + (1.0 - omega) * xp[j]
    xp[i] = xi
    xp[j] = xj
    return state.advance(x, xp)


def _pick(count: int, rng, u) -> int:
    if u is None:
        u = 0.0 if rng is None else float(rng.random())
    if not 0.0 <= u < 1.0:
        raise ValueError(f"tie-break draw must lie in [0, 1), got {u}")
    return int(u * count)


def _rk_row(x: np.ndarray, a: np.ndarray, r: float) -> np.ndarray:
    return x - (r / float(a @ a)) * a


def step_gge(state: GossipState, g: Graph, node: int, rng=None, u: float | None = None) -> GossipState:
    """Greedy gossip: ``node`` averages with its maximally different neighbor.

    Ties among maximizers are broken by ``u`` (or a draw from ``rng``),
    choosing the ``floor(u * count)``-th maximizer in incident-edge order.
    """
    indptr, nbr, eid = g.csr
    lo, hi = indptr[node], indptr[node + 1]
    if lo == hi:
        raise ValueError(f"node {node} has no neighbors")
    x = state.x
    gaps = np.abs(x[node] - x[nbr[lo:hi]])
    best = np.flatnonzero(gaps == gaps.max())
    e = int(eid[lo + best[_pick(best.size, rng, u)]])
    a, b = g.edges[e]
    x = x.copy()
    xa, xb = x[a], x[b]
    r = xa - xb
    x[a] = xa - r / 2.0
    x[b] = xb + r / 2.0
    return state.advance(x)


def step_kaczmarz_motzkin(state: GossipState, P, A, b=None, rng=None, u: float | None = None) -> GossipState:
    """Motzkin-style RK: project onto the row of ``P`` with the largest ``|A_t x - b_t|``.

    Ties among maximizers are broken by ``u`` as in ``step_gge``, in the order
    the rows appear in ``P``.
    """
    P = [int(t) for t in P]
    if not P:
        raise ValueError("constraint sample is empty")
    A = np.asarray(A, dtype=float)
    x = state.x
    res = np.array([A[t] @ x for t in P])
    if b is not None:
        res = res - np.asarray(b, dtype=float)[P]
    mag = np.abs(res)
    best = np.flatnonzero(mag == mag.max())
    pos = int(best[_pick(best.size, rng, u)])
    return state.advance(_rk_row(x, A[P[pos]], float(res[pos])))
