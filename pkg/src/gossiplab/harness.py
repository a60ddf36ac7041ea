"""Experiment runner: configure a gossip run, iterate, record, fit and export.

A run draws its initial values and its sketch stream from two independent
children of ``config.seed``, so identical configs give byte-identical
trajectories.  The hot loop executes inside the kernel backend in chunks;
the dual method runs as a plain Python loop.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import _backend
from ._rng import make_rng
from .accel import AccSchedule, schedule_option1, schedule_option2
from .graph import (Graph, incidence_matrix, make_complete, make_cycle, make_grid2d,
                    make_path, make_rgg, read_edgelist)
from .linalg import lambda_min_plus, pseudo_inverse
from .protocols import ProtocolConfig, sample_batch
from .rates import algebraic_connectivity, check_exactness, expected_Z, rate_rho, w_matrix

__all__ = [
    "ExperimentConfig",
    "Trajectory",
    "RateFit",
    "SweepTable",
    "DivergenceError",
    "MassAuditError",
    "ExactnessError",
    "load_config",
    "parse_config_text",
    "build_graph",
    "initial_values",
    "node_weights",
    "run_experiment",
    "run_seeds",
    "iterations_to_tolerance",
    "fit_linear_rate",
    "median_trajectory",
    "sweep_block_size",
    "empirical_averaging_time",
    "compare_protocols",
    "format_csv",
    "export_csv",
    "read_trajectory_csv",
    "read_sweep_csv",
]

CHUNK = 8192
BLOCK_CHUNK_ENTRIES = 2_000_000
MASS_TOL = 1e-9
TRAJECTORY_HEADER = ("k", "rel_error_sq")
SWEEP_HEADER = ("tau", "iterations", "reference_l_over_tau")


class DivergenceError(RuntimeError):
    """Relative squared error exceeded ``1e6`` (or became non-finite)."""

    def __init__(self, message: str, trajectory: "Trajectory"):
        super().__init__(message)
        self.trajectory = trajectory


class MassAuditError(RuntimeError):
    """A conserved quantity drifted beyond the audit tolerance."""


class ExactnessError(ValueError):
    """The sketch distribution does not recover the solution set."""


# --------------------------------------------------------------------- config

@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one run.

    Flat key names (as used in config files and CLI flags) map to fields by
    replacing ``.`` with ``_``; e.g. ``graph.family`` is ``graph_family``.
    """

    graph_family: str = "cycle"
    graph_n: int = 30
    graph_rows: int = 10
    graph_cols: int = 10
    graph_radius: float | None = None
    graph_seed: int = 0
    graph_path: str | None = None
    protocol: str = "pairwise"
    omega: float = 1.0
    beta: float = 0.0
    tau: int = 1
    sampling: str | None = None
    weights: str = "identity"
    init: str = "gaussian"
    epsilon: float = 1e-6
    error_metric: str = "norm_sq"
    max_iters: int = 1_000_000
    seed: int = 0
    record_stride: int | None = None
    acc_option: int = 1
    acc_nu: str = "m"
    acc_lambda: float | None = None
    override: bool = False
    out: str | None = None

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.error_metric not in ("norm", "norm_sq"):
            raise ValueError(f"error_metric must be 'norm' or 'norm_sq', got {self.error_metric!r}")
        if self.init not in ("gaussian", "uniform", "integers"):
            raise ValueError(f"init must be gaussian, uniform or integers, got {self.init!r}")
        if self.record_stride is not None and self.record_stride < 1:
            raise ValueError("record_stride must be positive")
        if self.acc_option not in (1, 2):
            raise ValueError(f"acc.option must be 1 or 2, got {self.acc_option}")

    @property
    def tolerance(self) -> float:
        """Stopping threshold on the squared relative error."""
        return self.epsilon if self.error_metric == "norm_sq" else self.epsilon ** 2

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    def graph_key(self) -> tuple:
        return (self.graph_family, self.graph_n, self.graph_rows, self.graph_cols,
                self.graph_radius, self.graph_seed, self.graph_path)

    def to_flat(self) -> dict[str, object]:
        out = {}
        for f in fields(self):
            out[_flat_name(f.name)] = getattr(self, f.name)
        return out

    @classmethod
    def from_flat(cls, items: dict, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        """Build from flat ``key -> value`` pairs (strings are coerced by field type)."""
        base = base or cls()
        known = {f.name: f for f in fields(cls)}
        kw = {}
        for key, raw in items.items():
            name = key.replace(".", "_").replace("-", "_")
            if name not in known:
                raise KeyError(f"unknown config key {key!r}")
            kw[name] = _coerce(name, raw)
        return replace(base, **kw)


_INT_FIELDS = {"graph_n", "graph_rows", "graph_cols", "graph_seed", "tau", "max_iters", "seed",
               "record_stride", "acc_option"}
_FLOAT_FIELDS = {"graph_radius", "omega", "beta", "epsilon", "acc_lambda"}
_BOOL_FIELDS = {"override"}


def _flat_name(name: str) -> str:
    for prefix in ("graph_", "acc_"):
        if name.startswith(prefix):
            return prefix[:-1] + "." + name[len(prefix):]
    return name


def _coerce(name: str, raw):
    if raw is None or not isinstance(raw, str):
        return raw
    text = raw.strip()
    if text.lower() in ("none", "") and name not in ("weights",):
        return None
    if name in _INT_FIELDS:
        return int(float(text)) if "e" in text.lower() else int(text)
    if name in _FLOAT_FIELDS:
        return float(text)
    if name in _BOOL_FIELDS:
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    return text


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    items = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        items[key] = value
    return items


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            items = parse_config_text(fh.read())
    except OSError as exc:
        raise OSError(f"cannot read config {os.fspath(path)!r}: {exc}") from exc
    items.update(overrides or {})
    return ExperimentConfig.from_flat(items)


# ------------------------------------------------------------------ builders

def build_graph(config: ExperimentConfig) -> Graph:
    fam = config.graph_family
    if fam == "cycle":
        return make_cycle(config.graph_n)
    if fam == "path":
        return make_path(config.graph_n)
    if fam == "complete":
        return make_complete(config.graph_n)
    if fam == "grid":
        return make_grid2d(config.graph_rows, config.graph_cols)
    if fam == "rgg":
        return make_rgg(config.graph_n, config.graph_radius, seed=config.graph_seed)
    if fam == "file":
        if not config.graph_path:
            raise ValueError("graph.family=file needs graph.path")
        return read_edgelist(config.graph_path)
    raise ValueError(f"unknown graph family {fam!r}")


def node_weights(config: ExperimentConfig, g: Graph) -> np.ndarray:
    spec = config.weights.strip()
    if spec == "identity":
        return np.ones(g.n)
    if spec == "degree":
        w = g.degrees.astype(float)
        if np.any(w <= 0):
            raise ValueError("degree weights need every node to have a neighbor")
        return w
    if spec.startswith("custom:"):
        w = np.array([float(t) for t in spec[len("custom:"):].split(",")])
        if w.size != g.n or np.any(w <= 0):
            raise ValueError(f"custom weights need {g.n} positive values")
        return w
    raise ValueError(f"unknown weights spec {spec!r}; use identity, degree or custom:w1,w2,...")


def _streams(seed) -> tuple[np.random.Generator, np.random.Generator]:
    ss = np.random.SeedSequence(seed)
    a, b = ss.spawn(2)
    return make_rng(a), make_rng(b)


def initial_values(config: ExperimentConfig, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
    if config.init == "integers":
        return np.arange(1, n + 1, dtype=float)
    rng = rng if rng is not None else _streams(config.seed)[0]
    if config.init == "gaussian":
        return rng.standard_normal(n)
    return rng.random(n)


def default_sampling(protocol: str, uniform_weights: bool) -> str:
    if protocol in ("block", "rnm"):
        return "uniform-edge-set"
    if protocol == "gge":
        return "uniform-node"
    if protocol == "laplacian":
        return "weighted-node"
    if protocol == "pairwise" and not uniform_weights:
        return "weighted-edge"
    return "uniform-edge"


def protocol_config(config: ExperimentConfig, uniform_weights: bool = True) -> ProtocolConfig:
    sampling = config.sampling or default_sampling(config.protocol, uniform_weights)
    return ProtocolConfig(config.protocol, config.omega, config.beta, config.tau, sampling,
                          config.seed, allow_divergent=config.override)


# ----------------------------------------------------------------- results

@dataclass
class Trajectory:
    """Recorded ``(k, rel_error_sq)`` samples of one run."""

    k: np.ndarray
    rel_error_sq: np.ndarray
    converged: bool
    status: str
    config: dict = field(default_factory=dict)
    rho: float | None = None
    final_x: np.ndarray | None = None
    mass_drift: float = 0.0

    @property
    def terminal_k(self) -> int:
        return int(self.k[-1])

    @property
    def terminal_error(self) -> float:
        return float(self.rel_error_sq[-1])

    @property
    def iterations(self) -> float:
        """Iterations to tolerance, or ``inf`` if the budget ran out first."""
        return float(self.terminal_k) if self.converged else math.inf

    def __len__(self) -> int:
        return int(self.k.size)


@dataclass(frozen=True)
class RateFit:
    factor: float
    truncated: bool
    points: int
    slope: float


@dataclass
class SweepTable:
    tau: np.ndarray
    iterations: np.ndarray
    reference: np.ndarray
    per_seed: dict = field(default_factory=dict)


# --------------------------------------------------------------- exactness

_EXACT_CACHE: dict = {}
_RHO_CACHE: dict = {}


def _system_of(protocol: str) -> str:
    return "laplacian" if protocol == "laplacian" else "incidence"


def _sketch_family(pc: ProtocolConfig) -> str:
    # Uniform tau-subsets cover every edge, so their expected projection has
    # the same null space as uniform single-edge sampling.
    if pc.sampling == "uniform-edge-set":
        return "uniform"
    return {"weighted-edge": "weighted", "weighted-node": "weighted",
            "uniform-edge": "uniform", "uniform-node": "uniform"}[pc.sampling]


def _exactness(g: Graph, pc: ProtocolConfig, w: np.ndarray):
    key = (g.n, g.edges, _system_of(pc.protocol), _sketch_family(pc), w.tobytes())
    if key not in _EXACT_CACHE:
        _EXACT_CACHE[key] = check_exactness(g, key[2], w, key[3])
    return _EXACT_CACHE[key]


def _theory_rho(g: Graph, pc: ProtocolConfig, w: np.ndarray) -> float | None:
    if pc.protocol not in ("pairwise", "laplacian", "block", "rnm") or not 0 < pc.omega < 2:
        return None
    if pc.protocol == "block" and pc.beta != 0.0:
        return None
    if pc.protocol in ("block", "rnm"):
        if math.comb(g.m, pc.tau) > 20_000:
            return None
        key = (g.n, g.edges, "set", pc.tau, w.tobytes())
        if key not in _RHO_CACHE:
            _RHO_CACHE[key] = lambda_min_plus(w_matrix(expected_Z(g, "incidence", w, "uniform-edge-set",
                                                                  pc.tau), w))
    else:
        key = (g.n, g.edges, _system_of(pc.protocol), _sketch_family(pc), w.tobytes())
        if key not in _RHO_CACHE:
            _RHO_CACHE[key] = lambda_min_plus(w_matrix(expected_Z(g, key[2], w, key[3]), w))
    return rate_rho(_RHO_CACHE[key], pc.omega)


# ------------------------------------------------------------------ runner

@lru_cache(maxsize=32)
def _option1(m: int, lam: float) -> AccSchedule:
    return schedule_option1(m, lam)


@lru_cache(maxsize=32)
def _connectivity(n: int, edges: tuple) -> float:
    return algebraic_connectivity(Graph(n, edges))


def _acc_schedule(config: ExperimentConfig, g: Graph) -> AccSchedule:
    lam_ata = config.acc_lambda
    if lam_ata is None:
        lam_ata = _connectivity(g.n, g.edges) / 2.0
    if config.acc_option == 1:
        return _option1(g.m, lam_ata)
    spec = str(config.acc_nu).strip().lower()
    if spec == "m":
        nu = float(g.m)
    elif spec == "exact":
        from .accel import compute_nu
        nu = compute_nu(incidence_matrix(g, normalized=True))
    else:
        nu = float(spec)
    return schedule_option2(lam_ata / g.m, nu)


def _validate(config: ExperimentConfig, pc: ProtocolConfig, w: np.ndarray, g: Graph):
    uniform = bool(np.all(w == 1.0))
    if pc.protocol in ("shift-register", "gge", "accgossip", "rnm") and not uniform:
        raise ValueError(f"{pc.protocol} runs with identity weights only")
    if pc.protocol == "rnm" and pc.omega != 1.0:
        raise ValueError("the dual method runs with omega = 1")
    if pc.protocol == "shift-register" and not 1.0 <= pc.omega < 2.0:
        raise ValueError(f"shift-register gossip needs omega in [1, 2), got {pc.omega}")
    if pc.protocol in ("block", "rnm") and pc.tau > g.m:
        raise ValueError(f"tau={pc.tau} exceeds m={g.m}")
    if pc.protocol == "gge" and np.any(g.degrees == 0):
        raise ValueError("greedy gossip needs every node to have a neighbor")


def _mass_reference(protocol: str, omega: float, c: np.ndarray, w: np.ndarray) -> tuple[float, float]:
    if protocol == "shift-register":
        ref = (2.0 - omega) * float(c.sum())
        scale = (2.0 - omega) * float(np.abs(c).sum())
    else:
        ref = float(w @ c)
        scale = float(w @ np.abs(c))
    denom = abs(ref) if abs(ref) >= 1e-3 * scale else scale
    return ref, denom


def run_experiment(config: ExperimentConfig, graph: Graph | None = None, c=None,
                   backend=None) -> Trajectory:
    """Run one experiment to tolerance or budget.

    Parameters
    ----------
    config : ExperimentConfig
    graph : Graph, optional
        Overrides the graph described by ``config``.
    c : array_like, optional
        Overrides the initial values described by ``config``.
    backend : str or module, optional
        Kernel backend (``"cython"`` or ``"python"``); defaults to the
        import-time selection.

    Raises
    ------
    ExactnessError
        If the sketch distribution is not exact and ``override`` is off.
    DivergenceError
        If the squared relative error exceeds ``1e6``.
    MassAuditError
        If the conserved sum drifts by more than ``1e-9`` relative.
    """
    kern = _backend.get(backend)
    g = graph if graph is not None else build_graph(config)
    w = node_weights(config, g)
    uniform = bool(np.all(w == 1.0))
    pc = protocol_config(config, uniform)
    _validate(config, pc, w, g)
    init_rng, samp_rng = _streams(config.seed)
    c = initial_values(config, g.n, init_rng) if c is None else np.array(c, dtype=float)
    if c.size != g.n:
        raise ValueError(f"initial vector has length {c.size}, graph has {g.n} nodes")
    xs = np.full(g.n, float(w @ c) / float(w.sum()))
    err0 = float(w @ (c - xs) ** 2)
    if not err0 > 0:
        raise ValueError("initial values already at consensus; the relative error is undefined")
    if not config.override and pc.protocol != "gge":
        ex = _exactness(g, pc, w)
        if not ex.exact:
            raise ExactnessError(f"sketch distribution is not exact: null(E[Z]) has dimension "
                                 f"{ex.null_dim_EZ}, null(A) has {ex.null_dim_A}")
    stride = config.record_stride or (1 if g.n <= 100 else math.ceil(config.max_iters / 5000))
    echo = config.to_flat()
    echo.update({"graph.m": g.m, "sampling": pc.sampling, "backend": getattr(kern, "__name__", "")})
    rho = _theory_rho(g, pc, w)

    if pc.protocol == "rnm":
        ks, es, ms, status, x = _run_rnm(g, pc, c, xs, err0, config, samp_rng, stride)
    else:
        ks, es, ms, status, x = _run_kernel(kern, g, pc, config, w, c, xs, err0, samp_rng, stride)

    ref, denom = _mass_reference(pc.protocol, pc.omega, c, w)
    drift = float(np.max(np.abs(ms - ref)) / denom) if ms.size else 0.0
    traj = Trajectory(ks, es, status == 1, {0: "budget", 1: "converged", 2: "diverged"}[status],
                      echo, rho, x, drift)
    if status == 2:
        raise DivergenceError(f"{pc.protocol} diverged at k={traj.terminal_k}: relative squared "
                              f"error {traj.terminal_error:.3e}", traj)
    if drift > MASS_TOL and not config.override:
        raise MassAuditError(f"{pc.protocol}: conserved sum drifted by {drift:.3e} (relative)")
    return traj


def _run_kernel(kern, g: Graph, pc: ProtocolConfig, config: ExperimentConfig, w, c, xs, err0,
                rng, stride):
    n, budget, tol = g.n, config.max_iters, config.tolerance
    x = c.copy()
    aux = c.copy()
    ei, ej = g.ei, g.ej
    proto = pc.protocol
    chunk = CHUNK
    if proto == "block":
        chunk = max(1, min(CHUNK, BLOCK_CHUNK_ENTRIES // max(g.m, 1)))
    sched = _acc_schedule(config, g) if proto == "accgossip" else None
    indptr, nbr, eid = g.csr
    cap = budget // stride + 4
    rec_k = np.zeros(cap, dtype=np.int64)
    rec_e = np.zeros(cap)
    rec_m = np.zeros(cap)
    rec_k[0], rec_e[0] = 0, 1.0
    rec_m[0] = _mass_reference(proto, pc.omega, c, w)[0]
    nrec = 1
    k = 0
    status = 0
    rel = 1.0
    while k < budget and status == 0:
        size = min(chunk, budget - k)
        samples = sample_batch(g, pc, rng, size, w)
        tail = (err0, tol, k, stride, rec_k, rec_e, rec_m, nrec)
        if proto == "pairwise":
            res = kern.pairwise_run(x, w, xs, ei, ej, samples, pc.omega, *tail)
        elif proto == "laplacian":
            res = kern.laplacian_run(x, w, xs, indptr, nbr, samples, pc.omega, *tail)
        elif proto == "mrk":
            res = kern.mrk_run(x, aux, w, xs, ei, ej, samples, pc.omega, pc.beta, *tail)
        elif proto == "shift-register":
            res = kern.shift_run(x, aux, xs, ei, ej, samples, pc.omega, *tail)
        elif proto == "block":
            res = kern.block_run(x, aux, w, xs, ei, ej, samples, pc.omega, pc.beta, *tail)
        elif proto == "gge":
            ties = rng.random(size)
            res = kern.gge_run(x, xs, ei, ej, indptr, nbr, eid, samples, ties, *tail)
        elif proto == "accgossip":
            a, b, gm = sched.arrays(k, size)
            res = kern.acc_run(x, aux, xs, ei, ej, samples, a, b, gm, *tail)
        else:  # pragma: no cover - guarded by ProtocolConfig
            raise ValueError(proto)
        steps, nrec, status, rel = res
        k += steps
    if rec_k[nrec - 1] != k:
        rec_k[nrec], rec_e[nrec] = k, rel
        rec_m[nrec] = (x.sum() - (pc.omega - 1.0) * aux.sum()) if proto == "shift-register" else float(w @ x)
        nrec += 1
    return rec_k[:nrec].copy(), rec_e[:nrec].copy(), rec_m[:nrec].copy(), status, x


def _run_rnm(g: Graph, pc: ProtocolConfig, c, xs, err0, config: ExperimentConfig, rng, stride):
    """Dual block Newton ascent; the primal iterate ``x0 + Q^T y`` is tracked in place."""
    Q = incidence_matrix(g)
    y = np.zeros(g.m)
    x = c.copy()
    ks, es, ms = [0], [1.0], [float(c.sum())]
    status, k, tol = 0, 0, config.tolerance
    while k < config.max_iters and status == 0:
        size = min(CHUNK, config.max_iters - k)
        for C in sample_batch(g, pc, rng, size):
            C = np.sort(C)
            QC = Q[C]
            dy = -pseudo_inverse(QC @ QC.T) @ (QC @ x)
            y[C] += dy
            x += QC.T @ dy
            k += 1
            rel = float((x - xs) @ (x - xs)) / err0
            status = 1 if rel <= tol else (2 if not rel <= 1e6 else 0)
            if status or k % stride == 0:
                ks.append(k)
                es.append(rel)
                ms.append(float(x.sum()))
            if status:
                break
    if ks[-1] != k:
        ks.append(k)
        es.append(float((x - xs) @ (x - xs)) / err0)
        ms.append(float(x.sum()))
    return np.array(ks, dtype=np.int64), np.array(es), np.array(ms), status, x


# ------------------------------------------------------------- fan-out

def run_seeds(config: ExperimentConfig, seeds: Iterable[int], graph: Graph | None = None,
              workers: int | None = None, backend=None) -> list[Trajectory]:
    """Independent runs over ``seeds`` on a thread pool; results follow ``seeds`` order."""
    seeds = list(seeds)
    g = graph if graph is not None else build_graph(config)
    jobs = [config.with_(seed=int(s)) for s in seeds]
    if workers is None:
        workers = min(len(jobs), os.cpu_count() or 1)
    if workers <= 1 or len(jobs) <= 1:
        return [run_experiment(j, g, backend=backend) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda j: run_experiment(j, g, backend=backend), jobs))


def iterations_to_tolerance(config: ExperimentConfig, seeds: Iterable[int], graph: Graph | None = None,
                            workers: int | None = None, record_stride: int | None = None) -> np.ndarray:
    """Iterations to reach the tolerance per seed (``inf`` when the budget runs out)."""
    cfg = config.with_(record_stride=record_stride or max(1, config.max_iters))
    return np.array([t.iterations for t in run_seeds(cfg, seeds, graph, workers)])


# ------------------------------------------------------------- analysis

def fit_linear_rate(traj, burn_in_fraction: float = 0.1, min_points: int = 20) -> RateFit:
    """Per-iteration decay factor from a least-squares fit of ``log(rel_error_sq)`` against ``k``.

    Accepts a ``Trajectory`` or a ``(k, rel_error_sq)`` pair.  Samples from the
    first zero error onward are dropped and flagged as truncation.
    """
    if isinstance(traj, Trajectory):
        k, e = traj.k, traj.rel_error_sq
    else:
        k, e = (np.asarray(a, dtype=float) for a in traj)
    k = np.asarray(k, dtype=float)
    e = np.asarray(e, dtype=float)
    if not 0.0 <= burn_in_fraction < 1.0:
        raise ValueError("burn_in_fraction must lie in [0, 1)")
    nonpos = np.flatnonzero(e <= 0)
    truncated = nonpos.size > 0
    if truncated:
        k, e = k[:nonpos[0]], e[:nonpos[0]]
    start = int(math.floor(burn_in_fraction * k.size))
    k, e = k[start:], e[start:]
    if k.size < min_points:
        raise ValueError(f"need at least {min_points} positive samples after burn-in, got {k.size}")
    slope = float(np.polyfit(k, np.log(e), 1)[0])
    return RateFit(math.exp(slope), truncated, int(k.size), slope)


def median_trajectory(trajs: Sequence[Trajectory]) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise median over runs, on the prefix of ``k`` values shared by all runs."""
    if not trajs:
        raise ValueError("no trajectories")
    length = min(len(t) for t in trajs)
    k = trajs[0].k[:length]
    for t in trajs[1:]:
        if not np.array_equal(t.k[:length], k):
            raise ValueError("trajectories are recorded on different k grids")
    return k.copy(), np.median(np.stack([t.rel_error_sq[:length] for t in trajs]), axis=0)


def sweep_block_size(graph: Graph, tau_list: Sequence[int], epsilon: float,
                     base: ExperimentConfig | None = None, seeds: Sequence[int] = range(10),
                     workers: int | None = None) -> SweepTable:
    """Median iterations to ``epsilon`` per block size with the ``l / tau`` reference curve.

    ``l`` is the median count at ``tau = 1``, which is always measured.
    """
    base = (base or ExperimentConfig()).with_(protocol="block", epsilon=epsilon)
    taus = sorted(set(int(t) for t in tau_list) | {1})
    per_seed = {}
    for tau in taus:
        if not 1 <= tau <= graph.m:
            raise ValueError(f"tau={tau} outside [1, {graph.m}]")
        per_seed[tau] = iterations_to_tolerance(base.with_(tau=tau), seeds, graph, workers)
    med = {t: float(np.median(v)) for t, v in per_seed.items()}
    ell = med[1]
    wanted = [int(t) for t in tau_list]
    return SweepTable(np.array(wanted), np.array([med[t] for t in wanted]),
                      np.array([ell / t for t in wanted]), per_seed)


def empirical_averaging_time(config: ExperimentConfig, eps: float, seeds: Sequence[int] = range(200),
                             graph: Graph | None = None, starts: Sequence | None = None,
                             workers: int | None = None) -> int:
    """Monte Carlo estimate of the eps-averaging time.

    For each starting vector, the smallest ``k`` at which at most a fraction
    ``eps`` of the runs still have ``||x^k - x*|| > eps ||x^0 - x*||``; the
    maximum over ``starts`` is returned.  ``starts`` defaults to the initial
    vector described by ``config`` (per seed).  Intended for protocols whose
    error never increases, so the first hitting time decides each run.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    g = graph if graph is not None else build_graph(config)
    cfg = config.with_(epsilon=eps * eps, error_metric="norm_sq",
                       record_stride=max(1, config.max_iters))
    seeds = list(seeds)
    worst = 0
    for c in (starts if starts is not None else [None]):
        if c is None:
            hits = np.array([t.iterations for t in run_seeds(cfg, seeds, g, workers)])
        else:
            hits = np.array([run_experiment(cfg.with_(seed=int(s)), g, c).iterations for s in seeds])
        allowed = math.floor(eps * hits.size + 1e-12)
        order = np.sort(hits)
        t = order[hits.size - allowed - 1] if allowed < hits.size else 0.0
        if not math.isfinite(t):
            raise RuntimeError("budget exhausted before the averaging time was reached; raise max_iters")
        worst = max(worst, int(t))
    return worst


def compare_protocols(configs: Sequence[ExperimentConfig], graph: Graph | None = None,
                      seeds: Sequence[int] | None = None, workers: int | None = None):
    """Run several protocols on the same graph, initial values and seeds.

    Returns one trajectory per config, or per config a list over ``seeds``
    when given.  Protocols sharing a sampling mode see identical sketches.
    """
    if not configs:
        return []
    ref = configs[0]
    for cfg in configs[1:]:
        if cfg.graph_key() != ref.graph_key():
            raise ValueError("compared configs describe different graphs")
        if cfg.init != ref.init or cfg.seed != ref.seed or cfg.weights != ref.weights:
            raise ValueError("compared configs must share init, seed and weights")
    g = graph if graph is not None else build_graph(ref)
    if seeds is None:
        return [run_experiment(cfg, g) for cfg in configs]
    return [run_seeds(cfg, seeds, g, workers) for cfg in configs]


# ------------------------------------------------------------------- CSV

def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def format_csv(obj) -> str:
    """CSV text of a ``Trajectory`` (``k,rel_error_sq``) or ``SweepTable`` (``tau,iterations,reference_l_over_tau``)."""
    if isinstance(obj, Trajectory):
        header, rows = TRAJECTORY_HEADER, zip(obj.k.tolist(), obj.rel_error_sq.tolist())
    elif isinstance(obj, SweepTable):
        header = SWEEP_HEADER
        rows = zip(obj.tau.tolist(), obj.iterations.tolist(), obj.reference.tolist())
    else:
        raise TypeError(f"cannot export {type(obj).__name__}")
    lines = [",".join(header)] + [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def export_csv(obj, path) -> None:
    """Write ``format_csv(obj)`` to ``path`` with LF line endings."""
    text = format_csv(obj)
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {os.fspath(path)!r}: {exc}") from exc


def _read_csv(path, header) -> list[list[str]]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(f"cannot read CSV {os.fspath(path)!r}: {exc}") from exc
    if not rows or tuple(rows[0]) != header:
        raise ValueError(f"{os.fspath(path)!r}: expected header {','.join(header)}")
    return rows[1:]


def read_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray]:
    rows = _read_csv(path, TRAJECTORY_HEADER)
    k = np.array([int(r[0]) for r in rows], dtype=np.int64)
    e = np.array([float(r[1]) for r in rows])
    return k, e


def read_sweep_csv(path) -> SweepTable:
    rows = _read_csv(path, SWEEP_HEADER)
    return SweepTable(np.array([int(r[0]) for r in rows]), np.array([float(r[1]) for r in rows]),
                      np.array([float(r[2]) for r in rows]))
