"""Command-line entry point.

Every subcommand accepts the experiment keys as flags (``--graph.n 30``,
``--omega 1.5``, ...).  ``--config FILE`` loads a flat ``key = value`` file
first; flags given explicitly on the command line take precedence.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import fields

import numpy as np

from . import _backend
from .graph import GraphConnectivityError, write_edgelist
from .harness import (DivergenceError, ExactnessError, ExperimentConfig, MassAuditError,
                      _flat_name, build_graph, compare_protocols, export_csv, format_csv,
                      load_config, node_weights, run_experiment, sweep_block_size)
from .rates import spectral_report

EXIT_USAGE = 2
EXIT_FAILED_RUN = 3

# keys shown by --help; every ExperimentConfig field is accepted
_HELP = {
    "graph.family": "cycle | path | complete | grid | rgg | file",
    "graph.n": "number of nodes (cycle, path, complete, rgg)",
    "graph.rows": "grid rows",
    "graph.cols": "grid columns",
    "graph.radius": "rgg connection radius (default: connectivity threshold)",
    "graph.seed": "rgg point seed",
    "graph.path": "edge list for graph.family=file",
    "protocol": "pairwise | laplacian | block | mrk | shift-register | gge | accgossip | rnm",
    "sampling": "sketch distribution (default depends on protocol and weights)",
    "weights": "identity | degree | custom:w1,w2,...",
    "init": "gaussian | uniform | integers",
    "epsilon": "stopping tolerance",
    "error_metric": "norm_sq (epsilon bounds the squared ratio) or norm",
    "acc.option": "AccGossip parameter schedule, 1 or 2",
    "acc.nu": "option-2 nu: m, exact or a number",
    "override": "run even if the sketch distribution is not exact or the stepsize diverges",
    "out": "output path (default: stdout)",
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="flat key = value config file")
    grp = p.add_argument_group("experiment keys")
    for f in fields(ExperimentConfig):
        flat = _flat_name(f.name)
        names = [f"--{flat}"]
        if "_" in flat:
            names.append(f"--{flat.replace('_', '-')}")
        grp.add_argument(*names, dest=f"cfg:{flat}", metavar="V", default=argparse.SUPPRESS,
                         help=_HELP.get(flat, f"default {getattr(ExperimentConfig(), f.name)!r}"))


def _config(ns: argparse.Namespace) -> ExperimentConfig:
    overrides = {k[4:]: v for k, v in vars(ns).items() if k.startswith("cfg:")}
    if ns.config:
        return load_config(ns.config, overrides)
    return ExperimentConfig.from_flat(overrides)


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _emit_lines(lines, out) -> None:
    text = "\n".join(lines) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)


def _export(obj, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(format_csv(obj))
    else:
        export_csv(obj, out)


def _fmt_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


# ---------------------------------------------------------------- commands

def cmd_gen_graph(ns, cfg: ExperimentConfig) -> int:
    g = build_graph(cfg)
    if cfg.out in (None, "-"):
        _emit_lines([f"{g.n} {g.m}"] + [f"{i} {j}" for i, j in g.edges], None)
    else:
        write_edgelist(g, cfg.out)
    print(f"n={g.n} m={g.m} connected={g.is_connected}", file=sys.stderr)
    return 0


def cmd_spectrum(ns, cfg: ExperimentConfig) -> int:
    g = build_graph(cfg)
    w = node_weights(cfg, g)
    system = "laplacian" if cfg.protocol == "laplacian" else "incidence"
    tau = cfg.tau if cfg.protocol in ("block", "rnm") else 1
    rep = spectral_report(g, system, w, ns.sampling_rule, cfg.omega, tau, with_nu=not ns.no_nu)
    items = [("n", g.n), ("m", g.m)] + rep.as_items(ns.eps)
    _emit_lines([f"{k}: {_fmt_value(v)}" for k, v in items], cfg.out)
    return 0


def _summary(label: str, traj) -> str:
    its = traj.iterations
    its = "not reached" if not np.isfinite(its) else str(int(its))
    return (f"{label}: status={traj.status} iterations={its} "
            f"terminal_k={traj.terminal_k} terminal_error={traj.terminal_error:.6g}")


def cmd_run(ns, cfg: ExperimentConfig) -> int:
    traj = run_experiment(cfg, backend=ns.backend)
    _export(traj, cfg.out)
    print(_summary(cfg.protocol, traj), file=sys.stderr)
    if traj.rho is not None:
        print(f"theoretical rho={traj.rho!r}", file=sys.stderr)
    return 0


def cmd_compare(ns, cfg: ExperimentConfig) -> int:
    configs = []
    for item in ns.protocols.split(","):
        name, _, opts = item.strip().partition(":")
        kw = {"protocol": name}
        for pair in filter(None, opts.split(";")):
            key, _, val = pair.partition("=")
            kw[key.strip()] = val.strip()
        configs.append(ExperimentConfig.from_flat(kw, base=cfg))
    seeds = list(range(ns.seeds))
    runs = compare_protocols(configs, seeds=seeds)
    lines = ["protocol,median_iterations,median_terminal_error"]
    for c, trajs in zip(configs, runs):
        its = np.median([t.iterations for t in trajs])
        err = np.median([t.terminal_error for t in trajs])
        label = c.protocol if c.protocol != "accgossip" else f"accgossip-{c.acc_option}"
        lines.append(f"{label},{'%.17g' % its},{'%.17g' % err}")
        if ns.trajectories:
            os.makedirs(ns.trajectories, exist_ok=True)
            export_csv(trajs[0], os.path.join(ns.trajectories, f"{label}.csv"))
    _emit_lines(lines, cfg.out)
    return 0


def cmd_sweep_tau(ns, cfg: ExperimentConfig) -> int:
    g = build_graph(cfg)
    table = sweep_block_size(g, ns.taus, cfg.epsilon, cfg, seeds=range(ns.seeds))
    _export(table, cfg.out)
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gossiplab", description="Randomized gossip experiments.")
    parser.add_argument("--version", action="store_true", help="print version and backend")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("gen-graph", help="write a graph as an edge list")
    _add_config_flags(p)
    p.set_defaults(func=cmd_gen_graph)

    p = sub.add_parser("spectrum", help="print rates and spectral quantities as key: value lines")
    _add_config_flags(p)
    p.add_argument("--sampling-rule", choices=("weighted", "uniform"), default="weighted",
                   help="row probabilities for the rate computation")
    p.add_argument("--eps", type=float, default=0.01, help="epsilon for the averaging-time bound")
    p.add_argument("--no-nu", action="store_true", help="skip the acceleration parameter")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("run", help="run one experiment and write its trajectory CSV")
    _add_config_flags(p)
    p.add_argument("--backend", choices=("cython", "python"), default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="median iterations of several protocols on one graph")
    _add_config_flags(p)
    p.add_argument("--protocols", required=True,
                   help="comma list; per-protocol keys after ':' separated by ';', "
                        "e.g. pairwise,mrk:beta=0.4,accgossip:acc.option=2")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--trajectories", metavar="DIR", help="also write the first seed's trajectories")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep-tau", help="iterations to tolerance per block size")
    _add_config_flags(p)
    p.add_argument("--taus", type=_int_list, default=[1, 2, 5, 10])
    p.add_argument("--seeds", type=int, default=10)
    p.set_defaults(func=cmd_sweep_tau)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.version:
        from . import __version__
        print(f"gossiplab {__version__} (backend: {_backend.NAME})")
        return 0
    if not getattr(ns, "func", None):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        cfg = _config(ns)
        if ns.command == "sweep-tau":
            cfg = cfg.with_(protocol="block")
        return ns.func(ns, cfg)
    except (DivergenceError, MassAuditError) as exc:
        print(f"gossiplab: run failed: {exc}", file=sys.stderr)
        return EXIT_FAILED_RUN
    except (ExactnessError, GraphConnectivityError, KeyError, ValueError, OSError) as exc:
        print(f"gossiplab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
