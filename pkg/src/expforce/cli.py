"""Command-line entry point: ``expforce <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .centrality import eigenvector_centrality, k_shell
from .epidemic import (SimParams, beta_from_multiple, calibrate_beta, fit_gamma, run_batch)
from .exf import ExfOptions, exf_all, exf_modified_all
from .graph import giant_component, read_graph, summary, write_edge_list
from .harness import ExperimentConfig, run_experiment
from .netgen import DegreeSpec, chung_lu, degree_sequence_graph, read_degree_sequence

log = logging.getLogger("expforce")

TIME = {"cont": "continuous", "disc": "discrete", "continuous": "continuous", "discrete": "discrete"}


def _load(args):
    g = read_graph(args.graph, weighted=getattr(args, "weighted", False),
                   directed=getattr(args, "directed", False))
    if getattr(args, "giant", False):
        g = giant_component(g)
    return g


def _open_out(path):
    return open(path, "w") if path and path != "-" else sys.stdout


def cmd_exf(args):
    g = _load(args)
    opts = ExfOptions(args.x, args.weighted, args.directed, args.alpha)
    scores = exf_all(g, opts, workers=args.workers)
    if args.modified:
        scores = exf_modified_all(g, opts, force=scores)
    with _open_out(args.out) as fh:
        scores.to_csv(g, fh)
    return 0


def cmd_centrality(args):
    g = _load(args)
    scores = k_shell(g) if args.metric == "kshell" else eigenvector_centrality(g)
    with _open_out(args.out) as fh:
        scores.to_csv(g, fh)
    return 0


def _seed_nodes(g, spec: str, rng) -> list[int]:
    if spec == "all":
        return list(range(g.node_count))
    if spec.startswith("random:"):
        k = min(int(spec.split(":", 1)[1]), g.node_count)
        return sorted(rng.choice(g.node_count, size=k, replace=False).tolist())
    index = {str(g.label(v)): v for v in range(g.node_count)}
    out = []
    with open(spec) as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                if line not in index:
                    raise SystemExit(f"seed {line!r} is not a node of the graph")
                out.append(index[line])
    return out


def cmd_simulate(args):
    g = _load(args)
    rng = np.random.default_rng(np.random.SeedSequence([args.rng_seed, 7]))
    seeds = _seed_nodes(g, args.seeds, rng)
    model, tm = args.model, TIME[args.time]
    manifest = {"graph": str(args.graph), "nodes": g.node_count, "edges": g.edge_count,
                "model": model, "time_mode": tm, "sims": args.sims, "rng_seed": args.rng_seed,
                "n_seeds": len(seeds), "version": __version__}
    # placeholder beta until calibration or --multiple fixes it
    p = SimParams(model, tm, args.beta if args.beta is not None else 0.5, args.sims, args.rng_seed)
    if model != "si":
        if args.calibrate:
            sample = seeds if len(seeds) <= 100 else sorted(rng.choice(seeds, 100, replace=False).tolist())
            cal = calibrate_beta(g, p, sample)
            beta = cal.beta
            manifest["calibration"] = cal.as_dict()
        elif args.multiple is not None:
            beta = beta_from_multiple(g, args.multiple)
            manifest["multiplier"] = args.multiple
        elif args.beta is not None:
            beta = args.beta
        else:
            raise SystemExit("give --beta, --multiple or --calibrate")
        p = p.with_beta(beta)
        manifest["beta"] = beta
    batch = run_batch(g, seeds, p)
    if model == "si":
        outcome = [fit_gamma(row).mean for row in batch.threshold_time]
    else:
        outcome = batch.success.mean(axis=1).tolist()
    manifest["truncated_runs"] = int(batch.truncated.sum())
    with _open_out(args.out) as fh:
        fh.write("node,outcome\n")
        for v, o in zip(seeds, outcome):
            fh.write(f"{g.label(v)},{o!r}\n")
    manifest_path = args.manifest or (Path(args.out).with_suffix(".json") if args.out and args.out != "-" else None)
    if manifest_path:
        with open(manifest_path, "w") as fh:
            json.dump(manifest, fh, indent=2)
    else:
        json.dump(manifest, sys.stderr, indent=2)
        sys.stderr.write("\n")
    return 0


def cmd_gen(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.family == "pareto":
        spec = DegreeSpec("pareto", args.n, shape=args.shape)
        name = "pareto"
    elif args.family.startswith("sampled:"):
        path = args.family.split(":", 1)[1]
        spec = DegreeSpec("sampled", args.n, sequence=tuple(read_degree_sequence(path)))
        name = f"sampled-{Path(path).stem}"
    else:
        raise SystemExit("--family must be 'pareto' or 'sampled:<file>'")
    graphs = []
    for k in range(args.count):
        rng = np.random.default_rng(np.random.SeedSequence([args.rng_seed, k]))
        g = chung_lu(spec, rng) if spec.kind == "pareto" else degree_sequence_graph(spec, rng)
        fname = f"{name}-{k:03d}.edges"
        with open(out / fname, "w") as fh:
            write_edge_list(g, fh, header=f"{name} replicate {k} rng_seed {args.rng_seed}\n"
                                          f"{g.node_count} nodes {g.edge_count} edges")
        graphs.append({"file": fname, "replicate": k, "nodes": g.node_count, "edges": g.edge_count})
    manifest = {"family": args.family, "n": args.n, "count": args.count, "rng_seed": args.rng_seed,
                "shape": args.shape if spec.kind == "pareto" else None, "graphs": graphs,
                "version": __version__}
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    return 0


def cmd_experiment(args):
    cfg = ExperimentConfig.load(args.config)

    def progress(job, res):
        log.info("%s done in %.1fs%s", job.id, res["info"].get("seconds", 0),
                 " (FAILED)" if res["failed"] else "")

    table = run_experiment(cfg, workers=args.workers, progress=progress)
    table.write(args.out)
    for s in table.summary():
        print(f"{s['family']:>20} {s['metric']:>7} {s['process']:>6} "
              f"mean {s['mean']:+.3f} sd {s['sd']:.3f} (n={s['n_networks']})")
    return 1 if table.failures else 0


def cmd_summary(args):
    g = _load(args)
    json.dump(summary(g), sys.stdout)
    sys.stdout.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="expforce", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def graph_args(p, weights=True):
        p.add_argument("graph", help="edge-list file (SNAP format)")
        p.add_argument("--giant", action="store_true", help="restrict to the giant component")
        if weights:
            p.add_argument("--weighted", action="store_true", help="read a third weight column")
            p.add_argument("--directed", action="store_true", help="treat edges as arcs u -> v")
        p.add_argument("-o", "--out", default="-", help="output file (default stdout)")

    p = sub.add_parser("exf", help="Expected Force of every node")
    graph_args(p)
    p.add_argument("--x", type=int, default=2, choices=(2, 3), help="transmission events")
    p.add_argument("--modified", action="store_true", help="multiply by log(alpha * degree)")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_exf)

    p = sub.add_parser("centrality", help="k-shell or eigenvector centrality")
    graph_args(p, weights=False)
    p.add_argument("--metric", choices=("kshell", "eigen"), required=True)
    p.set_defaults(func=cmd_centrality)

    p = sub.add_parser("simulate", help="per-seed epidemic outcomes")
    graph_args(p)
    p.add_argument("--model", choices=("si", "sis", "sir"), required=True)
    p.add_argument("--time", choices=sorted(TIME), default="cont")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--beta", type=float)
    g.add_argument("--multiple", type=float, help="beta = m / lambda")
    g.add_argument("--calibrate", action="store_true")
    p.add_argument("--seeds", default="all", help="'all', 'random:K' or a file of node labels")
    p.add_argument("--sims", type=int, default=100)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--manifest", help="JSON run manifest (default: <out>.json or stderr)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen", help="generate random networks")
    p.add_argument("--family", required=True, help="'pareto' or 'sampled:<degree-file>'")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--shape", type=float, default=2.3)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("experiment", help="run a JSON-configured correlation sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("summary", help="JSON graph summary")
    graph_args(p)
    p.set_defaults(func=cmd_summary)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:  # GraphFormatError is a ValueError
        print(f"expforce {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
