"""End-to-end experiments: networks -> metrics -> outbreaks -> correlations.

An experiment is described by a JSON document::

    {
      "networks": [
        {"generator": "pareto", "n": 1000, "count": 10},
        {"generator": "sampled", "degseq": "amazon.deg", "n": 1000, "count": 10},
        {"file": "email-EuAll.txt", "id": "email"}
      ],
      "metrics": ["exf", "exf_m", "kshell", "eigen"],
      "processes": ["si-c", "sis-c", "sir-d"],
      "seed_selection": "random:100",
      "sims_per_seed": 100,
      "beta_policy": "calibrate",
      "rng_seed": 1
    }

Every random choice derives from ``rng_seed`` and the network's position in
the sweep, so a rerun of the same document reproduces every table.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .centrality import eigenvector_centrality, k_shell
from .epidemic import SimParams, calibrate_beta, fit_gamma, run_batch
from .exf import ExfOptions, exf_all, expected_force_modified
from .graph import Graph, giant_component, largest_eigenvalue, read_graph
from .netgen import DegreeSpec, chung_lu, degree_sequence_graph, read_degree_sequence
from .stats import UndefinedCorrelation, correlation_stderr, fisher_ci, pearson, spearman

log = logging.getLogger(__name__)

METRICS = ("exf", "exf_m", "exf3", "kshell", "eigen")
TIME_SUFFIX = {"c": "continuous", "d": "discrete", "cont": "continuous", "disc": "discrete",
               "continuous": "continuous", "discrete": "discrete"}


@dataclass(frozen=True)
class Process:
    model: str
    time_mode: str

    @property
    def name(self) -> str:
        return f"{self.model}-{self.time_mode[0]}"

    @property
    def outcome(self) -> str:
        return "tthc" if self.model == "si" else "epo"

    @classmethod
    def parse(cls, spec) -> "Process":
        if isinstance(spec, dict):
            model, tm = spec["model"], spec.get("time", spec.get("time_mode", "continuous"))
        else:
            model, _, tm = str(spec).partition("-")
            tm = tm or "c"
        model = model.lower()
        tm = TIME_SUFFIX.get(str(tm).lower())
        if model not in ("si", "sis", "sir") or tm is None:
            raise ValueError(f"bad process spec {spec!r}")
        if model == "si" and tm != "continuous":
            raise ValueError("SI is only simulated in continuous time")
        return cls(model, tm)


@dataclass
class ExperimentConfig:
    networks: list
    metrics: list = field(default_factory=lambda: ["exf", "exf_m", "kshell", "eigen"])
    processes: list = field(default_factory=lambda: ["si-c", "sis-c"])
    seed_selection: str = "all"
    sims_per_seed: int = 100
    beta_policy: str = "calibrate"
    rng_seed: int = 0
    alpha: float = 2.0
    band: tuple = (0.05, 0.95)
    target_fraction: float = 0.80
    calibration_sample: int = 100
    base_dir: str = "."

    def __post_init__(self):
        if not self.networks:
            raise ValueError("config lists no networks")
        if not self.metrics or not self.processes:
            raise ValueError("config needs at least one metric and one process")
        bad = set(self.metrics) - set(METRICS)
        if bad:
            raise ValueError(f"unknown metrics {sorted(bad)}")
        self.process_list = [Process.parse(p) for p in self.processes]
        k = self.seed_count
        if k is not None and k < 2:
            raise ValueError("random:K needs K >= 2")
        self.beta_multiple()  # validates

    @property
    def seed_count(self) -> int | None:
        if self.seed_selection == "all":
            return None
        kind, _, k = self.seed_selection.partition(":")
        if kind != "random" or not k.isdigit():
            raise ValueError(f"seed_selection must be 'all' or 'random:K', got {self.seed_selection!r}")
        return int(k)

    def beta_multiple(self) -> float | None:
        if self.beta_policy == "calibrate":
            return None
        kind, _, m = self.beta_policy.partition(":")
        if kind != "multiple":
            raise ValueError(f"beta_policy must be 'calibrate' or 'multiple:m', got {self.beta_policy!r}")
        return float(m)

    @classmethod
    def from_dict(cls, d: dict, base_dir=".") -> "ExperimentConfig":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        known.setdefault("base_dir", str(base_dir))
        if "band" in known:
            known["band"] = tuple(known["band"])
        return cls(**known)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        with open(path) as fh:
            return cls.from_dict(json.load(fh), base_dir=path.parent)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["band"] = list(self.band)
        return d


@dataclass(frozen=True)
class NetworkJob:
    index: int  # position in the sweep; drives the random streams
    id: str
    source: dict
    replicate: int


@dataclass
class CorrelationRow:
    network: str
    metric: str
    process: str
    correlation: float
    stderr: float
    ci_low: float
    ci_high: float
    n_seeds: int
    flag: str = ""


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)
    raw: list = field(default_factory=list)
    agreement: list = field(default_factory=list)
    networks: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)

    def correlations(self, metric: str, process: str) -> list[float]:
        return [r.correlation for r in self.rows
                if r.metric == metric and r.process == process and not r.flag]

    def summary(self) -> list[dict]:
        """Mean and sd of each (family, metric, process) correlation over networks."""
        fam = {n["id"]: n["family"] for n in self.networks}
        groups: dict[tuple, list] = {}
        for r in self.rows:
            if r.flag:
                continue
            groups.setdefault((fam.get(r.network, r.network), r.metric, r.process), []).append(r.correlation)
        out = []
        for (f, m, p), vals in groups.items():
            v = np.asarray(vals)
            out.append({"family": f, "metric": m, "process": p, "mean": float(v.mean()),
                        "sd": float(v.std(ddof=1)) if len(v) > 1 else math.nan, "n_networks": len(v)})
        return out

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "correlations.csv", [asdict(r) for r in self.rows],
                   list(CorrelationRow.__dataclass_fields__))
        _write_csv(out / "nodes.csv", self.raw)
        _write_csv(out / "agreement.csv", self.agreement)
        _write_csv(out / "summary.csv", self.summary(),
                   ["family", "metric", "process", "mean", "sd", "n_networks"])
        with open(out / "manifest.json", "w") as fh:
            json.dump(self.manifest, fh, indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _write_csv(path, rows, fields=None):
    if fields is None:
        fields = list(rows[0]) if rows else []
        for r in rows:
            fields += [k for k in r if k not in fields]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)


# -- per-node structure -----------------------------------------------------


def node_profiles(g: Graph, nodes=None) -> np.ndarray:
    """``(degree, sum of neighbour degrees, sum of degrees at distance exactly 2)`` per node."""
    if g.directed:
        raise ValueError("node_profiles needs an undirected graph")
    nodes = range(g.node_count) if nodes is None else nodes
    deg = g.degree.tolist()
    adj = [set(g.neighbors(v).tolist()) for v in range(g.node_count)]
    out = []
    for v in nodes:
        nb = adj[v]
        ring2 = set()
        for u in nb:
            ring2 |= adj[u]
        ring2 -= nb
        ring2.discard(v)
        out.append((deg[v], sum(deg[u] for u in nb), sum(deg[u] for u in ring2)))
    return np.asarray(out, dtype=np.int64).reshape(-1, 3)


# -- planning ---------------------------------------------------------------


def plan_experiment(cfg: ExperimentConfig) -> list[NetworkJob]:
    jobs = []
    for k, spec in enumerate(cfg.networks):
        if "file" in spec:
            jobs.append(NetworkJob(len(jobs), spec.get("id", Path(spec["file"]).stem), spec, 0))
            continue
        gen = spec.get("generator")
        if gen not in ("pareto", "sampled"):
            raise ValueError(f"network entry {k} needs 'file' or generator 'pareto'/'sampled'")
        base = spec.get("id", gen if gen == "pareto" else f"sampled-{Path(spec['degseq']).stem}")
        for rep in range(int(spec.get("count", 1))):
            jobs.append(NetworkJob(len(jobs), f"{base}-{rep:03d}", spec, rep))
    return jobs


def _rng(cfg: ExperimentConfig, job: NetworkJob, purpose: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.rng_seed, job.index, purpose]))


def _family(job: NetworkJob) -> str:
    s = job.source
    if "file" in s:
        return job.id
    return s.get("id", s["generator"] if s["generator"] == "pareto" else f"sampled-{Path(s['degseq']).stem}")


def build_network(cfg: ExperimentConfig, job: NetworkJob) -> Graph:
    s = job.source
    if "file" in s:
        path = Path(s["file"])
        if not path.is_absolute():
            path = Path(cfg.base_dir) / path
        return giant_component(read_graph(path, weighted=bool(s.get("weighted", False))))
    rng = _rng(cfg, job, 0)
    n = int(s.get("n", 1000))
    if s["generator"] == "pareto":
        spec = DegreeSpec("pareto", n, float(s.get("scale", 1.0)), float(s.get("shape", 2.3)),
                          band=float(s.get("band", 0.05)))
        return chung_lu(spec, rng)
    path = Path(s["degseq"])
    if not path.is_absolute():
        path = Path(cfg.base_dir) / path
    spec = DegreeSpec("sampled", n, sequence=tuple(read_degree_sequence(path)))
    return degree_sequence_graph(spec, rng)


# -- running ----------------------------------------------------------------


def _metric_values(g: Graph, seeds, name: str, cfg: ExperimentConfig, cache: dict) -> np.ndarray:
    if name == "exf":
        return exf_all(g, ExfOptions(2, alpha=cfg.alpha), nodes=seeds).values
    if name == "exf3":
        return exf_all(g, ExfOptions(3, alpha=cfg.alpha), nodes=seeds).values
    if name == "exf_m":
        force = cache["exf"] if "exf" in cache else exf_all(g, ExfOptions(2), nodes=seeds).values
        opts = ExfOptions(2, alpha=cfg.alpha)
        return np.asarray([expected_force_modified(None, opts=opts, force=float(f), degree=float(k))
                           for f, k in zip(force, g.degree[seeds])])
    if name == "kshell":
        return k_shell(g).values[seeds].astype(np.float64)
    if name == "eigen":
        return eigenvector_centrality(g).values[seeds]
    raise ValueError(name)


def run_network(cfg: ExperimentConfig, job: NetworkJob) -> dict:
    """Metrics, outcomes and correlations for one network. Never raises."""
    t0 = time.time()
    info = {"id": job.id, "family": _family(job), "index": job.index, "source": job.source,
            "replicate": job.replicate}
    try:
        g = build_network(cfg, job)
        info.update(nodes=g.node_count, edges=g.edge_count)
        rng = _rng(cfg, job, 1)
        k = cfg.seed_count
        if k is None or k >= g.node_count:
            seeds = np.arange(g.node_count)
        else:
            seeds = np.sort(rng.choice(g.node_count, size=k, replace=False))
        lam = largest_eigenvalue(g)
        info["lambda"] = lam
        info["n_seeds"] = len(seeds)

        metrics: dict[str, np.ndarray] = {}
        for m in cfg.metrics:
            try:
                metrics[m] = _metric_values(g, seeds, m, cfg, metrics)
            except Exception as exc:  # a metric failing should not sink the network
                log.warning("%s: metric %s failed: %s", job.id, m, exc)
                info.setdefault("metric_errors", {})[m] = str(exc)

        outcomes: dict[str, np.ndarray] = {}
        info["processes"] = {}
        stream = int(np.random.SeedSequence([cfg.rng_seed, job.index, 2]).generate_state(1)[0])
        cal_sample = seeds
        if len(seeds) > cfg.calibration_sample:
            cal_sample = np.sort(rng.choice(seeds, size=cfg.calibration_sample, replace=False))
        for proc in cfg.process_list:
            pinfo: dict = {}
            try:
                if proc.model == "si":
                    p = SimParams("si", "continuous", 1.0, cfg.sims_per_seed, stream)
                    batch = run_batch(g, seeds, p)
                    fits = [fit_gamma(row) for row in batch.threshold_time]
                    outcomes[proc.name] = np.array([f.mean for f in fits])
                    pinfo["degenerate_fits"] = int(sum(f.degenerate for f in fits))
                else:
                    # placeholder beta; replaced by calibration or the multiple below
                    p = SimParams(proc.model, proc.time_mode, 0.5, cfg.sims_per_seed, stream)
                    mult = cfg.beta_multiple()
                    if mult is None:
                        cal = calibrate_beta(g, p, cal_sample, band=cfg.band,
                                             target_frac=cfg.target_fraction, lam=lam)
                        beta = cal.beta
                        pinfo["calibration"] = cal.as_dict()
                    else:
                        beta = mult / lam
                        pinfo["multiplier"] = mult
                    pinfo["beta"] = beta
                    p = p.with_beta(beta)
                    batch = run_batch(g, seeds, p)
                    epo = batch.success.mean(axis=1)
                    outcomes[proc.name] = epo
                    lo, hi = cfg.band
                    pinfo["fraction_in_band"] = float(np.mean((epo >= lo) & (epo <= hi)))
                pinfo["truncated_runs"] = int(batch.truncated.sum())
            except Exception as exc:
                log.warning("%s: process %s failed: %s", job.id, proc.name, exc)
                pinfo["error"] = str(exc)
            info["processes"][proc.name] = pinfo

        rows = []
        for m, mv in metrics.items():
            for proc in cfg.process_list:
                if proc.name not in outcomes:
                    continue
                try:
                    r = pearson(mv, outcomes[proc.name])
                    lo, hi = fisher_ci(r, len(seeds))
                    rows.append(CorrelationRow(job.id, m, proc.name, r, correlation_stderr(r, len(seeds)),
                                               lo, hi, len(seeds)))
                except UndefinedCorrelation:
                    rows.append(CorrelationRow(job.id, m, proc.name, math.nan, math.nan, math.nan,
                                               math.nan, len(seeds), "undefined"))

        agreement = []
        names = list(metrics)
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                try:
                    rho = spearman(metrics[a], metrics[b])
                    flag = ""
                except UndefinedCorrelation:
                    rho, flag = math.nan, "undefined"
                agreement.append({"network": job.id, "metric_a": a, "metric_b": b,
                                  "spearman": rho, "flag": flag})

        prof = node_profiles(g, seeds.tolist())
        raw = []
        for i, v in enumerate(seeds.tolist()):
            row = {"network": job.id, "node": g.label(v), "degree": int(prof[i, 0]),
                   "sum_neighbor_degree": int(prof[i, 1]), "sum_distance2_degree": int(prof[i, 2])}
            for m, mv in metrics.items():
                row[m] = float(mv[i])
            for o, ov in outcomes.items():
                row[o] = float(ov[i])
            raw.append(row)
        info["seconds"] = time.time() - t0
        failed = not outcomes
        return {"info": info, "rows": rows, "agreement": agreement, "raw": raw,
                "failed": failed, "error": "no process produced outcomes" if failed else None}
    except Exception as exc:
        log.warning("%s failed: %s", job.id, exc)
        info["seconds"] = time.time() - t0
        return {"info": info, "rows": [], "agreement": [], "raw": [], "failed": True, "error": str(exc)}


def _run_job(args):
    cfg, job = args
    return run_network(cfg, job)


def run_experiment(cfg: ExperimentConfig, workers: int = 1, progress=None) -> ResultTable:
    """Run every network of the sweep; results are ordered by sweep position."""
    jobs = plan_experiment(cfg)
    table = ResultTable()
    t0 = time.time()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_run_job, [(cfg, j) for j in jobs]))
    else:
        results = []
        for j in jobs:
            results.append(run_network(cfg, j))
            if progress:
                progress(j, results[-1])
    for res in results:
        table.rows.extend(res["rows"])
        table.agreement.extend(res["agreement"])
        table.raw.extend(res["raw"])
        table.networks.append(res["info"])
        if res["failed"]:
            table.failures.append({"network": res["info"]["id"], "error": res["error"]})
    table.manifest = {
        "config": cfg.to_dict(),
        "jobs": [asdict(j) for j in jobs],
        "networks": table.networks,
        "failures": table.failures,
        "versions": _versions(),
        "seconds": time.time() - t0,
    }
    return table


def _versions() -> dict:
    import numba
    import scipy

    return {"expforce": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}
