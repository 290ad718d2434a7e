"""Stochastic SI / SIS / SIR outbreaks and the outcome measures built on them.

Outcomes per seed node:

* SI: time until ``ceil(n/2)`` nodes are infected (tthc), summarised by
  the mean of a method-of-moments gamma fit over ``n_sims`` runs.
* SIS / SIR: epidemic potential, the fraction of runs in which at least
  ``ceil(n/2)`` distinct nodes are ever infected.

Continuous time is event driven: transmissions fire at rate
``beta * (infected-susceptible edge weight)`` (``beta = 1`` for SI) and
recoveries at rate ``|I|``. Discrete time runs synchronous rounds in which
every infected-susceptible edge transmits with probability
``min(1, -log(1 - beta))`` and all nodes infectious in a round recover at
its end.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from . import _kernels as K
from .graph import Graph, check_node, largest_eigenvalue

log = logging.getLogger(__name__)

MODELS = {"si": K.SI, "sis": K.SIS, "sir": K.SIR}
TIME_MODES = ("continuous", "discrete")
LARGE_NETWORK = 25_000
LARGE_NETWORK_TRANSMISSIONS = 1_000

# stream tags keep calibration runs independent of outcome runs
STREAM_OUTCOME = 0
STREAM_CALIBRATION = 1
STREAM_SINGLE = 2


@dataclass(frozen=True)
class SimParams:
    """Outbreak settings.

    ``beta`` is the transmission/recovery rate ratio (ignored for SI).
    ``event_cap`` bounds a run: events in continuous time (default
    ``100 n``), rounds in discrete time (default ``10 n``). ``threshold``
    defaults to ``ceil(n/2)``. ``max_transmissions`` stops SI runs early;
    by default it is 1,000 on networks above 25,000 nodes and off otherwise.
    """

    model: str = "sis"
    time_mode: str = "continuous"
    beta: float = 1.0
    n_sims: int = 100
    rng_seed: int = 0
    event_cap: int | None = None
    threshold: int | None = None
    max_transmissions: int | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {sorted(MODELS)}, got {self.model!r}")
        if self.time_mode not in TIME_MODES:
            raise ValueError(f"time_mode must be one of {TIME_MODES}, got {self.time_mode!r}")
        if self.model == "si" and self.time_mode != "continuous":
            raise ValueError("SI outbreaks are only simulated in continuous time")
        if self.model != "si" and not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.time_mode == "discrete" and self.beta >= 1:
            raise ValueError(f"discrete time needs beta < 1 (got {self.beta}); -log(1-beta) is undefined")
        if self.n_sims < 1:
            raise ValueError("n_sims must be at least 1")

    def with_beta(self, beta: float) -> "SimParams":
        return SimParams(self.model, self.time_mode, beta, self.n_sims, self.rng_seed,
                         self.event_cap, self.threshold, self.max_transmissions)


@dataclass(frozen=True)
class OutbreakRecord:
    seed: int
    ever_infected: int
    half_coverage_time: float | None
    transmissions: int
    extinct: bool
    truncated: bool = False
    first_transmission_time: float | None = None
    end_time: float = 0.0

    @property
    def tthc(self) -> float | None:
        return self.half_coverage_time


@dataclass(frozen=True)
class GammaFit:
    shape: float
    rate: float
    mean: float
    degenerate: bool = False
    n: int = 0


@dataclass
class OutbreakBatch:
    """Raw results for ``len(seeds) x n_sims`` runs (row = seed node)."""

    seeds: np.ndarray
    ever_infected: np.ndarray
    transmissions: np.ndarray
    threshold_time: np.ndarray  # NaN where the threshold was not reached
    first_transmission_time: np.ndarray
    end_time: np.ndarray
    code: np.ndarray
    threshold: int

    @property
    def success(self) -> np.ndarray:
        return self.ever_infected >= self.threshold

    @property
    def truncated(self) -> np.ndarray:
        return self.code == K.TRUNCATED

    def record(self, i: int, j: int) -> OutbreakRecord:
        def opt(x):
            return None if math.isnan(x) else float(x)

        return OutbreakRecord(
            seed=int(self.seeds[i]),
            ever_infected=int(self.ever_infected[i, j]),
            half_coverage_time=opt(self.threshold_time[i, j]),
            transmissions=int(self.transmissions[i, j]),
            extinct=bool(self.code[i, j] == K.EXTINCT),
            truncated=bool(self.code[i, j] == K.TRUNCATED),
            first_transmission_time=opt(self.first_transmission_time[i, j]),
            end_time=float(self.end_time[i, j]),
        )


def half_threshold(n: int) -> int:
    return (n + 1) // 2


def transmission_probability(beta: float) -> float:
    """Per-edge, per-round transmission probability ``min(1, -log(1 - beta))``.

    ``-log(1 - p)`` is normally the rate whose one-step event probability is
    ``p``; here it is used in the opposite direction, so it exceeds 1 for
    ``beta > 1 - 1/e`` and is clamped.
    """
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1) for discrete time, got {beta}")
    return min(1.0, -math.log1p(-beta))


def stream_seeds(rng_seed: int, tag: int, nodes, n_sims: int) -> np.ndarray:
    """32-bit seeds for run ``(node, replicate)``, independent of ``n_sims`` and node order."""
    out = np.empty((len(nodes), n_sims), dtype=np.int64)
    for i, v in enumerate(nodes):
        ss = np.random.SeedSequence([int(rng_seed) & 0xFFFFFFFFFFFFFFFF, tag, int(v)])
        out[i] = ss.generate_state(n_sims, dtype=np.uint32)
    return out


def _resolve_caps(g: Graph, p: SimParams):
    n = g.node_count
    threshold = p.threshold if p.threshold is not None else half_threshold(n)
    if p.time_mode == "continuous":
        cap = p.event_cap if p.event_cap is not None else 100 * n
    else:
        cap = p.event_cap if p.event_cap is not None else 10 * n
    max_trans = p.max_transmissions
    if max_trans is None:
        max_trans = LARGE_NETWORK_TRANSMISSIONS if (p.model == "si" and n > LARGE_NETWORK) else 0
    return threshold, cap, max_trans


def _chunks() -> int:
    return 4 * numba.get_num_threads()


def run_batch(g: Graph, seeds, p: SimParams, rng_seeds=None, *, tag: int = STREAM_OUTCOME,
              debug: bool = False) -> OutbreakBatch:
    """Simulate ``p.n_sims`` outbreaks from each node in ``seeds``."""
    seeds = np.asarray([check_node(g, v) for v in seeds], dtype=np.int64)
    if rng_seeds is None:
        rng_seeds = stream_seeds(p.rng_seed, tag, seeds, p.n_sims)
    rng_seeds = np.ascontiguousarray(rng_seeds, dtype=np.int64)
    threshold, cap, max_trans = _resolve_caps(g, p)
    model = MODELS[p.model]
    if p.time_mode == "continuous":
        in_ptr, in_arc = g.in_arcs
        beta = 1.0 if p.model == "si" else float(p.beta)
        raw = K.batch_continuous(g.indptr, g.indices, g.weights, g.arc_sources, in_ptr, in_arc,
                                 seeds, rng_seeds, model, beta, threshold, max_trans, cap, debug,
                                 _chunks())
    else:
        r = transmission_probability(p.beta)
        raw = K.batch_discrete(g.indptr, g.indices, seeds, rng_seeds, model, r, threshold, cap,
                               _chunks())
    return OutbreakBatch(
        seeds=seeds,
        ever_infected=raw[..., 0].astype(np.int64),
        transmissions=raw[..., 1].astype(np.int64),
        threshold_time=raw[..., 2],
        first_transmission_time=raw[..., 3],
        end_time=raw[..., 4],
        code=raw[..., 5].astype(np.int64),
        threshold=threshold,
    )


def _single(g: Graph, seed: int, p: SimParams, rng, debug=False) -> OutbreakRecord:
    if isinstance(rng, np.random.Generator):
        s = int(rng.integers(0, 2**32))
    else:
        s = int(stream_seeds(int(rng), STREAM_SINGLE, [seed], 1)[0, 0])
    batch = run_batch(g, [seed], p, rng_seeds=np.array([[s]]), debug=debug)
    return batch.record(0, 0)


def simulate_si_continuous(g: Graph, seed: int, rng, *, threshold: int | None = None,
                           max_transmissions: int | None = None, debug: bool = False) -> OutbreakRecord:
    """One continuous-time SI outbreak, stopped at ``threshold`` infected nodes.

    ``rng`` is a :class:`numpy.random.Generator` or an integer seed.
    """
    if not g.is_connected():
        raise ValueError("SI simulation needs a connected graph")
    p = SimParams("si", "continuous", 1.0, 1, 0, None, threshold, max_transmissions)
    return _single(g, seed, p, rng, debug)


def simulate_recovery_continuous(g: Graph, seed: int, p: SimParams, rng,
                                 debug: bool = False) -> OutbreakRecord:
    if p.model not in ("sis", "sir"):
        raise ValueError("simulate_recovery_continuous needs model 'sis' or 'sir'")
    return _single(g, seed, SimParams(p.model, "continuous", p.beta, 1, p.rng_seed, p.event_cap,
                                      p.threshold), rng, debug)


def simulate_recovery_discrete(g: Graph, seed: int, p: SimParams, rng) -> OutbreakRecord:
    if p.model not in ("sis", "sir"):
        raise ValueError("simulate_recovery_discrete needs model 'sis' or 'sir'")
    return _single(g, seed, SimParams(p.model, "discrete", p.beta, 1, p.rng_seed, p.event_cap,
                                      p.threshold), rng)


# -- outcome measures -------------------------------------------------------


def fit_gamma(samples) -> GammaFit:
    """Method-of-moments gamma fit (sample variance, ``ddof=1``).

    Zero variance gives a degenerate fit with infinite shape and rate.
    """
    x = np.asarray(samples, dtype=np.float64)
    x = x[~np.isnan(x)]
    if len(x) == 0:
        raise ValueError("no samples to fit")
    mean = float(x.mean())
    var = float(x.var(ddof=1)) if len(x) > 1 else 0.0
    if var <= 0 or mean <= 0:
        return GammaFit(math.inf, math.inf, mean, degenerate=True, n=len(x))
    return GammaFit(mean * mean / var, mean / var, mean, n=len(x))


def tthc_outcomes(g: Graph, seeds, p: SimParams, **kw) -> list[GammaFit]:
    if p.model != "si":
        raise ValueError("tthc outcomes need the SI model")
    if not g.is_connected():
        raise ValueError("SI simulation needs a connected graph")
    batch = run_batch(g, seeds, p, **kw)
    return [fit_gamma(row) for row in batch.threshold_time]


def tthc_outcome(g: Graph, seed: int, p: SimParams) -> GammaFit:
    return tthc_outcomes(g, [seed], p)[0]


def epidemic_potentials(g: Graph, seeds, p: SimParams, **kw) -> np.ndarray:
    if p.model not in ("sis", "sir"):
        raise ValueError("epidemic potential needs model 'sis' or 'sir'")
    batch = run_batch(g, seeds, p, **kw)
    return batch.success.mean(axis=1)


def epidemic_potential(g: Graph, seed: int, p: SimParams) -> float:
    return float(epidemic_potentials(g, [seed], p)[0])


# -- beta calibration -------------------------------------------------------


@dataclass
class Calibration:
    beta: float
    multiplier: float
    lam: float
    fraction_in_band: float
    below_target: bool
    history: list = field(default_factory=list)  # (multiplier, fraction, frac_low, frac_high)

    def as_dict(self) -> dict:
        return {"beta": self.beta, "multiplier": self.multiplier, "lambda": self.lam,
                "fraction_in_band": self.fraction_in_band, "below_target": self.below_target,
                "history": [list(h) for h in self.history]}


def beta_from_multiple(g: Graph, m: float, lam: float | None = None) -> float:
    """``beta = m / lambda`` with lambda the largest adjacency eigenvalue."""
    lam = largest_eigenvalue(g) if lam is None else lam
    return m / lam


def calibrate_beta(g: Graph, p: SimParams, sample, band=(0.05, 0.95), target_frac: float = 0.80,
                   m_lo: float = 0.25, m_hi: float = 16.0, max_refinements: int = 16,
                   lam: float | None = None) -> Calibration:
    """Bisect ``beta = m / lambda`` until ``target_frac`` of ``sample`` has EPo in ``band``.

    Each probe sorts the sample into below / inside / above the band; too
    many nodes below moves the bracket up, too many above moves it down
    (geometric midpoint). Every probe reuses the same random streams. When
    no probe meets the target the best one is returned with
    ``below_target`` set.
    """
    sample = list(sample)
    if not sample:
        raise ValueError("calibration sample is empty")
    if p.model not in ("sis", "sir"):
        raise ValueError("calibration needs model 'sis' or 'sir'")
    if not g.is_connected():
        raise ValueError("calibration needs a connected graph")
    lam = largest_eigenvalue(g) if lam is None else lam
    lo, hi = band
    rng_seeds = stream_seeds(p.rng_seed, STREAM_CALIBRATION, sample, p.n_sims)
    history = []
    best = None

    def probe(m):
        beta = m / lam
        if p.time_mode == "discrete" and beta >= 1:
            return None
        epo = epidemic_potentials(g, sample, p.with_beta(beta), rng_seeds=rng_seeds)
        low = float(np.mean(epo < lo))
        high = float(np.mean(epo > hi))
        inside = 1.0 - low - high
        history.append((m, inside, low, high))
        return inside, low, high

    a, b = m_lo, m_hi
    if p.time_mode == "discrete":
        b = min(b, lam * (1 - 1e-9))
    for _ in range(max_refinements):
        m = math.sqrt(a * b)
        res = probe(m)
        if res is None:
            b = m
            continue
        inside, low, high = res
        if best is None or inside > best[1]:
            best = (m, inside)
        if inside >= target_frac:
            break
        if low > high:
            a = m
        else:
            b = m
    if best is None:
        raise ValueError("no admissible beta in the search range")
    m, inside = best
    cal = Calibration(m / lam, m, lam, inside, inside < target_frac, history)
    if cal.below_target:
        log.warning("calibration reached only %.2f of nodes in band (target %.2f)", inside, target_frac)
    return cal
