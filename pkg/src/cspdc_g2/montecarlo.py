"""Window-by-window Monte Carlo of the heralding experiment.

Independent of :mod:`cspdc_g2.detstate`: photons are routed one by one and
clicks are OR-ed per window, no transition matrices are involved.

Random numbers come from NumPy's Philox4x64 counter-based generator.  Windows
are grouped in blocks of ``BLOCK_WINDOWS``; block ``b`` of a run with seed
``s`` draws from ``Philox(SeedSequence((s, b)))``, and block tallies are
summed as integers.  A tally therefore depends only on ``(seed, n_windows,
cfg)``, never on how blocks are spread over workers.  Bit-level
reproducibility across NumPy releases holds as long as NumPy keeps the
Poisson and uniform samplers of ``Generator`` unchanged.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .core import (
    ConfigError,
    EstimationError,
    ExperimentConfig,
    G2Result,
    Model,
    SourceKind,
    combo_key,
)
from .detstate import dark_click_probability, rates_from_marginals

BLOCK_WINDOWS = 1 << 18
WORKERS_ENV = "CSPDC_G2_WORKERS"
# Poisson count giving a one-sided 95% upper limit when zero events are seen
ZERO_COUNT_UPPER = -math.log(0.05)
# two-sided tail probability of a 3-sigma normal deviation
THREE_SIGMA_PVALUE = 2 * stats.norm.sf(3.0)


@dataclass(frozen=True)
class SimulationPlan:
    cfg: ExperimentConfig
    n_windows: int
    seed: int = 0

    def __post_init__(self):
        if int(self.n_windows) < 1:
            raise ConfigError(f"n_windows must be >= 1, got {self.n_windows!r}")
        object.__setattr__(self, "n_windows", int(self.n_windows))
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class CountTally:
    """Histogram of per-window click configurations.

    ``histogram[m]`` counts windows whose clicked detectors form exactly the
    configuration ``m`` (bit ``j`` <-> ``roles[j]``).
    """

    histogram: np.ndarray
    roles: tuple
    n_windows: int

    def count(self, roles) -> int:
        """Windows in which every detector of ``roles`` clicked."""
        mask = 0
        for r in roles:
            if r not in self.roles:
                raise ConfigError(f"unknown detector role {r!r}")
            mask |= 1 << self.roles.index(r)
        idx = np.arange(len(self.histogram))
        return int(self.histogram[(idx & mask) == mask].sum())

    def counts(self) -> dict:
        """Count of every non-empty detector combination, keyed by combo label."""
        out = {}
        for mask in range(1, len(self.histogram)):
            combo = [r for j, r in enumerate(self.roles) if mask >> j & 1]
            out[combo_key(combo)] = self.count(combo)
        return out

    def marginals(self) -> np.ndarray:
        idx = np.arange(len(self.histogram))
        return np.array([self.histogram[(idx & a) == a].sum() for a in idx]) / self.n_windows


def _block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, block))))


def _simulate_block(cfg: ExperimentConfig, roles: tuple, n: int, rng) -> np.ndarray:
    bit = {r: np.uint8(1 << j) for j, r in enumerate(roles)}
    pairs = rng.poisson(cfg.mean_pairs, size=n)
    total = int(pairs.sum())

    clicks = np.zeros(total, dtype=np.uint8)
    if cfg.source_kind is SourceKind.CSPDC:
        clicks[rng.random(total) < cfg.herald_stage1.eta] |= bit["2"]
        produced = rng.random(total) < cfg.cascade_efficiency
    else:
        produced = np.ones(total, dtype=bool)
    clicks[produced & (rng.random(total) < cfg.herald_stage2.eta)] |= bit["1"]
    # beamsplitter port and detection from one uniform: [0, .5) -> A, [.5, 1) -> B
    u = rng.random(total)
    clicks[produced & (u < cfg.g2_a.eta / 2)] |= bit["A"]
    clicks[produced & (u >= 0.5) & (u < 0.5 + cfg.g2_b.eta / 2)] |= bit["B"]

    windows = np.zeros(n, dtype=np.uint8)
    np.bitwise_or.at(windows, np.repeat(np.arange(n), pairs), clicks)

    for role, det in cfg.detectors().items():
        q = dark_click_probability(det.dark_rate, cfg.window)
        if q > 0:
            windows[rng.random(n) < q] |= bit[role]
    return np.bincount(windows, minlength=1 << len(roles)).astype(np.int64)


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def simulate(plan: SimulationPlan, workers: int | None = None) -> CountTally:
    cfg = plan.cfg
    roles = cfg.roles()
    n_blocks = -(-plan.n_windows // BLOCK_WINDOWS)

    def run(block):
        n = min(BLOCK_WINDOWS, plan.n_windows - block * BLOCK_WINDOWS)
        return _simulate_block(cfg, roles, n, _block_generator(plan.seed, block))

    workers = workers or default_workers()
    if workers == 1 or n_blocks == 1:
        parts = map(run, range(n_blocks))
        hist = sum(parts, np.zeros(1 << len(roles), dtype=np.int64))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hist = sum(pool.map(run, range(n_blocks)), np.zeros(1 << len(roles), dtype=np.int64))
    return CountTally(histogram=hist, roles=roles, n_windows=plan.n_windows)


def _heralds(source_kind) -> tuple:
    return ("1", "2") if SourceKind(source_kind) is SourceKind.CSPDC else ("1",)


def g2_estimate(tally: CountTally, source_kind, window: float | None = None) -> G2Result:
    """Plug-in g2 from window frequencies with a binomial error estimate.

    The four counts entering the ratio are treated as independent when
    propagating errors.  With a zero numerator the estimate is 0 and
    ``upper_bound`` carries a one-sided 95% limit.  Rates are reported in
    counts/s when ``window`` is given, otherwise as per-window frequencies.
    """
    heralds = _heralds(source_kind)
    c_h = tally.count(heralds)
    c_ha = tally.count(heralds + ("A",))
    c_hb = tally.count(heralds + ("B",))
    c_hab = tally.count(heralds + ("A", "B"))
    if c_h == 0:
        raise EstimationError("no heralding events; simulate more windows")
    if c_ha == 0 or c_hb == 0:
        raise EstimationError("no heralded A or B coincidences; simulate more windows")

    n = tally.n_windows
    g2 = c_hab * c_h / (c_ha * c_hb)
    upper = None
    if c_hab == 0:
        sigma = 0.0
        upper = ZERO_COUNT_UPPER * c_h / (c_ha * c_hb)
    else:
        rel_var = sum((1 - c / n) / c for c in (c_hab, c_h, c_ha, c_hb))
        sigma = g2 * math.sqrt(rel_var)
    rates = rates_from_marginals(tally.marginals(), tally.roles, window or 1.0)
    return G2Result(g2=g2, model=Model.MONTE_CARLO, rates=rates,
                    statistical_sigma=sigma, upper_bound=upper)


def g2_montecarlo(cfg: ExperimentConfig, n_windows: int, seed: int = 0,
                  workers: int | None = None) -> G2Result:
    tally = simulate(SimulationPlan(cfg, n_windows, seed), workers=workers)
    return g2_estimate(tally, cfg.source_kind, cfg.window)


@dataclass(frozen=True)
class MarginalCheck:
    """Simulated count of one detector combination against an exact probability.

    ``consistent`` uses the exact two-sided binomial test at the 3-sigma
    level, which stays meaningful for the small counts of rare coincidences.
    """

    combo: str
    count: int
    expected: float
    z: float
    p_value: float

    @property
    def consistent(self) -> bool:
        return self.p_value >= THREE_SIGMA_PVALUE


def check_count(combo: str, count: int, n: int, prob: float) -> MarginalCheck:
    expected = n * prob
    var = n * prob * (1 - prob)
    if var > 0:
        z = (count - expected) / math.sqrt(var)
        p_value = float(stats.binomtest(count, n, min(max(prob, 0.0), 1.0)).pvalue)
    else:
        same = count == round(expected)
        z, p_value = (0.0, 1.0) if same else (math.inf, 0.0)
    return MarginalCheck(combo, count, expected, z, p_value)


def compare_marginals(tally: CountTally, marginals) -> list:
    """Check every non-empty combination of ``tally`` against exact marginals.

    ``marginals[a]`` is the probability that all detectors of configuration
    ``a`` click (as returned by ``MatrixModel.marginals``).
    """
    counts = tally.marginals() * tally.n_windows
    out = []
    for mask in range(1, len(tally.histogram)):
        combo = combo_key(r for j, r in enumerate(tally.roles) if mask >> j & 1)
        out.append(check_count(combo, int(round(counts[mask])), tally.n_windows, float(marginals[mask])))
    return out


def g2_consistent(estimate: G2Result, exact: float, n_sigma: float = 3.0) -> bool:
    """Whether an exact g2 lies within ``n_sigma`` of a Monte Carlo estimate."""
    if estimate.upper_bound is not None:
        return exact <= estimate.upper_bound
    return abs(estimate.g2 - exact) <= n_sigma * estimate.statistical_sigma
