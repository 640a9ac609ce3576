"""Closed-form rate and g2 expressions for SPDC and cascaded SPDC heralding.

These are low-rate approximations: accidental twofolds are neglected, the
cascade-stage herald of a CSPDC source is taken to be dark-count dominated
(``S1 ~ d1``), and the A/B detectors must be identical.  The exact models in
:mod:`cspdc_g2.detstate` and :mod:`cspdc_g2.montecarlo` make none of these
approximations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._search import minimize_log
from .core import (
    ConfigError,
    DomainError,
    ExperimentConfig,
    FigureOfMerit,
    G2Result,
    Model,
    RateSet,
    SourceKind,
)

# Forms of the two-pair fourfold term of a cascaded source.
TWO_PAIR_CASCADED = "cascaded"
TWO_PAIR_UNCONVERTED = "unconverted"
TWO_PAIR_FORMS = (TWO_PAIR_CASCADED, TWO_PAIR_UNCONVERTED)

DEFAULT_N_RANGE = (1e-3, 1e9)


@dataclass(frozen=True)
class Optimum:
    """Minimum of g2 over the pair rate.

    ``degenerate`` marks the absence of an interior optimum: the minimum is
    approached only as the pair rate goes to a boundary (``n_opt`` then holds
    that boundary, 0 for the dark-free limits).
    """

    g2_min: float
    n_opt: float
    degenerate: bool = False


@dataclass(frozen=True)
class PerfectDetectorLimits:
    g2_s_min: float
    g2_c_min: float
    ratio: float
    ratio_infinite: bool = False


def _check_kind(cfg: ExperimentConfig, kind: SourceKind):
    if cfg.source_kind is not kind:
        raise ConfigError(f"expected a {kind.value} configuration, got {cfg.source_kind.value}")
    if not cfg.symmetric_g2_detectors():
        raise ConfigError("closed-form expressions assume identical A and B detectors")
    if kind is SourceKind.CSPDC and (cfg.herald_stage1 is None or cfg.cascade_efficiency is None):
        raise ConfigError("CSPDC configuration requires herald_stage1 and cascade_efficiency")


# ---------------------------------------------------------------------------
# direct SPDC heralding


def spdc_g2_curve(n, window, eta1, eta_ab, dark1, dark_ab):
    """Vectorised SPDC heralded g2 as a function of the pair rate ``n``."""
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore"):
        return (4 * dark_ab / (n * eta1 * eta_ab) + 2 / eta1 - 1) * (n * window * eta1 + window * dark1)


def spdc_rates(cfg: ExperimentConfig) -> RateSet:
    _check_kind(cfg, SourceKind.SPDC)
    n = cfg.require_pair_rate()
    w = cfg.window
    eta1, d1 = cfg.herald_stage2.eta, cfg.herald_stage2.dark_rate
    eta_ab, d_ab = cfg.g2_a.eta, cfg.g2_a.dark_rate

    s1 = n * eta1 + d1
    s_ab = n * eta_ab / 2 + d_ab
    d_1x = n * eta1 * eta_ab / 2
    # the last term removes double pairs counted once via A and once via B
    t_1ab = d_1x * s_ab * w + d_1x * s_ab * w - d_1x * d_1x * w
    return RateSet(
        singles={"1": s1, "A": s_ab, "B": s_ab},
        doubles={"1A": d_1x, "1B": d_1x},
        triples={"1AB": t_1ab},
    )


def g2_spdc(cfg: ExperimentConfig) -> G2Result:
    rates = spdc_rates(cfg)
    n = cfg.require_pair_rate()
    if cfg.herald_stage2.eta == 0 or cfg.g2_a.eta == 0:
        raise DomainError("g2 undefined: no heralded coincidences for zero efficiency")
    g2 = float(spdc_g2_curve(n, cfg.window, cfg.herald_stage2.eta, cfg.g2_a.eta,
                             cfg.herald_stage2.dark_rate, cfg.g2_a.dark_rate))
    return G2Result(g2=g2, model=Model.ANALYTIC, rates=rates)


def _spdc_min(eta1, h1, h_ab):
    return (2 / math.sqrt(h_ab) + math.sqrt((2 - eta1) / h1)) ** 2


def g2_spdc_min(cfg: ExperimentConfig) -> Optimum:
    """Minimum over the pair rate of the SPDC heralded g2 (``pair_rate`` ignored)."""
    _check_kind(cfg, SourceKind.SPDC)
    eta1, d1 = cfg.herald_stage2.eta, cfg.herald_stage2.dark_rate
    eta_ab, d_ab = cfg.g2_a.eta, cfg.g2_a.dark_rate
    if eta1 == 0 or eta_ab == 0:
        raise DomainError("g2 undefined for zero efficiency")
    h1 = FigureOfMerit.of(cfg.herald_stage2, cfg.window).value
    h_ab = FigureOfMerit.of(cfg.g2_a, cfg.window).value
    g2_min = _spdc_min(eta1, h1, h_ab)
    n_opt = math.sqrt(4 * d_ab * d1 / (eta_ab * eta1 * (2 - eta1)))
    return Optimum(g2_min=g2_min, n_opt=n_opt, degenerate=(n_opt == 0))


# ---------------------------------------------------------------------------
# cascaded heralding


def _cspdc_params(cfg):
    return dict(
        window=cfg.window,
        p=cfg.cascade_efficiency,
        eta1=cfg.herald_stage2.eta,
        eta2=cfg.herald_stage1.eta,
        eta_ab=cfg.g2_a.eta,
        dark1=cfg.herald_stage2.dark_rate,
        dark2=cfg.herald_stage1.dark_rate,
        dark_ab=cfg.g2_a.dark_rate,
    )


def _cspdc_rate_arrays(n, window, p, eta1, eta2, eta_ab, dark1, dark2, dark_ab,
                       two_pair=TWO_PAIR_CASCADED):
    if two_pair not in TWO_PAIR_FORMS:
        raise ValueError(f"two_pair must be one of {TWO_PAIR_FORMS}, got {two_pair!r}")
    n = np.asarray(n, dtype=float)
    t_12x = n * p * eta1 * eta2 * eta_ab / 2
    s2 = n * eta2 + dark2
    # herald 1 is taken to be dark-count dominated
    d_12 = s2 * dark1 * window + n * p * eta1 * eta2
    both_heralds = (1 - (1 - eta2) ** 2) * (1 - (1 - eta1) ** 2)
    if two_pair == TWO_PAIR_CASCADED:
        # two cascades in one window: P^2, Poisson 1/2, A/B split 1/2
        two = p ** 2 * both_heralds * n ** 2 * eta_ab ** 2 * window / 4
    else:
        two = both_heralds * n ** 2 * eta_ab ** 2 * window / 2
    f = 2 * t_12x * dark_ab * window + two
    return t_12x, s2, d_12, f


def cspdc_g2_curve(n, window, p, eta1, eta2, eta_ab, dark1, dark2, dark_ab,
                   two_pair=TWO_PAIR_CASCADED):
    """Vectorised CSPDC heralded g2 as a function of the pair rate ``n``."""
    t, _, d_12, f = _cspdc_rate_arrays(n, window, p, eta1, eta2, eta_ab, dark1, dark2,
                                       dark_ab, two_pair)
    with np.errstate(divide="ignore", invalid="ignore"):
        return f * d_12 / (t * t)


def cspdc_rates(cfg: ExperimentConfig, two_pair: str = TWO_PAIR_CASCADED) -> RateSet:
    """Approximate CSPDC rates.

    ``two_pair`` selects the double-cascade contribution to the fourfold rate:
    ``"cascaded"`` requires both primary pairs to convert (factor ``P**2``)
    and is the form the closed-form minimum follows from exactly;
    ``"unconverted"`` omits the conversion factors and overstates the term by
    ``2 / P**2``.  It is kept for comparison against the exact models.
    """
    _check_kind(cfg, SourceKind.CSPDC)
    n = cfg.require_pair_rate()
    prm = _cspdc_params(cfg)
    t, s2, d_12, f = (float(x) for x in _cspdc_rate_arrays(n, two_pair=two_pair, **prm))
    s_ab = n * prm["p"] * prm["eta_ab"] / 2 + prm["dark_ab"]
    return RateSet(
        singles={"1": prm["dark1"], "2": s2, "A": s_ab, "B": s_ab},
        doubles={"12": d_12},
        triples={"12A": t, "12B": t},
        fourfold=f,
    )


def g2_cspdc(cfg: ExperimentConfig, two_pair: str = TWO_PAIR_CASCADED) -> G2Result:
    rates = cspdc_rates(cfg, two_pair)
    t_a, t_b = rates.triples["12A"], rates.triples["12B"]
    if t_a == 0 or t_b == 0:
        raise DomainError("g2 undefined: no heralded triples (zero efficiency or P = 0)")
    g2 = rates.fourfold * rates.doubles["12"] / (t_a * t_b)
    return G2Result(g2=g2, model=Model.ANALYTIC, rates=rates)


def _cspdc_min(p, eta1, eta2, h1, h2, h_ab):
    first = 2 / math.sqrt(h_ab) * math.sqrt(1 + 1 / (p * h1))
    second = math.sqrt((2 - eta1) * (2 - eta2) / (h1 * h2))
    return (first + second) ** 2


def g2_cspdc_min(cfg: ExperimentConfig, n_range=DEFAULT_N_RANGE) -> Optimum:
    """Closed-form CSPDC minimum; the optimal pair rate is found numerically."""
    _check_kind(cfg, SourceKind.CSPDC)
    prm = _cspdc_params(cfg)
    if prm["p"] == 0:
        raise DomainError("no cascade: cascade_efficiency = 0")
    if min(prm["eta1"], prm["eta2"], prm["eta_ab"]) == 0:
        raise DomainError("g2 undefined for zero efficiency")
    w = cfg.window
    h1 = FigureOfMerit.of(cfg.herald_stage2, w).value
    h2 = FigureOfMerit.of(cfg.herald_stage1, w).value
    h_ab = FigureOfMerit.of(cfg.g2_a, w).value
    g2_min = _cspdc_min(prm["p"], prm["eta1"], prm["eta2"], h1, h2, h_ab)

    res = minimize_log(lambda n: cspdc_g2_curve(n, **prm), *n_range)
    return Optimum(g2_min=g2_min, n_opt=res.x, degenerate=res.degenerate)


# ---------------------------------------------------------------------------
# design criteria


def advantage_threshold(h1, h_ab, eta1: float) -> float:
    """Cascade efficiency above which cascading is expected to win, general detectors.

    ``h1`` and ``h_ab`` are figures of merit (floats or :class:`FigureOfMerit`);
    an infinite ``h_ab`` (dark-free g2 detectors) gives 0.
    """
    h1, h_ab = float(h1), float(h_ab)
    if not math.isfinite(h1):
        raise DomainError("herald figure of merit must be finite")
    if math.isinf(h_ab):
        return 0.0
    return 1.0 / (h1 + (2 - eta1) / 4 * h_ab + math.sqrt((2 - eta1) * h_ab * h1))


def advantage_threshold_identical(h, eta1: float) -> float:
    """Identical-detector threshold ``1 / (H F(eta))``.

    Break-even point of :func:`improvement_ratio`.  It lacks the ``H1`` term
    of :func:`advantage_threshold`, so the two differ even when every
    detector is the same.
    """
    h = float(h)
    if math.isinf(h):
        return 0.0
    return 1.0 / (h * f_factor(eta1))


def f_factor(eta1: float) -> float:
    if not (0.0 <= eta1 <= 1.0):
        raise ValueError(f"eta must lie in [0, 1], got {eta1!r}")
    return math.sqrt(2 - eta1) + (2 - eta1) / 4


def improvement_ratio(eta: float, p: float, h) -> float:
    """SPDC over CSPDC minimum g2 when every detector is identical."""
    h = float(h)
    return (1 + f_factor(eta)) / (1 + 1 / (p * h))


def perfect_g2_detector_limits(cfg: ExperimentConfig) -> PerfectDetectorLimits:
    """Minimum g2 of both schemes with dark-free A/B detectors.

    ``cfg`` must carry the stage-1 herald (a CSPDC configuration, or pass
    one built with :meth:`ExperimentConfig.as_cspdc`).
    """
    if cfg.g2_a.dark_rate != 0 or cfg.g2_b.dark_rate != 0:
        raise ConfigError("perfect-detector limits need zero dark rate on A and B")
    if cfg.herald_stage1 is None:
        raise ConfigError("the stage-1 herald (herald_stage1) is required")
    w = cfg.window
    eta1, eta2 = cfg.herald_stage2.eta, cfg.herald_stage1.eta
    h1 = FigureOfMerit.of(cfg.herald_stage2, w).value
    h2 = FigureOfMerit.of(cfg.herald_stage1, w).value
    g2_s = (2 - eta1) / h1
    g2_c = (2 - eta1) * (2 - eta2) / (h1 * h2)
    ratio = h2 / (2 - eta2)
    return PerfectDetectorLimits(g2_s, g2_c, ratio, ratio_infinite=math.isinf(ratio))


def heralded_photon_rate(cfg: ExperimentConfig) -> float:
    """Rate of genuinely heralded output photons (darks excluded), 1/s."""
    n = cfg.require_pair_rate()
    if cfg.is_cascaded:
        return n * cfg.cascade_efficiency * cfg.herald_stage2.eta * cfg.herald_stage1.eta
    return n * cfg.herald_stage2.eta


def pair_rate_for_heralded_rate(cfg: ExperimentConfig, rate: float) -> float:
    """Pair rate giving the requested :func:`heralded_photon_rate`."""
    per_pair = heralded_photon_rate(cfg.with_pair_rate(1.0))
    if per_pair == 0:
        raise DomainError("no heralded photons for this configuration")
    return rate / per_pair
