"""Minimisation of g2 over the pair rate, plateau extraction, threshold search
and parameter sweeps.

Every search over the pair rate ``N`` runs in log-space.  Matrix-model
searches are confined to ``N W <= max_mean_pairs`` (default 0.1): at larger
means the stage-1 herald of a cascaded source fires in nearly every window
and the source degenerates into a directly pumped one with pair rate ``N P``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np

from . import analytic
from ._search import bisect_log, log_grid, minimize_log
from .core import (
    ConfigError,
    DetectorSpec,
    ExperimentConfig,
    G2Error,
    Model,
    SourceKind,
)
from .detstate import DEFAULT_EPSILON, MatrixModel

DEFAULT_N_RANGE = (1e-3, 1e9)
DEFAULT_DELTA = 0.1
MAX_MEAN_PAIRS = 0.1
# widest pair-rate span a plateau edge is searched over, relative to n_opt
PLATEAU_SEARCH_DECADES = 15

ModelLike = Union[Model, str, Callable]


class SweepParameter(str, enum.Enum):
    PAIR_RATE = "pair_rate"
    CASCADE_EFFICIENCY = "cascade_efficiency"
    FIGURE_OF_MERIT = "figure_of_merit"
    ETA = "eta"


@dataclass(frozen=True)
class MinimumResult:
    n_opt: float
    g2_min: float
    degenerate: bool = False

    def __iter__(self):
        # unpacks as the (n_opt, g2_min) pair
        return iter((self.n_opt, self.g2_min))


@dataclass(frozen=True)
class Plateau:
    """Pair-rate interval on which ``g2 <= (1 + delta) g2_min``.

    ``open_lo``/``open_hi`` mark an edge that was not reached within the
    search span; the corresponding bound is then the span limit.
    """

    lo: float
    hi: float
    delta: float
    open_lo: bool = False
    open_hi: bool = False

    @property
    def decades(self) -> float:
        return math.log10(self.hi / self.lo)


@dataclass
class G2Curve:
    samples: list
    n_opt: float
    g2_min: float
    plateau: Optional[Plateau]
    degenerate: bool = False


@dataclass(frozen=True)
class SweepSpec:
    parameter: SweepParameter
    start: float
    stop: float
    points: int
    base_cfg: ExperimentConfig
    scale: str = "log"
    model: Model = Model.ANALYTIC
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        object.__setattr__(self, "parameter", SweepParameter(self.parameter))
        object.__setattr__(self, "model", Model(self.model))
        if self.model is Model.MONTE_CARLO:
            raise ConfigError("sweeps support the analytic and matrix models only")
        if self.scale not in ("log", "linear"):
            raise ConfigError(f"scale must be 'log' or 'linear', got {self.scale!r}")
        if not self.start < self.stop:
            raise ConfigError("sweep needs start < stop")
        if self.scale == "log" and not self.start > 0:
            raise ConfigError("log sweeps need start > 0")
        if self.points < 2:
            raise ConfigError("sweep needs at least 2 points")

    def values(self) -> list:
        if self.scale == "log":
            grid = np.logspace(math.log10(self.start), math.log10(self.stop), self.points)
        else:
            grid = np.linspace(self.start, self.stop, self.points)
        grid[0], grid[-1] = self.start, self.stop
        return [round_sig(float(v)) for v in grid]


@dataclass
class SweepRow:
    parameter: SweepParameter
    value: float
    model: Model
    cfg: Optional[ExperimentConfig]
    g2: Optional[float] = None
    n_opt: Optional[float] = None
    g2_min: Optional[float] = None
    plateau_lo: Optional[float] = None
    plateau_hi: Optional[float] = None
    sigma: Optional[float] = None
    error: Optional[str] = None

    @property
    def source_type(self) -> str:
        return self.cfg.source_kind.value if self.cfg is not None else ""


@dataclass
class ThresholdCrossing:
    """Cascade efficiency at which cascading starts to beat direct pumping.

    ``status`` is ``"crossing"``, ``"always"`` (cascading wins over the whole
    searched range, ``p_star = 0``) or ``"never"`` (``p_star = inf``).
    """

    p_star: float
    status: str
    p_threshold: float
    p_threshold_identical: Optional[float]
    relative_difference: float
    model: Model


def round_sig(x: float, digits: int = 9) -> float:
    """Round to ``digits`` significant digits (the precision of emitted tables)."""
    if x == 0 or not math.isfinite(x):
        return x
    return float(f"{x:.{digits - 1}e}")


def _max_rate(model, cfg, max_mean_pairs):
    if model is Model.MATRIX:
        return max_mean_pairs / cfg.window
    return math.inf


def g2_function(model: ModelLike, cfg: ExperimentConfig, *,
                epsilon: float = DEFAULT_EPSILON,
                two_pair: str = analytic.TWO_PAIR_CASCADED) -> Callable:
    """Vectorised ``g2(N)`` of ``cfg`` for the chosen model.

    A callable ``model`` is used as the curve itself (``model(N_array)``),
    which lets arbitrary objectives go through the same searches.
    """
    if callable(model) and not isinstance(model, (Model, str)):
        return model
    model = Model(model)
    if model is Model.MATRIX:
        return MatrixModel(cfg, epsilon).g2_curve
    if model is Model.ANALYTIC:
        if cfg.source_kind is SourceKind.SPDC:
            analytic._check_kind(cfg, SourceKind.SPDC)
            prm = dict(window=cfg.window, eta1=cfg.herald_stage2.eta, eta_ab=cfg.g2_a.eta,
                       dark1=cfg.herald_stage2.dark_rate, dark_ab=cfg.g2_a.dark_rate)
            return lambda n: analytic.spdc_g2_curve(n, **prm)
        analytic._check_kind(cfg, SourceKind.CSPDC)
        prm = analytic._cspdc_params(cfg)
        return lambda n: analytic.cspdc_g2_curve(n, two_pair=two_pair, **prm)
    raise ConfigError("Monte Carlo estimates cannot drive a deterministic search")


def _model_of(model):
    if callable(model) and not isinstance(model, (Model, str)):
        return None
    return Model(model)


def minimize_g2(model: ModelLike, base_cfg: ExperimentConfig, n_range=DEFAULT_N_RANGE, *,
                max_mean_pairs: float = MAX_MEAN_PAIRS, rtol: float = 1e-6,
                epsilon: float = DEFAULT_EPSILON) -> MinimumResult:
    """Pair rate minimising g2, with a boundary optimum flagged ``degenerate``."""
    f = g2_function(model, base_cfg, epsilon=epsilon)
    hi_cap = _max_rate(_model_of(model), base_cfg, max_mean_pairs)
    lo, hi = n_range
    if hi > hi_cap:
        hi = hi_cap
        lo = min(lo, hi / 1e6)
    res = minimize_log(f, lo, hi, rtol=rtol, hi_cap=hi_cap)
    return MinimumResult(n_opt=res.x, g2_min=res.fx, degenerate=res.degenerate)


def plateau(model: ModelLike, base_cfg: ExperimentConfig, delta: float = DEFAULT_DELTA,
            minimum: Optional[MinimumResult] = None, *,
            max_mean_pairs: float = MAX_MEAN_PAIRS,
            epsilon: float = DEFAULT_EPSILON) -> Optional[Plateau]:
    """Interval around the optimum where g2 stays within ``(1 + delta)`` of its minimum.

    Returns ``None`` (plateau undefined) when the optimum is degenerate.
    """
    if delta < 0:
        raise ConfigError("delta must be >= 0")
    f = g2_function(model, base_cfg, epsilon=epsilon)
    if minimum is None:
        minimum = minimize_g2(model, base_cfg, max_mean_pairs=max_mean_pairs, epsilon=epsilon)
    if minimum.degenerate:
        return None
    n0, target = minimum.n_opt, (1 + delta) * minimum.g2_min
    if delta == 0:
        return Plateau(n0, n0, delta)

    def excess(n):
        val = float(f(np.array([n]))[0])
        return val - target if math.isfinite(val) else math.inf

    hi_cap = _max_rate(_model_of(model), base_cfg, max_mean_pairs)
    span = 10.0 ** PLATEAU_SEARCH_DECADES

    def edge(direction):
        limit = n0 * span if direction > 0 else n0 / span
        if direction > 0:
            limit = min(limit, hi_cap)
        inner = n0
        while True:
            outer = inner * 10.0 ** direction
            if (direction > 0 and outer >= limit) or (direction < 0 and outer <= limit):
                outer = limit
            if excess(outer) > 0:
                return bisect_log(excess, inner, outer, rtol=1e-10), False
            if outer == limit:
                return limit, True
            inner = outer

    lo, open_lo = edge(-1)
    hi, open_hi = edge(+1)
    return Plateau(lo, hi, delta, open_lo, open_hi)


def g2_curve(model: ModelLike, cfg: ExperimentConfig, pair_rates, delta: float = DEFAULT_DELTA,
             **kw) -> G2Curve:
    """Sampled ``g2(N)`` with its refined minimum and plateau."""
    f = g2_function(model, cfg, epsilon=kw.get("epsilon", DEFAULT_EPSILON))
    pair_rates = np.asarray(pair_rates, dtype=float)
    values = f(pair_rates)
    minimum = minimize_g2(model, cfg, (pair_rates.min(), pair_rates.max()), **kw)
    pl = plateau(model, cfg, delta, minimum, **kw)
    return G2Curve(samples=list(zip(pair_rates.tolist(), np.asarray(values).tolist())),
                   n_opt=minimum.n_opt, g2_min=minimum.g2_min, plateau=pl,
                   degenerate=minimum.degenerate)


# ---------------------------------------------------------------------------
# sweeps


def _with_all(cfg: ExperimentConfig, fn) -> ExperimentConfig:
    changes = {role: fn(getattr(cfg, role))
               for role in ("herald_stage2", "herald_stage1", "g2_a", "g2_b")
               if getattr(cfg, role) is not None}
    return replace(cfg, **changes)


def apply_parameter(cfg: ExperimentConfig, parameter: SweepParameter, value: float) -> ExperimentConfig:
    """Configuration with one swept parameter set to ``value``.

    ``figure_of_merit`` sets every detector's dark rate to ``eta / (W H)``
    (rounded like table entries); ``eta`` sets every detector's efficiency.
    """
    parameter = SweepParameter(parameter)
    if parameter is SweepParameter.PAIR_RATE:
        return cfg.with_pair_rate(value)
    if parameter is SweepParameter.CASCADE_EFFICIENCY:
        if not cfg.is_cascaded:
            return cfg
        return replace(cfg, cascade_efficiency=value)
    if parameter is SweepParameter.FIGURE_OF_MERIT:
        return _with_all(cfg, lambda d: DetectorSpec(d.eta, round_sig(d.eta / (cfg.window * value))))
    return _with_all(cfg, lambda d: DetectorSpec(value, d.dark_rate))


def _evaluate_row(spec: SweepSpec, cfg: ExperimentConfig, value: float) -> SweepRow:
    row = SweepRow(spec.parameter, value, spec.model, None)
    try:
        cfg = apply_parameter(cfg, spec.parameter, value)
        row.cfg = cfg
        if spec.parameter is SweepParameter.PAIR_RATE:
            f = g2_function(spec.model, cfg)
            row.g2 = float(f(np.array([value]))[0])
            if not math.isfinite(row.g2):
                raise G2Error("g2 undefined at this pair rate")
        else:
            minimum = minimize_g2(spec.model, cfg)
            row.n_opt, row.g2_min = minimum.n_opt, minimum.g2_min
            pl = plateau(spec.model, cfg, spec.delta, minimum)
            if pl is not None:
                row.plateau_lo, row.plateau_hi = pl.lo, pl.hi
    except (G2Error, ValueError, ArithmeticError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def sweep(spec: SweepSpec, workers: int = 1) -> list:
    """Evaluate one row per grid value; failures become rows with ``error`` set.

    Base configuration values are rounded to 9 significant digits first, so
    every row carries exactly the inputs that produced it.
    """
    base = quantize_config(spec.base_cfg)
    values = spec.values()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda v: _evaluate_row(spec, base, v), values))
    return [_evaluate_row(spec, base, v) for v in values]


def sweep_curve(spec: SweepSpec) -> G2Curve:
    """Pair-rate sweep returned as a :class:`G2Curve`."""
    if spec.parameter is not SweepParameter.PAIR_RATE:
        raise ConfigError("curves are defined for pair_rate sweeps only")
    return g2_curve(spec.model, quantize_config(spec.base_cfg), spec.values(), spec.delta)


def quantize_config(cfg: ExperimentConfig) -> ExperimentConfig:
    q = lambda d: DetectorSpec(round_sig(d.eta), round_sig(d.dark_rate))  # noqa: E731
    cfg = _with_all(cfg, q)
    return replace(
        cfg,
        window=round_sig(cfg.window),
        pair_rate=None if cfg.pair_rate is None else round_sig(cfg.pair_rate),
        cascade_efficiency=(None if cfg.cascade_efficiency is None
                            else round_sig(cfg.cascade_efficiency)),
    )


# ---------------------------------------------------------------------------
# threshold


def _min_g2(model, cfg, max_mean_pairs):
    if model is Model.ANALYTIC:
        if cfg.is_cascaded:
            return analytic.g2_cspdc_min(cfg).g2_min
        return analytic.g2_spdc_min(cfg).g2_min
    return minimize_g2(model, cfg, max_mean_pairs=max_mean_pairs).g2_min


def threshold_crossing(base_cfg: ExperimentConfig, model: ModelLike = Model.ANALYTIC,
                       p_range=(1e-12, 1.0), *, rtol: float = 1e-6,
                       max_mean_pairs: float = MAX_MEAN_PAIRS) -> ThresholdCrossing:
    """Cascade efficiency where the CSPDC and SPDC minima are equal.

    ``base_cfg`` must define the stage-1 herald; its cascade efficiency is
    ignored.  The result also carries the closed-form thresholds and the
    relative difference between the numeric crossing and the general one.
    """
    model = Model(model)
    if base_cfg.herald_stage1 is None:
        raise ConfigError("threshold search needs the stage-1 herald (herald_stage1)")
    spdc = base_cfg.as_spdc()
    g2_s = _min_g2(model, spdc, max_mean_pairs)

    def diff(p):
        return _min_g2(model, base_cfg.as_cspdc(p), max_mean_pairs) - g2_s

    lo, hi = p_range
    d_lo, d_hi = diff(lo), diff(hi)
    if d_lo < 0 and d_hi < 0:
        p_star, status = 0.0, "always"
    elif d_lo >= 0 and d_hi >= 0:
        p_star, status = math.inf, "never"
    else:
        p_star, status = bisect_log(diff, lo, hi, rtol=rtol), "crossing"

    w = base_cfg.window
    h1 = base_cfg.herald_stage2.figure_of_merit(w)
    h_ab = base_cfg.g2_a.figure_of_merit(w)
    eta1 = base_cfg.herald_stage2.eta
    p_th = analytic.advantage_threshold(h1, h_ab, eta1)
    dets = {base_cfg.herald_stage2, base_cfg.herald_stage1, base_cfg.g2_a, base_cfg.g2_b}
    p_th_id = analytic.advantage_threshold_identical(h1, eta1) if len(dets) == 1 else None
    if p_th > 0 and math.isfinite(p_star):
        rel = abs(p_star - p_th) / p_th
    else:
        rel = 0.0 if p_star == p_th else math.inf
    return ThresholdCrossing(p_star, status, p_th, p_th_id, rel, model)


def is_advantageous(cfg: ExperimentConfig, model: ModelLike = Model.ANALYTIC,
                    max_mean_pairs: float = MAX_MEAN_PAIRS) -> bool:
    """Whether the configured cascade efficiency gives a lower minimum g2."""
    model = Model(model)
    return _min_g2(model, cfg, max_mean_pairs) < _min_g2(model, cfg.as_spdc(), max_mean_pairs)


__all__ = [
    "G2Curve", "MinimumResult", "Plateau", "SweepParameter", "SweepRow", "SweepSpec",
    "ThresholdCrossing", "apply_parameter", "g2_curve", "g2_function", "is_advantageous",
    "minimize_g2", "plateau", "quantize_config", "round_sig", "sweep", "sweep_curve",
    "threshold_crossing", "log_grid",
]
