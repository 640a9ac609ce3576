"""Domain types shared by the analytic, matrix and Monte Carlo models.

Detector roles follow the heralding topology:

* ``"1"``  herald of the crystal whose output photon is measured (the only
  herald for plain SPDC, the cascade-stage herald for CSPDC),
* ``"2"``  herald of the first crystal (CSPDC only),
* ``"A"``, ``"B"``  the two detectors behind the 50:50 beamsplitter.

All rates are in counts per second, the coincidence window in seconds.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional


class G2Error(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(G2Error, ValueError):
    """Invalid or inconsistent experiment configuration."""


class DomainError(G2Error, ArithmeticError):
    """A model is evaluated outside the region where it is defined."""


class ResourceError(G2Error):
    """The requested evaluation would need an impractical amount of work."""


class EstimationError(G2Error):
    """Too few Monte Carlo events to form an estimate."""


class SourceKind(str, enum.Enum):
    SPDC = "spdc"
    CSPDC = "cspdc"


class Model(str, enum.Enum):
    ANALYTIC = "analytic"
    MATRIX = "matrix"
    MONTE_CARLO = "mc"


ROLE_ORDER = ("1", "2", "A", "B")


def combo_key(roles) -> str:
    """Canonical string label of a detector combination, e.g. ``"12A"``."""
    roles = set(roles)
    unknown = roles - set(ROLE_ORDER)
    if unknown:
        raise ConfigError(f"unknown detector role(s): {sorted(unknown)}")
    return "".join(r for r in ROLE_ORDER if r in roles)


@dataclass(frozen=True)
class DetectorSpec:
    """One bucket detector: Klyshko efficiency and dark-count rate (1/s)."""

    eta: float
    dark_rate: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.eta <= 1.0):
            raise ConfigError(f"eta must lie in [0, 1], got {self.eta!r}")
        if not (math.isfinite(self.dark_rate) and self.dark_rate >= 0.0):
            raise ConfigError(f"dark_rate must be finite and >= 0, got {self.dark_rate!r}")

    def figure_of_merit(self, window: float) -> "FigureOfMerit":
        return FigureOfMerit.of(self, window)


@dataclass(frozen=True)
class FigureOfMerit:
    """Detector figure of merit ``H = eta / (W d)``; infinite for d = 0."""

    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ConfigError(f"figure of merit must be > 0, got {self.value!r}")

    @classmethod
    def of(cls, det: DetectorSpec, window: float) -> "FigureOfMerit":
        if det.eta == 0:
            raise ConfigError("figure of merit undefined for eta = 0")
        if det.dark_rate == 0:
            return cls(math.inf)
        return cls(det.eta / (window * det.dark_rate))

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class ExperimentConfig:
    """Source and detector topology of one heralded single-photon experiment.

    ``pair_rate`` may be left unset for operations that optimise over it
    (minimisation, thresholds); operations that need it raise
    :class:`ConfigError`.
    """

    window: float
    source_kind: SourceKind
    herald_stage2: DetectorSpec
    g2_a: DetectorSpec
    g2_b: DetectorSpec
    pair_rate: Optional[float] = None
    cascade_efficiency: Optional[float] = None
    herald_stage1: Optional[DetectorSpec] = None

    def __post_init__(self):
        object.__setattr__(self, "source_kind", SourceKind(self.source_kind))
        if not (math.isfinite(self.window) and self.window > 0):
            raise ConfigError(f"window must be > 0, got {self.window!r}")
        if self.pair_rate is not None and not (math.isfinite(self.pair_rate) and self.pair_rate > 0):
            raise ConfigError(f"pair_rate must be > 0, got {self.pair_rate!r}")
        if self.source_kind is SourceKind.SPDC:
            if self.herald_stage1 is not None:
                raise ConfigError("SPDC configuration must not define herald_stage1")
            if self.cascade_efficiency is not None:
                raise ConfigError("SPDC configuration must not define cascade_efficiency")
        else:
            if self.herald_stage1 is None:
                raise ConfigError("CSPDC configuration requires herald_stage1")
            if self.cascade_efficiency is None:
                raise ConfigError("CSPDC configuration requires cascade_efficiency")
            if not (0.0 <= self.cascade_efficiency <= 1.0):
                raise ConfigError(
                    f"cascade_efficiency must lie in [0, 1], got {self.cascade_efficiency!r}"
                )

    @property
    def is_cascaded(self) -> bool:
        return self.source_kind is SourceKind.CSPDC

    @property
    def mean_pairs(self) -> float:
        """Mean number of primary pairs per coincidence window, ``N W``."""
        return self.require_pair_rate() * self.window

    def require_pair_rate(self) -> float:
        if self.pair_rate is None:
            raise ConfigError("pair_rate is required for this operation")
        return self.pair_rate

    def detectors(self) -> dict:
        """Role -> DetectorSpec for every detector present."""
        dets = {"1": self.herald_stage2}
        if self.is_cascaded:
            dets["2"] = self.herald_stage1
        dets["A"] = self.g2_a
        dets["B"] = self.g2_b
        return dets

    def roles(self) -> tuple:
        return tuple(self.detectors())

    def symmetric_g2_detectors(self) -> bool:
        return self.g2_a == self.g2_b

    def with_pair_rate(self, pair_rate: Optional[float]) -> "ExperimentConfig":
        return replace(self, pair_rate=pair_rate)

    def as_spdc(self) -> "ExperimentConfig":
        """The same detectors and pump used for direct (non-cascaded) heralding."""
        return replace(self, source_kind=SourceKind.SPDC, herald_stage1=None,
                       cascade_efficiency=None)

    def as_cspdc(self, cascade_efficiency: float,
                 herald_stage1: Optional[DetectorSpec] = None) -> "ExperimentConfig":
        return replace(self, source_kind=SourceKind.CSPDC,
                       cascade_efficiency=cascade_efficiency,
                       herald_stage1=herald_stage1 or self.herald_stage1 or self.herald_stage2)


def identical_detectors(eta: float, dark_rate: float, window: float,
                        source_kind=SourceKind.CSPDC, cascade_efficiency=None,
                        pair_rate=None, g2_dark_rate=None) -> ExperimentConfig:
    """Configuration where every detector has the same efficiency and dark rate.

    ``g2_dark_rate`` overrides the dark rate of the A/B detectors (use 0 for
    ideal g2 detectors).
    """
    det = DetectorSpec(eta, dark_rate)
    gdet = det if g2_dark_rate is None else DetectorSpec(eta, g2_dark_rate)
    kind = SourceKind(source_kind)
    return ExperimentConfig(
        window=window,
        source_kind=kind,
        herald_stage2=det,
        herald_stage1=det if kind is SourceKind.CSPDC else None,
        g2_a=gdet,
        g2_b=gdet,
        pair_rate=pair_rate,
        cascade_efficiency=cascade_efficiency if kind is SourceKind.CSPDC else None,
    )


@dataclass
class RateSet:
    """Singles, twofold, threefold and fourfold rates in counts/s.

    Keys are canonical combination labels from :func:`combo_key`
    (``"1"``, ``"1A"``, ``"12AB"``, ...).
    """

    singles: dict = field(default_factory=dict)
    doubles: dict = field(default_factory=dict)
    triples: dict = field(default_factory=dict)
    fourfold: Optional[float] = None

    def __post_init__(self):
        for name, value in self.items():
            if not value >= 0:
                raise DomainError(f"negative or undefined rate {name} = {value!r}")

    def items(self):
        yield from self.singles.items()
        yield from self.doubles.items()
        yield from self.triples.items()
        if self.fourfold is not None:
            yield "12AB", self.fourfold

    def rate(self, roles) -> float:
        key = combo_key(roles)
        table = {1: self.singles, 2: self.doubles, 3: self.triples}.get(len(key))
        if table is None:
            if self.fourfold is None:
                raise KeyError(key)
            return self.fourfold
        return table[key]

    @classmethod
    def from_mapping(cls, rates: Mapping) -> "RateSet":
        """Build from ``{combo label: rate}``; labels of length 1..4."""
        out = cls()
        for key, value in rates.items():
            key = combo_key(key)
            if len(key) == 1:
                out.singles[key] = value
            elif len(key) == 2:
                out.doubles[key] = value
            elif len(key) == 3:
                out.triples[key] = value
            elif len(key) == 4:
                out.fourfold = value
        out.__post_init__()
        return out


@dataclass
class G2Result:
    g2: float
    model: Model
    rates: RateSet
    statistical_sigma: Optional[float] = None
    # one-sided 95% bound, set when the Monte Carlo numerator count is zero
    upper_bound: Optional[float] = None

    def __post_init__(self):
        self.model = Model(self.model)
        if not self.g2 >= 0:
            raise DomainError(f"g2 must be >= 0, got {self.g2!r}")
