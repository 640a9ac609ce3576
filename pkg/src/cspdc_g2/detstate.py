"""Exact per-window click statistics of a bank of bucket detectors.

The bank is described by a probability vector over the ``2**k`` on/off
configurations of its ``k`` detectors.  Bit ``j`` of a configuration index is
the state of detector ``j`` of :class:`DetectorBank` (``("1", "A", "B")`` for
SPDC, ``("1", "2", "A", "B")`` for CSPDC), so index 0 is "all off".

Dark counts act once per window through ``M_d``; every generated primary
pair acts through ``M_eta``.  With Poissonian pair numbers the final state is

    P = sum_i p_i  M_eta^i  M_d  P0

evaluated with a running product.  Both matrices OR a random click pattern
into the current configuration, so they are column-stochastic and can never
switch a detector off.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .core import (
    ConfigError,
    DetectorSpec,
    DomainError,
    ExperimentConfig,
    G2Result,
    Model,
    RateSet,
    ResourceError,
    SourceKind,
    combo_key,
)

DEFAULT_EPSILON = 1e-12
# largest photon-number truncation accepted before giving up
MAX_ORDER = 5000


@dataclass(frozen=True)
class DetectorBank:
    roles: tuple
    detectors: tuple

    def __post_init__(self):
        if len(set(self.roles)) != len(self.roles):
            raise ConfigError(f"detector roles must be unique, got {self.roles}")
        if len(self.roles) != len(self.detectors):
            raise ConfigError("one DetectorSpec per role is required")
        if len(self.roles) not in (3, 4):
            raise ConfigError("banks of 3 (SPDC) or 4 (CSPDC) detectors are supported")

    @classmethod
    def from_config(cls, cfg: ExperimentConfig) -> "DetectorBank":
        dets = cfg.detectors()
        return cls(tuple(dets), tuple(dets.values()))

    @property
    def k(self) -> int:
        return len(self.roles)

    @property
    def size(self) -> int:
        return 1 << len(self.roles)

    def bit(self, role: str) -> int:
        try:
            return 1 << self.roles.index(role)
        except ValueError:
            raise ConfigError(f"unknown detector role {role!r} for bank {self.roles}") from None

    def mask(self, roles) -> int:
        m = 0
        for r in roles:
            m |= self.bit(r)
        return m

    def spec(self, role: str) -> DetectorSpec:
        return self.detectors[self.roles.index(role)]


@dataclass(frozen=True)
class StateVector:
    probs: np.ndarray
    roles: tuple

    def probability(self, on=(), off=()) -> float:
        return event_probability(self, on, off)


@dataclass(frozen=True)
class PhotonNumberWeights:
    mean: float
    weights: np.ndarray
    truncation_epsilon: float

    @property
    def order(self) -> int:
        """Truncation order ``n``: weights cover 0..n pairs."""
        return len(self.weights) - 1


def or_matrix(outcomes: dict, size: int) -> np.ndarray:
    """Transition matrix that ORs a random click pattern into the state.

    ``outcomes`` maps a click mask to its probability.
    """
    m = np.zeros((size, size))
    for state in range(size):
        for mask, p in outcomes.items():
            m[state | mask, state] += p
    return m


def is_column_stochastic(m: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.all(m >= -tol) and np.all(m <= 1 + tol) and np.allclose(m.sum(axis=0), 1.0, rtol=0, atol=tol))


def is_monotone(m: np.ndarray) -> bool:
    """No transition switches an "on" detector off."""
    rows, cols = np.nonzero(m)
    return bool(np.all((rows & cols) == cols))


def dark_click_probability(dark_rate: float, window: float) -> float:
    return -math.expm1(-dark_rate * window)


def build_dark_matrix(bank: DetectorBank, window: float) -> np.ndarray:
    if not window > 0:
        raise ConfigError(f"window must be > 0, got {window!r}")
    q = [dark_click_probability(d.dark_rate, window) for d in bank.detectors]
    outcomes = {}
    for mask in range(bank.size):
        p = 1.0
        for j, qj in enumerate(q):
            p *= qj if mask >> j & 1 else 1.0 - qj
        if p:
            outcomes[mask] = p
    return or_matrix(outcomes, bank.size)


def pair_outcomes(bank: DetectorBank, cfg: ExperimentConfig) -> dict:
    """Distribution of the click pattern produced by one primary pair."""
    if bank.roles != cfg.roles():
        raise ConfigError(f"bank roles {bank.roles} do not match a {cfg.source_kind.value} "
                          f"configuration {cfg.roles()}")
    bit_1, bit_a, bit_b = bank.bit("1"), bank.bit("A"), bank.bit("B")
    eta_a, eta_b = cfg.g2_a.eta, cfg.g2_b.eta
    # the measured photon leaves the 50:50 beamsplitter towards A or B
    signal = {0: 1 - eta_a / 2 - eta_b / 2, bit_a: eta_a / 2, bit_b: eta_b / 2}
    eta1 = cfg.herald_stage2.eta
    output_pair = {}
    for (h, ph), (s, ps) in itertools.product(((bit_1, eta1), (0, 1 - eta1)), signal.items()):
        output_pair[h | s] = output_pair.get(h | s, 0.0) + ph * ps

    if cfg.source_kind is SourceKind.SPDC:
        outcomes = output_pair
    else:
        bit_2 = bank.bit("2")
        eta2, p = cfg.herald_stage1.eta, cfg.cascade_efficiency
        converted = {m: p * q for m, q in output_pair.items()}
        converted[0] = converted.get(0, 0.0) + (1 - p)
        outcomes = {}
        for (h, ph), (m, pm) in itertools.product(((bit_2, eta2), (0, 1 - eta2)), converted.items()):
            outcomes[h | m] = outcomes.get(h | m, 0.0) + ph * pm
    return {m: p for m, p in outcomes.items() if p > 0}


def build_pair_matrix(bank: DetectorBank, cfg: ExperimentConfig) -> np.ndarray:
    return or_matrix(pair_outcomes(bank, cfg), bank.size)


def poisson_weights(mean: float, epsilon: float = DEFAULT_EPSILON,
                    reference_order: int = 0) -> PhotonNumberWeights:
    """Poisson pair-number weights truncated once the upper tail is negligible.

    The order ``n`` is the smallest integer whose tail mass ``P(X > n)`` is at
    most ``epsilon``.  With ``reference_order = r > 0`` the bound becomes
    ``epsilon * min(1, P(X = r))`` so that events needing ``r`` pairs keep a
    relative (rather than absolute) accuracy of ``epsilon`` at small means.
    """
    if not (mean >= 0 and math.isfinite(mean)):
        raise ConfigError(f"mean pair number must be finite and >= 0, got {mean!r}")
    if not (0 < epsilon < 1):
        raise ConfigError(f"truncation epsilon must lie in (0, 1), got {epsilon!r}")
    bound = epsilon
    if reference_order > 0:
        bound *= min(1.0, float(stats.poisson.pmf(reference_order, mean)))
    # P(X > n) is decreasing in n; start near the bulk for large means
    n = max(0, int(mean - 10 * math.sqrt(mean))) if mean > 100 else 0
    while special.pdtrc(n, mean) > bound:
        n += 1
        if n > MAX_ORDER:
            raise ResourceError(
                f"mean of {mean:.3g} pairs per window needs more than {MAX_ORDER} terms; "
                "reduce pair_rate * window (the model targets N W << 1)")
    weights = stats.poisson.pmf(np.arange(n + 1), mean)
    return PhotonNumberWeights(mean=mean, weights=weights, truncation_epsilon=epsilon)


def _superset_matrix(size: int) -> np.ndarray:
    """``S[a, m] = 1`` when configuration ``m`` has every detector of ``a`` on."""
    idx = np.arange(size)
    return ((idx[None, :] & idx[:, None]) == idx[:, None]).astype(float)


class MatrixModel:
    """Detector-state model of one configuration, reusable across pair rates.

    ``M_d`` and ``M_eta`` do not depend on the pair rate, so the vectors
    ``M_eta^i M_d P0`` are built once and only the Poisson weights change
    from one rate to the next.
    """

    def __init__(self, cfg: ExperimentConfig, epsilon: float = DEFAULT_EPSILON):
        self.cfg = cfg
        self.epsilon = epsilon
        self.bank = DetectorBank.from_config(cfg)
        self.dark_matrix = build_dark_matrix(self.bank, cfg.window)
        self.pair_matrix = build_pair_matrix(self.bank, cfg)
        p0 = np.zeros(self.bank.size)
        p0[0] = 1.0
        self._powers = [self.dark_matrix @ p0]
        self._superset = _superset_matrix(self.bank.size)

    def _vectors(self, order: int) -> np.ndarray:
        while len(self._powers) <= order:
            self._powers.append(self.pair_matrix @ self._powers[-1])
        return np.array(self._powers[: order + 1])

    def weights(self, mean: float) -> PhotonNumberWeights:
        return poisson_weights(mean, self.epsilon, reference_order=self.bank.k)

    def state(self, mean: float) -> StateVector:
        w = self.weights(mean).weights
        probs = w @ self._vectors(len(w) - 1)
        return StateVector(probs=probs, roles=self.bank.roles)

    def marginals(self, pair_rates) -> np.ndarray:
        """``P(all detectors of a on)`` for every configuration ``a``, per pair rate."""
        pair_rates = np.atleast_1d(np.asarray(pair_rates, dtype=float))
        all_w = [self.weights(n * self.cfg.window).weights for n in pair_rates]
        order = max(len(w) for w in all_w) - 1
        wmat = np.zeros((len(all_w), order + 1))
        for i, w in enumerate(all_w):
            wmat[i, : len(w)] = w
        states = wmat @ self._vectors(order)
        return states @ self._superset.T

    def _heralding_masks(self):
        b = self.bank
        herald = b.mask(("1", "2") if "2" in b.roles else ("1",))
        return herald, herald | b.bit("A"), herald | b.bit("B"), herald | b.bit("A") | b.bit("B")

    def g2_from_marginals(self, marg: np.ndarray) -> np.ndarray:
        h, ha, hb, hab = self._heralding_masks()
        with np.errstate(divide="ignore", invalid="ignore"):
            return marg[..., hab] * marg[..., h] / (marg[..., ha] * marg[..., hb])

    def g2_curve(self, pair_rates) -> np.ndarray:
        return self.g2_from_marginals(self.marginals(pair_rates))


def final_state(cfg: ExperimentConfig, epsilon: float = DEFAULT_EPSILON) -> StateVector:
    return MatrixModel(cfg, epsilon).state(cfg.mean_pairs)


def event_probability(state: StateVector, on=(), off=()) -> float:
    """Probability that every detector in ``on`` clicked and none in ``off`` did."""
    bits = {r: 1 << j for j, r in enumerate(state.roles)}
    unknown = (set(on) | set(off)) - set(bits)
    if unknown:
        raise ConfigError(f"unknown detector role(s) {sorted(unknown)} for bank {state.roles}")
    on_mask = sum(bits[r] for r in set(on))
    off_mask = sum(bits[r] for r in set(off))
    idx = np.arange(len(state.probs))
    sel = ((idx & on_mask) == on_mask) & ((idx & off_mask) == 0)
    return float(state.probs[sel].sum())


def rates_from_marginals(marg: np.ndarray, roles: tuple, window: float) -> RateSet:
    """RateSet holding every coincidence combination of the bank, in 1/s."""
    rates = {}
    for mask in range(1, len(marg)):
        combo = [r for j, r in enumerate(roles) if mask >> j & 1]
        rates[combo_key(combo)] = float(marg[mask]) / window
    return RateSet.from_mapping(rates)


def g2_matrix(cfg: ExperimentConfig, epsilon: float = DEFAULT_EPSILON) -> G2Result:
    model = MatrixModel(cfg, epsilon)
    marg = model.marginals([cfg.require_pair_rate()])[0]
    h, ha, hb, _ = model._heralding_masks()
    if marg[h] == 0 or marg[ha] == 0 or marg[hb] == 0:
        raise DomainError("g2 undefined: heralded coincidences have zero probability")
    g2 = float(model.g2_from_marginals(marg))
    return G2Result(g2=g2, model=Model.MATRIX,
                    rates=rates_from_marginals(marg, model.bank.roles, cfg.window))
