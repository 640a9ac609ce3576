import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from cspdc_g2 import analytic as an
from cspdc_g2.core import ConfigError, Model
from cspdc_g2.detstate import g2_matrix
from cspdc_g2.optsweep import (
    MAX_MEAN_PAIRS,
    SweepParameter,
    SweepSpec,
    apply_parameter,
    g2_curve,
    is_advantageous,
    minimize_g2,
    plateau,
    round_sig,
    sweep,
    sweep_curve,
    threshold_crossing,
)


def test_round_sig():
    assert round_sig(1.23456789012345) == 1.23456789
    assert round_sig(0.0) == 0.0
    assert math.isinf(round_sig(math.inf))


# --- minimisation --------------------------------------------------------------


def test_minimize_synthetic_convex_hook():
    # g2 = a/N + b N with a = 4, b = 1e-6: minimum at N = 2000, value 4e-3
    res = minimize_g2(lambda n: 4.0 / n + 1e-6 * n, None, (1e-3, 1e9))
    assert res.n_opt == pytest.approx(2000.0, rel=1e-5)
    assert res.g2_min == pytest.approx(4e-3, rel=1e-9)
    assert not res.degenerate
    n, g = res
    assert (n, g) == (res.n_opt, res.g2_min)


def test_minimize_flags_boundary_minimum():
    res = minimize_g2(lambda n: 1.0 / n, None, (1.0, 1e3))
    assert res.degenerate


def test_minimize_analytic_spdc(identical_spdc):
    res = minimize_g2(Model.ANALYTIC, identical_spdc)
    closed = an.g2_spdc_min(identical_spdc)
    assert res.n_opt == pytest.approx(closed.n_opt, rel=1e-4)
    assert res.g2_min == pytest.approx(closed.g2_min, rel=1e-9)


def test_minimize_matrix_cspdc(identical_cspdc):
    res = minimize_g2(Model.MATRIX, identical_cspdc)
    assert res.g2_min == pytest.approx(6.5336e-7, rel=2e-3)
    assert res.n_opt * identical_cspdc.window <= MAX_MEAN_PAIRS
    # brute-force oracle on the same model
    f = lambda u: g2_matrix(identical_cspdc.with_pair_rate(math.exp(u))).g2  # noqa: E731
    ref = minimize_scalar(f, bounds=(math.log(1e3), math.log(1e6)), method="bounded",
                          options={"xatol": 1e-10})
    assert res.g2_min == pytest.approx(ref.fun, rel=1e-8)


def test_minimize_matrix_respects_rate_cap(identical_cspdc):
    cfg = identical_cspdc.as_cspdc(0.9)
    res = minimize_g2(Model.MATRIX, cfg)
    assert res.n_opt <= MAX_MEAN_PAIRS / cfg.window * (1 + 1e-9)


def test_monte_carlo_cannot_be_minimised(identical_cspdc):
    with pytest.raises(ConfigError):
        minimize_g2(Model.MONTE_CARLO, identical_cspdc)


# --- plateau ------------------------------------------------------------------


def test_plateau_synthetic():
    # a/N + bN <= 1.1 * 2 sqrt(ab): edges solve x + 1/x = 2.2 with x = N sqrt(b/a)
    f = lambda n: 4.0 / n + 1e-6 * n  # noqa: E731
    pl = plateau(f, None, 0.1)
    x_hi = 1.1 + math.sqrt(1.1 ** 2 - 1)
    assert pl.hi == pytest.approx(2000 * x_hi, rel=1e-6)
    assert pl.lo == pytest.approx(2000 / x_hi, rel=1e-6)
    assert not pl.open_lo and not pl.open_hi


def test_plateau_zero_delta_collapses():
    pl = plateau(lambda n: 4.0 / n + 1e-6 * n, None, 0.0)
    assert pl.lo == pl.hi
    assert pl.decades == 0


def test_plateau_negative_delta():
    with pytest.raises(ConfigError):
        plateau(lambda n: 1 / n + n, None, -0.1)


def test_plateau_undefined_for_degenerate_minimum(identical_spdc):
    from dataclasses import replace

    from cspdc_g2.core import DetectorSpec
    cfg = replace(identical_spdc, herald_stage2=DetectorSpec(0.7, 0.0), g2_a=DetectorSpec(0.7, 0.0),
                  g2_b=DetectorSpec(0.7, 0.0))
    assert plateau(Model.ANALYTIC, cfg) is None


def test_plateau_widths_matrix(identical_cspdc, identical_spdc):
    pc = plateau(Model.MATRIX, identical_cspdc, 0.1)
    ps = plateau(Model.MATRIX, identical_spdc, 0.1)
    assert pc.decades >= 2
    assert pc.decades > ps.decades
    assert ps.lo == pytest.approx(26.26, rel=2e-3)
    assert ps.hi == pytest.approx(95.65, rel=2e-3)


def test_plateau_edges_satisfy_definition(identical_cspdc):
    res = minimize_g2(Model.ANALYTIC, identical_cspdc)
    pl = plateau(Model.ANALYTIC, identical_cspdc, 0.1, res)
    for edge in (pl.lo, pl.hi):
        g = an.g2_cspdc(identical_cspdc.with_pair_rate(edge)).g2
        assert g == pytest.approx(1.1 * res.g2_min, rel=1e-6)
    inside = math.sqrt(pl.lo * pl.hi)
    assert an.g2_cspdc(identical_cspdc.with_pair_rate(inside)).g2 <= 1.1 * res.g2_min


def test_g2_curve(identical_spdc):
    rates = np.logspace(0, 4, 41)
    curve = g2_curve(Model.ANALYTIC, identical_spdc, rates)
    assert len(curve.samples) == 41
    assert curve.n_opt == pytest.approx(50.1176, rel=1e-4)
    assert curve.samples[0][1] == pytest.approx(an.g2_spdc(identical_spdc.with_pair_rate(1.0)).g2)
    assert curve.plateau.lo < curve.n_opt < curve.plateau.hi


# --- sweeps -------------------------------------------------------------------


def test_sweep_spec_validation(identical_cspdc):
    with pytest.raises(ConfigError):
        SweepSpec("pair_rate", 1, 10, 1, identical_cspdc)
    with pytest.raises(ConfigError):
        SweepSpec("pair_rate", 10, 1, 5, identical_cspdc)
    with pytest.raises(ConfigError):
        SweepSpec("pair_rate", 0, 1, 5, identical_cspdc)
    with pytest.raises(ConfigError):
        SweepSpec("pair_rate", 1, 10, 5, identical_cspdc, model="mc")
    with pytest.raises(ValueError):
        SweepSpec("temperature", 1, 10, 5, identical_cspdc)


def test_two_point_sweep_gives_endpoints(identical_cspdc):
    spec = SweepSpec("pair_rate", 10.0, 1e6, 2, identical_cspdc)
    rows = sweep(spec)
    assert [r.value for r in rows] == [10.0, 1e6]
    assert rows[0].g2 == pytest.approx(an.g2_cspdc(identical_cspdc.with_pair_rate(10.0)).g2)


def test_linear_sweep_values(identical_cspdc):
    spec = SweepSpec("eta", 0.1, 0.9, 5, identical_cspdc, scale="linear")
    assert spec.values() == [0.1, 0.3, 0.5, 0.7, 0.9]


def test_sweep_is_deterministic_and_worker_independent(identical_cspdc):
    spec = SweepSpec("cascade_efficiency", 1e-9, 1e-3, 7, identical_cspdc)
    a = sweep(spec)
    b = sweep(spec, workers=3)
    assert [(r.value, r.g2_min, r.plateau_lo) for r in a] == [(r.value, r.g2_min, r.plateau_lo) for r in b]


def test_sweep_error_rows(identical_cspdc):
    spec = SweepSpec("cascade_efficiency", 0.0, 1e-6, 3, identical_cspdc, scale="linear")
    rows = sweep(spec)
    assert rows[0].error and "DomainError" in rows[0].error
    assert rows[1].error is None and rows[1].g2_min > 0


def test_figure_of_merit_parameter(identical_cspdc):
    cfg = apply_parameter(identical_cspdc, SweepParameter.FIGURE_OF_MERIT, 1e9)
    assert cfg.herald_stage2.dark_rate == pytest.approx(0.7 / (5e-9 * 1e9))
    assert float(cfg.g2_a.figure_of_merit(cfg.window)) == pytest.approx(1e9, rel=1e-8)


def test_cascade_parameter_ignored_for_spdc(identical_spdc):
    assert apply_parameter(identical_spdc, "cascade_efficiency", 0.3) == identical_spdc


def test_sweep_curve(identical_cspdc):
    curve = sweep_curve(SweepSpec("pair_rate", 1.0, 1e8, 9, identical_cspdc))
    assert curve.g2_min == pytest.approx(an.g2_cspdc_min(identical_cspdc).g2_min, rel=1e-8)
    with pytest.raises(ConfigError):
        sweep_curve(SweepSpec("eta", 0.1, 0.9, 3, identical_cspdc))


# --- advantage ----------------------------------------------------------------


def test_ideal_g2_detectors_large_improvement(ideal_g2_cspdc):
    n_c = an.pair_rate_for_heralded_rate(ideal_g2_cspdc, 0.01)
    n_s = an.pair_rate_for_heralded_rate(ideal_g2_cspdc.as_spdc(), 0.01)
    g_c = g2_matrix(ideal_g2_cspdc.with_pair_rate(n_c)).g2
    g_s = g2_matrix(ideal_g2_cspdc.as_spdc().with_pair_rate(n_s)).g2
    assert g_s / g_c >= 100


def test_nanowire_merit_advantageous():
    from cspdc_g2.core import identical_detectors
    for eta in (0.3, 0.7, 1.0):
        cfg = identical_detectors(eta, eta / (5e-9 * 1e9), 5e-9, cascade_efficiency=1e-8)
        assert is_advantageous(cfg)
        assert is_advantageous(cfg.as_cspdc(1e-6))


def test_not_advantageous_below_threshold(identical_cspdc):
    assert not is_advantageous(identical_cspdc.as_cspdc(1e-9))
    assert is_advantageous(identical_cspdc)


def test_threshold_crossing_analytic(identical_cspdc):
    tc = threshold_crossing(identical_cspdc)
    assert tc.status == "crossing"
    assert tc.p_threshold == pytest.approx(5.795009207160086e-08, rel=1e-12)
    assert tc.p_threshold_identical == pytest.approx(9.750173283685586e-08, rel=1e-12)
    # the numeric crossing of the analytic minima sits at the identical-detector form
    assert tc.p_star == pytest.approx(9.7553e-8, rel=1e-3)
    lo = an.g2_cspdc_min(identical_cspdc.as_cspdc(tc.p_star * 0.999)).g2_min
    hi = an.g2_cspdc_min(identical_cspdc.as_cspdc(tc.p_star * 1.001)).g2_min
    s = an.g2_spdc_min(identical_cspdc.as_spdc()).g2_min
    assert lo > s > hi


def test_threshold_always_with_dark_free_g2_detectors(ideal_g2_cspdc):
    tc = threshold_crossing(ideal_g2_cspdc)
    assert tc.status == "always" and tc.p_star == 0.0
    assert tc.p_threshold == 0.0


def test_threshold_never_within_range(identical_cspdc):
    tc = threshold_crossing(identical_cspdc, p_range=(1e-12, 1e-8))
    assert tc.status == "never" and math.isinf(tc.p_star)


def test_threshold_needs_stage1_herald(identical_spdc):
    with pytest.raises(ConfigError):
        threshold_crossing(identical_spdc)
