import math

import numpy as np
import pytest

from wpa import (
    DegenerateInputError,
    DensityTrace,
    Gaussian,
    InsufficientSpanError,
    LinearGaussian,
    LorentzianSquared,
    TimeGrid,
    TruncatedGaussian,
    build_trace,
    fit_exponent,
    log_derivative_curve,
)


def _synthetic(grid, fn):
    return DensityTrace(0.0, grid, fn(grid.values))


# -- grid and trace ------------------------------------------------------------


def test_grid_is_exactly_geometric():
    g = TimeGrid(0.1, 1e6, 16)
    t = g.values
    assert t[0] == 0.1 and t[-1] == 1e6
    assert len(g) == 16 * 7 + 1
    ratio = t[1:] / t[:-1]
    assert np.all(np.diff(t) > 0)
    assert np.max(np.abs(ratio / ratio[0] - 1)) <= 1e-12


def test_degenerate_grid():
    g = TimeGrid(5.0, 5.0)
    assert list(g.values) == [5.0]


@pytest.mark.parametrize(
    "kw", [{"t_min": 0.0}, {"t_min": 10.0, "t_max": 1.0}, {"points_per_decade": 3}, {"points_per_decade": 4.5},
           {"t_max": math.inf}]
)
def test_grid_validation(kw):
    with pytest.raises(ValueError):
        TimeGrid(**kw)


def test_trace_validation():
    g = TimeGrid(1.0, 10.0, 4)
    with pytest.raises(ValueError):
        DensityTrace(0.0, g, np.ones(3))
    with pytest.raises(ValueError):
        DensityTrace(0.0, g, -np.ones(len(g)))
    with pytest.raises(ValueError):
        DensityTrace(0.0, g, np.ones(len(g)), route="other")


# -- slope curve -----------------------------------------------------------------


def test_exact_power_law_curve():
    g = TimeGrid(0.1, 1e4, 8)
    curve = log_derivative_curve(_synthetic(g, lambda t: t**-3.0))
    assert np.max(np.abs(curve[:, 1] + 3.0)) <= 1e-10
    assert np.allclose(curve[:, 0], np.log(g.values), rtol=0, atol=1e-14)


def test_linear_gaussian_curve():
    g = TimeGrid(0.1, 1e3, 400)
    curve = log_derivative_curve(build_trace(LinearGaussian(beta=1.0), 0.0, g))
    t = np.exp(curve[:, 0])
    assert np.max(np.abs(curve[:, 1] + 2 / (1 + 1 / t**2))) <= 1e-4
    assert np.all(np.diff(curve[:, 1]) < 0)


def test_gaussian_curve_tends_to_minus_one():
    curve = log_derivative_curve(build_trace(Gaussian(), 0.0, TimeGrid(0.1, 1e6, 16)))
    assert abs(curve[-1, 1] + 1.0) <= 0.01


def test_zero_density_reports_indices():
    g = TimeGrid(1.0, 1e3, 4)
    rho = g.values**-1.0
    rho[[2, 5]] = 0.0
    with pytest.raises(DegenerateInputError) as info:
        log_derivative_curve(DensityTrace(0.0, g, rho))
    assert info.value.indices == [2, 5]


def test_curve_needs_three_points():
    g = TimeGrid(1.0, 1.0)
    with pytest.raises(InsufficientSpanError):
        log_derivative_curve(DensityTrace(0.0, g, np.ones(1)))


# -- exponent fit ------------------------------------------------------------------


def test_synthetic_fit_exact():
    g = TimeGrid(1.0, 1e5, 16)
    est = fit_exponent(_synthetic(g, lambda t: 7.5 / t), 2.0)
    assert est.asymptotic_exponent == pytest.approx(-1.0, abs=1e-10)
    assert est.residual <= 1e-12
    assert est.amplitude == pytest.approx(7.5, rel=1e-10)
    lo, hi = est.fit_window
    assert g.t_min <= lo <= hi <= g.t_max
    assert hi == g.t_max and lo == pytest.approx(1e3, rel=1e-12)


def test_insufficient_span():
    g = TimeGrid(1.0, 1e2, 16)
    with pytest.raises(InsufficientSpanError):
        fit_exponent(_synthetic(g, lambda t: t**-2.0), 1.5)
    with pytest.raises(ValueError):
        fit_exponent(_synthetic(TimeGrid(1.0, 1e4), lambda t: t**-2.0), 0.0)


def test_rescaling_invariance():
    tr = build_trace(TruncatedGaussian(), 0.0, TimeGrid(1.0, 1e5, 16))
    scaled = DensityTrace(tr.x, tr.grid, 1e7 * tr.density)
    a, b = fit_exponent(tr), fit_exponent(scaled)
    assert np.allclose(a.slope_curve, b.slope_curve, rtol=0, atol=1e-9)
    assert a.asymptotic_exponent == pytest.approx(b.asymptotic_exponent, abs=1e-10)


def test_time_rescaling_equivariance():
    law = lambda t: 3.0 * t**-2.5  # noqa: E731
    a = fit_exponent(_synthetic(TimeGrid(1.0, 1e4, 16), law))
    b = fit_exponent(_synthetic(TimeGrid(7.0, 7e4, 16), law))
    assert a.asymptotic_exponent == pytest.approx(b.asymptotic_exponent, abs=1e-10)


def test_to_dict():
    est = fit_exponent(_synthetic(TimeGrid(1.0, 1e4, 8), lambda t: t**-2.0))
    d = est.to_dict()
    assert set(d) == {"asymptotic_exponent", "fit_window", "residual", "amplitude"}


@pytest.mark.parametrize(
    "state,expected,route",
    [
        (Gaussian(), -1.0, "closed_form"),
        (LinearGaussian(), -2.0, "closed_form"),
        (LorentzianSquared(), -2.0, "quadrature"),
        (TruncatedGaussian(), -3.0, "closed_form"),
    ],
    ids=["gaussian", "linear_gaussian", "lorentzian", "truncated_gaussian"],
)
def test_catalog_classification(state, expected, route):
    trace = build_trace(state, 0.0, TimeGrid(1.0, 1e6, 16), route=route)
    assert abs(fit_exponent(trace, 1.5).asymptotic_exponent - expected) <= 0.05


def test_truncated_gaussian_figure_window():
    trace = build_trace(TruncatedGaussian(), 0.0, TimeGrid(1e3, 1e6, 16))
    est = fit_exponent(trace, 3.0 - 1.0)
    assert abs(est.asymptotic_exponent + 3.0) <= 0.05


def test_routes_give_same_trace():
    g = TimeGrid(1.0, 1e3, 8)
    a = build_trace(TruncatedGaussian(), 0.0, g)
    b = build_trace(TruncatedGaussian(), 0.0, g, route="quadrature")
    assert np.allclose(a.density, b.density, rtol=1e-7, atol=0)
