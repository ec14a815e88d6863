import json
import math
from pathlib import Path

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wpa.complexfn import (
    ASYMPTOTIC_RADIUS,
    SERIES_RADIUS,
    erfc,
    identity_residuals,
    w,
    w_derivative,
    w_series,
)

ORACLE = json.loads((Path(__file__).parent / "data" / "w_oracle.json").read_text())


def _disk(n, radius, seed):
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.random(n))
    return r * np.exp(2j * math.pi * rng.random(n))


def _mp_w(z):
    with mp.workdps(30):
        z = mp.mpc(z)
        return complex(mp.exp(-z * z) * mp.erfc(-1j * z))


# -- examples ----------------------------------------------------------------


def test_w_at_zero():
    assert w(0) == pytest.approx(1.0, abs=1e-15)
    assert w(0j).imag == 0.0


def test_w_on_imaginary_axis_is_scaled_erfc():
    expected = math.e * math.erfc(1.0)
    val = w(1j)
    assert abs(val.imag) < 1e-15
    assert val.real == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("row", ORACLE, ids=lambda r: f"z={r['z'][0]:+g}{r['z'][1]:+g}j")
def test_frozen_contour_oracle(row):
    z = complex(*row["z"])
    ref = complex(float(row["w"][0]), float(row["w"][1]))
    assert abs(w(z) - ref) <= 1e-12 * abs(ref)


@pytest.mark.parametrize("z", [1 + 1j, 0.25 - 0.1j, 4.0 + 0.01j, -7.5 + 3j, 12.0 - 0.5j])
def test_live_mpmath(z):
    ref = _mp_w(z)
    assert abs(w(z) - ref) <= 1e-13 * abs(ref)


def test_w_series_examples():
    assert w_series(0, 1) == 1.0
    assert abs(w_series(0.1j, 40) - w(0.1j)) <= 1e-14


def test_w_series_requires_a_term():
    with pytest.raises(ValueError):
        w_series(0.1, 0)


def test_w_derivative_examples():
    assert w_derivative(0) == pytest.approx(2j / math.sqrt(math.pi), abs=1e-15)
    z, h = 0.5 + 0.3j, 1e-6
    fd = (w(z + h) - w(z - h)) / (2 * h)
    assert abs(w_derivative(z) - fd) <= 1e-8
    for y in (0.1, 1.0, 3.0, 9.0):
        assert abs(w_derivative(1j * y).real) <= 1e-15 * abs(w_derivative(1j * y))


def test_erfc_matches_real_erfc():
    for x in (-2.0, -0.3, 0.0, 0.7, 3.0):
        assert erfc(x) == pytest.approx(math.erfc(x), rel=1e-13, abs=1e-300)


def test_array_shape_preserved():
    z = _disk(12, 3.0, 1).reshape(3, 4)
    out = w(z)
    assert out.shape == (3, 4)
    assert abs(out[1, 2] - w(complex(z[1, 2]))) == 0.0


# -- identities ---------------------------------------------------------------


def test_identities_on_random_disk():
    res = identity_residuals(_disk(1000, 5.0, 7))
    assert res["reflection"].max() <= 1e-12
    assert res["conjugation"].max() <= 1e-13


def test_derivative_relation_against_finite_differences():
    z = _disk(100, 3.0, 11)
    h = 1e-5
    fd = (np.asarray(w(z + h)) - np.asarray(w(z - h))) / (2 * h)
    ref = np.asarray(w_derivative(z))
    assert np.max(np.abs(fd - ref) / np.maximum(np.abs(ref), 1.0)) <= 1e-7


def test_series_agrees_inside_its_radius():
    z = _disk(500, SERIES_RADIUS, 3)
    assert identity_residuals(z)["series"].max() <= 1e-12


@settings(max_examples=200, deadline=None)
@given(
    st.floats(min_value=-5, max_value=5, allow_nan=False),
    st.floats(min_value=-5, max_value=5, allow_nan=False),
)
def test_reflection_and_conjugation_property(x, y):
    z = complex(x, y)
    res = identity_residuals(np.array([z]))
    assert res["reflection"][0] <= 1e-12
    assert res["conjugation"][0] <= 1e-13


@settings(max_examples=100, deadline=None)
@given(
    st.floats(min_value=-20, max_value=20, allow_nan=False),
    st.floats(min_value=0, max_value=20, allow_nan=False),
)
def test_upper_half_plane_against_mpmath(x, y):
    z = complex(x, y)
    ref = _mp_w(z)
    assert abs(w(z) - ref) <= 2e-13 * abs(ref)


# -- region boundaries ---------------------------------------------------------


@pytest.mark.parametrize("radius", [SERIES_RADIUS, ASYMPTOTIC_RADIUS])
def test_continuity_across_region_boundaries(radius):
    theta = np.linspace(0.01, math.pi - 0.01, 25)
    eps = 1e-9
    inside = (radius - eps) * np.exp(1j * theta)
    outside = (radius + eps) * np.exp(1j * theta)
    a, b = np.asarray(w(inside)), np.asarray(w(outside))
    # the true change over 2*eps is bounded by |w'| * 2 eps
    slack = np.abs(np.asarray(w_derivative(inside))) * 2 * eps
    assert np.all(np.abs(a - b) <= 1e-12 * np.abs(a) + slack)
    ref = np.array([_mp_w(z) for z in outside])
    assert np.max(np.abs(b - ref) / np.abs(ref)) <= 1e-12


def test_imaginary_axis_real_positive_decreasing():
    y = np.linspace(0.0, 10.0, 401)
    vals = np.asarray(w(1j * y))
    assert np.all(np.abs(vals.imag) <= 1e-15 * np.abs(vals))
    assert np.all(vals.real > 0)
    assert np.all(np.diff(vals.real) < 0)


# -- errors --------------------------------------------------------------------


@pytest.mark.parametrize("bad", [complex(math.nan, 0), complex(0, math.inf), math.inf])
def test_non_finite_rejected(bad):
    with pytest.raises(ValueError):
        w(bad)


def test_lower_half_plane_overflow():
    with pytest.raises(OverflowError):
        w(-40j)
    assert np.isfinite(w(-5j))
