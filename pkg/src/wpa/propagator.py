"""Free evolution psi(x, t) by closed forms, contour quadrature, and the
steepest-descent predictor at x = 0.

Conventions: <x|p> = h**-0.5 exp(i p x / hbar), free phase
exp(-i p**2 t / (2 m hbar)), principal square roots throughout.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from . import contour
from .complexfn import w
from .errors import DomainError, UnsupportedVariantError
from .states import (
    ATOMIC_UNITS,
    Gaussian,
    LinearGaussian,
    TruncatedGaussian,
    UnitSystem,
    WavePacket,
)

__all__ = [
    "QuadratureConfig",
    "DEFAULT_CONFIG",
    "TRACE_CONFIG",
    "SteepestDescentTerm",
    "propagator_kernel",
    "evolve_quadrature",
    "evolve_closed_form",
    "evolve",
    "log_derivative",
    "steepest_descent_terms",
    "asymptotic_prediction",
]

_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances for the momentum-integral route.

    ``max_subdivisions`` caps the total number of quadrature panels;
    ``momentum_cutoff_sigmas`` sets the minimum real-axis cutoff in units of
    the state's momentum spread; ``real_axis`` turns contour deformation off.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 0.0
    max_subdivisions: int = 1 << 20
    momentum_cutoff_sigmas: float = 12.0
    real_axis: bool = False

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-3):
            raise ValueError(f"rel_tol must lie in (0, 1e-3], got {self.rel_tol}")
        if self.max_subdivisions < 10:
            raise ValueError("max_subdivisions must be >= 10")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be >= 0")

    @classmethod
    def from_env(cls, default_rel_tol=1e-8, **kwargs):
        """Config whose rel_tol comes from ``WPA_TOL`` when set."""
        raw = os.environ.get("WPA_TOL")
        rel_tol = float(raw) if raw else default_rel_tol
        return cls(rel_tol=rel_tol, **kwargs)


DEFAULT_CONFIG = QuadratureConfig(rel_tol=1e-10)
TRACE_CONFIG = QuadratureConfig(rel_tol=1e-8)


@dataclass(frozen=True)
class SteepestDescentTerm:
    f: complex
    order: int
    moment: float
    amplitude: complex


def propagator_kernel(x, x_prime, t, units: UnitSystem = ATOMIC_UNITS):
    """<x| exp(-i H0 t / hbar) |x'> = (m / (i h t))**0.5 exp(i m (x - x')**2 / (2 hbar t))."""
    if not t > 0:
        raise DomainError("free propagator kernel requires t > 0")
    m, hb = units.mass, units.hbar
    pref = np.sqrt(m / (1j * units.h * t))
    val = pref * np.exp(1j * m * (np.asarray(x) - np.asarray(x_prime)) ** 2 / (2.0 * hb * t))
    return complex(val) if np.ndim(val) == 0 else val


def _check_t(t):
    if not math.isfinite(t):
        raise DomainError(f"t must be finite, got {t}")


def evolve_quadrature(
    state: WavePacket,
    x: float,
    t: float,
    units: UnitSystem = ATOMIC_UNITS,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    time_derivative: bool = False,
    return_error: bool = False,
):
    """psi(x, t) from the momentum integral, by contour quadrature.

    With ``time_derivative`` the integrand carries the extra factor
    -i p**2 / (2 m hbar), giving d psi / dt.  States flagged as not
    rotation-safe (and ``cfg.real_axis``) use the real axis with a cutoff.
    """
    x = float(x)
    t = float(t)
    _check_t(t)
    m, hb = units.mass, units.hbar
    kin = t / (2.0 * m * hb)
    terms = [(complex(a, kin), b + 1j * x / hb) for a, b in state.exponents(units)]
    real_axis = cfg.real_axis or not state.rotation_valid
    center, spread = state.momentum_window(units)
    path = contour.plan_path(
        terms,
        half_line=state.half_line,
        real_axis=real_axis,
        min_extent=abs(center) + cfg.momentum_cutoff_sigmas * spread,
    )
    norm = units.h**-0.5

    def integrand(p):
        with np.errstate(divide="ignore"):
            val = norm * np.exp(state.log_amplitude(p, units) + 1j * p * (x / hb) - 1j * kin * p * p)
        if time_derivative:
            val = val * (-1j * p * p / (2.0 * m * hb))
        return val

    val, err = contour.integrate_path(integrand, path, cfg.rel_tol, cfg.abs_tol, cfg.max_subdivisions)
    if return_error:
        return complex(val), float(err)
    return complex(val)


def _truncated_gaussian(state: TruncatedGaussian, x, t, units, reflect, derivative):
    hb, m = units.hbar, units.mass
    k0 = state.p0 / hb
    d2 = state.delta**2
    c = state.normalization_constant(units)
    pref = c * math.sqrt(units.h) / (4.0 * _SQRT_PI) * math.exp(-(k0 * k0) * d2)
    g = 1j * (x - state.x0) + 2.0 * k0 * d2
    A = d2 + 1j * hb * t / (2.0 * m)
    kappa = 1j * hb / (2.0 * m)
    psi = 0j
    dpsi = 0j
    for sign, AA in ((1.0, A), (-1.0, A + state.alpha)):
        root = np.sqrt(AA)
        z = -1j * g / (2.0 * root)
        wz = 2.0 * np.exp(-z * z) - w(-z) if reflect else w(z)
        psi = psi + sign * wz / root
        if derivative:
            dpsi = dpsi - sign * kappa / (2.0 * AA * root) * (wz * (1.0 - 2.0 * z * z) + 2j * z / _SQRT_PI)
    return pref * psi, pref * dpsi


def _gaussian(state: Gaussian, x, t, units, reflect, derivative):
    hb, m = units.hbar, units.mass
    k0 = state.p0 / hb
    d2 = state.delta**2
    c = state.normalization_constant(units)
    g = 1j * (x - state.x0) + 2.0 * k0 * d2
    A = d2 + 1j * hb * t / (2.0 * m)
    kappa = 1j * hb / (2.0 * m)
    root = np.sqrt(A)
    base = c * hb / math.sqrt(units.h)
    if reflect:
        # the whole-line Gaussian integral as the sum of the two half-line w-terms
        z = -1j * g / (2.0 * root)
        psi = base * math.exp(-(k0 * k0) * d2) * _SQRT_PI / (2.0 * root) * (w(z) + w(-z))
    else:
        psi = base * _SQRT_PI / root * np.exp(g * g / (4.0 * A) - (k0 * k0) * d2)
    dpsi = psi * kappa * (-0.5 / A - g * g / (4.0 * A * A)) if derivative else 0j
    return psi, dpsi


def _linear_gaussian(state: LinearGaussian, x, t, units, reflect, derivative):
    hb, m = units.hbar, units.mass
    beta = state.beta
    front = m * beta**0.25 * math.sqrt(2.0 * hb) / math.pi**0.75
    denom = 1j * beta * t + m * hb
    s = 1.0 / (2.0 * beta) + 1j * t / (2.0 * m * hb)
    xi = x / (2.0 * hb * np.sqrt(s))
    wxi = 2.0 * np.exp(-xi * xi) - w(-xi) if reflect else w(xi)
    G = 1.0 + 1j * _SQRT_PI * xi * wxi
    psi = front / denom * G
    dpsi = 0j
    if derivative:
        dxi = -xi / (2.0 * s) * (1j / (2.0 * m * hb))
        dG = 1j * _SQRT_PI * (wxi * (1.0 - 2.0 * xi * xi) + 2j * xi / _SQRT_PI)
        dpsi = psi * (-1j * beta / denom) + front / denom * dG * dxi
    return psi, dpsi


_CLOSED_FORMS = {
    TruncatedGaussian: _truncated_gaussian,
    Gaussian: _gaussian,
    LinearGaussian: _linear_gaussian,
}


def _closed_form(state, x, t, units, reflect=False, derivative=False):
    try:
        impl = _CLOSED_FORMS[type(state)]
    except KeyError:
        raise UnsupportedVariantError(f"no closed form for {type(state).__name__}") from None
    x_arr = np.asarray(x, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if not (np.all(np.isfinite(x_arr)) and np.all(np.isfinite(t_arr))):
        raise DomainError("x and t must be finite")
    x_b, t_b = np.broadcast_arrays(x_arr, t_arr)
    psi, dpsi = impl(state, x_b.astype(complex), t_b.astype(complex), units, reflect, derivative)
    psi = np.broadcast_to(psi, x_b.shape)
    dpsi = np.broadcast_to(dpsi, x_b.shape)
    if x_b.ndim == 0:
        return complex(psi), complex(dpsi)
    return np.array(psi), np.array(dpsi)


def evolve_closed_form(state: WavePacket, x, t, units: UnitSystem = ATOMIC_UNITS, reflect: bool = False):
    """Exact psi(x, t) through w-function evaluations (broadcasts over x, t).

    ``reflect`` evaluates every w(z) as 2 exp(-z**2) - w(-z) instead; the
    Gaussian then uses the sum of its two half-line w-terms.
    """
    return _closed_form(state, x, t, units, reflect=reflect)[0]


def evolve(state, x, t, units=ATOMIC_UNITS, route="closed_form", cfg=DEFAULT_CONFIG):
    """psi(x, t) by the named route; ``x`` and ``t`` may be arrays for closed forms."""
    if route == "closed_form":
        return evolve_closed_form(state, x, t, units)
    if route == "quadrature":
        if np.ndim(x) == 0 and np.ndim(t) == 0:
            return evolve_quadrature(state, x, t, units, cfg)
        xb, tb = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
        out = np.array([evolve_quadrature(state, xi, ti, units, cfg) for xi, ti in zip(xb.ravel(), tb.ravel())])
        return out.reshape(xb.shape)
    raise ValueError(f"unknown route {route!r}")


def log_derivative(state, x, t, units=ATOMIC_UNITS, route="closed_form", cfg=DEFAULT_CONFIG):
    """d ln|psi(x, t)|**2 / d ln t = 2 t Re(psi_t / psi), with psi_t exact.

    The closed-form route differentiates through w'(z) = -2 z w + 2i/sqrt(pi);
    the quadrature route integrates the time-differentiated integrand.
    """
    if route == "closed_form":
        psi, dpsi = _closed_form(state, x, t, units, derivative=True)
        return 2.0 * np.asarray(t) * np.real(dpsi / psi)
    if route == "quadrature":
        tb = np.atleast_1d(np.asarray(t, float))
        xb = np.broadcast_to(np.asarray(x, float), tb.shape)
        out = np.empty(tb.shape)
        for i, (xi, ti) in enumerate(zip(xb.ravel(), tb.ravel())):
            psi = evolve_quadrature(state, xi, ti, units, cfg)
            dpsi = evolve_quadrature(state, xi, ti, units, cfg, time_derivative=True)
            out.flat[i] = 2.0 * ti * (dpsi / psi).real
        return float(out[0]) if np.ndim(t) == 0 else out
    raise ValueError(f"unknown route {route!r}")


def steepest_descent_terms(c1, c2, t, units: UnitSystem = ATOMIC_UNITS):
    """Leading contributions c_n f**(n+1) M_n h**-0.5, with p = f u and
    f = (1 - i) sqrt(m hbar / t), M_n = int_0^inf u**n exp(-u**2) du."""
    if not t > 0:
        raise DomainError("asymptotic prediction requires t > 0")
    f = (1.0 - 1.0j) * math.sqrt(units.mass * units.hbar / t)
    norm = units.h**-0.5
    terms = []
    for order, c in ((1, complex(c1)), (2, complex(c2))):
        moment = 0.5 * gamma((order + 1) / 2.0)
        terms.append(SteepestDescentTerm(f, order, moment, norm * c * f ** (order + 1) * moment))
    return terms


def asymptotic_prediction(c1, c2, t, units: UnitSystem = ATOMIC_UNITS) -> complex:
    """Large-t estimate of psi(0, t) from the Taylor coefficients at p = 0."""
    return complex(sum(term.amplitude for term in steepest_descent_terms(c1, c2, t, units)))
