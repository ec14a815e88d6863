"""Dwell times in a spatial interval [a, b].

Two quantum routes are provided.  The time route integrates
P_ab(t) = int_a^b |psi(x, t)|**2 dx over all t, numerically out to a cutoff
T* and with a fitted power-law tail beyond.  The momentum route evaluates the
free sojourn-time operator

    sum_{s=+-} int dp (m h / |p|) <psi|p> <p|D|s p> <s p|psi>,

with <p|D|p'> the interval projector.  The classical value averages the
transit time m (b - a) / |p| over the momentum density.

A divergent result is returned as ``math.inf``; :class:`DwellReport`
serializes it as the string ``"divergent"``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import NonConvergenceError, PreconditionError
from .propagator import TRACE_CONFIG, QuadratureConfig, evolve_closed_form, evolve_quadrature
from .states import ATOMIC_UNITS, UnitSystem, WavePacket

__all__ = [
    "SpatialInterval",
    "DwellReport",
    "DIVERGENT",
    "prob_in_interval",
    "dwell_time_time_integral",
    "projector_matrix_element",
    "dwell_time_momentum_form",
    "classical_dwell",
    "dwell_report",
]

DIVERGENT = math.inf
DIVERGENCE_EXPONENT = -1.1  # tails with fitted exponent >= this are not integrable
SLOPE_STABLE = 0.01
TAIL_RESIDUAL_MAX = 0.05
_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


@dataclass(frozen=True)
class SpatialInterval:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise ValueError(f"interval needs finite a < b, got ({self.a}, {self.b})")

    @property
    def width(self) -> float:
        return self.b - self.a


def _json_value(v):
    return "divergent" if v == DIVERGENT else v


@dataclass(frozen=True)
class DwellReport:
    time_route: float
    momentum_route: float
    classical_value: float
    tail_exponent_used: float
    relative_discrepancy: float

    def to_dict(self) -> dict:
        return {
            "time_route": _json_value(self.time_route),
            "momentum_route": _json_value(self.momentum_route),
            "classical_value": _json_value(self.classical_value),
            "tail_exponent_used": self.tail_exponent_used,
            "relative_discrepancy": self.relative_discrepancy,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _x_nodes(state, interval, units):
    center, spread = state.momentum_window(units)
    kmax = (abs(center) + 8.0 * spread) / units.hbar
    panels = int(math.ceil(interval.width * kmax / 4.0)) + 1
    edges = np.linspace(interval.a, interval.b, panels + 1)
    half = 0.5 * np.diff(edges)
    xs = (0.5 * (edges[:-1] + edges[1:]))[:, None] + half[:, None] * _GL_X
    ws = half[:, None] * _GL_W
    return xs.ravel(), ws.ravel()


def _density_fn(state, interval, units, cfg):
    """t -> P_ab(t), closed form when the state has one."""
    xs, ws = _x_nodes(state, interval, units)
    if state.has_closed_form:

        def prob(t):
            return float(np.dot(ws, np.abs(evolve_closed_form(state, xs, t, units)) ** 2))

    else:

        def prob(t):
            vals = np.array([evolve_quadrature(state, x, t, units, cfg) for x in xs])
            return float(np.dot(ws, np.abs(vals) ** 2))

    return prob


def prob_in_interval(
    state: WavePacket,
    interval: SpatialInterval,
    t: float,
    units: UnitSystem = ATOMIC_UNITS,
    cfg: QuadratureConfig = TRACE_CONFIG,
) -> float:
    """P_ab(t) = int_a^b |psi(x, t)|**2 dx (Gauss-Legendre in x)."""
    return _density_fn(state, interval, units, cfg)(float(t))


def _tail(prob, sign, t_lo, t_hi, per_decade):
    """Locate T* on one time direction and fit the power-law tail beyond it.

    Returns (T*, n, int_{T*}^inf C t**n dt or inf) with C, n fitted beyond T*."""
    n_pts = int(round(math.log10(t_hi / t_lo) * per_decade)) + 1
    ts = np.geomspace(t_lo, t_hi, n_pts)
    ps = np.array([prob(sign * t) for t in ts])
    if np.any(ps <= 0.0):
        raise NonConvergenceError("interval probability vanished on the tail grid")
    lt, lp = np.log(ts), np.log(ps)
    slope = np.gradient(lp, lt, edge_order=2)
    half = np.interp(lt - math.log(2.0), lt, slope)
    ok = np.abs(slope - half) < SLOPE_STABLE
    ok[lt - math.log(2.0) < lt[0]] = False
    # T* is the start of the final run of stable slopes
    bad = np.flatnonzero(~ok)
    start = 0 if bad.size == 0 else bad[-1] + 1
    if start >= len(ts) - 4:
        raise NonConvergenceError(
            f"local slope of P_ab did not stabilize before |t| = {t_hi:g}", None, None
        )
    sel = slice(start, None)
    n, ln_c = np.polyfit(lt[sel], lp[sel], 1)
    resid = float(np.sqrt(np.mean((lp[sel] - n * lt[sel] - ln_c) ** 2)))
    if resid > TAIL_RESIDUAL_MAX:
        raise NonConvergenceError(f"tail power-law fit unstable (rms residual {resid:.3g})", None, resid)
    t_star = float(ts[start])
    if n >= DIVERGENCE_EXPONENT:
        return t_star, float(n), DIVERGENT
    return t_star, float(n), float(math.exp(ln_c) * t_star ** (n + 1.0) / (-n - 1.0))


def _finite_part(prob, sign, t_star, t_split):
    opts = dict(epsabs=0.0, epsrel=1e-10, limit=500)
    near, e1 = integrate.quad(lambda t: prob(sign * t), 0.0, t_split, **opts)
    far, e2 = integrate.quad(
        lambda u: prob(sign * math.exp(u)) * math.exp(u), math.log(t_split), math.log(t_star), **opts
    )
    total = near + far
    if e1 + e2 > 1e-6 * max(total, 1e-300):
        raise NonConvergenceError("time integral of P_ab did not converge", total, e1 + e2)
    return total


def _time_route(state, interval, units, cfg, t_max_factor, per_decade):
    prob = _density_fn(state, interval, units, cfg)
    tau = state.time_scale(units)
    t_split = 0.01 * tau
    t_hi = t_max_factor * max(tau, 1.0)
    total = 0.0
    exponents = []
    for sign in (1.0, -1.0):
        t_star, n, tail = _tail(prob, sign, t_split, t_hi, per_decade)
        exponents.append(n)
        if tail == DIVERGENT:
            return DIVERGENT, n
        total += _finite_part(prob, sign, t_star, t_split) + tail
    return total, max(exponents)


def dwell_time_time_integral(
    state: WavePacket,
    interval: SpatialInterval,
    units: UnitSystem = ATOMIC_UNITS,
    cfg: QuadratureConfig = TRACE_CONFIG,
    t_max_factor: float = 1e8,
    per_decade: int = 16,
) -> float:
    """int dt P_ab(t) over the whole time axis, or ``DIVERGENT``.

    Each time direction is sampled on a log grid up to ``t_max_factor`` times
    the state's time scale.  T* is the start of the last stretch on which the
    local slope d ln P / d ln|t| changes by less than 0.01 between |t|/2 and
    |t|; beyond it a power law C |t|**n is fitted and integrated analytically.
    A fitted n >= -1.1 on either side gives the divergent verdict.
    """
    return _time_route(state, interval, units, cfg, t_max_factor, per_decade)[0]


def projector_matrix_element(interval: SpatialInterval, p, p_prime, units: UnitSystem = ATOMIC_UNITS):
    """<p| D(a, b) |p'> = (1/h) int_a^b exp(i (p' - p) x / hbar) dx."""
    q = (np.asarray(p_prime, dtype=float) - np.asarray(p, dtype=float)) / units.hbar
    mid = 0.5 * (interval.a + interval.b)
    half = 0.5 * interval.width
    # np.sinc(u) = sin(pi u) / (pi u)
    val = interval.width * np.sinc(q * half / math.pi) * np.exp(1j * q * mid) / units.h
    return complex(val) if np.ndim(val) == 0 else val


def _amplitude_at_zero_ratio(state, units):
    center, spread = state.momentum_window(units)
    ps = np.linspace(center - 6.0 * spread, center + 6.0 * spread, 241)
    peak = np.max(np.abs(state.momentum_amplitude(ps, units)))
    # one-sided limit for half-line states
    at0 = abs(state.analytic_amplitude(np.array([0j]), units)[0])
    return at0 / peak


def _momentum_support(state, units):
    center, spread = state.momentum_window(units)
    hi = abs(center) + 40.0 * spread
    return (0.0 if state.half_line else -hi), hi


def dwell_time_momentum_form(
    state: WavePacket,
    interval: SpatialInterval,
    units: UnitSystem = ATOMIC_UNITS,
    cfg: QuadratureConfig = TRACE_CONFIG,
) -> float:
    """Expectation of the free sojourn-time operator, or ``DIVERGENT`` when
    <0|psi> != 0 makes the 1/|p| factor non-integrable."""
    if _amplitude_at_zero_ratio(state, units) > 1e-8:
        return DIVERGENT
    m, h = units.mass, units.h
    lo, hi = _momentum_support(state, units)
    center, spread = state.momentum_window(units)

    def integrand(p, part):
        phi = state.momentum_amplitude(p, units)
        val = interval.width / h * abs(phi) ** 2
        if not state.half_line:
            val += (phi.conjugate() * projector_matrix_element(interval, p, -p, units)
                    * state.momentum_amplitude(-p, units))
        val *= m * h / abs(p)
        return val.real if part == 0 else val.imag

    pts = [q for q in (center - spread, center, center + spread) if lo < q < hi]
    opts = dict(epsabs=0.0, epsrel=max(cfg.rel_tol, 1e-12), limit=400)
    segs = [(lo, hi)] if lo >= 0 else [(lo, 0.0), (0.0, hi)]
    re_part = im_part = 0.0
    err = 0.0
    for s0, s1 in segs:
        inner = [q for q in pts if s0 < q < s1] or None
        r, e = integrate.quad(integrand, s0, s1, args=(0,), points=inner, **opts)
        i, _ = integrate.quad(integrand, s0, s1, args=(1,), points=inner, **opts)
        re_part += r
        im_part += i
        err += e
    if err > 1e3 * opts["epsrel"] * abs(re_part):
        raise NonConvergenceError("momentum-form quadrature did not converge", re_part, err)
    if abs(im_part) > 1e-10 * max(abs(re_part), 1.0):
        raise NonConvergenceError(f"momentum form left an imaginary residue {im_part:.3g}", re_part, abs(im_part))
    return float(re_part)


def _initial_mass_ahead(state, interval, units):
    """min(mass on [a, inf), mass on (-inf, b]) of |psi(x, 0)|**2."""
    if state.has_closed_form:

        def dens(x):
            return abs(evolve_closed_form(state, x, 0.0, units)) ** 2

    else:

        def dens(x):
            return abs(state.position_wavefunction_initial(x, units)) ** 2

    opts = dict(epsabs=1e-7, epsrel=1e-6, limit=200)
    right, _ = integrate.quad(dens, interval.a, math.inf, **opts)
    left, _ = integrate.quad(dens, -math.inf, interval.b, **opts)
    return min(right, left)


def classical_dwell(
    state: WavePacket,
    interval: SpatialInterval,
    units: UnitSystem = ATOMIC_UNITS,
    mass_threshold: float = 1e-3,
) -> float:
    """int dp |<p|psi>|**2 m (b - a) / |p|, the ensemble-averaged transit time.

    Valid only when the packet starts entirely on one side of the interval;
    otherwise ``PreconditionError``.
    """
    mass = _initial_mass_ahead(state, interval, units)
    if mass > mass_threshold:
        raise PreconditionError(
            f"initial probability {mass:.3g} lies inside or beyond the interval (limit {mass_threshold:g})"
        )
    if _amplitude_at_zero_ratio(state, units) > 1e-8:
        return DIVERGENT
    lo, hi = _momentum_support(state, units)
    center, spread = state.momentum_window(units)

    def integrand(p):
        return abs(state.momentum_amplitude(p, units)) ** 2 / abs(p)

    pts = [q for q in (center - spread, center, center + spread) if max(lo, 0.0) < q < hi] or None
    val, _ = integrate.quad(integrand, max(lo, 0.0), hi, points=pts, epsabs=0.0, epsrel=1e-11, limit=400)
    if lo < 0:
        val2, _ = integrate.quad(integrand, lo, 0.0, epsabs=0.0, epsrel=1e-11, limit=400)
        val += val2
    return float(units.mass * interval.width * val)


def dwell_report(
    state: WavePacket,
    interval: SpatialInterval,
    units: UnitSystem = ATOMIC_UNITS,
    cfg: QuadratureConfig = TRACE_CONFIG,
) -> DwellReport:
    """All three dwell values for one state and interval.

    The classical value is reported as NaN when its precondition fails.
    """
    time_val, n = _time_route(state, interval, units, cfg, 1e8, 16)
    mom_val = dwell_time_momentum_form(state, interval, units, cfg)
    try:
        cl_val = classical_dwell(state, interval, units)
    except PreconditionError:
        cl_val = math.nan
    if time_val == DIVERGENT or mom_val == DIVERGENT:
        disc = math.nan
    else:
        disc = abs(time_val - mom_val) / mom_val
    return DwellReport(time_val, mom_val, cl_val, n, disc)
