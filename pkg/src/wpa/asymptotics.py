"""Decay exponents of |psi(x, t)|**2 from density traces on log-spaced grids."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, InsufficientSpanError
from .propagator import TRACE_CONFIG, QuadratureConfig, evolve
from .states import ATOMIC_UNITS, UnitSystem, WavePacket

__all__ = [
    "TimeGrid",
    "DensityTrace",
    "ExponentEstimate",
    "build_trace",
    "log_derivative_curve",
    "fit_exponent",
]

ROUTES = ("closed_form", "quadrature")


@dataclass(frozen=True)
class TimeGrid:
    """Geometric grid from t_min to t_max with a fixed ratio between neighbours.

    The point count is chosen so the spacing is as close as possible to
    ``points_per_decade``; both endpoints are included exactly.  A grid with
    t_min == t_max holds the single time t_min.
    """

    t_min: float = 0.1
    t_max: float = 1e6
    points_per_decade: int = 16

    def __post_init__(self):
        if not (self.t_min > 0 and math.isfinite(self.t_max)):
            raise ValueError(f"t_min must be > 0 and t_max finite, got {self.t_min}, {self.t_max}")
        if self.t_max < self.t_min:
            raise ValueError(f"t_max ({self.t_max}) must not be below t_min ({self.t_min})")
        if int(self.points_per_decade) != self.points_per_decade or self.points_per_decade < 4:
            raise ValueError(f"points_per_decade must be an integer >= 4, got {self.points_per_decade}")

    @property
    def decades(self) -> float:
        return math.log10(self.t_max / self.t_min)

    @property
    def values(self) -> np.ndarray:
        if self.t_max == self.t_min:
            return np.array([self.t_min])
        n = max(int(round(self.decades * self.points_per_decade)), 1) + 1
        out = self.t_min * np.exp(np.linspace(0.0, math.log(self.t_max / self.t_min), n))
        out[-1] = self.t_max
        return out

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class DensityTrace:
    x: float
    grid: TimeGrid
    density: np.ndarray
    route: str = "closed_form"

    def __post_init__(self):
        dens = np.asarray(self.density, dtype=float)
        if dens.shape != (len(self.grid),):
            raise ValueError(f"density has {dens.size} values for a grid of {len(self.grid)}")
        if np.any(dens < 0) or not np.all(np.isfinite(dens)):
            raise ValueError("density values must be finite and non-negative")
        if self.route not in ROUTES:
            raise ValueError(f"route must be one of {ROUTES}, got {self.route!r}")
        object.__setattr__(self, "density", dens)

    @property
    def times(self) -> np.ndarray:
        return self.grid.values


@dataclass(frozen=True)
class ExponentEstimate:
    slope_curve: np.ndarray  # rows (ln t, d ln rho / d ln t)
    asymptotic_exponent: float
    fit_window: tuple
    residual: float
    amplitude: float = field(default=math.nan)  # C in rho ~ C t**n over the window

    def to_dict(self) -> dict:
        return {
            "asymptotic_exponent": self.asymptotic_exponent,
            "fit_window": list(self.fit_window),
            "residual": self.residual,
            "amplitude": self.amplitude,
        }


def build_trace(
    state: WavePacket,
    x: float,
    grid: TimeGrid,
    units: UnitSystem = ATOMIC_UNITS,
    route: str = "closed_form",
    cfg: QuadratureConfig = TRACE_CONFIG,
) -> DensityTrace:
    """Sample |psi(x, t)|**2 over ``grid`` by the given propagation route."""
    psi = evolve(state, x, grid.values, units, route=route, cfg=cfg)
    return DensityTrace(float(x), grid, np.abs(psi) ** 2, route)


def _log_density(trace):
    rho = trace.density
    bad = np.flatnonzero(rho <= 0.0)
    if bad.size:
        raise DegenerateInputError(f"zero density at grid indices {bad.tolist()}", bad.tolist())
    return np.log(rho)


def log_derivative_curve(trace: DensityTrace) -> np.ndarray:
    """(ln t, d ln rho / d ln t) by central differences, one-sided (second
    order) at the two ends."""
    lr = _log_density(trace)
    lt = np.log(trace.times)
    if lt.size < 3:
        raise InsufficientSpanError("a slope curve needs at least three grid points")
    return np.column_stack([lt, np.gradient(lr, lt, edge_order=2)])


def fit_exponent(trace: DensityTrace, window_decades: float = 1.5) -> ExponentEstimate:
    """Least-squares slope of ln rho against ln t over the last ``window_decades``."""
    if not window_decades > 0:
        raise ValueError("window_decades must be > 0")
    if trace.grid.decades < window_decades + 1.0 - 1e-9:
        raise InsufficientSpanError(
            f"trace spans {trace.grid.decades:.3g} decades; need {window_decades + 1.0:.3g}"
        )
    curve = log_derivative_curve(trace)
    lt = curve[:, 0]
    lr = _log_density(trace)
    sel = lt >= lt[-1] - window_decades * math.log(10.0) - 1e-9
    n, ln_c = np.polyfit(lt[sel], lr[sel], 1)
    resid = lr[sel] - (n * lt[sel] + ln_c)
    return ExponentEstimate(
        slope_curve=curve,
        asymptotic_exponent=float(n),
        fit_window=(float(trace.times[sel][0]), float(trace.times[sel][-1])),
        residual=float(np.sqrt(np.mean(resid**2))),
        amplitude=float(np.exp(ln_c)),
    )
