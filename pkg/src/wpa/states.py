"""Catalog of initial wave packets in momentum representation.

Every state is an immutable dataclass; quantities that depend on the unit
system (normalization, Taylor coefficients) are computed on demand from a
:class:`UnitSystem` and cached.

Taylor coefficients follow the expansion of the momentum amplitude at the
origin, <p|psi> ~ c1 p + c2 p**2 + ..., taken one-sided (p -> 0+) for states
supported on p > 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from functools import lru_cache
from typing import ClassVar

import numpy as np
from scipy import integrate

from .errors import NonConvergenceError, NotApplicableError

__all__ = [
    "UnitSystem",
    "ATOMIC_UNITS",
    "WavePacket",
    "TruncatedGaussian",
    "Gaussian",
    "LorentzianSquared",
    "LinearGaussian",
    "TaylorStub",
    "STATE_KINDS",
    "momentum_amplitude",
    "position_wavefunction_initial",
    "normalization_constant",
    "taylor_coefficients",
    "parse_state",
]


@dataclass(frozen=True)
class UnitSystem:
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise ValueError(f"mass must be positive, got {self.mass}")

    @property
    def h(self) -> float:
        return 2.0 * math.pi * self.hbar


ATOMIC_UNITS = UnitSystem()


class WavePacket:
    """Base class for the catalog states.

    Subclasses provide the analytic momentum amplitude (valid for complex p,
    which the contour quadrature relies on) and describe its exponential
    factors exp(-a p**2 + b p) through :meth:`exponents`.
    """

    kind: ClassVar[str] = ""
    half_line: ClassVar[bool] = True
    has_closed_form: ClassVar[bool] = False
    # amplitude is analytic and decaying in the sectors swept by contour rotation
    rotation_valid: ClassVar[bool] = True

    def analytic_amplitude(self, p, units: UnitSystem):
        raise NotImplementedError

    def log_amplitude(self, p, units: UnitSystem):
        """A complex logarithm of :meth:`analytic_amplitude` (any branch).

        Lets callers fold the amplitude into other exponentials before
        exponentiating, which avoids overflow far from the real axis."""
        raise NotImplementedError

    def momentum_amplitude(self, p, units: UnitSystem = ATOMIC_UNITS):
        """<p|psi(0)> for real p; exactly zero for p < 0 on half-line states."""
        p_arr = np.asarray(p, dtype=float)
        vals = self.analytic_amplitude(p_arr.astype(complex), units)
        if self.half_line:
            vals = np.where(p_arr < 0.0, 0.0 + 0.0j, vals)
        return complex(vals) if np.ndim(p) == 0 else vals

    def normalization_constant(self, units: UnitSystem = ATOMIC_UNITS) -> float:
        raise NotImplementedError

    def taylor_coefficients(self, units: UnitSystem = ATOMIC_UNITS) -> tuple[complex, complex]:
        raise NotImplementedError

    def exponents(self, units: UnitSystem) -> list[tuple[float, complex]]:
        """[(a, b), ...] of the exponential factors exp(-a p**2 + b p) making up
        the amplitude, slowest-decaying first (a >= 0)."""
        raise NotImplementedError

    def momentum_window(self, units: UnitSystem) -> tuple[float, float]:
        """(center, spread) of |<p|psi>|**2, used for real-axis cutoffs."""
        raise NotImplementedError

    def time_scale(self, units: UnitSystem) -> float:
        raise NotImplementedError

    def position_wavefunction_initial(self, x, units: UnitSystem = ATOMIC_UNITS):
        from .propagator import evolve_quadrature

        if np.ndim(x) == 0:
            return evolve_quadrature(self, float(x), 0.0, units)
        return np.array([evolve_quadrature(self, float(xi), 0.0, units) for xi in np.ravel(x)]).reshape(
            np.shape(x)
        )

    def to_dict(self) -> dict:
        d = {"state": self.kind}
        for k, v in asdict(self).items():
            d[k] = [v.real, v.imag] if isinstance(v, complex) else v
        return d


@dataclass(frozen=True)
class TruncatedGaussian(WavePacket):
    """C (1 - exp(-alpha p^2/hbar^2)) exp(-delta^2 (p - p0)^2/hbar^2 - i p x0/hbar) Theta(p).

    Defaults are the parameters of the `figure1` CLI command.
    """

    alpha: float = 0.5
    delta: float = 1.0
    p0: float = 1.0
    x0: float = -10.0

    kind: ClassVar[str] = "truncated_gaussian"
    has_closed_form: ClassVar[bool] = True

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0 (alpha = 0 is the zero state)")
        if self.delta <= 0:
            raise ValueError("delta must be > 0")

    def analytic_amplitude(self, p, units=ATOMIC_UNITS):
        hb = units.hbar
        c = self.normalization_constant(units)
        return (
            c
            * -np.expm1(-self.alpha * p * p / hb**2)
            * np.exp(-self.delta**2 * (p - self.p0) ** 2 / hb**2 - 1j * p * self.x0 / hb)
        )

    def log_amplitude(self, p, units=ATOMIC_UNITS):
        hb = units.hbar
        return (
            math.log(self.normalization_constant(units))
            + _log_one_minus_exp(-self.alpha * p * p / hb**2)
            - self.delta**2 * (p - self.p0) ** 2 / hb**2
            - 1j * p * self.x0 / hb
        )

    def normalization_constant(self, units=ATOMIC_UNITS):
        return _truncated_gaussian_norm(self.alpha, self.delta, self.p0, units.hbar)

    def taylor_coefficients(self, units=ATOMIC_UNITS):
        hb = units.hbar
        c2 = self.normalization_constant(units) * self.alpha / hb**2 * math.exp(-((self.delta * self.p0 / hb) ** 2))
        return 0j, complex(c2)

    def exponents(self, units):
        hb = units.hbar
        a = self.delta**2 / hb**2
        b = complex(2.0 * self.delta**2 * self.p0 / hb**2, -self.x0 / hb)
        return [(a, b), (a + self.alpha / hb**2, b)]

    def momentum_window(self, units):
        return max(self.p0, 0.0), units.hbar / self.delta

    def time_scale(self, units):
        return units.mass * self.delta**2 / units.hbar


def _log_one_minus_exp(u):
    """log(1 - exp(u)) without overflow for large Re u (branch irrelevant)."""
    u = np.asarray(u, dtype=complex)
    big = u.real > 0.0
    safe = np.where(big, -u, u)
    out = np.log(-np.expm1(safe))
    return np.where(big, out + u + 1j * math.pi, out)


@lru_cache(maxsize=256)
def _truncated_gaussian_norm(alpha, delta, p0, hbar):
    def dens(p):
        return (-math.expm1(-alpha * p * p / hbar**2) * math.exp(-((delta * (p - p0) / hbar) ** 2))) ** 2

    spread = hbar / delta
    hi = max(p0, 0.0) + 40.0 * spread
    # breakpoints keep QUADPACK from missing the narrow peak
    pts = [q for q in (p0 - spread, p0, p0 + spread) if 0.0 < q < hi]
    val, err = integrate.quad(dens, 0.0, hi, points=pts or None, epsabs=0.0, epsrel=1e-13, limit=400)
    if not (val > 0) or err > 1e-10 * val:
        raise NonConvergenceError("normalization quadrature did not converge", val, err)
    return 1.0 / math.sqrt(val)


@dataclass(frozen=True)
class Gaussian(WavePacket):
    """C' exp(-delta^2 (p - p0)^2/hbar^2 - i p x0/hbar) over the whole momentum line."""

    delta: float = 1.0
    p0: float = 1.0
    x0: float = -10.0

    kind: ClassVar[str] = "gaussian"
    half_line: ClassVar[bool] = False
    has_closed_form: ClassVar[bool] = True

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be > 0")

    def analytic_amplitude(self, p, units=ATOMIC_UNITS):
        hb = units.hbar
        return self.normalization_constant(units) * np.exp(
            -self.delta**2 * (p - self.p0) ** 2 / hb**2 - 1j * p * self.x0 / hb
        )

    def log_amplitude(self, p, units=ATOMIC_UNITS):
        hb = units.hbar
        return (
            math.log(self.normalization_constant(units))
            - self.delta**2 * (p - self.p0) ** 2 / hb**2
            - 1j * p * self.x0 / hb
        )

    def normalization_constant(self, units=ATOMIC_UNITS):
        return (2.0 * self.delta**2 / (math.pi * units.hbar**2)) ** 0.25

    def taylor_coefficients(self, units=ATOMIC_UNITS):
        raise NotApplicableError(
            "Gaussian amplitude does not vanish at p = 0; the c1/c2 expansion does not apply"
        )

    def exponents(self, units):
        hb = units.hbar
        return [(self.delta**2 / hb**2, complex(2.0 * self.delta**2 * self.p0 / hb**2, -self.x0 / hb))]

    def momentum_window(self, units):
        return self.p0, units.hbar / self.delta

    def time_scale(self, units):
        return units.mass * self.delta**2 / units.hbar


@dataclass(frozen=True)
class LorentzianSquared(WavePacket):
    """psi(x, 0) = N / (x + i alpha)**2, i.e. -2 (alpha/hbar)^{3/2} Theta(p) p exp(-alpha p/hbar)."""

    alpha: float = 1.0

    kind: ClassVar[str] = "lorentzian_squared"

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")

    @property
    def N(self):
        return math.sqrt(2.0 * self.alpha**3 / math.pi)

    def analytic_amplitude(self, p, units=ATOMIC_UNITS):
        r = self.alpha / units.hbar
        return -2.0 * r**1.5 * p * np.exp(-r * p)

    def log_amplitude(self, p, units=ATOMIC_UNITS):
        r = self.alpha / units.hbar
        return math.log(2.0 * r**1.5) + 1j * math.pi + np.log(p) - r * p

    def normalization_constant(self, units=ATOMIC_UNITS):
        return self.N

    def taylor_coefficients(self, units=ATOMIC_UNITS):
        r = self.alpha / units.hbar
        return complex(-2.0 * r**1.5), complex(2.0 * r**2.5)

    def exponents(self, units):
        return [(0.0, complex(-self.alpha / units.hbar))]

    def momentum_window(self, units):
        return 0.0, units.hbar / self.alpha

    def time_scale(self, units):
        return units.mass * self.alpha**2 / units.hbar

    def position_wavefunction_initial(self, x, units=ATOMIC_UNITS):
        val = self.N / (np.asarray(x, dtype=float) + 1j * self.alpha) ** 2
        return complex(val) if np.ndim(x) == 0 else val


@dataclass(frozen=True)
class LinearGaussian(WavePacket):
    """2 / (pi^{1/4} beta^{3/4}) Theta(p) p exp(-p^2 / 2 beta)."""

    beta: float = 1.0

    kind: ClassVar[str] = "linear_gaussian"
    has_closed_form: ClassVar[bool] = True

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be > 0")

    @property
    def prefactor(self):
        return 2.0 / (math.pi**0.25 * self.beta**0.75)

    def analytic_amplitude(self, p, units=ATOMIC_UNITS):
        return self.prefactor * p * np.exp(-p * p / (2.0 * self.beta))

    def log_amplitude(self, p, units=ATOMIC_UNITS):
        return math.log(self.prefactor) + np.log(p) - p * p / (2.0 * self.beta)

    def normalization_constant(self, units=ATOMIC_UNITS):
        return self.prefactor

    def taylor_coefficients(self, units=ATOMIC_UNITS):
        return complex(self.prefactor), 0j

    def exponents(self, units):
        return [(1.0 / (2.0 * self.beta), 0j)]

    def momentum_window(self, units):
        return math.sqrt(self.beta), math.sqrt(self.beta / 2.0)

    def time_scale(self, units):
        return units.mass * units.hbar / self.beta


@dataclass(frozen=True)
class TaylorStub(WavePacket):
    """Synthetic (c1 p + c2 p^2) exp(-p^2/cutoff^2) Theta(p); not normalized.

    Exists to exercise the steepest-descent predictor with prescribed
    coefficients.  Evolution always uses the real-axis quadrature.
    """

    c1: complex = 1.0 + 0j
    c2: complex = 0j
    cutoff: float = 1.0

    kind: ClassVar[str] = "taylor_stub"
    rotation_valid: ClassVar[bool] = False

    def __post_init__(self):
        object.__setattr__(self, "c1", complex(self.c1))
        object.__setattr__(self, "c2", complex(self.c2))
        if self.cutoff <= 0:
            raise ValueError("cutoff must be > 0")

    def analytic_amplitude(self, p, units=ATOMIC_UNITS):
        return (self.c1 * p + self.c2 * p * p) * np.exp(-((p / self.cutoff) ** 2))

    def log_amplitude(self, p, units=ATOMIC_UNITS):
        return np.log(self.c1 * p + self.c2 * p * p) - (p / self.cutoff) ** 2

    def normalization_constant(self, units=ATOMIC_UNITS):
        return 1.0

    def taylor_coefficients(self, units=ATOMIC_UNITS):
        return self.c1, self.c2

    def exponents(self, units):
        return [(1.0 / self.cutoff**2, 0j)]

    def momentum_window(self, units):
        return self.cutoff, self.cutoff / math.sqrt(2.0)

    def time_scale(self, units):
        return units.mass * units.hbar / self.cutoff**2


STATE_KINDS = {
    cls.kind: cls for cls in (TruncatedGaussian, Gaussian, LorentzianSquared, LinearGaussian, TaylorStub)
}


def momentum_amplitude(state: WavePacket, p, units: UnitSystem = ATOMIC_UNITS):
    return state.momentum_amplitude(p, units)


def position_wavefunction_initial(state: WavePacket, x, units: UnitSystem = ATOMIC_UNITS):
    return state.position_wavefunction_initial(x, units)


def normalization_constant(state: WavePacket, units: UnitSystem = ATOMIC_UNITS) -> float:
    return state.normalization_constant(units)


def taylor_coefficients(state: WavePacket, units: UnitSystem = ATOMIC_UNITS):
    return state.taylor_coefficients(units)


def _coerce(name, raw, target):
    if target is complex:
        if isinstance(raw, (list, tuple)):
            return complex(float(raw[0]), float(raw[1]))
        return complex(str(raw).replace(" ", "")) if isinstance(raw, str) else complex(raw)
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ValueError(f"field {name!r}: cannot parse {raw!r} as a number") from None


def parse_state(spec) -> WavePacket:
    """Build a state from ``"state=truncated_gaussian alpha=0.5 ..."``, a JSON
    object string, or a mapping.  Missing parameters take their defaults."""
    if isinstance(spec, str):
        text = spec.strip()
        if text.startswith("{"):
            mapping = json.loads(text)
        else:
            mapping = {}
            for token in text.split():
                if "=" not in token:
                    raise ValueError(f"malformed token {token!r}; expected key=value")
                k, v = token.split("=", 1)
                mapping[k.strip()] = v.strip()
    else:
        mapping = dict(spec)
    kind = mapping.pop("state", None) or mapping.pop("kind", None)
    if kind not in STATE_KINDS:
        raise ValueError(f"field 'state': unknown state {kind!r}; choose from {sorted(STATE_KINDS)}")
    cls = STATE_KINDS[kind]
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for k, v in mapping.items():
        if k not in known:
            raise ValueError(f"field {k!r}: not a parameter of {kind}")
        target = complex if cls is TaylorStub and k in ("c1", "c2") else float
        kwargs[k] = _coerce(k, v, target)
    return cls(**kwargs)
