"""Contour quadrature for momentum integrals with Gaussian-type integrands.

The integrands handled here are entire functions of p whose size is governed
by a few exponentials exp(-A p**2 + B p) (complex A with Re A >= 0).  On the
real axis they oscillate violently once Im A is large; the integral is
instead taken along a deformed path.  Candidates for a half-line integral:

* rays from the origin p = exp(-i theta) s inside the cone where every
  Gaussian factor decays,
* the two-piece path 0 -> p* -> p* + exp(-i arg(A)/2) s through the saddle
  p* = B / (2A), along which the leading exponential is non-oscillatory,
* the exact steepest-descent curve of the leading exponential leaving the
  endpoint p = 0, closed through the saddle when it ends in the other valley.

Among the admissible paths the one with the smallest peak of Re(exponent)
is used (ties broken by total phase), which bounds cancellation error by
exp(peak) / |result|.  Integrals over the whole line use the straight line
through the saddle.  Each piece is integrated with composite 20-point
Gauss-Legendre panels; all panels are halved until two successive estimates
agree.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonConvergenceError

DROP = 60.0  # integrand truncated once exp(exponent) < exp(peak - DROP)
_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)
_CHUNK = 20000
_N_ANGLES = 33
_TIE = 1.0
_SAMPLES = 512
_PLAN_PANELS = 1 << 20  # candidates needing more panels than this are discarded


@dataclass(frozen=True, eq=False)
class Segment:
    """Piece of a path p(s), s over ``edges`` (panel boundaries)."""

    edges: np.ndarray
    point: Callable
    deriv: Callable
    sign: float = 1.0  # -1 for pieces traversed against their parametrization

    @property
    def panels(self) -> int:
        return len(self.edges) - 1


@dataclass(frozen=True, eq=False)
class Path:
    segments: tuple
    peak: float
    phase: float

    @property
    def panels(self) -> int:
        return sum(seg.panels for seg in self.segments)


def _straight(start, direction, length, panels, sign=1.0):
    start, direction = complex(start), complex(direction)
    return Segment(
        np.linspace(0.0, float(length), panels + 1),
        lambda s: start + direction * s,
        lambda s: direction,
        sign,
    )


def _line(A, B, ps, d):
    """E(ps + d s) = E0 + lin*s - quad*s**2 for E(p) = -A p**2 + B p."""
    return -A * ps * ps + B * ps, (B - 2.0 * A * ps) * d, A * d * d


def _segment_max(e0, lin, quad, length):
    vals = [e0]
    if math.isfinite(length):
        vals.append(e0 + lin * length - quad * length * length)
    if quad > 0.0:
        sv = lin / (2.0 * quad)
        if 0.0 < sv < length:
            vals.append(e0 + lin * lin / (4.0 * quad))
    elif not math.isfinite(length):
        vals.append(math.inf if lin > 0.0 else e0)
    return max(vals)


def _decays(lin, quad, scale):
    return quad > 1e-12 * scale or (abs(quad) <= 1e-12 * scale and lin < 0.0)


def _ray_extent(e0, lin, quad, target, scale):
    """Largest s with e0 + lin s - quad s**2 >= target (0 if never)."""
    if quad > 1e-12 * scale:
        disc = lin * lin + 4.0 * quad * (e0 - target)
        if disc < 0.0:
            return 0.0
        return max((lin + math.sqrt(disc)) / (2.0 * quad), 0.0)
    return max((e0 - target) / -lin, 0.0)


def _panels(lin, quad, length):
    phase = abs(lin.imag) * length + abs(quad.imag) * length * length
    mag = abs(lin.real) * length + abs(quad.real) * length * length
    return int(math.ceil(phase / math.pi + mag / 5.0 + math.sqrt(max(quad.real, 0.0)) * length)) + 2


def _scale(terms):
    return max(abs(A) for A, _ in terms) or max(abs(B) for _, B in terms) or 1.0


def _pieces_peak(terms, pieces):
    """Peak of Re E over straight pieces; None if some ray fails to decay."""
    scale = _scale(terms)
    peak = -math.inf
    for ps, d, length, _ in pieces:
        span = math.inf if length is None else length
        for A, B in terms:
            e0, lin, quad = _line(A, B, ps, d)
            if length is None and not _decays(lin.real, quad.real, scale):
                return None
            peak = max(peak, _segment_max(e0.real, lin.real, quad.real, span))
    return peak


def _pieces_segments(terms, pieces, peak, min_extent=0.0):
    scale = _scale(terms)
    segments = []
    phase = 0.0
    A1, B1 = terms[0]
    for ps, d, length, sign in pieces:
        if length is None:
            length = 0.0
            for A, B in terms:
                e0, lin, quad = _line(A, B, ps, d)
                length = max(length, _ray_extent(e0.real, lin.real, quad.real, peak - DROP, scale))
            # room for polynomial prefactors (p, p**2, p**4)
            length = max(1.15 * length, min_extent)
        e0, lin, quad = _line(A1, B1, ps, d)
        phase += abs(lin.imag) * length + abs(quad.imag) * length * length
        panels = _panels(lin, quad, length)
        if panels > _PLAN_PANELS:
            return None, math.inf
        segments.append(_straight(ps, d, length, panels, sign))
    return segments, phase


def _normalize(pieces):
    return [tuple(pc) + (1.0,) * (4 - len(pc)) for pc in pieces]


def _build(terms, pieces, min_extent=0.0):
    """Turn [(start, direction, length or None[, sign])] into a Path; None marks a ray.

    Returns None when some exponential fails to decay along a ray."""
    pieces = _normalize(pieces)
    peak = _pieces_peak(terms, pieces)
    if peak is None:
        return None
    segments, phase = _pieces_segments(terms, pieces, peak, min_extent)
    if segments is None:
        return None
    return Path(tuple(segments), peak, phase)


def _endpoint_descent(terms):
    """Steepest-descent curve of the leading exponential from p = 0.

    With E1(p) = E* - A (p - p*)**2 the curve E1 = -tau, tau >= 0, is
    p(tau) = p* (1 - sqrt(1 + tau / E*)).  If it ends in the valley opposite
    to exp(-i arg(A)/2) the straight line through the saddle is appended.
    """
    A1, B1 = terms[0]
    if A1 == 0 or B1 == 0:
        return None
    ps = B1 / (2.0 * A1)
    es = B1 * B1 / (4.0 * A1)
    if not abs(es) > 1e-12:
        return None
    scale = _scale(terms)

    def point(tau):
        u = tau / es
        return -ps * u / (1.0 + np.sqrt(1.0 + u))

    def deriv(tau):
        return -ps / (2.0 * es * np.sqrt(1.0 + tau / es))

    def re_max(taus):
        p = point(taus.astype(complex))
        return max(float(np.max((-A * p * p + B * p).real)) for A, B in terms[1:]) if len(terms) > 1 else -math.inf

    # p'(tau) has a branch point at tau = -E*; grade panels towards the
    # nearest parameter value (the turn near the saddle, or the start)
    tau_c = max(-es.real, 0.0)
    gap = abs(-es - tau_c)
    if gap < 1e-6 * abs(es):
        # the curve runs into the saddle; the straight candidate through p*
        # is the same path to within the gap and has no branch point
        return None

    peak = 0.0
    length = 1.15 * DROP
    for _ in range(8):
        taus = np.linspace(0.0, length, _SAMPLES)
        if tau_c < length:
            taus = np.union1d(taus, np.clip(tau_c + gap * np.array([-1.0, 0.0, 1.0]), 0.0, length))
        peak = max(0.0, re_max(taus))
        need = 1.15 * (DROP + peak)
        if need <= length and re_max(np.array([length])) <= peak - DROP:
            break
        length = max(need, 2.0 * length)
    else:
        return None

    # asymptotic direction of the curve: p - p* ~ -p* sqrt(tau / E*)
    direction = -ps * np.sqrt(1.0 / es)
    direction /= abs(direction)
    for A, B in terms:
        if not _decays(0.0, (A * direction * direction).real, scale):
            return None

    n0 = int(math.ceil(length / 2.0)) + 2
    edges = np.linspace(0.0, length, n0 + 1)
    if tau_c < length and gap < length:
        k = np.arange(0, int(math.ceil(math.log2(length / gap))) + 1)
        offs = length * 0.5**k
        edges = np.union1d(edges, np.clip(np.r_[tau_c - offs, tau_c, tau_c + offs], 0.0, length))
    curve = Segment(edges, point, deriv)

    A1 = terms[0][0]
    d = cmath.exp(-0.5j * cmath.phase(A1))
    if (direction * d.conjugate()).real > 0.0:
        return Path((curve,), peak, 0.0)
    line = _normalize([(ps, d, None), (ps, -d, None, -1.0)])
    line_peak = _pieces_peak(terms, line)
    if line_peak is None:
        return None
    peak = max(peak, line_peak)
    segments, phase = _pieces_segments(terms, line, peak)
    if segments is None:
        return None
    return Path((curve, *segments), peak, phase)


def plan_path(terms, half_line=True, real_axis=False, min_extent=0.0):
    """Choose an integration path for the exponentials ``terms`` = [(A, B), ...].

    ``half_line`` integrates over (0, inf), otherwise over the real line.
    ``real_axis`` disables contour deformation (``min_extent`` then sets a
    lower bound on the cutoff).
    """
    if real_axis:
        pieces = [(0j, 1 + 0j, None)] + ([] if half_line else [(0j, -1 + 0j, None, -1.0)])
        path = _build(terms, pieces, min_extent)
        if path is None:
            raise NonConvergenceError("integrand does not decay along the real axis")
        return path

    A1, B1 = terms[0]
    if not half_line:
        if A1 == 0:
            raise NonConvergenceError("whole-line integral needs a Gaussian factor")
        ps = B1 / (2.0 * A1)
        d = cmath.exp(-0.5j * cmath.phase(A1))
        path = _build(terms, [(ps, d, None), (ps, -d, None, -1.0)])
        if path is None:
            raise NonConvergenceError("no decaying line through the saddle")
        return path

    candidates = []
    gauss = [A for A, _ in terms if A != 0]
    if gauss:
        lo = max(cmath.phase(A) / 2.0 - math.pi / 4.0 for A in gauss)
        hi = min(cmath.phase(A) / 2.0 + math.pi / 4.0 for A in gauss)
        margin = 0.01 * (hi - lo)
        for theta in np.linspace(lo + margin, hi - margin, _N_ANGLES):
            candidates.append(_build(terms, [(0j, cmath.exp(-1j * theta), None)]))
        ps = B1 / (2.0 * A1) if A1 != 0 else None
        if ps is not None and abs(ps) > 0:
            d = cmath.exp(-0.5j * cmath.phase(A1))
            candidates.append(_build(terms, [(0j, ps / abs(ps), abs(ps)), (ps, d, None)]))
        candidates.append(_endpoint_descent(terms))
    else:
        # purely exponential integrand: steepest direction of exp(B p)
        if B1.real >= 0:
            raise NonConvergenceError("integrand does not decay at infinity")
        candidates.append(_build(terms, [(0j, -B1.conjugate() / abs(B1), None)]))
    candidates = [c for c in candidates if c is not None]
    if not candidates:
        raise NonConvergenceError("no admissible integration contour")
    best = min(c.peak for c in candidates)
    close = [c for c in candidates if c.peak <= best + _TIE]
    return min(close, key=lambda c: c.phase)


def _refine(edges, level):
    if level == 0:
        return edges
    k = 1 << level
    fine = edges[:-1, None] + np.diff(edges)[:, None] * (np.arange(k) / k)
    return np.append(fine.ravel(), edges[-1])


def _integrate(fn, path, level):
    total = 0j
    absum = 0.0
    for seg in path.segments:
        edges = _refine(seg.edges, level)
        n = len(edges) - 1
        for lo in range(0, n, _CHUNK):
            hi = min(lo + _CHUNK, n)
            a, b = edges[lo:hi], edges[lo + 1 : hi + 1]
            half = 0.5 * (b - a)
            s = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X
            vals = fn(seg.point(s)) * seg.deriv(s) * (half[:, None] * _GL_W)
            total += seg.sign * vals.sum()
            absum += np.abs(vals).sum()
    return total, absum


def integrate_path(fn, path, rel_tol=1e-10, abs_tol=0.0, max_panels=1 << 20):
    """Integrate ``fn`` (vectorized over complex p) along ``path``.

    Every panel is halved until successive estimates agree within the
    tolerance or the rounding floor of the sum.  Returns (value, error).
    """
    level = 0
    prev, _ = _integrate(fn, path, level)
    err = math.inf
    while True:
        level += 1
        if path.panels << level > max_panels:
            raise NonConvergenceError(f"contour quadrature exceeded {max_panels} panels", prev, err)
        val, absum = _integrate(fn, path, level)
        err = abs(val - prev)
        # below the normal range nothing better than "zero" is representable
        floor = max(64.0 * np.finfo(float).eps * absum, 1e3 * np.finfo(float).tiny)
        if err <= max(rel_tol * abs(val), abs_tol, floor):
            return val, max(err, floor)
        prev = val
