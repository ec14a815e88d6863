"""Faddeeva function w(z) = exp(-z**2) erfc(-i z) for complex arguments.

Evaluation is region-switched over the upper half-plane:

* ``|z| <= 0.5``: Maclaurin series  w(z) = sum_n (i z)**n / Gamma(n/2 + 1).
* ``0.5 < |z| < 8``: trapezoidal rule applied to
  w(z) = (i/pi) int exp(-t**2) / (z - t) dt  with step h = 0.5 and the
  pole correction 2 exp(-z**2) / (1 -+ exp(-2 pi i z / h)).  The node grid is
  shifted by h/2 whenever Re z falls within h/4 of a node, which keeps the
  sum and the correction from cancelling.
* ``|z| >= 8``: asymptotic expansion
  w(z) ~ i / (sqrt(pi) z) * sum_k (2k - 1)!! / (2 z**2)**k.

The lower half-plane is reached with the reflection
w(z) = 2 exp(-z**2) - w(-z), which overflows once Re(-z**2) exceeds the
double range.  All entry points accept scalars or numpy arrays and return the
same shape.
"""

import math

import numpy as np
from scipy.special import gamma

__all__ = [
    "w",
    "w_series",
    "w_derivative",
    "erfc",
    "identity_residuals",
    "SERIES_RADIUS",
    "ASYMPTOTIC_RADIUS",
]

SERIES_RADIUS = 0.5
ASYMPTOTIC_RADIUS = 8.0

_SQRT_PI = math.sqrt(math.pi)
_LOG_DBL_MAX = math.log(np.finfo(float).max) - 1.0  # headroom for the factor 2

_SERIES_TERMS = 34
_INV_GAMMA = 1.0 / gamma(np.arange(_SERIES_TERMS) / 2.0 + 1.0)

_H = 0.5
_N_NODES = 14
_NODES = _H * np.arange(1, _N_NODES + 1)
_HALF_NODES = _H * (np.arange(0, _N_NODES + 1) + 0.5)
_W_NODES = np.exp(-_NODES**2)
_W_HALF_NODES = np.exp(-_HALF_NODES**2)

_ASYMPTOTIC_TERMS = 20
# (2k - 1)!! / 2**k, k = 0.._ASYMPTOTIC_TERMS-1
_ASYMPTOTIC_COEFFS = np.cumprod(np.r_[1.0, (2.0 * np.arange(1, _ASYMPTOTIC_TERMS) - 1.0) / 2.0])


def _as_complex_array(z):
    arr = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise ValueError("w-function argument must be finite")
    return arr


def _restore(arr, like):
    if np.ndim(like) == 0:
        return complex(arr.reshape(()))
    return arr


def _series(z, n_terms):
    iz = 1j * z
    coeffs = (
        _INV_GAMMA[:n_terms]
        if n_terms <= _SERIES_TERMS
        else 1.0 / gamma(np.arange(n_terms) / 2.0 + 1.0)
    )
    acc = np.zeros_like(z)
    for c in coeffs[::-1]:
        acc = acc * iz + c
    return acc


def _trapezoid(z):
    """Upper half-plane w via the pole-corrected trapezoidal rule."""
    x, y = z.real, z.imag
    frac = x / _H - np.round(x / _H)
    shifted = np.abs(frac) < 0.25
    out = np.empty_like(z)

    zi = z[~shifted]
    if zi.size:
        zc = zi[:, None]
        s = 1.0 / zi + (_W_NODES * 2.0 * zc / (zc * zc - _NODES**2)).sum(axis=1)
        out[~shifted] = 1j * _H / math.pi * s + _pole_correction(zi, sign=-1.0)

    zs = z[shifted]
    if zs.size:
        zc = zs[:, None]
        s = (_W_HALF_NODES * 2.0 * zc / (zc * zc - _HALF_NODES**2)).sum(axis=1)
        out[shifted] = 1j * _H / math.pi * s + _pole_correction(zs, sign=+1.0)
    return out


def _pole_correction(z, sign):
    # negligible (< 1e-17 relative) once Im z >= pi / h
    active = z.imag < math.pi / _H
    corr = np.zeros_like(z)
    za = z[active]
    corr[active] = 2.0 * np.exp(-za * za) / (1.0 + sign * np.exp(-2j * math.pi * za / _H))
    return corr


def _asymptotic(z):
    q = 1.0 / (z * z)
    acc = np.zeros_like(z)
    for c in _ASYMPTOTIC_COEFFS[::-1]:
        acc = acc * q + c
    return 1j / (_SQRT_PI * z) * acc


def _w_upper(z):
    """w on Im z >= 0 (flat array)."""
    r = np.abs(z)
    out = np.empty_like(z)
    small = r <= SERIES_RADIUS
    large = r >= ASYMPTOTIC_RADIUS
    mid = ~(small | large)
    if small.any():
        out[small] = _series(z[small], _SERIES_TERMS)
    if mid.any():
        out[mid] = _trapezoid(z[mid])
    if large.any():
        out[large] = _asymptotic(z[large])
    return out


def w(z):
    """Faddeeva function w(z) = exp(-z**2) erfc(-i z).

    Relative accuracy is about 1e-14 in the upper half-plane.  Below the real
    axis the reflection w(z) = 2 exp(-z**2) - w(-z) is used; it raises
    ``OverflowError`` when exp(-z**2) is not representable.
    """
    zarr = _as_complex_array(z)
    flat = zarr.ravel()
    out = np.empty_like(flat)
    upper = flat.imag >= 0.0
    if upper.any():
        out[upper] = _w_upper(flat[upper])
    lower = ~upper
    if lower.any():
        zl = flat[lower]
        expo = -(zl * zl)
        if np.any(expo.real > _LOG_DBL_MAX):
            raise OverflowError("w(z): 2*exp(-z**2) overflows in the lower half-plane")
        out[lower] = 2.0 * np.exp(expo) - _w_upper(-zl)
    return _restore(out.reshape(zarr.shape), z)


def w_series(z, n_terms):
    """Partial Maclaurin sum  sum_{n < n_terms} (i z)**n / Gamma(n/2 + 1).

    Plain double arithmetic, so only useful for small |z|; terms grow like
    exp(|z|**2) before they decay.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    zarr = _as_complex_array(z)
    return _restore(_series(zarr, int(n_terms)), z)


def w_derivative(z):
    """w'(z) = -2 z w(z) + 2i / sqrt(pi)."""
    zarr = _as_complex_array(z)
    out = -2.0 * zarr * np.asarray(w(zarr)) + 2j / _SQRT_PI
    return _restore(out, z)


def erfc(z):
    """Complementary error function of a complex argument, erfc(z) = exp(-z**2) w(i z)."""
    zarr = _as_complex_array(z)
    out = np.exp(-zarr * zarr) * np.asarray(w(1j * zarr))
    return _restore(out, z)


def _cauchy_derivative(z, radius=0.1, n=32):
    theta = 2.0 * math.pi * np.arange(n) / n
    ring = np.exp(1j * theta)
    vals = np.asarray(w(z[..., None] + radius * ring))
    return (vals / ring).mean(axis=-1) / radius


def identity_residuals(z, series_terms=60):
    """Relative residuals of the w-function identities at the points ``z``.

    Each residual is divided by the largest term entering its identity:

    * reflection   w(-z) = 2 exp(-z**2) - w(z)
    * conjugation  w(conj z) = conj(w(-z))
    * derivative   w'(z) against a 32-point Cauchy-integral derivative
    * series       Maclaurin sum against w (meaningful for small |z| only)
    """
    z = _as_complex_array(z).ravel()
    wz, wm = np.asarray(w(z)), np.asarray(w(-z))
    e2 = 2.0 * np.exp(-z * z)
    refl = np.abs(wm - (e2 - wz)) / np.maximum.reduce([np.abs(wm), np.abs(e2), np.abs(wz)])
    conj = np.abs(np.asarray(w(z.conj())) - wm.conj()) / np.abs(wm)
    lin = np.abs(2.0 * z * wz)
    deriv = np.abs(np.asarray(w_derivative(z)) - _cauchy_derivative(z)) / np.maximum(lin, 2.0 / _SQRT_PI)
    ser = np.abs(_series(z, series_terms) - wz) / np.abs(wz)
    return {"reflection": refl, "conjugation": conj, "derivative": deriv, "series": ser}
