"""Moments of a standard normal truncated to an interval.

All routines are vectorised over numpy arrays and never return NaN for a
non-empty interval, including intervals whose probability mass underflows.
Three regimes are used:

* deep one-sided tails, via the continued fraction of the Mills ratio;
* short finite intervals, via two-pass Gauss-Legendre quadrature;
* everything else, via the closed form written with ``erfcx``.
"""

from __future__ import annotations

import numpy as np
from scipy import special

_SQRT_2 = np.sqrt(2.0)
_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)

# regime switches, in standardized units
_TAIL_START = 8.0
_TAIL_GAP = 40.0
_SHORT_WIDTH = 1.0
_CF_DEPTH = 80
_GL_NODES = 96

_gl_x, _gl_w = np.polynomial.legendre.leggauss(_GL_NODES)


def _tail_moments(a):
    """Mean and variance of N(0,1) restricted to (a, inf), for large a > 0.

    With r = 1/(a + s) and s = 2/(a + 3/(a + 4/(a + ...))) one has
    mean = a + r and var = r * (s - r); neither form cancels for large a.
    """
    s = np.zeros_like(a)
    for k in range(_CF_DEPTH, 1, -1):
        s = k / (a + s)
    r = 1.0 / (a + s)
    return a + r, r * (s - r)


def _quadrature_moments(a, b):
    """Mean and variance on a short finite interval by Gauss-Legendre.

    Works in offsets from the midpoint so narrow cells far from the origin
    keep full relative precision.
    """
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    u = half[:, None] * _gl_x[None, :]
    logw = -u * (mid[:, None] + 0.5 * u)
    logw -= logw.max(axis=1, keepdims=True)
    w = _gl_w[None, :] * np.exp(logw)
    total = w.sum(axis=1)
    shift = (w * u).sum(axis=1) / total
    dev = u - shift[:, None]
    var = (w * dev * dev).sum(axis=1) / total
    return mid + shift, var


def _closed_form_moments(a, b):
    """Closed form, split by the sign of the lower limit.

    Only called with a + b >= 0, a < _TAIL_START and (b - a) > _SHORT_WIDTH,
    where the variance is bounded away from zero.
    """
    mean = np.empty_like(a)
    second = np.empty_like(a)

    pos = a >= 0
    if np.any(pos):
        ap, bp = a[pos], b[pos]
        finite = np.isfinite(bp)
        decay = np.zeros_like(ap)
        decay[finite] = np.exp(-0.5 * (bp[finite] - ap[finite]) * (bp[finite] + ap[finite]))
        tail_b = np.zeros_like(ap)
        tail_b[finite] = special.erfcx(bp[finite] / _SQRT_2)
        denom = special.erfcx(ap / _SQRT_2) - decay * tail_b
        b_term = np.zeros_like(ap)
        b_term[finite] = bp[finite] * decay[finite]
        mean[pos] = _SQRT_2_OVER_PI * (1.0 - decay) / denom
        second[pos] = 1.0 + _SQRT_2_OVER_PI * (ap - b_term) / denom

    neg = ~pos
    if np.any(neg):
        an, bn = a[neg], b[neg]
        mass = special.ndtr(bn) - special.ndtr(an)
        pdf_a = np.where(np.isfinite(an), np.exp(-0.5 * an * an), 0.0) / np.sqrt(2 * np.pi)
        pdf_b = np.where(np.isfinite(bn), np.exp(-0.5 * bn * bn), 0.0) / np.sqrt(2 * np.pi)
        apdf_a = np.zeros_like(an)
        bpdf_b = np.zeros_like(bn)
        fa, fb = np.isfinite(an), np.isfinite(bn)
        apdf_a[fa] = an[fa] * pdf_a[fa]
        bpdf_b[fb] = bn[fb] * pdf_b[fb]
        mean[neg] = (pdf_a - pdf_b) / mass
        second[neg] = 1.0 + (apdf_a - bpdf_b) / mass

    return mean, np.maximum(second - mean * mean, 0.0)


def truncated_moments(lower, upper):
    """Mean and variance of X ~ N(0, 1) conditioned on ``lower < X <= upper``.

    Parameters
    ----------
    lower, upper : array_like
        Standardized limits; ``-inf`` and ``+inf`` are allowed.
        Broadcast against each other. ``lower < upper`` is required.

    Returns
    -------
    mean, var : np.ndarray
        Arrays of the broadcast shape.
    """
    lo, hi = np.broadcast_arrays(np.asarray(lower, dtype=float), np.asarray(upper, dtype=float))
    shape = lo.shape
    lo = lo.ravel().copy()
    hi = hi.ravel().copy()
    if np.any(~(lo < hi)):
        raise ValueError("truncation interval must satisfy lower < upper")

    both_inf = np.isneginf(lo) & np.isposinf(hi)
    # reflect so that the interval leans to the positive side
    with np.errstate(invalid="ignore"):
        flip = (lo + hi < 0) & ~both_inf
    lo[flip], hi[flip] = -hi[flip], -lo[flip]

    mean = np.zeros_like(lo)
    var = np.ones_like(lo)

    width = hi - lo
    with np.errstate(invalid="ignore", over="ignore"):
        tail = (lo >= _TAIL_START) & (np.isposinf(hi) | (lo * width >= _TAIL_GAP))
        short = ~tail & ~both_inf & np.isfinite(hi) & ((width <= _SHORT_WIDTH) | (lo >= _TAIL_START))
    rest = ~(tail | short | both_inf)

    if np.any(tail):
        mean[tail], var[tail] = _tail_moments(lo[tail])
    if np.any(short):
        mean[short], var[short] = _quadrature_moments(lo[short], hi[short])
    if np.any(rest):
        mean[rest], var[rest] = _closed_form_moments(lo[rest], hi[rest])

    mean[flip] = -mean[flip]
    return mean.reshape(shape), var.reshape(shape)


def gaussian_interval_moments(mu, var, lower, upper):
    """Mean and variance of N(mu, var) restricted to ``(lower, upper]``."""
    mu = np.asarray(mu, dtype=float)
    sd = np.sqrt(np.asarray(var, dtype=float))
    with np.errstate(invalid="ignore"):
        a = (np.asarray(lower, dtype=float) - mu) / sd
        b = (np.asarray(upper, dtype=float) - mu) / sd
    m, v = truncated_moments(a, b)
    return mu + sd * m, sd * sd * v
