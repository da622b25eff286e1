"""Multilevel 2-D orthogonal Daubechies wavelet transform, periodized.

Filters are derived at run time by spectral factorization of the
Daubechies half-band polynomial, so any number of vanishing moments is
available without coefficient tables. The periodized transform is
orthogonal for any even signal length, which keeps synthesis equal to
the adjoint (and the inverse) to machine precision.

Transforms operate on the trailing two axes and broadcast over leading
axes, so a whole frame stack transforms in one call.
"""

from math import comb

import numpy as np


def daubechies_filter(order):
    """Orthonormal Daubechies lowpass filter with `order` vanishing moments.

    Returns 2*order taps normalized so their sum is sqrt(2). Order 1 is
    Haar; order 2 reproduces the classic 4-tap filter
    ((1+sqrt3)/(4 sqrt2), ...) exactly.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if order == 1:
        return np.array([1.0, 1.0]) / np.sqrt(2.0)
    n = order
    # roots of P(y) = sum_k C(n-1+k, k) y^k, then per root the z-plane
    # factor inside the unit circle of z^2 - (2-4y) z + 1
    coeffs = [comb(n - 1 + k, k) for k in range(n)]
    yroots = np.roots(list(reversed(coeffs)))
    zroots = []
    for y in yroots:
        b = 2.0 - 4.0 * y
        disc = np.sqrt(b * b - 4.0 + 0j)
        for z in ((b + disc) / 2.0, (b - disc) / 2.0):
            if abs(z) < 1.0:
                zroots.append(z)
    poly = np.array([1.0 + 0j])
    for _ in range(n):
        poly = np.convolve(poly, [1.0, 1.0])
    for z in zroots:
        poly = np.convolve(poly, [1.0, -z])
    h = np.real(poly)
    return h * (np.sqrt(2.0) / h.sum())


def quadrature_mirror(h):
    g = h[::-1].copy()
    g[1::2] *= -1.0
    return g


def _dyadic_valuation(n):
    k = 0
    while n % 2 == 0 and n > 1:
        n //= 2
        k += 1
    return k


class WaveletTransform2D:
    """Separable periodized DWT with a fixed filter and level budget.

    The usable level count on a given image is capped so every
    intermediate band length stays even (sides divisible by 2^levels get
    the full budget).
    """

    def __init__(self, order=4, levels=4):
        if levels < 1:
            raise ValueError("levels must be >= 1")
        self.order = order
        self.levels = levels
        self.lowpass = daubechies_filter(order)
        self.highpass = quadrature_mirror(self.lowpass)

    def levels_for(self, rows, cols):
        return min(self.levels, _dyadic_valuation(rows), _dyadic_valuation(cols))

    def _analyze(self, x):
        # lo[k] = sum_m h[m] x[(2k+m) mod N]; strided slices over a wrapped
        # extension (bands shorter than the filter wrap several times)
        h, g = self.lowpass, self.highpass
        taps = len(h)
        n = x.shape[-1]
        pad = taps - 2
        if pad > 0:
            reps = -(-pad // n)
            x = np.concatenate([x] * (1 + reps), axis=-1)[..., :n + pad]
        lo = h[0] * x[..., 0:n - 1:2]
        hi = g[0] * x[..., 0:n - 1:2]
        for m in range(1, taps):
            seg = x[..., m:m + n - 1:2]
            lo = lo + h[m] * seg
            hi = hi + g[m] * seg
        return lo, hi

    def _synthesize(self, lo, hi):
        # transpose of _analyze: out[(2k+m) mod N] += h[m] lo[k] + g[m] hi[k]
        h, g = self.lowpass, self.highpass
        taps = len(h)
        n = 2 * lo.shape[-1]
        pad = max(taps - 2, 0)
        buf = np.zeros(lo.shape[:-1] + (n + pad,), dtype=np.result_type(lo, hi, h))
        for m in range(taps):
            buf[..., m:m + n - 1:2] += h[m] * lo + g[m] * hi
        out = buf[..., :n].copy()
        for start in range(n, n + pad, n):
            seg = buf[..., start:start + n]
            out[..., :seg.shape[-1]] += seg
        return out

    def forward(self, image):
        """Analysis; returns coefficients packed in an array of the input shape."""
        out = np.array(image, dtype=complex if np.iscomplexobj(image) else float)
        if out.ndim < 2:
            raise ValueError("expected at least a 2-D image")
        r, c = out.shape[-2:]
        if r % 2 or c % 2:
            raise ValueError("image sides must be even")
        for _ in range(self.levels_for(r, c)):
            sub = out[..., :r, :c]
            lo, hi = self._analyze(sub)
            sub[...] = np.concatenate([lo, hi], axis=-1)
            t = np.swapaxes(sub, -1, -2).copy()
            lo, hi = self._analyze(t)
            sub[...] = np.swapaxes(np.concatenate([lo, hi], axis=-1), -1, -2)
            r //= 2
            c //= 2
        return out

    def inverse(self, coeffs):
        """Synthesis; exact adjoint and inverse of `forward`."""
        out = np.array(coeffs)
        rows, cols = out.shape[-2:]
        for k in reversed(range(self.levels_for(rows, cols))):
            r, c = rows >> k, cols >> k
            sub = out[..., :r, :c]
            t = np.swapaxes(sub, -1, -2).copy()
            x = self._synthesize(t[..., :r // 2], t[..., r // 2:])
            sub[...] = np.swapaxes(x, -1, -2)
            sub[...] = self._synthesize(sub[..., :c // 2].copy(), sub[..., c // 2:].copy())
        return out
