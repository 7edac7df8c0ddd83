"""Mollifier kernels and the two spatial convolutions (plain line and odd radial)."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.interpolate import BPoly, PPoly

from .quadrature import gauss_legendre, quad_panels

_TABLE_SIZE = 2000
# fixed cuts in the kernel variable: the bump flattens sharply towards |z| = 1
_KERNEL_CUTS = (-0.8, -0.5, 0.0, 0.5, 0.8)


def _bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = np.abs(x) < 1.0
    out[m] = np.exp(-1.0 / (1.0 - x[m] ** 2))
    return out


def _bump_d(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = np.abs(x) < 1.0
    xm = x[m]
    out[m] = np.exp(-1.0 / (1.0 - xm**2)) * (-2.0 * xm / (1.0 - xm**2) ** 2)
    return out


_SHAPES = {
    "bump": (_bump, _bump_d),
    "bump_zero_center": (
        lambda x: np.asarray(x, dtype=float) ** 2 * _bump(x),
        lambda x: 2.0 * np.asarray(x, dtype=float) * _bump(x) + np.asarray(x, dtype=float) ** 2 * _bump_d(x),
    ),
}


@dataclass(frozen=True)
class Mollifier:
    """Even kernel supported in [-1, 1] with unit mass.

    ``cdf`` and ``moment`` are the running integrals of phi and z*phi
    from -1; they are tabulated once with quintic Hermite interpolation
    built from exact node values and derivatives.
    """

    label: str
    c: float
    phi0_positive: bool
    _shape: Callable = field(repr=False)
    _dshape: Callable = field(repr=False)
    _cdf: PPoly = field(repr=False)
    _mom: PPoly = field(repr=False)
    sup: float = 0.0

    def phi(self, x):
        return self.c * self._shape(x)

    def dphi(self, x):
        return self.c * self._dshape(x)

    def phi_n(self, x, n):
        return n * self.phi(n * np.asarray(x, dtype=float))

    def cdf(self, x):
        """int_{-1}^x phi."""
        x = np.asarray(x, dtype=float)
        out = np.where(x >= 1.0, 1.0, 0.0)
        m = np.abs(x) < 1.0
        out[m] = self._cdf(x[m])
        return out

    def moment(self, x):
        """int_{-1}^x z phi(z) dz."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        m = np.abs(x) < 1.0
        out[m] = self._mom(x[m])
        return out

    def Phi(self, R):
        """Primitive from the origin: Phi(R) = int_0^R phi."""
        return self.cdf(R) - 0.5


@lru_cache(maxsize=None)
def make_mollifier(label: str) -> Mollifier:
    if label not in _SHAPES:
        raise ValueError(f"unknown mollifier {label!r}")
    f, df = _SHAPES[label]
    nodes = np.linspace(-1.0, 1.0, _TABLE_SIZE + 1)
    gx, gw = gauss_legendre(20)
    a, b = nodes[:-1, None], nodes[1:, None]
    z = a + (b - a) * gx
    cells = ((b - a) * gw * f(z)).sum(axis=1)
    mcells = ((b - a) * gw * z * f(z)).sum(axis=1)
    mass = cells.sum()
    c = 1.0 / mass
    K = np.concatenate([[0.0], np.cumsum(cells)]) * c
    K[-1] = 1.0
    M = np.concatenate([[0.0], np.cumsum(mcells)]) * c
    M[-1] = 0.0
    ph, dph = c * f(nodes), c * df(nodes)
    cdf = PPoly.from_bernstein_basis(BPoly.from_derivatives(nodes, np.column_stack([K, ph, dph])))
    mom = PPoly.from_bernstein_basis(BPoly.from_derivatives(nodes, np.column_stack([M, nodes * ph, ph + nodes * dph])))
    fine = np.linspace(-1, 1, 20001)
    sup = float(np.max(c * f(fine)))
    return Mollifier(label, float(c), bool(f(np.array(0.0)) > 0), f, df, cdf, mom, sup)


def convolve_line(y: Callable, n: float, x: float, t: float, phi: Mollifier, kinks=(), tol: float = 1e-10) -> float:
    """int phi_n(x - z) y(z, t) dz by adaptive quadrature over the kernel support.

    ``kinks`` lists points where y(., t) is not smooth.
    """
    lo, hi = x - 1.0 / n, x + 1.0 / n
    return quad_panels(lambda z: float(phi.phi_n(x - z, n) * y(z, t)), lo, hi, points=(x, *kinks), tol=tol)


def convolve_radial_odd(w: Callable, n: float, R: float, t: float, phi: Mollifier, kinks=(), tol: float = 1e-10) -> float:
    """Mollification of the odd extension of w(., t) evaluated at R >= 0."""
    if R == 0.0:
        return 0.0
    h = 1.0 / n
    first = quad_panels(lambda s: float(phi.phi_n(R - s, n) * w(s, t)), max(0.0, R - h), R + h, points=(R, *kinks), tol=tol / 2)
    second = 0.0
    if R < h:
        second = quad_panels(lambda s: float(phi.phi_n(R + s, n) * w(s, t)), 0.0, h - R, points=kinks, tol=tol / 2)
    return first - second


def convolve_radial_odd_deriv(w: Callable, n: float, R: float, t: float, phi: Mollifier, w_R: Callable | None = None, kinks=(), tol: float = 1e-10) -> float:
    """R-derivative of :func:`convolve_radial_odd`.

    The boundary term 2 phi_n(R) w(0+, t) is added explicitly; ``w_R`` is
    the classical derivative of w away from its jumps (finite-difference
    fallback when omitted).
    """
    if w_R is None:
        def w_R(s, t, _e=1e-6):
            s0 = max(s, 2 * _e)
            return (w(s0 + _e, t) - w(s0 - _e, t)) / (2 * _e)
    h = 1.0 / n
    w0 = float(w(1e-300, t))
    total = 2.0 * float(phi.phi_n(R, n)) * w0
    total += quad_panels(lambda s: float(phi.phi_n(R - s, n) * w_R(s, t)), max(0.0, R - h), R + h, points=(R, *kinks), tol=tol / 2)
    if R < h:
        total += quad_panels(lambda s: float(phi.phi_n(R + s, n) * w_R(s, t)), 0.0, h - R, points=kinks, tol=tol / 2)
    return total


def panel_convolution(phi: Mollifier, n: float, x, g: Callable, specials=(), m: int = 24, args=()):
    """int_{-1}^{1} phi(z) g(x - z/n, *args) dz, vectorised over x.

    ``specials`` are points p (scalars or arrays broadcastable with x) where
    g is not smooth; the z-range is split at z = n (x - p) and at a few
    fixed kernel points.  Extra ``args``
    are broadcast with x and passed to g with a trailing node axis.
    """
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.ravel()
    extra = [np.broadcast_to(np.asarray(a, dtype=float), shape).ravel()[:, None] for a in args]
    cuts = [np.clip(n * (x - np.broadcast_to(np.asarray(p, dtype=float), shape).ravel()), -1.0, 1.0) for p in specials]
    ends = np.ones(x.size)
    fixed = [np.full(x.size, c) for c in _KERNEL_CUTS]
    pts = np.sort(np.column_stack([-ends, *fixed, *cuts, ends]), axis=1)
    gx, gw = gauss_legendre(m)
    total = np.zeros(x.size)
    for k in range(pts.shape[1] - 1):
        lo, width = pts[:, k : k + 1], (pts[:, k + 1] - pts[:, k])[:, None]
        live = width[:, 0] > 0
        if not live.any():
            continue
        z = lo[live] + width[live] * gx
        vals = g(x[live, None] - z / n, *(a[live] for a in extra))
        total[live] += (width[live] * gw * phi.phi(z) * vals).sum(axis=1)
    return total.reshape(shape)
