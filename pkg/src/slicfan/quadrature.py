"""Fixed and adaptive quadrature building blocks.

Everything here is vectorised over a leading batch axis so that many
convolution integrals with different panel endpoints can be evaluated
in one numpy pass.
"""
from __future__ import annotations

import warnings
from functools import lru_cache

import numpy as np
from scipy import integrate, special


class QuadratureError(RuntimeError):
    """Raised when an integral does not reach its tolerance."""


@lru_cache(maxsize=None)
def gauss_legendre(m: int):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def gauss_jacobi_left(m: int, p: float):
    """Nodes/weights for int_0^1 x**p f(x) dx (p > -1)."""
    x, w = special.roots_jacobi(m, 0.0, p)
    # weight (1+x)^p on [-1, 1]  ->  x' = (1+x)/2
    return 0.5 * (x + 1.0), w / 2.0 ** (p + 1.0)


def map_panels(a, b, m: int = 32):
    """Map a GL rule onto panels [a, b] (broadcastable arrays).

    Returns nodes and weights with a trailing axis of length m.
    """
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    x, w = gauss_legendre(m)
    return a + (b - a) * x, (b - a) * w


def map_panels_singular(a, b, p: float, m: int = 32, at: str = "left"):
    """Rule for int_a^b |z - c|**p f(z) dz with c the `at` end of the panel.

    The returned weights already contain the factor |z - c|**p, so the
    caller only multiplies by f(z).
    """
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    x, w = gauss_jacobi_left(m, p)
    width = b - a
    scale = np.abs(width) ** (p + 1.0)
    if at == "left":
        return a + width * x, scale * w
    if at == "right":
        return b - width * x, scale * w
    raise ValueError(f"unknown end {at!r}")


def composite_rule(breaks, m: int = 32, sub: int = 1):
    """Composite GL rule over consecutive breakpoints.

    Each interval of `breaks` is cut into `sub` equal panels.
    """
    br = np.unique(np.asarray(breaks, dtype=float))
    if br.size < 2:
        return np.empty(0), np.empty(0)
    if sub > 1:
        fr = np.linspace(0.0, 1.0, sub + 1)
        br = np.unique((br[:-1, None] + np.diff(br)[:, None] * fr[None, :]).ravel())
    x, w = map_panels(br[:-1], br[1:], m)
    return x.ravel(), w.ravel()


def graded_breaks(a: float, b: float, h0: float, ratio: float = 2.0):
    """Breakpoints on [a, b] growing geometrically from width h0 at a."""
    pts = [a]
    h = h0
    while pts[-1] + h < b:
        pts.append(pts[-1] + h)
        h *= ratio
    pts.append(b)
    return np.asarray(pts)


def quad_panels(f, a: float, b: float, points=(), tol: float = 1e-10, limit: int = 200) -> float:
    """Adaptive Gauss-Kronrod over [a, b] split at the given interior points.

    Raises QuadratureError when the summed error estimate exceeds tol.
    """
    if b <= a:
        return 0.0
    pts = sorted({float(p) for p in points if a < p < b})
    edges = [a, *pts, b]
    total, err = 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            try:
                val, e = integrate.quad(f, lo, hi, epsabs=tol / len(edges), epsrel=0.0, limit=limit)
            except integrate.IntegrationWarning as exc:
                raise QuadratureError(f"no convergence on [{lo}, {hi}]: {exc}") from exc
            total += val
            err += e
    if err > tol:
        raise QuadratureError(f"error estimate {err:.3e} above tolerance {tol:.1e}")
    return total
