"""Radial cavitation in d >= 3 dimensions.

The self-similar motion w(R, t) = t r(R/t) is reconstructed by shooting
from the traction-free cavity, then mollified in R (odd extension) to
study layer bounds, weak residuals and the energy of the limit.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import BPoly
from scipy.optimize import brentq
from scipy.special import gamma as gamma_fn

from .constitutive import StoredEnergy3D, radial_stress
from .mollify import Mollifier, panel_convolution
from .quadrature import composite_rule
from .weakform import (ResidualReport, RadialTestFunction, _checked, _jsonable, build_report,
                       extrapolate_limit, pair_residual_radial, richardson_known)


class NoCavitationError(RuntimeError):
    """No cavitating profile in the shooting bracket (stretch too small)."""


class SonicDegeneracy(ArithmeticError):
    """The similarity ODE is singular (s**2 equals the radial wave speed squared)."""


class KernelPreconditionError(ValueError):
    """The kernel violates phi(0) > 0."""


class InvariantViolation(RuntimeError):
    pass


def omega(d: int) -> float:
    """Surface area of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / float(gamma_fn(d / 2.0))


def _phi12(energy: StoredEnergy3D, l1, l2):
    d = energy.d
    v = l1 * l2 ** (d - 1)
    hp = energy.h_prime(v)
    return l1 + l2 ** (d - 1) * hp, l2 + l1 * l2 ** (d - 2) * hp


def selfsim_ode_rhs(energy: StoredEnergy3D, s: float, r: float, rp: float, sonic_tol: float = 1e-12) -> float:
    """r'' from (s^2 - dPhi1/dl1) r'' = dPhi1/dl2 (r' s - r)/s^2 + (d-1)/s (Phi1 - Phi2)."""
    if s <= 0 or r <= 0 or rp <= 0:
        raise ValueError("need s, r, r' > 0")
    d = energy.d
    l2 = r / s
    v = rp * l2 ** (d - 1)
    h1, h2 = energy.h_prime(v), energy.h_second(v)
    P11 = 1.0 + l2 ** (2 * d - 2) * h2
    P12 = (d - 1) * l2 ** (d - 2) * (h1 + v * h2)
    den = s * s - P11
    if abs(den) <= sonic_tol * max(s * s, P11):
        raise SonicDegeneracy(f"sonic point at s = {s}")
    Phi1, Phi2 = _phi12(energy, rp, l2)
    return float((P12 * (rp * s - r) / s**2 + (d - 1) / s * (Phi1 - Phi2)) / den)


# ---------------------------------------------------------------- shooting


@dataclass(frozen=True)
class ShootingConfig:
    eps: float = 1e-6
    rtol: float = 1e-13
    atol: float = 1e-14
    scan: int = 40
    s_max: float = 50.0
    xtol: float = 1e-14
    max_widen: int = 3


def _rv_rhs(energy: StoredEnergy3D, r0: float = 0.0):
    # first-order system in (q, v) with r = r0 + q: well conditioned near the
    # cavity, where r' ~ s^(d-1) and q carries full relative precision
    d, h2 = energy.d, energy.h_second

    def f(s, y):
        r, v = r0 + y[0], y[1]
        l2 = r / s
        l1 = v * l2 ** (1 - d)
        num = (d - 1) * (l1 - l2) * (l2 ** (d - 1) + (s * s - 1.0) * v / l2)
        return [l1, num / (s * ((s * s - 1.0) - l2 ** (2 * d - 2) * h2(v)))]

    return f


def _launch(energy: StoredEnergy3D, r0: float, eps: float):
    """(q, v) at s = eps from the traction-free cavity expansion."""
    d, H = energy.d, energy.H
    v0 = H + (d - 1) * eps ** (d - 2) / ((d - 2) * r0 ** (d - 2) * energy.h_second(H))
    return [H * eps**d / (d * r0 ** (d - 1)), v0]


def _shot(energy: StoredEnergy3D, lam: float, r0: float, cfg: ShootingConfig, dense: bool = False):
    d = energy.d

    def shock(s, y):
        return r0 + y[0] - lam * s

    shock.terminal, shock.direction = True, -1

    def sonic(s, y):
        l2 = (r0 + y[0]) / s
        return (s * s - 1.0) - l2 ** (2 * d - 2) * energy.h_second(y[1])

    sonic.terminal = True
    with np.errstate(all="ignore"):
        sol = solve_ivp(_rv_rhs(energy, r0), [cfg.eps, cfg.s_max], _launch(energy, r0, cfg.eps), method="DOP853",
                        rtol=cfg.rtol, atol=[1e-300, cfg.atol], events=[shock, sonic], dense_output=dense)
    if sol.status == -1 or not sol.t_events[0].size:
        return None
    sg = float(sol.t_events[0][0])
    q, v = sol.y_events[0][0]
    rp = float(v * (sg / (r0 + q)) ** (d - 1))
    Phi_hom = _phi12(energy, lam, lam)[0]
    mismatch = sg * sg * (lam - rp) - (Phi_hom - _phi12(energy, rp, lam)[0])
    return sg, rp, float(mismatch), sol


def rh_mismatch(energy: StoredEnergy3D, lam: float, r0: float, cfg: ShootingConfig | None = None) -> float:
    """Momentum jump mismatch at the first crossing r(s) = lam s (nan if the shot fails)."""
    out = _shot(energy, lam, r0, cfg or ShootingConfig())
    return math.nan if out is None else out[2]


def _bracket(energy, lam, cfg):
    hi = 2.0 * lam
    for _ in range(cfg.max_widen + 1):
        grid = np.linspace(0.05, hi, cfg.scan)
        vals = [rh_mismatch(energy, lam, q, cfg) for q in grid]
        for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
            if np.isfinite(fa) and np.isfinite(fb) and fa * fb <= 0:
                return a, b
            if np.isfinite(fa) and not np.isfinite(fb):
                # the root may sit just short of the failure edge
                lo, hi_ = a, b
                for _ in range(45):
                    mid = 0.5 * (lo + hi_)
                    fm = rh_mismatch(energy, lam, mid, cfg)
                    if np.isfinite(fm):
                        if fm * fa <= 0:
                            return a, mid
                        lo = mid
                    else:
                        hi_ = mid
        if not np.isfinite(vals[-1]) or vals[-1] > 0:
            break
        hi *= 2.0
    return None


def cavitates(energy: StoredEnergy3D, lam: float, cfg: ShootingConfig | None = None) -> bool:
    return _bracket(energy, lam, cfg or ShootingConfig()) is not None


@dataclass(frozen=True, eq=False)
class SimilarityProfile:
    """Tabulated similarity profile on [0, sigma]; r(s) = lam s beyond."""

    d: int
    lam: float
    energy: StoredEnergy3D
    sigma: float
    r0: float
    rp_sigma: float
    mismatch: float
    s: np.ndarray
    r_grid: np.ndarray
    rp_grid: np.ndarray
    rpp_grid: np.ndarray
    eps: float = 1e-6
    _interp: BPoly = field(default=None, repr=False)  # r - r0

    @property
    def v_grid(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            v = self.rp_grid * (self.r_grid / self.s) ** (self.d - 1)
        v[self.s == 0] = self.energy.H
        return v

    def _eval(self, s, nu):
        s = np.asarray(s, dtype=float)
        inside = s < self.sigma
        sc = np.clip(s, 0.0, self.sigma)
        val = self._interp(sc, nu) + (self.r0 if nu == 0 else 0.0)
        hom = (self.lam * s, np.full_like(s, self.lam), np.zeros_like(s))[nu]
        return np.where(inside, val, hom)

    def r(self, s):
        return self._eval(s, 0)

    def rp(self, s):
        return self._eval(s, 1)

    def rpp(self, s):
        return self._eval(s, 2)

    def v(self, s):
        s = np.asarray(s, dtype=float)
        sp = np.where(s > 0, s, 1.0)
        out = self.rp(s) * (self.r(s) / sp) ** (self.d - 1)
        return np.where(s > 0, out, self.energy.H)

    # motion w(R, t) = t r(R/t); homogeneous for t <= 0 and outside the fan
    def _inside(self, R, t):
        R, t = np.broadcast_arrays(np.asarray(R, float), np.asarray(t, float))
        inside = (t > 0) & (R < self.sigma * t)
        tp = np.where(inside, t, 1.0)
        return R, inside, tp, np.where(inside, R / tp, 0.0)

    def w(self, R, t):
        R, inside, tp, s = self._inside(R, t)
        return np.where(inside, tp * self.r(s), self.lam * R)

    def w_R(self, R, t):
        R, inside, _, s = self._inside(R, t)
        return np.where(inside, self.rp(s), self.lam)

    def w_t(self, R, t):
        R, inside, _, s = self._inside(R, t)
        return np.where(inside, self.r(s) - s * self.rp(s), 0.0)

    def invariants(self, num: int = 1000) -> dict:
        """Sampled profile properties on an interior grid of (0, sigma)."""
        s = np.linspace(0.0, self.sigma, num + 2)[1:-1]
        r, rp, v = self.r(s), self.rp(s), self.v(s)
        H, lam, d = self.energy.H, self.lam, self.d
        tol = 1e-9
        return {
            "continuity": abs(float(self.r(self.sigma)) - lam * self.sigma) <= 1e-9 * lam * self.sigma,
            "rp_below_lambda": self.rp_sigma < lam,
            "rp_positive": bool(np.all(rp > 0)),
            "rp_increasing": bool(np.all(np.diff(rp) > 0)),
            "v_bounds": bool(np.all(v >= H * (1 - tol)) and np.all(v <= lam**d * (1 + tol))),
            "v_increasing": bool(np.all(np.diff(v) > 0)),
            "ordering": bool(np.all(r > lam * s) and np.all(lam * s > rp * s)),
            "ode_residual": float(np.max(np.abs(ode_residual(self, s, relative=True)))),
        }

    def failures(self, num: int = 1000, ode_tol: float = 1e-6) -> list[str]:
        inv = self.invariants(num)
        out = [k for k, v in inv.items() if k != "ode_residual" and not v]
        if inv["ode_residual"] > ode_tol:
            out.append("ode_residual")
        return out


def _tabulate(energy, lam, r0, cfg, grid_size):
    out = _shot(energy, lam, r0, cfg, dense=True)
    if out is None:
        raise NoCavitationError("converged shot failed to reach the shock")
    sg, rp_sigma, mismatch, sol = out
    s = np.unique(np.concatenate([np.geomspace(cfg.eps, 5e-2 * sg, 1500)[:-1], np.linspace(5e-2 * sg, sg, grid_size)]))
    q, v = sol.sol(s)
    q[-1] = lam * sg - r0
    r = r0 + q
    d = energy.d
    rp = v * (s / r) ** (d - 1)
    # r'' through the (q, v) system: no cancellation near the cavity
    vp = np.asarray(_rv_rhs(energy, r0)(s, np.vstack([q, v]))[1])
    l2 = r / s
    rpp = vp * l2 ** (1 - d) + (1 - d) * v * l2 ** (-d) * (rp * s - r) / s**2
    # exact cavity values at s = 0
    s_all = np.concatenate([[0.0], s])
    data = np.column_stack([np.concatenate([[0.0], q]), np.concatenate([[0.0], rp]), np.concatenate([[0.0], rpp])])
    # interpolate q = r - r0 so that the tiny cavity-side increments keep full precision
    interp = BPoly.from_derivatives(s_all, data)
    data[:, 0] += r0
    return SimilarityProfile(d, float(lam), energy, sg, float(r0), rp_sigma, mismatch, s_all, data[:, 0], data[:, 1], data[:, 2],
                             cfg.eps, interp)


def shoot_profile(energy: StoredEnergy3D, lam: float, d: int | None = None, cfg: ShootingConfig | None = None,
                  grid_size: int = 4000, check: bool = True) -> SimilarityProfile:
    """Find r0 = r(0) so that the momentum jump condition holds where r(s) meets lam s."""
    if d is not None and d != energy.d:
        raise ValueError(f"energy built for d = {energy.d}, asked for d = {d}")
    cfg = cfg or ShootingConfig()
    br = _bracket(energy, lam, cfg)
    if br is None:
        raise NoCavitationError(f"no cavitating profile for lambda = {lam}")
    r0 = brentq(lambda q: rh_mismatch(energy, lam, q, cfg), *br, xtol=cfg.xtol, rtol=1e-15)
    prof = _tabulate(energy, lam, r0, cfg, grid_size)
    if check:
        bad = prof.failures()
        if bad:
            raise InvariantViolation(f"profile for lambda = {lam} violates {bad}")
    return prof


def select_lambda(energy: StoredEnergy3D, candidates=(1.5, 2.0, 3.0, 4.0), cfg: ShootingConfig | None = None):
    """Smallest candidate stretch that cavitates, with its profile."""
    for lam in candidates:
        try:
            return lam, shoot_profile(energy, lam, cfg=cfg)
        except NoCavitationError:
            continue
    raise NoCavitationError(f"none of {candidates} cavitates")


def critical_lambda(energy: StoredEnergy3D, lo: float, hi: float, iters: int = 12, cfg: ShootingConfig | None = None) -> tuple:
    """Bisection bracket for the cavitation threshold (lo fails, hi cavitates)."""
    cfg = cfg or ShootingConfig(scan=24)
    if cavitates(energy, lo, cfg) or not cavitates(energy, hi, cfg):
        raise ValueError("bracket must straddle the threshold")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if cavitates(energy, mid, cfg):
            hi = mid
        else:
            lo = mid
    return lo, hi


def eps_sensitivity(energy: StoredEnergy3D, lam: float, eps: float = 1e-6) -> dict:
    """Converged r0 at launch offset eps and eps/2."""
    out = {}
    for e in (eps, eps / 2):
        cfg = ShootingConfig(eps=e)
        br = _bracket(energy, lam, cfg)
        out[e] = brentq(lambda q: rh_mismatch(energy, lam, q, cfg), *br, xtol=cfg.xtol, rtol=1e-15)
    return {"r0": out, "change": abs(out[eps] - out[eps / 2])}


def ode_residual(profile: SimilarityProfile, s, relative: bool = False):
    """s^2 r'' - d/ds Phi1(r', r/s) - (d-1)/s (Phi1 - Phi2) from the interpolant.

    The s-derivative of Phi1 is expanded by the chain rule, so between
    grid nodes this measures interpolation and integration error.  With
    ``relative`` the residual is scaled by the sum of the term magnitudes
    (the terms grow like s**-2 at the cavity).
    """
    s = np.asarray(s, dtype=float)
    E, d = profile.energy, profile.d
    r, rp, rpp = profile.r(s), profile.rp(s), profile.rpp(s)
    l2 = r / s
    v = rp * l2 ** (d - 1)
    h1, h2 = E.h_prime(v), E.h_second(v)
    P11 = 1.0 + l2 ** (2 * d - 2) * h2
    P12 = (d - 1) * l2 ** (d - 2) * (h1 + v * h2)
    Phi1, Phi2 = _phi12(E, rp, l2)
    terms = (s * s * rpp, P11 * rpp, P12 * (rp * s - r) / s**2, (d - 1) / s * (Phi1 - Phi2))
    res = terms[0] - terms[1] - terms[2] - terms[3]
    if relative:
        return res / sum(np.abs(x) for x in terms)
    return res


def _d1(f, x, h):
    return (-f(x - 3 * h) + 9 * f(x - 2 * h) - 45 * f(x - h) + 45 * f(x + h) - 9 * f(x + 2 * h) + f(x + 3 * h)) / (60 * h)


def _d2(f, x, h):
    return (2 * f(x - 3 * h) - 27 * f(x - 2 * h) + 270 * f(x - h) - 490 * f(x)
            + 270 * f(x + h) - 27 * f(x + 2 * h) + 2 * f(x + 3 * h)) / (180 * h * h)


def pde_residual(profile: SimilarityProfile, R, t, h: float | None = None):
    """w_tt - d/dR Phi1 - (d-1)/R (Phi1 - Phi2) for w = t r(R/t).

    w_tt and the R-derivative of Phi1 are sixth-order central differences;
    w_R comes from the interpolant.  The default step is 1e-3 t, i.e. a
    fixed step in the similarity variable.
    """
    R, t = np.broadcast_arrays(np.asarray(R, float), np.asarray(t, float))
    if h is None:
        h = 1e-3 * t
    E, d = profile.energy, profile.d
    w, wR = profile.w, profile.w_R
    w_tt = _d2(lambda tt: w(R, tt), t, h)

    def P1(x):
        return _phi12(E, wR(x, t), w(x, t) / x)[0]

    Phi1, Phi2 = _phi12(E, wR(R, t), w(R, t) / R)
    return w_tt - _d1(P1, R, h) - (d - 1) / R * (Phi1 - Phi2)


def pde_residual_max(profile: SimilarityProfile, t: float = 1.0, lo: float = 0.1, hi: float = 0.95, num: int = 200) -> float:
    """max |pde_residual| over R = s t with s in [lo, hi] sigma.

    The band keeps clear of the shock and of the cavity, where the
    residual terms grow like 1/s^2 and only the relative error is small.
    """
    s = np.linspace(lo, hi, num) * profile.sigma
    return float(np.max(np.abs(pde_residual(profile, s * t, t))))


# ---------------------------------------------------------------- mollified fields


class MollifiedRadialMotion:
    """Odd-extension mollification of w at scale n, evaluated by panel GL rules."""

    def __init__(self, profile: SimilarityProfile, phi: Mollifier, n: float, m: int = 24):
        self.profile, self.phi, self.n, self.m = profile, phi, float(n), m
        self.d = profile.d
        self.energy = profile.energy

    # odd/even extensions of w, w_R, w_t in the first argument
    def _W(self, S, T):
        return np.sign(S) * self.profile.w(np.abs(S), T)

    def _WR(self, S, T):
        return self.profile.w_R(np.abs(S), T)

    def _Wt(self, S, T):
        return np.sign(S) * self.profile.w_t(np.abs(S), T)

    def _conv(self, g, R, T):
        sT = self.profile.sigma * np.maximum(T, 0.0)
        return panel_convolution(self.phi, self.n, R, g, specials=(0.0, sT, -sT), m=self.m, args=(T,))

    def full(self, R, t):
        R, t = np.broadcast_arrays(np.asarray(R, float), np.asarray(t, float))
        w = self._conv(self._W, R, t)
        w0 = np.where(t > 0, t * self.profile.r0, 0.0)
        l1 = self._conv(self._WR, R, t) + 2.0 * self.phi.phi_n(R, self.n) * w0
        Rs = np.where(self.n * R > 1e-6, R, 1.0)
        l2 = np.where(self.n * R > 1e-6, w / Rs, l1)
        v = l1 * l2 ** (self.d - 1)
        wt = self._conv(self._Wt, R, t)
        return w, l1, l2, v, wt

    def fields(self, R, t):
        R, t = np.broadcast_arrays(np.asarray(R, float), np.asarray(t, float))
        w = self._conv(self._W, R, t)
        w0 = np.where(t > 0, t * self.profile.r0, 0.0)
        l1 = self._conv(self._WR, R, t) + 2.0 * self.phi.phi_n(R, self.n) * w0
        Rs = np.where(self.n * R > 1e-6, R, 1.0)
        return w, l1, np.where(self.n * R > 1e-6, w / Rs, l1)

    def stresses(self, l1, l2):
        st = radial_stress(self.energy, l1, l2)
        return st.Phi1, st.Phi2

    def R_breaks(self, t):
        h = 1.0 / self.n
        # graded towards R = 1/n, where the boundary term 2 phi_n(R) w(0+) turns steep
        pts = [0.0, *(h * np.linspace(0.0, 1.0, 9)[1:]), *(h * (1.0 - 2.0 ** -np.arange(4, 13)))]
        if t > 0:
            c = self.profile.sigma * t
            pts += [c - h, c - h / 2, c, c + h / 2, c + h]
            # w/R varies on the scale of R just outside the core
            k = max(1, int(np.ceil(np.log2(max(c / h, 2.0)))))
            pts += list(h * 2.0 ** np.arange(1, k))
        return pts

    @property
    def t_breaks(self):
        ts = 1.0 / (self.n * self.profile.sigma)
        return [0.0, *(ts * 2.0 ** np.arange(-3, 12))]


def mollified_radial_fields(profile: SimilarityProfile, phi: Mollifier, n: float, R, t):
    """(w^n, lambda1^n, lambda2^n, v^n, w^n_t) at (R, t)."""
    return MollifiedRadialMotion(profile, phi, n).full(R, t)


# ---------------------------------------------------------------- layer bounds


@dataclass
class LayerBoundReport:
    ns: list
    c1_outer: list
    c2_outer: list
    wt_max: float
    velocity_ok: bool
    a1_ok: bool
    a2_ok: bool
    a3_ok: bool | None
    a4_c1: list
    a4_c2: list
    a4_ok: bool | None
    vmin_layer: list
    eps_delta: tuple
    samples: int

    @property
    def c1_spread(self) -> float:
        top = np.asarray(self.c1_outer[-3:])
        return float((top.max() - top.min()) / top.min())

    @property
    def envelope_ok(self) -> bool:
        return self.c1_spread < 0.10 and min(self.c1_outer) > 0 and np.isfinite(max(self.c2_outer))

    def to_rows(self):
        return [{"n": n, "c1_outer": a, "c2_outer": b, "c1_core": c, "c2_core": e, "vmin_core": f}
                for n, a, b, c, e, f in zip(self.ns, self.c1_outer, self.c2_outer, self.a4_c1, self.a4_c2, self.vmin_layer)]


def verify_layer_bounds(profile: SimilarityProfile, phi: Mollifier, n_seq, sample_budget: int = 10_000,
                        t_max: float = 1.0, seed: int = 0, eps: float = 0.5) -> LayerBoundReport:
    """Randomised check of the outer-layer envelope, the velocity bound and the core-layer bounds.

    Half the samples per level fall in R > 1/n, half in the core R < 1/n.
    Lower-bound claims near the core are skipped (None) when phi(0) = 0.
    """
    rng = np.random.default_rng(seed)
    ns = list(n_seq)
    per = -(-sample_budget // (2 * len(ns)))
    lam, d, r0, sg = profile.lam, profile.d, profile.r0, profile.sigma
    delta = float(phi.phi(np.array(eps)))
    c1o, c2o, c1c, c2c, vmin = [], [], [], [], []
    wt_max, ok38, ok1, ok2 = 0.0, True, True, True
    ok3 = True if phi.phi0_positive else None
    for n in ns:
        M = MollifiedRadialMotion(profile, phi, n)
        h = 1.0 / n
        # outer layer: R in (1/n, sigma t + 2/n)
        t = rng.uniform(0.0, t_max, per) + 1e-12
        R = h + rng.uniform(0.0, 1.0, per) * (sg * t + h)
        _, _, _, v, wt = M.full(R, t)
        c1o.append(float(v.min()))
        c2o.append(float(v.max()))
        wt_max = max(wt_max, float(np.abs(wt).max()))
        ok38 &= bool(np.all(np.abs(wt) <= r0 * (1 + 1e-12)))
        # core: R < 1/n
        t = rng.uniform(0.0, t_max, per) + 1e-12
        R = rng.uniform(0.0, h, per)
        w, l1, l2, v, wt = M.full(R, t)
        w0 = t * r0
        base = 2.0 * phi.phi_n(R, n) * w0
        slack = 1e-10 * (1 + np.abs(l1))
        ok1 &= bool(np.all(base - slack <= l1) and np.all(l1 <= base + lam + slack))
        Rs = np.where(R > 0, R, 1.0)
        base2 = np.where(R > 0, 2.0 * phi.Phi(n * R) / Rs, 2.0 * n * phi.phi(np.zeros_like(R))) * w0
        slack = 1e-10 * (1 + np.abs(l2))
        ok2 &= bool(np.all(base2 - slack <= l2) and np.all(l2 <= base2 + lam + slack))
        wt_max = max(wt_max, float(np.abs(wt).max()))
        ok38 &= bool(np.all(np.abs(wt) <= r0 * (1 + 1e-12)))
        if ok3 is not None:
            inner = R < eps * h
            ok3 &= bool(np.all(v[inner] >= (2 * n * delta * w0[inner]) ** d * (1 - 1e-10)))
        vmin.append(float(v.min()))
        c1c.append(float(v.min()))
        c2c.append(float(np.max(v / (1.0 + (t * n) ** d))))
    ok4 = None
    if phi.phi0_positive:
        # positive floor and an n-independent envelope for v / (1 + t^d n^d)
        ok4 = bool(min(c1c) > 0 and max(c2c) <= 4.0 * min(c2c))
    return LayerBoundReport(ns, c1o, c2o, wt_max, ok38, ok1, ok2, ok3, c1c, c2c, ok4, vmin, (eps, delta), 2 * per * len(ns))


def degenerate_core_sup(profile: SimilarityProfile, phi: Mollifier, n_seq, t: float = 1.0, num: int = 200) -> list:
    """sup of v^n over R < 1/n^2 on a grid (collapses when phi(0) = 0)."""
    out = []
    for n in n_seq:
        R = np.linspace(0.0, 1.0 / n**2, num + 1)[1:]
        out.append(float(mollified_radial_fields(profile, phi, n, R, t)[3].max()))
    return out


# ---------------------------------------------------------------- energy


def shock_dissipation_J(energy: StoredEnergy3D, lam: float, rp: float) -> float:
    d, h, hp = energy.d, energy.h, energy.h_prime
    a = rp * lam ** (d - 1)
    return float(0.5 * rp**2 + h(a) - 0.5 * lam**2 - h(lam**d)
                 + 0.5 * (rp + hp(a) * lam ** (d - 1) + lam + hp(lam**d) * lam ** (d - 1)) * (lam - rp))


@dataclass
class EnergyAudit3D:
    d: int
    lam: float
    sigma: float
    r0: float
    t: float
    B_radius: float
    J: float
    shock_term: float
    cavity_term: float
    D: float
    shock_inequality_lhs: float
    E_hom: float
    infinite: bool = False
    witness: list = field(default_factory=list)
    numeric_energy: float | None = None

    @property
    def E_total(self) -> float:
        return self.E_hom + self.shock_term + self.cavity_term

    @property
    def verdict(self) -> str:
        if self.infinite:
            return "infinite energy"
        return "energy increase" if self.D > 0 and self.shock_inequality_lhs <= 0 else "violation"

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("d", "lam", "sigma", "r0", "t", "B_radius", "J", "shock_term", "cavity_term",
                                             "D", "shock_inequality_lhs", "E_hom", "infinite", "witness", "numeric_energy")}
        out["E_total"] = self.E_total
        out["verdict"] = self.verdict
        return out


def _default_ball(profile, t):
    return 1.5 * profile.sigma * t + 0.5


def divergence_witness(profile: SimilarityProfile, t: float = 1.0, ns=tuple(2**k for k in range(2, 12)),
                       eps: float = 0.5, phi: Mollifier | None = None) -> list:
    """h((2 delta n)^d w(0,t)^d) / n^d along n; grows without bound when h(v)/v does."""
    if phi is None:
        from .mollify import make_mollifier

        phi = make_mollifier("bump")
    delta = float(phi.phi(np.array(eps)))
    d, w0 = profile.d, t * profile.r0
    return [(int(n), float(profile.energy.h((2 * delta * n) ** d * w0**d) / n**d)) for n in ns]


def energy_fan_3d(profile: SimilarityProfile, t: float = 1.0, B_radius: float | None = None) -> EnergyAudit3D:
    """Closed-form energy budget of the cavitating motion in the ball of radius B_radius."""
    d, lam, sg, r0 = profile.d, profile.lam, profile.sigma, profile.r0
    B = B_radius if B_radius is not None else _default_ball(profile, t)
    if B <= sg * t:
        raise ValueError("ball must contain the wave fan")
    E = profile.energy
    J = shock_dissipation_J(E, lam, profile.rp_sigma)
    k = t**d * omega(d) / d
    lhs315 = (lam * sg) ** d * (1.0 - profile.rp_sigma / lam) - r0**d
    E_hom = omega(d) * B**d / d * E.W_homogeneous(lam)
    if not np.isfinite(E.L):
        return EnergyAudit3D(d, lam, sg, r0, t, B, J, k * sg**d * J, math.inf, math.inf, lhs315, E_hom, True,
                             divergence_witness(profile, t))
    D = sg**d * J + r0**d * E.L
    return EnergyAudit3D(d, lam, sg, r0, t, B, J, k * sg**d * J, k * r0**d * E.L, D, lhs315, E_hom)


def energy_at_scale(profile: SimilarityProfile, phi: Mollifier, n: float, t: float = 1.0, B_radius: float | None = None,
                    R_max: float | None = None, m: int = 24, tol: float = 1e-8) -> float:
    """omega_d int_0^R_max [w_t^2/2 + W(l1, l2)] R^(d-1) dR for the mollified motion."""
    B = B_radius if B_radius is not None else _default_ball(profile, t)
    top = B if R_max is None else R_max
    M = MollifiedRadialMotion(profile, phi, n)
    pts = np.concatenate([M.R_breaks(t), np.linspace(0, B, 9)])
    br = np.unique(np.clip(pts, 0.0, top))
    E, d = profile.energy, profile.d

    def run(mm):
        R, W = composite_rule(br, mm, sub=2)
        _, l1, l2, _, wt = M.full(R, t)
        return float(omega(d) * np.dot(W, (0.5 * wt**2 + E.W_iso(l1, l2)) * R ** (d - 1)))

    return _checked(run, m, tol * max(1.0, abs(run(m))), True)


@dataclass
class EnergyLimit3D:
    ns: list
    values: list
    limit: float
    target: float
    cavity_values: list
    cavity_target: float

    @property
    def rel_error(self) -> float:
        return abs(self.limit - self.target) / abs(self.target)

    @property
    def cavity_rel_error(self) -> float:
        return abs(self.cavity_values[-1] - self.cavity_target) / abs(self.cavity_target)


def energy_limit_numeric(profile: SimilarityProfile, phi: Mollifier, t: float = 1.0, B_radius: float | None = None,
                         n_seq=(16, 32, 64, 128, 256)) -> EnergyLimit3D:
    if not phi.phi0_positive:
        raise KernelPreconditionError(f"kernel {phi.label!r} has phi(0) = 0")
    if not np.isfinite(profile.energy.L):
        raise ValueError("energy is infinite for this stored energy")
    ns = list(n_seq)
    audit = energy_fan_3d(profile, t, B_radius)
    vals = [energy_at_scale(profile, phi, n, t, audit.B_radius) for n in ns]
    cav = [energy_at_scale(profile, phi, n, t, audit.B_radius, R_max=1.0 / n) for n in ns]
    est = extrapolate_limit(list(zip(ns, vals)))
    lim = est.limit if np.isfinite(est.limit) and est.monotone_tail else richardson_known(ns[-3:], vals[-3:], (1.0, 2.0))
    return EnergyLimit3D(ns, vals, float(lim), audit.E_total, cav, audit.cavity_term)


def cavity_ball_energy(profile: SimilarityProfile, phi: Mollifier, n_seq, t: float = 1.0) -> list:
    """Energy inside R < 1/n along n."""
    return [energy_at_scale(profile, phi, n, t, R_max=1.0 / n) for n in n_seq]


# ---------------------------------------------------------------- residual


def radial_residual(profile: SimilarityProfile, phi: Mollifier, n_seq, psi: RadialTestFunction, tol: float = 1e-3,
                    m: int = 12, target: float = 0.0) -> ResidualReport:
    """Weak residual of the mollified cavitating motion along n."""
    if not phi.phi0_positive:
        raise KernelPreconditionError(f"kernel {phi.label!r} has phi(0) = 0; the slic definition needs phi(0) > 0")
    ns = list(n_seq)
    vals = [pair_residual_radial(MollifiedRadialMotion(profile, phi, n, m=12), psi, m=m, tol=1e-5) for n in ns]
    return build_report(ns, vals, target, tol, label=f"cavity/{profile.energy.label}/{phi.label}")


# ---------------------------------------------------------------- writers


def write_profile_csv(profile: SimilarityProfile, path, num: int = 1001) -> Path:
    s = np.linspace(0.0, profile.sigma, num)
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["s", "r", "r_prime", "v"])
        for row in zip(s, profile.r(s), profile.rp(s), profile.v(s)):
            wr.writerow([repr(float(x)) for x in row])
    return path


def write_audit_json(audit: EnergyAudit3D, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(audit.to_dict()), indent=2, sort_keys=True) + "\n")
    return path


def write_bounds_csv(report: LayerBoundReport, path) -> Path:
    path = Path(path)
    rows = report.to_rows()
    with path.open("w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        wr.writeheader()
        for r in rows:
            wr.writerow({k: repr(float(v)) if isinstance(v, float) else v for k, v in r.items()})
    return path
