"""Lagrangean vacuum fan of the p-system (p(u) = -u**-gamma / gamma ... up to sign).

The fan carries a delta mass in the specific volume at xi = 0.  Mollified
fields are built from the odd displacement r(xi) with the singular power
|xi|**(-2/(gamma+1)) integrated by Gauss-Jacobi rules.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mollify import Mollifier
from .quadrature import composite_rule, gauss_legendre, gauss_jacobi_left, graded_breaks
from .weakform import BumpTest1D, ResidualReport, _checked, _jsonable, _panel_breaks, build_report, pair_residual_selfsim, richardson_known


@dataclass(frozen=True)
class VacuumFan:
    u_bar: float
    v_bar: float
    gamma: float
    w: float
    xi_F: float
    delta_mass: float

    @property
    def kappa(self) -> float:
        return (self.gamma - 1.0) / (self.gamma + 1.0)

    @property
    def beta(self) -> float:
        return 2.0 / (self.gamma + 1.0)

    @property
    def r0(self) -> float:
        """r(0+) = -2 w / (gamma - 1)."""
        return -2.0 * self.w / (self.gamma - 1.0)


def make_vacuum_fan(u_bar: float, v_bar: float, gamma: float) -> VacuumFan:
    if u_bar <= 0 or v_bar <= 0 or gamma <= 1:
        raise ValueError("need u_bar > 0, v_bar > 0, gamma > 1")
    w = u_bar ** ((1.0 - gamma) / 2.0) + 0.5 * (1.0 - gamma) * v_bar
    if w >= 0:
        raise ValueError(f"w = {w} >= 0: the Riemann data admit a standard solution")
    xi_F = u_bar ** (-(gamma + 1.0) / 2.0)
    return VacuumFan(float(u_bar), float(v_bar), float(gamma), float(w), float(xi_F), -4.0 * w / (gamma - 1.0))


def displacement_profile(fan: VacuumFan, xi):
    """Odd displacement; affine continuation by the outer states beyond xi_F."""
    xi = np.asarray(xi, dtype=float)
    a = np.abs(xi)
    g = fan.gamma
    inner = (g + 1.0) / (g - 1.0) * a**fan.kappa + fan.r0
    rF = (g + 1.0) / (g - 1.0) * fan.xi_F**fan.kappa + fan.r0
    outer = rF + fan.u_bar * (a - fan.xi_F)
    return np.sign(xi) * np.where(a <= fan.xi_F, inner, outer)


def fan_fields(fan: VacuumFan, xi):
    """Limit fields: absolutely continuous part of u, and v."""
    xi = np.asarray(xi, dtype=float)
    a = np.abs(xi)
    inside = a < fan.xi_F
    with np.errstate(divide="ignore"):
        u = np.where(inside, a ** (-fan.beta), fan.u_bar)
    v_in = 2.0 / (fan.gamma - 1.0) * np.sign(xi) * (a**fan.kappa - fan.w)
    return u, np.where(inside, v_in, np.sign(xi) * fan.v_bar)


class MollifiedFanFields:
    """r_n, u_n = r_n', v_n = r_n - xi u_n at scale n."""

    def __init__(self, fan: VacuumFan, phi: Mollifier, n: float, m: int = 96):
        if 2.0 / n >= fan.xi_F:
            raise ValueError("scale too coarse: need 2/n < xi_F")
        self.fan, self.phi, self.n, self.m = fan, phi, float(n), m
        self.gamma = fan.gamma

    # g(s) on s > 0 near the origin is A + B s**p
    def _conv(self, xi, which: str):
        f, n, m = self.fan, self.n, self.m
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        g = f.gamma
        if which == "r":
            A, B, p, odd = f.r0, (g + 1.0) / (g - 1.0), f.kappa, True
            rF = B * f.xi_F**p + A

            def full(s):
                a = np.abs(s)
                return np.sign(s) * np.where(a <= f.xi_F, A + B * a**p, rF + f.u_bar * (a - f.xi_F))
        else:
            A, B, p, odd = 0.0, 1.0, -f.beta, False

            def full(s):
                a = np.abs(s)
                with np.errstate(divide="ignore"):
                    return np.where(a <= f.xi_F, a**p, f.u_bar)

        zs = n * xi
        cand = np.stack([zs, n * (xi - f.xi_F), n * (xi + f.xi_F)], axis=1)
        cand = np.where(np.abs(cand) < 1.0, cand, 1.0)
        pts = np.sort(np.concatenate([-np.ones((xi.size, 1)), cand, np.ones((xi.size, 1))], axis=1), axis=1)
        gx, gw = gauss_legendre(m)
        jx, jw = gauss_jacobi_left(m, p)
        total = np.zeros(xi.size)
        for k in range(pts.shape[1] - 1):
            lo, hi = pts[:, k : k + 1], pts[:, k + 1 : k + 2]
            width = hi - lo
            live = width[:, 0] > 0
            if not live.any():
                continue
            # plain rule
            z = lo + width * gx
            val = (width * gw * self.phi.phi(z) * full(xi[:, None] - z / n)).sum(axis=1)
            sing_l = live & (np.abs(lo[:, 0] - zs) < 1e-14) & (np.abs(zs) < 1.0)
            sing_r = live & (np.abs(hi[:, 0] - zs) < 1e-14) & (np.abs(zs) < 1.0)
            for mask, side in ((sing_l, 1.0), (sing_r, -1.0)):
                if not mask.any():
                    continue
                lo_m, w_m = lo[mask], width[mask]
                c = zs[mask][:, None]
                # s = xi - z/n = (c - z)/n: positive on the left of c
                sgn = (-side if odd else 1.0)
                smooth = (w_m * gw * self.phi.phi(lo_m + w_m * gx)).sum(axis=1) * sgn * A
                zj = c + side * w_m * jx
                sing = (np.abs(w_m) ** (p + 1.0) * jw * self.phi.phi(zj)).sum(axis=1) * sgn * B * n ** (-p)
                val[mask] = smooth + sing
            total += np.where(live, val, 0.0)
        return total

    def r(self, xi):
        return self._shape_back(xi, self._conv(xi, "r"))

    def u(self, xi):
        xi_a = np.asarray(xi, dtype=float)
        val = self._conv(xi_a, "u") + self.fan.delta_mass * self.phi.phi_n(np.atleast_1d(xi_a), self.n)
        return self._shape_back(xi, val)

    def v(self, xi):
        xi_a = np.atleast_1d(np.asarray(xi, dtype=float))
        return self._shape_back(xi, self._conv(xi_a, "r") - xi_a * (self._conv(xi_a, "u") + self.fan.delta_mass * self.phi.phi_n(xi_a, self.n)))

    @staticmethod
    def _shape_back(xi, val):
        return val.reshape(np.shape(xi)) if np.ndim(xi) else float(val[0])

    @property
    def xi_breaks(self):
        h, F = 1.0 / self.n, self.fan.xi_F
        g = graded_breaks(h, F, h / 2, 1.5)
        return [-F - h, -F, -F + h, F - h, F, F + h, *(h * np.linspace(-1, 1, 9)), *g, *(-g)]


def mollified_fan_fields(fan: VacuumFan, phi: Mollifier, n: float) -> MollifiedFanFields:
    return MollifiedFanFields(fan, phi, n)


def first_equation_identity(fan: VacuumFan, phi: Mollifier, n: float, psi: BumpTest1D, m: int = 24) -> float:
    """Weak form of -xi u_n' - v_n' tested with psi.

    Equals int u_n psi + r_n psi' with u_n and r_n computed by separate
    convolutions, so it vanishes only if u_n = r_n' numerically.
    """
    F = MollifiedFanFields(fan, phi, n)
    lo, hi = psi.support
    br = _panel_breaks(F.xi_breaks, lo, hi, (hi - lo) / 16)

    def run(mm):
        X, W = composite_rule(br, mm)
        return float(np.dot(W, F.u(X) * (psi.psi(X) + X * psi.dpsi(X)) + F.v(X) * psi.dpsi(X)))

    return _checked(run, m, 1e-11, True)


def vacuum_residual(fan: VacuumFan, phi: Mollifier, n_seq, psi: BumpTest1D, tol: float = 1e-4) -> ResidualReport:
    lo, hi = psi.support
    if lo <= -fan.xi_F or hi >= fan.xi_F:
        raise ValueError("test function must be supported inside the fan")
    vals = [pair_residual_selfsim(MollifiedFanFields(fan, phi, n), psi) for n in n_seq]
    return build_report(n_seq, vals, 0.0, tol, label=f"vacuum/{phi.label}")


def vacuum_energy_closed(fan: VacuumFan, xi_bar: float) -> float:
    """Limit energy on (-xi_bar, xi_bar); the delta carries none."""
    g, k, w = fan.gamma, fan.kappa, fan.w
    x = min(xi_bar, fan.xi_F)
    # 2 int_0^x [c1 s^(2k) + c2 (s^k - w)^2] ds, expanded termwise
    c1 = 1.0 / (g * (g - 1.0))
    c2 = 2.0 / (g - 1.0) ** 2
    inner = c1 * x ** (2 * k + 1) / (2 * k + 1) + c2 * (x ** (2 * k + 1) / (2 * k + 1) - 2 * w * x ** (k + 1) / (k + 1) + w * w * x)
    outer = 0.0
    if xi_bar > fan.xi_F:
        outer = (xi_bar - fan.xi_F) * (fan.u_bar ** (1.0 - g) / (g * (g - 1.0)) + 0.5 * fan.v_bar**2)
    return 2.0 * (inner + outer)


def energy_at_scale(fan: VacuumFan, phi: Mollifier, n: float, xi_bar: float, m: int = 32) -> float:
    F = MollifiedFanFields(fan, phi, n)
    h = 1.0 / n
    g = fan.gamma
    br = np.unique(np.concatenate([
        h * np.linspace(0.0, 1.0, 9),
        graded_breaks(h, max(xi_bar - h, 2 * h), h / 4, 1.5),
        np.linspace(max(xi_bar - h, 2 * h), xi_bar, 5),
    ]))
    br = br[br <= xi_bar]

    def run(mm):
        X, W = composite_rule(br, mm)
        u, v = F.u(X), F.v(X)
        return float(2.0 * np.dot(W, u ** (1.0 - g) / (g * (g - 1.0)) + 0.5 * v * v))

    return _checked(run, m, 1e-11, True)


@dataclass
class VacuumEnergy:
    ns: list
    values: list
    limit: float
    closed: float
    exponents: tuple = field(default=())

    @property
    def error(self) -> float:
        return abs(self.limit - self.closed)


def vacuum_energy(fan: VacuumFan, xi_bar: float, n_seq, phi: Mollifier | None = None, exponents=None) -> VacuumEnergy:
    """n-limit of the mollified energy on (-xi_bar, xi_bar).

    The error expansion runs in powers n**-(1 + j kappa); ``exponents``
    defaults to as many of them as the levels allow.
    """
    if not 0 < xi_bar <= fan.xi_F:
        raise ValueError("need 0 < xi_bar <= xi_F")
    if phi is None:
        from .mollify import make_mollifier

        phi = make_mollifier("bump")
    ns = list(n_seq)
    vals = [energy_at_scale(fan, phi, n, xi_bar) for n in ns]
    if exponents is None:
        exponents = tuple(1.0 + j * fan.kappa for j in range(min(len(ns) - 1, 4)))
    lim = richardson_known(ns, vals, exponents)
    return VacuumEnergy(ns, vals, lim, vacuum_energy_closed(fan, xi_bar), tuple(exponents))


def fan_bounds(fan: VacuumFan, phi: Mollifier, ns, samples: int = 10_000, seed: int = 0) -> dict:
    """Sampled lower bound on u_n and the explicit bound on |v_n| inside the fan."""
    rng = np.random.default_rng(seed)
    g = fan.gamma
    u_low = (fan.xi_F + 1.0) ** (-fan.beta)
    C_v = (2.0 / (g - 1.0) * (1.0 + fan.kappa * phi.sup) * (fan.xi_F + 1.0) ** fan.kappa
           - 2.0 / (g - 1.0) * fan.w - 4.0 / (g - 1.0) * fan.w * phi.sup)
    per = -(-samples // len(ns))
    u_min, v_max, ok_u, ok_v = math.inf, 0.0, True, True
    for n in ns:
        xi = rng.uniform(-fan.xi_F, fan.xi_F, per)
        F = MollifiedFanFields(fan, phi, n)
        u, v = F.u(xi), F.v(xi)
        u_min = min(u_min, float(u.min()))
        v_max = max(v_max, float(np.abs(v).max()))
        ok_u &= bool(np.all(u >= u_low))
        ok_v &= bool(np.all(np.abs(v) <= C_v))
    return {"u_lower": u_low, "u_min": u_min, "u_ok": ok_u, "v_bound": C_v, "v_max": v_max, "v_ok": ok_v,
            "p_bound": u_low ** (-g), "samples": per * len(ns)}


def write_fan_csv(fan: VacuumFan, path, num: int = 201) -> Path:
    xi = np.linspace(-1.5 * fan.xi_F, 1.5 * fan.xi_F, num)
    u, v = fan_fields(fan, xi)
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["xi", "u_ac_part", "v", "delta_mass_flag"])
        for x, uu, vv in zip(xi, u, v):
            wr.writerow([repr(float(x)), repr(float(uu)), repr(float(vv)), int(x == 0.0)])
    return path


def write_energy_json(res: VacuumEnergy, path) -> Path:
    path = Path(path)
    data = {"ns": res.ns, "values": res.values, "limit": res.limit, "closed": res.closed, "error": res.error,
            "exponents": list(res.exponents)}
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return path
