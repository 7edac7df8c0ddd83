"""Self-similar crack fan of 1-D elastodynamics: fields, residual split, energy audit."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .constitutive import StressLaw1D
from .mollify import Mollifier
from .quadrature import composite_rule, quad_panels
from .weakform import (ResidualReport, TestFunction, _checked, _panel_breaks, build_report, delta_derivative_pairing,
                       pair_residual_1d, tensor_quad)


class LaxViolation(ValueError):
    pass


@dataclass(frozen=True)
class CrackFan:
    """Two shocks at x = -+ sigma t around a crack opening at speed 2 Y0."""

    lam: float
    alpha: float
    sigma: float
    Y0: float
    law: StressLaw1D

    @property
    def lax(self):
        """(sqrt tau'(alpha), sigma, sqrt tau'(lambda))."""
        return (math.sqrt(float(self.law.tau_prime(self.alpha))), self.sigma, math.sqrt(float(self.law.tau_prime(self.lam))))


def solve_fan(law: StressLaw1D, lam: float, alpha: float) -> CrackFan:
    if not 0 < alpha < lam:
        raise ValueError(f"need 0 < alpha < lambda, got alpha={alpha}, lambda={lam}")
    jump = float(law.tau(lam) - law.tau(alpha))
    if jump <= 0:
        raise LaxViolation("stress must increase across the shock")
    sigma = math.sqrt(jump / (lam - alpha))
    fan = CrackFan(float(lam), float(alpha), sigma, (lam - alpha) * sigma, law)
    ca, s, cl = fan.lax
    if not ca > s > cl:
        raise LaxViolation(f"Lax inequalities fail: {ca} > {s} > {cl}")
    return fan


def motion(fan: CrackFan, x, t):
    """Displacement of the fan, extended by the homogeneous state for t <= 0."""
    x = np.asarray(x, dtype=float)
    if t <= 0:
        return fan.lam * x
    inside = np.abs(x) < fan.sigma * t
    inner = fan.alpha * x + np.sign(x) * t * fan.Y0
    return np.where(inside, inner, fan.lam * x)


def strain_rate_limits(fan: CrackFan):
    """Self-similar data (xi, u, v) and the crack's delta mass 2 Y0 at xi = 0."""
    return {
        "left": (fan.lam, 0.0),
        "inner_left": (fan.alpha, -fan.Y0),
        "inner_right": (fan.alpha, fan.Y0),
        "right": (fan.lam, 0.0),
        "delta_mass": 2.0 * fan.Y0,
    }


class MollifiedCrackMotion:
    """Closed-form spatial mollification of the crack motion at scale n."""

    def __init__(self, fan: CrackFan, phi: Mollifier, n: float):
        self.fan, self.phi, self.n = fan, phi, float(n)
        self.law = fan.law
        self.t_star = 2.0 / (self.n * fan.sigma)

    # kernel mass of [a, b] seen from x, and first moment
    def _G0(self, x, a, b):
        n = self.n
        return self.phi.cdf(n * (x - a)) - self.phi.cdf(n * (x - b))

    def _G1(self, x, a, b):
        n = self.n
        return x * self._G0(x, a, b) - (self.phi.moment(n * (x - a)) - self.phi.moment(n * (x - b))) / n

    # all field evaluators broadcast over (x, t); t <= 0 is the static state
    def y(self, x, t):
        f = self.fan
        x, tp = np.broadcast_arrays(np.asarray(x, dtype=float), np.maximum(np.asarray(t, dtype=float), 0.0))
        st = f.sigma * tp
        return f.lam * x + (f.alpha - f.lam) * self._G1(x, -st, st) + tp * f.Y0 * (self._G0(x, 0.0, st) - self._G0(x, -st, 0.0))

    def u(self, x, t):
        f, n = self.fan, self.n
        x, tp = np.broadcast_arrays(np.asarray(x, dtype=float), np.maximum(np.asarray(t, dtype=float), 0.0))
        st = f.sigma * tp
        Kp, Km = self.phi.cdf(n * (x + st)), self.phi.cdf(n * (x - st))
        return 2.0 * tp * f.Y0 * self.phi.phi_n(x, n) + f.lam * (1.0 - Kp) + f.alpha * (Kp - Km) + f.lam * Km

    def v(self, x, t):
        f, n = self.fan, self.n
        x, tp = np.broadcast_arrays(np.asarray(x, dtype=float), np.maximum(np.asarray(t, dtype=float), 0.0))
        st = f.sigma * tp
        K0 = self.phi.cdf(n * x)
        return -f.Y0 * (self.phi.cdf(n * (x + st)) - K0) + f.Y0 * (K0 - self.phi.cdf(n * (x - st)))

    def a(self, x, t):
        f, n = self.fan, self.n
        x, tp = np.broadcast_arrays(np.asarray(x, dtype=float), np.maximum(np.asarray(t, dtype=float), 0.0))
        st = f.sigma * tp
        return f.Y0 * f.sigma * (self.phi.phi_n(x - st, n) - self.phi.phi_n(x + st, n))

    def u_t(self, x, t):
        f, n = self.fan, self.n
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        st = f.sigma * np.maximum(t, 0.0)
        val = 2.0 * f.Y0 * self.phi.phi_n(x, n) + (f.alpha - f.lam) * f.sigma * (self.phi.phi_n(x + st, n) + self.phi.phi_n(x - st, n))
        return np.where(t > 0, val, 0.0)

    def x_breaks(self, t):
        h = 1.0 / self.n
        # fine panels across the crack layer: tau(u^n) turns sharply where
        # 2 t Y0 phi_n(x) ~ alpha
        pts = list(h * np.linspace(-1.0, 1.0, 65))
        if t > 0:
            st = self.fan.sigma * t
            pts += [-st - h, -st, -st + h, st - h, st, st + h]
        return pts

    @property
    def t_breaks(self):
        ts = self.t_star
        return [0.0, 0.125 * ts, 0.25 * ts, 0.5 * ts, ts] + list(ts * 2.0 ** np.arange(1, 40))


def mollified_fields(fan: CrackFan, phi: Mollifier, n: float, x, t):
    m = MollifiedCrackMotion(fan, phi, n)
    return m.u(x, t), m.v(x, t), m.a(x, t)


@dataclass(frozen=True)
class ResidualTerms:
    J: float
    I1: float
    I2: float
    E: float

    @property
    def total(self) -> float:
        return self.J + self.I1 + self.I2 + self.E


def residual_terms(fan: CrackFan, phi: Mollifier, n: float, psi: TestFunction, m: int = 20, tol: float = 1e-8, check: bool = True) -> ResidualTerms:
    """The four pieces of the residual split at t = 2/(n sigma) and |x| = 1/n."""
    mot = MollifiedCrackMotion(fan, phi, n)
    tau = fan.law.tau
    x_lo, x_hi, t_lo, t_hi = psi.box
    h = 1.0 / n
    ts = mot.t_star
    hx, ht = psi.a / 8, psi.b / 8

    def piece(t_from, t_to, which):
        lo, hi = max(t_lo, t_from), min(t_hi, t_to)
        if hi <= lo:
            return 0.0
        tb = _panel_breaks(mot.t_breaks, lo, hi, ht)
        if which == "I2":
            xlo, xhi = max(x_lo, -h), min(x_hi, h)
            if xhi <= xlo:
                return 0.0
            brk = lambda t: _panel_breaks(mot.x_breaks(t), xlo, xhi, hx)
        else:
            brk = lambda t: _panel_breaks(mot.x_breaks(t), x_lo, x_hi, hx)

        def integrand(X, T):
            if which == "J":
                return mot.a(X, T) * psi.psi(X, T)
            if which == "E":
                return mot.a(X, T) * psi.psi(X, T) + tau(mot.u(X, T)) * psi.psi_x(X, T)
            f = tau(mot.u(X, T)) * psi.psi_x(X, T)
            return np.where(np.abs(X) >= h, f, 0.0) if which == "I1" else f

        return _checked(lambda mm: tensor_quad(integrand, tb, brk, mm), m, tol, check)

    # the |x| > 1/n cut sits on a panel edge, so masking is exact
    return ResidualTerms(piece(ts, math.inf, "J"), piece(ts, math.inf, "I1"), piece(ts, math.inf, "I2"), piece(0.0, ts, "E"))


def limit_J(fan: CrackFan, psi: TestFunction, m: int = 64) -> float:
    """int_0^inf Y0 sigma (psi(sigma t, t) - psi(-sigma t, t)) dt."""
    lo, hi = max(0.0, psi.t0 - psi.b), psi.t0 + psi.b
    if hi <= lo:
        return 0.0
    T, W = composite_rule(np.linspace(lo, hi, 17), m)
    s = fan.sigma * T
    return float(fan.Y0 * fan.sigma * np.dot(W, psi.psi(s, T) - psi.psi(-s, T)))


def limit_I2(fan: CrackFan, psi: TestFunction) -> float:
    return delta_derivative_pairing(fan.Y0, fan.law.L, psi)


def E_bound(fan: CrackFan, phi: Mollifier, n: float, psi: TestFunction, m: int = 40) -> float:
    """Explicit bound on the transient term over t in (0, 2/(n sigma))."""
    ts = 2.0 / (n * fan.sigma)
    x_lo, x_hi, t_lo, t_hi = psi.box
    lo, hi = max(0.0, t_lo), min(ts, t_hi)
    integral = 0.0
    if hi > lo:
        T, WT = composite_rule(np.linspace(lo, hi, 5), m)
        X, WX = composite_rule(np.linspace(x_lo, x_hi, 17), m)
        integral = float(WT @ np.abs(psi.psi_x(X[None, :], T[:, None])) @ WX)
    tau = fan.law.tau
    top = fan.lam + 4.0 * fan.Y0 * phi.sup / fan.sigma
    return fan.Y0 * 4.0 / n * math.exp(-2.0) + max(abs(float(tau(fan.alpha))), abs(float(tau(top)))) * integral


def crack_residual(fan: CrackFan, phi: Mollifier, n_seq, psi: TestFunction, tol: float = 1e-4, rel: float = 0.02) -> ResidualReport:
    """Residual pairings along n against the delta-derivative limit.

    With L = 0 the target is 0 and ``tol`` is absolute; otherwise the
    verdict allows a relative error ``rel`` on the target.
    """
    ns = list(n_seq)
    vals = [pair_residual_1d(MollifiedCrackMotion(fan, phi, n), psi) for n in ns]
    target = delta_derivative_pairing(fan.Y0, fan.law.L, psi)
    band = tol if target == 0 else rel * abs(target)
    return build_report(ns, vals, target, band, label=f"crack/{fan.law.label}/{phi.label}")


# ------------------------------------------------------------ energy

@dataclass(frozen=True)
class EnergyAudit1D:
    mu_minus: float
    mu_plus: float
    pc_n: float
    pc_limit: float
    T: float
    T_closed: float
    en_transient_bound: float
    n: float
    t_ref: float
    verdict: str

    def to_dict(self) -> dict:
        return asdict(self)


def dissipation_rates(fan: CrackFan):
    W, tau = fan.law.W, fan.law.tau
    s, Y0 = fan.sigma, fan.Y0
    dW = float(W(fan.lam) - W(fan.alpha))
    ta = float(tau(fan.alpha))
    mu_plus = -s * (-0.5 * Y0**2 + dW) + Y0 * ta
    mu_minus = s * (0.5 * Y0**2 - dW) + Y0 * ta
    return mu_minus, mu_plus


def total_rate_closed(fan: CrackFan) -> float:
    """sigma Y0^2 + 2 Y0 (tau_inf - [W]/[u])."""
    if not fan.law.saturates:
        return math.inf
    dW = float(fan.law.W(fan.lam) - fan.law.W(fan.alpha))
    return fan.sigma * fan.Y0**2 + 2.0 * fan.Y0 * (fan.law.tau_inf - dW / (fan.lam - fan.alpha))


def cavity_cost(fan: CrackFan, phi: Mollifier, n: float, t: float = 1.0, tol: float = 1e-12) -> float:
    """Work of the residual stress in the crack layer at time t > 2/(n sigma)."""
    tau, Y0, a = fan.law.tau, fan.Y0, fan.alpha

    def f(z):
        p = float(phi.phi(z))
        return float(tau(a + 2.0 * n * p * t * Y0)) * 2.0 * Y0 * p

    return quad_panels(f, -1.0, 1.0, points=(0.0,), tol=tol * max(1.0, n)) - 2.0 * Y0 * float(tau(a))


def cavity_cost_limit(fan: CrackFan) -> float:
    if not fan.law.saturates:
        return math.inf
    return 2.0 * (fan.law.tau_inf - float(fan.law.tau(fan.alpha))) * fan.Y0


def _layer_breaks(fan: CrackFan, n: float, t: float, r: float):
    h = 1.0 / n
    st = fan.sigma * t
    pts = [-r, r, -st - h, -st, -st + h, st - h, st, st + h, *(h * np.linspace(-1.0, 1.0, 65))]
    return [p for p in pts if -r <= p <= r]


def energy_rate_numeric(fan: CrackFan, phi: Mollifier, n: float, t, r: float | None = None, m: int = 48, sub: int = 4):
    """d/dt of int_B 0.5 (v^n)^2 + W(u^n), via the integrand v^n a^n + tau(u^n) u^n_t.

    ``t`` may be an array; B = (-r, r) defaults to sigma t + 2/n + 1.
    """
    mot = MollifiedCrackMotion(fan, phi, n)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(ts)
    for i, tt in enumerate(ts):
        if tt <= 0:
            out[i] = 0.0
            continue
        rr = r if r is not None else fan.sigma * tt + 2.0 / n + 1.0
        X, W = composite_rule(_layer_breaks(fan, n, tt, rr), m, sub)
        f = mot.v(X, tt) * mot.a(X, tt) + fan.law.tau(mot.u(X, tt)) * mot.u_t(X, tt)
        out[i] = np.dot(W, f)
    return out if np.ndim(t) else float(out[0])


def kernel_identity_A(phi: Mollifier, n: float, m: int = 48) -> float:
    """Double integral of phi_n(x - z) phi_n(x) over x in (-1/n, 1/n), z < 0."""
    X, WX = composite_rule(np.linspace(-1.0 / n, 1.0 / n, 9), m)
    inner = np.empty_like(X)
    for i, x in enumerate(X):
        # z ranges over (x - 1/n, min(0, x + 1/n))
        Z, WZ = composite_rule(np.linspace(x - 1.0 / n, min(0.0, x + 1.0 / n), 9), m)
        inner[i] = np.dot(WZ, phi.phi_n(x - Z, n))
    return float(np.dot(WX, inner * phi.phi_n(X, n)))


def kernel_identity_B(fan: CrackFan, phi: Mollifier, n: float, m: int = 48) -> float:
    """Shock-layer stored-energy integral; telescopes to sigma (W(alpha) - W(lambda))."""
    X, WX = composite_rule(np.linspace(-1.0 / n, 1.0 / n, 17), m)
    arg = fan.alpha + (fan.lam - fan.alpha) * phi.cdf(n * X)
    return float(np.dot(WX, fan.law.tau(arg) * (-(fan.lam - fan.alpha) * fan.sigma) * phi.phi_n(X, n)))


def transient_bound(fan: CrackFan, phi: Mollifier, n: float, samples: int = 1000) -> float:
    ts = 2.0 / (n * fan.sigma)
    T = ts * (np.arange(samples) + 0.5) / samples
    return float(np.max(np.abs(energy_rate_numeric(fan, phi, n, T))))


def energy_audit(fan: CrackFan, phi: Mollifier, n: float, t_ref: float = 1.0, samples: int = 1000) -> EnergyAudit1D:
    mu_minus, mu_plus = dissipation_rates(fan)
    t_use = max(t_ref, 2.0 / (n * fan.sigma) * 1.0001)
    pc_n = cavity_cost(fan, phi, n, t_use)
    pc_lim = cavity_cost_limit(fan)
    T = mu_minus + mu_plus + pc_lim
    verdict = "finite cost" if math.isfinite(pc_lim) else "infinite cost"
    return EnergyAudit1D(mu_minus, mu_plus, pc_n, pc_lim, T, total_rate_closed(fan), transient_bound(fan, phi, n, samples), float(n), t_use, verdict)


def cavity_cost_sequence(fan: CrackFan, phi: Mollifier, ns, t: float = 1.0):
    """p_c^n along ns; for unbounded stress the sequence grows without bound."""
    vals = np.array([cavity_cost(fan, phi, n, t) for n in ns])
    growing = bool(np.all(np.diff(vals) > 0))
    return vals, growing


# ------------------------------------------------------------ exports

def write_fan_profile(fan: CrackFan, path, num: int = 201) -> Path:
    xi = np.linspace(-2 * fan.sigma, 2 * fan.sigma, num)
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["xi", "u_bar", "v_bar", "delta_mass_at_0"])
        for x in xi:
            inside = abs(x) < fan.sigma
            u = fan.alpha if inside else fan.lam
            v = (math.copysign(fan.Y0, x) if x != 0 else 0.0) if inside else 0.0
            wr.writerow([repr(float(x)), repr(u), repr(float(v)), repr(2 * fan.Y0 if x == 0 else 0.0)])
    return path


def write_audit_table(fan: CrackFan, phi: Mollifier, ns, path, t: float = 1.0) -> Path:
    mu_minus, mu_plus = dissipation_rates(fan)
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["n", "mu_minus", "mu_plus", "pc_n", "sum", "numeric_rate"])
        for n in ns:
            pc = cavity_cost(fan, phi, n, t)
            rate = energy_rate_numeric(fan, phi, n, t)
            wr.writerow([int(n), repr(mu_minus), repr(mu_plus), repr(pc), repr(mu_minus + mu_plus + pc), repr(rate)])
    return path


def write_verdict(audit: EnergyAudit1D, path) -> Path:
    path = Path(path)
    data = {k: (v if not (isinstance(v, float) and math.isinf(v)) else "inf") for k, v in audit.to_dict().items()}
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path
