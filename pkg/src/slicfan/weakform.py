"""Test functions, weak residual pairings and limit extrapolation over scales."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .quadrature import QuadratureError, composite_rule, map_panels


# ------------------------------------------------------------ bump pieces

def _bump_parts(xi):
    """exp(-1/(1-xi^2)) and its first two xi-derivatives (zero outside (-1,1))."""
    xi = np.asarray(xi, dtype=float)
    f = np.zeros_like(xi)
    f1 = np.zeros_like(xi)
    f2 = np.zeros_like(xi)
    m = np.abs(xi) < 1.0
    x = xi[m]
    q = 1.0 - x * x
    e = np.exp(-1.0 / q)
    g = -2.0 * x / q**2
    gp = -2.0 * (1.0 + 3.0 * x * x) / q**3
    f[m] = e
    f1[m] = e * g
    f2[m] = e * (g * g + gp)
    return f, f1, f2


def _smoothstep_parts(z):
    """Smooth 1 -> 0 transition on [0, 1] and its derivative."""
    z = np.clip(np.asarray(z, dtype=float), 0.0, 1.0)
    S = np.where(z <= 0.0, 1.0, 0.0)
    dS = np.zeros_like(z)
    m = (z > 0.0) & (z < 1.0)
    zm = z[m]
    A = np.exp(-1.0 / (1.0 - zm))
    B = np.exp(-1.0 / zm)
    Ap = -A / (1.0 - zm) ** 2
    Bp = B / zm**2
    S[m] = A / (A + B)
    dS[m] = (Ap * B - A * Bp) / (A + B) ** 2
    return S, dS


# ------------------------------------------------------------ test functions

@dataclass(frozen=True)
class TestFunction:
    """Tensor bump in (x, t) with closed-form derivatives."""

    x0: float
    t0: float
    a: float
    b: float

    __test__ = False  # not a pytest class

    @property
    def box(self):
        return (self.x0 - self.a, self.x0 + self.a, self.t0 - self.b, self.t0 + self.b)

    def _parts(self, x, t):
        fx = _bump_parts((np.asarray(x) - self.x0) / self.a)
        ft = _bump_parts((np.asarray(t) - self.t0) / self.b)
        return fx, ft

    def psi(self, x, t):
        (fx, _, _), (ft, _, _) = self._parts(x, t)
        return fx * ft

    def psi_x(self, x, t):
        (_, fx1, _), (ft, _, _) = self._parts(x, t)
        return fx1 * ft / self.a

    def psi_t(self, x, t):
        (fx, _, _), (_, ft1, _) = self._parts(x, t)
        return fx * ft1 / self.b

    def psi_tt(self, x, t):
        (fx, _, _), (_, _, ft2) = self._parts(x, t)
        return fx * ft2 / self.b**2


def make_bump_test(center, halfwidths) -> TestFunction:
    (x0, t0), (a, b) = center, halfwidths
    if a <= 0 or b <= 0:
        raise ValueError("half-widths must be positive")
    return TestFunction(float(x0), float(t0), float(a), float(b))


@dataclass(frozen=True)
class BumpTest1D:
    """Bump in a single variable, used for self-similar pairings."""

    x0: float
    a: float

    __test__ = False

    @property
    def support(self):
        return (self.x0 - self.a, self.x0 + self.a)

    def psi(self, x):
        return _bump_parts((np.asarray(x) - self.x0) / self.a)[0]

    def dpsi(self, x):
        return _bump_parts((np.asarray(x) - self.x0) / self.a)[1] / self.a


def make_bump_1d(center: float, halfwidth: float) -> BumpTest1D:
    if halfwidth <= 0:
        raise ValueError("half-width must be positive")
    return BumpTest1D(float(center), float(halfwidth))


@dataclass(frozen=True)
class RadialTestFunction:
    """Radial vector test field psi(x, t) = q(|x|, t) x/|x| with q = zeta(t) g(R).

    ``kind`` is ``linear`` (g = R chi(R), chi a smooth cutoff equal to 1 on
    [0, rho1] and 0 beyond rho2) or ``shell`` (g a bump centred at R0 with
    half-width aR, vanishing near the origin).
    """

    t0: float
    b: float
    kind: str
    rho1: float = 0.0
    rho2: float = 0.0
    R0: float = 0.0
    aR: float = 0.0

    __test__ = False

    @property
    def R_max(self) -> float:
        return self.rho2 if self.kind == "linear" else self.R0 + self.aR

    @property
    def R_min(self) -> float:
        return 0.0 if self.kind == "linear" else self.R0 - self.aR

    @property
    def t_range(self):
        return (self.t0 - self.b, self.t0 + self.b)

    def zeta(self, t):
        return _bump_parts((np.asarray(t) - self.t0) / self.b)[0]

    def zeta_tt(self, t):
        return _bump_parts((np.asarray(t) - self.t0) / self.b)[2] / self.b**2

    def g_parts(self, R):
        """(g, g', g/R) of the radial factor."""
        R = np.asarray(R, dtype=float)
        if self.kind == "linear":
            S, dS = _smoothstep_parts((R - self.rho1) / (self.rho2 - self.rho1))
            chi, dchi = S, dS / (self.rho2 - self.rho1)
            return R * chi, chi + R * dchi, chi
        f, f1, _ = _bump_parts((R - self.R0) / self.aR)
        with np.errstate(divide="ignore", invalid="ignore"):
            over = np.where(R > 0, f / np.where(R > 0, R, 1.0), 0.0)
        return f, f1 / self.aR, over

    def q(self, R, t):
        return self.zeta(t) * self.g_parts(R)[0]

    def q_R(self, R, t):
        return self.zeta(t) * self.g_parts(R)[1]

    def q_over_R(self, R, t):
        return self.zeta(t) * self.g_parts(R)[2]

    def q_tt(self, R, t):
        return self.zeta_tt(t) * self.g_parts(R)[0]


def make_radial_test(t0: float, b: float, kind: str = "linear", **kw) -> RadialTestFunction:
    if kind == "linear":
        rho1, rho2 = kw.get("rho1", 0.5), kw.get("rho2", 1.0)
        if not 0 < rho1 < rho2:
            raise ValueError("need 0 < rho1 < rho2")
        return RadialTestFunction(float(t0), float(b), kind, rho1=float(rho1), rho2=float(rho2))
    if kind == "shell":
        R0, aR = kw["R0"], kw["aR"]
        if not 0 < aR < R0:
            raise ValueError("shell must stay away from the origin")
        return RadialTestFunction(float(t0), float(b), kind, R0=float(R0), aR=float(aR))
    raise ValueError(f"unknown radial test kind {kind!r}")


# ------------------------------------------------------------ panel helpers

def _panel_breaks(points, lo: float, hi: float, hmax: float):
    """Sorted breakpoints in [lo, hi] with no gap wider than hmax."""
    pts = np.asarray(points, dtype=float)
    br = np.unique(np.concatenate([pts[(pts > lo) & (pts < hi)], [lo, hi]]))
    widths = np.diff(br)
    k = np.maximum(1, np.ceil(widths / hmax - 1e-12).astype(int))
    if np.all(k == 1):
        return br
    starts = np.repeat(br[:-1], k)
    steps = np.repeat(widths / k, k)
    idx = np.arange(k.sum()) - np.repeat(np.cumsum(k) - k, k)
    return np.append(starts + idx * steps, br[-1])


def tensor_quad(f, t_breaks, x_breaks_at, m: int, chunk: int = 2_000_000) -> float:
    """Iterated GL rule: outer in t over ``t_breaks``, inner in x over
    ``x_breaks_at(t)``; all nodes are evaluated in flat batches."""
    T, WT = composite_rule(t_breaks, m)
    xs, ts, ws = [], [], []
    for t, wt in zip(T, WT):
        X, WX = composite_rule(x_breaks_at(t), m)
        xs.append(X)
        ts.append(np.full_like(X, t))
        ws.append(WX * wt)
    X, Tn, W = np.concatenate(xs), np.concatenate(ts), np.concatenate(ws)
    total = 0.0
    for i in range(0, X.size, chunk):
        sl = slice(i, i + chunk)
        total += float(np.dot(W[sl], f(X[sl], Tn[sl])))
    return total


def _checked(fn, m: int, tol: float, check: bool):
    val = fn(m)
    if check:
        ref = fn(m + m // 2)
        if abs(ref - val) > tol:
            raise QuadratureError(f"panel quadrature unresolved: |diff| = {abs(ref - val):.3e}")
        return ref
    return val


# ------------------------------------------------------------ pairings

def pair_residual_1d(motion, psi: TestFunction, m: int = 20, hmax: float | None = None, tol: float = 1e-8, check: bool = True) -> float:
    """Double integral of y^n psi_tt + tau(y^n_x) psi_x over the support box.

    ``motion`` exposes ``y(x, t)``, ``u(x, t)``, ``law``, ``x_breaks(t)``
    and ``t_breaks``.
    """
    x_lo, x_hi, t_lo, t_hi = psi.box
    tau = motion.law.tau
    hx = hmax or psi.a / 8
    ht = hmax or psi.b / 8
    tb = _panel_breaks(motion.t_breaks, t_lo, t_hi, ht)

    def integrand(X, T):
        return motion.y(X, T) * psi.psi_tt(X, T) + tau(motion.u(X, T)) * psi.psi_x(X, T)

    def run(mm):
        return tensor_quad(integrand, tb, lambda t: _panel_breaks(motion.x_breaks(t), x_lo, x_hi, hx), mm)

    return _checked(run, m, tol, check)


def pair_residual_radial(motion, psi: RadialTestFunction, m: int = 12, tol: float = 1e-5, check: bool = True) -> float:
    """Radial reduction of the vector pairing y^n . psi_tt + S(grad y^n) : grad psi.

    For psi = q(R, t) x/R the integrand over R^d reduces to
    omega_d [w^n q_tt + Phi1 q_R + (d-1) Phi2 q/R] R^(d-1).
    """
    d = motion.d
    if d < 3:
        raise ValueError("dimension must be >= 3")
    from .cavitation3d import omega

    t_lo, t_hi = psi.t_range
    R_lo, R_hi = psi.R_min, psi.R_max
    # psi = zeta(t) g(R) separates the pairing into
    #   int zeta_tt A dt + int zeta B dt,  A = int w g R^(d-1), B = int (Phi1 g' + (d-1) Phi2 g/R) R^(d-1).
    # A, B are smooth in t; they are sampled on Chebyshev nodes per coarse panel and the
    # steep time bump is integrated on a fine rule.
    tb = _panel_breaks(motion.t_breaks, t_lo, t_hi, psi.b / 2)
    T_fine, W_fine = composite_rule(_panel_breaks(tb, t_lo, t_hi, psi.b / 32), 16)
    z_tt, z = psi.zeta_tt(T_fine), psi.zeta(T_fine)

    def run(mm):
        k = np.arange(mm)
        cheb = np.cos((2 * k + 1) * np.pi / (2 * mm))
        total = 0.0
        for a, b in zip(tb[:-1], tb[1:]):
            ts = 0.5 * (a + b) + 0.5 * (b - a) * cheb
            xs, tt, ws, owner = [], [], [], []
            for i, t in enumerate(ts):
                X, WX = composite_rule(_panel_breaks(motion.R_breaks(t), R_lo, R_hi, (R_hi - R_lo) / 24), mm)
                xs.append(X)
                tt.append(np.full_like(X, t))
                ws.append(WX * X ** (d - 1))
                owner.append(np.full(X.size, i))
            X, Tn, W, own = map(np.concatenate, (xs, tt, ws, owner))
            w, l1, l2 = motion.fields(X, Tn)
            Phi1, Phi2 = motion.stresses(l1, l2)
            g, gR, gover = psi.g_parts(X)
            A = np.bincount(own, W * w * g, minlength=mm)
            B = np.bincount(own, W * (Phi1 * gR + (d - 1) * Phi2 * gover), minlength=mm)
            sel = (T_fine >= a) & (T_fine <= b)
            fitA = np.polynomial.chebyshev.Chebyshev.fit(ts, A, mm - 1, domain=[a, b])
            fitB = np.polynomial.chebyshev.Chebyshev.fit(ts, B, mm - 1, domain=[a, b])
            total += float(np.dot(W_fine[sel], z_tt[sel] * fitA(T_fine[sel]) + z[sel] * fitB(T_fine[sel])))
        return float(omega(d) * total)

    return _checked(run, m, tol, check)


def pair_residual_selfsim(fields, psi: BumpTest1D, m: int = 24, tol: float = 1e-10, check: bool = True) -> float:
    """int (gamma^-1 u_n^-gamma - xi v_n) psi' - v_n psi dxi.

    ``fields`` exposes ``u(xi)``, ``v(xi)``, ``gamma`` and ``xi_breaks``.
    """
    lo, hi = psi.support
    g = fields.gamma
    br = _panel_breaks(fields.xi_breaks, lo, hi, (hi - lo) / 16)

    def run(mm):
        X, W = composite_rule(br, mm)
        u, v = fields.u(X), fields.v(X)
        f = (u ** (-g) / g - X * v) * psi.dpsi(X) - v * psi.psi(X)
        return float(np.dot(W, f))

    return _checked(run, m, tol, check)


def delta_derivative_pairing(Y0: float, L: float, psi: TestFunction, m: int = 64) -> float:
    """2 Y0 L int_0^inf t psi_x(0, t) dt."""
    if L == 0:
        return 0.0
    lo, hi = max(0.0, psi.t0 - psi.b), psi.t0 + psi.b
    if hi <= lo:
        return 0.0
    T, W = composite_rule(np.linspace(lo, hi, 9), m)
    return float(2.0 * Y0 * L * np.dot(W, T * psi.psi_x(np.zeros_like(T), T)))


# ------------------------------------------------------------ extrapolation

@dataclass(frozen=True)
class Extrapolation:
    limit: float
    rate: float
    monotone_tail: bool
    fit_residual: float


def _rate_from_triple(n, v):
    d1, d2 = v[1] - v[0], v[2] - v[1]
    if d2 == 0.0 or d1 == 0.0:
        return math.inf
    q = d1 / d2
    if q <= 0:
        return math.nan
    r1, r2 = n[1] / n[0], n[2] / n[1]
    if abs(r1 - r2) < 1e-12 * r1:
        return math.log(q) / math.log(r1)

    def g(p):
        return (n[0] ** -p - n[1] ** -p) / (n[1] ** -p - n[2] ** -p) - q

    try:
        return brentq(g, 1e-6, 60.0)
    except ValueError:
        return math.nan


def extrapolate_limit(pairs: Sequence) -> Extrapolation:
    """Fit value ~ limit + C n**-rate through the last three levels.

    A non-monotone tail (consecutive differences changing sign) returns the
    last value with ``monotone_tail`` false and a NaN rate.
    """
    arr = np.asarray(sorted((float(a), float(b)) for a, b in pairs))
    if arr.shape[0] < 3:
        raise ValueError("need at least three levels")
    n, v = arr[:, 0], arr[:, 1]
    if np.any(np.diff(n) <= 0):
        raise ValueError("levels must be strictly increasing")
    n3, v3 = n[-3:], v[-3:]
    d1, d2 = v3[1] - v3[0], v3[2] - v3[1]
    if d1 * d2 < 0:
        return Extrapolation(float(v3[-1]), math.nan, False, math.nan)
    p = _rate_from_triple(n3, v3)
    if not np.isfinite(p):
        return Extrapolation(float(v3[-1]), p, bool(np.isinf(p)), 0.0)
    C = d2 / (n3[2] ** -p - n3[1] ** -p)
    limit = v3[2] - C * n3[2] ** -p
    resid = 0.0
    if n.size >= 4:
        resid = float(abs(limit + C * n[-4] ** -p - v[-4]))
    return Extrapolation(float(limit), float(p), True, resid)


def richardson_known(ns, values, exponents) -> float:
    """Limit of values ~ limit + sum_j c_j n**-p_j with the p_j given.

    Uses the last ``len(exponents)+1`` levels (exact solve).
    """
    k = len(exponents) + 1
    n = np.asarray(ns, dtype=float)[-k:]
    v = np.asarray(values, dtype=float)[-k:]
    A = np.column_stack([np.ones_like(n)] + [n ** -p for p in exponents])
    return float(np.linalg.solve(A, v)[0])


# ------------------------------------------------------------ reports

@dataclass
class ResidualReport:
    ns: list
    values: list
    limit: float
    rate: float
    target: float = 0.0
    tol: float = 1e-4
    monotone_tail: bool = True
    label: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        return bool(np.isfinite(self.limit) and abs(self.limit - self.target) <= self.tol)

    def running(self):
        """Extrapolation ending at each level (NaN for the first two)."""
        rows = []
        for i, (n, v) in enumerate(zip(self.ns, self.values)):
            if i < 2:
                rows.append((n, v, math.nan, math.nan))
            else:
                e = extrapolate_limit(list(zip(self.ns[: i + 1], self.values[: i + 1])))
                rows.append((n, v, e.limit, e.rate))
        return rows

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["n", "residual", "est_limit", "est_rate"])
            for n, v, lim, rate in self.running():
                wr.writerow([int(n), _fmt(v), _fmt(lim), _fmt(rate)])
        return path

    def summary(self) -> dict:
        out = asdict(self)
        out["verdict"] = self.verdict
        return _jsonable(out)

    def to_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        return path


def build_report(ns, values, target: float = 0.0, tol: float = 1e-4, label: str = "", **extra) -> ResidualReport:
    e = extrapolate_limit(list(zip(ns, values)))
    return ResidualReport(list(map(int, ns)), [float(v) for v in values], e.limit, e.rate, target, tol, e.monotone_tail, label, dict(extra))


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
