"""Constitutive laws: 1-D stress/strain pairs and isotropic radial stored energies."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .quadrature import quad_panels

INF = float("inf")


@dataclass(frozen=True)
class StressLaw1D:
    """Stress tau(u) with stored energy W(u) = int_1^u tau, W(1) = 0.

    ``tau_inf`` and ``L`` are the closed-form limits of tau(u) and
    tau(u)/u as u -> infinity (``inf`` when unbounded).
    """

    tau: Callable
    tau_prime: Callable
    W: Callable
    tau_inf: float
    L: float
    label: str
    tau_second: Callable | None = None

    @property
    def saturates(self) -> bool:
        return np.isfinite(self.tau_inf)


def make_stress_law(label: str, params: dict | None = None) -> StressLaw1D:
    """Build one of the shipped laws: ``saturating`` or ``nonsaturating``."""
    if params:
        raise ValueError(f"law {label!r} takes no parameters, got {sorted(params)}")
    if label == "saturating":
        return StressLaw1D(
            tau=lambda u: 1.0 - 1.0 / np.asarray(u, dtype=float),
            tau_prime=lambda u: np.asarray(u, dtype=float) ** -2.0,
            W=lambda u: (np.asarray(u, dtype=float) - 1.0) - np.log(u),
            tau_inf=1.0,
            L=0.0,
            label=label,
            tau_second=lambda u: -2.0 * np.asarray(u, dtype=float) ** -3.0,
        )
    if label == "nonsaturating":
        return StressLaw1D(
            tau=lambda u: np.asarray(u, dtype=float) - 1.0 / np.asarray(u, dtype=float),
            tau_prime=lambda u: 1.0 + np.asarray(u, dtype=float) ** -2.0,
            W=lambda u: 0.5 * (np.asarray(u, dtype=float) ** 2 - 1.0) - np.log(u),
            tau_inf=INF,
            L=1.0,
            label=label,
            tau_second=lambda u: -2.0 * np.asarray(u, dtype=float) ** -3.0,
        )
    raise ValueError(f"unknown stress law {label!r}")


@dataclass(frozen=True)
class HypothesisReport1D:
    grid: np.ndarray
    tau_prime_positive: np.ndarray
    tau_second_negative: np.ndarray
    compression_u: np.ndarray
    compression_tau: np.ndarray
    compression_W: np.ndarray
    L_estimate: float
    L_error: float
    energy_consistent: bool

    @property
    def a1(self) -> bool:
        return bool(self.tau_prime_positive.all() and self.tau_second_negative.all())

    @property
    def a2(self) -> bool:
        # stress and stored energy blow up under compression
        t, w = self.compression_tau, self.compression_W
        return bool(np.all(np.diff(t) < 0) and t[-1] < -1e3 and np.all(np.diff(w) > 0) and w[-1] > 10.0)

    @property
    def a3(self) -> bool:
        return abs(self.L_estimate) <= max(self.L_error, 1e-6)

    def failures(self) -> list[str]:
        out = []
        if not self.tau_prime_positive.all():
            out.append("tau' > 0")
        if not self.tau_second_negative.all():
            out.append("tau'' < 0")
        if not self.a2:
            out.append("compressive blow-up")
        if not self.energy_consistent:
            out.append("W = int tau")
        return out


def _second_derivative(law: StressLaw1D, u):
    if law.tau_second is not None:
        return np.broadcast_to(np.asarray(law.tau_second(u), dtype=float), np.shape(u))
    h = 1e-4 * np.maximum(u, 1e-3)
    return (law.tau(u + h) - 2.0 * law.tau(u) + law.tau(u - h)) / h**2


def estimate_L(law: StressLaw1D, kmax: int = 40):
    """Extrapolate tau(u)/u along u = 2**k; returns (estimate, error)."""
    from .weakform import extrapolate_limit

    k = np.arange(kmax - 9, kmax + 1)
    u = 2.0 ** k
    q = law.tau(u) / u
    est = extrapolate_limit(list(zip(u, q)))
    limit = est.limit if np.isfinite(est.limit) else float(q[-1])
    return float(limit), float(abs(limit - q[-1]))


def check_hypotheses_1d(law: StressLaw1D, grid) -> HypothesisReport1D:
    """Sampled check of the monotonicity/softening, compression and growth hypotheses."""
    g = np.asarray(grid, dtype=float)
    if np.any(g <= 0) or np.any(np.diff(g) < 0):
        raise ValueError("grid must be positive and sorted")
    tp = np.asarray(law.tau_prime(g), dtype=float) * np.ones_like(g)
    ts = _second_derivative(law, g)
    uc = 10.0 ** -np.arange(1, 7, dtype=float)
    tc = np.asarray(law.tau(uc), dtype=float) * np.ones_like(uc)
    wc = np.asarray(law.W(uc), dtype=float) * np.ones_like(uc)
    L, Lerr = estimate_L(law)
    # W against the primitive of tau at a few grid points
    probe = g[:: max(1, g.size // 7)]
    ok = True
    for u in probe:
        lo, hi = sorted((1.0, float(u)))
        val = quad_panels(lambda s: float(law.tau(s)), lo, hi, tol=1e-9)
        val = val if u >= 1 else -val
        ok &= abs(float(law.W(u)) - val) <= 1e-8 * max(1.0, abs(val))
    return HypothesisReport1D(g, tp > 0, ts < 0, uc, tc, wc, L, Lerr, bool(ok))


# ---------------------------------------------------------------- 3-D energies


@dataclass(frozen=True)
class StoredEnergy3D:
    """W(F) = 0.5 |F|^2 + h(det F) restricted to radial motions in dimension d."""

    h: Callable
    h_prime: Callable
    h_second: Callable
    h_third: Callable
    d: int
    H: float
    L: float
    sublinear_flag: bool
    label: str

    def W_iso(self, lam1, lam2):
        """Stored energy at principal stretches (lam1, lam2, ..., lam2)."""
        lam1 = np.asarray(lam1, dtype=float)
        lam2 = np.asarray(lam2, dtype=float)
        return 0.5 * (lam1**2 + (self.d - 1) * lam2**2) + self.h(lam1 * lam2 ** (self.d - 1))

    def W_homogeneous(self, lam: float) -> float:
        return float(self.W_iso(lam, lam))


_ENERGIES = {
    "reciprocal": (
        lambda v: v + 1.0 / v,
        lambda v: 1.0 - v**-2.0,
        lambda v: 2.0 * v**-3.0,
        lambda v: -6.0 * v**-4.0,
        1.0,
    ),
    "superlinear": (
        lambda v: v * np.log1p(v) + 1.0 / v,
        lambda v: np.log1p(v) + v / (1.0 + v) - v**-2.0,
        lambda v: 1.0 / (1.0 + v) + (1.0 + v) ** -2.0 + 2.0 * v**-3.0,
        lambda v: -((1.0 + v) ** -2.0) - 2.0 * (1.0 + v) ** -3.0 - 6.0 * v**-4.0,
        INF,
    ),
}


def _power_energy(d: int):
    a = 1.0 / d
    return (
        lambda v: v ** (1.0 + a) / (1.0 + a) + 1.0 / v,
        lambda v: v**a - v**-2.0,
        lambda v: a * v ** (a - 1.0) + 2.0 * v**-3.0,
        lambda v: a * (a - 1.0) * v ** (a - 2.0) - 6.0 * v**-4.0,
        INF,
    )


def make_stored_energy(label: str, d: int = 3) -> StoredEnergy3D:
    """Shipped energies: ``reciprocal``, ``superlinear`` and ``power``.

    ``power`` has h'(v) = v**(1/d) - v**-2, so h'(v**d)/v -> 1 and the
    sublinearity flag is false.
    """
    if int(d) != d or d < 3:
        raise ValueError(f"dimension must be an integer >= 3, got {d}")
    d = int(d)
    if label == "power":
        h, hp, hpp, hppp, L = _power_energy(d)
    elif label in _ENERGIES:
        h, hp, hpp, hppp, L = _ENERGIES[label]
    else:
        raise ValueError(f"unknown stored energy {label!r}")
    H = 1.0 if label in ("reciprocal", "power") else brentq(hp, 1e-6, 1e6, xtol=1e-15, rtol=1e-15)
    probe = 10.0 ** np.arange(4, 9)
    ratio = hp(probe**d) / probe
    sublinear = bool(ratio[-1] < 1e-3 and np.all(np.diff(ratio) < 0))
    return StoredEnergy3D(h, hp, hpp, hppp, d, float(H), L, sublinear, label)


@dataclass(frozen=True)
class RadialStress:
    """Principal Piola-Kirchhoff stresses for a radial deformation."""

    Phi1: np.ndarray
    Phi2: np.ndarray
    v: np.ndarray
    d: int = field(default=3)

    def tensor(self, direction):
        """Full stress at a point with radial unit vector ``direction``."""
        e = np.asarray(direction, dtype=float)
        e = e / np.linalg.norm(e)
        P = np.outer(e, e)
        return float(self.Phi1) * P + float(self.Phi2) * (np.eye(e.size) - P)


def radial_stress(energy: StoredEnergy3D, lam1, lam2) -> RadialStress:
    lam1 = np.asarray(lam1, dtype=float)
    lam2 = np.asarray(lam2, dtype=float)
    if np.any(lam1 <= 0) or np.any(lam2 <= 0):
        raise ValueError("principal stretches must be positive")
    d = energy.d
    v = lam1 * lam2 ** (d - 1)
    hp = energy.h_prime(v)
    return RadialStress(lam1 + lam2 ** (d - 1) * hp, lam2 + lam1 * lam2 ** (d - 2) * hp, v, d)


def sign_ledger(energy: StoredEnergy3D, lo: float = 1e-3, hi: float = 1e3, num: int = 1000) -> dict:
    """h'' > 0 and h''' < 0 on log samples, plus the sign pattern of h' about H."""
    v = np.logspace(np.log10(lo), np.log10(hi), num)
    hp = energy.h_prime(v)
    out = {
        "h2_positive": bool(np.all(energy.h_second(v) > 0)),
        "h3_negative": bool(np.all(energy.h_third(v) < 0)),
        "hp_sign_about_H": bool(np.all(hp[v < energy.H * (1 - 1e-9)] < 0) and np.all(hp[v > energy.H * (1 + 1e-9)] > 0)),
    }
    if np.isfinite(energy.L):
        out["hp_to_L_from_below"] = bool(np.all(np.diff(hp) > 0) and np.all(hp < energy.L))
    return out
