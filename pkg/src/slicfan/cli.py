"""Experiment runner: ``slicfan run <config.ini>`` and ``slicfan plotdata <manifest.json>``.

Configs are INI files with an ``[experiment]`` section plus optional
``[params]``, ``[tests]`` and ``[tolerances]``.  Artifacts land in
``<out>/<name>/`` where ``out`` is ``--out``, else ``out_dir`` from the
config, else ``$SLICFAN_OUT``, else ``./slicfan_out``.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import cavitation3d as cav
from . import crack1d, vacuum1d
from .constitutive import make_stored_energy, make_stress_law
from .mollify import make_mollifier
from .weakform import _jsonable, make_bump_1d, make_bump_test, make_radial_test

SCHEMA_VERSION = 1
OUT_ENV = "SLICFAN_OUT"
KINDS = ("crack1d", "cavity3d", "vacuum")

log = logging.getLogger("slicfan")

_DEFAULTS = {
    "crack1d": {
        "label": "saturating",
        "params": {"lam": 4.0, "alpha": 2.0},
        "scales": (8, 16, 32, 64, 128, 256, 512),
        "tests": [(0.1, 1.0, 0.5, 0.5), (-0.2, 0.8, 0.6, 0.4), (0.3, 1.5, 0.7, 0.6)],
        "tolerances": {"residual": 1e-4, "relative": 0.02, "energy_routes": 1e-9, "kernel_A": 1e-10,
                       "kernel_B": 1e-8, "energy_rate": 1e-6},
    },
    "cavity3d": {
        "label": "reciprocal",
        "params": {"lam": "auto", "d": 3},
        "scales": (16, 32, 64, 128, 256),
        "tests": [("linear", 1.0, 0.5, 2.0, 3.0)],
        "tolerances": {"residual": 1e-3, "rh": 1e-9, "pde": 1e-6, "energy": 0.01, "cavity": 0.05},
    },
    "vacuum": {
        "label": "p-system",
        "params": {"u_bar": 1.0, "v_bar": 4.0, "gamma": 2.0},
        "scales": (8, 16, 32, 64, 128, 256, 512),
        "tests": [(0.15, 0.8)],
        "tolerances": {"residual": 1e-4, "identity": 1e-10, "energy": 1e-6},
    },
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    name: str = ""
    label: str = ""
    kernel: str = "bump"
    scales: tuple = ()
    params: dict = field(default_factory=dict)
    tests: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    expect_sentinel: str = "auto"
    seed: int = 0
    out_dir: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        base = _DEFAULTS[self.kind]
        self.name = self.name or self.kind
        self.label = self.label or base["label"]
        self.scales = tuple(int(n) for n in (self.scales or base["scales"]))
        self.params = {**base["params"], **self.params}
        self.tests = list(self.tests or base["tests"])
        self.tolerances = {**base["tolerances"], **{k: float(v) for k, v in self.tolerances.items()}}
        if self.expect_sentinel not in ("auto", "true", "false"):
            raise ConfigError("expect_sentinel must be auto, true or false")
        self.validate()

    def validate(self):
        if len(self.scales) < 3 or any(b <= a for a, b in zip(self.scales, self.scales[1:])) or self.scales[0] < 1:
            raise ConfigError("scales must be at least three increasing positive integers")
        try:
            make_mollifier(self.kernel)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        p = self.params
        try:
            if self.kind == "crack1d":
                crack1d.solve_fan(make_stress_law(self.label), float(p["lam"]), float(p["alpha"]))
                for t in self.tests:
                    make_bump_test((t[0], t[1]), (t[2], t[3]))
            elif self.kind == "cavity3d":
                make_stored_energy(self.label, int(p["d"]))
                if p["lam"] != "auto" and float(p["lam"]) <= 1:
                    raise ConfigError("cavity stretch must exceed 1")
                for t in self.tests:
                    _radial_test(t)
            else:
                vacuum1d.make_vacuum_fan(float(p["u_bar"]), float(p["v_bar"]), float(p["gamma"]))
                for t in self.tests:
                    make_bump_1d(*t)
        except (KeyError, IndexError, TypeError) as exc:
            raise ConfigError(f"malformed parameters or tests: {exc}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_ini(cls, path) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        cp.optionxform = str
        if not cp.read(path):
            raise ConfigError(f"cannot read config {path}")
        if "experiment" not in cp:
            raise ConfigError("config needs an [experiment] section")
        ex = cp["experiment"]
        tests = [_parse_row(v) for _, v in sorted(cp["tests"].items())] if "tests" in cp else []
        params = {k: _parse_scalar(v) for k, v in cp["params"].items()} if "params" in cp else {}
        tols = dict(cp["tolerances"]) if "tolerances" in cp else {}
        return cls(
            kind=ex.get("kind", ""),
            name=ex.get("name", ""),
            label=ex.get("label", ""),
            kernel=ex.get("kernel", "bump"),
            scales=tuple(int(x) for x in ex.get("scales", "").replace(",", " ").split()),
            params=params,
            tests=tests,
            tolerances=tols,
            expect_sentinel=ex.get("expect_sentinel", "auto").lower(),
            seed=ex.getint("seed", 0),
            out_dir=ex.get("out_dir"),
        )


def _parse_scalar(v: str):
    v = v.strip()
    try:
        return float(v)
    except ValueError:
        return v


def _parse_row(v: str) -> tuple:
    return tuple(_parse_scalar(x) for x in v.replace(",", " ").split())


def _radial_test(row):
    kind, t0, b, p1, p2 = row
    if kind == "linear":
        return make_radial_test(t0, b, "linear", rho1=p1, rho2=p2)
    return make_radial_test(t0, b, str(kind), R0=p1, aR=p2)


@dataclass
class RunManifest:
    config: dict
    checks: list
    artifacts: list
    wall_clock_s: float
    seed: int
    schema_version: int = SCHEMA_VERSION

    @property
    def ok(self) -> bool:
        return all(c["status"] != "fail" for c in self.checks)

    def to_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(_jsonable(asdict(self)), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "RunManifest":
        data = json.loads(Path(path).read_text())
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"unsupported manifest schema {data.get('schema_version')!r}")
        return cls(data["config"], data["checks"], data["artifacts"], data["wall_clock_s"], data["seed"])


class _Checks:
    def __init__(self):
        self.rows = []

    def add(self, name, ok, value=None, detail=""):
        self.rows.append({"name": name, "status": "pass" if ok else "fail", "value": value, "detail": detail})

    def sentinel(self, name, expected, value=None, detail=""):
        self.rows.append({"name": name, "status": "sentinel" if expected else "fail", "value": value, "detail": detail})


def resolve_out_root(cfg: ExperimentConfig, override=None) -> Path:
    root = override or cfg.out_dir or os.environ.get(OUT_ENV) or "slicfan_out"
    return Path(root) / cfg.name


# ------------------------------------------------------------ pipelines

def _run_crack(cfg: ExperimentConfig, out: Path, chk: _Checks) -> list:
    p, tol = cfg.params, cfg.tolerances
    phi = make_mollifier(cfg.kernel)
    fan = crack1d.solve_fan(make_stress_law(cfg.label), float(p["lam"]), float(p["alpha"]))
    arts = [crack1d.write_fan_profile(fan, out / "fan_profile.csv")]
    chk.add("fan_lax", fan.lax[0] > fan.sigma > fan.lax[2], {"sigma": fan.sigma, "Y0": fan.Y0})

    for n in sorted({8, 64, 512} | {cfg.scales[-1]}):
        A = crack1d.kernel_identity_A(phi, n)
        B = crack1d.kernel_identity_B(fan, phi, n)
        B_ref = fan.sigma * float(fan.law.W(fan.alpha) - fan.law.W(fan.lam))
        chk.add(f"kernel_A_n{n}", abs(A - 0.5) <= tol["kernel_A"], A)
        chk.add(f"kernel_B_n{n}", abs(B - B_ref) <= tol["kernel_B"], B)

    audit = crack1d.energy_audit(fan, phi, cfg.scales[-1])
    arts.append(crack1d.write_verdict(audit, out / "energy_audit.json"))
    if math.isfinite(audit.pc_limit):
        chk.add("energy_routes_agree", abs(audit.T - audit.T_closed) <= tol["energy_routes"], audit.T)
    else:
        _, growing = crack1d.cavity_cost_sequence(fan, phi, cfg.scales)
        expected = cfg.expect_sentinel != "false"
        chk.sentinel("energy_routes_agree", expected, "inf", "unbounded stress: infinite cavity cost")
        chk.add("cavity_cost_growing", growing)

    mu_m, mu_p = crack1d.dissipation_rates(fan)
    worst = 0.0
    for n in (64, 128):
        for t in (0.5, 1.0, 2.0):
            ref = mu_m + mu_p + crack1d.cavity_cost(fan, phi, n, t)
            worst = max(worst, abs(crack1d.energy_rate_numeric(fan, phi, n, t) - ref) / abs(ref))
    chk.add("energy_rate_consistency", worst <= tol["energy_rate"], worst)
    arts.append(crack1d.write_audit_table(fan, phi, cfg.scales, out / "energy_rates.csv"))

    for i, row in enumerate(cfg.tests, 1):
        psi = make_bump_test((row[0], row[1]), (row[2], row[3]))
        rep = crack1d.crack_residual(fan, phi, cfg.scales, psi, tol=tol["residual"], rel=tol["relative"])
        arts += [rep.to_csv(out / f"residual_psi{i}.csv"), rep.to_json(out / f"residual_psi{i}.json")]
        chk.add(f"slic_residual_psi{i}", rep.verdict, rep.limit, f"target {rep.target!r}")
    return arts


def _run_cavity(cfg: ExperimentConfig, out: Path, chk: _Checks) -> list:
    p, tol = cfg.params, cfg.tolerances
    energy = make_stored_energy(cfg.label, int(p["d"]))
    if p["lam"] == "auto":
        found = cav.select_lambda(energy)
        if found is None:
            raise cav.NoCavitationError(f"no candidate stretch cavitates for {cfg.label!r}")
        lam, prof = found
    else:
        lam = float(p["lam"])
        prof = cav.shoot_profile(energy, lam)
    arts = [cav.write_profile_csv(prof, out / "profile.csv")]
    chk.add("rh_mismatch", abs(prof.mismatch) < tol["rh"], prof.mismatch, f"lambda {lam!r}")
    bad = prof.failures()
    chk.add("profile_invariants", not bad, None, ", ".join(bad))
    pde = cav.pde_residual_max(prof)
    chk.add("pde_residual", pde < tol["pde"], pde)

    phi = make_mollifier(cfg.kernel)
    layer_ns = [n for n in (8, 16, 32, 64, 128, 256)]
    bounds = cav.verify_layer_bounds(prof, phi, layer_ns, seed=cfg.seed)
    arts.append(cav.write_bounds_csv(bounds, out / "layer_bounds.csv"))
    chk.add("outer_envelope_stable", bounds.envelope_ok, bounds.c1_spread)
    chk.add("velocity_bound", bounds.velocity_ok, bounds.wt_max)
    for key in ("a1_ok", "a2_ok", "a3_ok", "a4_ok"):
        val = getattr(bounds, key)
        name = "core_bound_" + key[:2]
        if val is None:
            chk.sentinel(name, True, None, "kernel has phi(0) = 0")
        else:
            chk.add(name, val)
    sup = cav.degenerate_core_sup(prof, make_mollifier("bump_zero_center"), (8, 16, 32, 64, 128))
    ratios = [a / b for a, b in zip(sup, sup[1:])]
    chk.add("degenerate_core_collapse", min(ratios) >= 2.0, min(ratios))

    for i, row in enumerate(cfg.tests, 1):
        psi = _radial_test(row)
        try:
            rep = cav.radial_residual(prof, phi, cfg.scales, psi, tol=tol["residual"])
        except cav.KernelPreconditionError as exc:
            chk.sentinel(f"slic_residual_psi{i}", True, None, str(exc))
            continue
        arts += [rep.to_csv(out / f"residual_psi{i}.csv"), rep.to_json(out / f"residual_psi{i}.json")]
        if energy.sublinear_flag or psi.kind == "shell":
            chk.add(f"slic_residual_psi{i}", rep.verdict, rep.limit)
        else:
            top = rep.values[-3:]
            chk.add(f"nonslic_residual_psi{i}", min(top) > 10 * tol["residual"] and rep.limit > 10 * tol["residual"], rep.limit)

    audit = cav.energy_fan_3d(prof)
    if audit.infinite:
        expected = cfg.expect_sentinel != "false"
        chk.sentinel("energy_balance", expected, "inf", "infinite energy")
        w = [v for _, v in audit.witness]
        chk.add("divergence_witness_growing", all(b > a for a, b in zip(w, w[1:])), w[-1])
    else:
        if cfg.expect_sentinel == "true":
            chk.add("energy_balance", False, audit.E_total, "finite energy where a sentinel was expected")
        elif phi.phi0_positive:
            lim = cav.energy_limit_numeric(prof, phi, B_radius=audit.B_radius, n_seq=cfg.scales)
            audit.numeric_energy = lim.limit
            chk.add("energy_balance", lim.rel_error <= tol["energy"], lim.rel_error)
            chk.add("cavity_ball_energy", lim.cavity_rel_error <= tol["cavity"], lim.cavity_rel_error)
        else:
            chk.sentinel("energy_balance", True, None, "kernel has phi(0) = 0")
        chk.add("dissipation_positive", audit.D > 0, audit.D)
        chk.add("shock_inequality", audit.shock_inequality_lhs <= 0, audit.shock_inequality_lhs)
    arts.append(cav.write_audit_json(audit, out / "energy_audit.json"))
    return arts


def _run_vacuum(cfg: ExperimentConfig, out: Path, chk: _Checks) -> list:
    p, tol = cfg.params, cfg.tolerances
    fan = vacuum1d.make_vacuum_fan(float(p["u_bar"]), float(p["v_bar"]), float(p["gamma"]))
    phi = make_mollifier(cfg.kernel)
    arts = [vacuum1d.write_fan_csv(fan, out / "fan.csv")]
    for i, row in enumerate(cfg.tests, 1):
        psi = make_bump_1d(*row)
        worst = max(abs(vacuum1d.first_equation_identity(fan, phi, n, psi)) for n in cfg.scales)
        chk.add(f"first_equation_psi{i}", worst <= tol["identity"], worst)
        rep = vacuum1d.vacuum_residual(fan, phi, cfg.scales, psi, tol=tol["residual"])
        arts += [rep.to_csv(out / f"residual_psi{i}.csv"), rep.to_json(out / f"residual_psi{i}.json")]
        chk.add(f"slic_residual_psi{i}", rep.verdict, rep.limit)
    xi_bar = float(p.get("xi_bar", fan.xi_F))
    en = vacuum1d.vacuum_energy(fan, xi_bar, [n for n in cfg.scales if n >= 32] or cfg.scales, phi=phi)
    arts.append(vacuum1d.write_energy_json(en, out / "energy.json"))
    chk.add("energy_closed_form", en.error <= tol["energy"], en.limit)
    lb = vacuum1d.fan_bounds(fan, phi, cfg.scales, seed=cfg.seed)
    chk.add("lower_bound_u", lb["u_ok"], lb["u_min"])
    chk.add("upper_bound_v", lb["v_ok"], lb["v_max"])
    return arts


_PIPELINES = {"crack1d": _run_crack, "cavity3d": _run_cavity, "vacuum": _run_vacuum}


def run_experiment(cfg: ExperimentConfig, out_root=None) -> RunManifest:
    out = resolve_out_root(cfg, out_root)
    out.mkdir(parents=True, exist_ok=True)
    np.random.seed(cfg.seed)
    start = time.perf_counter()
    chk = _Checks()
    try:
        arts = _PIPELINES[cfg.kind](cfg, out, chk)
    except Exception as exc:
        raise RuntimeError(f"{cfg.kind} run {cfg.name!r} failed: {exc}") from exc
    man = RunManifest(asdict(cfg), chk.rows, sorted(Path(a).name for a in arts), round(time.perf_counter() - start, 3), cfg.seed)
    man.to_json(out / "manifest.json")
    for c in man.checks:
        log.info("%-32s %s", c["name"], c["status"])
    return man


# ------------------------------------------------------------ plot data

def _write_rows(path: Path, header, rows) -> Path:
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return path


def emit_plot_data(manifest_path) -> list:
    """Plot-ready tables next to the manifest: profiles at t = 1, residual log-log, energy vs t."""
    manifest_path = Path(manifest_path)
    man = RunManifest.load(manifest_path)
    if not man.artifacts or not man.checks:
        raise ConfigError("manifest lists no artifacts")
    base = manifest_path.parent
    missing = [a for a in man.artifacts if not (base / a).exists()]
    if missing:
        raise FileNotFoundError(f"missing artifacts: {missing}")
    cfg = ExperimentConfig(**{k: (tuple(v) if k == "scales" else v) for k, v in man.config.items()})
    cfg.tests = [tuple(t) for t in cfg.tests]
    outs = []
    ts = (0.5, 1.0, 1.5, 2.0)
    p = cfg.params
    if cfg.kind == "crack1d":
        fan = crack1d.solve_fan(make_stress_law(cfg.label), float(p["lam"]), float(p["alpha"]))
        x = np.linspace(-2 * fan.sigma, 2 * fan.sigma, 401)
        x = np.sort(np.concatenate([x, [-1e-12, 1e-12]]))
        outs.append(_write_rows(base / "plot_profile_t1.csv", ["x", "y"], zip(x, crack1d.motion(fan, x, 1.0))))
        mu_m, mu_p = crack1d.dissipation_rates(fan)
        rate = mu_m + mu_p + crack1d.cavity_cost_limit(fan)
        outs.append(_write_rows(base / "plot_energy_vs_t.csv", ["t", "energy_change"], [(t, rate * t) for t in ts]))
    elif cfg.kind == "cavity3d":
        audit = json.loads((base / "energy_audit.json").read_text())
        with (base / "profile.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        sg, lam = float(audit["sigma"]), float(audit["lam"])
        R = np.linspace(0.0, 2.0 * sg, 401)
        s = np.array([float(r["s"]) for r in rows])
        r = np.array([float(r["r"]) for r in rows])
        w = np.where(R < sg, np.interp(R, s, r), lam * R)
        outs.append(_write_rows(base / "plot_profile_t1.csv", ["R", "w"], zip(R, w)))
        k = audit["t"] ** 3
        shock, cavity = audit["shock_term"], audit["cavity_term"]
        cav_val = float(cavity) if isinstance(cavity, (int, float)) else math.inf
        rows = [(t, (shock + cav_val) * t**3 / k) for t in ts]
        outs.append(_write_rows(base / "plot_energy_vs_t.csv", ["t", "fan_energy"], rows))
    else:
        fan = vacuum1d.make_vacuum_fan(float(p["u_bar"]), float(p["v_bar"]), float(p["gamma"]))
        xi = np.linspace(-2.0, 2.0, 401)
        outs.append(_write_rows(base / "plot_profile_t1.csv", ["x", "r"], zip(xi, vacuum1d.displacement_profile(fan, xi))))
        e = json.loads((base / "energy.json").read_text())
        outs.append(_write_rows(base / "plot_energy_vs_t.csv", ["t", "energy"], [(t, float(e["closed"]) * t) for t in ts]))
    for a in man.artifacts:
        if a.startswith("residual_") and a.endswith(".csv"):
            with (base / a).open() as fh:
                rows = [(int(r["n"]), abs(float(r["residual"]))) for r in csv.DictReader(fh)]
            outs.append(_write_rows(base / ("plot_loglog_" + a[len("residual_"):]), ["n", "abs_residual"], rows))
    return outs


# ------------------------------------------------------------ entry point

def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="slicfan")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", help=f"output root (default ${OUT_ENV} or ./slicfan_out)")
    pl = sub.add_parser("plotdata", help="write plot-ready tables for a finished run")
    pl.add_argument("manifest")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.cmd == "run":
            man = run_experiment(ExperimentConfig.from_ini(args.config), args.out)
            for c in man.checks:
                print(f"{c['status'].upper():8s} {c['name']}")
            return 0 if man.ok else 1
        for path in emit_plot_data(args.manifest):
            print(path)
        return 0
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
