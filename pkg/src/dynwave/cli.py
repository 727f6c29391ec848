"""Configuration handling, Table-driven presets and the batch driver.

Configs are JSON. A run writes three artifacts into the output directory:
trajectory.csv (t plus one column per node), functionals.csv and report.json.
Floats in the CSVs carry 17 significant digits so downstream consumers can
reproduce fits bit for bit.
"""
from __future__ import annotations

import argparse
import json
import os
import sys as _sys
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import discretize, integrate, lyapunov, model, wellposed

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_CERTIFICATION = 4


class ConfigError(ValueError):
    pass


_PHYS_KEYS = ("a", "q", "f", "beta1", "mu1", "q1", "gamma1", "f1", "f2")
_CTRL_KEYS = ("kp", "alpha2", "v1_ref")
_TOP_KEYS = set(_PHYS_KEYS) | set(_CTRL_KEYS) | {
    "preset", "variant", "N", "dt", "T", "sample_stride", "initial",
    "outputs", "seed",
}
_INITIAL_KEYS = {"u", "udot", "udot_at_1"}

# Table 1 damping sets (1, 2, 3) and Table 2 gain sets (a, b, c)
_DAMPING_SETS = {
    "1": dict(q=0.0, q1=0.0, gamma1=0.0),
    "2": dict(q=0.001, q1=0.001, gamma1=0.001),
    "3": dict(q=0.005, q1=0.005, gamma1=0.005),
}
_GAIN_SETS = {
    "a": dict(kp=0.0, alpha2=0.0, v1_ref=0.0),
    "b": dict(kp=10.0, alpha2=100.0, v1_ref=0.5),
    "c": dict(kp=1000.0, alpha2=10.0, v1_ref=0.5),
}


@dataclass
class RunConfig:
    name: str = "custom"
    variant: str = "w2w1"
    N: int = 199
    a: object = 1.0
    q: object = 0.0
    f: object = 0.0
    beta1: float = 20.0
    mu1: float = 20.0
    q1: float = 0.0
    gamma1: float = 0.0
    f1: float = 0.0
    f2: float = 0.0
    kp: float = 0.0
    alpha2: float = 0.0
    v1_ref: float = 0.0
    dt: object = "auto"
    T: float = 50.0
    sample_stride: int = 10
    initial: dict = field(default_factory=lambda: {"u": 0.0, "udot": 0.0, "udot_at_1": 1.0})
    outputs: str = "out"
    seed: int = 0

    def physical(self) -> model.PhysicalParams:
        return model.PhysicalParams.from_samples(
            self.N + 1, a=self.a, q=self.q, f=self.f, beta1=self.beta1,
            mu1=self.mu1, q1=self.q1, gamma1=self.gamma1, f1=self.f1, f2=self.f2)

    def control(self) -> model.ControlParams:
        return model.ControlParams(kp=self.kp, alpha2=self.alpha2, v1_ref=self.v1_ref)

    def boundary_variant(self) -> model.BoundaryVariant:
        return model.BoundaryVariant(self.variant, alpha1=self.kp + self.q1,
                                     alpha2=self.alpha2)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("a", "q", "f"):
            if isinstance(d[key], np.ndarray):
                d[key] = d[key].tolist()
        return d


def preset_config(name: str) -> RunConfig:
    if len(name) != 2 or name[0] not in _DAMPING_SETS or name[1] not in _GAIN_SETS:
        raise ConfigError(f"unknown preset {name!r} (expected one of 1a..3c)")
    cfg = RunConfig(name=name)
    for k, v in _DAMPING_SETS[name[0]].items():
        setattr(cfg, k, v)
    for k, v in _GAIN_SETS[name[1]].items():
        setattr(cfg, k, v)
    cfg.T = 50.0 if name[1] == "a" else 200.0
    return cfg


def presets() -> list:
    return [preset_config(f"{i}{g}") for i in "123" for g in "abc"]


def _type_check(path: str, value, kinds) -> None:
    if not isinstance(value, kinds) or isinstance(value, bool):
        names = kinds if isinstance(kinds, tuple) else (kinds,)
        raise ConfigError(f"{path}: expected {'/'.join(k.__name__ for k in names)}, "
                          f"got {type(value).__name__}")


def config_from_dict(doc: dict, name: str = "custom") -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("top level: expected an object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(sorted(unknown))}")
    cfg = preset_config(doc["preset"]) if "preset" in doc else RunConfig(name=name)
    if "preset" not in doc:
        cfg.name = name
    for key in _PHYS_KEYS + _CTRL_KEYS:
        if key in doc:
            val = doc[key]
            if key in ("a", "q", "f"):
                _type_check(key, val, (int, float, list))
            else:
                _type_check(key, val, (int, float))
            setattr(cfg, key, val)
    if "variant" in doc:
        _type_check("variant", doc["variant"], str)
        cfg.variant = doc["variant"]
    for key in ("N", "sample_stride", "seed"):
        if key in doc:
            _type_check(key, doc[key], int)
            setattr(cfg, key, doc[key])
    if "T" in doc:
        _type_check("T", doc["T"], (int, float))
        cfg.T = float(doc["T"])
    if "dt" in doc:
        if doc["dt"] != "auto":
            _type_check("dt", doc["dt"], (int, float))
        cfg.dt = doc["dt"]
    if "initial" in doc:
        _type_check("initial", doc["initial"], dict)
        unknown = set(doc["initial"]) - _INITIAL_KEYS
        if unknown:
            raise ConfigError(f"initial: unknown keys {', '.join(sorted(unknown))}")
        cfg.initial = {**cfg.initial, **doc["initial"]}
    if "outputs" in doc:
        _type_check("outputs", doc["outputs"], str)
        cfg.outputs = doc["outputs"]
    try:
        cfg.physical().validate()
        cfg.control().validate(cfg.q1)
        cfg.boundary_variant()
    except model.ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.N < 2:
        raise ConfigError("N: need at least 2 intervals")
    if cfg.T <= 0.0:
        raise ConfigError("T: must be positive")
    if cfg.sample_stride < 1:
        raise ConfigError("sample_stride: must be >= 1")
    if cfg.dt != "auto" and float(cfg.dt) <= 0.0:
        raise ConfigError("dt: must be positive or 'auto'")
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    name = os.path.splitext(os.path.basename(str(path)))[0]
    return config_from_dict(doc, name=name)


def _initial_state(cfg: RunConfig, n_nodes: int) -> integrate.SimState:
    def expand(value):
        arr = np.asarray(value, dtype=float)
        if arr.ndim == 0:
            return np.full(n_nodes, float(arr))
        if arr.shape != (n_nodes,):
            raise ConfigError(f"initial: expected {n_nodes} nodal values")
        return arr.copy()

    u = expand(cfg.initial.get("u", 0.0))
    udot = expand(cfg.initial.get("udot", 0.0))
    if cfg.initial.get("udot_at_1") is not None:
        udot[-1] = float(cfg.initial["udot_at_1"])
    return integrate.SimState(u=u, udot=udot)


def resolve_dt(cfg: RunConfig, sys: discretize.DiscreteSystem) -> float:
    if cfg.dt == "auto":
        return integrate.default_dt(sys)
    return float(cfg.dt)


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _write_trajectory(path, traj: integrate.Trajectory, grid, displacements: bool) -> None:
    data = traj.u_samples if displacements else traj.udot_samples
    with open(path, "w", newline="") as fh:
        fh.write("t," + ",".join(f"node_{i}" for i in range(grid.n + 1)) + "\n")
        for k in range(traj.times.size):
            fh.write(_fmt(traj.times[k]) + "," + ",".join(_fmt(v) for v in data[k]) + "\n")


def _write_functionals(path, rows) -> None:
    header = "t,E_u,F,W,V,Gamma,sup_dev,y,U,eta"
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def shifted_trajectory(cfg: RunConfig, grid, params, traj: integrate.Trajectory):
    """Map the recorded physical-coordinate samples to the autonomous
    (stabilization) coordinates and return (u, udot, eta2, u_star)."""
    ctrl = cfg.control()
    profile = model._static_shift_profile(params, ctrl, grid)
    u = traj.u_samples - traj.times[:, None] * ctrl.v1_ref + profile[None, :]
    udot = traj.udot_samples - ctrl.v1_ref
    shift = model._eta2_shift(params, ctrl, grid) if ctrl.alpha2 > 0.0 else 0.0
    eta2 = traj.eta_series - shift
    ustar = model.u_star(u[0, -1], eta2[0])
    return u, udot, eta2, ustar


def functional_rows(cfg: RunConfig, grid, params, variant, traj, ell: float):
    u, udot, eta2, ustar = shifted_trajectory(cfg, grid, params, traj)
    rows = []
    for k in range(traj.times.size):
        s = lyapunov.functional_sample(traj.times[k], u[k], udot[k], grid,
                                       params, variant, ell, ustar)
        rows.append((s.t, s.E_u, s.F, s.W, s.V, s.Gamma, s.sup_dev,
                     traj.y_series[k], traj.U_series[k], traj.eta_series[k]))
    return rows, (u, udot, eta2, ustar)


def residual_force(cfg: RunConfig, grid, params, sys_d) -> np.ndarray:
    """Constant force left over in the autonomous coordinates after the
    setpoint/source change of variables (zero in the continuum, O(dx) and
    scheme-factor sized here). Drives the attractor offset z_eq."""
    ctrl = cfg.control()
    profile = model._static_shift_profile(params, ctrl, grid)
    shift = model._eta2_shift(params, ctrl, grid) if ctrl.alpha2 > 0.0 else 0.0
    return sys_d.K @ profile - ctrl.v1_ref * sys_d.R \
        - ctrl.alpha2 * shift * sys_d.b + sys_d.f_d


def run(cfg: RunConfig, certify: bool = False, resolvent_check: bool = False,
        out_dir=None, displacements: bool = False) -> dict:
    t_wall = time.perf_counter()
    grid = discretize.build_grid(cfg.N)
    params = cfg.physical()
    variant = cfg.boundary_variant()
    sys_d = discretize.build_system(grid, params, variant)
    if sys_d.offset != 0:
        raise ConfigError("the run driver supports the dynamic-boundary variants only")
    dt = resolve_dt(cfg, sys_d)
    ctrl = None
    if cfg.kp != 0.0 or cfg.alpha2 != 0.0:
        ctrl = integrate.PIController(kp=cfg.kp, ki=cfg.alpha2, y_ref=cfg.v1_ref)
    ic = _initial_state(cfg, grid.n + 1)
    traj = integrate.simulate(sys_d, ctrl, ic, dt, cfg.T, cfg.sample_stride)

    ell = lyapunov.choose_ell(params, variant) if params.q_lower > 0.0 else 0.0
    rows, (u, udot, eta2, ustar) = functional_rows(cfg, grid, params, variant, traj, ell)

    out = out_dir if out_dir is not None else cfg.outputs
    os.makedirs(out, exist_ok=True)
    _write_trajectory(os.path.join(out, "trajectory.csv"), traj, grid, displacements)
    _write_functionals(os.path.join(out, "functionals.csv"), rows)

    cons = u[:, -1] - eta2
    cons_scale = max(abs(cons[0]), 1.0)
    report = {
        "config": cfg.to_dict(),
        "dt": dt,
        "ell": ell,
        "u_star": ustar,
        "final_y": float(traj.y_series[-1]),
        "final_y_error": abs(float(traj.y_series[-1]) - cfg.v1_ref),
        "conservation_residual": float(np.max(np.abs(cons - cons[0])) / cons_scale),
    }
    gammas = np.array([r[5] for r in rows])
    # drift of the scheme's own Hamiltonian (the symplectically conserved
    # quantity), evaluated on the recorded physical-coordinate samples
    h = 0.5 * np.einsum("ki,i,ki->k", traj.udot_samples, sys_d.E, traj.udot_samples) \
        + 0.5 * np.einsum("ki,ij,kj->k", traj.u_samples, sys_d.K, traj.u_samples)
    h0 = h[0] if h[0] > 0.0 else 1.0
    report["energy_drift"] = float(np.max(np.abs(h - h[0])) / h0)
    span = traj.times[-1] - traj.times[0]
    report["energy_slope"] = float(np.polyfit(traj.times, h, 1)[0] / h0) if span > 0 else 0.0
    if ctrl is not None and params.q_lower > 0.0:
        t_env, g_env = lyapunov.envelope(traj.times, gammas)
        try:
            fit = lyapunov.fit_decay(t_env, g_env)
            report["decay_fit"] = asdict(fit)
        except ValueError as exc:
            report["decay_fit"] = {"error": str(exc)}
    if certify:
        params.validate(require_damping=variant.dynamic_at_zero)
        cert = lyapunov.certify(sys_d, lyapunov.choose_ell(params, variant))
        report["certification"] = asdict(cert)
    if resolvent_check:
        rng = np.random.default_rng(cfg.seed)
        y = wellposed.GeneratorInput(
            y1=np.sin(np.pi * grid.x), y2=np.cos(np.pi * grid.x),
            y3=rng.standard_normal(), y4=rng.standard_normal(),
            y5=rng.standard_normal())
        z = wellposed.resolvent_solve(y, params, grid)
        pairing, ref = wellposed.monotonicity_pairing(z, params, grid)
        report["resolvent"] = {
            "fixed_point_residual": wellposed.fixed_point_residual(z, y, params, grid),
            "pairing": pairing,
            "pairing_reference": ref,
        }
    report["wall_seconds"] = time.perf_counter() - t_wall
    with open(os.path.join(out, "report.json"), "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return report


def _cmd_run(args) -> int:
    if os.path.exists(args.config):
        cfg = load_config(args.config)
    else:
        cfg = preset_config(args.config)
    try:
        report = run(cfg, certify=args.certify, resolvent_check=args.resolvent_check,
                     out_dir=args.out, displacements=args.displacements)
    except integrate.DivergenceError as exc:
        print(f"error: {exc} (last valid t = {exc.t_last:.6g})", file=_sys.stderr)
        return EXIT_DIVERGED
    print(f"run {cfg.name}: final y = {report['final_y']:.6g}, "
          f"conservation residual = {report['conservation_residual']:.3g}")
    if "decay_fit" in report and "rho" in report.get("decay_fit", {}):
        fit = report["decay_fit"]
        print(f"  decay: rho = {fit['rho']:.6g}, r^2 = {fit['r_squared']:.4f}")
    if args.certify:
        cert = report["certification"]
        print(f"  certification: c = {cert['c']:.6g}, C = {cert['C']:.6g}, "
              f"rho_formal = {cert['rho_formal']:.6g}")
        if cert["c"] <= 0.0 or not cert["rho_formal"] > 0.0:
            return EXIT_CERTIFICATION
    return EXIT_OK


def _cmd_presets(_args) -> int:
    for cfg in presets():
        print(f"{cfg.name}: q = {cfg.q}, q1 = {cfg.q1}, gamma1 = {cfg.gamma1}, "
              f"kp = {cfg.kp}, alpha2 = {cfg.alpha2}, v1_ref = {cfg.v1_ref}, "
              f"N = {cfg.N}, T = {cfg.T}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config) if os.path.exists(args.config) else preset_config(args.config)
    try:
        lo, hi, count = args.ell.split(":")
        ells = np.linspace(float(lo), float(hi), int(count))
    except ValueError:
        print("error: --ell expects start:stop:count", file=_sys.stderr)
        return EXIT_CONFIG
    grid = discretize.build_grid(cfg.N)
    params = cfg.physical()
    variant = cfg.boundary_variant()
    params.validate(require_damping=variant.dynamic_at_zero)
    sys_d = discretize.build_system(grid, params, variant)
    print("ell,c,C,rho_formal")
    any_ok = False
    for ell in ells:
        cert = lyapunov.certify(sys_d, float(ell))
        any_ok = any_ok or (cert.c > 0.0 and cert.rho_formal > 0.0)
        print(f"{_fmt(ell)},{_fmt(cert.c)},{_fmt(cert.C)},{_fmt(cert.rho_formal)}")
    return EXIT_OK if any_ok else EXIT_CERTIFICATION


def _cmd_spectrum(args) -> int:
    cfg = load_config(args.config) if os.path.exists(args.config) else preset_config(args.config)
    grid = discretize.build_grid(cfg.N)
    sys_d = discretize.build_system(grid, cfg.physical(), cfg.boundary_variant())
    lam = integrate.spectrum(sys_d)
    print(f"{lam.size} eigenvalues, max |Re| = {np.max(np.abs(lam.real)):.3g}, "
          f"max |Im| = {np.max(np.abs(lam.imag)):.3g}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "spectrum.csv"), "w") as fh:
            fh.write("re,im\n")
            for v in lam:
                fh.write(f"{_fmt(v.real)},{_fmt(v.imag)}\n")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dynwave",
        description="Damped wave equation with dynamic boundary conditions: "
                    "simulation, PI boundary regulation and Lyapunov certification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a config file or preset name")
    p_run.add_argument("config", help="path to a JSON config, or a preset name (1a..3c)")
    p_run.add_argument("--certify", action="store_true")
    p_run.add_argument("--resolvent-check", action="store_true")
    p_run.add_argument("--out", default=os.environ.get("DYNWAVE_OUT"))
    p_run.add_argument("--displacements", action="store_true",
                       help="write displacements instead of velocities to trajectory.csv")
    p_run.set_defaults(func=_cmd_run)

    p_presets = sub.add_parser("presets", help="list the built-in presets")
    p_presets.set_defaults(func=_cmd_presets)

    p_sweep = sub.add_parser("sweep", help="certification sweep over ell")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--ell", required=True, help="start:stop:count")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_spec = sub.add_parser("spectrum", help="eigenvalues of the assembled system")
    p_spec.add_argument("config")
    p_spec.add_argument("--out", default=None)
    p_spec.set_defaults(func=_cmd_spectrum)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, model.ParameterError, discretize.GridError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    _sys.exit(main())
