"""Batch front-end: JSON scenario configs in, CSV/JSON artifacts out.

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 estimation-window failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import asymptotics, dynamics, estimation, exactbath
from .bath import NOISE_KEYS, SPECTRAL_KEYS, noise_from_config, spectral_from_config
from .control import build_nv_plan, sequence_from_config
from .quadrature import DEFAULT_TOL, QuadratureError, Tolerance

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_WINDOW = 0, 2, 3, 4
FMT = "%.11e"
TRACE_COLUMNS = ("t_f", "zeta", "phi_q", "phi_ext", "re_coh", "im_coh", "n_meas")


class ConfigError(Exception):
    pass


# ---- config plumbing ---------------------------------------------------------

def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return cfg


def check_keys(block, allowed, where: str, required=()):
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(block) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {unknown}")
    missing = [k for k in required if k not in block]
    if missing:
        raise ConfigError(f"{where}: missing key(s) {missing}")


def _guard(where, fn, *args):
    try:
        return fn(*args)
    except (KeyError, ValueError, TypeError) as exc:
        msg = exc.args[0] if exc.args else exc
        raise ConfigError(f"{where}: {msg}") from exc


def make_grid(block) -> np.ndarray:
    check_keys(block, {"t_f_min", "t_f_max", "points", "spacing"}, "grid",
               ("t_f_min", "t_f_max", "points"))
    n = int(block["points"])
    lo, hi = float(block["t_f_min"]), float(block["t_f_max"])
    spacing = block.get("spacing", "log")
    if n < 1:
        raise ConfigError("grid: empty grid (points must be >= 1)")
    if not 0 < lo <= hi:
        raise ConfigError("grid: need 0 < t_f_min <= t_f_max")
    if spacing == "log":
        return np.geomspace(lo, hi, n)
    if spacing == "linear":
        return np.linspace(lo, hi, n)
    raise ConfigError(f"grid: spacing must be 'linear' or 'log', got {spacing!r}")


def make_tol(rel: float | None) -> Tolerance:
    if rel is None:
        return DEFAULT_TOL
    if not rel > 0:
        raise ConfigError("--tol must be positive")
    return Tolerance(abstol=min(DEFAULT_TOL.abstol, 1e-2 * rel), reltol=rel)


def make_schedule(block):
    """(beta_V, quench fractions or None) from a schedule block."""
    block = block or {}
    check_keys(block, {"beta_V", "initial_state", "segments"}, "schedule")
    beta = float(block.get("beta_V", 0.5))
    state = block.get("initial_state", "down")
    if state not in ("down", "up"):
        raise ConfigError("schedule.initial_state must be 'down' or 'up'")
    if state == "up":
        beta = -beta
    segs = block.get("segments")
    if segs is not None:
        try:
            segs = tuple((float(a), float(b), int(l)) for a, b, l in segs)
        except (TypeError, ValueError) as exc:
            raise ConfigError("schedule.segments: expected [[start, stop, level], ...]") from exc
    return beta, segs


def write_csv(path, header, rows):
    out = sys.stdout if path is None else open(path, "w", newline="")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([FMT % v if isinstance(v, (float, np.floating)) else v for v in row])
    finally:
        if out is not sys.stdout:
            out.close()


def write_json(path, obj):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path is None:
        print(text)
    else:
        Path(path).write_text(text + "\n")


def _sidecar(path) -> Path | None:
    return None if path is None else Path(path).with_suffix(".laws.json")


# ---- trace -------------------------------------------------------------------

TRACE_KEYS = {"bath", "noise", "sequence", "schedule", "field", "grid", "sweep", "finite_bath"}


def _finite_bath(block):
    check_keys(block, {"model", "Omega", "g", "kT", "n_max", "r", "file"}, "finite_bath", ("model",))
    kind = block["model"]
    p = {k: block[k] for k in ("Omega", "g", "kT") if k in block}
    if kind == "boson":
        return _guard("finite_bath", lambda: exactbath.single_boson_bath(
            float(p["Omega"]), float(p["g"]), float(p["kT"]), int(block.get("n_max", 30))))
    if kind == "squeezed":
        return _guard("finite_bath", lambda: exactbath.build_squeezed_thermal(
            float(p["Omega"]), float(p["g"]), float(block.get("r", 0.0)), float(p["kT"]),
            int(block.get("n_max", 30))))
    if kind == "spin":
        return _guard("finite_bath", lambda: exactbath.spin_bath(
            float(p["Omega"]), float(p["g"]), float(p["kT"])))
    if kind == "file":
        return _guard("finite_bath", exactbath.bath_from_json, block["file"])
    raise ConfigError(f"finite_bath.model: unknown model {kind!r}")


def _gaussian_reference(block, seq, beta_V):
    kind = block["model"]
    if kind not in ("boson", "spin") or float(block.get("r", 0.0)) != 0.0:
        return math.nan, math.nan
    Om, g, kT = float(block["Omega"]), float(block["g"]), float(block["kT"])
    x = Om / (2 * kT)
    if kind == "boson":
        ws, wj = g * g / math.tanh(x), g * g
    else:
        ws, wj = g * g, g * g * math.tanh(x)
    return exactbath.gaussian_single_mode(seq, Om, ws, wj, beta_V)


def _trace_rows(points):
    for p in points:
        c = p.coherence
        yield (p.t_f, p.zeta, p.phi_q, p.phi_ext, c.real, c.imag, p.n_meas)


def _laws(cfg_bath, seq, model, noise, beta_V):
    out = {}
    try:
        law = asymptotics.qps_law(seq, model, beta_V)
        out["qps"] = {"exponent": law.exponent, "coefficient": law.coefficient,
                      "amplitude": law.amplitude, "form": "coefficient * amplitude * t_f^(1-s)"}
    except (ValueError, AttributeError) as exc:
        out["qps"] = {"unavailable": str(exc)}
    if getattr(model, "s", None) == 1:
        try:
            out["plateau"] = asymptotics.ohmic_plateau(model, seq.F0, beta_V)
        except (ValueError, QuadratureError) as exc:
            out["plateau"] = {"unavailable": str(exc)}
    if noise is not None:
        try:
            if hasattr(noise, "kT"):
                S0 = 2 * model.A0 * noise.kT
            else:
                S0 = noise.S0
            law = asymptotics.dephasing_law(seq, noise.exponent, S0)
            out["dephasing"] = {"exponent": law.exponent, "coefficient": law.coefficient,
                                "amplitude": law.amplitude,
                                "form": "coefficient * amplitude * t_f^(1-p)"}
        except (ValueError, AttributeError) as exc:
            out["dephasing"] = {"unavailable": str(exc)}
    return out


def _field(value):
    if value is None:
        return None
    if isinstance(value, (int, float)):
        return float(value)
    raise ConfigError("field: only a static field value is supported in configs")


def _build_gaussian(cfg):
    if "bath" not in cfg:
        raise ConfigError("missing key 'bath'")
    check_keys(cfg["bath"], SPECTRAL_KEYS | {"components"}, "bath")
    model = _guard("bath", spectral_from_config, cfg["bath"])
    noise_cfg = cfg.get("noise")
    noise = None
    if noise_cfg is not None:
        check_keys(noise_cfg, NOISE_KEYS, "noise")
        if "kT" in noise_cfg and set(noise_cfg) == {"kT"}:
            noise = _guard("noise", noise_from_config, noise_cfg, model)
        else:
            noise = _guard("noise", noise_from_config, noise_cfg)
    return model, noise


def _sweep(cfg):
    sweep = cfg.get("sweep")
    if sweep is None:
        return [(None, cfg)]
    if not isinstance(sweep, dict) or len(sweep) != 1:
        raise ConfigError("sweep: expected a single {bath_key: [values]} entry")
    (key, values), = sweep.items()
    if key not in SPECTRAL_KEYS:
        raise ConfigError(f"sweep: {key!r} is not a bath key")
    runs = []
    for v in values:
        sub = dict(cfg)
        sub.pop("sweep")
        sub["bath"] = {**cfg["bath"], key: v}
        runs.append((f"{key}{v}", sub))
    return runs


def _swept_path(out, tag):
    if tag is None or out is None:
        return out
    p = Path(out)
    return p.with_name(f"{p.stem}_{tag}{p.suffix or '.csv'}")


def cmd_trace(cfg, args):
    check_keys(cfg, TRACE_KEYS, "config")
    grid = make_grid(cfg.get("grid", {}))
    tol = make_tol(args.tol)
    seq = _guard("sequence", sequence_from_config, cfg.get("sequence", "hahn"))
    beta, quench = make_schedule(cfg.get("schedule"))
    field = _field(cfg.get("field"))
    if args.oracle:
        if "finite_bath" not in cfg:
            raise ConfigError("--oracle needs a finite_bath block")
        bath = _finite_bath(cfg["finite_bath"])
        pts = []
        for t in grid:
            s = seq.with_time(float(t))
            z, ph = exactbath.zeta_phi(exactbath.exact_coherence(bath, s))
            pts.append(dynamics.TracePoint(s.t_f, z, ph, dynamics.external_phase(s, field)))
        write_csv(args.out, TRACE_COLUMNS, _trace_rows(pts))
        return
    for tag, sub in _sweep(cfg):
        model, noise = _build_gaussian(sub)
        pts = dynamics.compute_trace(seq, grid, noise, model, beta, field, tol, args.jobs, quench)
        path = _swept_path(args.out, tag)
        write_csv(path, TRACE_COLUMNS, _trace_rows(pts))
        laws = _laws(sub["bath"], seq, model, noise, beta)
        side = _sidecar(path)
        if side is not None:
            write_json(side, laws)


# ---- thermometry ---------------------------------------------------------------

def read_trace(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"{path}: empty trace")
    missing = {"t_f", "zeta", "phi_q"} - set(rows[0])
    if missing:
        raise ConfigError(f"{path}: missing column(s) {sorted(missing)}")
    return {k: np.array([float(r[k]) for r in rows]) for k in ("t_f", "zeta", "phi_q")}


def cmd_thermometry(cfg_path, args):
    if str(cfg_path).endswith(".csv"):
        tr = read_trace(cfg_path)
        zt, pt = 0.05, 0.02
    else:
        cfg = load_config(cfg_path)
        est = cfg.pop("estimation", {})
        check_keys(est, {"zeta_slope_tol", "phi_slope_tol"}, "estimation")
        zt, pt = float(est.get("zeta_slope_tol", 0.05)), float(est.get("phi_slope_tol", 0.02))
        check_keys(cfg, TRACE_KEYS - {"sweep", "finite_bath"}, "config")
        grid = make_grid(cfg.get("grid", {}))
        seq = _guard("sequence", sequence_from_config, cfg.get("sequence", "hahn"))
        beta, quench = make_schedule(cfg.get("schedule"))
        model, noise = _build_gaussian(cfg)
        if noise is None:
            raise ConfigError("thermometry needs a noise block")
        pts = dynamics.compute_trace(seq, grid, noise, model, beta, None, make_tol(args.tol),
                                     args.jobs, quench)
        tr = {"t_f": np.array([p.t_f for p in pts]), "zeta": np.array([p.zeta for p in pts]),
              "phi_q": np.array([p.phi_q for p in pts])}
    res = estimation.thermometry_from_trace(tr["t_f"], tr["zeta"], tr["phi_q"], zt, pt)
    write_json(args.out, {"kT": res.kT, "T2": res.T2, "phi_inf": res.phi_infinity,
                          "diagnostics": res.diagnostics})


# ---- reconstruct ---------------------------------------------------------------

def cmd_reconstruct(cfg, args):
    check_keys(cfg, {"measurements", "benchmark", "harmonics", "ridge", "omega_max", "truth"},
               "manifest")
    harmonics = tuple(int(h) for h in cfg.get("harmonics", (1, 3, 5)))
    ridge = float(cfg.get("ridge", 0.0))
    truth = None
    if "truth" in cfg:
        truth = _guard("truth", spectral_from_config, cfg["truth"])
    if "benchmark" in cfg:
        b = cfg["benchmark"]
        check_keys(b, {"bath", "delta", "count", "M", "beta_V"}, "benchmark", ("bath", "delta"))
        model = _guard("benchmark.bath", spectral_from_config, b["bath"])
        truth = truth or model
        plans = estimation.uniform_comb_plans(float(b["delta"]), int(b.get("count", 8)),
                                              int(b.get("M", 64)), float(b.get("beta_V", 0.5)))
        tol = estimation.COMB_TOL if args.tol is None else Tolerance(
            abstol=min(1e-10, 1e-2 * args.tol), reltol=args.tol, cap_factor=2 * np.pi)
        phis = estimation.forward_phases(plans, model, tol, args.jobs)
        meas = list(zip(plans, phis))
    elif "measurements" in cfg:
        meas = []
        for i, m in enumerate(cfg["measurements"]):
            check_keys(m, {"M", "T", "beta_V", "phi_q"}, f"measurements[{i}]", ("M", "T", "phi_q"))
            plan = _guard(f"measurements[{i}]", build_nv_plan, int(m["M"]), float(m["T"]),
                          float(m.get("beta_V", 0.5)))
            meas.append((plan, float(m["phi_q"])))
    else:
        raise ConfigError("manifest needs 'measurements' or 'benchmark'")
    om = cfg.get("omega_max")
    rec = estimation.reconstruct_spectral_function(meas, harmonics, ridge,
                                                   None if om is None else float(om))
    J_true = truth.J(rec.omega) if truth is not None else None
    header = ("omega", "J_hat", "J_true", "residual") if truth is not None else (
        "omega", "J_hat", "residual")
    rows = []
    for j, w in enumerate(rec.omega):
        if J_true is not None:
            rows.append((w, rec.J_hat[j], float(J_true[j]), rec.residual[j]))
        else:
            rows.append((w, rec.J_hat[j], rec.residual[j]))
    write_csv(args.out, header, rows)


# ---- oracle --------------------------------------------------------------------

ORACLE_COLUMNS = ("t_f", "zeta_exact", "phi_exact", "zeta_gauss", "phi_gauss",
                  "abs_dzeta", "abs_dphi")


def cmd_oracle(cfg, args):
    check_keys(cfg, {"finite_bath", "sequence", "grid"}, "config", ("finite_bath",))
    grid = make_grid(cfg.get("grid", {}))
    seq = _guard("sequence", sequence_from_config, cfg.get("sequence", "hahn"))
    bath = _finite_bath(cfg["finite_bath"])
    rows = []
    for t in grid:
        s = seq.with_time(float(t))
        ze, pe = exactbath.zeta_phi(exactbath.exact_coherence(bath, s))
        zg, pg = _gaussian_reference(cfg["finite_bath"], s, 0.5)
        rows.append((s.t_f, ze, pe, zg, pg, abs(ze - zg), abs(pe - pg)))
    write_csv(args.out, ORACLE_COLUMNS, rows)
    dz = max(r[5] for r in rows)
    dp = max(r[6] for r in rows)
    print(json.dumps({"max_abs_dzeta": dz, "max_abs_dphi": dp}), file=sys.stderr)


# ---- coeffs / nmeas --------------------------------------------------------------

def cmd_coeffs(cfg, args):
    check_keys(cfg, {"p_grid", "s_grid", "sequence"}, "config")
    seq = _guard("sequence", sequence_from_config, cfg.get("sequence", "hahn"))
    rows = asymptotics.coefficient_table(cfg.get("p_grid", []), cfg.get("s_grid", []), seq)
    write_csv(args.out, ("kind", "exponent", "coefficient"), rows)


def cmd_nmeas(cfg, args):
    check_keys(cfg, TRACE_KEYS - {"sweep", "finite_bath"}, "config")
    grid = make_grid(cfg.get("grid", {}))
    seq = _guard("sequence", sequence_from_config, cfg.get("sequence", "hahn"))
    beta, quench = make_schedule(cfg.get("schedule"))
    model, noise = _build_gaussian(cfg)
    pts = dynamics.compute_trace(seq, grid, noise, model, beta, _field(cfg.get("field")),
                                 make_tol(args.tol), args.jobs, quench)
    rows = []
    for p in pts:
        phi = p.phi_q + p.phi_ext
        n = p.n_meas
        check = n * math.exp(-2 * p.zeta) * math.sin(phi) ** 2 if math.isfinite(n) else math.nan
        rows.append((p.t_f, p.zeta, phi, dynamics.sigma_y(p.zeta, phi), n, check))
    write_csv(args.out, ("t_f", "zeta", "phi", "sigma_y", "n_meas", "identity"), rows)


# ---- entry point -----------------------------------------------------------------

COMMANDS = {
    "trace": cmd_trace,
    "reconstruct": cmd_reconstruct,
    "oracle": cmd_oracle,
    "coeffs": cmd_coeffs,
    "nmeas": cmd_nmeas,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON scenario (thermometry also takes a trace CSV)")
    common.add_argument("--out", default=None, help="output path (stdout when omitted)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for grid points")
    common.add_argument("--tol", type=float, default=None, help="relative quadrature tolerance")
    common.add_argument("--oracle", action="store_true",
                        help="route the scenario through the exact finite-bath engine")
    parser = argparse.ArgumentParser(prog="quenchqns", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("trace", "thermometry", "reconstruct", "oracle", "coeffs", "nmeas"):
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        if args.command == "thermometry":
            cmd_thermometry(args.config, args)
        else:
            COMMANDS[args.command](load_config(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except estimation.EstimationWindowError as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return EXIT_WINDOW
    except (QuadratureError, ValueError, ArithmeticError, RuntimeError, KeyError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
