"""Scenario runner: ``cal run | sweep | validate <config.json> [--out DIR]``.

Each scenario writes a trajectory (or path) CSV, a ``summary.json`` and a
``plot.py`` script that re-reads the CSV files. Exit status: 0 success,
2 configuration error, 3 unexpected numerical divergence, 4 file I/O failure.
"""

import argparse
import copy
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import dynamics as dyn
from .discrete import (
    DiscreteLagrangian,
    DiscretePath,
    action,
    action_gradient,
    discrete_el_march,
    discrete_el_residual,
    gradient_flow_minimize,
)
from .integrate import IntegrationError, IntegratorOptions, integrate
from .lagrangian import CaseIISpec, Const1, FirstOrderLagrangian, SecondOrderKinetic, SecondOrderSpec
from .potentials import ContractError, Quadratic, from_config
from .stability import classify, combine_verdicts, overall_verdict

log = logging.getLogger("cal")

SCENARIOS = (
    "oscillator",
    "gradient-flow-limit",
    "fourth-stab",
    "fourth-uns",
    "collapse-theta",
    "collapse-eps",
    "blowup-horizon",
    "discrete-el",
    "gradflow-vs-el",
    "stability-sweep",
)
EXPECTS_DIVERGENCE = {"fourth-uns", "blowup-horizon", "collapse-eps"}

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 2, 3, 4

_ADAPTIVE = {"method": "RK45Adaptive", "rtol": 1e-10, "atol": 1e-12, "output_step": 1e-3}
_FIXED = {"method": "RK4Fixed", "step": 1e-3}
DEFAULT_INTEGRATOR = {
    "oscillator": _FIXED,
    "gradient-flow-limit": _ADAPTIVE,
    "fourth-stab": _ADAPTIVE,
    "fourth-uns": _FIXED,
    "collapse-theta": _ADAPTIVE,
    "collapse-eps": _FIXED,
    "blowup-horizon": _FIXED,
}
DEFAULTS = {
    "potential": {"type": "quadratic", "stiffness": [[1.0]]},
    "m": 1.0,
    "theta": 0.3,
    "gamma": 1.0,
    "alpha1": 1.0,
    "alpha2": 1.0,
    "rho": 1.0,
    "nu": 1.0,
    "eps_dis": 0.1,
    "eps_grid": 0.1,
    "t_end": 10.0,
    "t_transient": 0.5,
    "seed": 0,
    "initial": {},
    "grids": {},
    "discrete": {},
}
SWEEP_KEYS = ("theta", "eps_dis", "m", "alpha1", "alpha2", "rho", "nu", "gamma", "t_end")


class ConfigError(ValueError):
    pass


class DivergenceExit(RuntimeError):
    pass


def _schema(name):
    return json.loads(resources.files("cal").joinpath("schemas", name).read_text())


# Configuration ---------------------------------------------------------------------

def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return cfg


def validate_config(cfg):
    """Schema check plus construction of every object the scenario needs."""
    try:
        jsonschema.validate(cfg, _schema("config.schema.json"))
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config invalid at {list(exc.absolute_path)}: {exc.message}") from exc
    full = _with_defaults(cfg)
    if cfg["scenario"] in ("gradient-flow-limit",) and not _grid(full, "m", [1e-1, 1e-2, 1e-3]):
        raise ConfigError("grid 'm' must be non-empty")
    try:
        pot = from_config(full["potential"])
        _check_initial(full, pot)
        _options(full)
        for law in _laws(full, pot):
            dyn.law_field(law, affine=False)
    except (ContractError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return full


def _with_defaults(cfg):
    full = copy.deepcopy(DEFAULTS)
    full.update(copy.deepcopy(cfg))
    return full


def _grid(cfg, key, default):
    grids = cfg.get("grids", {})
    if key in grids:
        return list(grids[key])
    if key in cfg.get("_scalar", ()):
        return [cfg[key]]
    return list(default)


def _options(cfg, **override):
    base = dict(DEFAULT_INTEGRATOR.get(cfg["scenario"], _FIXED))
    base.update(cfg.get("integrator", {}))
    base.update(override)
    if base.get("h_max") is None:
        base.pop("h_max", None)
    return IntegratorOptions(**base)


def _check_initial(cfg, pot):
    n = pot.dim
    for key in ("q0", "qdot0", "qddot0", "q30"):
        v = cfg["initial"].get(key)
        if v is not None and len(v) != n:
            raise ConfigError(f"initial.{key} must have length {n}")


def _initial(cfg, pot):
    init = cfg["initial"]
    n = pot.dim
    q0 = np.asarray(init.get("q0", np.ones(n)), dtype=np.float64)
    qdot0 = np.asarray(init.get("qdot0", np.zeros(n)), dtype=np.float64)
    return q0, qdot0


def _kinetic_spec(cfg, pot, theta=None):
    th = cfg["theta"] if theta is None else theta
    return SecondOrderSpec(SecondOrderKinetic(cfg["alpha1"], cfg["alpha2"], th), pot, cfg["gamma"])


def _case_ii(cfg, pot, eps=None):
    return CaseIISpec(cfg["rho"], cfg["nu"], cfg["eps_dis"] if eps is None else eps, pot, cfg["gamma"])


def _laws(cfg, pot):
    """Every law a scenario integrates (used for validation)."""
    sc = cfg["scenario"]
    if sc == "oscillator":
        return [dyn.DampedOscillator(cfg["m"], cfg["theta"], pot)]
    if sc == "gradient-flow-limit":
        return [dyn.GradientFlow(cfg["theta"], pot)] + [
            dyn.DampedOscillator(m, cfg["theta"], pot) for m in _grid(cfg, "m", [1e-1, 1e-2, 1e-3])]
    if sc in ("fourth-stab", "collapse-theta"):
        return [_kinetic_spec(cfg, pot, th) for th in _grid(cfg, "theta", [cfg["theta"]])]
    if sc in ("fourth-uns", "collapse-eps", "blowup-horizon"):
        return [_case_ii(cfg, pot, e) for e in _grid(cfg, "eps_dis", [cfg["eps_dis"]])]
    return []


# Output helpers ----------------------------------------------------------------------

def _finite(x):
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    if isinstance(x, np.ndarray):
        return _finite(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _fmt(v):
    return "%.17g" % v


def trajectory_csv(traj):
    n = traj.dim
    names = ["t"] + [f"{b}_{i}" for b in ("q", "qdot", "qddot", "q3") for i in range(n)]
    lines = [",".join(names)]
    blocks = np.hstack([traj.block(k) for k in range(4)])
    for t, row in zip(traj.times, blocks):
        lines.append(",".join([_fmt(t)] + [_fmt(v) for v in row]))
    return "\n".join(lines) + "\n"


def table_csv(header, rows):
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, (float, int, np.floating)) and not isinstance(v, bool)
                              else str(v) for v in r))
    return "\n".join(lines) + "\n"


def _plot_script(csv_names, title):
    names = ", ".join(repr(c) for c in csv_names)
    return f'''"""Plot {title}. Run from this directory: python plot.py"""
import csv

import matplotlib.pyplot as plt

for name in [{names}]:
    with open(name) as fh:
        rows = list(csv.DictReader(fh))
    cols = [c for c in rows[0] if c != "t" and c.startswith(("q_", "x_", "r_"))]
    t = [float(r["t"]) for r in rows]
    for c in cols:
        plt.plot(t, [float(r[c]) for r in rows], label=f"{{name}}:{{c}}")
plt.xlabel("t")
plt.title({title!r})
plt.legend(fontsize="small")
plt.savefig("plot.png", dpi=120)
'''


def _final_state(traj):
    s = traj.state(len(traj) - 1)
    return {"t": float(traj.times[-1]), "q": s.q, "qdot": s.qdot, "qddot": s.qddot, "q3": s.q3}


def _summary(scenario, **kw):
    out = {
        "scenario": scenario,
        "status": "ok",
        "diverged": False,
        "blowup_time": None,
        "final_state": None,
        "sup_error": None,
        "boundary_residuals": None,
        "stability": None,
        "rows": None,
        "extra": {},
        "files": [],
    }
    out.update(kw)
    if out["diverged"]:
        out["status"] = "diverged"
    return out


def _bc(spec, traj):
    s = traj.state(len(traj) - 1)
    r1p, r2p = dyn.boundary_residuals_printed(spec, s)
    r1g, r2g = dyn.boundary_residuals_generic(spec, float(traj.times[-1]), s)
    return {"printed": {"r1": r1p, "r2": r2p}, "generic": {"r1": r1g, "r2": r2g}}


def _stab(law, pot):
    try:
        reports = classify(law, pot)
    except ContractError:
        return None
    return {"verdict": overall_verdict(reports), "reports": [r.to_json() for r in reports]}


def _run_law(law, s0, t_end, opts):
    f, order = dyn.law_field(law)
    return integrate(f, s0, 0.0, t_end, opts, dim=law.potential.dim)


def _sup(a, b, mask=None):
    d = np.abs(a - b)
    if mask is not None:
        d = d[mask]
    return float(np.max(d)) if d.size else None


# Scenarios ---------------------------------------------------------------------------

def sc_oscillator(cfg, pot):
    law = dyn.DampedOscillator(cfg["m"], cfg["theta"], pot)
    q0, v0 = _initial(cfg, pot)
    traj = _run_law(law, np.concatenate([q0, v0]), cfg["t_end"], _options(cfg))
    extra = {}
    sup_error = None
    if isinstance(pot, Quadratic):
        qe, _ = dyn.damped_oscillator_exact(cfg["m"], cfg["theta"], pot, q0, v0, traj.times)
        sup_error = _sup(traj.q, qe)
    if cfg["theta"] == 0:
        E = np.array([dyn.oscillator_energy(cfg["m"], pot, t, q, v) for t, q, v in zip(traj.times, traj.q, traj.qdot)])
        extra["energy_drift"] = float(np.max(np.abs(E - E[0])) / abs(E[0])) if E[0] else float(np.max(np.abs(E)))
    summary = _summary("oscillator", diverged=traj.diverged, blowup_time=traj.meta["blowup_time"],
                       final_state=_final_state(traj), sup_error=sup_error, stability=_stab(law, pot), extra=extra)
    return summary, {"trajectory.csv": trajectory_csv(traj)}


def sc_gradient_flow_limit(cfg, pot):
    theta = cfg["theta"]
    q0, v0 = _initial(cfg, pot)
    opts = _options(cfg)
    flow = _run_law(dyn.GradientFlow(theta, pot), q0, cfg["t_end"], opts)
    mask = flow.times >= cfg["t_transient"]
    rows, files = [], {"trajectory.csv": trajectory_csv(flow)}
    diverged = flow.diverged
    for i, m in enumerate(_grid(cfg, "m", [1e-1, 1e-2, 1e-3])):
        osc = _run_law(dyn.DampedOscillator(m, theta, pot), np.concatenate([q0, v0]), cfg["t_end"], opts)
        diverged |= osc.diverged
        dist = _sup(osc.q, flow.q[: len(osc)], mask[: len(osc)]) if len(osc) == len(flow) else None
        rows.append({"m": m, "sup_distance": dist, "diverged": osc.diverged})
        files[f"trajectory_m{i}.csv"] = trajectory_csv(osc)
    d = [r["sup_distance"] for r in rows]
    ok = all(x is not None for x in d)
    extra = {"monotone_decreasing": ok and all(b < a for a, b in zip(d, d[1:]))}
    summary = _summary("gradient-flow-limit", diverged=diverged, final_state=_final_state(flow), rows=rows,
                       sup_error=d[-1] if ok else None, stability=_stab(dyn.GradientFlow(theta, pot), pot), extra=extra)
    return summary, files


def _fourth_initial(cfg, spec, pot):
    q0, v0 = _initial(cfg, pot)
    s = dyn.matched_initial_state(spec, q0, v0)
    init = cfg["initial"]
    qdd = init.get("qddot0")
    q3 = init.get("q30")
    return dyn.State4(q0, v0, s.qddot if qdd is None else qdd, s.q3 if q3 is None else q3)


def _collapsed_traj(cfg, spec, pot, s0, opts):
    lim = dyn.collapse(spec)
    return _run_law(lim, s0.flat(2), cfg["t_end"], opts)


def sc_fourth_stab(cfg, pot):
    spec = _kinetic_spec(cfg, pot)
    s0 = _fourth_initial(cfg, spec, pot)
    opts = _options(cfg)
    traj = _run_law(spec, s0.flat(), cfg["t_end"], opts)
    lim = _collapsed_traj(cfg, spec, pot, s0, opts)
    dist = _sup(traj.q, lim.q) if len(traj) == len(lim) else None
    summary = _summary("fourth-stab", diverged=traj.diverged, blowup_time=traj.meta["blowup_time"],
                       final_state=_final_state(traj), boundary_residuals=_bc(spec, traj),
                       sup_error=dist, stability=_stab(spec, pot), extra={"collapsed_sup_distance": dist})
    return summary, {"trajectory.csv": trajectory_csv(traj), "collapsed.csv": trajectory_csv(lim)}


def sc_fourth_uns(cfg, pot):
    spec = _case_ii(cfg, pot)
    s0 = _fourth_initial(cfg, spec, pot)
    traj = _run_law(spec, s0.flat(), cfg["t_end"], _options(cfg))
    summary = _summary("fourth-uns", diverged=traj.diverged, blowup_time=traj.meta["blowup_time"],
                       final_state=_final_state(traj), boundary_residuals=_bc(spec, traj),
                       stability=_stab(spec, pot))
    return summary, {"trajectory.csv": trajectory_csv(traj)}


def sc_collapse_theta(cfg, pot):
    opts = _options(cfg)
    thetas = _grid(cfg, "theta", [10.0, 100.0, 1000.0])
    rows, files, diverged = [], {}, False
    lim = None
    for i, th in enumerate(thetas):
        spec = _kinetic_spec(cfg, pot, th)
        s0 = _fourth_initial(cfg, spec, pot)
        if lim is None:
            lim = _collapsed_traj(cfg, spec, pot, s0, opts)
            files["collapsed.csv"] = trajectory_csv(lim)
        traj = _run_law(spec, s0.flat(), cfg["t_end"], opts)
        diverged |= traj.diverged
        dist = _sup(traj.q, lim.q) if len(traj) == len(lim) else None
        st = _stab(spec, pot)
        rows.append({"theta": th, "sup_distance": dist, "diverged": traj.diverged,
                     "verdict": st["verdict"] if st else None})
        files[f"trajectory_theta{i}.csv"] = trajectory_csv(traj)
    d = [r["sup_distance"] for r in rows]
    ok = all(x is not None for x in d)
    extra = {"strictly_decreasing": ok and all(b < a for a, b in zip(d, d[1:]))}
    summary = _summary("collapse-theta", diverged=diverged, final_state=_final_state(lim), rows=rows,
                       sup_error=d[-1] if ok else None, stability=_stab(dyn.collapse(spec), pot), extra=extra)
    return summary, files


def sc_collapse_eps(cfg, pot):
    opts = _options(cfg)
    rows, files, diverged = [], {}, False
    lim = None
    for i, e in enumerate(_grid(cfg, "eps_dis", [0.5, 0.1, 0.02])):
        spec = _case_ii(cfg, pot, e)
        s0 = _fourth_initial(cfg, spec, pot)
        if lim is None:
            lim = _collapsed_traj(cfg, spec, pot, s0, opts)
            files["collapsed.csv"] = trajectory_csv(lim)
        traj = _run_law(spec, s0.flat(), cfg["t_end"], opts)
        diverged |= traj.diverged
        k = len(traj) if traj.meta["uniform"] else len(traj) - 1
        dist = _sup(traj.q[:k], lim.q[:k])
        rows.append({"eps_dis": e, "sup_distance": dist, "diverged": traj.diverged,
                     "blowup_time": traj.meta["blowup_time"]})
        files[f"trajectory_eps{i}.csv"] = trajectory_csv(traj)
    summary = _summary("collapse-eps", diverged=diverged, final_state=_final_state(lim), rows=rows,
                       stability=_stab(dyn.collapse(spec), pot))
    return summary, files


def sc_blowup_horizon(cfg, pot):
    opts = _options(cfg)
    rows, files, diverged = [], {}, False
    for i, e in enumerate(_grid(cfg, "eps_dis", [0.5, 0.1, 0.02])):
        spec = _case_ii(cfg, pot, e)
        s0 = _fourth_initial(cfg, spec, pot)
        traj = _run_law(spec, s0.flat(), cfg["t_end"], opts)
        diverged |= traj.diverged
        st = _stab(spec, pot)
        rows.append({"eps_dis": e, "diverged": traj.diverged, "blowup_time": traj.meta["blowup_time"],
                     "verdict": st["verdict"] if st else None,
                     "max_real_part": max(r["max_real_part"] for r in st["reports"]) if st else None})
        files[f"trajectory_eps{i}.csv"] = trajectory_csv(traj)
    bt = [r["blowup_time"] for r in rows]
    eps = [r["eps_dis"] for r in rows]
    order = np.argsort(eps)[::-1]
    ok = all(b is not None for b in bt)
    extra = {"blowup_decreases_with_eps": ok and all(bt[j] < bt[i] for i, j in zip(order, order[1:]))}
    summary = _summary("blowup-horizon", diverged=diverged, blowup_time=min(b for b in bt if b is not None) if any(
        b is not None for b in bt) else None, rows=rows, extra=extra)
    return summary, files


def _discrete_lagrangian(cfg, pot):
    d = cfg["discrete"]
    kind = d.get("lagrangian", "learning")
    if kind == "free":
        return DiscreteLagrangian.free_particle(pot.dim, cfg["m"])
    if kind == "mechanics":
        return DiscreteLagrangian(FirstOrderLagrangian.mechanics(cfg["m"], cfg["theta"], pot))
    if kind == "learning":
        return DiscreteLagrangian(FirstOrderLagrangian(cfg["m"], cfg["gamma"], pot, Const1()))
    raise ConfigError(f"unknown discrete lagrangian {kind!r}")


def _seed_path(cfg, pot):
    d = cfg["discrete"]
    n_nodes = int(d.get("n_nodes", 21))
    eps = cfg["eps_grid"]
    q0, v0 = _initial(cfg, pot)
    t = eps * np.arange(n_nodes)
    kind = d.get("seed_path", "affine")
    if kind == "affine":
        X = q0 + t[:, None] * v0
    elif kind == "random":
        rng = np.random.default_rng(cfg["seed"])
        X = rng.standard_normal((n_nodes, pot.dim))
    elif kind == "exact":
        X, _ = dyn.damped_oscillator_exact(cfg["m"], cfg["theta"], pot, q0, v0, t)
    else:
        raise ConfigError(f"unknown seed_path {kind!r}")
    return DiscretePath(X, eps)


def _path_csv(path, extra_cols=None):
    n = path.values.shape[1]
    header = ["t"] + [f"x_{i}" for i in range(n)]
    cols = [path.times[:, None], path.values]
    for name, arr in (extra_cols or {}).items():
        header += [f"{name}_{i}" for i in range(arr.shape[1])]
        cols.append(arr)
    return table_csv(header, np.hstack(cols).tolist())


def sc_discrete_el(cfg, pot):
    L = _discrete_lagrangian(cfg, pot)
    path = _seed_path(cfg, pot)
    res = discrete_el_residual(path, L)
    g = action_gradient(path, L)
    rt = path.times[1:-1]
    res_csv = table_csv(["t"] + [f"r_{i}" for i in range(res.shape[1])], np.hstack([rt[:, None], res]).tolist())
    summary = _summary("discrete-el", sup_error=float(np.max(np.abs(res))),
                       extra={"action": action(path, L), "grad_norm": float(np.max(np.abs(g))),
                              "max_el_residual": float(np.max(np.abs(res))), "n_nodes": path.n_nodes})
    return summary, {"path.csv": _path_csv(path), "residual.csv": res_csv}


def sc_gradflow_vs_el(cfg, pot):
    d = cfg["discrete"]
    L = _discrete_lagrangian(cfg, pot)
    cfg = dict(cfg, discrete=dict(d, seed_path=d.get("seed_path", "random")))
    path0 = _seed_path(cfg, pot)
    eta = d.get("eta", 0.25 * path0.eps_grid)
    path, rep = gradient_flow_minimize(path0, L, eta, d.get("tol", 1e-10), int(d.get("max_iters", 200000)),
                                       d.get("clamp_first", True))
    res = discrete_el_residual(path, L)
    marched = discrete_el_march(path.values[0], path.values[1], L, path.n_nodes, path.eps_grid)
    extra = {
        "iterations": rep.iterations,
        "converged": rep.converged,
        "grad_norm": rep.grad_norm,
        "action": rep.action,
        "max_el_residual": float(np.max(np.abs(res))),
        "march_distance": float(np.max(np.abs(marched.values - path.values))),
    }
    summary = _summary("gradflow-vs-el", sup_error=extra["march_distance"], extra=extra)
    return summary, {"path.csv": _path_csv(path, {"march": marched.values, "seed": path0.values})}


def sc_stability_sweep(cfg, pot):
    rows = []

    def add(law, **params):
        st = _stab(law, pot)
        rows.append({**params, "law": type(law).__name__, "verdict": st["verdict"],
                     "max_real_part": max(r["max_real_part"] for r in st["reports"]),
                     "hurwitz_stable": all(r["hurwitz_stable"] for r in st["reports"])})

    for th in _grid(cfg, "theta", [1.0, 4.0, 10.0, 100.0]):
        add(_kinetic_spec(cfg, pot, th), theta=th)
    for e in _grid(cfg, "eps_dis", [0.5, 0.1, 0.02]):
        add(_case_ii(cfg, pot, e), eps_dis=e)
    add(dyn.collapse(_case_ii(cfg, pot)), eps_dis=0.0)
    for m in _grid(cfg, "m", [1.0]):
        add(dyn.DampedOscillator(m, cfg["theta"], pot), m=m)
    summary = _summary("stability-sweep", rows=rows)
    header = ["law", "theta", "eps_dis", "m", "verdict", "max_real_part", "hurwitz_stable"]
    table = table_csv(header, [[r.get(h, "") for h in header] for r in rows])
    return summary, {"stability.csv": table}


RUNNERS = {
    "oscillator": sc_oscillator,
    "gradient-flow-limit": sc_gradient_flow_limit,
    "fourth-stab": sc_fourth_stab,
    "fourth-uns": sc_fourth_uns,
    "collapse-theta": sc_collapse_theta,
    "collapse-eps": sc_collapse_eps,
    "blowup-horizon": sc_blowup_horizon,
    "discrete-el": sc_discrete_el,
    "gradflow-vs-el": sc_gradflow_vs_el,
    "stability-sweep": sc_stability_sweep,
}


def execute(cfg):
    """Run a validated config in memory; returns ``(summary, {filename: text})``."""
    full = validate_config(cfg) if "_validated" not in cfg else cfg
    pot = from_config(full["potential"])
    try:
        summary, files = RUNNERS[full["scenario"]](full, pot)
    except IntegrationError as exc:
        raise DivergenceExit(str(exc)) from exc
    csvs = sorted(k for k in files if k.endswith(".csv") and files[k].startswith("t,"))
    files["plot.py"] = _plot_script(csvs, full["scenario"])
    summary["files"] = sorted(files) + ["summary.json"]
    summary = _finite(summary)
    files["summary.json"] = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    return summary, files


def _write(out_dir, files):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)


def run(cfg, out_dir):
    """Run one scenario and write its artifacts. Returns the exit status."""
    summary, files = execute(cfg)
    _write(out_dir, files)
    if summary["diverged"] and cfg["scenario"] not in EXPECTS_DIVERGENCE:
        log.error("scenario %s diverged unexpectedly", cfg["scenario"])
        return EXIT_DIVERGED
    return EXIT_OK


def _row(cfg, params):
    full = _with_defaults(cfg)
    full.update(params)
    full["_scalar"] = list(params)
    full["grids"] = {k: v for k, v in full.get("grids", {}).items() if k not in params}
    full["_validated"] = True
    summary, _ = execute(full)
    stab = summary["stability"]
    if stab:
        verdict = stab["verdict"]
    else:
        # scenarios that classify per grid row report their verdicts there
        row_verdicts = [r.get("verdict") for r in summary["rows"] or [] if r.get("verdict")]
        verdict = combine_verdicts(row_verdicts) if row_verdicts else ""
    return {
        **params,
        "verdict": verdict,
        "diverged": summary["diverged"],
        "blowup_time": summary["blowup_time"],
        "sup_error": summary["sup_error"],
    }


def sweep(cfg, out_dir, threads=None):
    """Cross product of the config's grids, one summary row per combination."""
    validate_config(cfg)
    grids = {k: v for k, v in cfg.get("grids", {}).items() if k in SWEEP_KEYS}
    if not grids or any(len(v) == 0 for v in grids.values()):
        raise ConfigError("sweep needs at least one non-empty grid")
    keys = sorted(grids)
    combos = [dict(zip(keys, vals)) for vals in itertools.product(*(grids[k] for k in keys))]
    threads = threads or int(os.environ.get("CAL_THREADS", "1"))
    base = {k: v for k, v in cfg.items() if k != "grids"}
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(lambda p: _row(base, p), combos))
    header = keys + ["verdict", "diverged", "blowup_time", "sup_error"]
    table = table_csv(header, [["" if r[h] is None else r[h] for h in header] for r in rows])
    summary = _finite({"scenario": cfg["scenario"], "grids": grids, "rows": rows})
    _write(out_dir, {"sweep.csv": table, "sweep.json": json.dumps(summary, indent=2, sort_keys=True) + "\n"})
    unexpected = any(r["diverged"] for r in rows) and cfg["scenario"] not in EXPECTS_DIVERGENCE
    return EXIT_DIVERGED if unexpected else EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(prog="cal", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=("run", "sweep", "validate"))
    parser.add_argument("config")
    parser.add_argument("--out", default=None, help="output directory (overrides the config's 'out')")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            validate_config(cfg)
            print(f"{args.config}: ok")
            return EXIT_OK
        out = args.out or cfg.get("out") or os.path.join("cal_out", cfg.get("scenario", "run"))
        if args.command == "run":
            return run(cfg, out)
        return sweep(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceExit as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
