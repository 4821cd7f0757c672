"""Experiment harness: configuration, seeded runs, trace CSVs and sweeps.

A run is described by a flat JSON-compatible dictionary (see
:data:`DEFAULTS`). Unset scenario-dependent keys (``zeta``, ``gd_eta``,
``fd_delta``, ``init``) are resolved per scenario and solver family
from :data:`SCENARIO_SETTINGS`. The resolved configuration is written to
``manifest.json`` next to the traces, and re-running from it reproduces the
trace files byte for byte (``timing`` must be off for ``elapsed_ms`` to match).
"""

import csv
import io
import itertools
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .cg_newton import CgConfig, cg_robust_newton
from .datagen import STREAM_INIT, Scenario, ScenarioSpec, generate, rng_for
from .estimators import HuberConfig, MomConfig
from .exceptions import ConfigError, SchemaMismatch
from .models import GlmModel
from .newton import NewtonConfig, ols_trace, robust_gradient_descent, robust_newton
from .robust_derivatives import Kind, RobustConfig

log = logging.getLogger(__name__)

TRACE_HEADER = [
    "iter", "alpha", "grad_norm_est", "decrement_sq", "loss_est",
    "param_error", "hessian_repaired", "elapsed_ms",
]
SOLVERS = ("RNM", "RGD", "NCGM", "OLS", "NM")

DEFAULTS = {
    "scenario": "LinearHuber",
    "p": 10,
    "n": 1000,
    "epsilon": 0.1,
    "sigma": 1.0,
    "beta": 1.0,
    "seed": 0,
    "solver": "RNM",
    "robust": "auto",
    "robust_epsilon": None,
    "delta": 0.1,
    "c_interval": 0.2,
    "c_ball": 0.2,
    "mom_delta": 0.1,
    "max_buckets": 1000,
    "hessian_eig_floor": 1e-8,
    "max_iters": 30,
    "kappa1": 0.01,
    "kappa2": 0.5,
    "zeta": None,
    "min_alpha": 1e-12,
    "grad_tol": 0.0,
    "fd_delta": None,
    "inner_iters": None,
    "residual_tol": 0.0,
    "gd_eta": None,
    "gd_iters": 100,
    "init": "default",
    "output_dir": "runs",
    "repeats": 1,
    "jobs": 1,
    "timing": True,
}

# (scenario, family) -> initialisation (constant, noise scale), zeta, gd_eta, fd_delta
SCENARIO_SETTINGS = {
    ("LinearHuber", "newton"): dict(init=(0.4, 10.0), zeta=1e-8, gd_eta=0.1, fd_delta=1e-9),
    ("LinearHuber", "cg"): dict(init=(1.0, 2.0), zeta=1e-3, gd_eta=0.02, fd_delta=1e-9),
    ("LogisticFlip", "newton"): dict(init=(0.0, 0.0), zeta=1e-8, gd_eta=3.0, fd_delta=1e-9),
    ("LogisticFlip", "cg"): dict(init=(0.0, 0.0), zeta=1e-8, gd_eta=3.0, fd_delta=1e-9),
    ("LinearPareto", "newton"): dict(init=(10.0, 0.0), zeta=1000.0, gd_eta=0.1, fd_delta=1e-10),
    ("LinearPareto", "cg"): dict(init=(1.5, 2.0), zeta=1e-5, gd_eta=0.2, fd_delta=1e-10),
}

_TYPES = {
    "p": int, "n": int, "seed": int, "max_iters": int, "max_buckets": int,
    "gd_iters": int, "repeats": int, "jobs": int, "inner_iters": int,
    "scenario": str, "solver": str, "robust": str, "output_dir": str,
    "timing": bool,
}


def _family(solver):
    return "cg" if solver == "NCGM" else "newton"


def resolve_config(raw):
    """Fill defaults and validate a flat configuration dictionary.

    Raises
    ------
    ConfigError
        With the offending key as ``field``.
    """
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ConfigError("unknown configuration key", field=unknown[0])
    cfg = dict(DEFAULTS)
    cfg.update({k: v for k, v in raw.items() if v is not None or k in ("init",)})

    for key, typ in _TYPES.items():
        val = cfg[key]
        if val is None:
            continue
        if typ is bool:
            if not isinstance(val, bool):
                raise ConfigError("expected true or false", field=key)
        elif typ is int:
            if isinstance(val, bool) or not isinstance(val, (int, float)) or int(val) != val:
                raise ConfigError("expected an integer", field=key)
            cfg[key] = int(val)
        elif not isinstance(val, str):
            raise ConfigError("expected a string", field=key)
    for key in ("epsilon", "sigma", "beta", "delta", "c_interval", "c_ball", "mom_delta",
                "hessian_eig_floor", "kappa1", "kappa2", "zeta", "min_alpha", "grad_tol",
                "fd_delta", "residual_tol", "gd_eta", "robust_epsilon"):
        val = cfg[key]
        if val is None:
            continue
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError("expected a number", field=key)
        cfg[key] = float(val)

    try:
        scenario = Scenario(cfg["scenario"]).value
    except ValueError:
        raise ConfigError(f"unknown scenario {cfg['scenario']!r}", field="scenario") from None
    cfg["scenario"] = scenario
    if cfg["solver"] not in SOLVERS:
        raise ConfigError(f"solver must be one of {', '.join(SOLVERS)}", field="solver")
    if cfg["repeats"] < 1:
        raise ConfigError("must be at least 1", field="repeats")
    if cfg["jobs"] < 1:
        raise ConfigError("must be at least 1", field="jobs")
    if cfg["gd_iters"] < 0:
        raise ConfigError("must be nonnegative", field="gd_iters")

    preset = SCENARIO_SETTINGS[(scenario, _family(cfg["solver"]))]
    for key in ("zeta", "gd_eta", "fd_delta"):
        if cfg[key] is None:
            cfg[key] = float(preset[key])
    if cfg["robust"] == "auto":
        cfg["robust"] = "heavytail" if scenario == "LinearPareto" else "huber"
    if cfg["robust"] not in ("huber", "heavytail", "none"):
        raise ConfigError("must be huber, heavytail, none or auto", field="robust")
    if cfg["robust_epsilon"] is None:
        cfg["robust_epsilon"] = cfg["epsilon"] if scenario != "LinearPareto" else 0.0
    init = cfg["init"]
    if init == "default":
        cfg["init"] = {"constant": preset["init"][0], "noise": preset["init"][1]}
    elif isinstance(init, dict):
        if set(init) != {"constant", "noise"}:
            raise ConfigError("init object needs exactly 'constant' and 'noise'", field="init")
        cfg["init"] = {"constant": float(init["constant"]), "noise": float(init["noise"])}
    elif isinstance(init, list):
        if len(init) != cfg["p"]:
            raise ConfigError(f"init has length {len(init)}, expected p={cfg['p']}", field="init")
        cfg["init"] = [float(v) for v in init]
    else:
        raise ConfigError("must be 'default', a {constant, noise} object or a list", field="init")

    # build once so that component invariants surface as config errors
    try:
        _components(cfg)
        scenario_spec(cfg, cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def scenario_spec(cfg, seed):
    return ScenarioSpec(cfg["scenario"], cfg["p"], cfg["n"], cfg["epsilon"], cfg["sigma"],
                        cfg["beta"], seed)


def _components(cfg):
    huber = HuberConfig(cfg["robust_epsilon"], cfg["delta"], cfg["c_interval"], cfg["c_ball"])
    mom = MomConfig(cfg["mom_delta"], cfg["max_buckets"])
    kind = Kind.NONE if cfg["solver"] == "NM" else Kind(cfg["robust"])
    rcfg = RobustConfig(kind, huber, mom, cfg["hessian_eig_floor"])
    ncfg = NewtonConfig(cfg["max_iters"], cfg["kappa1"], cfg["kappa2"], cfg["zeta"],
                        cfg["min_alpha"], cfg["grad_tol"])
    ccfg = CgConfig(cfg["fd_delta"], cfg["inner_iters"], cfg["residual_tol"], ncfg)
    return rcfg, ncfg, ccfg


def initial_theta(cfg, seed):
    init = cfg["init"]
    if isinstance(init, list):
        return np.array(init, dtype=np.float64)
    theta = np.full(cfg["p"], init["constant"])
    if init["noise"]:
        theta = theta + init["noise"] * rng_for(seed, STREAM_INIT).standard_normal(cfg["p"])
    return theta


def run_single(cfg, seed):
    """Generate data for ``seed`` and run the configured solver; returns an IterateTrace."""
    dataset = generate(scenario_spec(cfg, seed))
    model = GlmModel.logistic() if cfg["scenario"] == "LogisticFlip" else GlmModel.linear()
    rcfg, ncfg, ccfg = _components(cfg)
    theta0 = initial_theta(cfg, seed)
    solver = cfg["solver"]
    log.info("run solver=%s scenario=%s seed=%d", solver, cfg["scenario"], seed)
    if solver == "OLS":
        return ols_trace(dataset)
    if solver in ("RNM", "NM"):
        return robust_newton(dataset, model, theta0, rcfg, ncfg, solver=solver)
    if solver == "NCGM":
        return cg_robust_newton(dataset, model, theta0, rcfg, ccfg)
    return robust_gradient_descent(dataset, model, theta0, rcfg, cfg["gd_eta"], cfg["gd_iters"])


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def trace_csv(trace, timing=True):
    """Serialise a trace to CSV text with the fixed header."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for r in trace.records:
        elapsed = r.elapsed * 1000.0 if timing else 0.0
        w.writerow([_fmt(v) for v in (r.iter, r.alpha, r.grad_norm_est, r.decrement_sq,
                                     r.loss_est, r.param_error, r.hessian_repaired, elapsed)])
    return buf.getvalue()


def read_trace(path):
    """Load a trace CSV into a dict of float arrays; validates the header."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != TRACE_HEADER:
        raise SchemaMismatch(f"{path}: unexpected trace header")
    body = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
    body = body.reshape(-1, len(TRACE_HEADER))
    return {name: body[:, j] for j, name in enumerate(TRACE_HEADER)}


def trace_filename(solver, seed):
    return f"trace_{solver}_seed{seed}.csv"


def _run_to_text(args):
    cfg, seed = args
    return seed, trace_csv(run_single(cfg, seed), cfg["timing"])


def run_experiment(config):
    """Run every repeat seed and write traces plus ``manifest.json``.

    Returns the list of written paths, traces first (seed order), manifest last.
    """
    cfg = resolve_config(config)
    out = cfg["output_dir"]
    os.makedirs(out, exist_ok=True)
    seeds = [cfg["seed"] + r for r in range(cfg["repeats"])]
    work = [(cfg, s) for s in seeds]
    if cfg["jobs"] > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=cfg["jobs"]) as pool:
            results = list(pool.map(_run_to_text, work))
    else:
        results = [_run_to_text(w) for w in work]

    paths = []
    for seed, text in results:
        path = os.path.join(out, trace_filename(cfg["solver"], seed))
        with open(path, "w", newline="") as fh:
            fh.write(text)
        paths.append(path)
    manifest = dict(cfg)
    manifest_path = os.path.join(out, "manifest.json")
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.append(manifest_path)
    return paths


def load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc


def iterations_to_floor(errors, ratio=1.1):
    """First iteration whose error is within ``ratio`` of the final error."""
    errors = np.asarray(errors, dtype=float)
    final = errors[-1]
    hits = np.nonzero(errors <= ratio * final)[0]
    return int(hits[0]) if hits.size else len(errors) - 1


def grid_points(grid):
    if not grid:
        raise ConfigError("parameter grid is empty")
    keys = list(grid)
    for k in keys:
        if not isinstance(grid[k], (list, tuple)) or not grid[k]:
            raise ConfigError("grid values must be a non-empty list", field=f"grid.{k}")
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


SUMMARY_FIELDS = ["median_final_error", "median_iters_to_floor", "repeats"]


def sweep(base, grid):
    """Run ``run_experiment`` at every grid point and write ``summary.csv``.

    Each point writes into ``<output_dir>/point_<index>``. Returns the summary
    rows as dictionaries, in grid order.
    """
    base = dict(base)
    root = base.get("output_dir", DEFAULTS["output_dir"])
    points = grid_points(grid)
    rows = []
    for i, point in enumerate(points):
        cfg = dict(base)
        cfg.update(point)
        cfg["output_dir"] = os.path.join(root, f"point_{i:03d}")
        paths = run_experiment(cfg)
        finals, floors = [], []
        for path in paths[:-1]:
            errors = read_trace(path)["param_error"]
            finals.append(errors[-1])
            floors.append(iterations_to_floor(errors))
        row = dict(point)
        row["median_final_error"] = float(np.median(finals))
        row["median_iters_to_floor"] = float(np.median(floors))
        row["repeats"] = len(finals)
        rows.append(row)
    os.makedirs(root, exist_ok=True)
    with open(os.path.join(root, "summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        keys = list(grid) + SUMMARY_FIELDS
        w.writerow(keys)
        for row in rows:
            w.writerow([_fmt(row[k]) if not isinstance(row[k], str) else row[k] for k in keys])
    return rows
