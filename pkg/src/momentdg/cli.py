"""Command-line driver: run a configured experiment or compare two runs.

::

    momentdg run --config cfg.json --out runs/ht [--full-scale]
    momentdg compare --ref runs/ht_ref --cand runs/ht_adapt

Exit status is 0 on success, 1 on solver failure (partial outputs are kept)
and 2 on an invalid configuration or command line.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .adapt import AdaptConfig, MarkingConfig, semr_loop
from .dg import DGSolution, OrderMap, element_macroscopic
from .errors import ConfigError, MomentDGError
from .goal import element_density, error_indicators, goal_gradient, goal_value
from .problems import HeatTransferConfig, ShockConfig, build_problem
from .solver import NewtonConfig, dual_solve, enriched_operator, newton_solve
from .velocity import GaussianParams, eval_beta

log = logging.getLogger("momentdg")

SCHEMA_VERSION = 1
PROBLEMS = {"heat_transfer": HeatTransferConfig, "shock": ShockConfig}
MODES = ("solve", "uniform_sweep", "adapt", "reference")
CONVERGENCE_COLUMNS = ["iter", "dof", "J", "estimate", "bound_cancel", "bound_triangle", "err_vs_ref"]


# ---------------------------------------------------------------------------
# configuration


@dataclass
class GridConfig:
    n_x: int = 11
    n_v: int = 81
    v_halfwidth: float = 5.0


@dataclass
class RunConfig:
    problem: str
    mode: str
    problem_params: object
    newton: NewtonConfig = NewtonConfig()
    adapt: AdaptConfig | None = None
    sweep_orders: tuple = ()
    j_ref: float | None = None
    grid: GridConfig = field(default_factory=GridConfig)
    seed: int = 0


def _section(raw, name, allowed):
    sec = raw.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(name, "must be an object")
    for key in sec:
        if key not in allowed:
            raise ConfigError(f"{name}.{key}", "unknown field")
    return sec


def _build(cls, prefix, kwargs):
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{prefix}.{exc.field}", str(exc).split(": ", 1)[-1]) from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(prefix, str(exc)) from None


def parse_config(text: str, full_scale: bool = False) -> RunConfig:
    """Validate a JSON run configuration.

    Raises :class:`ConfigError` naming the offending field.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "must be a JSON object")
    top = {"schema_version", "problem", "mode", "problem_params", "solver", "adapt", "sweep",
           "reference", "output", "seed"}
    for key in raw:
        if key not in top:
            raise ConfigError(key, "unknown field")
    if raw.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {raw.get('schema_version')!r}")
    problem = raw.get("problem")
    if problem not in PROBLEMS:
        raise ConfigError("problem", f"must be one of {sorted(PROBLEMS)}, got {problem!r}")
    mode = raw.get("mode", "adapt")
    if mode not in MODES:
        raise ConfigError("mode", f"must be one of {list(MODES)}, got {mode!r}")

    cls = PROBLEMS[problem]
    names = {f.name for f in dataclasses.fields(cls)}
    pp = dict(_section(raw, "problem_params", names))
    if full_scale:
        pp["n_elements"] = cls.FULL_SCALE_ELEMENTS
    params = _build(cls, "problem_params", pp)

    sv = _section(raw, "solver", {"residual_tol", "max_iters", "max_halvings"})
    newton = _build(NewtonConfig, "solver", sv)

    ad = dict(_section(raw, "adapt", {"tol", "max_iters", "fraction_c", "order_cap", "order_increment"}))
    frac = ad.pop("fraction_c", 1.0)
    marking = _build(MarkingConfig, "adapt", {"fraction_c": frac})
    ad.setdefault("order_cap", 14)
    if params.initial_order > ad["order_cap"]:
        raise ConfigError("adapt.order_cap", "below the initial order")
    adapt = _build(AdaptConfig, "adapt", dict(ad, initial_order=params.initial_order,
                                              dual_increment=params.dual_increment,
                                              marking=marking, newton=newton))

    sw = _section(raw, "sweep", {"orders"})
    orders = sw.get("orders")
    if orders is None:
        orders = list(range(params.initial_order, params.reference_order + 1, 2))
    if (not isinstance(orders, list) or not orders
            or any(not isinstance(m, int) or isinstance(m, bool) or m < 2 for m in orders)
            or orders != sorted(set(orders))):
        raise ConfigError("sweep.orders", "must be a strictly increasing list of integers >= 2")

    rf = _section(raw, "reference", {"J"})
    j_ref = rf.get("J")
    if j_ref is not None and not (isinstance(j_ref, (int, float)) and math.isfinite(j_ref)):
        raise ConfigError("reference.J", "must be a finite number")

    out = _section(raw, "output", {"n_x", "n_v", "v_halfwidth"})
    grid = GridConfig(**out)
    for name in ("n_x", "n_v"):
        if not isinstance(getattr(grid, name), int) or getattr(grid, name) < 1:
            raise ConfigError(f"output.{name}", "must be a positive integer")
    if not (isinstance(grid.v_halfwidth, (int, float)) and grid.v_halfwidth > 0):
        raise ConfigError("output.v_halfwidth", "must be positive")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed", "must be an integer")
    return RunConfig(problem, mode, params, newton, adapt, tuple(orders), j_ref, grid, seed)


def config_echo(cfg: RunConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "problem": cfg.problem,
        "mode": cfg.mode,
        "problem_params": dataclasses.asdict(cfg.problem_params),
        "solver": dataclasses.asdict(cfg.newton),
        "adapt": {k: v for k, v in dataclasses.asdict(cfg.adapt).items() if k not in ("newton",)},
        "sweep": {"orders": list(cfg.sweep_orders)},
        "reference": {"J": cfg.j_ref},
        "output": dataclasses.asdict(cfg.grid),
        "seed": cfg.seed,
    }


# ---------------------------------------------------------------------------
# output


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    return "" if math.isnan(x) else f"{x:.17g}"


def write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    write_atomic(path, buf.getvalue())


def read_csv(path: str):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# runs


@dataclass
class Level:
    dof: int
    J: float
    estimate: float | None = None
    bound_cancel: float | None = None
    bound_triangle: float | None = None


def _estimate(setup, sol):
    enriched = sol.orders + setup.dual_increment
    padded, op = enriched_operator(setup.dg, sol, enriched)
    z = dual_solve(setup.dg, sol, enriched, goal_gradient(setup.dg, padded, setup.goal, enriched), operator=op)
    return error_indicators(setup.dg, sol, z)


def _ladder(setup, orders, newton, with_estimate):
    """Uniform solves at increasing orders, each warm-started from the last."""
    n = setup.dg.mesh.n_elements
    sol, levels = None, []
    for m in orders:
        om = OrderMap.uniform(n, m)
        start = DGSolution.zeros(setup.dg.mesh, om) if sol is None else sol.prolong(om)
        sol, _ = newton_solve(setup.dg, start, newton)
        lv = Level(om.dof, goal_value(setup.dg, sol, setup.goal))
        if with_estimate:
            err = _estimate(setup, sol)
            lv.estimate, lv.bound_cancel, lv.bound_triangle = err.estimate, err.bound_cancel, err.bound_triangle
        levels.append(lv)
        log.info("order %d: dof %d J %.17g", m, om.dof, lv.J)
    return sol, levels


def _fields_rows(setup, sol):
    rows = []
    for k, x in enumerate(setup.dg.mesh.centers):
        st = element_macroscopic(setup.dg, sol, k)
        # heat flux 1/2 <(v - u)^3 f> at the solution's own bulk velocity
        bg = setup.dg.backgrounds[k]
        mu = element_density(setup.dg, sol, k).moments(3)
        a = (st.u - bg.u) / bg.std
        w = np.array([-a ** 3, 3 * a ** 2, -3 * a, 1.0]) * bg.std ** 3
        rows.append((x, st.rho, st.u, st.theta, 0.5 * float(w @ mu)))
    return rows


def _distribution_rows(setup, sol, grid: GridConfig):
    n = setup.dg.mesh.n_elements
    picks = sorted(set(np.linspace(0, n - 1, min(grid.n_x, n)).round().astype(int).tolist()))
    rows = []
    for k in picks:
        bg = setup.dg.backgrounds[k]
        v = bg.u + bg.std * np.linspace(-grid.v_halfwidth, grid.v_halfwidth, grid.n_v)
        f = eval_beta(sol.velocity_poly(bg, k), setup.dg.spec, bg, v)
        x = setup.dg.mesh.centers[k]
        rows.extend((x, vi, fi) for vi, fi in zip(v, f))
    return rows


def execute(cfg: RunConfig, out_dir: str) -> int:
    """Run ``cfg`` and write all outputs to ``out_dir``; returns the exit code."""
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.perf_counter()
    setup = build_problem(cfg.problem_params)
    levels, sol, info = [], None, {}
    status, message = "ok", ""
    try:
        if cfg.mode == "adapt":
            state = semr_loop(setup.dg, setup.goal, cfg.adapt)
            sol = state.solution
            levels = [Level(r.dof, r.goal, r.estimate, r.bound_cancel, r.bound_triangle) for r in state.history]
            info = {"stop_reason": state.stop_reason,
                    "marked": [list(r.marked) for r in state.history],
                    "newton_iters": [r.newton_iters for r in state.history]}
            if state.failure:
                status, message = "failure", state.failure
        else:
            orders = {"solve": [setup.initial_order],
                      "reference": list(range(setup.initial_order, setup.reference_order + 1, 2)),
                      "uniform_sweep": list(cfg.sweep_orders)}[cfg.mode]
            if cfg.mode == "reference" and orders[-1] != setup.reference_order:
                orders.append(setup.reference_order)
            sol, levels = _ladder(setup, orders, cfg.newton, with_estimate=cfg.mode != "reference")
            if cfg.mode == "reference":
                levels = levels[-1:]
    except MomentDGError as exc:
        status, message = "failure", str(exc)
        log.error("run failed: %s", exc)

    j_ref = cfg.j_ref
    write_csv(os.path.join(out_dir, "convergence.csv"), CONVERGENCE_COLUMNS, [
        (i, lv.dof, lv.J, lv.estimate, lv.bound_cancel, lv.bound_triangle,
         None if j_ref is None else abs(lv.J - j_ref))
        for i, lv in enumerate(levels)])
    if sol is not None:
        write_csv(os.path.join(out_dir, "orders.csv"), ["element", "x_center", "M_kappa"],
                  [(k, x, m) for k, (x, m) in enumerate(zip(setup.dg.mesh.centers, sol.orders))])
        write_csv(os.path.join(out_dir, "fields.csv"), ["x", "rho", "u", "theta", "heat_flux"],
                  _fields_rows(setup, sol))
        write_csv(os.path.join(out_dir, "distribution.csv"), ["x", "v", "f"],
                  _distribution_rows(setup, sol, cfg.grid))
    run = {
        "config": config_echo(cfg),
        "status": status,
        "message": message,
        "backend": kernels.BACKEND,
        "seconds": time.perf_counter() - t0,
        "J_final": levels[-1].J if levels else None,
        **info,
    }
    write_atomic(os.path.join(out_dir, "run.json"), json.dumps(run, indent=2, sort_keys=True) + "\n")
    if status != "ok":
        print(f"error: {message}", file=sys.stderr)
        return 1
    return 0


def compare(ref_dir: str, cand_dir: str, out=sys.stdout) -> int:
    """Print the candidate's error history against the reference's final J."""
    with open(os.path.join(ref_dir, "run.json")) as fh:
        ref_run = json.load(fh)
    with open(os.path.join(cand_dir, "run.json")) as fh:
        cand_run = json.load(fh)
    rc, cc = ref_run["config"], cand_run["config"]
    if rc["problem"] != cc["problem"]:
        raise ConfigError("problem", f"reference is {rc['problem']!r}, candidate is {cc['problem']!r}")
    physics = [k for k in rc["problem_params"] if k not in ("initial_order", "dual_increment", "reference_order")]
    for k in physics:
        if rc["problem_params"][k] != cc["problem_params"].get(k):
            raise ConfigError(f"problem_params.{k}", "differs between reference and candidate")
    ref_rows = read_csv(os.path.join(ref_dir, "convergence.csv"))
    if not ref_rows:
        raise ConfigError("ref", "reference convergence.csv is empty")
    j_ref = float(ref_rows[-1]["J"])
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["iter", "dof", "J", "error", "estimate", "bound_cancel", "bound_triangle", "effectivity"])
    for r in read_csv(os.path.join(cand_dir, "convergence.csv")):
        J = float(r["J"])
        err = J - j_ref
        est = float(r["estimate"]) if r["estimate"] else None
        eff = est / err if est is not None and err != 0.0 else None
        w.writerow([r["iter"], r["dof"], fmt(J), fmt(abs(err)), fmt(est),
                    r["bound_cancel"], r["bound_triangle"], fmt(eff)])
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="momentdg", description="Adaptive moment DG solver for steady 1D BGK")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a configured experiment")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--full-scale", action="store_true", help="use the full element counts")
    c = sub.add_parser("compare", help="compare a candidate run against a reference run")
    c.add_argument("--ref", required=True)
    c.add_argument("--cand", required=True)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            try:
                with open(args.config) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError("--config", str(exc)) from None
            return execute(parse_config(text, args.full_scale), args.out)
        return compare(args.ref, args.cand)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
