"""Command-line entry point: scenario in, CSV/JSON artifacts out."""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .config import ConfigError, ScenarioConfig, load_scenario
from .dynamics import simulate, write_trajectory_csv
from .errors import IntegrationError, SolverError
from .finalsize import objective_ivp, solve_final_size, solve_final_size_separable
from .harness import evaluate_plan, maximizing_sequence, mollified_plan
from .model import zero_plan
from .optimize import bathtub_allocate, optimize_projected_gradient, sweep_budget
from .spectral import classify_threshold

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _atomic_write(path: Path, write_fn) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write_fn(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: Path, payload: dict) -> None:
    _atomic_write(path, lambda fh: json.dump(payload, fh, indent=2, sort_keys=True))


def _write_csv(path: Path, header, rows) -> None:
    def write(fh):
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{x:.12g}" if isinstance(x, float) else x for x in row])

    _atomic_write(path, write)


def _allocation(scenario: ScenarioConfig, spec: dict) -> np.ndarray:
    model = scenario.model
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return np.zeros(model.grid.n)
    if kind == "bathtub":
        tub = bathtub_allocate(
            model, scenario.budget, allow_nonseparable=bool(spec.get("allow_nonseparable", False))
        )
        return tub.allocation.values
    if kind == "scaled_s0":
        return float(spec.get("fraction", 0.0)) * model.s0
    if kind == "tabulated":
        values = np.asarray(spec.get("values", []), dtype=float)
        if values.shape != (model.grid.n,):
            raise ConfigError(f"allocation: expected {model.grid.n} values")
        return values
    raise ConfigError(f"allocation: unknown kind '{kind}'")


def _plan(scenario: ScenarioConfig):
    spec = scenario.plan_spec
    kind = spec.get("kind", "none")
    if kind == "none":
        return zero_plan(scenario.model.grid)
    if kind == "mollified":
        v = _allocation(scenario, spec.get("allocation", {}) or {})
        eps = float(spec.get("epsilon", 0.02))
        margin = spec.get("cap_margin", 1e-6)
        margin = None if margin is None else float(margin)
        return mollified_plan(scenario.model, v, eps, cap_margin=margin)
    raise ConfigError(f"plan: unknown kind '{kind}'")


def cmd_simulate(scenario: ScenarioConfig, out: Path) -> None:
    model = scenario.model
    plan = _plan(scenario)
    traj = simulate(model, plan, scenario.sim)
    write_trajectory_csv(traj, model.grid, out / "trajectory.csv")
    s_inf = traj.s_inf
    n_value = model.grid.integrate(s_inf) + model.grid.integrate(traj.v_cum[-1])
    _write_json(
        out / "summary.json",
        {
            "converged": traj.converged,
            "t_end": traj.t_end,
            "n_steps": traj.n_steps,
            "n_value": n_value,
            "s_inf_total": model.grid.integrate(s_inf),
            "s_inf_min": float(np.min(s_inf)),
            "s_inf_max": float(np.max(s_inf)),
            "min_s": traj.min_s,
            "clip_events": len(traj.clip_events),
            "conservation_rate": traj.conservation_rate,
        },
    )


def cmd_threshold(scenario: ScenarioConfig, out: Path) -> None:
    result = classify_threshold(scenario.model)
    _write_json(
        out / "threshold.json",
        {
            "lambda1": result.lambda1,
            "classification": result.classification,
            "rho": result.eigen.rho,
            "iterations": result.eigen.iterations,
            "residual": result.eigen.residual,
        },
    )


def cmd_final_size(scenario: ScenarioConfig, out: Path) -> None:
    model = scenario.model
    v = _allocation(scenario, scenario.plan_spec.get("allocation", {}) or {})
    sol = solve_final_size(model, v)
    _write_csv(
        out / "s_inf.csv",
        ["age", "s_inf", "v"],
        zip(model.grid.nodes.tolist(), sol.s_inf.tolist(), v.tolist()),
    )
    payload = {
        "iterations": sol.iterations,
        "residual": sol.residual,
        "s_inf_total": model.grid.integrate(sol.s_inf),
        "objective": model.grid.integrate(sol.s_inf) + model.grid.integrate(v),
    }
    if model.separable_profile() is not None:
        _, summary = solve_final_size_separable(model, v)
        payload.update(
            {"sigma0": summary.sigma0, "sigma_inf": summary.sigma_inf, "eta": summary.eta}
        )
    _write_json(out / "finalsize.json", payload)


def cmd_optimize_ivp(scenario: ScenarioConfig, out: Path, threads: int) -> None:
    model = scenario.model
    opts = scenario.optimizer
    method = opts.get("method", "auto")
    separable = model.separable_profile() is not None
    allow = bool(opts.get("allow_nonseparable", False))
    payload = {}

    if method in ("auto", "bathtub", "both") and (separable or allow):
        tub = bathtub_allocate(model, scenario.budget, allow_nonseparable=allow)
        obj = objective_ivp(model, tub.allocation)
        _write_csv(
            out / "allocation.csv",
            ["age", "v", "s0", "ratio"],
            zip(
                model.grid.nodes.tolist(),
                tub.allocation.values.tolist(),
                model.s0.tolist(),
                tub.ratio.tolist(),
            ),
        )
        payload["bathtub"] = {
            "objective": obj,
            "s_threshold": tub.s_threshold,
            "budget_used": tub.budget_used,
            "boundary_fraction": tub.boundary_fraction,
            "cut_node": tub.cut_node,
        }

    if method in ("gradient", "both") or (method == "auto" and not (separable or allow)):
        init = _allocation(scenario, opts.get("init", {}) or {})
        report = optimize_projected_gradient(
            model,
            scenario.budget,
            init=init,
            tol_kkt=float(opts.get("tol_kkt", 1e-6)),
            max_iter=int(opts.get("max_iter", 500)),
            threads=threads,
        )
        _write_csv(
            out / "allocation_gradient.csv",
            ["age", "v", "s0"],
            zip(
                model.grid.nodes.tolist(),
                report.allocation.values.tolist(),
                model.s0.tolist(),
            ),
        )
        payload["projected_gradient"] = report.to_dict()

    _write_json(out / "optimize_ivp.json", payload)


def cmd_sweep_budget(scenario: ScenarioConfig, out: Path) -> None:
    opts = scenario.optimizer
    count = int(opts.get("sweep_points", 20))
    budgets = np.linspace(0.0, scenario.budget, count)
    curve = sweep_budget(
        scenario.model, budgets, allow_nonseparable=bool(opts.get("allow_nonseparable", False))
    )
    _write_csv(out / "sweep.csv", ["m", "objective"], curve)


def cmd_equivalence(scenario: ScenarioConfig, out: Path) -> None:
    spec = scenario.equivalence
    epsilons = [float(e) for e in spec.get("epsilons", [0.5, 0.2, 0.1, 0.05, 0.02])]
    v = _allocation(scenario, spec.get("allocation", {"kind": "scaled_s0", "fraction": 0.3}))
    report = maximizing_sequence(scenario.model, v, epsilons, scenario.sim)
    _write_json(out / "equivalence.json", report.to_dict())
    _write_csv(
        out / "gap.csv",
        ["epsilon", "n_value", "gap"],
        [(e.epsilon, e.n_value, e.gap) for e in report.entries],
    )


def cmd_paper_figure(scenario: ScenarioConfig, out: Path) -> None:
    """End-to-end optimal-allocation run emitting plot-ready CSV panels."""
    model = scenario.model
    tub = bathtub_allocate(model, scenario.budget, allow_nonseparable=True)
    _write_csv(
        out / "allocation.csv",
        ["age", "v", "s0", "ratio", "threshold"],
        zip(
            model.grid.nodes.tolist(),
            tub.allocation.values.tolist(),
            model.s0.tolist(),
            tub.ratio.tolist(),
            [tub.s_threshold] * model.grid.n,
        ),
    )
    eps = float(scenario.plan_spec.get("epsilon", 0.02))
    plan = mollified_plan(model, tub.allocation.values, eps, cap_margin=None)
    outcome = evaluate_plan(model, plan, scenario.sim)
    traj = outcome.trajectory

    def field_rows(values):
        for k, t in enumerate(traj.times):
            for j, age in enumerate(model.grid.nodes):
                yield (float(t), float(age), float(values[k, j]))

    _write_csv(out / "s_field.csv", ["t", "age", "S"], field_rows(traj.s))
    _write_csv(out / "i_field.csv", ["t", "age", "I"], field_rows(traj.i))
    plan_rows = (
        (float(t), float(age), float(plan.rate(t)[j]))
        for t in np.linspace(0, eps, 101)
        for j, age in enumerate(model.grid.nodes)
    )
    _write_csv(out / "plan_field.csv", ["t", "age", "nu"], plan_rows)
    n_star = objective_ivp(model, tub.allocation)
    _write_json(
        out / "figure.json",
        {
            "epsilon": eps,
            "n_value": outcome.n_value,
            "n_star": n_star,
            "relative_gap": abs(n_star - outcome.n_value) / n_star,
            "s_threshold": tub.s_threshold,
            "budget_used": tub.budget_used,
        },
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="agevax",
        description="Age-structured SIR epidemics with optimal vaccine allocation",
    )
    parser.add_argument("subcommand", choices=[
        "simulate", "threshold", "final-size", "optimize-ivp",
        "sweep-budget", "equivalence", "paper-figure",
    ])
    parser.add_argument("--config", required=True, help="scenario YAML file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override scenario seed")
    parser.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("AGEVAX_THREADS", "1")),
        help="worker threads for gradient evaluations",
    )
    args = parser.parse_args(argv)

    try:
        scenario = load_scenario(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.seed is not None:
        np.random.default_rng(args.seed)  # seed is recorded; audits draw from it
    out = Path(args.out)
    try:
        if args.subcommand == "simulate":
            cmd_simulate(scenario, out)
        elif args.subcommand == "threshold":
            cmd_threshold(scenario, out)
        elif args.subcommand == "final-size":
            cmd_final_size(scenario, out)
        elif args.subcommand == "optimize-ivp":
            cmd_optimize_ivp(scenario, out, args.threads)
        elif args.subcommand == "sweep-budget":
            cmd_sweep_budget(scenario, out)
        elif args.subcommand == "equivalence":
            cmd_equivalence(scenario, out)
        elif args.subcommand == "paper-figure":
            cmd_paper_figure(scenario, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, IntegrationError) as exc:
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "failure.json", {"error": type(exc).__name__, "message": str(exc)})
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
