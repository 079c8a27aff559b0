"""Scenario configuration files.

A scenario is a single YAML document holding the grid, the model
coefficient families, the budget and the numerical knobs; no mathematics
travels on the command line, so a run is reproducible from its file.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .dynamics import SimConfig
from .grid import AgeGrid, Kernel
from .model import EpidemicModel

__all__ = ["ConfigError", "ScenarioConfig", "load_scenario", "parse_scenario"]


class ConfigError(ValueError):
    """Malformed or inconsistent scenario file."""


@dataclass(frozen=True)
class ScenarioConfig:
    model: EpidemicModel
    budget: float
    sim: SimConfig
    optimizer: dict
    plan_spec: dict
    equivalence: dict
    seed: int
    raw: dict = field(repr=False)

    def to_dict(self) -> dict:
        return self.raw


def _section(cfg: dict, key: str, where: str) -> dict:
    try:
        sec = cfg[key]
    except (KeyError, TypeError):
        raise ConfigError(f"{where}: missing section '{key}'")
    if not isinstance(sec, dict):
        raise ConfigError(f"{where}: section '{key}' must be a mapping")
    return sec


def _get(sec: dict, key: str, where: str, default=None, required: bool = False):
    if key not in sec:
        if required:
            raise ConfigError(f"{where}: missing key '{key}'")
        return default
    return sec[key]


def _nodal(spec, grid: AgeGrid, where: str, base_dir: Path) -> np.ndarray:
    kind = _get(spec, "kind", where, required=True)
    if kind == "constant":
        return np.full(grid.n, float(_get(spec, "value", where, required=True)))
    if kind == "affine":
        m = float(_get(spec, "m_mu", where, required=True))
        q = float(_get(spec, "q_mu", where, required=True))
        return m * grid.nodes + q
    if kind == "gaussian":
        xbar = float(_get(spec, "xbar", where, required=True))
        sigma = float(_get(spec, "sigma", where, required=True))
        scale = float(_get(spec, "scale", where, default=1.0))
        return scale * np.exp(-0.5 * ((grid.nodes - xbar) / sigma) ** 2) / (
            sigma * np.sqrt(2 * np.pi)
        )
    if kind == "tabulated":
        values = np.asarray(_get(spec, "values", where, required=True), dtype=float)
        if values.shape != (grid.n,):
            raise ConfigError(f"{where}: tabulated values must have length {grid.n}")
        return values
    raise ConfigError(f"{where}: unknown kind '{kind}'")


def _kernel(spec, grid: AgeGrid, where: str, base_dir: Path) -> Kernel:
    kind = _get(spec, "kind", where, required=True)
    if kind == "gaussian":
        b = float(_get(spec, "b", where, required=True))
        sb = float(_get(spec, "sigma_beta", where, required=True))
        x = grid.nodes
        return Kernel(grid, b * np.exp(-((x[:, None] - x[None, :]) ** 2) / sb))
    if kind == "separable":
        profile = _nodal(_get(spec, "profile", where, required=True), grid, where, base_dir)
        return Kernel(grid, np.tile(profile, (grid.n, 1)))
    if kind == "constant":
        return Kernel(grid, np.full((grid.n, grid.n), float(_get(spec, "value", where, required=True))))
    if kind == "matrix_file":
        path = base_dir / str(_get(spec, "path", where, required=True))
        if not path.exists():
            raise ConfigError(f"{where}: kernel file not found: {path}")
        values = np.loadtxt(path, delimiter=",")
        return Kernel(grid, values)
    raise ConfigError(f"{where}: unknown kernel kind '{kind}'")


def parse_scenario(cfg: dict, base_dir: Path = Path(".")) -> ScenarioConfig:
    if not isinstance(cfg, dict):
        raise ConfigError("scenario file must be a YAML mapping")
    gsec = _section(cfg, "grid", "grid")
    try:
        grid = AgeGrid.uniform(float(_get(gsec, "a_max", "grid", required=True)),
                               int(_get(gsec, "n", "grid", required=True)))
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}")

    msec = _section(cfg, "model", "model")
    try:
        model = EpidemicModel(
            grid=grid,
            beta=_kernel(_section(msec, "beta", "model.beta"), grid, "model.beta", base_dir),
            mu=_nodal(_section(msec, "mu", "model.mu"), grid, "model.mu", base_dir),
            s0=_nodal(_section(msec, "s0", "model.s0"), grid, "model.s0", base_dir),
            i0=_nodal(_section(msec, "i0", "model.i0"), grid, "model.i0", base_dir),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"model: {exc}")

    budget = float(cfg.get("budget", 0.0))
    if budget < 0:
        raise ConfigError("budget must be non-negative")

    ssec = cfg.get("sim", {}) or {}
    try:
        sim = SimConfig(
            dt=float(ssec.get("dt", 1e-2)),
            t_max=None if ssec.get("t_max") is None else float(ssec["t_max"]),
            eps_i=None if ssec.get("eps_i") is None else float(ssec["eps_i"]),
            eps_ds=float(ssec.get("eps_ds", 1e-12)),
            snapshot_stride=int(ssec.get("snapshot_stride", 1)),
            dt_tail=None if ssec.get("dt_tail") is None else float(ssec["dt_tail"]),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"sim: {exc}")

    optimizer = dict(cfg.get("optimizer", {}) or {})
    plan_spec = dict(cfg.get("plan", {}) or {})
    equivalence = dict(cfg.get("equivalence", {}) or {})
    seed = int(cfg.get("seed", 0))

    return ScenarioConfig(
        model=model,
        budget=budget,
        sim=sim,
        optimizer=optimizer,
        plan_spec=plan_spec,
        equivalence=equivalence,
        seed=seed,
        raw=cfg,
    )


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}")
    return parse_scenario(cfg, base_dir=path.parent)
