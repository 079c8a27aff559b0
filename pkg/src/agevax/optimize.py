"""Solving the static (pre-epidemic) allocation problem.

With a separable kernel the optimum is closed-form: fill v = S0 on the
superlevel set of beta/mu down to the budget (bathtub allocation), with a
fractional take at the cut node so the budget binds exactly under the
quadrature rule. For general kernels a projected-gradient ascent with
finite-difference gradients reports a KKT point.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NonSeparableKernelError
from .finalsize import objective_ivp
from .model import EpidemicModel, StaticAllocation, allocation_values

__all__ = [
    "BathtubAllocation",
    "OptimizerReport",
    "bathtub_allocate",
    "project_allocation",
    "optimize_projected_gradient",
    "sweep_budget",
]


@dataclass(frozen=True)
class BathtubAllocation:
    s_threshold: float
    allocation: StaticAllocation
    budget_used: float
    boundary_fraction: float
    cut_node: int
    ratio: np.ndarray  # the beta/mu profile the superlevel sets refer to


@dataclass
class OptimizerReport:
    allocation: StaticAllocation
    objective: float
    iterations: int
    kkt_residual: float
    history: list = field(default_factory=list)
    stalled: bool = False

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "iterations": self.iterations,
            "kkt_residual": self.kkt_residual,
            "stalled": self.stalled,
            "allocation": self.allocation.values.tolist(),
            "history": [[int(k), float(val)] for k, val in self.history],
        }


def _ratio(model: EpidemicModel, allow_nonseparable: bool) -> np.ndarray:
    profile = model.separable_profile()
    if profile is not None:
        return profile / model.mu
    if not allow_nonseparable:
        raise NonSeparableKernelError(
            "bathtub allocation requires beta(x, y) = beta(y); "
            "pass allow_nonseparable=True to rank ages by total onward transmission"
        )
    # Onward transmission of an infected of age y, per unit mortality:
    # integral_x beta(x, y) dx / mu(y).
    colsum = model.grid.weights @ model.beta.values
    return colsum / model.mu


def bathtub_allocate(
    model: EpidemicModel, budget: float, allow_nonseparable: bool = False
) -> BathtubAllocation:
    """Greedy fill of v = S0 in decreasing beta/mu order until the budget binds."""
    if budget < 0:
        raise ValueError("budget must be non-negative")
    w = model.grid.weights
    s0 = model.s0
    total = float(w @ s0)
    if budget > total * (1 + 1e-12):
        raise ValueError(f"budget {budget} exceeds total susceptible mass {total}")

    r = _ratio(model, allow_nonseparable)
    profile = model.separable_profile()
    if profile is not None and np.all(profile > 0):
        bound = float(np.min(model.mu / profile)) * float(w @ (r * s0))
        if budget >= bound:
            warnings.warn(
                f"budget {budget:.6g} is outside the proven range (< {bound:.6g}); "
                "the bathtub allocation is returned but optimality is not guaranteed",
                stacklevel=2,
            )

    # Descending ratio, ties broken by ascending age index.
    order = np.lexsort((np.arange(model.grid.n), -r))
    capacity = w[order] * s0[order]
    cum = np.cumsum(capacity)

    v = np.zeros(model.grid.n)
    if budget <= 0:
        cut = int(order[0])
        frac = 0.0
    else:
        k = int(np.searchsorted(cum, budget * (1 - 1e-15)))
        k = min(k, len(order) - 1)
        full = order[:k]
        v[full] = s0[full]
        cut = int(order[k])
        spent = cum[k - 1] if k > 0 else 0.0
        leftover = budget - float(spent)
        if w[cut] > 0:
            v[cut] = min(leftover / w[cut], s0[cut])
        frac = float(v[cut] / s0[cut]) if s0[cut] > 0 else 0.0

    used = float(w @ v)
    return BathtubAllocation(
        s_threshold=float(r[cut]),
        allocation=StaticAllocation(model.grid, v),
        budget_used=used,
        boundary_fraction=frac,
        cut_node=cut,
        ratio=r,
    )


def project_allocation(model: EpidemicModel, v: np.ndarray, budget: float) -> np.ndarray:
    """Projection onto {0 <= v <= S0, integral v <= K} in the quadrature metric.

    The projection is a constant downward shift followed by box clipping;
    the shift is zero when the budget is slack, otherwise found by
    bisection so the budget binds.
    """
    v = np.asarray(v, dtype=float)
    w = model.grid.weights
    s0 = model.s0
    clipped = np.clip(v, 0.0, s0)
    if float(w @ clipped) <= budget * (1 + 1e-12):
        return clipped
    lo, hi = 0.0, float(np.max(v))
    for _ in range(200):
        tau = (lo + hi) / 2
        mass = float(w @ np.clip(v - tau, 0.0, s0))
        if mass > budget:
            lo = tau
        else:
            hi = tau
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    return np.clip(v - (lo + hi) / 2, 0.0, s0)


def _fd_gradient(model, objective, v, h, threads=1):
    """Central differences, shrunk one-sidedly at the box faces."""
    s0 = model.s0
    n = len(v)

    def partial(j):
        hp = min(h, s0[j] - v[j])
        hm = min(h, v[j])
        if hp + hm <= 0:
            return 0.0
        vp = v.copy()
        vp[j] += hp
        vm = v.copy()
        vm[j] -= hm
        return (objective(vp) - objective(vm)) / (hp + hm)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.asarray(list(pool.map(partial, range(n))))
    return np.asarray([partial(j) for j in range(n)])


def optimize_projected_gradient(
    model: EpidemicModel,
    budget: float,
    init=None,
    tol_kkt: float = 1e-6,
    max_iter: int = 500,
    fd_step: Optional[float] = None,
    threads: int = 1,
) -> OptimizerReport:
    """Maximize integral S_inf + integral v by projected gradient ascent.

    Gradients come from central finite differences of the final-size
    objective; the feasible set is the box 0 <= v <= S0 intersected with
    the budget half-space, whose projection is exact. Backtracking halves
    the step until ascent; the run stops at a small projected-gradient
    norm, at max_iter, or on a backtracking stall.
    """
    s0_scale = float(np.max(model.s0))
    h = fd_step if fd_step is not None else 1e-6 * s0_scale
    w = model.grid.weights

    def objective(vv):
        return objective_ivp(model, vv)

    v = (
        project_allocation(model, allocation_values(init), budget)
        if init is not None
        else np.zeros(model.grid.n)
    )
    obj = objective(v)
    history = [(0, obj)]
    kkt = np.inf
    stalled = False
    alpha = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        g = _fd_gradient(model, objective, v, h, threads=threads)
        # Ascent direction as a density: divide out the quadrature weights.
        d = g / w
        kkt = float(np.max(np.abs(project_allocation(model, v + d, budget) - v)))
        if kkt <= tol_kkt:
            break
        improved = False
        alpha = min(alpha * 2, 1e6)
        for _ in range(41):
            trial = project_allocation(model, v + alpha * d, budget)
            trial_obj = objective(trial)
            if trial_obj > obj:
                v, obj = trial, trial_obj
                improved = True
                break
            alpha /= 2
        history.append((it, obj))
        if not improved:
            stalled = True
            break

    return OptimizerReport(
        allocation=StaticAllocation(model.grid, v),
        objective=obj,
        iterations=it,
        kkt_residual=kkt,
        history=history,
        stalled=stalled,
    )


def sweep_budget(model: EpidemicModel, budgets, allow_nonseparable: bool = False):
    """Bathtub objective N*(v_m) along a budget ladder; nondecreasing in m."""
    out = []
    for m in budgets:
        tub = bathtub_allocate(model, float(m), allow_nonseparable=allow_nonseparable)
        out.append((float(m), objective_ivp(model, tub.allocation)))
    return out
