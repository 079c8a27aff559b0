"""Time-dependent objective and the equivalence with the static problem.

The dynamic objective N(nu) = integral S_inf + total doses is evaluated by
simulation. Concentrating a static allocation v near t = 0 with a
mollified plan nu_eps(t, x) = (1/eps) phi(t/eps) v(x) drives N(nu_eps) to
the static value N*(v), and for every plan N(nu) <= N*(nu_inf); both facts
are witnessed numerically here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .dynamics import SimConfig, Trajectory, simulate
from .errors import IntegrationError
from .finalsize import objective_ivp, solve_final_size
from .grid import AgeGrid
from .model import EpidemicModel, SeparablePlan, VaccinationPlan, allocation_values

__all__ = [
    "MollifierProfile",
    "mollified_plan",
    "PlanOutcome",
    "objective_ovp",
    "EquivalenceEntry",
    "EquivalenceReport",
    "maximizing_sequence",
    "AuditEntry",
    "upper_bound_audit",
]


@dataclass(frozen=True)
class MollifierProfile:
    """Unit-mass bump (1/eps) * (1 - cos(2 pi t / eps)) supported in [0, eps]."""

    epsilon: float

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    def __call__(self, t: float) -> float:
        if t < 0 or t > self.epsilon:
            return 0.0
        return (1.0 - math.cos(2 * math.pi * t / self.epsilon)) / self.epsilon


def mollified_plan(
    model: EpidemicModel, v, epsilon: float, cap_margin: Optional[float] = 1e-6
) -> SeparablePlan:
    """Plan delivering v(x) over [0, epsilon] through the mollifier bump.

    cap_margin keeps the density strictly below S0 (the density step of the
    equivalence argument); pass None to deliver v as given and rely on the
    integrator's positivity guard.
    """
    density = allocation_values(v).copy()
    if cap_margin is not None:
        density = np.minimum(density, (1 - cap_margin) * model.s0)
    return SeparablePlan(
        model.grid,
        MollifierProfile(epsilon),
        density,
        horizon=epsilon,
        profile_mass=1.0,
    )


@dataclass(frozen=True)
class PlanOutcome:
    n_value: float
    s_inf: np.ndarray
    nu_delivered: np.ndarray
    trajectory: Trajectory


def _plan_config(plan: VaccinationPlan, config: SimConfig) -> SimConfig:
    """Refine dt on the plan's support: short plans need dt <= horizon / 50."""
    if plan.horizon <= 0:
        return config
    dt_needed = plan.horizon / 50
    if config.dt <= dt_needed:
        return config
    return replace(config, dt=dt_needed, dt_tail=config.dt_tail or config.dt)


def evaluate_plan(model: EpidemicModel, plan: VaccinationPlan, config: SimConfig) -> PlanOutcome:
    traj = simulate(model, plan, _plan_config(plan, config))
    if not traj.converged:
        raise IntegrationError(
            f"simulation did not converge by t={traj.t_end:.4g}; "
            f"remaining infectious mass {model.grid.integrate(traj.i[-1]):.3e}"
        )
    delivered = traj.v_cum[-1]
    n_value = model.grid.integrate(traj.s_inf) + model.grid.integrate(delivered)
    return PlanOutcome(n_value=n_value, s_inf=traj.s_inf, nu_delivered=delivered, trajectory=traj)


def objective_ovp(model: EpidemicModel, plan: VaccinationPlan, config: SimConfig) -> float:
    """N(nu): survivors after the epidemic plus everyone vaccinated."""
    return evaluate_plan(model, plan, config).n_value


@dataclass(frozen=True)
class EquivalenceEntry:
    epsilon: float
    admissible: bool
    n_value: float
    gap: float
    rescaled_deviation: float  # sup |S(eps,.) - (S0 - nu_inf)|
    conservation_rate: float = math.nan


@dataclass(frozen=True)
class EquivalenceReport:
    v: np.ndarray
    n_star: float
    entries: tuple

    @property
    def gaps(self):
        return [e.gap for e in self.entries if e.admissible]

    def to_dict(self) -> dict:
        return {
            "n_star": self.n_star,
            "v": self.v.tolist(),
            "entries": [
                {
                    "epsilon": e.epsilon,
                    "admissible": e.admissible,
                    "n_value": e.n_value,
                    "gap": e.gap,
                    "rescaled_deviation": e.rescaled_deviation,
                }
                for e in self.entries
            ],
        }


def maximizing_sequence(
    model: EpidemicModel, v, epsilons, config: SimConfig, cap_margin: float = 1e-6
) -> EquivalenceReport:
    """Run the mollified plans nu_eps and report the gap to the static optimum.

    Plans that drive S negative at large eps are marked inadmissible and
    skipped, not fatal.
    """
    v_capped = np.minimum(allocation_values(v), (1 - cap_margin) * model.s0)
    n_star = objective_ivp(model, v_capped)
    entries = []
    for eps in epsilons:
        plan = mollified_plan(model, v_capped, float(eps), cap_margin=None)
        try:
            outcome = evaluate_plan(model, plan, config)
        except IntegrationError:
            entries.append(EquivalenceEntry(float(eps), False, math.nan, math.nan, math.nan))
            continue
        admissible = not outcome.trajectory.clip_events
        traj = outcome.trajectory
        idx = traj.snapshot_index(float(eps), tol=1e-6)
        deviation = float(np.max(np.abs(traj.s[idx] - (model.s0 - v_capped))))
        entries.append(
            EquivalenceEntry(
                epsilon=float(eps),
                admissible=admissible,
                n_value=outcome.n_value,
                gap=abs(n_star - outcome.n_value),
                rescaled_deviation=deviation,
                conservation_rate=traj.conservation_rate,
            )
        )
    return EquivalenceReport(v=v_capped, n_star=n_star, entries=tuple(entries))


@dataclass(frozen=True)
class AuditEntry:
    plan_id: str
    n_value: float
    n_star: float
    slack: float
    max_pointwise_violation: float  # max(S_inf - S*_inf), positive means violation
    passed: bool
    conservation_rate: float = math.nan


def upper_bound_audit(model: EpidemicModel, plans, config: SimConfig):
    """Check N(nu) <= N*(nu_inf) and S_inf <= S*_inf for each plan.

    nu_inf is taken as the dose density actually delivered on the
    trajectory, so clipped plans are audited as the plan they effectively
    were. A violation beyond tolerance is a bug, not a modeling outcome.
    """
    tol_n = 1e-6 * model.grid.integrate(model.s0)
    tol_point = 1e-6 * float(np.max(model.s0))
    entries = []
    for pid, plan in plans:
        outcome = evaluate_plan(model, plan, config)
        delivered = np.clip(outcome.nu_delivered, 0.0, model.s0)
        static = solve_final_size(model, delivered)
        n_star = model.grid.integrate(static.s_inf) + model.grid.integrate(delivered)
        slack = n_star - outcome.n_value
        worst = float(np.max(outcome.s_inf - static.s_inf))
        entries.append(
            AuditEntry(
                plan_id=str(pid),
                n_value=outcome.n_value,
                n_star=n_star,
                slack=slack,
                max_pointwise_violation=worst,
                passed=(slack >= -tol_n) and (worst <= tol_point),
                conservation_rate=outcome.trajectory.conservation_rate,
            )
        )
    return entries
