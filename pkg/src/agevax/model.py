"""Problem data and admissibility of vaccination controls.

An :class:`EpidemicModel` bundles the transmission kernel, the mortality
rate and the initial densities. Controls come in two flavours: a static
pre-epidemic allocation v(x) with 0 <= v <= S0, and a time-dependent plan
nu(t, x) that is applied while the epidemic runs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .errors import GridMismatchError
from .grid import AgeGrid, Kernel, _check_values, _frozen

__all__ = [
    "EpidemicModel",
    "StaticAllocation",
    "VaccinationPlan",
    "SeparablePlan",
    "TabulatedPlan",
    "zero_plan",
    "nu_infinity",
    "AdmissibilityReport",
    "check_static_admissible",
    "check_plan_admissible",
]


@dataclass(frozen=True)
class EpidemicModel:
    """Kernel beta(x, y), mortality mu(x) > 0, initial densities S0 > 0, I0 >= 0."""

    grid: AgeGrid
    beta: Kernel
    mu: np.ndarray
    s0: np.ndarray
    i0: np.ndarray

    def __post_init__(self):
        if not self.grid.same_as(self.beta.grid):
            raise GridMismatchError("beta kernel grid differs from model grid")
        mu = _check_values(self.grid, self.mu, "mu")
        s0 = _check_values(self.grid, self.s0, "s0")
        i0 = _check_values(self.grid, self.i0, "i0")
        if np.any(mu <= 0):
            raise ValueError("mu must be strictly positive everywhere")
        if np.any(s0 <= 0):
            raise ValueError("s0 must be strictly positive everywhere")
        if np.any(i0 < 0):
            raise ValueError("i0 must be non-negative")
        if self.grid.integrate(i0) <= 0:
            raise ValueError("i0 must carry positive mass")
        object.__setattr__(self, "mu", _frozen(mu))
        object.__setattr__(self, "s0", _frozen(s0))
        object.__setattr__(self, "i0", _frozen(i0))

    @cached_property
    def beta_weighted(self) -> np.ndarray:
        """Matrix for the force of infection: (B i)(x) = integral beta(x,y) i(y) dy."""
        return self.beta.weighted

    @cached_property
    def contamination_weighted(self) -> np.ndarray:
        """Matrix for f |-> integral beta(x,y)/mu(y) f(y) dy."""
        return self.beta.weighted / self.mu[np.newaxis, :]

    @property
    def total_population(self) -> float:
        return self.grid.integrate(self.s0 + self.i0)

    def separable_profile(self, rtol: float = 1e-12):
        """beta(y) if the kernel depends on y only, else None."""
        return self.beta.row_profile(rtol)


@dataclass(frozen=True)
class StaticAllocation:
    """Pre-epidemic allocation v(x); admissibility means 0 <= v <= S0."""

    grid: AgeGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "values", _frozen(_check_values(self.grid, self.values, "allocation"))
        )

    @property
    def total(self) -> float:
        return self.grid.integrate(self.values)


def allocation_values(v) -> np.ndarray:
    """Accept a StaticAllocation or a raw nodal array."""
    if isinstance(v, StaticAllocation):
        return v.values
    return np.asarray(v, dtype=float)


class VaccinationPlan:
    """Time-dependent control nu(t, x). Subclasses fix the representation."""

    grid: AgeGrid
    horizon: float

    def rate(self, t: float) -> np.ndarray:
        """nu(t, .) as a nodal array (zero outside [0, horizon])."""
        raise NotImplementedError

    def nu_infinity(self) -> np.ndarray:
        """x |-> integral_0^horizon nu(t, x) dt."""
        raise NotImplementedError

    @property
    def total_mass(self) -> float:
        return self.grid.integrate(self.nu_infinity())


@dataclass(frozen=True)
class SeparablePlan(VaccinationPlan):
    """nu(t, x) = profile(t) * density(x), supported in [0, horizon].

    profile_mass is the exact time integral of the profile over the
    horizon, so nu_infinity has a closed form.
    """

    grid: AgeGrid
    profile: Callable[[float], float]
    density: np.ndarray
    horizon: float
    profile_mass: float

    def __post_init__(self):
        object.__setattr__(
            self, "density", _frozen(_check_values(self.grid, self.density, "density"))
        )
        if np.any(self.density < 0):
            raise ValueError("plan density must be non-negative")
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")

    def rate(self, t: float) -> np.ndarray:
        if t < 0 or t > self.horizon:
            return np.zeros(self.grid.n)
        p = float(self.profile(t))
        if p < 0:
            raise ValueError(f"plan profile negative at t={t}")
        return p * self.density

    def nu_infinity(self) -> np.ndarray:
        return self.profile_mass * self.density


@dataclass(frozen=True)
class TabulatedPlan(VaccinationPlan):
    """nu given on a time table, linearly interpolated; zero after the last time."""

    grid: AgeGrid
    times: np.ndarray
    table: np.ndarray  # shape (len(times), n)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        table = np.asarray(self.table, dtype=float)
        if times.ndim != 1 or len(times) < 2 or np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing, length >= 2")
        if table.shape != (len(times), self.grid.n):
            raise ValueError("table shape must be (len(times), grid.n)")
        if np.any(table < 0) or not np.all(np.isfinite(table)):
            raise ValueError("table entries must be finite and non-negative")
        object.__setattr__(self, "times", _frozen(times))
        object.__setattr__(self, "table", _frozen(table))

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def rate(self, t: float) -> np.ndarray:
        times = self.times
        if t < times[0] or t > times[-1]:
            return np.zeros(self.grid.n)
        j = int(np.searchsorted(times, t, side="right") - 1)
        if j >= len(times) - 1:
            return self.table[-1].copy()
        w = (t - times[j]) / (times[j + 1] - times[j])
        return (1 - w) * self.table[j] + w * self.table[j + 1]

    def nu_infinity(self) -> np.ndarray:
        return np.trapezoid(self.table, self.times, axis=0)


def zero_plan(grid: AgeGrid) -> SeparablePlan:
    """The no-vaccination control."""
    return SeparablePlan(grid, lambda t: 0.0, np.zeros(grid.n), 0.0, 0.0)


def nu_infinity(plan: VaccinationPlan) -> np.ndarray:
    """Total dose density delivered by the plan."""
    return plan.nu_infinity()


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    violations: tuple
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.admissible


def check_static_admissible(model: EpidemicModel, v, budget: float) -> AdmissibilityReport:
    """Membership of v in {0 <= v <= S0, integral v <= K} with scaled tolerances."""
    if budget < 0:
        raise ValueError("budget must be non-negative")
    vv = allocation_values(v)
    vv = _check_values(model.grid, vv, "allocation")
    tol_point = 1e-9 * float(np.max(model.s0))
    violations = []
    if np.any(vv < -tol_point):
        violations.append("negative allocation value")
    if np.any(vv > model.s0 + tol_point):
        violations.append("allocation exceeds s0 pointwise")
    mass = model.grid.integrate(vv)
    if mass > budget + 1e-9 * max(budget, 1e-300):
        violations.append("allocation mass exceeds budget")
    return AdmissibilityReport(
        admissible=not violations,
        violations=tuple(violations),
        details={"mass": mass, "budget": budget},
    )


def check_plan_admissible(
    model: EpidemicModel,
    plan: VaccinationPlan,
    budget: float,
    config=None,
) -> AdmissibilityReport:
    """Certify plan admissibility a posteriori on the simulated trajectory.

    The trajectory constraint S >= 0 has no static characterization, so the
    plan is run through the integrator: it is admissible when S never drops
    below -tol_S, the positivity guard never had to clip nu, and the total
    dose mass respects the budget.
    """
    from .dynamics import SimConfig, simulate

    if budget < 0:
        raise ValueError("budget must be non-negative")
    if config is None:
        config = SimConfig()
    traj = simulate(model, plan, config)
    tol_s = 1e-9 * float(np.max(model.s0))
    mass = plan.total_mass
    violations = []
    if traj.min_s < -tol_s:
        violations.append("susceptible density driven negative")
    if traj.clip_events:
        violations.append("vaccination rate clipped to keep S non-negative")
    if mass > budget * (1 + 1e-9) + 1e-300:
        violations.append("total dose mass exceeds budget")
    return AdmissibilityReport(
        admissible=not violations,
        violations=tuple(violations),
        details={
            "mass": mass,
            "budget": budget,
            "min_s": traj.min_s,
            "clip_events": len(traj.clip_events),
        },
    )
