import numpy as np
import pytest

from agevax import (
    AgeGrid,
    EpidemicModel,
    Kernel,
    SeparablePlan,
    SimConfig,
    StaticAllocation,
    TabulatedPlan,
    check_plan_admissible,
    check_static_admissible,
    zero_plan,
)
from agevax.harness import MollifierProfile


def _tiny_model(n=9):
    grid = AgeGrid.uniform(1.0, n)
    return EpidemicModel(
        grid=grid,
        beta=Kernel(grid, np.full((n, n), 2.0)),
        mu=np.ones(n),
        s0=np.ones(n),
        i0=np.full(n, 1e-3),
    )


def test_model_validation():
    grid = AgeGrid.uniform(1.0, 5)
    beta = Kernel(grid, np.ones((5, 5)))
    with pytest.raises(ValueError):
        EpidemicModel(grid, beta, mu=np.zeros(5), s0=np.ones(5), i0=np.ones(5))
    with pytest.raises(ValueError):
        EpidemicModel(grid, beta, mu=np.ones(5), s0=np.zeros(5), i0=np.ones(5))
    with pytest.raises(ValueError):
        EpidemicModel(grid, beta, mu=np.ones(5), s0=np.ones(5), i0=-np.ones(5))
    with pytest.raises(ValueError):
        EpidemicModel(grid, beta, mu=np.ones(5), s0=np.ones(5), i0=np.zeros(5))


def test_separable_profile_detection(sep_model, paper_model_small):
    profile = sep_model.separable_profile()
    assert profile is not None
    assert np.allclose(profile, sep_model.beta.values[0])
    assert paper_model_small.separable_profile() is None


def test_exponential_plan_total_dose():
    model = _tiny_model()
    v = np.linspace(0.1, 0.5, model.grid.n)
    horizon = 2.0
    plan = SeparablePlan(
        model.grid,
        profile=lambda t: np.exp(-t),
        density=v,
        horizon=horizon,
        profile_mass=1.0 - np.exp(-horizon),
    )
    assert np.allclose(plan.nu_infinity(), (1 - np.exp(-horizon)) * v)
    assert np.all(zero_plan(model.grid).nu_infinity() == 0.0)


def test_tabulated_plan_interpolation_and_mass():
    model = _tiny_model()
    times = np.array([0.0, 1.0, 2.0])
    table = np.stack([np.zeros(9), np.ones(9), np.zeros(9)])
    plan = TabulatedPlan(model.grid, times, table)
    assert np.allclose(plan.rate(0.5), 0.5)
    assert np.allclose(plan.rate(3.0), 0.0)
    # trapezoid in time: total dose 1.0 per node
    assert np.allclose(plan.nu_infinity(), 1.0)
    assert plan.horizon == 2.0


def test_static_admissibility():
    model = _tiny_model()
    total = model.grid.integrate(model.s0)
    assert check_static_admissible(model, model.s0, total)
    report = check_static_admissible(model, 2.0 * model.s0, total)
    assert not report
    assert "allocation exceeds s0 pointwise" in report.violations
    report = check_static_admissible(model, -model.s0, total)
    assert "negative allocation value" in report.violations
    report = check_static_admissible(model, model.s0, total / 2)
    assert "allocation mass exceeds budget" in report.violations


def test_plan_admissibility_by_simulation():
    model = _tiny_model()
    budget = model.grid.integrate(model.s0)
    ok = check_plan_admissible(
        model, zero_plan(model.grid), budget, SimConfig(dt=0.01, t_max=1.0)
    )
    assert ok

    # density 2*S0 delivered in a short bump must drive S negative
    eps = 0.05
    bad = SeparablePlan(
        model.grid,
        MollifierProfile(eps),
        2.0 * model.s0,
        horizon=eps,
        profile_mass=1.0,
    )
    report = check_plan_admissible(model, bad, 10 * budget, SimConfig(dt=1e-3, t_max=1.0))
    assert not report.admissible


def test_static_allocation_total():
    model = _tiny_model()
    alloc = StaticAllocation(model.grid, 0.5 * model.s0)
    assert alloc.total == pytest.approx(0.5 * model.grid.integrate(model.s0))
