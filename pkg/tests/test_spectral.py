import numpy as np
import pytest

from agevax import (
    AgeGrid,
    Kernel,
    classify_threshold,
    homogeneous_model,
    post_epidemic_eigenvalue,
    principal_eigenvalue,
    solve_final_size,
)


def test_homogeneous_closed_form():
    # lambda1 = 1 - beta * S0 * |X| / mu
    model = homogeneous_model(n=200, beta=2.0)
    assert classify_threshold(model).lambda1 == pytest.approx(-1.0, abs=1e-8)
    model = homogeneous_model(n=200, beta=0.5)
    result = classify_threshold(model)
    assert result.lambda1 == pytest.approx(0.5, abs=1e-8)
    assert not result.spreads
    assert result.classification == "NoSpread"


def test_rank_one_kernel_explicit_radius(rng):
    grid = AgeGrid.uniform(1.0, 64)
    a = 0.5 + rng.random(64)
    b = 0.5 + rng.random(64)
    k = Kernel(grid, np.outer(a, b))
    # rank-one operator: rho = integral a*b
    rho_ref = grid.integrate(a * b)
    res = principal_eigenvalue(k)
    assert res.lambda1 == pytest.approx(1.0 - rho_ref, abs=1e-10)
    assert np.max(res.phi1) == pytest.approx(1.0)
    assert res.residual < 1e-10


def test_against_dense_eig_oracle(rng):
    grid = AgeGrid.uniform(1.0, 32)
    k = Kernel(grid, 0.1 + rng.random((32, 32)))
    rho_ref = np.max(np.abs(np.linalg.eigvals(k.weighted)))
    res = principal_eigenvalue(k)
    assert res.rho == pytest.approx(rho_ref, rel=1e-10)


def test_zero_kernel():
    grid = AgeGrid.uniform(1.0, 8)
    res = principal_eigenvalue(Kernel(grid, np.zeros((8, 8))))
    assert res.lambda1 == 1.0
    assert res.rho == 0.0


def test_post_epidemic_eigenvalue_positive(hom_model):
    sol = solve_final_size(hom_model)
    res = post_epidemic_eigenvalue(hom_model, sol.s_inf)
    s_star = float(sol.s_inf[0])
    assert res.lambda1 == pytest.approx(1.0 - 2.0 * s_star, abs=1e-8)
    assert res.lambda1 > 0

    zero = post_epidemic_eigenvalue(hom_model, np.zeros(hom_model.grid.n))
    assert zero.lambda1 == 1.0


def test_classification_consistent_with_attack(paper_model_small):
    from agevax import SimConfig, simulate, zero_plan

    result = classify_threshold(paper_model_small)
    traj = simulate(
        paper_model_small, zero_plan(paper_model_small.grid), SimConfig(dt=0.02, t_max=400.0)
    )
    grid = paper_model_small.grid
    attack = grid.integrate(paper_model_small.s0 - traj.s_inf) / grid.integrate(
        paper_model_small.s0
    )
    if result.spreads:
        assert attack > 1e-3
    else:
        assert attack < 1e-3
