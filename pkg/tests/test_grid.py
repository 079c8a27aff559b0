import numpy as np
import pytest
from scipy.integrate import quad

from agevax import AgeDensity, AgeGrid, GridMismatchError, Kernel, apply_kernel


def test_constant_integrates_to_length():
    grid = AgeGrid.uniform(1.0, 11)
    assert grid.integrate(np.ones(11)) == pytest.approx(1.0)
    assert grid.integrate(np.zeros(11)) == 0.0


def test_linear_exact():
    grid = AgeGrid.uniform(1.0, 101)
    # trapezoid is exact on linear integrands
    assert abs(grid.integrate(grid.nodes) - 0.5) < 1e-12


def test_weights_match_numpy_trapz(rng):
    grid = AgeGrid.uniform(2.5, 37)
    f = rng.standard_normal(37)
    assert grid.integrate(f) == pytest.approx(np.trapezoid(f, grid.nodes), abs=1e-14)


def test_grid_validation():
    with pytest.raises(ValueError):
        AgeGrid.uniform(-1.0, 10)
    with pytest.raises(ValueError):
        AgeGrid.uniform(1.0, 1)
    grid = AgeGrid.uniform(1.0, 5)
    with pytest.raises(GridMismatchError):
        grid.integrate(np.ones(6))


def test_constant_kernel_apply():
    grid = AgeGrid.uniform(1.0, 21)
    k = Kernel(grid, np.ones((21, 21)))
    out = apply_kernel(k, AgeDensity(grid, np.ones(21)))
    assert np.allclose(out.values, 1.0)
    zero = apply_kernel(k, AgeDensity(grid, np.zeros(21)))
    assert np.all(zero.values == 0.0)


def test_gaussian_kernel_against_adaptive_quadrature():
    # independent 1-D oracle for the kernel application at one age
    grid = AgeGrid.uniform(1.0, 201)
    x = grid.nodes
    k = Kernel(grid, np.exp(-((x[:, None] - x[None, :]) ** 2) / 0.05))
    out = k.apply(np.ones(201))
    x0 = 0.5
    ref, _ = quad(lambda y: np.exp(-((x0 - y) ** 2) / 0.05), 0.0, 1.0, epsabs=1e-12)
    j = int(np.argmin(np.abs(x - x0)))
    assert abs(out[j] - ref) < 1e-6


def test_kernel_validation():
    grid = AgeGrid.uniform(1.0, 4)
    with pytest.raises(GridMismatchError):
        Kernel(grid, np.ones((3, 3)))
    with pytest.raises(ValueError):
        Kernel(grid, -np.ones((4, 4)))
    with pytest.raises(ValueError):
        Kernel(grid, np.full((4, 4), np.nan))


def test_row_profile_detection(rng):
    grid = AgeGrid.uniform(1.0, 8)
    profile = 1.0 + grid.nodes
    sep = Kernel(grid, np.tile(profile, (8, 1)))
    assert np.allclose(sep.row_profile(), profile)
    full = Kernel(grid, 1.0 + rng.random((8, 8)))
    assert full.row_profile() is None
