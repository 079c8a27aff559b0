"""Ready-made model builders used by the CLI defaults and the test suite."""
from __future__ import annotations

import numpy as np

from .grid import AgeGrid, Kernel
from .model import EpidemicModel

__all__ = ["homogeneous_model", "separable_model", "gaussian_kernel_model"]


def homogeneous_model(
    n: int = 101,
    beta: float = 2.0,
    mu: float = 1.0,
    s0: float = 1.0,
    i0: float = 1e-4,
    a_max: float = 1.0,
) -> EpidemicModel:
    """Constant coefficients on [0, a_max]; everything has a closed form."""
    grid = AgeGrid.uniform(a_max, n)
    return EpidemicModel(
        grid=grid,
        beta=Kernel(grid, np.full((n, n), beta)),
        mu=np.full(n, mu),
        s0=np.full(n, s0),
        i0=np.full(n, i0),
    )


def separable_model(
    n: int = 16,
    a_max: float = 1.0,
    beta_lo: float = 2.0,
    beta_hi: float = 4.0,
    mu: float = 1.0,
    s0: float = 1.0,
    i0: float = 1e-3,
) -> EpidemicModel:
    """Kernel beta(y) increasing linearly in y; mu constant.

    The ratio beta/mu is strictly monotone, so the bathtub allocation is an
    age band at the top of the interval.
    """
    grid = AgeGrid.uniform(a_max, n)
    beta_y = beta_lo + (beta_hi - beta_lo) * grid.nodes / a_max
    return EpidemicModel(
        grid=grid,
        beta=Kernel(grid, np.tile(beta_y, (n, 1))),
        mu=np.full(n, mu),
        s0=np.full(n, s0),
        i0=np.full(n, i0),
    )


def gaussian_kernel_model(
    n: int = 201,
    a_max: float = 1.0,
    b: float = 0.05,
    sigma_beta: float = 0.05,
    m_mu: float = 0.4,
    q_mu: float = 0.1,
    s0_xbar: float = 0.3,
    s0_sigma: float = 0.5,
    i0: float = 1e-4,
) -> EpidemicModel:
    """Gaussian contact kernel, affine mortality, Gaussian initial susceptibles."""
    grid = AgeGrid.uniform(a_max, n)
    x = grid.nodes
    beta = b * np.exp(-((x[:, np.newaxis] - x[np.newaxis, :]) ** 2) / sigma_beta)
    mu = m_mu * x + q_mu
    s0 = np.exp(-0.5 * ((x - s0_xbar) / s0_sigma) ** 2) / (s0_sigma * np.sqrt(2 * np.pi))
    return EpidemicModel(
        grid=grid,
        beta=Kernel(grid, beta),
        mu=mu,
        s0=s0,
        i0=np.full(n, i0),
    )
