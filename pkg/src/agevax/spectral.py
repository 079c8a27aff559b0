"""Principal eigenvalues of the contamination operators.

The threshold operator is L phi = phi - integral k(., y) phi(y) dy with
k(x, y) = beta(x, y) S0(y) / mu(y); its principal eigenvalue is
lambda1 = 1 - rho(M) where rho(M) is the spectral radius of the positive
integral part, obtained by power iteration. The sign of lambda1 classifies
epidemic spread.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError
from .grid import AgeGrid, Kernel
from .model import EpidemicModel

__all__ = [
    "EigenResult",
    "ThresholdResult",
    "principal_eigenvalue",
    "classify_threshold",
    "post_epidemic_eigenvalue",
]

_TOL_EIG = 1e-12
_MAX_ITER = 100_000


@dataclass(frozen=True)
class EigenResult:
    lambda1: float
    rho: float
    phi1: np.ndarray  # positive, sup-norm 1
    iterations: int
    residual: float


@dataclass(frozen=True)
class ThresholdResult:
    spreads: bool
    lambda1: float
    eigen: EigenResult

    @property
    def classification(self) -> str:
        return "Spreads" if self.spreads else "NoSpread"


def principal_eigenvalue(kernel: Kernel, tol: float = _TOL_EIG) -> EigenResult:
    """Power iteration for the principal eigenpair of f |-> integral k(.,y) f(y) dy.

    Entrywise non-negative kernels have a real dominant eigenvalue with a
    non-negative eigenfunction; for strictly positive kernels the
    eigenfunction is strictly positive and convergence is geometric. The
    returned lambda1 = 1 - rho is the principal eigenvalue of the
    associated operator phi - integral k phi.
    """
    grid = kernel.grid
    m = kernel.weighted
    w = grid.weights
    phi = np.ones(grid.n)

    if np.max(np.abs(m)) == 0.0:
        return EigenResult(lambda1=1.0, rho=0.0, phi1=phi, iterations=0, residual=0.0)

    rho = 0.0
    for it in range(1, _MAX_ITER + 1):
        y = m @ phi
        rho_new = float((w * phi) @ y) / float((w * phi) @ phi)
        norm = float(np.max(np.abs(y)))
        if norm == 0.0:
            raise SolverError("power iteration collapsed to the zero vector")
        phi_new = y / norm
        if abs(rho_new - rho) <= tol * max(1.0, abs(rho_new)):
            phi = phi_new
            rho = rho_new
            break
        phi = phi_new
        rho = rho_new
    else:
        raise SolverError(f"power iteration did not settle in {_MAX_ITER} iterations")

    residual = float(np.max(np.abs(m @ phi - rho * phi)))
    return EigenResult(lambda1=1.0 - rho, rho=rho, phi1=phi, iterations=it, residual=residual)


def _weighted_kernel(model: EpidemicModel, density: np.ndarray) -> Kernel:
    values = model.beta.values * (density / model.mu)[np.newaxis, :]
    return Kernel(model.grid, values)


def classify_threshold(model: EpidemicModel) -> ThresholdResult:
    """Spread classification by the sign of the principal eigenvalue.

    lambda1 >= 0 means the epidemic does not spread; lambda1 < 0 means it
    does.
    """
    eigen = principal_eigenvalue(_weighted_kernel(model, model.s0))
    return ThresholdResult(spreads=eigen.lambda1 < 0, lambda1=eigen.lambda1, eigen=eigen)


def post_epidemic_eigenvalue(model: EpidemicModel, s_inf: np.ndarray) -> EigenResult:
    """Principal eigenvalue of the stability operator at the final state.

    Always strictly positive for a converged epidemic; used as an
    invariant check.
    """
    s_inf = np.asarray(s_inf, dtype=float)
    if np.any(s_inf < -1e-9 * np.max(model.s0)):
        raise ValueError("s_inf must be non-negative")
    return principal_eigenvalue(_weighted_kernel(model, np.clip(s_inf, 0.0, None)))
