"""Post-epidemic final sizes without time integration.

S_inf solves the nonlinear fixed-point equation

    S(x) = (S0 - v)(x) * exp( integral beta(x,y)/mu(y) [S - (I0 + S0 - v)](y) dy ).

The map is order-preserving, so iterating it from 0 (below) and from
S0 - v (above) sandwiches the unique fixed point and certifies it by the
vanishing gap. When the kernel depends on y only, the problem collapses to
one scalar relation sigma_inf e^{-sigma_inf} = sigma_0 e^{-sigma_0} eta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonSeparableKernelError, SolverError
from .model import EpidemicModel, allocation_values

__all__ = [
    "FinalSizeSolution",
    "ScalarSummary",
    "solve_final_size",
    "solve_final_size_separable",
    "objective_ivp",
]

_MAX_ITER = 10_000
_STALL_WINDOW = 50


@dataclass(frozen=True)
class FinalSizeSolution:
    s_inf: np.ndarray
    iterations: int
    residual: float
    bracket: tuple  # (lower, upper) final iterates


@dataclass(frozen=True)
class ScalarSummary:
    sigma0: float
    sigma_inf: float
    eta: float


def _prepared(model: EpidemicModel, v):
    vv = allocation_values(v)
    if vv.shape != (model.grid.n,):
        raise ValueError("allocation has wrong length")
    tol_point = 1e-9 * float(np.max(model.s0))
    if np.any(vv < -tol_point) or np.any(vv > model.s0 + tol_point):
        raise ValueError("allocation violates 0 <= v <= s0")
    remaining = np.clip(model.s0 - vv, 0.0, None)
    return vv, remaining


def solve_final_size(model: EpidemicModel, v=None) -> FinalSizeSolution:
    """Monotone sandwich iteration for the final-size fixed point."""
    if v is None:
        v = np.zeros(model.grid.n)
    _, remaining = _prepared(model, v)
    cw = model.contamination_weighted
    base = cw @ (model.i0 + remaining)

    def phi(s):
        return remaining * np.exp(cw @ s - base)

    lower = np.zeros(model.grid.n)
    upper = remaining.copy()
    tol = 1e-12 * float(np.max(model.s0))
    gap = float(np.max(upper - lower))
    best_gap = gap
    stall = 0
    for it in range(1, _MAX_ITER + 1):
        lower = phi(lower)
        upper = phi(upper)
        gap = float(np.max(upper - lower))
        if gap <= tol:
            break
        if gap < best_gap * (1 - 1e-15):
            best_gap = gap
            stall = 0
        else:
            stall += 1
            if stall >= _STALL_WINDOW:
                raise SolverError(
                    f"final-size sandwich stalled after {it} iterations "
                    f"(gap {gap:.3e}, tol {tol:.3e})"
                )
    else:
        raise SolverError(f"final-size sandwich hit {_MAX_ITER} iterations (gap {gap:.3e})")

    s_inf = (lower + upper) / 2
    residual = float(np.max(np.abs(s_inf - phi(s_inf))))
    return FinalSizeSolution(s_inf=s_inf, iterations=it, residual=residual, bracket=(lower, upper))


def _f(x):
    return x * math.exp(-x)


def solve_final_size_separable(model: EpidemicModel, v=None):
    """Scalar reduction for kernels with beta(x, y) = beta(y).

    Returns (FinalSizeSolution, ScalarSummary).
    """
    if v is None:
        v = np.zeros(model.grid.n)
    profile = model.separable_profile()
    if profile is None:
        raise NonSeparableKernelError("kernel rows differ: scalar reduction unavailable")
    _, remaining = _prepared(model, v)
    w = model.grid.weights
    bm = profile / model.mu

    sigma0 = float(w @ (bm * remaining))
    eta = math.exp(-float(w @ (bm * model.i0)))

    if sigma0 <= 0:
        sigma_inf = 0.0
        iterations = 0
    else:
        target = _f(sigma0) * eta
        lo, hi = 0.0, min(sigma0, 1.0)
        if _f(hi) < target:
            raise SolverError(
                f"bisection bracket failure: f({hi:.6g}) < f(sigma0)*eta = {target:.6g}"
            )
        iterations = 0
        for iterations in range(1, 201):
            mid = (lo + hi) / 2
            if _f(mid) < target:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-16 * max(1.0, sigma0):
                break
        sigma_inf = (lo + hi) / 2

    factor = math.exp(sigma_inf - sigma0) * eta
    s_inf = remaining * factor
    residual = abs(_f(sigma_inf) - _f(sigma0) * eta)
    solution = FinalSizeSolution(
        s_inf=s_inf, iterations=iterations, residual=residual, bracket=(s_inf, s_inf)
    )
    return solution, ScalarSummary(sigma0=sigma0, sigma_inf=sigma_inf, eta=eta)


def objective_ivp(model: EpidemicModel, v=None) -> float:
    """Surviving population for a static allocation: integral S_inf + integral v.

    In the separable case the closed-form value m + (|S0| - m) e^(sigma_inf
    - sigma_0) eta is computed as well and must agree.
    """
    if v is None:
        v = np.zeros(model.grid.n)
    vv = allocation_values(v)
    sol = solve_final_size(model, vv)
    w = model.grid.weights
    value = float(w @ sol.s_inf) + float(w @ vv)

    if model.separable_profile() is not None:
        _, summary = solve_final_size_separable(model, vv)
        m = float(w @ vv)
        s0_total = float(w @ model.s0)
        closed = m + (s0_total - m) * math.exp(summary.sigma_inf - summary.sigma0) * summary.eta
        if abs(closed - value) > 1e-9 * max(1.0, s0_total):
            raise SolverError(
                f"separable closed form {closed:.12g} disagrees with quadrature value {value:.12g}"
            )
    return value
