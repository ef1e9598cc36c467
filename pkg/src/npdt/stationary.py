"""Positive equilibria and the closed-form nonexistence report.

The unique positive stationary state is the suitably scaled principal
eigenvector of -diag(1/b) M - diag(r/b).  The nonexistence report evaluates
the closed-form continuum-of-measures computation for the nonlocal diffusion
example on the dumbbell domain in R^4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, NoEquilibriumError, NumericError
from .model import ModelSpec, inner_product
from .operators import principal_eigenpair

__all__ = [
    "StationaryState",
    "NonexistenceReport",
    "solve_stationary",
    "stationarity_residual",
    "characteristic_integral",
    "characteristic_integral_quadrature",
    "nonexistence_report",
    "powp",
]

RESIDUAL_RTOL = 1e-8

#: volume of the dumbbell domain (two unit half-balls in R^4 plus a cylinder)
OMEGA_VOLUME = math.pi**2 / 2.0 + 4.0 * math.pi / 3.0


def powp(u, p: float) -> np.ndarray:
    """Componentwise p-th power of a nonnegative vector (p real, >= 1)."""
    u = np.asarray(u, dtype=float)
    if p == 1.0:
        return u.copy()
    if (u < 0).any() and p != int(p):
        raise DomainError("fractional power of a negative component")
    return np.power(u, p)


@dataclass(frozen=True)
class StationaryState:
    u_star: np.ndarray
    lambda1: float
    amplitude: float
    residual: float


def competition_value(spec: ModelSpec, u) -> float:
    """The nonlocal coupling <c, u^p> in L2(mu)."""
    return float(inner_product(spec.c, powp(u, spec.p), spec.measure))


def stationarity_residual(spec: ModelSpec, u) -> float:
    """Sup-norm residual of the stationary equation at u."""
    u = np.asarray(u, dtype=float)
    comp = competition_value(spec, u)
    res = spec.M @ u + u * (spec.r - spec.b * comp)
    return float(np.abs(res).max())


def solve_stationary(spec: ModelSpec) -> StationaryState:
    """Construct the unique positive equilibrium.

    The principal eigenpair (lambda1, v) of -diag(1/b) M - diag(r/b) is
    computed, lambda1 < 0 is asserted, and the equilibrium is A v with the
    amplitude A = (-lambda1 / <c, v^p>)^(1/p).
    """
    A = -np.diag(1.0 / spec.b) @ spec.M - np.diag(spec.r / spec.b)
    lam1, v = principal_eigenpair(A, spec.measure)
    if lam1 >= 0:
        raise NoEquilibriumError(
            f"principal eigenvalue {lam1:.6g} is nonnegative; positive growth "
            "rates force it negative, so the input data is corrupt"
        )
    cvp = float(inner_product(spec.c, powp(v, spec.p), spec.measure))
    amplitude = (-lam1 / cvp) ** (1.0 / spec.p)
    u_star = amplitude * v
    residual = stationarity_residual(spec, u_star)
    tol = RESIDUAL_RTOL * float(np.abs(spec.r).max()) * float(np.abs(u_star).max())
    if residual > tol:
        raise NumericError(
            f"stationary residual {residual:.3e} exceeds tolerance {tol:.3e}"
        )
    return StationaryState(
        u_star=u_star, lambda1=lam1, amplitude=float(amplitude), residual=residual
    )


# ---------------------------------------------------------------------------
# Closed-form nonexistence computations
# ---------------------------------------------------------------------------

def characteristic_integral(A: float, D: float) -> float:
    """Closed form of D * int_0^1 (2 pi^2 rho^3 + 4 pi rho^2) / (A + rho^2) drho."""
    if A <= 0:
        raise DomainError("characteristic integral requires A > 0 (log singularity)")
    if D <= 0:
        raise DomainError("characteristic integral requires D > 0")
    return (
        2.0
        * math.pi
        * D
        * (
            math.pi / 2.0
            - (math.pi * A / 2.0) * math.log(A + 1.0)
            + (math.pi * A / 2.0) * math.log(A)
            + 2.0
            - 2.0 * math.sqrt(A) * math.atan(1.0 / math.sqrt(A))
        )
    )


def characteristic_integral_quadrature(A: float, D: float) -> float:
    """Same integral by adaptive quadrature; the independent cross-check."""
    if A <= 0 or D <= 0:
        raise DomainError("characteristic integral requires A > 0 and D > 0")

    def integrand(rho):
        return (2.0 * math.pi**2 * rho**3 + 4.0 * math.pi * rho**2) / (A + rho**2)

    val, _ = quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)
    return D * val


@dataclass(frozen=True)
class NonexistenceReport:
    """Closed-form description of the continuum of stationary measures."""

    D: float
    omega_volume: float
    total_mass: float
    density_l1: float
    atomic_mass: float
    valid: bool


def nonexistence_report(D: float) -> NonexistenceReport:
    """Masses of the measure family u = f dx + mu_I for diffusion rate D.

    valid is True on the regime 0 < D < 1/(pi^2 + 4 pi) where the atomic part
    carries positive mass.
    """
    if D <= 0:
        raise DomainError("diffusion rate D must be positive")
    total = 2.0 - D * OMEGA_VOLUME
    density = D * (2.0 - D * OMEGA_VOLUME) * (math.pi**2 + 4.0 * math.pi)
    atomic = (2.0 - D * OMEGA_VOLUME) * (1.0 - D * (math.pi**2 + 4.0 * math.pi))
    return NonexistenceReport(
        D=D,
        omega_volume=OMEGA_VOLUME,
        total_mass=total,
        density_l1=density,
        atomic_mass=atomic,
        valid=bool(atomic > 0 and total > 0),
    )
