"""Change of variables v = u / u_star that moves the equilibrium to the
constant vector 1.

The reduced generator keeps the Feller structure (zero row sums, Metzler sign
pattern, irreducibility), the reduced competition weight is normalized to
total mass one, and the reduced susceptibility retains the coupling factor
<c, u_star^p> so that the rank-one competition operator is unchanged:
b_tilde (x) c_tilde = b (x) (u_star^p * c).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError
from .model import (
    FellerMatrix,
    Measure,
    ModelSpec,
    ValidationReport,
    inner_product,
)
from .operators import normality_defect
from .stationary import StationaryState, powp

__all__ = ["ReducedModel", "reduce_model", "verify_reduced", "reduced_spec"]

ROW_SUM_TOL = 1e-10
C_MASS_TOL = 1e-12


@dataclass(frozen=True)
class ReducedModel:
    m_tilde: FellerMatrix
    b_tilde: np.ndarray
    c_tilde: np.ndarray
    measure: Measure
    p: float
    grid_origin: bool = False

    @property
    def n(self) -> int:
        return self.measure.n

    @property
    def M(self) -> np.ndarray:
        return self.m_tilde.entries


def reduce_model(spec: ModelSpec, st: StationaryState) -> ReducedModel:
    """Build the reduced model from a spec and its stationary state."""
    u = np.asarray(st.u_star, dtype=float)
    if (u <= 0).any():
        raise DomainError("stationary state must be strictly positive")
    M = spec.M
    m_tilde = M * (u[None, :] / u[:, None])
    np.fill_diagonal(m_tilde, 0.0)
    # diagonal from the full formula M_ii - (M u)_i / u_i; rewriting through
    # the off-diagonal sums keeps the row sums of the result exactly zero
    np.fill_diagonal(m_tilde, -m_tilde.sum(axis=1))
    kappa = float(inner_product(spec.c, powp(u, spec.p), spec.measure))
    b_tilde = kappa * spec.b
    c_tilde = powp(u, spec.p) * spec.c / kappa
    red = ReducedModel(
        m_tilde=FellerMatrix(m_tilde, spec.measure),
        b_tilde=b_tilde,
        c_tilde=c_tilde,
        measure=spec.measure,
        p=spec.p,
        grid_origin=spec.grid_origin,
    )
    report = verify_reduced(red)
    if not report.passed:
        raise NumericError(
            "reduction produced an invalid model: " + "; ".join(report.messages)
        )
    return red


def verify_reduced(red: ReducedModel) -> ValidationReport:
    """Re-check the reduced-model invariants; the normality defect of the
    reduced generator is appended to the messages."""
    gen = red.m_tilde
    msgs = []
    enn = gen.is_essentially_nonnegative()
    if not enn:
        msgs.append("reduced generator is not essentially nonnegative")
    scale = max(np.abs(gen.entries).max(initial=0.0), 1.0)
    zrs = bool(np.abs(gen.entries.sum(axis=1)).max() <= ROW_SUM_TOL * scale)
    if not zrs:
        msgs.append("reduced generator row sums do not vanish")
    irr = gen.is_irreducible()
    if not irr:
        msgs.append("reduced generator is not irreducible")
    c_mass = float(inner_product(np.ones(red.n), red.c_tilde, red.measure))
    pos = bool((red.b_tilde > 0).all() and (red.c_tilde > 0).all())
    if abs(c_mass - 1.0) > C_MASS_TOL:
        pos = False
        msgs.append(f"reduced competition weight has mass {c_mass!r}, expected 1")
    defect = normality_defect(-gen.entries, red.measure)
    msgs.append(f"normality defect of reduced generator: {defect:.6e}")
    return ValidationReport(
        essentially_nonnegative=enn,
        irreducible=irr,
        zero_row_sum=zrs,
        positive_coefficients=pos,
        messages=msgs,
    )


def reduced_spec(red: ReducedModel, name: str = "reduced") -> ModelSpec:
    """The reduced model as a ModelSpec whose equilibrium is the constant 1
    (growth rate equals the reduced susceptibility)."""
    return ModelSpec(
        n=red.n,
        generator=red.m_tilde,
        r=red.b_tilde.copy(),
        b=red.b_tilde.copy(),
        c=red.c_tilde.copy(),
        p=red.p,
        name=name,
        grid_origin=red.grid_origin,
    )
