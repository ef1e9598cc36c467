"""Dense linear algebra on generator matrices in the weighted L2 geometry.

Everything here is desk scale (n up to ~2000): adjoints with respect to the
quadrature measure, full complex spectra with a residual contract, Perron
principal eigenpairs by shifted power iteration, commutator-based normality
defects, and shifted resolvent solves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    NumericError,
    SingularShiftError,
    StructureError,
)
from .model import Measure, norm2

__all__ = [
    "SpectrumReport",
    "adjoint",
    "spectrum",
    "principal_eigenpair",
    "normality_defect",
    "self_adjointness_defect",
    "resolvent_solve",
]

SPECTRUM_RESIDUAL_RTOL = 1e-8
RESOLVENT_RESIDUAL_RTOL = 1e-10
POWER_ITERATION_TOL = 1e-12
POWER_ITERATION_CAP = 10**5
GAP_TOL_RTOL = 1e-9


def _square(A, name="matrix"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A


def adjoint(A, m: Measure) -> np.ndarray:
    """Adjoint with respect to the weighted inner product:
    A*_ij = A_ji w_j / w_i, so that (A u | v) = (u | A* v)."""
    A = _square(A)
    if A.shape[0] != m.n:
        raise DimensionError(f"matrix size {A.shape[0]} != measure size {m.n}")
    w = m.weights
    return (A.T * w[None, :]) / w[:, None]


@dataclass
class SpectrumReport:
    """All complex eigenvalues, sorted by (real, imag), with residuals."""

    eigenvalues: np.ndarray
    right_eigenvectors: np.ndarray | None
    max_real_part: float
    gap: float
    max_residual: float

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    def min_real_part(self) -> float:
        return float(self.eigenvalues.real.min())


def _symmetrize_conjugate_pairs(ev: np.ndarray) -> np.ndarray:
    """Make the spectrum of a real matrix exactly closed under conjugation."""
    ev = ev.copy()
    scale = max(np.abs(ev).max(initial=0.0), 1.0)
    used = np.zeros(ev.size, dtype=bool)
    order = np.argsort(-np.abs(ev.imag))
    for i in order:
        if used[i] or abs(ev[i].imag) <= 1e-14 * scale:
            continue
        # nearest unused candidate for the conjugate partner
        cand = [j for j in range(ev.size) if not used[j] and j != i]
        if not cand:
            break
        j = min(cand, key=lambda k: abs(ev[k] - np.conj(ev[i])))
        if abs(ev[j] - np.conj(ev[i])) <= 1e-6 * scale:
            z = 0.5 * (ev[i] + np.conj(ev[j]))
            ev[i], ev[j] = z, np.conj(z)
            used[i] = used[j] = True
    small = np.abs(ev.imag) <= 1e-14 * scale
    ev[small] = ev[small].real
    return ev


def spectrum(A, want_vectors: bool = True) -> SpectrumReport:
    """Full complex spectrum of a real square matrix.

    Conjugate-pair symmetry is enforced for real input, eigenvalues are sorted
    lexicographically by (real, imag), and each returned pair satisfies
    ||(A - lambda I) v||_2 <= 1e-8 ||A||_2.
    """
    A = _square(A)
    n = A.shape[0]
    try:
        ev, V = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed to converge: {exc}") from exc
    ev = _symmetrize_conjugate_pairs(ev)
    order = np.lexsort((ev.imag, ev.real))
    ev = ev[order]
    V = V[:, order]
    nrmA = float(np.linalg.norm(A, 2)) if n > 0 else 0.0
    res = np.linalg.norm(A @ V - V * ev[None, :], axis=0)
    max_res = float(res.max(initial=0.0))
    if max_res > SPECTRUM_RESIDUAL_RTOL * max(nrmA, 1e-300):
        raise NumericError(
            f"spectrum residual {max_res:.3e} exceeds contract "
            f"{SPECTRUM_RESIDUAL_RTOL:.0e} * ||A||_2 = {SPECTRUM_RESIDUAL_RTOL * nrmA:.3e}"
        )
    scale = max(np.abs(ev).max(initial=0.0), 1.0)
    positive = ev.real[ev.real > GAP_TOL_RTOL * scale]
    gap = float(positive.min()) if positive.size else math.inf
    return SpectrumReport(
        eigenvalues=ev,
        right_eigenvectors=V if want_vectors else None,
        max_real_part=float(ev.real.max()),
        gap=gap,
        max_residual=max_res,
    )


def principal_eigenpair(A, m: Measure, start=None):
    """Minimal-real-part eigenpair of a Z-like matrix.

    Shifted power iteration on ``s I - A`` with ``s = 2 max|A_ii| + 1`` and the
    deterministic all-ones start vector (a custom positive ``start`` may be
    supplied), stopping when Rayleigh-quotient increments fall below 1e-12
    relative.  A short inverse-iteration polish then drives the eigenvector
    residual to roundoff, which the plain power method cannot guarantee when
    the subdominant ratio is close to 1.

    Returns ``(lambda1, eigvec)`` with eigvec > 0 and ||eigvec||_2 = 1 in L2(mu).
    """
    A = _square(A)
    n = A.shape[0]
    if n != m.n:
        raise DimensionError(f"matrix size {n} != measure size {m.n}")
    w = m.weights
    s = 2.0 * float(np.abs(np.diag(A)).max(initial=0.0)) + 1.0
    B = s * np.eye(n) - A
    x = np.ones(n) if start is None else np.asarray(start, dtype=float).copy()
    if x.shape != (n,) or (x <= 0).any():
        raise DimensionError("start vector must be positive of matching length")
    x /= math.sqrt(float(np.sum(w * x * x)))
    rq = float(np.sum(w * x * (B @ x)))
    converged = False
    for _ in range(POWER_ITERATION_CAP):
        y = B @ x
        ny = math.sqrt(float(np.sum(w * y * y)))
        if ny == 0.0:
            raise NumericError("power iteration collapsed to zero vector")
        x = y / ny
        rq_new = float(np.sum(w * x * (B @ x)))
        if abs(rq_new - rq) <= POWER_ITERATION_TOL * max(abs(rq_new), 1.0):
            rq = rq_new
            converged = True
            break
        rq = rq_new
    if not converged:
        raise NumericError(
            f"power iteration did not converge within {POWER_ITERATION_CAP} iterations"
        )
    # Inverse-iteration polish toward the Perron vector of B.
    scaleB = max(float(np.abs(B).max()), 1.0)
    for _ in range(8):
        res = float(norm2(B @ x - rq * x, m))
        if res <= 1e-13 * scaleB:
            break
        shift = rq * (1.0 + 1e-10) + 1e-300
        try:
            y = np.linalg.solve(B - shift * np.eye(n), x)
        except np.linalg.LinAlgError:
            break
        ny = math.sqrt(float(np.sum(w * y * y)))
        if not np.isfinite(ny) or ny == 0.0:
            break
        y /= ny
        if float(np.sum(w * y * x)) < 0:
            y = -y
        x = y
        rq = float(np.sum(w * x * (B @ x)))
    if x[0] < 0:
        x = -x
    # a component indistinguishable from zero at double precision violates
    # the interior positivity that irreducibility guarantees
    if (x <= 0).any() or float(x.min()) <= 1e-14 * float(x.max()):
        raise StructureError(
            "principal eigenvector has a nonpositive component; "
            "the generator is not irreducible"
        )
    lam1 = s - rq
    return float(lam1), x


def normality_defect(A, m: Measure) -> float:
    """Relative Frobenius norm of the commutator [A, A*] in L2(mu)."""
    A = _square(A)
    Astar = adjoint(A, m)
    comm = A @ Astar - Astar @ A
    denom = max(float(np.linalg.norm(A, "fro")) ** 2, 1e-300)
    return float(np.linalg.norm(comm, "fro")) / denom


def self_adjointness_defect(A, m: Measure) -> float:
    """Relative Frobenius norm of A - A* in L2(mu)."""
    A = _square(A)
    diff = A - adjoint(A, m)
    denom = max(float(np.linalg.norm(A, "fro")), 1e-300)
    return float(np.linalg.norm(diff, "fro")) / denom


def resolvent_solve(A, shift, f) -> np.ndarray:
    """Solve (A - shift I) v = f with residual at most 1e-10 ||f||_2."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"matrix must be square, got shape {A.shape}")
    n = A.shape[0]
    f = np.asarray(f)
    if f.shape != (n,):
        raise DimensionError(f"right-hand side has shape {f.shape}, expected ({n},)")
    dtype = complex if (np.iscomplexobj(A) or np.iscomplexobj(f) or np.iscomplexobj(shift)) else float
    B = A.astype(dtype) - np.asarray(shift, dtype=dtype) * np.eye(n)
    try:
        v = np.linalg.solve(B, f.astype(dtype))
    except np.linalg.LinAlgError as exc:
        raise SingularShiftError(f"shift {shift} is an eigenvalue: {exc}") from exc
    if not np.isfinite(v).all():
        raise SingularShiftError(f"shift {shift} produced a non-finite solution")
    nf = float(np.linalg.norm(f))
    res = float(np.linalg.norm(B @ v - f))
    if res > RESOLVENT_RESIDUAL_RTOL * max(nf, 1e-300):
        raise SingularShiftError(
            f"resolvent residual {res:.3e} exceeds {RESOLVENT_RESIDUAL_RTOL:.0e} ||f||; "
            f"shift {shift} is numerically in the spectrum"
        )
    return v
