"""Stability decision ladder for the reduced model.

Contains the linearization around the constant equilibrium, the spectral gap
of the weighted symmetric part off constants, the individual sufficient
conditions for local and global asymptotic stability (with their geometric
sub-conditions on spectra and on the alignment of b and c), the secular
characteristic function whose zeros locate the eigenvalues created by the
rank-one competition term, and an orchestrating verdict.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InputError, NumericError
from .model import Measure, ModelSpec, inner_product, norm1, norm2, validate_model
from .operators import (
    SpectrumReport,
    adjoint,
    normality_defect,
    self_adjointness_defect,
    spectrum,
)
from .reduction import ReducedModel, reduce_model
from .stationary import solve_stationary

__all__ = [
    "HOLDS_TRUE",
    "HOLDS_FALSE",
    "HOLDS_HEURISTIC",
    "ConditionCheck",
    "StabilityReport",
    "KreinReport",
    "is_constant_vector",
    "linearization",
    "spectral_gap_sigma2",
    "check_las1",
    "check_las2",
    "check_sigma_condition",
    "check_angle_condition",
    "check_las3",
    "krein_characteristic",
    "krein_roots",
    "estimate_cs_condition",
    "check_gas",
    "stability_verdict",
    "stability_report_to_dict",
]

HOLDS_TRUE = "true"
HOLDS_FALSE = "false"
HOLDS_HEURISTIC = "heuristic-true"

KERNEL_RESIDUAL_RTOL = 1e-9   # kernel-membership residual, relative
STABILITY_MARGIN_RTOL = 1e-8  # spectral stability margin, relative to scale
NORMALITY_TOL = 1e-9
CONSTANT_RTOL = 1e-12
KREIN_MATCH_RTOL = 1e-6
CS_SAFETY = 1e-3

VERDICT_GAS = "certified-GAS"
VERDICT_LAS = "certified-LAS"
VERDICT_LINEAR = "linearly-stable-uncertified"
VERDICT_UNSTABLE = "unstable"
VERDICT_INCONCLUSIVE = "inconclusive"


@dataclass
class ConditionCheck:
    id: str
    holds: str
    numeric_evidence: dict = field(default_factory=dict)
    witness: np.ndarray | None = None

    @property
    def certifies(self) -> bool:
        return self.holds == HOLDS_TRUE


def is_constant_vector(v) -> bool:
    """Spread test max - min <= 1e-12 * max|v|; exact constancy is a
    measure-zero property of inputs, so a relative band is used."""
    v = np.asarray(v, dtype=float)
    scale = max(float(np.abs(v).max(initial=0.0)), 1e-300)
    return bool(float(v.max() - v.min()) <= CONSTANT_RTOL * scale)


def linearization(red: ReducedModel) -> np.ndarray:
    """Matrix -M_tilde + p * B with B h = b_tilde <c_tilde, h> in L2(mu).

    The equilibrium is locally asymptotically stable exactly when this
    spectrum lies in the open right half-plane.
    """
    w = red.measure.weights
    return -red.M + red.p * np.outer(red.b_tilde, red.c_tilde * w)


def _offconstant_basis(m: Measure) -> np.ndarray:
    """Columns form an L2(mu)-orthonormal basis of the complement of 1."""
    n = m.n
    d = np.sqrt(m.weights)
    Q, _ = np.linalg.qr(d[:, None], mode="complete")
    # first column of Q spans d ~ the constant direction in plain coordinates
    return Q[:, 1:] / d[:, None]


def spectral_gap_sigma2(red: ReducedModel) -> float:
    """Smallest eigenvalue of the symmetric part of -diag(c/b) M_tilde
    restricted off constants; +inf for a one-dimensional state space."""
    n = red.n
    if n == 1:
        return math.inf
    A = -np.diag(red.c_tilde / red.b_tilde) @ red.M
    W = red.measure.weights
    V = _offconstant_basis(red.measure)
    G = V.T @ (W[:, None] * (A @ V))
    return float(np.linalg.eigvalsh(0.5 * (G + G.T))[0])


def check_las1(red: ReducedModel) -> ConditionCheck:
    """Reduced competition weight in the kernel of the adjoint generator."""
    Mt = red.M
    residual = norm2(adjoint(Mt, red.measure) @ red.c_tilde, red.measure)
    bound = (
        KERNEL_RESIDUAL_RTOL
        * max(float(np.linalg.norm(Mt, 2)), 1e-300)
        * norm2(red.c_tilde, red.measure)
    )
    holds = HOLDS_TRUE if residual <= bound else HOLDS_FALSE
    return ConditionCheck(
        id="LAS1",
        holds=holds,
        numeric_evidence={"residual": residual, "bound": bound},
    )


def check_las2(red: ReducedModel) -> ConditionCheck:
    """Constants in the kernel of the adjoint of diag(c/b) M_tilde, together
    with a positive spectral gap."""
    A = np.diag(red.c_tilde / red.b_tilde) @ red.M
    residual = norm2(adjoint(A, red.measure) @ np.ones(red.n), red.measure)
    scale = max(float(np.linalg.norm(A, 2)), 1e-300) * math.sqrt(red.measure.total)
    sigma2 = spectral_gap_sigma2(red)
    gap_tol = STABILITY_MARGIN_RTOL * max(float(np.linalg.norm(A, 2)), 1e-300)
    kernel_ok = residual <= KERNEL_RESIDUAL_RTOL * scale
    gap_ok = sigma2 > gap_tol
    holds = HOLDS_TRUE if (kernel_ok and gap_ok) else HOLDS_FALSE
    return ConditionCheck(
        id="LAS2",
        holds=holds,
        numeric_evidence={
            "kernel_residual": residual,
            "kernel_bound": KERNEL_RESIDUAL_RTOL * scale,
            "sigma2": sigma2,
            "sigma2_tol": gap_tol,
        },
    )


def check_sigma_condition(spec_of_minus_m_tilde: SpectrumReport) -> ConditionCheck:
    """All eigenvalues of the negated generator lie in the cone Re >= |Im|."""
    ev = spec_of_minus_m_tilde.eigenvalues
    scale = max(float(np.abs(ev).max(initial=0.0)), 1e-300)
    margin = float((ev.real - np.abs(ev.imag)).min())
    holds = HOLDS_TRUE if margin >= -KERNEL_RESIDUAL_RTOL * scale else HOLDS_FALSE
    return ConditionCheck(
        id="SIGMA",
        holds=holds,
        numeric_evidence={"worst_margin": margin, "scale": scale},
    )


def check_angle_condition(b, c, m: Measure) -> ConditionCheck:
    """Alignment inequality between b and c:
    (b|c) + ||b||_1 ||c||_1 / mu(Omega) > sqrt of the product of the
    centered squared L2 norms.  Scale invariant in b and c."""
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    if (b <= 0).any() or (c <= 0).any():
        raise DomainError("angle condition requires positive b and c")
    mu = m.total
    lhs = float(inner_product(b, c, m)) + norm1(b, m) * norm1(c, m) / mu
    vb = norm2(b, m) ** 2 - norm1(b, m) ** 2 / mu
    vc = norm2(c, m) ** 2 - norm1(c, m) ** 2 / mu
    rhs = math.sqrt(max(vb, 0.0) * max(vc, 0.0))
    holds = HOLDS_TRUE if lhs > rhs else HOLDS_FALSE
    return ConditionCheck(
        id="ANGLE",
        holds=holds,
        numeric_evidence={"lhs": lhs, "rhs": rhs, "margin": lhs - rhs},
    )


def check_las3(red: ReducedModel) -> ConditionCheck:
    """Normal reduced generator plus one of: constant b, constant c, or the
    spectral cone and angle conditions together.  Compactness of the
    resolvent is automatic in finite dimension and recorded as such."""
    defect = normality_defect(-red.M, red.measure)
    normal = defect <= NORMALITY_TOL
    b_const = is_constant_vector(red.b_tilde)
    c_const = is_constant_vector(red.c_tilde)
    evidence = {
        "normality_defect": defect,
        "b_constant": float(b_const),
        "c_constant": float(c_const),
        "compact_resolvent": 1.0,  # automatic (finite dimension)
    }
    branch = False
    if b_const or c_const:
        branch = True
    else:
        sig = check_sigma_condition(spectrum(-red.M, want_vectors=False))
        ang = check_angle_condition(red.b_tilde, red.c_tilde, red.measure)
        evidence["sigma_margin"] = sig.numeric_evidence["worst_margin"]
        evidence["angle_margin"] = ang.numeric_evidence["margin"]
        branch = sig.certifies and ang.certifies
    holds = HOLDS_TRUE if (normal and branch) else HOLDS_FALSE
    return ConditionCheck(id="LAS3", holds=holds, numeric_evidence=evidence)


# ---------------------------------------------------------------------------
# Secular characteristic function and its zeros
# ---------------------------------------------------------------------------

def krein_characteristic(red: ReducedModel, lam: complex) -> complex:
    """chi(lam) = p <c_tilde, (-M_tilde - lam)^(-1) b_tilde> + 1."""
    from .operators import resolvent_solve

    x = resolvent_solve(-red.M, lam, red.b_tilde)
    return complex(red.p * inner_product(red.c_tilde.astype(complex), x, red.measure) + 1.0)


@dataclass
class KreinReport:
    roots: np.ndarray       # zeros of the characteristic function
    combined: np.ndarray    # roots plus retained eigenvalues of -M_tilde
    direct: np.ndarray      # dense spectrum of the linearization
    max_mismatch: float


def _match_multisets(a: np.ndarray, b: np.ndarray) -> float:
    """Max pointwise distance of the optimal pairing of two equal-size
    complex multisets."""
    from scipy.optimize import linear_sum_assignment

    C = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(C)
    return float(C[rows, cols].max())


def _chi_batch(Mt, bt, cw, p, lams):
    """chi and chi' at many points via batched resolvent solves, chunked to
    bound the memory of the stacked (K, n, n) systems."""
    n = Mt.shape[0]
    K = len(lams)
    chunk = max(1, int(4_000_000 // max(n * n, 1)))
    chi = np.empty(K, dtype=complex)
    dchi = np.empty(K, dtype=complex)
    eye = np.eye(n)
    bc = bt.astype(complex)
    for lo in range(0, K, chunk):
        sl = slice(lo, min(lo + chunk, K))
        A = (-Mt)[None, :, :] - lams[sl, None, None] * eye[None, :, :]
        rhs = np.tile(bc[:, None], (A.shape[0], 1, 1))
        x = np.linalg.solve(A, rhs)[:, :, 0]
        y = np.linalg.solve(A, x[:, :, None])[:, :, 0]
        chi[sl] = p * (x @ cw) + 1.0
        dchi[sl] = p * (y @ cw)
    return chi, dchi


def _krein_seeds(lam_poles, rho, grid_pts):
    """Seed points: coarse complex grid, midpoints between pole real parts,
    outer brackets, and rings around each pole scaled by the local pole
    spacing (roots squeezed between clustered poles need nearby starts)."""
    n = lam_poles.shape[0]
    seeds = []
    gx = np.linspace(-2.0 * rho, 2.0 * rho, grid_pts)
    seeds.append((gx[:, None] + 1j * gx[None, :]).ravel())
    re = np.sort(lam_poles.real)
    if n > 1:
        seeds.append((0.5 * (re[:-1] + re[1:])).astype(complex))
    seeds.append(np.array([re.min() - rho, re.max() + rho], dtype=complex))
    if n > 1:
        gaps = np.abs(lam_poles[:, None] - lam_poles[None, :])
        np.fill_diagonal(gaps, np.inf)
        local = np.minimum(gaps.min(axis=1), rho)
    else:
        local = np.full(1, rho)
    # ring seeds around each pole; thinner for large n, where the secular
    # first-order estimates carry most of the weight
    if n <= 40:
        ang = np.exp(2j * np.pi * np.arange(8) / 8)
        factors = (0.3, 0.7)
        seeds.append((lam_poles[:, None] + 1e-2 * rho * ang[None, ::2]).ravel())
    else:
        ang = np.exp(2j * np.pi * (np.arange(4) + 0.5) / 4)
        factors = (0.4,)
    for factor in factors:
        seeds.append(
            (lam_poles[:, None] + factor * local[:, None] * ang[None, :]).ravel()
        )
    return seeds


def krein_roots(red: ReducedModel, grid_pts: int = 15, max_escalations: int = 3) -> KreinReport:
    """Locate the zeros of the characteristic function and reconcile them
    with the dense spectrum of the linearization.

    Newton refinement runs from a grid of starting points over the square
    [-2 rho, 2 rho]^2 (rho = spectral radius of the linearization) plus
    pole-aware seeds; converged points are deduplicated at 1e-8 relative.
    The combined multiset (zeros plus eigenvalues of the negated generator
    that survive the rank-one perturbation, detected by a kernel test) must
    match the dense spectrum to 1e-6 relative, else the grid is densified;
    exhausting the budget raises a numeric error listing the mismatch.
    """
    n = red.n
    w = red.measure.weights
    cw = red.c_tilde * w
    Mt = red.M
    p = red.p
    L = linearization(red)
    direct = spectrum(L, want_vectors=False).eigenvalues
    rho = max(float(np.abs(direct).max(initial=0.0)), 1e-3)
    lam_poles, V = np.linalg.eig(-Mt)

    # retained eigenvalues of -M_tilde: kernel test on L - lam I
    retained = [
        lam
        for lam in lam_poles
        if np.linalg.svd(L - lam * np.eye(n), compute_uv=False)[-1]
        <= 1e-8 * rho
    ]

    seeds = _krein_seeds(lam_poles, rho, grid_pts)
    # first-order secular estimates lam_k + p s_k / (1 + R_k)
    try:
        s = (cw @ V) * np.linalg.solve(V, red.b_tilde.astype(complex))
        R = np.empty(n, dtype=complex)
        for k in range(n):
            others = np.delete(np.arange(n), k)
            R[k] = p * np.sum(s[others] / (lam_poles[others] - lam_poles[k]))
        seeds.append(lam_poles + p * s)
        with np.errstate(all="ignore"):
            est = lam_poles + p * s / (1.0 + R)
        seeds.append(est[np.isfinite(est)])
    except np.linalg.LinAlgError:
        pass  # defective eigenbasis: plain grid seeding still applies
    lams = np.concatenate([np.asarray(sd, dtype=complex) for sd in seeds])

    def nudge(z):
        d = np.abs(z[:, None] - lam_poles[None, :]).min(axis=1)
        z = z.copy()
        z[d < 1e-13 * rho] += rho * (1e-10 + 1e-10j)
        return z

    lams = nudge(lams)
    active = np.ones(len(lams), dtype=bool)
    converged = np.zeros(len(lams), dtype=bool)

    def try_finish():
        inside = (
            converged
            & (np.abs(lams.real) <= 2.2 * rho)
            & (np.abs(lams.imag) <= 2.2 * rho)
        )
        roots = []
        for z in lams[inside]:
            if all(abs(z - u) > 1e-8 * rho for u in roots) and (
                np.abs(z - lam_poles).min() > 1e-10 * rho
            ):
                roots.append(z)
        kept = retained
        if len(roots) + len(kept) > n and roots:
            # an eigenvalue hugging a pole can be found both as a secular
            # zero and by the kernel test; keep the better-resolved zero
            rts = np.array(roots)
            kept = [
                lam for lam in kept if np.abs(rts - lam).min() > KREIN_MATCH_RTOL * rho
            ]
        combined = np.array(roots + kept, dtype=complex)
        if combined.shape[0] != n:
            return None, combined
        mism = _match_multisets(combined, direct)
        if mism > KREIN_MATCH_RTOL * rho:
            return None, combined
        order = np.lexsort((combined.imag, combined.real))
        rts = np.array(roots, dtype=complex)
        rorder = np.lexsort((rts.imag, rts.real)) if rts.size else []
        return (
            KreinReport(
                roots=rts[rorder] if rts.size else rts,
                combined=combined[order],
                direct=direct,
                max_mismatch=mism,
            ),
            combined,
        )

    combined = np.zeros(0, dtype=complex)
    with np.errstate(all="ignore"):
        for it in range(80):
            if not active.any():
                break
            if it in (25, 50):
                report, combined = try_finish()
                if report is not None:
                    return report
            try:
                chi, dchi = _chi_batch(Mt, red.b_tilde, cw, p, lams[active])
            except np.linalg.LinAlgError:
                lams[active] = nudge(lams[active] + rho * 1e-9 * (1 + 1j))
                continue
            step = chi / dchi
            step[~np.isfinite(step)] = 0.0
            new = lams[active] - step
            new[~np.isfinite(new)] = 3.0 * rho * (1 + 3j)  # park runaways
            small = np.abs(step) < 1e-13 * rho
            out = np.abs(new) > 4.0 * rho
            lams[active] = new
            conv_update = converged[active]
            conv_update |= small & ~out
            converged[active] = conv_update
            nxt = active.copy()
            nxt[active] = ~(small | out)
            active = nxt
    report, combined = try_finish()
    if report is not None:
        return report
    if max_escalations > 0:
        return krein_roots(red, grid_pts=2 * grid_pts + 1, max_escalations=max_escalations - 1)
    unmatched = [
        z
        for z in direct
        if combined.size == 0 or np.abs(combined - z).min() > KREIN_MATCH_RTOL * rho
    ]
    raise NumericError(
        f"secular root finder exhausted its budget; unmatched eigenvalues: {unmatched}"
    )


# ---------------------------------------------------------------------------
# Global-stability ladder
# ---------------------------------------------------------------------------

def _cs_ratio_parts(h, ct, w, mu):
    ch2 = float(np.sum(w * ct * h * h))
    ch = float(np.sum(w * ct * h))
    h2 = float(np.sum(w * h * h))
    h1 = float(np.sum(w * np.abs(h)))
    den2 = mu * h2 - h1 * h1
    return ch2, ch, den2


def estimate_cs_condition(red: ReducedModel, budget: int = 16, seed: int = 0) -> ConditionCheck:
    """Heuristic estimate of the constrained alignment supremum against the
    square root of the spectral gap.

    Multi-start projected gradient ascent over nonnegative vectors; a feasible
    vector whose ratio reaches sqrt(sigma2) certifies failure and is returned
    as a witness.  Absence of a witness is only heuristic evidence, so the
    positive outcome is reported as heuristic-true, never as certified.
    """
    sigma2 = spectral_gap_sigma2(red)
    n = red.n
    if n == 1 or math.isinf(sigma2):
        # no direction off constants exists; the supremum is over an empty set
        return ConditionCheck(
            id="CS",
            holds=HOLDS_HEURISTIC,
            numeric_evidence={"estimate": -math.inf, "sqrt_sigma2": math.inf},
        )
    if sigma2 <= 0:
        raise DomainError("the alignment estimator requires a positive spectral gap")
    ct = red.c_tilde
    w = red.measure.weights
    mu = red.measure.total
    sqrt_s2 = math.sqrt(sigma2)

    def ratio_and_grad(h):
        ch2, ch, den2 = _cs_ratio_parts(h, ct, w, mu)
        if den2 <= 1e-30 or ch2 <= 0:
            return -math.inf, None
        num = math.sqrt(ch2) - ch
        den = math.sqrt(den2)
        f = num / den
        gnum = (w * ct * h) / math.sqrt(ch2) - w * ct
        h1 = float(np.sum(w * h))
        gden = (mu * w * h - h1 * w) / den
        return f, (gnum - f * gden) / den

    def feasible(h):
        ch2, ch, den2 = _cs_ratio_parts(h, ct, w, mu)
        return sigma2 * den2 < ch2 + ch * ch

    rng = np.random.default_rng(seed)
    best = -math.inf
    best_h = None
    for start in range(max(budget, 1)):
        if start == 0:
            h = np.linspace(0.1, 1.0, n)
        else:
            h = rng.uniform(0.0, 1.0, n)
        h = np.maximum(h, 0.0)
        nh = math.sqrt(float(np.sum(w * h * h)))
        if nh == 0:
            continue
        h /= nh
        step = 0.1
        val, grad = ratio_and_grad(h)
        for _ in range(200):
            if grad is None:
                break
            hn = np.maximum(h + step * grad, 0.0)
            nh = math.sqrt(float(np.sum(w * hn * hn)))
            if nh < 1e-14:
                step *= 0.5
                continue
            hn /= nh
            vn, gn = ratio_and_grad(hn)
            if vn > val:
                h, val, grad = hn, vn, gn
                step = min(step * 1.25, 1.0)
            else:
                step *= 0.5
                if step < 1e-12:
                    break
        if feasible(h) and val > best:
            best, best_h = val, h.copy()

    evidence = {"estimate": best, "sqrt_sigma2": sqrt_s2, "sigma2": sigma2}
    if best_h is not None and best >= sqrt_s2:
        return ConditionCheck(id="CS", holds=HOLDS_FALSE, numeric_evidence=evidence, witness=best_h)
    if best < sqrt_s2 * (1.0 - CS_SAFETY):
        return ConditionCheck(id="CS", holds=HOLDS_HEURISTIC, numeric_evidence=evidence)
    # within the safety band: not certifiably violated, but too close to call
    evidence["near_threshold"] = 1.0
    return ConditionCheck(id="CS", holds=HOLDS_FALSE, numeric_evidence=evidence, witness=best_h)


def check_gas(red: ReducedModel, cs_budget: int = 16, seed: int = 0) -> list:
    """The four global-stability conditions for the reduced model."""
    is_p1 = abs(red.p - 1.0) <= 1e-12
    is_p2 = abs(red.p - 2.0) <= 1e-12
    b_const = is_constant_vector(red.b_tilde)
    las1 = check_las1(red)
    las2 = check_las2(red)

    gas1 = ConditionCheck(
        id="GAS1",
        holds=HOLDS_TRUE if (is_p1 and b_const and las1.certifies) else HOLDS_FALSE,
        numeric_evidence={
            "p": red.p,
            "b_constant": float(b_const),
            "kernel_residual": las1.numeric_evidence["residual"],
        },
    )

    if is_p1 and las2.certifies:
        cs = estimate_cs_condition(red, budget=cs_budget, seed=seed)
        gas2_holds = HOLDS_HEURISTIC if cs.holds == HOLDS_HEURISTIC else HOLDS_FALSE
        gas2 = ConditionCheck(
            id="GAS2",
            holds=gas2_holds,
            numeric_evidence={
                "p": red.p,
                "sigma2": las2.numeric_evidence["sigma2"],
                "cs_estimate": cs.numeric_evidence.get("estimate", math.nan),
            },
            witness=cs.witness,
        )
    else:
        gas2 = ConditionCheck(
            id="GAS2",
            holds=HOLDS_FALSE,
            numeric_evidence={"p": red.p, "las2_holds": float(las2.certifies)},
        )

    defect = normality_defect(-red.M, red.measure)
    dim_ok = (not red.grid_origin) or red.p <= 2.0
    gas3 = ConditionCheck(
        id="GAS3",
        holds=HOLDS_TRUE if (b_const and defect <= NORMALITY_TOL and dim_ok) else HOLDS_FALSE,
        numeric_evidence={
            "b_constant": float(b_const),
            "normality_defect": defect,
            "grid_origin": float(red.grid_origin),
            "p": red.p,
        },
    )

    sa_defect = self_adjointness_defect(
        np.diag(red.c_tilde / red.b_tilde) @ red.M, red.measure
    )
    gas4 = ConditionCheck(
        id="GAS4",
        holds=HOLDS_TRUE if (is_p2 and sa_defect <= NORMALITY_TOL) else HOLDS_FALSE,
        numeric_evidence={"p": red.p, "self_adjointness_defect": sa_defect},
    )
    return [gas1, gas2, gas3, gas4]


@dataclass
class StabilityReport:
    linearization_spectrum: SpectrumReport
    min_real_part: float
    linearly_stable: bool
    checks: list
    sigma2: float
    verdict: str


def stability_verdict(spec: ModelSpec, cs_budget: int = 16, seed: int = 0) -> StabilityReport:
    """Run the full ladder: equilibrium, reduction, linearization spectrum,
    all condition checks, and the precedence-ordered verdict."""
    report = validate_model(spec)
    if not report.passed:
        raise InputError("model fails validation: " + "; ".join(report.messages))
    st = solve_stationary(spec)
    red = reduce_model(spec, st)
    L = linearization(red)
    spec_report = spectrum(L, want_vectors=False)
    scale = max(float(np.abs(spec_report.eigenvalues).max(initial=0.0)), 1e-300)
    tol = STABILITY_MARGIN_RTOL * scale
    min_re = spec_report.min_real_part()
    linearly_stable = bool(min_re > tol)

    checks = [
        check_las1(red),
        check_las2(red),
        check_sigma_condition(spectrum(-red.M, want_vectors=False)),
        check_angle_condition(red.b_tilde, red.c_tilde, red.measure),
        check_las3(red),
    ]
    checks.extend(check_gas(red, cs_budget=cs_budget, seed=seed))
    sigma2 = spectral_gap_sigma2(red)

    las_ids = ("LAS1", "LAS2", "LAS3")
    gas_ids = ("GAS1", "GAS2", "GAS3", "GAS4")
    gas_certified = any(c.id in gas_ids and c.certifies for c in checks)
    las_certified = any(c.id in las_ids and c.certifies for c in checks)
    if gas_certified:
        verdict = VERDICT_GAS
    elif las_certified:
        verdict = VERDICT_LAS
    elif min_re > tol:
        verdict = VERDICT_LINEAR
    elif min_re < -tol:
        verdict = VERDICT_UNSTABLE
    else:
        verdict = VERDICT_INCONCLUSIVE
    return StabilityReport(
        linearization_spectrum=spec_report,
        min_real_part=min_re,
        linearly_stable=linearly_stable,
        checks=checks,
        sigma2=sigma2,
        verdict=verdict,
    )


def _float_or_str(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


def stability_report_to_dict(rep: StabilityReport) -> dict:
    ev = rep.linearization_spectrum.eigenvalues
    return {
        "linearization_spectrum": {
            "eigenvalues": [[z.real, z.imag] for z in ev],
            "max_real_part": rep.linearization_spectrum.max_real_part,
            "gap": _float_or_str(rep.linearization_spectrum.gap),
            "max_residual": rep.linearization_spectrum.max_residual,
        },
        "min_real_part": rep.min_real_part,
        "linearly_stable": rep.linearly_stable,
        "checks": [
            {
                "id": c.id,
                "holds": c.holds,
                "numeric_evidence": {
                    k: _float_or_str(float(v)) for k, v in c.numeric_evidence.items()
                },
                "witness": None if c.witness is None else list(map(float, c.witness)),
            }
            for c in rep.checks
        ],
        "sigma2": _float_or_str(rep.sigma2),
        "verdict": rep.verdict,
    }
