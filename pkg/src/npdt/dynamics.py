"""Time integration and dynamical diagnostics.

An embedded Dormand-Prince 5(4) pair integrates the population equation with
per-step error control; positivity is monitored but never clamped, and state
blow-up is reported as evidence rather than silent failure.  On top of the
integrator: conserved/monotone diagnostic series, runtime verification of the
a-priori mass bound and of persistence, omega-limit-set classification from
the scalar competition observable, and parameter scans that locate stability
crossings of the equilibrium.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .errors import (
    BlowUpError,
    DimensionError,
    DomainError,
    InputError,
    NumericError,
    PositivityError,
    StiffnessError,
)
from .model import (
    FellerMatrix,
    ModelSpec,
    inner_product,
    model_from_dict,
    norm1,
)
from .operators import adjoint, principal_eigenpair, spectrum
from .reduction import ReducedModel, reduce_model
from .stability import linearization
from .stationary import StationaryState, powp, solve_stationary

__all__ = [
    "Trajectory",
    "DiagnosticsSeries",
    "LimitSetVerdict",
    "ScanCrossing",
    "ScanResult",
    "AffineFamily",
    "integrate",
    "diagnostics",
    "adjoint_kernel_vector",
    "apriori_l1_bound",
    "check_apriori_bound",
    "check_persistence",
    "classify_limit_set",
    "default_horizon",
    "hopf_scan",
    "family_from_dict",
]

BLOWUP_NORM = 1e12
POSITIVITY_RTOL = 1e-9

# Dormand-Prince 5(4) tableau; the 5th-order solution propagates (FSAL).
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_DP_ERR = _DP_B5 - _DP_B4


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), n), rows are u(t) >= 0
    model: ModelSpec
    integrator_stats: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.states.shape[1]


def make_rhs(spec: ModelSpec):
    """Vector field u' = M u + u (r - b <c, u^p>).

    The competition functional is evaluated on the positive part of the state
    so that roundoff-level negative components cannot leave the real domain
    of the fractional power.
    """
    M = spec.M
    r = spec.r
    b = spec.b
    cw = spec.c * spec.measure.weights
    p = spec.p

    def rhs(t, u):
        comp = float(cw @ powp(np.maximum(u, 0.0), p))
        return M @ u + u * (r - b * comp)

    return rhs


def integrate(
    spec: ModelSpec,
    u0,
    t_end: float,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    samples: int = 400,
    sample_times=None,
) -> Trajectory:
    """Integrate the population equation with an adaptive embedded 5(4) pair.

    Output is sampled on ``samples + 1`` equispaced times (or on the given
    ``sample_times``); steps are shortened to land on sample times so the
    recorded states carry full step accuracy.

    Raises
    ------
    DomainError
        Negative initial state or tolerances outside (1e-13, 1e-3).
    StiffnessError
        Step size underflow.
    PositivityError
        A state component left the nonnegative cone beyond roundoff.
    BlowUpError
        Sup norm of the state exceeded 1e12; the partial trajectory rides
        along as evidence for an ``unbounded`` classification.
    """
    u = np.asarray(u0, dtype=float).copy()
    if u.shape != (spec.n,):
        raise DimensionError(f"u0 has shape {u.shape}, expected ({spec.n},)")
    if (u < 0).any():
        raise DomainError("initial state must be componentwise nonnegative")
    if not t_end > 0:
        raise DomainError("t_end must be positive")
    for name, tol in (("rtol", rtol), ("atol", atol)):
        if not (1e-13 < tol < 1e-3):
            raise DomainError(f"{name} must lie in (1e-13, 1e-3), got {tol}")
    if sample_times is None:
        out_times = np.linspace(0.0, t_end, samples + 1)
    else:
        out_times = np.asarray(sample_times, dtype=float)
        if (np.diff(out_times) <= 0).any() or out_times[0] < 0 or out_times[-1] > t_end:
            raise DomainError("sample_times must increase within [0, t_end]")

    f = make_rhs(spec)
    t = 0.0
    k = [None] * 7
    k[0] = f(t, u)
    sc = atol + rtol * np.abs(u)
    d0 = float(np.linalg.norm(u / sc))
    d1 = float(np.linalg.norm(k[0] / sc))
    h = min(0.01 * d0 / d1 if d1 > 1e-12 else 1e-6, t_end)

    ts, us = [], []
    oi = 0
    if out_times.size and out_times[0] == 0.0:
        ts.append(0.0)
        us.append(u.copy())
        oi = 1
    steps = rejections = 0
    min_component = float(u.min())

    def finish(flag=None):
        stats = {
            "steps": steps,
            "rejections": rejections,
            "min_component": min_component,
        }
        if flag:
            stats[flag] = True
        states = np.array(us) if us else np.zeros((0, spec.n))
        return Trajectory(
            times=np.array(ts), states=states, model=spec, integrator_stats=stats
        )

    while t < t_end - 1e-14 * max(t_end, 1.0):
        h_step = min(h, t_end - t)
        hit_sample = False
        if oi < out_times.size and t + h_step >= out_times[oi] - 1e-14 * max(1.0, t_end):
            h_step = out_times[oi] - t
            hit_sample = True
        clipped = h_step < h
        for i in range(1, 6):
            du = _DP_A[i][0] * k[0]
            for j in range(1, i):
                du = du + _DP_A[i][j] * k[j]
            k[i] = f(t + _DP_C[i] * h_step, u + h_step * du)
        u_new = u + h_step * (
            _DP_B5[0] * k[0]
            + _DP_B5[2] * k[2]
            + _DP_B5[3] * k[3]
            + _DP_B5[4] * k[4]
            + _DP_B5[5] * k[5]
        )
        k[6] = f(t + h_step, u_new)  # last stage sits on the 5th-order solution
        err_vec = h_step * (
            _DP_ERR[0] * k[0]
            + _DP_ERR[2] * k[2]
            + _DP_ERR[3] * k[3]
            + _DP_ERR[4] * k[4]
            + _DP_ERR[5] * k[5]
            + _DP_ERR[6] * k[6]
        )
        sc = atol + rtol * np.maximum(np.abs(u), np.abs(u_new))
        err = float(np.sqrt(np.mean((err_vec / sc) ** 2)))
        grow = min(5.0, max(0.2, 0.9 * (1.0 / max(err, 1e-12)) ** 0.2))
        if err <= 1.0:
            t += h_step
            u = u_new
            k[0] = k[6]  # FSAL
            steps += 1
            umax = float(np.abs(u).max())
            umin = float(u.min())
            min_component = min(min_component, umin)
            if umin < -POSITIVITY_RTOL * max(umax, 1e-300):
                raise PositivityError(
                    f"state component {umin:.3e} fell below the positivity "
                    f"tolerance at t = {t:.6g}"
                )
            if umax > BLOWUP_NORM:
                raise BlowUpError(
                    f"state norm exceeded {BLOWUP_NORM:.0e} at t = {t:.6g}",
                    trajectory=finish("blow_up"),
                )
            if hit_sample and oi < out_times.size:
                ts.append(t)
                us.append(u.copy())
                oi += 1
            # a clipped successful step says nothing against the natural one
            h = max(h_step * grow, h) if clipped else h_step * grow
        else:
            rejections += 1
            h = h_step * grow
            if h < 1e-14 * max(t, 1.0):
                raise StiffnessError(
                    f"step size underflow at t = {t:.6g} (h = {h:.3e})"
                )
    return finish()


# ---------------------------------------------------------------------------
# Diagnostic series
# ---------------------------------------------------------------------------

def adjoint_kernel_vector(spec: ModelSpec) -> np.ndarray:
    """Positive kernel vector of the adjoint generator, normalized to
    <psi, 1> = 1 so that the conserved linear mass is comparable across
    models."""
    psi_lam, psi = principal_eigenpair(-adjoint(spec.M, spec.measure), spec.measure)
    psi = psi / float(inner_product(psi, np.ones(spec.n), spec.measure))
    return psi


@dataclass
class DiagnosticsSeries:
    l1_norm: np.ndarray
    competition: np.ndarray
    lyapunov_h: np.ndarray
    energy_f: np.ndarray | None  # present only for quadratic competition (p = 2)
    adjoint_mass: np.ndarray


def diagnostics(traj: Trajectory, st: StationaryState, red: ReducedModel) -> DiagnosticsSeries:
    """Evaluate all diagnostic series along a trajectory.

    l1_norm        total mass <1, u>
    competition    nonlocal coupling <c, u^p>
    lyapunov_h     entropy ||sqrt(c~/b~) (v - 1)||_2^2 in reduced coordinates
    energy_f       gradient-flow energy (p = 2 only)
    adjoint_mass   <psi, u> for the positive adjoint kernel vector psi
    """
    spec = traj.model
    if red.n != spec.n or st.u_star.shape != (spec.n,):
        raise DimensionError("diagnostics inputs have inconsistent dimensions")
    w = spec.measure.weights
    cw = spec.c * w
    one = np.ones(spec.n)
    psi = adjoint_kernel_vector(spec)
    ratio = red.c_tilde / red.b_tilde
    # energy quadratic part +1/2 (v | (c/b) M v): with this orientation
    # dF/dt = ||sqrt(c/b) dv/dt||^2 >= 0 along the quadratic-competition flow
    A_form = w[:, None] * (np.diag(ratio) @ red.M)
    ct_w = red.c_tilde * w
    T = traj.times.shape[0]
    l1 = np.empty(T)
    comp = np.empty(T)
    lyap = np.empty(T)
    adm = np.empty(T)
    is_p2 = abs(spec.p - 2.0) <= 1e-12
    energy = np.empty(T) if is_p2 else None
    for i, u in enumerate(traj.states):
        l1[i] = float(w @ u)
        comp[i] = float(cw @ powp(np.maximum(u, 0.0), spec.p))
        v = u / st.u_star
        hvec = v - one
        lyap[i] = float(np.sum(w * ratio * hvec * hvec))
        adm[i] = float(np.sum(w * psi * u))
        if is_p2:
            quad_part = 0.5 * float(v @ (A_form @ v))
            cv2 = float(ct_w @ (v * v))
            energy[i] = quad_part + 0.5 * cv2 - 0.25 * cv2**2
    return DiagnosticsSeries(
        l1_norm=l1, competition=comp, lyapunov_h=lyap, energy_f=energy, adjoint_mass=adm
    )


def apriori_l1_bound(spec: ModelSpec) -> float:
    """Mass bound (mu(Omega)^{p-1} ||1/c||_inf ||1/b||_inf (||M* 1||_inf + ||r||_inf))^{1/p}."""
    mstar1 = adjoint(spec.M, spec.measure) @ np.ones(spec.n)
    val = (
        spec.measure.total ** (spec.p - 1.0)
        * float(np.abs(1.0 / spec.c).max())
        * float(np.abs(1.0 / spec.b).max())
        * (float(np.abs(mstar1).max()) + float(np.abs(spec.r).max()))
    )
    return val ** (1.0 / spec.p)


def check_apriori_bound(traj: Trajectory, spec: ModelSpec) -> bool:
    """Mass stays below max(initial mass, a-priori bound) with 1e-6 slack."""
    bound = max(norm1(traj.states[0], spec.measure), apriori_l1_bound(spec))
    masses = traj.states @ spec.measure.weights
    return bool((masses <= bound * (1.0 + 1e-6)).all())


def check_persistence(traj: Trajectory, spec: ModelSpec) -> bool:
    """Positive mass at every sample and a trailing competition functional
    that has not collapsed (at least 1e-6 of its initial scale over the last
    fifth of the horizon).  A zero initial state violates the precondition
    and reports False."""
    u0 = traj.states[0]
    if not (u0 > 0).any():
        return False
    w = spec.measure.weights
    masses = traj.states @ w
    if not (masses > 0).all():
        return False
    comp = np.array(
        [float(np.sum(w * powp(np.maximum(u, 0.0), spec.p))) for u in traj.states]
    )
    tail = comp[int(math.floor(0.8 * (comp.size - 1))):]
    init_scale = float(np.sum(w * powp(u0, spec.p)))
    return bool(tail.max() >= 1e-6 * init_scale)


# ---------------------------------------------------------------------------
# Limit-set classification
# ---------------------------------------------------------------------------

@dataclass
class LimitSetVerdict:
    kind: str  # converged-to-equilibrium | converged-to-zero | periodic-like
    #            | non-convergent-bounded | unbounded | undetermined
    metrics: dict = field(default_factory=dict)


def classify_limit_set(traj: Trajectory, u_star, eps: float) -> LimitSetVerdict:
    """Classify the trailing behaviour of a trajectory.

    Convergence is measured on the last fifth of the samples; the periodic
    tag requires at least five trailing peaks of the competition series with
    under 5% period variance and an amplitude exceeding 10 eps.
    """
    u_star = np.asarray(u_star, dtype=float)
    spec = traj.model
    states = traj.states
    times = traj.times
    T = states.shape[0]
    sup = float(np.abs(states).max())
    final_distance = float(np.abs(states[-1] - u_star).max())
    metrics = {"final_distance": final_distance}
    if traj.integrator_stats.get("blow_up") or sup > BLOWUP_NORM:
        return LimitSetVerdict(kind="unbounded", metrics=metrics)
    if T < 10:
        return LimitSetVerdict(kind="undetermined", metrics=metrics)

    tail_lo = int(math.floor(0.8 * (T - 1)))
    trail_dist = float(np.abs(states[tail_lo:] - u_star[None, :]).max())
    metrics["trailing_distance"] = trail_dist
    if trail_dist < eps:
        return LimitSetVerdict(kind="converged-to-equilibrium", metrics=metrics)
    trail_zero = float(np.abs(states[tail_lo:]).max())
    if trail_zero < eps:
        return LimitSetVerdict(kind="converged-to-zero", metrics=metrics)

    w = spec.measure.weights
    comp = np.array(
        [float(np.sum(w * spec.c * powp(np.maximum(u, 0.0), spec.p))) for u in states]
    )
    half = comp[T // 2:]
    t_half = times[T // 2:]
    amplitude = float(half.max() - half.min())
    metrics["oscillation_amplitude"] = amplitude
    peaks, _ = find_peaks(half)
    if peaks.size >= 5:
        intervals = np.diff(t_half[peaks])
        mean_period = float(intervals.mean())
        variance = float(intervals.std() / mean_period) if mean_period > 0 else math.inf
        metrics["estimated_period"] = mean_period
        metrics["period_variance"] = variance
        if variance < 0.05 and amplitude > 10.0 * eps:
            return LimitSetVerdict(kind="periodic-like", metrics=metrics)
    if 1 <= peaks.size < 5 and amplitude > 10.0 * eps:
        return LimitSetVerdict(kind="undetermined", metrics=metrics)
    return LimitSetVerdict(kind="non-convergent-bounded", metrics=metrics)


def default_horizon(spec: ModelSpec) -> float:
    """Simulation horizon resolving the slowest linear mode near the
    equilibrium: 50 / |slowest nonzero real part|, capped at 1e4."""
    st = solve_stationary(spec)
    red = reduce_model(spec, st)
    ev = spectrum(linearization(red), want_vectors=False).eigenvalues
    scale = max(float(np.abs(ev).max(initial=0.0)), 1e-300)
    rates = np.abs(ev.real[np.abs(ev.real) > 1e-9 * scale])
    if rates.size == 0:
        return 1e4
    return float(min(50.0 / rates.min(), 1e4))


# ---------------------------------------------------------------------------
# Parameter scans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineFamily:
    """Model family interpolating selected coefficients affinely in theta."""

    base: ModelSpec
    targets: dict
    name: str = "family"

    def __post_init__(self):
        allowed = {"r", "b", "c", "M", "p"}
        unknown = set(self.targets) - allowed
        if unknown:
            raise InputError(f"unknown family targets: {sorted(unknown)}")

    def __call__(self, theta: float) -> ModelSpec:
        base = self.base
        s = float(theta)

        def mix(name, cur):
            if name not in self.targets:
                return cur
            return (1.0 - s) * cur + s * np.asarray(self.targets[name], dtype=float)

        gen = base.generator
        if "M" in self.targets:
            Mtarget = np.asarray(self.targets["M"], dtype=float).reshape(base.n, base.n)
            gen = FellerMatrix((1.0 - s) * base.M + s * Mtarget, base.measure)
        p = base.p if "p" not in self.targets else (1.0 - s) * base.p + s * float(self.targets["p"])
        return ModelSpec(
            n=base.n,
            generator=gen,
            r=mix("r", base.r),
            b=mix("b", base.b),
            c=mix("c", base.c),
            p=p,
            name=f"{self.name}[theta={s:.8g}]",
            grid_origin=base.grid_origin,
        )


_FAMILY_FIELDS = {"name", "base", "targets", "theta_lo", "theta_hi"}


def family_from_dict(obj: dict):
    """Parse a scan family file: base model plus per-parameter affine
    interpolation targets and the theta range."""
    if not isinstance(obj, dict):
        raise InputError("family file must contain a JSON object")
    unknown = set(obj) - _FAMILY_FIELDS
    if unknown:
        raise InputError(f"unknown family fields: {sorted(unknown)}")
    if "base" not in obj or "targets" not in obj:
        raise InputError("family file needs 'base' and 'targets'")
    base = model_from_dict(obj["base"])
    targets = obj["targets"]
    if not isinstance(targets, dict):
        raise InputError("'targets' must be an object")
    fam = AffineFamily(base=base, targets=targets, name=str(obj.get("name", "family")))
    lo = float(obj.get("theta_lo", 0.0))
    hi = float(obj.get("theta_hi", 1.0))
    if not lo < hi:
        raise InputError("family requires theta_lo < theta_hi")
    return fam, lo, hi


@dataclass
class ScanCrossing:
    theta: float
    kind: str  # "hopf" or "steady"
    imag_part: float
    bracket: tuple


@dataclass
class ScanResult:
    thetas: np.ndarray
    min_real_parts: np.ndarray  # nan marks a gap (equilibrium solve failed)
    crossings: list
    gaps: list


def _rightmost_mode(spec: ModelSpec):
    """(min real part, |imag| of the minimizing eigenvalue) of the
    linearization at the equilibrium."""
    st = solve_stationary(spec)
    red = reduce_model(spec, st)
    ev = spectrum(linearization(red), want_vectors=False).eigenvalues
    j = int(np.argmin(ev.real))
    return float(ev[j].real), float(abs(ev[j].imag)), float(np.abs(ev).max())


def _scan_workers() -> int:
    env = os.environ.get("NPDT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def hopf_scan(family, theta_lo: float, theta_hi: float, steps: int) -> ScanResult:
    """Sweep the family, locate stability crossings of the equilibrium, and
    refine each crossing to 1e-6 in theta by bisection.

    A crossing whose rightmost eigenvalue pair carries nonzero imaginary part
    is a Hopf candidate; a real crossing is a steady bifurcation candidate.
    Equilibrium solve failures leave gaps, not errors.
    """
    if steps < 1:
        raise DomainError("scan needs at least one step")
    thetas = np.linspace(theta_lo, theta_hi, steps + 1)
    vals = [None] * thetas.size

    def eval_theta(i):
        try:
            return _rightmost_mode(family(float(thetas[i])))
        except NumericError:
            return None

    workers = min(_scan_workers(), thetas.size)
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(eval_theta, range(thetas.size)))
    else:
        vals = [eval_theta(i) for i in range(thetas.size)]

    minre = np.array([math.nan if v is None else v[0] for v in vals])
    gaps = [float(thetas[i]) for i, v in enumerate(vals) if v is None]
    crossings = []
    for i in range(thetas.size - 1):
        if vals[i] is None or vals[i + 1] is None:
            continue
        a, b = vals[i][0], vals[i + 1][0]
        if a == 0.0 or a * b >= 0.0:
            continue
        lo, hi = float(thetas[i]), float(thetas[i + 1])
        flo = a
        while hi - lo > 1e-6:
            mid = 0.5 * (lo + hi)
            try:
                fmid = _rightmost_mode(family(mid))[0]
            except NumericError:
                break
            if flo * fmid <= 0.0:
                hi = mid
            else:
                lo, flo = mid, fmid
        theta_c = 0.5 * (lo + hi)
        try:
            re_c, im_c, scale = _rightmost_mode(family(theta_c))
        except NumericError:
            re_c, im_c, scale = math.nan, 0.0, 1.0
        kind = "hopf" if im_c > 1e-8 * max(scale, 1.0) else "steady"
        crossings.append(
            ScanCrossing(
                theta=theta_c,
                kind=kind,
                imag_part=im_c,
                bracket=(float(thetas[i]), float(thetas[i + 1])),
            )
        )
    return ScanResult(thetas=thetas, min_real_parts=minre, crossings=crossings, gaps=gaps)
