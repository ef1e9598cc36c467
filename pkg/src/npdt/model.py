"""Problem instances: weighted measure geometry, Feller generator matrices,
grid discretization of nonlocal diffusion kernels, and the built-in
counterexample models.

A model is one instance of the population equation

    du/dt = M u + u * (r - b * <c, u^p>)

on a finite state space carrying a positive quadrature measure.  The
generator ``M`` is an essentially nonnegative (Metzler) matrix with zero row
sums whose positive off-diagonal graph is strongly connected.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, InputError

__all__ = [
    "Measure",
    "FellerMatrix",
    "GridSpec",
    "KernelSpec",
    "ModelSpec",
    "ValidationReport",
    "inner_product",
    "norm1",
    "norm2",
    "validate_model",
    "strongly_connected",
    "build_nonlocal_diffusion",
    "build_counterexample",
    "model_from_dict",
    "model_to_dict",
    "load_model",
    "save_model",
]

MEASURE_TOTAL_RTOL = 1e-12
ROW_SUM_RTOL = 1e-10
METZLER_RTOL = 1e-12


def _as_vector(x, n=None, name="vector"):
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise DimensionError(f"{name} has length {v.shape[0]}, expected {n}")
    return v


@dataclass(frozen=True)
class Measure:
    """Positive quadrature weights w_i together with their total mass."""

    weights: np.ndarray
    total: float

    def __post_init__(self):
        w = _as_vector(self.weights, name="weights")
        object.__setattr__(self, "weights", w)
        if w.size == 0:
            raise DimensionError("measure needs at least one weight")
        if not (w > 0).all():
            raise DomainError("all quadrature weights must be strictly positive")
        s = float(w.sum())
        if abs(self.total - s) > MEASURE_TOTAL_RTOL * max(abs(s), 1.0):
            raise DomainError(f"measure total {self.total} != sum of weights {s}")

    @classmethod
    def from_weights(cls, weights) -> "Measure":
        w = _as_vector(weights, name="weights")
        return cls(weights=w, total=float(w.sum()))

    @classmethod
    def uniform(cls, n: int, weight: float = 1.0) -> "Measure":
        return cls.from_weights(np.full(n, float(weight)))

    @property
    def n(self) -> int:
        return self.weights.shape[0]


def inner_product(u, v, m: Measure) -> float:
    """Weighted inner product sum_i w_i u_i v_i (complex conjugation on u)."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape or u.shape != m.weights.shape:
        raise DimensionError(
            f"inner_product dimensions disagree: {u.shape}, {v.shape}, {m.weights.shape}"
        )
    val = np.sum(m.weights * np.conj(u) * v)
    if np.iscomplexobj(u) or np.iscomplexobj(v):
        return complex(val)
    return float(val)


def norm1(u, m: Measure) -> float:
    u = _as_vector(np.abs(u), m.n, "u")
    return float(np.sum(m.weights * u))


def norm2(u, m: Measure) -> float:
    u = np.asarray(u)
    return float(math.sqrt(abs(np.sum(m.weights * np.abs(u) ** 2))))


@dataclass(frozen=True)
class FellerMatrix:
    """Generator matrix together with the measure of the underlying space.

    The structural invariants (Metzler sign pattern, zero row sums, strong
    connectivity) are not enforced at construction time so that defective
    matrices can be diagnosed through :func:`validate_model`; builders in this
    module always produce matrices satisfying them.
    """

    entries: np.ndarray
    measure: Measure

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"generator must be square, got shape {a.shape}")
        if a.shape[0] != self.measure.n:
            raise DimensionError(
                f"generator size {a.shape[0]} does not match measure size {self.measure.n}"
            )
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def scale(self) -> float:
        return float(max(np.abs(self.entries).max(initial=0.0), 0.0))

    def is_essentially_nonnegative(self) -> bool:
        a = self.entries
        off = a[~np.eye(self.n, dtype=bool)]
        if off.size == 0:
            return True
        return bool(off.min() >= -METZLER_RTOL * max(self.scale(), 1.0))

    def has_zero_row_sums(self) -> bool:
        rs = np.abs(self.entries.sum(axis=1)).max()
        norm = np.abs(self.entries).sum(axis=1).max()
        # convention 0 <= 0 covers M = 0
        return bool(rs <= ROW_SUM_RTOL * norm or norm == 0.0)

    def is_irreducible(self) -> bool:
        return strongly_connected(self.entries)


def strongly_connected(a) -> bool:
    """Strong connectivity of the directed graph of positive off-diagonals.

    n = 1 is connected by convention (scalar logistic baseline).
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n == 1:
        return True
    adj = a > 0.0
    np.fill_diagonal(adj, False)

    def reach(mat):
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        frontier = [0]
        while frontier:
            i = frontier.pop()
            for j in np.nonzero(mat[i])[0]:
                if not seen[j]:
                    seen[j] = True
                    frontier.append(j)
        return seen

    return bool(reach(adj).all() and reach(adj.T).all())


@dataclass(frozen=True)
class ModelSpec:
    """One problem instance of the population equation."""

    n: int
    generator: FellerMatrix
    r: np.ndarray
    b: np.ndarray
    c: np.ndarray
    p: float
    name: str = ""
    grid_origin: bool = False  # True when discretized from a continuum kernel

    def __post_init__(self):
        if self.n < 1:
            raise DimensionError("state dimension must be positive")
        if self.generator.n != self.n:
            raise DimensionError("generator dimension does not match n")
        for fld in ("r", "b", "c"):
            v = _as_vector(getattr(self, fld), self.n, fld)
            object.__setattr__(self, fld, v)
            if not (v > 0).all():
                raise DomainError(f"{fld} must be componentwise strictly positive")
        if not self.p >= 1.0:
            raise DomainError(f"exponent p must be >= 1, got {self.p}")

    @property
    def measure(self) -> Measure:
        return self.generator.measure

    @property
    def M(self) -> np.ndarray:
        return self.generator.entries


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on an interval; composite midpoint quadrature."""

    x_lo: float
    x_hi: float
    n: int

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise DomainError("grid requires x_lo < x_hi")
        if self.n < 2:
            raise DomainError("grid requires at least 2 nodes")

    def nodes(self) -> np.ndarray:
        h = (self.x_hi - self.x_lo) / self.n
        return self.x_lo + h * (np.arange(self.n) + 0.5)

    def measure(self) -> Measure:
        h = (self.x_hi - self.x_lo) / self.n
        return Measure.uniform(self.n, h)


@dataclass(frozen=True)
class KernelSpec:
    """Jump-rate kernel J(x, y) sampled at grid nodes.

    kinds:
      ``uniform``      J = params["value"] (default 1) everywhere
      ``gaussian``     J = params["amplitude"] * exp(-(x-y)^2 / (2 length^2))
      ``custom-table`` J given by ``table`` (n x n, nonnegative)
    """

    kind: str
    params: dict = field(default_factory=dict)
    symmetric: bool = True
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "gaussian", "custom-table"):
            raise DomainError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "custom-table" and self.table is None:
            raise DomainError("custom-table kernel needs a table")

    def evaluate(self, nodes: np.ndarray) -> np.ndarray:
        n = nodes.shape[0]
        if self.kind == "uniform":
            return np.full((n, n), float(self.params.get("value", 1.0)))
        if self.kind == "gaussian":
            amp = float(self.params.get("amplitude", 1.0))
            ell = float(self.params.get("length", 1.0))
            if ell <= 0:
                raise DomainError("gaussian kernel length must be positive")
            dx = nodes[:, None] - nodes[None, :]
            return amp * np.exp(-(dx**2) / (2.0 * ell**2))
        tab = np.asarray(self.table, dtype=float)
        if tab.shape != (n, n):
            raise DimensionError(f"kernel table shape {tab.shape} != ({n}, {n})")
        return tab


def build_nonlocal_diffusion(grid: GridSpec, kernel: KernelSpec) -> FellerMatrix:
    """Quadrature discretization of the jump-process generator.

    M_ij = w_j J(x_i, x_j) for i != j, and the diagonal is set to minus the
    off-diagonal row sum so that M 1 = 0 holds exactly.
    """
    nodes = grid.nodes()
    J = kernel.evaluate(nodes)
    if J.min() < 0:
        raise DomainError("kernel must be nonnegative on the grid")
    m = grid.measure()
    M = J * m.weights[None, :]
    np.fill_diagonal(M, 0.0)
    np.fill_diagonal(M, -M.sum(axis=1))
    return FellerMatrix(entries=M, measure=m)


@dataclass
class ValidationReport:
    essentially_nonnegative: bool
    irreducible: bool
    zero_row_sum: bool
    positive_coefficients: bool
    messages: list

    @property
    def passed(self) -> bool:
        return (
            self.essentially_nonnegative
            and self.irreducible
            and self.zero_row_sum
            and self.positive_coefficients
        )


def validate_model(spec: ModelSpec) -> ValidationReport:
    """Check the structural assumptions and report failures without raising."""
    gen = spec.generator
    msgs = []
    enn = gen.is_essentially_nonnegative()
    if not enn:
        msgs.append("generator has a negative off-diagonal entry")
    zrs = gen.has_zero_row_sums()
    if not zrs:
        rs = np.abs(gen.entries.sum(axis=1)).max()
        msgs.append(f"generator row sums do not vanish (max |row sum| = {rs:.3e})")
    irr = gen.is_irreducible()
    if not irr:
        msgs.append("positive off-diagonal graph is not strongly connected")
    # ModelSpec construction already enforces positivity; re-derive the flag
    # so that the report is self-contained.
    pos = bool((spec.r > 0).all() and (spec.b > 0).all() and (spec.c > 0).all())
    if not pos:
        msgs.append("r, b, c must be componentwise positive")
    return ValidationReport(
        essentially_nonnegative=enn,
        irreducible=irr,
        zero_row_sum=zrs,
        positive_coefficients=pos,
        messages=msgs,
    )


# ---------------------------------------------------------------------------
# Built-in counterexamples.  Published constants are embedded verbatim.
# ---------------------------------------------------------------------------

def _instability_one() -> ModelSpec:
    M = np.array([[-1.0, 1.0, 0.0], [0.0, -1.0, 1.0], [1.0, 0.0, -1.0]])
    b = 1.0002 * np.array([10.0, 0.001, 0.001])
    c = (1.0 / 1.0002) * np.array([0.0001, 1.0, 0.0001])
    # r = b makes the constant vector 1 the stationary state (sum c_i = 1)
    return ModelSpec(
        n=3,
        generator=FellerMatrix(M, Measure.uniform(3)),
        r=b.copy(),
        b=b,
        c=c,
        p=1.0,
        name="instability_one",
    )


def _instability_two() -> ModelSpec:
    M = 0.01 * np.array([[-1.0, 1.0, 0.0], [1.0, -2.0, 1.0], [0.0, 1.0, -1.0]])
    b = np.array([0.001, 0.001, 10.0])
    c = np.array([1.0, 0.000001, 0.00000001])
    u_star = 1000.0 * np.array([1.0, 100.0, 10000.0])
    # growth rates reconstructed so that u_star is the exact equilibrium
    r = -(1.0 / u_star) * (M @ u_star) + b * (c @ u_star)
    return ModelSpec(
        n=3,
        generator=FellerMatrix(M, Measure.uniform(3)),
        r=r,
        b=b,
        c=c,
        p=1.0,
        name="instability_two",
    )


def _angle_sine(eps: float, n: int) -> ModelSpec:
    if eps <= 0:
        raise DomainError("angle_sine requires eps > 0")
    grid = GridSpec(0.0, 2.0 * math.pi, n)
    gen = build_nonlocal_diffusion(grid, KernelSpec(kind="uniform"))
    x = grid.nodes()
    b = eps + np.maximum(np.sin(x), 0.0)
    c = eps + np.maximum(np.sin(math.pi + x), 0.0)
    # r = b * <c, 1> puts the equilibrium at the constant vector 1
    r = b * float(np.sum(gen.measure.weights * c))
    return ModelSpec(
        n=n,
        generator=gen,
        r=r,
        b=b,
        c=c,
        p=1.0,
        name=f"angle_sine(eps={eps:g})",
        grid_origin=True,
    )


def build_counterexample(case: str, eps: float = 1e-3, n: int = 200) -> ModelSpec:
    """Return one of the published counterexample models.

    case: "instability_one" (alias "one"), "instability_two" (alias "two"),
    or "angle_sine" (grid model on (0, 2*pi); eps and n apply).
    """
    key = case.strip().lower()
    if key in ("instability_one", "one"):
        return _instability_one()
    if key in ("instability_two", "two"):
        return _instability_two()
    if key in ("angle_sine", "sine"):
        return _angle_sine(eps, n)
    raise InputError(f"unknown counterexample {case!r}")


# ---------------------------------------------------------------------------
# Model JSON files
# ---------------------------------------------------------------------------

_MODEL_FIELDS = {"n", "weights", "M", "r", "b", "c", "p", "name"}


def model_from_dict(obj: dict) -> ModelSpec:
    """Parse a model dictionary.  Unknown fields are rejected."""
    if not isinstance(obj, dict):
        raise InputError("model file must contain a JSON object")
    unknown = set(obj) - _MODEL_FIELDS
    if unknown:
        raise InputError(f"unknown model fields: {sorted(unknown)}")
    missing = {"n", "M", "r", "b", "c", "p"} - set(obj)
    if missing:
        raise InputError(f"missing model fields: {sorted(missing)}")
    try:
        n = int(obj["n"])
        if n < 1:
            raise InputError("n must be a positive integer")
        weights = obj.get("weights")
        m = (
            Measure.uniform(n)
            if weights is None
            else Measure.from_weights(np.asarray(weights, dtype=float))
        )
        if m.n != n:
            raise InputError(f"weights length {m.n} != n = {n}")
        Mflat = np.asarray(obj["M"], dtype=float).ravel()
        if Mflat.size != n * n:
            raise InputError(f"M has {Mflat.size} entries, expected n*n = {n * n}")
        gen = FellerMatrix(Mflat.reshape(n, n), m)
        return ModelSpec(
            n=n,
            generator=gen,
            r=np.asarray(obj["r"], dtype=float),
            b=np.asarray(obj["b"], dtype=float),
            c=np.asarray(obj["c"], dtype=float),
            p=float(obj["p"]),
            name=str(obj.get("name", "")),
        )
    except (TypeError, ValueError) as exc:
        raise InputError(f"malformed model file: {exc}") from exc
    except (DimensionError, DomainError) as exc:
        raise InputError(f"invalid model data: {exc}") from exc


def model_to_dict(spec: ModelSpec) -> dict:
    return {
        "n": spec.n,
        "weights": spec.measure.weights.tolist(),
        "M": spec.M.ravel().tolist(),
        "r": spec.r.tolist(),
        "b": spec.b.tolist(),
        "c": spec.c.tolist(),
        "p": spec.p,
        "name": spec.name,
    }


def load_model(path) -> ModelSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"model file {path} is not valid JSON: {exc}") from exc
    return model_from_dict(obj)


def save_model(spec: ModelSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(spec), fh, indent=2)
        fh.write("\n")
