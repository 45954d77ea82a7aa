"""Domain types and vector primitives: the right-hand-side catalog, measurement
descriptions, weighted-l1 machinery, best s-term truncation, and JSON
(de)serialization of problem descriptions.

All container types are immutable after construction (arrays are copied and
marked read-only), so instances are safe to share across worker processes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from . import kernels

RHS_KINDS = ("zero", "linear", "affine", "tanh_saturated")

_KIND_CODES = {
    "zero": kernels.RHS_ZERO,
    "linear": kernels.RHS_LINEAR,
    "affine": kernels.RHS_AFFINE,
    "tanh_saturated": kernels.RHS_TANH,
}
_KIND_ALIASES = {"tanh-saturated": "tanh_saturated"}

# slack for validating a user-supplied Lipschitz constant against the
# analytic one (power iteration resolves the norm to ~1e-12 relative)
_LIP_SLACK = 1e-9


def _frozen_array(a, shape, name):
    arr = np.array(a, dtype=float)
    if arr.shape != shape:
        raise ShapeError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


def _spectral_norm(M):
    # local import: rip needs kernels only, so this stays cycle-free
    from .rip import operator_norm

    return operator_norm(M)


@dataclass(frozen=True)
class DynamicalSystem:
    """An autonomous ODE x' = f(x) from the globally Lipschitz catalog.

    kind selects f: "zero" (f = 0), "linear" (f = Mx), "affine" (f = Mx + c),
    or "tanh_saturated" (f = tanh(Mx), componentwise).  lipschitz stores a
    global Lipschitz constant for f; when omitted it is filled with the exact
    analytic one (0 for the zero field, the operator 2-norm of M otherwise).
    A supplied value may exceed the analytic bound but not undercut it.
    """

    dim: int
    kind: str
    matrix: np.ndarray | None = None
    drift: np.ndarray | None = None
    lipschitz: float | None = None

    def __post_init__(self):
        kind = _KIND_ALIASES.get(self.kind, self.kind)
        if kind not in RHS_KINDS:
            raise DomainError(f"unknown rhs kind {self.kind!r}; expected one of {RHS_KINDS}")
        object.__setattr__(self, "kind", kind)

        dim = self.dim
        if not isinstance(dim, (int, np.integer)) or isinstance(dim, bool) or dim < 1:
            raise DomainError(f"dim must be a positive integer, got {dim!r}")
        object.__setattr__(self, "dim", int(dim))
        dim = self.dim

        if kind == "zero":
            if self.matrix is not None or self.drift is not None:
                raise DomainError("zero systems take no matrix or drift")
        else:
            if self.matrix is None:
                raise DomainError(f"{kind} systems require a matrix")
            object.__setattr__(self, "matrix", _frozen_array(self.matrix, (dim, dim), "matrix"))
            if kind == "affine":
                if self.drift is None:
                    raise DomainError("affine systems require a drift vector")
                object.__setattr__(self, "drift", _frozen_array(self.drift, (dim,), "drift"))
            elif self.drift is not None:
                raise DomainError(f"{kind} systems take no drift vector")

        analytic = 0.0 if kind == "zero" else _spectral_norm(self.matrix)
        if self.lipschitz is None:
            object.__setattr__(self, "lipschitz", float(analytic))
        else:
            lip = float(self.lipschitz)
            if not math.isfinite(lip):
                raise DomainError("lipschitz must be finite")
            if lip < analytic - _LIP_SLACK * max(1.0, analytic):
                raise DomainError(
                    f"lipschitz {lip} undercuts the analytic bound {analytic:.12g}"
                )
            object.__setattr__(self, "lipschitz", lip)

    @staticmethod
    def _square_dim(matrix):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ShapeError(f"matrix must be square, got shape {matrix.shape}")
        return matrix, matrix.shape[0]

    @classmethod
    def zero(cls, dim):
        return cls(dim=dim, kind="zero")

    @classmethod
    def linear(cls, matrix):
        matrix, dim = cls._square_dim(matrix)
        return cls(dim=dim, kind="linear", matrix=matrix)

    @classmethod
    def affine(cls, matrix, drift):
        matrix, dim = cls._square_dim(matrix)
        return cls(dim=dim, kind="affine", matrix=matrix, drift=drift)

    @classmethod
    def tanh_saturated(cls, matrix):
        matrix, dim = cls._square_dim(matrix)
        return cls(dim=dim, kind="tanh_saturated", matrix=matrix)

    def kernel_args(self):
        """(kind code, matrix, drift) with concrete float64 arrays for the
        jitted kernels; the zero kind gets explicit zero arrays."""
        m = self.dim
        M = np.zeros((m, m)) if self.matrix is None else np.ascontiguousarray(self.matrix)
        c = np.zeros(m) if self.drift is None else np.ascontiguousarray(self.drift)
        return _KIND_CODES[self.kind], M, c


def eval_rhs(system: DynamicalSystem, t: float, x: np.ndarray) -> np.ndarray:
    """f(t, x) for the catalog member.  The catalog is autonomous, so t is
    accepted for interface uniformity and ignored."""
    x = np.asarray(x, dtype=float)
    if x.shape != (system.dim,):
        raise ShapeError(f"state must have shape ({system.dim},), got {x.shape}")
    kind = system.kind
    if kind == "zero":
        return np.zeros_like(x)
    if kind == "linear":
        return system.matrix @ x
    if kind == "affine":
        return system.matrix @ x + system.drift
    return np.tanh(system.matrix @ x)


def rhs_jacobian(system: DynamicalSystem, x: np.ndarray) -> np.ndarray:
    """df/dx at x.  For the tanh field this is diag(1 - tanh(Mx)^2) M."""
    x = np.asarray(x, dtype=float)
    if x.shape != (system.dim,):
        raise ShapeError(f"state must have shape ({system.dim},), got {x.shape}")
    kind = system.kind
    if kind == "zero":
        return np.zeros((system.dim, system.dim))
    if kind in ("linear", "affine"):
        return system.matrix.copy()
    y = np.tanh(system.matrix @ x)
    return (1.0 - y * y)[:, None] * system.matrix


def lipschitz_bound(system: DynamicalSystem) -> float:
    """The stored global Lipschitz constant of the right-hand side."""
    return system.lipschitz


@dataclass(frozen=True)
class MeasurementModel:
    """Terminal-time linear measurement b = A x(T) + noise, with the noise
    bounded in l2 norm by noise_radius, plus the per-coordinate weights used
    by the recovery objective."""

    matrix: np.ndarray
    time: float
    noise_radius: float
    weights: np.ndarray

    def __post_init__(self):
        A = np.array(self.matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise ShapeError(f"measurement matrix must be 2-d and nonempty, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise DomainError("measurement matrix must be finite")
        A.setflags(write=False)
        object.__setattr__(self, "matrix", A)

        t = float(self.time)
        if not (math.isfinite(t) and t > 0):
            raise DomainError(f"measurement time must be positive and finite, got {t}")
        object.__setattr__(self, "time", t)

        eps = float(self.noise_radius)
        if not (math.isfinite(eps) and eps >= 0):
            raise DomainError(f"noise_radius must be nonnegative and finite, got {eps}")
        object.__setattr__(self, "noise_radius", eps)

        w = _frozen_array(self.weights, (A.shape[1],), "weights")
        if np.any(w <= 0):
            raise DomainError("weights must be strictly positive")
        object.__setattr__(self, "weights", w)

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def m(self):
        return self.matrix.shape[1]


@dataclass(frozen=True)
class SparseProblem:
    """A recovery instance: the dynamics, the measurement description, the
    observed vector, and the sparsity level assumed of the initial state."""

    system: DynamicalSystem
    measurement: MeasurementModel
    observation: np.ndarray
    sparsity: int

    def __post_init__(self):
        if self.measurement.m != self.system.dim:
            raise ShapeError(
                f"measurement matrix has {self.measurement.m} columns "
                f"but the system dimension is {self.system.dim}"
            )
        b = _frozen_array(self.observation, (self.measurement.n,), "observation")
        object.__setattr__(self, "observation", b)
        s = self.sparsity
        if not isinstance(s, (int, np.integer)) or isinstance(s, bool):
            raise DomainError(f"sparsity must be an integer, got {s!r}")
        s = int(s)
        if not (1 <= s <= self.system.dim):
            raise DomainError(f"sparsity must lie in [1, {self.system.dim}], got {s}")
        object.__setattr__(self, "sparsity", s)


@dataclass(frozen=True)
class RecoveryOutcome:
    """Result of a recovery run: the estimate, its measurement residual, its
    weighted-l1 norm, the outer iteration count, and a convergence flag."""

    estimate: np.ndarray
    residual: float
    weighted_l1: float
    iterations: int
    converged: bool

    def __post_init__(self):
        est = np.array(self.estimate, dtype=float)
        if est.ndim != 1:
            raise ShapeError(f"estimate must be 1-d, got shape {est.shape}")
        est.setflags(write=False)
        object.__setattr__(self, "estimate", est)
        object.__setattr__(self, "residual", float(self.residual))
        object.__setattr__(self, "weighted_l1", float(self.weighted_l1))
        if self.residual < 0 or self.weighted_l1 < 0:
            raise DomainError("residual and weighted_l1 must be nonnegative")
        it = int(self.iterations)
        if it < 0:
            raise DomainError("iterations must be nonnegative")
        object.__setattr__(self, "iterations", it)
        object.__setattr__(self, "converged", bool(self.converged))

    def to_dict(self):
        return {
            "estimate": self.estimate.tolist(),
            "residual": self.residual,
            "weighted_l1": self.weighted_l1,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def weighted_l1_norm(x: np.ndarray, weights: np.ndarray) -> float:
    """sum_i weights_i * |x_i| for strictly positive weights."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(weights, dtype=float)
    if x.ndim != 1 or x.shape != w.shape:
        raise ShapeError(f"x and weights must be 1-d with equal length, got {x.shape} and {w.shape}")
    if np.any(w <= 0):
        raise DomainError("weights must be strictly positive")
    return float(np.sum(w * np.abs(x)))


def weight_condition_number(weights: np.ndarray) -> float:
    """max(weights) / min(weights) for strictly positive weights."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ShapeError(f"weights must be a nonempty 1-d array, got shape {w.shape}")
    if np.any(w <= 0):
        raise DomainError("weights must be strictly positive")
    return float(np.max(w) / np.min(w))


def best_s_term(x: np.ndarray, s: int) -> np.ndarray:
    """The best s-term approximation: keep the s largest-magnitude entries and
    zero the rest.  Ties break toward the lower index (stable sort), and at
    most ||x||_0 entries survive."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ShapeError(f"x must be 1-d, got shape {x.shape}")
    s = int(s)
    if not (0 <= s <= x.size):
        raise DomainError(f"s must lie in [0, {x.size}], got {s}")
    order = np.argsort(-np.abs(x), kind="stable")
    out = np.zeros_like(x)
    keep = order[:s]
    out[keep] = x[keep]
    return out


# --- JSON document form -----------------------------------------------------
# matrices are row-major nested lists; optional members serialize as null


def system_to_dict(system: DynamicalSystem) -> dict:
    return {
        "dim": system.dim,
        "rhs": {
            "kind": system.kind,
            "matrix": None if system.matrix is None else system.matrix.tolist(),
            "drift": None if system.drift is None else system.drift.tolist(),
        },
        "lipschitz": system.lipschitz,
    }


def system_from_dict(doc: dict) -> DynamicalSystem:
    try:
        rhs = doc["rhs"]
        return DynamicalSystem(
            dim=doc["dim"],
            kind=rhs["kind"],
            matrix=rhs.get("matrix"),
            drift=rhs.get("drift"),
            lipschitz=doc.get("lipschitz"),
        )
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed system document: {exc}") from exc


def measurement_to_dict(measurement: MeasurementModel) -> dict:
    return {
        "matrix": measurement.matrix.tolist(),
        "time": measurement.time,
        "noise_radius": measurement.noise_radius,
        "weights": measurement.weights.tolist(),
    }


def measurement_from_dict(doc: dict) -> MeasurementModel:
    try:
        return MeasurementModel(
            matrix=doc["matrix"],
            time=doc["time"],
            noise_radius=doc["noise_radius"],
            weights=doc["weights"],
        )
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed measurement document: {exc}") from exc


def problem_to_dict(problem: SparseProblem) -> dict:
    return {
        "system": system_to_dict(problem.system),
        "measurement": measurement_to_dict(problem.measurement),
        "observation": problem.observation.tolist(),
        "sparsity": problem.sparsity,
    }


def problem_from_dict(doc: dict) -> SparseProblem:
    try:
        return SparseProblem(
            system=system_from_dict(doc["system"]),
            measurement=measurement_from_dict(doc["measurement"]),
            observation=doc["observation"],
            sparsity=doc["sparsity"],
        )
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed problem document: {exc}") from exc


def system_to_json(system: DynamicalSystem) -> str:
    return json.dumps(system_to_dict(system), indent=2)


def system_from_json(text: str) -> DynamicalSystem:
    return system_from_dict(json.loads(text))


def problem_to_json(problem: SparseProblem) -> str:
    return json.dumps(problem_to_dict(problem), indent=2)


def problem_from_json(text: str) -> SparseProblem:
    return problem_from_dict(json.loads(text))
