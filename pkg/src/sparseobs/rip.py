"""Restricted-isometry constants (exact by support enumeration, or sampled
lower / coherence upper bounds), the operator 2-norm by power iteration, and
the disjoint-support inner-product margin.

The exact constant for sparsity s is the largest deviation from 1 of any
eigenvalue of an s x s principal submatrix of A^T A; the scan over all
C(m, s) supports runs in a compiled kernel (or a batched numpy fallback).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import BudgetError, DomainError, ShapeError

METHOD_EXACT = "exact"
METHOD_MC_LOWER = "monte-carlo-lower"
METHOD_COHERENCE_UPPER = "coherence-upper"

DEFAULT_SUPPORT_BUDGET = 2_000_000

# columns must be unit-norm to this tolerance for the coherence bound to apply
_UNIT_NORM_TOL = 1e-12


@dataclass(frozen=True)
class RipReport:
    """A restricted-isometry estimate: the sparsity level, the constant (or
    bound), how it was obtained, and how many supports were examined."""

    sparsity: int
    delta: float
    method: str
    supports_examined: int

    def to_dict(self):
        delta = self.delta
        if math.isinf(delta):
            delta = "inf"
        return {
            "sparsity": self.sparsity,
            "delta": delta,
            "method": self.method,
            "supports_examined": self.supports_examined,
        }


def _as_matrix(A):
    A = np.ascontiguousarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ShapeError(f"A must be a nonempty 2-d array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError("A must be finite")
    return A


def operator_norm(A, tol: float = 1e-12) -> float:
    """Largest singular value of A by power iteration on A^T A, run from a
    fixed deterministic start vector until the Rayleigh quotient settles."""
    A = _as_matrix(A)
    tol = float(tol)
    if not (tol > 0):
        raise DomainError(f"tol must be positive, got {tol}")
    m = A.shape[1]
    B = A.T @ A
    if not B.any():
        return 0.0
    # ramp breaks symmetry in case the flat vector is orthogonal to the top
    # eigenvector; restarts below cover the remaining degenerate cases
    v = 1.0 + np.arange(m) / max(m, 1)
    v /= np.linalg.norm(v)
    lam_prev = -1.0
    basis_next = 0
    for _ in range(100_000):
        w = B @ v
        lam = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # v fell in the nullspace; restart from the next basis vector
            v = np.zeros(m)
            v[basis_next % m] = 1.0
            basis_next += 1
            lam_prev = -1.0
            continue
        v = w / nw
        if abs(lam - lam_prev) <= tol * max(abs(lam), 1e-300):
            break
        lam_prev = lam
    return math.sqrt(max(lam, 0.0))


def _check_sparsity(m, s):
    s = int(s)
    if not (1 <= s <= m):
        raise DomainError(f"sparsity must lie in [1, {m}], got {s}")
    return s


def rip_constant_exact(A, s: int, budget: int = DEFAULT_SUPPORT_BUDGET) -> RipReport:
    """The exact restricted-isometry constant of order s by enumerating all
    C(m, s) supports.  Refuses with BudgetError when the enumeration would
    exceed budget; use rip_constant_bounds instead at that point."""
    A = _as_matrix(A)
    s = _check_sparsity(A.shape[1], s)
    budget = int(budget)
    if budget < 1:
        raise DomainError(f"budget must be >= 1, got {budget}")
    count = math.comb(A.shape[1], s)
    if count > budget:
        raise BudgetError(
            f"enumerating {count} supports exceeds the budget of {budget}; "
            "use rip_constant_bounds for sampled and coherence estimates"
        )
    G = np.ascontiguousarray(A.T @ A)
    delta = float(kernels.rip_scan(G, s))
    return RipReport(sparsity=s, delta=delta, method=METHOD_EXACT, supports_examined=count)


def _max_deviation(G, supports):
    sub = G[supports[:, :, None], supports[:, None, :]]
    ev = np.linalg.eigvalsh(sub)
    return float(max(np.max(ev[:, -1]) - 1.0, np.max(1.0 - ev[:, 0])))


def mutual_coherence(A) -> float:
    """Largest |cosine| between distinct columns of A."""
    A = _as_matrix(A)
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise DomainError("mutual coherence is undefined for a zero column")
    An = A / norms
    C = np.abs(An.T @ An)
    np.fill_diagonal(C, 0.0)
    return float(C.max())


def rip_constant_bounds(A, s: int, samples: int, seed: int):
    """(lower, upper) bracketing reports for the order-s constant.

    The lower bound is the largest deviation over `samples` uniformly drawn
    supports (counter-based generator, so the estimate is reproducible and
    nondecreasing in samples for a fixed seed).  The upper bound is the
    coherence bound (s - 1) * mu, valid only for unit-norm columns; otherwise
    it reports inf.
    """
    A = _as_matrix(A)
    m = A.shape[1]
    s = _check_sparsity(m, s)
    samples = int(samples)
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")

    G = A.T @ A
    rng = np.random.Generator(np.random.Philox(int(seed)))
    lower = 0.0
    done = 0
    while done < samples:
        chunk = min(samples - done, 65_536)
        # first s entries of a random permutation of each row index set
        keys = rng.random((chunk, m))
        supports = np.argsort(keys, axis=1)[:, :s]
        supports = np.ascontiguousarray(np.sort(supports, axis=1))
        lower = max(lower, _max_deviation(G, supports))
        done += chunk
    lower_report = RipReport(
        sparsity=s, delta=float(lower), method=METHOD_MC_LOWER, supports_examined=samples
    )

    norms = np.sqrt(np.diag(G))
    if np.max(np.abs(norms - 1.0)) <= _UNIT_NORM_TOL:
        upper = float((s - 1) * mutual_coherence(A))
    else:
        upper = float("inf")
    upper_report = RipReport(
        sparsity=s, delta=upper, method=METHOD_COHERENCE_UPPER, supports_examined=0
    )
    return lower_report, upper_report


def disjoint_inner_product_margin(A, x, x_prime, delta: float) -> float:
    """delta * ||x|| * ||x'|| - |<Ax, Ax'>| for vectors with disjoint supports.

    Nonnegative whenever delta is a valid restricted-isometry constant of
    order ||x||_0 + ||x'||_0 for A.
    """
    A = _as_matrix(A)
    x = np.asarray(x, dtype=float)
    xp = np.asarray(x_prime, dtype=float)
    m = A.shape[1]
    if x.shape != (m,) or xp.shape != (m,):
        raise ShapeError(f"x and x_prime must have shape ({m},), got {x.shape} and {xp.shape}")
    if np.any((x != 0) & (xp != 0)):
        raise DomainError("x and x_prime must have disjoint supports")
    delta = float(delta)
    if delta < 0:
        raise DomainError(f"delta must be nonnegative, got {delta}")
    inner = float((A @ x) @ (A @ xp))
    return delta * float(np.linalg.norm(x)) * float(np.linalg.norm(xp)) - abs(inner)
