"""Structural analysis of the direct-cost matrix.

Covers the structural conditions the tax constructions rely on:
irreducibility (strong connectivity of the digraph of positive entries),
productivity (spectral radius below one), the Leontief inverse, and
membership of a target vector in the cone spanned by the columns of
A(E-A)^(-1).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import nnls

from .errors import (
    ConvergenceError,
    DimensionError,
    DomainError,
    NotProductiveError,
    SingularSystemError,
)

DEFAULT_TOL = 1e-10
POWER_ITERATION_CAP = 10_000
# Residual gate for reproducing the target vector in cone_membership,
# relative to the max-norm of the target.
CONE_RESIDUAL_GATE = 1e-8


class ConeRegion(Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class ConeMembership:
    """Location of a vector relative to the cone of columns of A(E-A)^(-1).

    ``z`` solves A z = v (least-squares when A is singular) and
    ``alpha = (E - A) z`` holds the combination weights; the vector lies in
    the cone's interior exactly when every weight is strictly positive.
    """

    region: ConeRegion
    alpha: np.ndarray
    z: np.ndarray


@dataclass(frozen=True)
class MatrixProfile:
    """Structural facts about a nonnegative cost matrix.

    ``leontief_inverse`` is present iff the matrix is productive and then
    solves (E - A) Y = E with nonnegative entries.
    """

    A: np.ndarray
    irreducible: bool
    spectral_radius: float
    productive: bool
    leontief_inverse: np.ndarray | None


def _validate_square_nonnegative(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix contains non-finite entries")
    if np.any(A < 0):
        raise DomainError("matrix contains negative entries")
    return A


def _reachable(adjacency: np.ndarray, start: int) -> np.ndarray:
    """Boolean reachability from ``start`` in the digraph given by a boolean matrix."""
    n = adjacency.shape[0]
    visited = np.zeros(n, dtype=bool)
    visited[start] = True
    frontier = visited.copy()
    while frontier.any():
        reached = adjacency[frontier].any(axis=0)
        frontier = reached & ~visited
        visited |= frontier
    return visited


def is_irreducible(A: np.ndarray) -> bool:
    """Strong connectivity of the digraph with an edge (i -> j) iff a_ij > 0.

    Two reachability sweeps (forward and on the transpose graph); exact and
    O(n + nnz) up to dense bookkeeping.
    """
    adjacency = A > 0
    return bool(_reachable(adjacency, 0).all() and _reachable(adjacency.T, 0).all())


def spectral_radius(A: np.ndarray, tol: float = DEFAULT_TOL,
                    max_iter: int = POWER_ITERATION_CAP) -> float:
    """Dominant-eigenvalue estimate of a nonnegative matrix by power iteration.

    Iterates on A + E rather than A: the shift leaves the dominant
    eigenvector unchanged, maps the radius to radius + 1, and makes the
    iteration aperiodic so periodic matrices cannot stall it.  Deterministic
    all-ones start; stops when the Rayleigh-quotient eigenpair residual
    drops below ``tol`` relative to the estimate.  When the iteration makes
    no geometric progress (defective dominant eigenvalues decay only like
    1/k), the radius is taken from a dense eigenvalue solve instead.
    """
    n = A.shape[0]
    shifted = A + np.eye(n)
    v = np.full(n, 1.0 / np.sqrt(n))
    window_res = np.inf
    for k in range(max_iter):
        w = shifted @ v
        mu = float(v @ w)  # v has unit norm
        res = float(np.max(np.abs(w - mu * v)))
        if res <= tol * mu:
            return mu - 1.0
        if k % 512 == 511:
            if res > 0.5 * window_res:
                break  # stalled; healthy geometric rates halve far sooner
            window_res = res
        v = w / np.linalg.norm(w)
    try:
        return float(np.max(np.abs(np.linalg.eigvals(A))))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(
            f"spectral radius estimate did not stabilize within {max_iter} iterations"
        ) from exc


def analyze_matrix(A, tol: float = DEFAULT_TOL) -> MatrixProfile:
    """Irreducibility, spectral radius, productivity, and Leontief inverse.

    Productive means spectral radius < 1 - tol; only then is the Leontief
    inverse computed.
    """
    A = _validate_square_nonnegative(A)
    if tol <= 0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    rho = spectral_radius(A, tol=tol)
    productive = rho < 1.0 - tol
    leontief = None
    if productive:
        n = A.shape[0]
        leontief = np.linalg.solve(np.eye(n) - A, np.eye(n))
    A = A.copy()
    A.setflags(write=False)
    return MatrixProfile(
        A=A,
        irreducible=is_irreducible(A),
        spectral_radius=rho,
        productive=productive,
        leontief_inverse=leontief,
    )


def cone_membership(profile: MatrixProfile, v, tol: float = 1e-9) -> ConeMembership:
    """Locate v relative to the cone of the columns of A(E-A)^(-1).

    Solves A z = v (LU when A is nonsingular, nonnegative least squares
    with a residual gate otherwise) and classifies by the signs of
    alpha = (E - A) z: Interior when every weight exceeds ``tol``,
    Boundary when none falls below ``-tol`` but some sit inside the band,
    Outside otherwise or when no nonnegative z reproduces v within the gate.
    """
    if not profile.productive:
        raise NotProductiveError("cone membership requires a productive matrix")
    A = profile.A
    v = np.asarray(v, dtype=float)
    if v.shape != (A.shape[0],):
        raise DimensionError(f"target vector has shape {v.shape}, expected ({A.shape[0]},)")
    if np.any(v <= 0):
        raise DomainError("cone membership requires a strictly positive target vector")

    gate = CONE_RESIDUAL_GATE * float(np.max(np.abs(v)))
    z = None
    try:
        candidate = np.linalg.solve(A, v)
        if float(np.max(np.abs(A @ candidate - v))) <= gate:
            z = candidate
    except np.linalg.LinAlgError:
        z = None
    if z is None:
        try:
            z, _ = nnls(A, v)
        except RuntimeError as exc:
            raise SingularSystemError(f"nonnegative solve of A z = v failed: {exc}") from exc
        if float(np.max(np.abs(A @ z - v))) > gate:
            # No nonnegative z reproduces v, so no nonnegative weight vector
            # exists either (alpha >= 0 would force z = (E-A)^(-1) alpha >= 0).
            alpha = z - A @ z
            return ConeMembership(region=ConeRegion.OUTSIDE, alpha=alpha, z=z)

    alpha = z - A @ z
    if np.all(alpha > tol):
        region = ConeRegion.INTERIOR
    elif np.all(alpha >= -tol):
        region = ConeRegion.BOUNDARY
    else:
        region = ConeRegion.OUTSIDE
    return ConeMembership(region=region, alpha=alpha, z=z)
