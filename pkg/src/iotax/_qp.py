"""Dense primal active-set solver for strictly convex quadratic programs.

Solves  min  0.5 z^T H z + g^T z  subject to  G z <= h  for symmetric
positive definite H.  Classical working-set method: each step solves the
equality-constrained subproblem through its KKT system, advances to the
nearest blocking constraint, and drops constraints with negative
multipliers at stationary points.  Because H is positive definite, every
blocking constraint is linearly independent of the working set and the
iteration terminates; an iteration cap guards against degenerate cycling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError

_STEP_EPS = 1e-13


@dataclass(frozen=True)
class QPSolution:
    z: np.ndarray
    multipliers: np.ndarray  # one per constraint row; zero off the final active set
    iterations: int


def solve_qp(H, g, G, h, z0=None, *, tol: float = 1e-11,
             max_iter: int | None = None) -> QPSolution:
    """Minimize 0.5 z^T H z + g^T z over G z <= h from a feasible start."""
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    n = H.shape[0]
    m = G.shape[0]
    if z0 is None:
        z = np.zeros(n)
    else:
        z = np.asarray(z0, dtype=float).copy()
    if np.any(G @ z > h + tol * np.maximum(1.0, np.abs(h))):
        raise DomainError("QP start point is infeasible")
    if max_iter is None:
        max_iter = 100 * (n + m + 1)

    working = np.zeros(m, dtype=bool)
    grad_scale = max(1.0, float(np.max(np.abs(g))))
    for iteration in range(1, max_iter + 1):
        grad = H @ z + g
        active = np.flatnonzero(working)
        d, lam = _kkt_step(H, G, h, z, grad, active)

        if float(np.max(np.abs(d))) <= tol * max(1.0, float(np.max(np.abs(z)))):
            if active.size == 0 or float(np.min(lam)) >= -tol * grad_scale:
                multipliers = np.zeros(m)
                if active.size:
                    multipliers[active] = np.maximum(lam, 0.0)
                return QPSolution(z=z, multipliers=multipliers, iterations=iteration)
            working[active[int(np.argmin(lam))]] = False
            continue

        step_rows = G @ d
        slack = np.maximum(h - G @ z, 0.0)
        blocking = -1
        alpha = 1.0
        candidates = np.flatnonzero(~working & (step_rows > _STEP_EPS * max(1.0, float(np.max(np.abs(step_rows))))))
        if candidates.size:
            ratios = slack[candidates] / step_rows[candidates]
            best = int(np.argmin(ratios))
            if ratios[best] < 1.0:
                alpha = float(ratios[best])
                # deterministic tie-break: smallest constraint index at the minimum
                tied = candidates[ratios <= alpha * (1.0 + 1e-12) + 1e-15]
                blocking = int(tied.min())
        z = z + alpha * d
        if blocking >= 0:
            working[blocking] = True

    raise ConvergenceError(f"active-set QP did not terminate within {max_iter} iterations")


def _kkt_step(H, G, h, z, grad, active):
    """Equality-constrained subproblem on the working set, with drift correction."""
    n = H.shape[0]
    k = active.size
    if k == 0:
        try:
            d = np.linalg.solve(H, -grad)
        except np.linalg.LinAlgError:
            d, *_ = np.linalg.lstsq(H, -grad, rcond=None)
        return d, np.empty(0)
    G_w = G[active]
    kkt = np.zeros((n + k, n + k))
    kkt[:n, :n] = H
    kkt[:n, n:] = G_w.T
    kkt[n:, :n] = G_w
    rhs = np.concatenate([-grad, h[active] - G_w @ z])
    try:
        solution = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        solution, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    return solution[:n], solution[n:]
