"""Discrete-time quasi-birth-death (QBD) processes.

The transition matrix is level structured::

    P = [[B, C,  0,  0, ...],
         [E, A1, A0, 0, ...],
         [0, A2, A1, A0, ...],
         ...]

Level 0 is the idle boundary; level ``k >= 1`` holds ``k`` packets.  For a
positive recurrent chain the stationary vector has the matrix-geometric
form ``pi_k = pi_1 R^(k-1)`` where ``R`` is the minimal nonnegative solution
of ``R = A0 + R A1 + R^2 A2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NumericError, QbdValidationError, ReducibleChainError

ROW_SUM_TOL = 1e-12
RATE_TOL = 1e-13
RATE_MAX_ITER = 100_000
NULL_SPACE_RTOL = 1e-10


def _as_matrix(x) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class QbdSpec:
    B: np.ndarray
    C: np.ndarray
    E: np.ndarray
    A0: np.ndarray
    A1: np.ndarray
    A2: np.ndarray

    def __post_init__(self):
        for name in ("B", "C", "E", "A0", "A1", "A2"):
            object.__setattr__(self, name, _as_matrix(getattr(self, name)))

    @property
    def phases(self) -> int:
        return self.A1.shape[0]

    @property
    def boundary(self) -> int:
        return self.B.shape[0]

    @property
    def A(self) -> np.ndarray:
        return self.A0 + self.A1 + self.A2


def validate(spec: QbdSpec, tol: float = ROW_SUM_TOL) -> None:
    """Check block shapes, nonnegativity and row sums; raise on the first violation."""
    h, b = spec.phases, spec.boundary
    shapes = {
        "A0": (h, h), "A1": (h, h), "A2": (h, h),
        "B": (b, b), "C": (b, h), "E": (h, b),
    }
    for name, shape in shapes.items():
        got = getattr(spec, name).shape
        if got != shape:
            raise QbdValidationError(f"block {name} has shape {got}, expected {shape}")
    for name in shapes:
        block = getattr(spec, name)
        if not np.all(np.isfinite(block)):
            raise QbdValidationError(f"block {name} has non-finite entries")
        bad = np.argwhere(block < 0)
        if bad.size:
            i, j = bad[0]
            raise QbdValidationError(f"block {name} has negative entry {block[i, j]!r} at ({i}, {j})")
    groups = (
        ("[B C]", spec.B.sum(1) + spec.C.sum(1)),
        ("[E A1 A0]", spec.E.sum(1) + spec.A1.sum(1) + spec.A0.sum(1)),
        ("[A2 A1 A0]", spec.A2.sum(1) + spec.A1.sum(1) + spec.A0.sum(1)),
    )
    for name, sums in groups:
        dev = np.abs(sums - 1.0)
        if np.any(dev > tol):
            row = int(np.argmax(dev > tol))
            raise QbdValidationError(f"rows of {name}: row {row} sums to {sums[row]!r} (deviation {dev[row]:.3g})")


def row_sum_deviation(spec: QbdSpec) -> float:
    """Largest absolute deviation of any block-row sum from one."""
    sums = np.concatenate([
        spec.B.sum(1) + spec.C.sum(1),
        spec.E.sum(1) + spec.A1.sum(1) + spec.A0.sum(1),
        spec.A2.sum(1) + spec.A1.sum(1) + spec.A0.sum(1),
    ])
    return float(np.max(np.abs(sums - 1.0)))


def stationary_vector(P: np.ndarray) -> np.ndarray:
    """Stationary row vector of a stochastic matrix via the bordered system.

    Solves ``(P^T - I + 1 1^T) x = 1``; singular exactly when the stationary
    vector is not unique.
    """
    n = P.shape[0]
    M = P.T - np.eye(n) + np.ones((n, n))
    try:
        x = np.linalg.solve(M, np.ones(n))
    except np.linalg.LinAlgError as exc:
        raise ReducibleChainError("phase process has more than one recurrent class") from exc
    if np.linalg.cond(M) > 1e12:
        raise ReducibleChainError("phase process has more than one recurrent class")
    return x


def drift(spec: QbdSpec):
    """Mean down-drift and up-drift ``(Pi A2 1, Pi A0 1)`` of the phase process."""
    pi = stationary_vector(spec.A)
    return float(pi @ spec.A2.sum(1)), float(pi @ spec.A0.sum(1))


def drift_stable(spec: QbdSpec) -> bool:
    down, up = drift(spec)
    return down > up


def spectral_radius(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def rate_residual(spec: QbdSpec, R: np.ndarray) -> float:
    res = R - spec.A0 - R @ spec.A1 - R @ R @ spec.A2
    return float(np.max(np.abs(res).sum(1)))


def solve_rate_matrix(spec: QbdSpec, tol: float = RATE_TOL, max_iter: int = RATE_MAX_ITER) -> np.ndarray:
    """Minimal nonnegative solution of ``R = A0 + R A1 + R^2 A2``.

    Iterates ``R <- A0 (I - A1 - R A2)^-1`` from ``R = 0``, which increases
    monotonically to the minimal solution.  Callers check stability first;
    for a transient chain the limit has spectral radius one.
    """
    h = spec.phases
    eye = np.eye(h)
    R = np.zeros((h, h))
    if not spec.A0.any():
        return R
    for _ in range(max_iter):
        R_new = np.linalg.solve((eye - spec.A1 - R @ spec.A2).T, spec.A0.T).T
        change = np.max(np.abs(R_new - R))
        R = R_new
        if change < tol:
            return R
    raise NumericError(
        f"rate matrix iteration did not converge in {max_iter} steps "
        f"(last change {change:.3g}, residual {rate_residual(spec, R):.3g})"
    )


@dataclass(frozen=True)
class SteadyState:
    pi0: np.ndarray
    pi1: np.ndarray
    R: np.ndarray
    mean_latency: Optional[float] = None

    def level(self, k: int) -> np.ndarray:
        """Stationary vector of level ``k`` (level 0 is the boundary)."""
        if k == 0:
            return self.pi0
        return self.pi1 @ np.linalg.matrix_power(self.R, k - 1)

    @property
    def total_mass(self) -> float:
        h = self.R.shape[0]
        return float(self.pi0.sum() + self.pi1 @ np.linalg.solve(np.eye(h) - self.R, np.ones(h)))

    @property
    def mean_queue_length(self) -> float:
        h = self.R.shape[0]
        inv = np.linalg.inv(np.eye(h) - self.R)
        return float(self.pi1 @ inv @ inv @ np.ones(h))


def solve_steady_state(spec: QbdSpec, R: np.ndarray, alpha: float = None) -> SteadyState:
    """Boundary and level-1 vectors from the reduced balance equations.

    ``(pi0, pi1)`` spans the one-dimensional left null space of::

        [[B - I, C             ],
         [E,     A1 + R A2 - I ]]

    and is scaled so the whole geometric series sums to one.
    """
    if spectral_radius(R) >= 1.0:
        raise NumericError(f"rate matrix has spectral radius {spectral_radius(R):.6g} >= 1; chain is not stable")
    b, h = spec.boundary, spec.phases
    top = np.hstack([spec.B - np.eye(b), spec.C])
    bottom = np.hstack([spec.E, spec.A1 + R @ spec.A2 - np.eye(h)])
    K = np.vstack([top, bottom])
    _, sv, vt = np.linalg.svd(K.T)
    thresh = NULL_SPACE_RTOL * sv[0]
    null_dim = int(np.sum(sv <= thresh))
    if null_dim != 1:
        raise ReducibleChainError(f"balance equations have a null space of dimension {null_dim}, expected 1")
    x = vt[-1]
    x = x if x.sum() >= 0 else -x
    pi0, pi1 = x[:b], x[b:]
    norm = pi0.sum() + pi1 @ np.linalg.solve(np.eye(h) - R, np.ones(h))
    pi0 = np.clip(pi0 / norm, 0.0, None)
    pi1 = np.clip(pi1 / norm, 0.0, None)
    ss = SteadyState(pi0, pi1, R)
    if alpha is not None:
        ss = SteadyState(pi0, pi1, R, mean_latency(ss, alpha))
    return ss


def mean_latency(ss: SteadyState, alpha: float) -> float:
    """Mean sojourn in slots by Little's law: mean queue length over alpha."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    return ss.mean_queue_length / alpha


def restrict(spec: QbdSpec, boundary_idx, phase_idx) -> QbdSpec:
    """Sub-chain on a closed subset of boundary states and phases."""
    bi = np.asarray(boundary_idx, dtype=int)
    pi = np.asarray(phase_idx, dtype=int)
    return QbdSpec(
        B=spec.B[np.ix_(bi, bi)],
        C=spec.C[np.ix_(bi, pi)],
        E=spec.E[np.ix_(pi, bi)],
        A0=spec.A0[np.ix_(pi, pi)],
        A1=spec.A1[np.ix_(pi, pi)],
        A2=spec.A2[np.ix_(pi, pi)],
    )


def truncated_matrix(spec: QbdSpec, levels: int) -> np.ndarray:
    """Transition matrix of the chain cut at ``levels``; arrivals at the top level are folded back."""
    b, h = spec.boundary, spec.phases
    size = b + levels * h
    P = np.zeros((size, size))
    P[:b, :b] = spec.B
    P[:b, b:b + h] = spec.C
    for k in range(1, levels + 1):
        lo = b + (k - 1) * h
        sl = slice(lo, lo + h)
        if k == 1:
            P[sl, :b] = spec.E
        else:
            P[sl, lo - h:lo] = spec.A2
        if k < levels:
            P[sl, sl] = spec.A1
            P[sl, lo + h:lo + 2 * h] = spec.A0
        else:
            P[sl, sl] = spec.A1 + spec.A0
    return P
