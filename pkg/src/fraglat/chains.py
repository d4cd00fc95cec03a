"""Queueing chains for static and dynamic rate adaptation.

Static rate ``n``: the phase is the index of the fragment being sent, so
the service time is phase-type with a negative-binomial law.

Dynamic rate: phases of all rates are stacked, rate ``n`` owning ``n``
consecutive phases (rate 1 first).  A failed first fragment moves one rate
down with probability ``d``; a delivered packet moves one rate up with
probability ``u`` for the next packet.  Both moves are clamped at the ends
of the ladder.  The idle boundary keeps one state per rate so an empty
buffer does not erase the rate memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import qbd
from .errors import ConfigError, ReducibleChainError
from .meta import TspGrid
from .model import LinkConfig, phase_count
from .qbd import QbdSpec


@dataclass(frozen=True)
class StaticChain:
    n: int
    p: float
    beta: np.ndarray
    T: np.ndarray
    s: np.ndarray


def static_ph(p: float, n: int) -> StaticChain:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"success probability must lie in [0, 1], got {p!r}")
    if n < 1:
        raise ValueError(f"rate index must be positive, got {n!r}")
    beta = np.zeros(n)
    beta[0] = 1.0
    T = np.diag(np.full(n, 1.0 - p)) + np.diag(np.full(n - 1, p), 1)
    s = 1.0 - T.sum(1)
    return StaticChain(n, p, beta, T, s)


def absorption_pmf(beta: np.ndarray, T: np.ndarray, s: np.ndarray, kmax: int) -> np.ndarray:
    """``out[k-1] = beta T^(k-1) s`` for k = 1..kmax."""
    out = np.empty(kmax)
    v = np.asarray(beta, dtype=float)
    for k in range(kmax):
        out[k] = v @ s
        v = v @ T
    return out


def absorption_mean(beta: np.ndarray, T: np.ndarray) -> float:
    h = T.shape[0]
    return float(beta @ np.linalg.solve(np.eye(h) - T, np.ones(h)))


def negative_binomial_pmf(n: int, p: float, k: int) -> float:
    """Probability that the n-th success of Bernoulli(p) trials lands on trial k."""
    if k < n:
        return 0.0
    return math.comb(k - 1, n - 1) * p ** n * (1.0 - p) ** (k - n)


def build_static(p: float, n: int, alpha: float) -> QbdSpec:
    ch = static_ph(p, n)
    sb = np.outer(ch.s, ch.beta)
    a_bar = 1.0 - alpha
    return QbdSpec(
        B=[[a_bar]],
        C=alpha * ch.beta[None, :],
        E=a_bar * ch.s[:, None],
        A0=alpha * ch.T,
        A1=alpha * sb + a_bar * ch.T,
        A2=a_bar * sb,
    )


def static_closed_form(p: float, n: int, alpha: float):
    """Explicit Geo/PH/1 solution ``(R, pi0, pi1)``.

    Valid because the level-down block has rank one, which pins the
    first-passage matrix to ``1 beta``.
    """
    ch = static_ph(p, n)
    I = np.eye(n)
    e = np.ones(n)
    a_bar = 1.0 - alpha
    sb = np.outer(ch.s, ch.beta)
    R = alpha * ch.T @ np.linalg.inv(I - alpha * sb - a_bar * ch.T - alpha * np.outer(ch.T @ e, ch.beta))
    Z = np.linalg.inv(I - alpha * sb - a_bar * ch.T - R @ (a_bar * sb))
    pi0 = 1.0 / (1.0 + alpha * ch.beta @ Z @ np.linalg.solve(I - R, e))
    pi1 = pi0 * alpha * ch.beta @ Z
    return R, float(pi0), pi1


def block_offset(n: int) -> int:
    """0-based index of the first phase of rate ``n`` in the dynamic layout."""
    return (n - 1) * n // 2


@dataclass(frozen=True)
class DynamicChain:
    """Phase matrices of the dynamic scheme for one TSP class.

    ``T`` moves within a packet (and adapts on first-fragment failure),
    ``S`` completes a packet and picks the next rate, ``E`` maps a completion
    to the rate remembered while idle, ``C`` restarts from idle rate ``n``.
    """

    p: np.ndarray
    d: float
    u: float
    T: np.ndarray
    S: np.ndarray
    E: np.ndarray
    C: np.ndarray

    @property
    def N(self) -> int:
        return len(self.p)

    @property
    def phases(self) -> int:
        return self.T.shape[0]


def dynamic_chain(p_col, d: float, u: float) -> DynamicChain:
    p = np.asarray(p_col, dtype=float)
    N = len(p)
    if N < 1:
        raise ConfigError("dynamic chain needs at least one rate")
    if not (0 <= d <= 1 and 0 <= u <= 1):
        raise ConfigError(f"d and u must lie in [0, 1], got d={d!r}, u={u!r}")
    if np.any((p < 0) | (p > 1)):
        raise ConfigError("success probabilities must lie in [0, 1]")
    D = phase_count(N)
    T = np.zeros((D, D))
    S = np.zeros((D, D))
    for n in range(1, N + 1):
        o = block_offset(n)
        pn = p[n - 1]
        qn = 1.0 - pn
        down = d if n < N else 0.0
        T[o, o] += (1.0 - down) * qn
        if n < N:
            T[o, block_offset(n + 1)] += down * qn
        for j in range(1, n):
            T[o + j - 1, o + j] += pn
            T[o + j, o + j] += qn
        up = u if n > 1 else 0.0
        last = o + n - 1
        S[last, o] += (1.0 - up) * pn
        if n > 1:
            S[last, block_offset(n - 1)] += up * pn
    firsts = [block_offset(n) for n in range(1, N + 1)]
    E = S[:, firsts].copy()
    C = np.zeros((N, D))
    C[np.arange(N), firsts] = 1.0
    return DynamicChain(p, d, u, T, S, E, C)


def dynamic_qbd(chain: DynamicChain, alpha: float) -> QbdSpec:
    a_bar = 1.0 - alpha
    return QbdSpec(
        B=a_bar * np.eye(chain.N),
        C=alpha * chain.C,
        E=a_bar * chain.E,
        A0=alpha * chain.T,
        A1=a_bar * chain.T + alpha * chain.S,
        A2=a_bar * chain.S,
    )


def build_dynamic(p_col, alpha: float, d: float, u: float, N: Optional[int] = None) -> QbdSpec:
    if N is not None and len(p_col) != N:
        raise ConfigError(f"grid column has {len(p_col)} rates, expected N={N}")
    return dynamic_qbd(dynamic_chain(p_col, d, u), alpha)


def pin_rate(spec: QbdSpec, n: int) -> QbdSpec:
    """Restrict a dynamic chain to rate ``n`` (closed when d = u = 0)."""
    o = block_offset(n)
    return qbd.restrict(spec, [n - 1], range(o, o + n))


def _reachable(spec: QbdSpec, start: int) -> tuple:
    """States (boundary first, then phases) reachable from boundary state ``start``."""
    b = spec.boundary
    adj = np.block([[spec.B, spec.C], [spec.E, spec.A]]) > 0
    seen = np.zeros(adj.shape[0], dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(adj[i] & ~seen):
            seen[j] = True
            stack.append(j)
    return np.flatnonzero(seen[:b]), np.flatnonzero(seen[b:])


# ---------------------------------------------------------------------------
# latency tables


@dataclass(frozen=True)
class ClassLatency:
    m: int
    stable: bool
    tx_latency: float
    total_latency: float


LATENCY_CSV_HEADER = ("scheme", "rate_index_or_dyn", "class_index", "stable_flag", "tx_latency", "total_latency")


@dataclass(frozen=True)
class LatencyReport:
    scheme: str
    rate_index: Optional[int]
    classes: tuple

    @property
    def label(self) -> str:
        return str(self.rate_index) if self.rate_index is not None else "dyn"

    @property
    def totals(self) -> np.ndarray:
        return np.array([c.total_latency for c in self.classes])

    @property
    def average(self) -> float:
        """Mean over all classes; infinite if any class is unstable."""
        return float(np.mean(self.totals))

    @property
    def stable_average(self) -> float:
        """Mean over stable classes only (nan if none is stable)."""
        vals = [c.total_latency for c in self.classes if c.stable]
        return float(np.mean(vals)) if vals else math.nan

    @property
    def unstable_fraction(self) -> float:
        return sum(not c.stable for c in self.classes) / len(self.classes)

    def csv_rows(self):
        for c in self.classes:
            yield (self.scheme, self.label, c.m, int(c.stable), c.tx_latency, c.total_latency)


def solve_latency(spec: QbdSpec, alpha: float) -> float:
    """Mean latency in slots, or ``inf`` when the drift condition fails."""
    if not qbd.drift_stable(spec):
        return math.inf
    R = qbd.solve_rate_matrix(spec)
    return qbd.solve_steady_state(spec, R, alpha).mean_latency


def static_class_latency(p: float, n: int, alpha: float, m: int = 1) -> ClassLatency:
    spec = build_static(p, n, alpha)
    total = solve_latency(spec, alpha)
    tx = n / p if p > 0 else math.inf
    return ClassLatency(m, math.isfinite(total), tx, total)


def latency_static(grid: TspGrid, link: LinkConfig, n: int) -> LatencyReport:
    if not 1 <= n <= grid.N:
        raise ConfigError(f"rate index {n} outside 1..{grid.N}")
    rows = tuple(static_class_latency(grid.p(n, m), n, link.alpha, m) for m in range(1, grid.M + 1))
    return LatencyReport("static", n, rows)


def _dynamic_solution(spec: QbdSpec, alpha: float):
    """(stable, tx_latency, total_latency) for a chain with one recurrent class."""
    pi = qbd.stationary_vector(spec.A)
    completion = float(pi @ spec.A2.sum(1)) / (1.0 - alpha)
    tx = 1.0 / completion if completion > 0 else math.inf
    total = solve_latency(spec, alpha)
    return math.isfinite(total), tx, total


def dynamic_class_latency(p_col, alpha: float, d: float, u: float, m: int = 1,
                          initial_rate: Optional[int] = None) -> ClassLatency:
    """Latency of one class under dynamic adaptation.

    When ``initial_rate`` is given the chain is restricted to the states
    reachable from idle at that rate.  Otherwise the analysis starts
    uniformly over the idle rates, which only matters when adaptation is
    frozen and the phase process splits into several closed classes.
    """
    spec = build_dynamic(p_col, alpha, d, u)
    starts = [initial_rate] if initial_rate is not None else None
    if starts is None:
        try:
            stable, tx, total = _dynamic_solution(spec, alpha)
            return ClassLatency(m, stable, tx, total)
        except ReducibleChainError:
            starts = list(range(1, spec.boundary + 1))
    results = []
    for r in starts:
        bidx, pidx = _reachable(spec, r - 1)
        results.append(_dynamic_solution(qbd.restrict(spec, bidx, pidx), alpha))
    stable = all(s for s, _, _ in results)
    tx = float(np.mean([t for _, t, _ in results]))
    total = float(np.mean([z for _, _, z in results]))
    return ClassLatency(m, stable, tx, total)


def latency_dynamic(grid: TspGrid, link: LinkConfig, d: float, u: float,
                    initial_rate: Optional[int] = None) -> LatencyReport:
    rows = tuple(
        dynamic_class_latency(grid.column(m), link.alpha, d, u, m, initial_rate)
        for m in range(1, grid.M + 1)
    )
    return LatencyReport("dynamic", None, rows)
