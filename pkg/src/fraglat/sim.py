"""Monte Carlo ground truth.

Interferer locations and types are drawn once per realization and then
frozen; fading and activity are redrawn every slot.  The receiver sits at
the origin and the intended transmitter at distance ``R_o``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import FieldConfig, LinkConfig, SchemeConfig, build_rate_ladder

DEFAULT_WINDOW = 5000.0
GAMMA_GRID = np.round(np.arange(0, 101) * 0.01, 2)
_SLOT_CHUNK = 4096
FAR_FIELD = 1e-5


@dataclass(frozen=True)
class FieldRealization:
    xy: np.ndarray          # (K, 2) interferer coordinates [m]
    types: np.ndarray       # (K,) 0-based type index
    window_radius: float
    field: FieldConfig
    seed: Optional[int] = None

    @property
    def count(self) -> int:
        return len(self.types)

    @property
    def distances(self) -> np.ndarray:
        return np.hypot(self.xy[:, 0], self.xy[:, 1])

    @property
    def powers(self) -> np.ndarray:
        return np.asarray(self.field.powers)[self.types]

    @property
    def activities(self) -> np.ndarray:
        return np.asarray(self.field.activities)[self.types]

    def metadata(self) -> dict:
        return {"seed": self.seed, "point_count": self.count, "window_radius_m": self.window_radius}


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _draw_points(field: FieldConfig, window_radius: float, rng: np.random.Generator):
    """Squared distances and 0-based types of a Poisson field in the disk."""
    k = rng.poisson(field.lam * math.pi * window_radius ** 2)
    r2 = window_radius ** 2 * rng.random(k)
    cdf = np.cumsum(field.type_probs)
    types = np.minimum(np.searchsorted(cdf, rng.random(k), side="right"), field.V - 1)
    return r2, types


def sample_field(field: FieldConfig, window_radius: float = DEFAULT_WINDOW, seed=None) -> FieldRealization:
    """Poisson field in the disk of ``window_radius`` around the receiver."""
    if window_radius <= 0:
        raise ValueError(f"window radius must be positive, got {window_radius!r}")
    rng = _rng(seed)
    r2, types = _draw_points(field, window_radius, rng)
    phi = rng.uniform(0.0, 2.0 * math.pi, len(r2))
    r = np.sqrt(r2)
    xy = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    return FieldRealization(xy, types, window_radius, field, seed if isinstance(seed, (int, np.integer)) else None)


def _relative_gain(real: FieldRealization, link: LinkConfig) -> np.ndarray:
    """w_v R_o^eta / (w_t |x|^eta) for every interferer."""
    with np.errstate(divide="ignore"):
        return real.powers / link.w_t * (link.R_o / real.distances) ** link.eta


def exact_tsp(real: FieldRealization, link: LinkConfig, theta):
    """Success probability conditioned on the realization (product over interferers)."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    c = _relative_gain(real, link)
    kappa = real.activities
    out = np.empty(th.shape)
    for i, t in enumerate(th):
        x = t * c
        frac = np.where(np.isinf(x), 1.0, x / (1.0 + x))
        out[i] = math.exp(float(np.sum(np.log1p(-kappa * frac))))
    return float(out[0]) if np.ndim(theta) == 0 else out


def realization_seeds(seed, n: int):
    return np.random.SeedSequence(seed).spawn(n)


def tsp_samples(link: LinkConfig, field: FieldConfig, n_realizations: int, seed=None,
                window_radius: float = DEFAULT_WINDOW, thresholds=None) -> np.ndarray:
    """TSP of independent realizations: array (n_realizations, N).

    Interferers with ``theta * c < FAR_FIELD`` enter through the first-order
    term ``-kappa theta c`` of the log-factor; the product is exact for all
    others.  The resulting upward bias in log p is below sum((kappa theta c)^2),
    about 1e-7 at the reference densities, far under the window truncation.
    """
    th = np.asarray(build_rate_ladder(link).thresholds if thresholds is None else thresholds, dtype=float)
    th_max = float(th.max()) if th.size else 0.0
    ratio = np.asarray(field.powers) / link.w_t
    kappa_v = np.asarray(field.activities)
    half_eta = link.eta / 2.0
    out = np.empty((n_realizations, len(th)))
    for i, ss in enumerate(realization_seeds(seed, n_realizations)):
        r2, types = _draw_points(field, window_radius, np.random.default_rng(ss))
        with np.errstate(divide="ignore"):
            c = ratio[types] * (link.R_o ** 2 / r2) ** half_eta
        kappa = kappa_v[types]
        near = c * th_max >= FAR_FIELD
        far_sum = float(np.dot(kappa[~near], c[~near]))
        cn, kn = c[near], kappa[near]
        for j, t in enumerate(th):
            x = t * cn
            frac = np.where(np.isinf(x), 1.0, x / (1.0 + x))
            out[i, j] = math.exp(float(np.sum(np.log1p(-kn * frac))) - t * far_sum)
    return out


@dataclass(frozen=True)
class EmpiricalMeta:
    gammas: np.ndarray
    ccdf: np.ndarray        # (N, len(gammas))
    samples: np.ndarray     # (n_realizations, N)


def survival(samples: np.ndarray, gammas: np.ndarray) -> np.ndarray:
    """Fraction of ``samples`` strictly above each gamma."""
    s = np.sort(samples)
    return 1.0 - np.searchsorted(s, gammas, side="right") / len(s)


def empirical_meta(link: LinkConfig, field: FieldConfig, n_realizations: int, seed=None,
                   window_radius: float = DEFAULT_WINDOW, gammas: np.ndarray = GAMMA_GRID) -> EmpiricalMeta:
    if n_realizations < 1:
        raise ValueError("need at least one realization")
    samples = tsp_samples(link, field, n_realizations, seed, window_radius)
    ccdf = np.vstack([survival(samples[:, j], gammas) for j in range(samples.shape[1])])
    return EmpiricalMeta(np.asarray(gammas), ccdf, samples)


# ---------------------------------------------------------------------------
# slotted queue


@dataclass
class SimResult:
    seed: Optional[int]
    horizon: int
    warmup: int
    tsp: np.ndarray                 # per-rate success probability of the realization
    latencies: np.ndarray           # slots, packets arriving after warm-up
    service_rates: np.ndarray       # rate index that delivered each recorded packet
    attempts: np.ndarray            # per rate, index 0 unused
    successes: np.ndarray
    arrivals: int
    departures: int
    final_queue: int
    divergent: bool
    departure_order: np.ndarray = field(repr=False, default=None)

    @property
    def mean_latency(self) -> float:
        return float(self.latencies.mean()) if len(self.latencies) else math.nan

    def success_frequency(self, n: int) -> float:
        return self.successes[n] / self.attempts[n] if self.attempts[n] else math.nan


def divergence_limit(alpha: float, horizon: int) -> float:
    return 100.0 * alpha * math.sqrt(horizon) + 100.0


def _run_fsm(score, thr, arrivals, coins, N, scheme: SchemeConfig, warmup, start_rate):
    """Slot loop; a fragment sent at rate n succeeds iff score[t] > thr[n].

    Within a slot the head-of-line fragment is sent first, then a new
    arrival (if any) joins the buffer, so a packet arriving in slot t is
    first served in slot t+1 and its latency is departure slot minus t.
    """
    dynamic = scheme.kind == "dynamic"
    d, u = scheme.d, scheme.u
    n = start_rate
    j = 1
    queue = deque()
    lat, rates, order = [], [], []
    attempts = [0] * (N + 1)
    successes = [0] * (N + 1)
    n_arr = 0
    for t, (sc, arr, coin) in enumerate(zip(score, arrivals, coins)):
        if queue:
            attempts[n] += 1
            if sc > thr[n]:
                successes[n] += 1
                if j == n:
                    a = queue.popleft()
                    order.append(a)
                    if a >= warmup:
                        lat.append(t - a)
                        rates.append(n)
                    j = 1
                    if dynamic and n > 1 and coin < u:
                        n -= 1
                else:
                    j += 1
            elif dynamic and j == 1 and n < N and coin < d:
                n += 1
        if arr:
            queue.append(t)
            n_arr += 1
    return lat, rates, order, attempts, successes, n_arr, len(queue)


def _start_rate(scheme: SchemeConfig, N: int) -> int:
    return scheme.n if scheme.kind == "static" else math.ceil(N / 2)


def _check_horizon(horizon: int, warmup: int):
    if not horizon > warmup >= 0:
        raise ValueError(f"need horizon > warmup >= 0, got horizon={horizon}, warmup={warmup}")


def _pack(seed, horizon, warmup, tsp, alpha, out) -> SimResult:
    lat, rates, order, attempts, successes, n_arr, qlen = out
    return SimResult(
        seed=seed if isinstance(seed, (int, np.integer)) else None,
        horizon=horizon,
        warmup=warmup,
        tsp=np.asarray(tsp, dtype=float),
        latencies=np.asarray(lat, dtype=np.int64),
        service_rates=np.asarray(rates, dtype=np.int64),
        attempts=np.asarray(attempts),
        successes=np.asarray(successes),
        arrivals=n_arr,
        departures=len(order),
        final_queue=qlen,
        divergent=qlen > divergence_limit(alpha, horizon),
        departure_order=np.asarray(order, dtype=np.int64),
    )


def slot_sir(real: FieldRealization, link: LinkConfig, slots: int, rng: np.random.Generator) -> np.ndarray:
    """Per-slot SIR with fresh Rayleigh fading and fresh activity draws."""
    gain = real.powers * real.distances ** (-link.eta)
    kappa = real.activities
    signal_scale = link.w_t * link.R_o ** (-link.eta)
    out = np.empty(slots)
    for lo in range(0, slots, _SLOT_CHUNK):
        hi = min(lo + _SLOT_CHUNK, slots)
        m = hi - lo
        h = rng.exponential(size=m)
        if real.count:
            active = rng.random((m, real.count)) < kappa
            g = rng.exponential(size=(m, real.count))
            interference = (active * g) @ gain
        else:
            interference = np.zeros(m)
        with np.errstate(divide="ignore"):
            out[lo:hi] = signal_scale * h / interference
    return out


def run_queue(real: FieldRealization, link: LinkConfig, scheme: SchemeConfig, horizon: int,
              warmup: Optional[int] = None, seed=None) -> SimResult:
    """Slotted FIFO queue over one frozen field realization."""
    scheme.check(link)
    warmup = horizon // 10 if warmup is None else warmup
    _check_horizon(horizon, warmup)
    rng = _rng(seed)
    ladder = build_rate_ladder(link)
    arrivals = (rng.random(horizon) < link.alpha).tolist()
    coins = rng.random(horizon).tolist()
    score = slot_sir(real, link, horizon, rng).tolist()
    thr = [math.nan] + list(ladder.thresholds)
    out = _run_fsm(score, thr, arrivals, coins, link.N, scheme, warmup, _start_rate(scheme, link.N))
    tsp = exact_tsp(real, link, np.asarray(ladder.thresholds))
    return _pack(seed, horizon, warmup, tsp, link.alpha, out)


def run_queue_fixed(p_rates, alpha: float, scheme: SchemeConfig, horizon: int,
                    warmup: Optional[int] = None, seed=None) -> SimResult:
    """Same queue, with rate-n fragments succeeding independently with probability p_rates[n-1]."""
    p = np.asarray(p_rates, dtype=float)
    N = len(p)
    if scheme.kind == "static" and not 1 <= scheme.n <= N:
        raise ValueError(f"static rate index {scheme.n} outside 1..{N}")
    warmup = horizon // 10 if warmup is None else warmup
    _check_horizon(horizon, warmup)
    rng = _rng(seed)
    arrivals = (rng.random(horizon) < alpha).tolist()
    coins = rng.random(horizon).tolist()
    score = (-rng.random(horizon)).tolist()
    thr = [math.nan] + (-p).tolist()
    out = _run_fsm(score, thr, arrivals, coins, N, scheme, warmup, _start_rate(scheme, N))
    return _pack(seed, horizon, warmup, p, alpha, out)


LATENCY_SAMPLE_HEADER = ("scheme", "packet_index", "service_rate", "latency_slots")
