"""Meta distribution of the transmission success probability (TSP).

The TSP of the intended link, conditioned on one realization of the
interferer field, is a random variable across realizations.  Its first two
moments are available in closed form; the distribution itself is
approximated by a beta law matched to those moments and then cut into
``M`` equiprobable classes, each represented by its within-class median.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .model import FieldConfig, LinkConfig, RateLadder, build_rate_ladder
from .special import betainc, betaincinv

# Below this variance the TSP is treated as a point mass at its mean.
DEGENERATE_VAR = 1e-12


def path_loss_constant(R_o: float, eta: float) -> float:
    """2 pi^2 R_o^2 / (eta sin(2 pi / eta))."""
    return 2.0 * math.pi ** 2 * R_o ** 2 / (eta * math.sin(2.0 * math.pi / eta))


def tsp_moments(link: LinkConfig, field: FieldConfig, theta: float):
    """First and second moment ``(mu, nu)`` of the TSP at SIR threshold ``theta``."""
    if theta < 0:
        raise ValueError(f"theta must be nonnegative, got {theta!r}")
    delta = 2.0 / link.eta
    ups = path_loss_constant(link.R_o, link.eta)
    ratio = (np.asarray(field.powers) / link.w_t) ** delta
    kappa = np.asarray(field.activities)
    weights = ratio * kappa * field.densities
    scale = ups * theta ** delta
    mu = math.exp(-scale * float(weights.sum()))
    nu = math.exp(-scale * float((weights * (2.0 - (1.0 - delta) * kappa)).sum()))
    return mu, nu


@dataclass(frozen=True)
class RateMoments:
    """TSP moments at one rate and the matching beta shapes."""

    theta: float
    mu: float
    nu: float

    @property
    def variance(self) -> float:
        return self.nu - self.mu ** 2

    @property
    def degenerate(self) -> bool:
        return self.variance < DEGENERATE_VAR

    @property
    def beta_a(self) -> float:
        return self.mu * (self.mu - self.nu) / self.variance

    @property
    def beta_b(self) -> float:
        return (1.0 - self.mu) * (self.mu - self.nu) / self.variance


@dataclass(frozen=True)
class MetaDistribution:
    """Beta-approximated meta distribution for every rate of a ladder."""

    rates: tuple  # RateMoments, index n-1

    @property
    def N(self) -> int:
        return len(self.rates)

    def __getitem__(self, n: int) -> RateMoments:
        return self.rates[n - 1]


def meta_distribution(link: LinkConfig, field: FieldConfig, ladder: RateLadder = None) -> MetaDistribution:
    if ladder is None:
        ladder = build_rate_ladder(link)
    rows = []
    for theta in ladder.thresholds:
        mu, nu = tsp_moments(link, field, theta)
        rows.append(RateMoments(theta=theta, mu=mu, nu=nu))
    return MetaDistribution(tuple(rows))


def meta_ccdf(dist: MetaDistribution, n: int, gamma):
    """P(TSP > gamma) at rate index ``n`` under the beta approximation."""
    rm = dist[n]
    g = np.asarray(gamma, dtype=float)
    if np.any((g < 0) | (g > 1)):
        raise ValueError("reliability gamma must lie in [0, 1]")
    if rm.degenerate:
        out = np.where(g < rm.mu, 1.0, 0.0)
    else:
        out = 1.0 - betainc(rm.beta_a, rm.beta_b, g)
    return float(out) if np.ndim(out) == 0 else out


def _class_quantiles(rm: RateMoments, levels: np.ndarray) -> np.ndarray:
    if rm.degenerate:
        return np.full(levels.shape, rm.mu)
    return betaincinv(rm.beta_a, rm.beta_b, levels)


@dataclass(frozen=True)
class TspGrid:
    """Class edges (N x M+1) and median representatives p_{n,m} (N x M)."""

    edges: np.ndarray
    reps: np.ndarray

    @property
    def N(self) -> int:
        return self.reps.shape[0]

    @property
    def M(self) -> int:
        return self.reps.shape[1]

    def p(self, n: int, m: int) -> float:
        return float(self.reps[n - 1, m - 1])

    def column(self, m: int) -> np.ndarray:
        """Representatives of class ``m`` across all rates."""
        return self.reps[:, m - 1].copy()

    def csv_rows(self):
        for n in range(1, self.N + 1):
            for m in range(1, self.M + 1):
                yield (n, m, self.edges[n - 1, m - 1], self.edges[n - 1, m], self.reps[n - 1, m - 1])


GRID_CSV_HEADER = ("rate_index", "class_index", "omega_lo", "omega_hi", "p_nm")


def discretize(dist: MetaDistribution, n: int, M: int):
    """Equiprobable class edges and median representatives at rate ``n``.

    Class ``m`` covers CDF levels ``[(m-1)/M, m/M]`` so class ``M`` holds the
    best links; its representative sits at CDF level ``(2m-1)/(2M)``.
    """
    if M < 1:
        raise ValueError(f"class count must be positive, got {M!r}")
    rm = dist[n]
    inner = np.arange(1, M) / M
    mids = (2.0 * np.arange(1, M + 1) - 1.0) / (2.0 * M)
    try:
        edges = np.concatenate(([0.0], _class_quantiles(rm, inner), [1.0]))
        reps = _class_quantiles(rm, mids)
    except NumericError as exc:
        raise NumericError(f"discretization failed at rate n={n}: {exc}") from exc
    return edges, reps


def build_grid(dist: MetaDistribution, M: int) -> TspGrid:
    edges = np.empty((dist.N, M + 1))
    reps = np.empty((dist.N, M))
    for n in range(1, dist.N + 1):
        edges[n - 1], reps[n - 1] = discretize(dist, n, M)
    return TspGrid(edges, reps)


def tsp_grid(link: LinkConfig, field: FieldConfig) -> TspGrid:
    """Shortcut: ladder, meta distribution and grid for one configuration."""
    return build_grid(meta_distribution(link, field), link.M)


BETA_CSV_HEADER = ("rate_index", "theta", "mu", "nu", "beta_a", "beta_b")


def beta_rows(dist: MetaDistribution):
    for n, rm in enumerate(dist.rates, start=1):
        if rm.degenerate:
            yield (n, rm.theta, rm.mu, rm.nu, math.inf, math.inf)
        else:
            yield (n, rm.theta, rm.mu, rm.nu, rm.beta_a, rm.beta_b)
