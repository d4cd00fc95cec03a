"""Acceptance suite: one test (or group of tests) per criterion.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary prints one
PASS/FAIL line per criterion.
"""

import math

import numpy as np
import pytest

from fraglat import ConfigError, FieldConfig, LinkConfig, SchemeConfig, build_rate_ladder, default_paper_config, qbd
from fraglat.chains import (
    absorption_mean,
    absorption_pmf,
    build_dynamic,
    build_static,
    dynamic_class_latency,
    latency_dynamic,
    latency_static,
    negative_binomial_pmf,
    static_class_latency,
    static_closed_form,
    static_ph,
)
from fraglat.config import load_config
from fraglat.experiments import latency_reports, run_latency_vs_packet_size, run_meta_curves
from fraglat.meta import build_grid, meta_distribution, tsp_grid, tsp_moments
from fraglat.sim import exact_tsp, realization_seeds, run_queue_fixed, sample_field

crit = pytest.mark.criterion
SEED = 0


@pytest.fixture(scope="module")
def cfg50():
    return load_config(overrides={"link.w_t_mW": 50})


@pytest.fixture(scope="module")
def reports50(cfg50):
    return latency_reports(cfg50)


@crit(1, "threshold ladder 2^(4/n) - 1 exact")
def test_threshold_ladder():
    link, _, _ = default_paper_config()
    ladder = build_rate_ladder(link)
    assert [ladder.theta(n) for n in range(1, 6)] == [2.0 ** (4.0 / n) - 1.0 for n in range(1, 6)]
    assert (ladder.theta(1), ladder.theta(2), ladder.theta(4)) == (15.0, 3.0, 1.0)


@pytest.mark.slow
@crit(2, "beta CCDF vs empirical CCDF sup distance <= 0.02 at 1e4 realizations")
def test_meta_distribution_match():
    cfg = load_config(overrides={"link.w_t_mW": 10})
    res = run_meta_curves(cfg, SEED, n_realizations=10_000)
    sups = res["sup_distance"]
    print("sup distance per rate:", {n: round(s, 4) for n, s in sups.items()})
    assert all(s <= 0.02 for s in sups.values()), sups


@pytest.mark.slow
@crit(3, "Monte Carlo TSP moments within 3 standard errors of the closed forms")
def test_moment_oracle():
    link, fld, _ = default_paper_config(10e-3)
    th = np.asarray(build_rate_ladder(link).thresholds)
    # window truncation shifts the mean by under 1e-3 relative at this radius
    radius = 2000.0
    samples = np.array([
        exact_tsp(sample_field(fld, radius, np.random.default_rng(ss)), link, th)
        for ss in realization_seeds(SEED, 10_000)
    ])
    k = len(samples)
    for j, theta in enumerate(th):
        mu, nu = tsp_moments(link, fld, theta)
        p = samples[:, j]
        se1 = p.std(ddof=1) / math.sqrt(k)
        se2 = (p ** 2).std(ddof=1) / math.sqrt(k)
        assert abs(p.mean() - mu) <= 3 * se1, (j + 1, p.mean(), mu, se1)
        assert abs((p ** 2).mean() - nu) <= 3 * se2, (j + 1, (p ** 2).mean(), nu, se2)


@crit(4, "explicit static R equals the fixed-point R within 1e-10")
@pytest.mark.parametrize("w_t", [10e-3, 50e-3])
def test_static_chain_equivalence(w_t):
    link, fld, _ = default_paper_config(w_t)
    grid = tsp_grid(link, fld)
    checked = 0
    for n in range(1, link.N + 1):
        for m in range(1, link.M + 1):
            p = grid.p(n, m)
            spec = build_static(p, n, link.alpha)
            if not qbd.drift_stable(spec):
                continue
            R_fp = qbd.solve_rate_matrix(spec)
            R, _, _ = static_closed_form(p, n, link.alpha)
            np.testing.assert_allclose(R, R_fp, rtol=0, atol=1e-10)
            checked += 1
    assert checked > 0


@crit(5, "phase-type absorption law equals the negative binomial law")
def test_ph_negative_binomial():
    rng = np.random.default_rng(SEED)
    for _ in range(100):
        n = int(rng.integers(1, 11))
        p = float(rng.uniform(0.01, 1.0))
        ch = static_ph(p, n)
        kmax = n + 50
        pmf = absorption_pmf(ch.beta, ch.T, ch.s, kmax)
        ref = np.array([negative_binomial_pmf(n, p, k) for k in range(1, kmax + 1)])
        np.testing.assert_allclose(pmf, ref, rtol=0, atol=1e-12)
        assert absorption_mean(ch.beta, ch.T) == pytest.approx(n / p, abs=1e-9)


@crit(6, "spectral radius of R crosses one at p/n = alpha")
@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_stability_boundary(n):
    alpha = 0.04
    stable = build_static(n * alpha * 1.05, n, alpha)
    assert qbd.drift_stable(stable)
    R = qbd.solve_rate_matrix(stable)
    R_explicit, _, _ = static_closed_form(n * alpha * 1.05, n, alpha)
    assert qbd.spectral_radius(R) < 1
    assert qbd.spectral_radius(R_explicit) < 1

    p = n * alpha * 0.95
    unstable = build_static(p, n, alpha)
    assert not qbd.drift_stable(unstable)
    R_explicit, _, _ = static_closed_form(p, n, alpha)
    assert qbd.spectral_radius(R_explicit) >= 1
    try:
        R_min = qbd.solve_rate_matrix(unstable)
    except qbd.NumericError:
        return
    # the minimal solution of a transient chain has spectral radius one
    assert qbd.spectral_radius(R_min) >= 1 - 1e-9


@crit(7, "frozen dynamic chain pinned at rate n reproduces static latency")
def test_dynamic_to_static_reduction(cfg50):
    link = cfg50.link
    grid = tsp_grid(link, cfg50.field)
    for n in range(1, link.N + 1):
        for m in range(1, link.M + 1):
            dyn = dynamic_class_latency(grid.column(m), link.alpha, 0.0, 0.0, m, initial_rate=n)
            stat = static_class_latency(grid.p(n, m), n, link.alpha, m)
            assert dyn.stable == stat.stable
            if stat.stable:
                assert dyn.total_latency == pytest.approx(stat.total_latency, rel=1e-9)
                assert dyn.tx_latency == pytest.approx(stat.tx_latency, rel=1e-9)


@pytest.mark.slow
@crit(8, "analytic latency within 5% (static) / 10% (dynamic) of 1e6-slot simulation")
def test_latency_vs_simulation(cfg50, reports50):
    link = cfg50.link
    grid = tsp_grid(link, cfg50.field)
    d, u = cfg50.scheme.d, cfg50.scheme.u
    seeds = iter(np.random.SeedSequence(SEED).spawn(len(reports50) * link.M))
    worst = {}
    for rep in reports50:
        scheme = SchemeConfig.static(rep.rate_index) if rep.scheme == "static" else SchemeConfig.dynamic(d, u)
        tol = 0.05 if rep.scheme == "static" else 0.10
        for c in rep.classes:
            ss = next(seeds)
            if not c.stable:
                continue
            sim = run_queue_fixed(grid.column(c.m), link.alpha, scheme, 1_000_000, seed=ss)
            err = abs(sim.mean_latency - c.total_latency) / c.total_latency
            worst[(rep.label, c.m)] = err
            assert err <= tol, (rep.label, c.m, c.total_latency, sim.mean_latency)
    print("largest relative error:", max(worst.items(), key=lambda kv: kv[1]))


@crit(9, "latency per class at 50 mW: qualitative shape")
def test_static_rate1_low_classes_unstable(reports50):
    static1 = reports50[0]
    flags = {c.m: c.stable for c in static1.classes}
    print("static n=1 tx latency per class:", [round(c.tx_latency, 3) for c in static1.classes])
    assert not flags[1] and not flags[2], flags


@crit(9, "latency per class at 50 mW: qualitative shape")
def test_higher_rate_index_wins_for_a_low_class(reports50):
    static = np.array([r.totals for r in reports50[:-1]])  # (N, M)
    best = static.argmin(axis=0) + 1
    assert np.any(best[:2] > 1), best
    assert len(set(best.tolist())) > 1


@crit(9, "latency per class at 50 mW: qualitative shape")
def test_dynamic_stable_everywhere(reports50):
    dyn = reports50[-1]
    assert dyn.scheme == "dynamic"
    assert all(c.stable and math.isfinite(c.total_latency) for c in dyn.classes)


@pytest.mark.slow
@crit(10, "optimal static fragment count crosses 1->2 near 45 B and 2->3 near 75 B")
def test_packet_size_crossovers(cfg50):
    sizes = list(range(20, 121))
    res = run_latency_vs_packet_size(cfg50, "link.L_bytes", sizes)
    best = {row[1]: row[2] for row in res["optimal_static"].rows}
    dynamic = [row[4] for row in res["optimal_static"].rows]
    first2 = min(L for L in sizes if best[L] >= 2)
    first3 = min(L for L in sizes if best[L] >= 3)
    print(f"1->2 at {first2} bytes, 2->3 at {first3} bytes")
    assert best[20] == 1
    assert abs(first2 - 45) <= 10
    assert abs(first3 - 75) <= 10
    assert all(math.isfinite(x) for x in dynamic)


def _random_config(rng):
    alpha = float(rng.uniform(0.005, 0.3))
    N = int(rng.integers(1, min(8, math.ceil(1 / alpha) - 1) + 1))
    while N >= 1 / alpha:
        N -= 1
    link = LinkConfig(
        w_t=float(rng.uniform(1e-3, 0.2)),
        R_o=float(rng.uniform(1.0, 100.0)),
        eta=float(rng.uniform(2.2, 6.0)),
        alpha=alpha,
        L=float(rng.uniform(8.0, 1600.0)),
        W=float(rng.uniform(2e4, 1e6)),
        zeta=float(rng.uniform(0.2, 1.0)),
        T_s=float(rng.uniform(2e-4, 5e-3)),
        N=N,
        M=int(rng.integers(1, 5)),
    )
    V = int(rng.integers(1, 5))
    probs = rng.dirichlet(np.ones(V))
    fld = FieldConfig(
        lam=float(rng.uniform(0.0, 5e-3)),
        type_probs=tuple(probs / probs.sum()),
        powers=tuple(rng.uniform(1e-3, 0.1, V)),
        activities=tuple(rng.uniform(0.0, 1.0, V)),
    )
    return link, fld, float(rng.uniform()), float(rng.uniform())


@pytest.mark.slow
@crit(11, "every assembled QBD is row-stochastic within 1e-12")
def test_row_stochastic_property():
    rng = np.random.default_rng(SEED)
    built = 0
    while built < 1000:
        link, fld, d, u = _random_config(rng)
        try:
            grid = build_grid(meta_distribution(link, fld), link.M)
        except ConfigError:  # infeasible ladders are rejected by design
            continue
        built += 1
        for m in range(1, link.M + 1):
            for n in range(1, link.N + 1):
                spec = build_static(grid.p(n, m), n, link.alpha)
                qbd.validate(spec)
                assert qbd.row_sum_deviation(spec) < 1e-12
            for dd, uu in ((d, u), (1.0, 1.0), (0.0, 0.0)):
                spec = build_dynamic(grid.column(m), link.alpha, dd, uu)
                qbd.validate(spec)
                assert qbd.row_sum_deviation(spec) < 1e-12
