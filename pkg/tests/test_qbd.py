import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraglat import NumericError, QbdValidationError
from fraglat import qbd
from fraglat.chains import build_dynamic, build_static


def geo_geo_latency(p, alpha):
    """Single-phase birth-death chain solved by hand."""
    r = alpha * (1 - p) / ((1 - alpha) * p)
    pi0 = 1.0 / (1.0 + alpha / ((1 - alpha) * p) / (1 - r))
    pi1 = pi0 * alpha / ((1 - alpha) * p)
    return r, pi0, pi1, pi1 / (1 - r) ** 2 / alpha


@pytest.mark.parametrize("p", [0.1, 0.3, 0.75, 1.0])
def test_scalar_chain(p):
    alpha = 0.04
    spec = build_static(p, 1, alpha)
    qbd.validate(spec)
    R = qbd.solve_rate_matrix(spec)
    r, pi0, pi1, lat = geo_geo_latency(p, alpha)
    assert R[0, 0] == pytest.approx(r, abs=1e-12)
    ss = qbd.solve_steady_state(spec, R, alpha)
    assert ss.pi0[0] == pytest.approx(pi0, rel=1e-10)
    assert ss.pi1[0] == pytest.approx(pi1, rel=1e-10)
    assert ss.mean_latency == pytest.approx(lat, rel=1e-10)
    assert ss.total_mass == pytest.approx(1.0, abs=1e-12)


def test_truncated_chain_matches_geometric_tail():
    spec = build_dynamic([0.2, 0.45, 0.6, 0.75, 0.85], 0.04, 0.3, 0.1)
    R = qbd.solve_rate_matrix(spec)
    ss = qbd.solve_steady_state(spec, R)
    P = qbd.truncated_matrix(spec, 60)
    np.testing.assert_allclose(P.sum(1), 1.0, atol=1e-12)
    pi = qbd.stationary_vector(P)
    b, h = spec.boundary, spec.phases
    np.testing.assert_allclose(pi[:b], ss.pi0, atol=1e-10)
    for k in (1, 2, 5):
        np.testing.assert_allclose(pi[b + (k - 1) * h: b + k * h], ss.level(k), atol=1e-10)


def test_rate_matrix_residual():
    spec = build_static(0.5, 3, 0.04)
    R = qbd.solve_rate_matrix(spec)
    assert qbd.rate_residual(spec, R) < 1e-12
    assert np.all(R >= 0)
    assert qbd.spectral_radius(R) < 1


def _faulty(spec, **blocks):
    kw = {k: getattr(spec, k) for k in ("B", "C", "E", "A0", "A1", "A2")}
    kw.update(blocks)
    return qbd.QbdSpec(**kw)


def test_validate_rejects_faults():
    spec = build_static(0.5, 2, 0.04)
    bad = spec.A1.copy()
    bad[0, 0] += 1e-9
    with pytest.raises(QbdValidationError, match="row 0"):
        qbd.validate(_faulty(spec, A1=bad))
    neg = spec.A0.copy()
    neg[0, 1] = -0.01
    neg[0, 0] += 0.01
    with pytest.raises(QbdValidationError, match="negative"):
        qbd.validate(_faulty(spec, A0=neg))
    with pytest.raises(QbdValidationError, match="shape"):
        qbd.validate(_faulty(spec, C=np.ones((1, 3))))
    nan = spec.B.copy()
    nan[0, 0] = np.nan
    with pytest.raises(QbdValidationError, match="non-finite"):
        qbd.validate(_faulty(spec, B=nan))


def test_unstable_chain_not_solved():
    spec = build_static(0.03, 1, 0.04)
    assert not qbd.drift_stable(spec)
    R = qbd.solve_rate_matrix(build_static(0.03, 1, 0.04), max_iter=200_000)
    with pytest.raises(NumericError):
        qbd.solve_steady_state(spec, R + 1e-6)


def test_iteration_budget_reported():
    spec = build_static(0.5, 3, 0.04)
    with pytest.raises(NumericError, match="did not converge"):
        qbd.solve_rate_matrix(spec, max_iter=2)


@given(n=st.integers(1, 6), p=st.floats(0.05, 1.0), alpha=st.floats(0.001, 0.15))
@settings(max_examples=100, deadline=None)
def test_drift_matches_mean_service(n, p, alpha):
    spec = build_static(p, n, alpha)
    down, up = qbd.drift(spec)
    # stable iff the mean service time n/p is below the mean interarrival time 1/alpha
    if abs(n / p - 1 / alpha) > 1e-6:
        assert (down > up) == (n / p < 1 / alpha)
