import math

import numpy as np
import pytest

from hlgrowth.errors import DomainError
from hlgrowth.growth import GrowthParams, grow, total_capacity
from hlgrowth.limits import (
    SLIT_DIFFUSIVITY,
    branch_count_cdf,
    branch_count_pmf,
    brownian_time_change,
    kingman_tau_matrix,
    kingman_tau_sample,
    kingman_tau_samples,
    kingman_threshold,
    limit_capacity,
    limit_map,
    rho_inverse,
)


def test_limit_map_values():
    assert limit_map(3.0, 1.0, 1j) == pytest.approx(4j, rel=1e-15)
    assert limit_map(1.0, 1e-8, 1.0) == pytest.approx(math.e, rel=1e-6)
    assert limit_map(1.0, 0.0, 2.0) == 2 * math.e
    assert abs(limit_map(1.0, 2.0, 1.0)) ** 2 == pytest.approx(3.0, rel=1e-15)
    z, lam = 0.3 + 1.2j, 2.5
    assert limit_map(1.3, 0.7, lam * z) == pytest.approx(lam * limit_map(1.3, 0.7, z), rel=1e-15)


def test_limit_capacity_matches_starred():
    c, alpha, T = 1e-3, 1.0, 1.0
    s = grow(GrowthParams(c, alpha, "starred", time=T), 0)
    N = len(s)
    assert abs(total_capacity(s, N) - limit_capacity(T, alpha)) <= alpha * c * c * N + 1e-12


def test_rho_scaling_window_and_positivity():
    c = 1e-5
    val = rho_inverse(c)
    assert val > 0
    assert 0.98 <= c ** -1.5 * val / SLIT_DIFFUSIVITY <= 1.02


def test_rho_band():
    for c in np.logspace(-6, -3, 7):
        v = rho_inverse(c)
        assert c ** 1.5 / 2 <= v <= 2 * c ** 1.5


def test_rho_self_convergence():
    for c in (1e-3, 1e-5):
        a = rho_inverse(c, inner_panels=16, outer_panels=32)
        b = rho_inverse(c, inner_panels=32, outer_panels=64)
        assert abs(a - b) / b < 1e-3


def test_rho_domain():
    for bad in (0.0, 0.2, -1.0):
        with pytest.raises(DomainError):
            rho_inverse(bad)


def test_brownian_time_change():
    assert brownian_time_change(0.0, 1.0) == 0.0
    assert brownian_time_change(3.0, 1.0) == pytest.approx(SLIT_DIFFUSIVITY, rel=1e-14)
    assert brownian_time_change(1e12, 1.0) == pytest.approx(2 * SLIT_DIFFUSIVITY, rel=1e-5)
    assert 2 * SLIT_DIFFUSIVITY == pytest.approx(3.3953, abs=1e-4)
    with pytest.raises(DomainError):
        brownian_time_change(1.0, 0.0)


def test_kingman_threshold():
    assert kingman_threshold(1.0) == pytest.approx(0.28294, abs=1e-5)


def test_tau_mean_large_j():
    rng = np.random.default_rng(0)
    s = kingman_tau_samples(1000, 4000, rng)
    assert s.mean() == pytest.approx(2 / 1000, rel=0.1)
    assert isinstance(kingman_tau_sample(3, rng), float)


def test_tau_stochastically_decreasing():
    rng = np.random.default_rng(1)
    taus = kingman_tau_matrix(6, 4000, rng)
    grid = np.linspace(0, 3, 40)
    cdfs = np.array([[np.mean(taus[:, j] <= g) for g in grid] for j in range(6)])
    assert np.all(np.diff(cdfs, axis=0) >= 0)


def test_tau_matrix_consistent_with_marginal():
    rng = np.random.default_rng(2)
    m = kingman_tau_matrix(4, 5000, rng)
    assert np.all(np.diff(m, axis=1) <= 0)
    # E[tau_j] = 2/j - 2/kmax
    np.testing.assert_allclose(m.mean(axis=0), [2, 1, 2 / 3, 0.5], rtol=0.05)


def test_branch_cdf_monotone_in_a_and_limits():
    rng = np.random.default_rng(3)
    ps = [branch_count_cdf(3, a, 4000, rng) for a in (0.5, 1.0, 2.0)]
    for (p1, s1), (p2, s2) in zip(ps, ps[1:]):
        assert p2 <= p1 + 3 * math.hypot(s1, s2)
    p, _ = branch_count_cdf(1, 1e-4, 2000, rng)
    assert p > 0.99
    with pytest.raises(DomainError):
        branch_count_cdf(1, 1.0, 10, rng)


def test_branch_pmf_normalized_and_cdf_monotone():
    rng = np.random.default_rng(4)
    n = 20000
    pmf, se, tail = branch_count_pmf(1.0, 30, n, rng)
    assert np.all(pmf >= 0)
    total_se = math.sqrt(max(tail * (1 - tail), 1e-12) / n)
    assert abs(pmf.sum() + tail - 1) < 1e-12
    assert tail < 2 * total_se + 1e-12
    assert np.all(np.diff(np.cumsum(pmf)) >= 0)
