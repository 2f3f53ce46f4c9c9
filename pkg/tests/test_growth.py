import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hlgrowth.conformal import slit_from_capacity, slit_map
from hlgrowth.errors import DomainError, NumericalFailure
from hlgrowth.growth import (
    GrowthParams,
    grow,
    infinity_regularized_sequence,
    next_capacity_hl,
    particle_arclength,
    sample_angles,
    starred_capacity,
    starred_sequence,
    total_capacity,
)


def sigma_params(n=200, c=1e-3, alpha=1.0, sigma=0.2):
    return GrowthParams(c, alpha, "sigma", sigma, particles=n)


def test_params_validation():
    with pytest.raises(DomainError):
        GrowthParams(0.0, 1.0, "starred", particles=1)
    with pytest.raises(DomainError):
        GrowthParams(1e-3, -1.0, "starred", particles=1)
    with pytest.raises(DomainError):
        GrowthParams(1e-3, 1.0, "sigma", particles=1)
    with pytest.raises(DomainError):
        GrowthParams(1e-3, 1.0, "starred", particles=1, time=1.0)
    with pytest.raises(DomainError):
        GrowthParams(1e-3, 1.0, "bogus", particles=1)


def test_time_horizon_floor():
    assert GrowthParams(1e-3, 1.0, "starred", time=1.0).n_particles == 1000
    assert GrowthParams(0.3, 1.0, "starred", time=1.0).n_particles == 3
    assert GrowthParams(1e-4, 0.5, "starred", time=0.5).n_particles == 5000


def test_starred_capacity_values():
    assert starred_capacity(1, 0.01, 1.0) == 0.01
    assert starred_capacity(101, 0.01, 1.0) == pytest.approx(0.005, rel=1e-15)
    np.testing.assert_array_equal(starred_capacity(np.arange(1, 10), 0.01, 0.0), 0.01)
    with pytest.raises(DomainError):
        starred_capacity(0, 0.01, 1.0)


def test_infinity_sequence():
    q = infinity_regularized_sequence(1e-4, 1.0, 10_000) / 1e-4
    assert q[0] == 1.0
    assert np.all(np.diff(q) <= 0) and np.all(q <= 1)
    c, N = 1e-4, 10_000
    err = np.max(np.abs(c * q - starred_sequence(c, 1.0, N)))
    assert err <= 10 * N * c * c


def test_empty_and_starred_growth():
    st0 = grow(GrowthParams(1e-3, 1.0, "starred", particles=0), 1)
    assert len(st0) == 0 and total_capacity(st0, 0) == 0.0
    s = grow(GrowthParams(1e-3, 1.5, "starred", particles=500), 4)
    np.testing.assert_array_equal(s.capacities, starred_sequence(1e-3, 1.5, 500))
    np.testing.assert_allclose(s.slit_lengths, slit_from_capacity(s.capacities), rtol=1e-12)


def test_angles_uniform_and_reproducible():
    a = sample_angles(9, 100_000)
    assert np.all((a >= 0) & (a < 2 * math.pi))
    np.testing.assert_array_equal(a, sample_angles(9, 100_000))
    # mean of a uniform on [0, 2 pi): pi +- 4 se
    assert abs(a.mean() - math.pi) < 4 * (2 * math.pi / math.sqrt(12)) / math.sqrt(a.size)


def test_reproducible_bit_for_bit():
    a = grow(sigma_params(), 17)
    b = grow(sigma_params(), 17)
    for name in ("thetas", "capacities", "slit_lengths", "cumulative"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()
    c = grow(sigma_params(), 18)
    assert not np.array_equal(a.thetas, c.thetas)


def test_alpha_zero_modes_agree():
    n, c = 300, 1e-3
    s = grow(GrowthParams(c, 0.0, "sigma", 0.1, particles=n), 3)
    t = grow(GrowthParams(c, 0.0, "starred", particles=n), 3)
    u = grow(GrowthParams(c, 0.0, "infinity", particles=n), 3)
    assert np.all(s.capacities == c)
    np.testing.assert_array_equal(s.capacities, t.capacities)
    np.testing.assert_array_equal(s.capacities, u.capacities)


def test_map_evaluation_count():
    n = 321
    s = grow(sigma_params(n), 2)
    assert s.map_evaluations == n * (n - 1) // 2


def test_cumulative_and_total_capacity():
    s = grow(sigma_params(), 5)
    assert s.capacities[0] == s.params.base_capacity
    assert np.all(np.diff(s.cumulative) > 0)
    assert total_capacity(s, len(s)) == s.cumulative[-1]
    m, n = 40, 150
    assert total_capacity(s, n) == pytest.approx(
        total_capacity(s, m) + np.sum(s.capacities[m:n]), rel=1e-14)
    with pytest.raises(IndexError):
        total_capacity(s, len(s) + 1)


def test_starred_total_capacity_against_log():
    c, alpha, N = 1e-3, 1.5, 2000
    s = grow(GrowthParams(c, alpha, "starred", particles=N), 0)
    assert abs(total_capacity(s, N) - math.log1p(alpha * c * N) / alpha) <= alpha * c * c * N


def test_next_capacity_matches_grow():
    p = sigma_params(60)
    full = grow(p, 8)
    part = grow(sigma_params(59), 8)
    assert next_capacity_hl(part, full.thetas[59]) == full.capacities[59]


def test_next_capacity_first_particles():
    c, alpha, sigma = 1e-2, 1.3, 0.15
    s0 = grow(GrowthParams(c, alpha, "sigma", sigma, particles=0), 0)
    assert next_capacity_hl(s0, 1.0) == c
    s1 = grow(GrowthParams(c, alpha, "sigma", sigma, particles=1), 0)
    theta2 = 2.5
    z = math.exp(sigma) * cmath.exp(1j * (theta2 - s1.thetas[0]))
    h = 1e-6
    fd = (slit_map(c, z + h) - slit_map(c, z - h)) / (2 * h)
    expect = c / abs(fd) ** alpha
    assert next_capacity_hl(s1, theta2) == pytest.approx(expect, rel=1e-6)


def test_next_capacity_needs_sigma_mode():
    s = grow(GrowthParams(1e-3, 1.0, "starred", particles=5), 0)
    with pytest.raises(DomainError):
        next_capacity_hl(s, 0.0)


def test_numerical_failure_reports_step():
    # enormous alpha drives c / |Phi'|^alpha to underflow quickly
    p = GrowthParams(0.5, 2000.0, "sigma", 1e-3, particles=50)
    with pytest.raises(NumericalFailure) as exc:
        grow(p, 1)
    assert exc.value.step is not None and exc.value.step >= 2


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-4, 1e-2), st.floats(0.0, 2.0), st.floats(0.05, 1.0), st.integers(0, 2**32))
def test_capacities_positive_finite(c, alpha, sigma, seed):
    s = grow(GrowthParams(c, alpha, "sigma", sigma, particles=40), seed)
    assert np.all(np.isfinite(s.capacities)) and np.all(s.capacities > 0)
    assert np.all(np.isfinite(s.slit_lengths)) and np.all(s.slit_lengths > 0)


def test_event_access():
    s = grow(sigma_params(10), 1)
    e = s.event(3)
    assert (e.theta, e.capacity, e.slit_length) == (s.thetas[2], s.capacities[2], s.slit_lengths[2])
    assert len(list(s.events())) == 10
    with pytest.raises(IndexError):
        s.event(0)


def test_arclength_first_particle_and_convergence():
    s = grow(sigma_params(300, c=1e-3, alpha=1.0, sigma=0.1), 6)
    assert particle_arclength(s, 1) == s.slit_lengths[0]
    for k in (2, 50, 300):
        a = particle_arclength(s, k, 16)
        b = particle_arclength(s, k, 32)
        assert abs(a - b) / b < 1e-4
        assert a > 0


def test_arclength_identity_structure():
    # alpha = 0 with one earlier particle far away: arc length close to d
    s = grow(GrowthParams(1e-3, 0.0, "sigma", 0.1, particles=2), 0)
    ell, err = particle_arclength(s, 2, 16, with_error=True)
    assert ell == pytest.approx(s.slit_lengths[1], rel=0.2)
    assert err >= 0
