"""HL(alpha, sigma) cluster growth.

The three capacity rules share one event layout: angles are drawn i.i.d.
uniform on ``[0, 2 pi)`` from a seeded ``numpy.random.PCG64`` stream and the
capacity of particle ``k`` is

* ``sigma``:    ``c / |Phi'_{k-1}(e^{sigma + i theta_k})|^alpha``
* ``infinity``: ``c q(k)`` with ``q(k) = exp(-alpha c sum_{j<k} q(j))``
* ``starred``:  ``c / (1 + alpha c (k - 1))``
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Optional

import numpy as np
from numba import njit
from numpy.polynomial.legendre import leggauss

from .conformal import (
    OK,
    _compose_points,
    _compose_range,
    _raise_status,
    _slit_eval,
    slit_from_capacity,
)
from .errors import DomainError, NumericalFailure, SingularityError

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
RNG_ALGORITHM = "numpy.random.PCG64"
MODES = ("sigma", "infinity", "starred")
UNDERFLOW = 1e-300
PROGRESS_EVERY = 1000


def floor_horizon(x: float) -> int:
    """``floor(x)`` that forgives representation error, e.g. ``1 * 1e-4 ** -1.5``."""
    return int(math.floor(x * (1.0 + 1e-12)))


@dataclass(frozen=True)
class GrowthParams:
    """Base capacity, exponent, regularization rule and horizon.

    Give exactly one of ``particles`` (N) or ``time`` (T, then ``N = floor(T/c)``).
    ``sigma`` is required for ``regularization="sigma"`` and ignored otherwise.
    """

    base_capacity: float
    alpha: float
    regularization: str = "sigma"
    sigma: Optional[float] = None
    particles: Optional[int] = None
    time: Optional[float] = None

    def __post_init__(self):
        c = self.base_capacity
        if not (isinstance(c, (int, float)) and math.isfinite(c) and c > 0):
            raise DomainError(f"base capacity must be positive, got {c!r}")
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise DomainError(f"alpha must be non-negative, got {self.alpha!r}")
        if self.regularization not in MODES:
            raise DomainError(f"unknown regularization {self.regularization!r}")
        if self.regularization == "sigma":
            s = self.sigma
            if s is None or not math.isfinite(s) or s <= 0:
                raise DomainError(f"sigma mode needs sigma > 0, got {s!r}")
        if (self.particles is None) == (self.time is None):
            raise DomainError("give exactly one of particles or time")
        if self.particles is not None and self.particles < 0:
            raise DomainError("particle count must be >= 0")
        if self.time is not None and not (self.time >= 0):
            raise DomainError("time horizon must be >= 0")

    @property
    def n_particles(self) -> int:
        if self.particles is not None:
            return int(self.particles)
        return floor_horizon(self.time / self.base_capacity)

    def to_dict(self) -> dict:
        return {
            "base_capacity": self.base_capacity,
            "alpha": self.alpha,
            "regularization": self.regularization,
            "sigma": self.sigma,
            "particles": self.particles,
            "time": self.time,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GrowthParams":
        return cls(**{k: d.get(k) for k in
                      ("base_capacity", "alpha", "regularization", "sigma", "particles", "time")})


@dataclass(frozen=True)
class ParticleEvent:
    theta: float
    capacity: float
    slit_length: float


@dataclass(frozen=True, eq=False)
class ClusterState:
    """Immutable event log of a grown cluster.

    Arrays are 0-based: entry ``k`` describes particle ``k + 1``.
    ``cumulative[k]`` is ``C_{k+1}``.
    """

    params: GrowthParams
    seed: Optional[int]
    thetas: np.ndarray
    capacities: np.ndarray
    slit_lengths: np.ndarray
    cumulative: np.ndarray
    map_evaluations: int = 0
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("thetas", "capacities", "slit_lengths", "cumulative"):
            getattr(self, name).setflags(write=False)

    def __len__(self) -> int:
        return int(self.thetas.size)

    def event(self, k: int) -> ParticleEvent:
        """Particle ``k`` (1-based)."""
        if not 1 <= k <= len(self):
            raise IndexError(f"particle index {k} out of range 1..{len(self)}")
        i = k - 1
        return ParticleEvent(float(self.thetas[i]), float(self.capacities[i]),
                             float(self.slit_lengths[i]))

    def events(self) -> Iterator[ParticleEvent]:
        for k in range(1, len(self) + 1):
            yield self.event(k)

    @cached_property
    def rotations(self) -> np.ndarray:
        return np.exp(1j * self.thetas)

    @cached_property
    def expm1_caps(self) -> np.ndarray:
        return np.expm1(self.capacities)

    @cached_property
    def exp_caps(self) -> np.ndarray:
        return np.exp(self.capacities)

    def evaluate(self, z, n: Optional[int] = None):
        """``(Phi_n(z), Phi_n'(z))`` for a single point (``n`` defaults to all)."""
        n = len(self) if n is None else n
        if not 0 <= n <= len(self):
            raise IndexError(f"map index {n} out of range")
        val, der, bad, st = _compose_range(self.rotations, self.expm1_caps, complex(z), 0, n)
        if st != OK:
            _raise_status(st, z, index=bad + 1)
        return val, der

    def evaluate_many(self, zs, ns):
        """Vectorized ``Phi_{ns[i]}(zs[i])``; returns ``(values, derivs, status)``."""
        zs = np.ascontiguousarray(zs, dtype=complex)
        ns = np.broadcast_to(np.asarray(ns, dtype=np.int64), zs.shape).copy()
        vals = np.empty_like(zs)
        ders = np.empty_like(zs)
        status = np.empty(zs.shape, dtype=np.int64)
        _compose_points(self.rotations, self.expm1_caps, zs.ravel(), ns.ravel(),
                        vals.ravel(), ders.ravel(), status.ravel())
        return vals, ders, status


# ---------------------------------------------------------------------------
# capacity rules
# ---------------------------------------------------------------------------


def starred_capacity(k, c, alpha):
    """Deterministic reference capacity ``c / (1 + alpha c (k - 1))``."""
    k = np.asarray(k)
    if np.any(k < 1):
        raise DomainError("particle index must be >= 1")
    out = c / (1.0 + alpha * c * (k - 1.0))
    return float(out) if out.ndim == 0 else out


def starred_sequence(c: float, alpha: float, n: int) -> np.ndarray:
    return c / (1.0 + alpha * c * np.arange(n, dtype=float))


def infinity_regularized_sequence(c: float, alpha: float, n: int) -> np.ndarray:
    """Capacities of the sigma = infinity model (exact recursion)."""
    if n < 1:
        raise DomainError("need at least one particle")
    q = np.empty(n)
    acc = 0.0
    for k in range(n):
        q[k] = math.exp(-alpha * c * acc)
        acc += q[k]
    return c * q


def next_capacity_hl(state: ClusterState, theta_next: float) -> float:
    """Capacity of the next sigma-mode particle attached at ``theta_next``."""
    p = state.params
    if p.regularization != "sigma":
        raise DomainError("next_capacity_hl needs a sigma-mode state")
    n = len(state)
    c = p.base_capacity
    if n == 0:
        return c
    z = math.exp(p.sigma) * np.exp(1j * theta_next)
    _, der = state.evaluate(z)
    m = abs(der)
    if not math.isfinite(m) or m < UNDERFLOW:
        raise NumericalFailure(f"|Phi'_n| = {m!r} at step {n + 1}", step=n + 1)
    return c / m ** p.alpha


@njit(cache=True, nogil=True)
def _grow_sigma_chunk(rots, bs, caps, c, alpha, radius, start, stop):
    """Fill capacities for particles ``start .. stop-1`` (0-based).

    Returns ``(failed_index, map_evaluations)``; ``failed_index = -1`` on
    success.  Singular orbits report ``-(index + 2)``.
    """
    evals = 0
    for n in range(start, stop):
        z = radius * rots[n]
        der = 1.0 + 0.0j
        for k in range(n - 1, -1, -1):
            rot = rots[k]
            val, dval, st = _slit_eval(bs[k], z * rot.conjugate())
            if st != OK:
                return -(n + 2), evals
            der = der * dval
            z = rot * val
            evals += 1
        m = abs(der)
        if not (m >= UNDERFLOW and m < np.inf):
            return n, evals
        ck = c / m ** alpha
        caps[n] = ck
        bs[n] = math.expm1(ck)
    return -1, evals


def sample_angles(seed: int, n: int) -> np.ndarray:
    """``n`` i.i.d. uniform angles on ``[0, 2 pi)`` from the seeded stream."""
    rng = np.random.Generator(np.random.PCG64(seed))
    th = TWO_PI * rng.random(n)
    th[th >= TWO_PI] = 0.0
    return th


def _finish(params, seed, thetas, caps, evals=0, stats=None):
    if caps.size and (not np.all(np.isfinite(caps)) or np.any(caps <= 0)):
        raise NumericalFailure("non-positive or non-finite capacity produced")
    d = slit_from_capacity(caps) if caps.size else np.empty(0)
    return ClusterState(params=params, seed=seed, thetas=thetas, capacities=caps,
                        slit_lengths=np.asarray(d, dtype=float), cumulative=np.cumsum(caps),
                        map_evaluations=evals, stats=stats or {})


def grow(params: GrowthParams, seed: int, progress: bool = False) -> ClusterState:
    """Grow a cluster; identical ``(params, seed)`` give bit-identical events."""
    n = params.n_particles
    c, alpha = params.base_capacity, params.alpha
    thetas = sample_angles(seed, n)
    t0 = time.perf_counter()
    if n == 0:
        return _finish(params, seed, thetas, np.empty(0))
    mode = params.regularization
    if mode == "starred":
        return _finish(params, seed, thetas, starred_sequence(c, alpha, n))
    if mode == "infinity":
        return _finish(params, seed, thetas, infinity_regularized_sequence(c, alpha, n))

    rots = np.exp(1j * thetas)
    caps = np.empty(n)
    bs = np.empty(n)
    if alpha == 0:
        caps[:] = c
        # the orbit sweep is still performed so the cost model stays uniform
    evals = 0
    radius = math.exp(params.sigma)
    for start in range(0, n, PROGRESS_EVERY):
        stop = min(n, start + PROGRESS_EVERY)
        fail, e = _grow_sigma_chunk(rots, bs, caps, c, alpha, radius, start, stop)
        evals += e
        if fail >= 0:
            raise NumericalFailure(f"|Phi'| underflow/overflow at step {fail + 1}", step=fail + 1)
        if fail < -1:
            k = -fail - 1
            raise SingularityError(f"singular orbit while computing particle {k}", k)
        if progress and stop % PROGRESS_EVERY == 0:
            log.info("sigma growth: %d / %d particles (%.1fs)", stop, n,
                     time.perf_counter() - t0)
    return _finish(params, seed, thetas, caps, evals,
                   {"wall_clock_s": time.perf_counter() - t0})


def total_capacity(state: ClusterState, n: int) -> float:
    """``C_n = c_1 + ... + c_n`` with ``C_0 = 0``."""
    if not 0 <= n <= len(state):
        raise IndexError(f"n = {n} out of range 0..{len(state)}")
    return 0.0 if n == 0 else float(state.cumulative[n - 1])


# Panel edges at 1 + d * 2^-j cluster nodes toward the slit base where
# |Phi'| may have integrable singularities.
_ARC_PANELS = 8


def particle_arclength(state: ClusterState, k: int, quad_points: int = 16,
                       with_error: bool = False):
    """Arc length of particle ``k`` on the cluster boundary.

    Composite Gauss-Legendre on geometrically graded panels along
    ``r e^{i theta_k}``, ``1 < r <= 1 + d_k``, integrating ``|Phi'_{k-1}|``.
    The error estimate compares against the rule with half the nodes.
    """
    if not 1 <= k <= len(state):
        raise IndexError(f"particle index {k} out of range")
    if quad_points < 2:
        raise DomainError("need at least 2 quadrature points")
    d = float(state.slit_lengths[k - 1])
    if k == 1:
        return (d, 0.0) if with_error else d

    edges = np.concatenate([[0.0], d * 2.0 ** -np.arange(_ARC_PANELS - 1, -1, -1)])

    def rule(q):
        x, w = leggauss(q)
        a, b = edges[:-1, None], edges[1:, None]
        r = 1.0 + 0.5 * (b - a) * x + 0.5 * (a + b)
        wt = 0.5 * (b - a) * w
        zs = r.ravel() * state.rotations[k - 1]
        _, der, st = state.evaluate_many(zs, k - 1)
        good = st == OK
        return float(np.sum(np.abs(der[good]) * wt.ravel()[good])), int(np.sum(~good))

    val, bad = rule(quad_points)
    coarse, _ = rule(max(2, quad_points // 2))
    if bad:
        import warnings
        warnings.warn(f"particle {k}: {bad} singular quadrature nodes skipped")
    err = abs(val - coarse)
    return (val, err) if with_error else val
