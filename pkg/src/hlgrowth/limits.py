"""Closed-form limit objects and Monte Carlo oracles.

* disk limit map ``Psi_T(z) = (1 + alpha T)^{1/alpha} z``
* ``rho(c)^{-1}``, the per-particle variance of the boundary flow, and its
  small-particle scaling ``rho(c)^{-1} ~ (16 / 3 pi) c^{3/2}``
* time change of the stopped Brownian flow
* Kingman coalescent absorption times ``tau_j`` and the branch-count law
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from .conformal import gamma_tilde
from .errors import DomainError, QuadratureError

SLIT_DIFFUSIVITY = 16.0 / (3.0 * math.pi)
KINGMAN_KMAX = 20001
_TAU_CHUNK = 256


@dataclass(frozen=True)
class LimitPrediction:
    kind: str
    parameters: dict
    value: object


def limit_map(T: float, alpha: float, z):
    """Disk limit ``Psi_T``; ``alpha = 0`` is the exact ``e^T z`` branch."""
    if T < 0 or alpha < 0:
        raise DomainError("need T >= 0 and alpha >= 0")
    return limit_scale(T, alpha) * z


def limit_scale(T: float, alpha: float) -> float:
    if alpha == 0:
        return math.exp(T)
    # log1p keeps (1 + aT)^{1/a} accurate for tiny alpha
    return math.exp(math.log1p(alpha * T) / alpha)


def limit_capacity(T: float, alpha: float) -> float:
    """Capacity ``log Psi_T'(infinity) = (1/alpha) log(1 + alpha T)``."""
    return T if alpha == 0 else math.log1p(alpha * T) / alpha


# ---------------------------------------------------------------------------
# rho(c)^{-1}
# ---------------------------------------------------------------------------


def _rho_quadrature(c: float, inner_panels: int, outer_panels: int, q: int) -> float:
    x_split = min(10.0 * math.sqrt(c), 0.5 * math.pi)
    xg, wg = leggauss(q)
    inner = np.linspace(0.0, x_split, inner_panels + 1)
    outer = np.geomspace(x_split, math.pi, outer_panels + 1)
    edges = np.concatenate([inner, outer[1:]])
    a, b = edges[:-1, None], edges[1:, None]
    x = 0.5 * (b - a) * xg + 0.5 * (a + b)
    w = 0.5 * (b - a) * wg
    g = gamma_tilde(c, x.ravel()).reshape(x.shape)
    # gamma_tilde is odd, so (1/2pi) int_{-pi}^{pi} = (1/pi) int_0^pi
    return float(np.sum(w * g * g) / math.pi)


def rho_inverse(c: float, rtol: float = 1e-3, inner_panels: int = 16,
                outer_panels: int = 32, quad_points: int = 12,
                with_error: bool = False):
    """``(1/2 pi) int gamma_tilde_c(x)^2 dx`` by split composite quadrature.

    Grids are doubled until two successive estimates agree to ``rtol``.
    """
    if not (math.isfinite(c) and 0 < c <= 0.1):
        raise DomainError(f"rho_inverse needs 0 < c <= 0.1, got {c!r}")
    prev = _rho_quadrature(c, inner_panels, outer_panels, quad_points)
    for _ in range(6):
        inner_panels *= 2
        outer_panels *= 2
        cur = _rho_quadrature(c, inner_panels, outer_panels, quad_points)
        err = abs(cur - prev) / abs(cur)
        if err < rtol:
            return (cur, err) if with_error else cur
        prev = cur
    raise QuadratureError(f"rho_inverse({c}) did not converge (rel change {err:.2e})", cur)


def rho(c: float) -> float:
    return 1.0 / rho_inverse(c)


# ---------------------------------------------------------------------------
# Brownian time change
# ---------------------------------------------------------------------------


def brownian_time_change(t, a: float):
    """Variance clock ``(32 / (3 pi a)) (1 - 1/sqrt(1 + a t))`` of the stopped flow."""
    if not a > 0:
        raise DomainError("a must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be non-negative")
    v = 2.0 * SLIT_DIFFUSIVITY / a * (-np.expm1(-0.5 * np.log1p(a * t)))
    return float(v) if v.ndim == 0 else v


def kingman_threshold(a: float) -> float:
    """Coalescent time ``8 / (9 pi a)`` at which the branch law is read off."""
    if not a > 0:
        raise DomainError("a must be positive")
    return 8.0 / (9.0 * math.pi * a)


def unit_circle_coalescent_time(t: float, a: float) -> float:
    """Diagnostic: accrued flow variance rescaled to a unit-length circle.

    Pair coalescence on ``[0, 1)`` at rate one per unit of
    ``(variance / (2 pi)^2) * 12`` reproduces Kingman's rates for a
    Brownian web started from every point; used to contrast with
    :func:`kingman_threshold`.
    """
    return 12.0 * brownian_time_change(t, a) / (4.0 * math.pi ** 2)


# ---------------------------------------------------------------------------
# Kingman coalescent
# ---------------------------------------------------------------------------


def _kingman_scales(lo: int, kmax: int) -> np.ndarray:
    k = np.arange(lo, kmax + 1, dtype=float)
    return 2.0 / (k * (k - 1.0))


def kingman_tau_sample(j: int, rng: np.random.Generator, kmax: int = KINGMAN_KMAX) -> float:
    """One draw of ``tau_j = sum_{k=j+1}^{kmax} E_k``, ``E_k ~ Exp(k(k-1)/2)``."""
    if j < 1:
        raise DomainError("j must be >= 1")
    if j >= kmax:
        return 0.0
    return float(rng.standard_exponential(kmax - j) @ _kingman_scales(j + 1, kmax))


def kingman_tau_samples(j: int, n: int, rng: np.random.Generator,
                        kmax: int = KINGMAN_KMAX) -> np.ndarray:
    """``n`` i.i.d. draws of ``tau_j``."""
    if j < 1:
        raise DomainError("j must be >= 1")
    if j >= kmax:
        return np.zeros(n)
    scales = _kingman_scales(j + 1, kmax)
    out = np.empty(n)
    for lo in range(0, n, _TAU_CHUNK):
        hi = min(n, lo + _TAU_CHUNK)
        out[lo:hi] = rng.standard_exponential((hi - lo, scales.size)) @ scales
    return out


def kingman_tau_matrix(jmax: int, n: int, rng: np.random.Generator,
                       kmax: int = KINGMAN_KMAX) -> np.ndarray:
    """Joint draws: column ``j - 1`` holds ``tau_j`` for ``j = 1 .. jmax``."""
    if not 1 <= jmax < kmax:
        raise DomainError("need 1 <= jmax < kmax")
    tail = kingman_tau_samples(jmax, n, rng, kmax)
    head = rng.standard_exponential((n, jmax - 1)) * _kingman_scales(2, jmax)
    # tau_j = tail + sum_{k=j+1}^{jmax} E_k
    rev = np.cumsum(head[:, ::-1], axis=1)[:, ::-1]
    return np.column_stack([tail[:, None] + rev, tail])


def branch_count_cdf(j: int, a: float, n_mc: int, rng: np.random.Generator,
                     threshold: Optional[float] = None):
    """``P(B <= j) = P(tau_j <= 8/(9 pi a))`` with its Monte Carlo standard error."""
    if n_mc < 1000:
        raise DomainError("n_mc must be >= 1000")
    thr = kingman_threshold(a) if threshold is None else threshold
    p = float(np.mean(kingman_tau_samples(j, n_mc, rng) <= thr))
    return p, math.sqrt(p * (1.0 - p) / n_mc)


def branch_count_pmf(a: float, jmax: int, n_mc: int, rng: np.random.Generator,
                     threshold: Optional[float] = None):
    """Law of ``B`` on ``1 .. jmax`` from joint ``tau`` draws.

    Returns ``(pmf, se, tail)`` where ``tail = P(B > jmax)``.
    """
    if n_mc < 1000:
        raise DomainError("n_mc must be >= 1000")
    thr = kingman_threshold(a) if threshold is None else threshold
    taus = kingman_tau_matrix(jmax, n_mc, rng)
    cdf = np.mean(taus <= thr, axis=0)
    pmf = np.diff(np.concatenate([[0.0], cdf]))
    se = np.sqrt(pmf * (1.0 - pmf) / n_mc)
    return pmf, se, float(1.0 - cdf[-1])
