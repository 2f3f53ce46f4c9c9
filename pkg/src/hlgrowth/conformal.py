"""Slit maps, their derivatives, boundary correspondence and compositions.

The single-particle map ``F = f_c`` sends the exterior unit disk onto itself
minus the radial slit ``(1, 1 + d]``.  It is built by Joukowski conjugation::

    F = J^{-1} o L o J,   J(z) = (z + 1/z) / 2,   L(w) = e^c w + (e^c - 1)

``L`` stretches the segment ``[-1, 1]`` to ``[-1, a]`` with ``a = J(1 + d)``,
and the exterior branch of ``J^{-1}`` maps the excess ``(1, a]`` back onto the
slit.  With ``b = e^c - 1`` one has ``(a - 1)/2 = b`` and ``(a + 1)/2 = e^c``,
which is exactly the capacity/length relation ``e^c = 1 + d^2 / (4(1 + d))``.

All heavy lifting goes through the ``@njit`` scalar kernels below so that the
Python wrappers, the growth recursion and the renderers share one code path
and produce bit-identical numbers.
"""

from __future__ import annotations

import cmath
import math
from typing import Sequence

import numpy as np
from numba import njit

from .errors import DomainError, SingularityError

TWO_PI = 2.0 * math.pi
EPS = np.finfo(float).eps

# Kernel status codes.
OK = 0
DERIV_SINGULAR = 1
OUTSIDE_DOMAIN = 2
BASE_POINT = 3

# |w -/+ 1| below this means the derivative sits on a branch point of J^{-1}.
BRANCH_TOL = 1e-14
# Relative modulus gap below which the two J^{-1} candidates count as tied.
TIE_TOL = 1e-12
BASE_TOL = 10.0 * EPS
DOMAIN_TOL = 1e-14


# ---------------------------------------------------------------------------
# capacity <-> slit length
# ---------------------------------------------------------------------------


def _check_positive(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return arr


def capacity_from_slit(d):
    """Logarithmic capacity increment of a radial slit of length ``d``."""
    d = _check_positive("slit length", d)
    c = np.log1p(d * d / (4.0 * (1.0 + d)))
    return float(c) if c.ndim == 0 else c


def slit_from_capacity(c):
    """Length of the slit whose capacity increment is ``c``.

    Positive root of ``d^2 - 4 b d - 4 b = 0`` with ``b = e^c - 1``.
    """
    c = _check_positive("capacity", c)
    b = np.expm1(c)
    d = 2.0 * b + 2.0 * np.sqrt(b * b + b)
    return float(d) if d.ndim == 0 else d


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _slit_eval(b, z):
    """Evaluate ``F(z)`` and ``F'(z)`` for the unrotated slit map.

    ``b = expm1(c)``.  Returns ``(value, derivative, status)``; the derivative
    is NaN unless status is OK.
    """
    nan = complex(np.nan, np.nan)
    az = abs(z)
    if az < 1.0 - DOMAIN_TOL:
        return nan, nan, OUTSIDE_DOMAIN
    if abs(z - 1.0) <= BASE_TOL:
        return nan, nan, BASE_POINT
    ec = 1.0 + b
    inv = 1.0 / z
    # w +/- 1 in factored form keeps full relative accuracy near z = -1 and
    # near the preimages of the slit base.
    zp = z + 1.0
    zm = z - 1.0
    wp1 = ec * zp * zp * 0.5 * inv
    wm1 = ec * zm * zm * 0.5 * inv + 2.0 * b
    w = wp1 - 1.0
    s = cmath.sqrt(wm1) * cmath.sqrt(wp1)
    p = w + s
    m = w - s
    ap = abs(p)
    am = abs(m)
    if abs(ap - am) <= TIE_TOL * (ap + am):
        # On the unit circle both candidates have modulus one; F preserves the
        # upper and lower half-planes, so pick the one on z's side.
        if (p.imag >= 0.0) == (z.imag >= 0.0):
            zeta = p
        else:
            zeta = m
    elif ap > am:
        zeta = p
    else:
        zeta = m
    if abs(wm1) < BRANCH_TOL or abs(wp1) < BRANCH_TOL:
        return zeta, nan, DERIV_SINGULAR
    t = zeta - w
    deriv = zeta / t * ec * 0.5 * (1.0 - inv * inv)
    return zeta, deriv, OK


@njit(cache=True, nogil=True)
def _compose_range(rots, bs, z, lo, hi):
    """Apply ``f_{hi-1}`` first, down to ``f_lo`` (0-based event indices).

    Returns ``(value, derivative, bad_index, status)`` with ``bad_index = -1``
    on success.
    """
    der = 1.0 + 0.0j
    for k in range(hi - 1, lo - 1, -1):
        rot = rots[k]
        w = z * rot.conjugate()
        val, dval, st = _slit_eval(bs[k], w)
        if st != OK:
            return z, der, k, st
        der = der * dval
        z = rot * val
    return z, der, -1, OK


@njit(cache=True, nogil=True)
def _compose_points(rots, bs, zs, his, out_val, out_der, out_status):
    """Evaluate ``Phi_{his[i]}(zs[i])`` for every point; returns failure count."""
    fails = 0
    for i in range(zs.size):
        v, dv, bad, st = _compose_range(rots, bs, zs[i], 0, his[i])
        out_val[i] = v
        out_der[i] = dv
        out_status[i] = st
        if st != OK:
            fails += 1
    return fails


@njit(cache=True, nogil=True)
def _gamma_tilde_scalar(b, ec, x):
    """``gamma_c(x) - x`` for ``x`` already reduced to ``(-pi, pi]``."""
    if x == 0.0:
        return 2.0 * math.atan(math.sqrt(b))
    ax = abs(x)
    if ax >= math.pi:
        return 0.0
    t = math.tan(0.5 * ax)
    big = math.sqrt(ec * t * t + b)
    # atan(big) - atan(t) without cancellation
    diff = b * (1.0 + t * t) / (big + t)
    g = 2.0 * math.atan(diff / (1.0 + big * t))
    return g if x > 0.0 else -g


@njit(cache=True, nogil=True)
def _wrap_scalar(x):
    """Reduce to ``(-pi, pi]``."""
    return x - TWO_PI * math.ceil((x - math.pi) / TWO_PI)


# ---------------------------------------------------------------------------
# public single-map API
# ---------------------------------------------------------------------------


def _check_capacity(c):
    c = float(c)
    if not math.isfinite(c) or c <= 0:
        raise DomainError(f"capacity must be positive and finite, got {c!r}")
    return c


def _raise_status(status, z, index=None):
    where = "" if index is None else f" (particle {index})"
    if status == OUTSIDE_DOMAIN:
        raise DomainError(f"point {z!r} lies inside the unit disk{where}")
    if status == BASE_POINT:
        raise SingularityError(f"point {z!r} is the slit base preimage z = 1{where}", index)
    if status == DERIV_SINGULAR:
        raise SingularityError(f"derivative singular at {z!r}: branch point{where}", index)


def _single(c, z):
    c = _check_capacity(c)
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"point must be finite, got {z!r}")
    val, der, st = _slit_eval(math.expm1(c), z)
    if st in (OUTSIDE_DOMAIN, BASE_POINT):
        _raise_status(st, z)
    return val, der, st


def slit_map(c: float, z: complex) -> complex:
    """Exterior slit map ``f_c(z)``, normalized so ``f_c(z)/z -> e^c``."""
    return _single(c, z)[0]


def slit_map_deriv(c: float, z: complex) -> complex:
    val, der, st = _single(c, z)
    if st != OK:
        _raise_status(st, z)
    return der


def rotated_particle_map(c: float, theta: float, z: complex) -> complex:
    """``e^{i theta} f_c(e^{-i theta} z)``: a particle attached at angle theta."""
    rot = cmath.exp(1j * theta)
    return rot * slit_map(c, z * rot.conjugate())


def rotated_particle_map_deriv(c: float, theta: float, z: complex) -> complex:
    rot = cmath.exp(1j * theta)
    return slit_map_deriv(c, z * rot.conjugate())


def compose_evaluate(thetas: Sequence[float], capacities: Sequence[float], z: complex):
    """Evaluate the composition ``f_1 o ... o f_n`` and its derivative at ``z``.

    ``thetas[k]`` and ``capacities[k]`` describe particle ``k + 1``; the last
    particle's map is applied first.  An empty list gives ``(z, 1)``.
    """
    thetas = np.asarray(thetas, dtype=float)
    caps = np.asarray(capacities, dtype=float)
    if thetas.shape != caps.shape:
        raise DomainError("thetas and capacities must have the same length")
    z = complex(z)
    if abs(z) <= 1.0:
        raise DomainError(f"composition requires |z| > 1, got {z!r}")
    if caps.size and (not np.all(np.isfinite(caps)) or np.any(caps <= 0)):
        raise DomainError("capacities must be positive and finite")
    rots = np.exp(1j * thetas)
    return compose_arrays(rots, np.expm1(caps), z, 0, caps.size)


def compose_arrays(rots, bs, z, lo, hi):
    """Composition on precomputed rotations and ``expm1(c)`` arrays.

    Maps with 0-based indices ``lo .. hi-1`` are applied, highest first.
    """
    val, der, bad, st = _compose_range(rots, bs, complex(z), lo, hi)
    if st != OK:
        _raise_status(st, z, index=bad + 1)
    return val, der


# ---------------------------------------------------------------------------
# boundary correspondence
# ---------------------------------------------------------------------------


def wrap_angle(x):
    """Reduce angles to ``(-pi, pi]``."""
    x = np.asarray(x, dtype=float)
    r = x - TWO_PI * np.ceil((x - math.pi) / TWO_PI)
    return float(r) if r.ndim == 0 else r


def gamma_tilde(c, x):
    """Boundary displacement ``gamma_c(x) - x`` of the inverse slit map.

    Periodic in ``x``.  At ``x = 0`` (the slit base) the right limit
    ``2 arctan sqrt(e^c - 1)`` is returned.
    """
    c = _check_capacity(c)
    b = math.expm1(c)
    ec = math.exp(c)
    r = np.asarray(wrap_angle(x), dtype=float)
    ar = np.abs(r)
    with np.errstate(over="ignore", invalid="ignore"):
        t = np.tan(0.5 * ar)
        big = np.sqrt(ec * t * t + b)
        diff = b * (1.0 + t * t) / (big + t)
        g = 2.0 * np.arctan(diff / (1.0 + big * t))
    g = np.where(ar >= math.pi, 0.0, g)
    g = np.where(r < 0, -g, g)
    g = np.where(r == 0, 2.0 * math.atan(math.sqrt(b)), g)
    return float(g) if g.ndim == 0 else g


def gamma(c, x):
    """``gamma_c(x) = 2 sgn(x) arctan sqrt(e^c tan^2(x/2) + e^c - 1)``.

    Extended to the whole line by ``gamma_c(x + 2 pi) = gamma_c(x) + 2 pi``.
    """
    x = np.asarray(x, dtype=float)
    g = x + gamma_tilde(c, x)
    return float(g) if np.ndim(g) == 0 else g


def gamma_closed_form(c, x):
    """Direct arctangent formula on ``(-pi, pi] \\ {0}``; used as a test oracle."""
    x = np.asarray(x, dtype=float)
    ec = math.exp(c)
    with np.errstate(over="ignore"):
        g = 2.0 * np.sign(x) * np.arctan(np.sqrt(ec * np.tan(x / 2) ** 2 + ec - 1.0))
    g = np.where(np.abs(x) == math.pi, x, g)
    return float(g) if g.ndim == 0 else g
