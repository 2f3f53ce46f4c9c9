"""Harmonic-measure boundary flow.

A boundary point ``y`` (lifted to the real line) is carried through particle
``k`` by ``y -> y + gamma_tilde_{c_k}(wrap(y - theta_k))``.  Because every
``gamma_c`` is strictly increasing and commutes with ``+ 2 pi``, the flow
preserves circular order and winding exactly; tracers never cross.  The
discrete flow is injective, so coalescence is declared once two tracers come
within ``coalescence_tol`` and the pair moves together from then on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .conformal import TWO_PI, _gamma_tilde_scalar, _wrap_scalar, gamma_tilde, wrap_angle
from .errors import DomainError
from .growth import ClusterState, floor_horizon


@dataclass(frozen=True)
class TimeScale:
    """Diffusive clock ``N_t = floor(t c^{-3/2})``."""

    c: float

    def steps(self, t: float) -> int:
        if t < 0:
            raise DomainError("time must be non-negative")
        return floor_horizon(t * self.c ** -1.5)

    def time(self, n: int) -> float:
        return n * self.c ** 1.5


@dataclass(frozen=True)
class FlowPath:
    """Lifted trajectory ``n -> Gamma_{n,m}(x)`` sampled at ``indices``."""

    start_index: int
    start_angle: float
    indices: np.ndarray
    values: np.ndarray

    @property
    def end(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True)
class CoalescencePartition:
    """Result of a lockstep tracer evolution.

    ``merges`` rows are ``(absorbed tracer, surviving tracer, step)``;
    ``blocks`` lists tracer indices per final block in circular order;
    ``block_counts[i]`` is the number of blocks at ``sample_indices[i]``.
    """

    start_angles: np.ndarray
    merges: np.ndarray
    blocks: list
    sample_indices: np.ndarray
    block_counts: np.ndarray
    tolerance: float
    final_positions: np.ndarray = field(repr=False, default=None)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)


def default_coalescence_tol(c: float) -> float:
    return 1e-2 * math.sqrt(c)


def flow_step(y, theta, c):
    """One particle's action on lifted boundary coordinates."""
    return y + gamma_tilde(c, np.asarray(y, dtype=float) - theta)


@njit(cache=True, nogil=True)
def _advance(thetas, bs, ecs, lo, hi, y):
    for k in range(lo, hi):
        y += _gamma_tilde_scalar(bs[k], ecs[k], _wrap_scalar(y - thetas[k]))
    return y


@njit(cache=True, nogil=True)
def _advance_maxdisp(thetas, bs, ecs, lo, hi, y):
    y0 = y
    best = 0.0
    for k in range(lo, hi):
        y += _gamma_tilde_scalar(bs[k], ecs[k], _wrap_scalar(y - thetas[k]))
        d = abs(y - y0)
        if d > best:
            best = d
    return y, best


@njit(cache=True, nogil=True)
def _trajectory(thetas, bs, ecs, lo, hi, y, stride, out):
    j = 0
    out[j] = y
    for k in range(lo, hi):
        y += _gamma_tilde_scalar(bs[k], ecs[k], _wrap_scalar(y - thetas[k]))
        if (k + 1 - lo) % stride == 0:
            j += 1
            out[j] = y
    if (hi - lo) % stride != 0:
        j += 1
        out[j] = y
    return j + 1


def _state_arrays(state: ClusterState):
    return state.thetas, state.expm1_caps, state.exp_caps


def _check_range(state, m, n):
    if not 0 <= m <= n <= len(state):
        raise DomainError(f"need 0 <= m <= n <= {len(state)}, got m={m}, n={n}")


def flow_trajectory(state: ClusterState, m: int, n: int, x: float, stride: int = 1) -> FlowPath:
    """``Gamma_{k,m}(x)`` for ``k = m, m+stride, ..., n`` (``n`` always included)."""
    _check_range(state, m, n)
    if stride < 1:
        raise DomainError("stride must be >= 1")
    th, bs, ecs = _state_arrays(state)
    size = (n - m) // stride + 2
    out = np.empty(size)
    used = _trajectory(th, bs, ecs, m, n, float(x), stride, out)
    idx = np.arange(m, n + 1, stride, dtype=np.int64)
    if idx[-1] != n:
        idx = np.append(idx, n)
    return FlowPath(m, float(x), idx, out[:used].copy())


def flow_endpoint(state: ClusterState, m: int, n: int, x: float) -> float:
    _check_range(state, m, n)
    return _advance(*_state_arrays(state), m, n, float(x))


def flow_max_displacement(state: ClusterState, m: int, n: int, x: float):
    """``(Gamma_{n,m}(x), max_k |Gamma_{k,m}(x) - x|)``."""
    _check_range(state, m, n)
    return _advance_maxdisp(*_state_arrays(state), m, n, float(x))


# ---------------------------------------------------------------------------
# lockstep tracers with coalescence
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _evolve_kernel(thetas, bs, ecs, lo, hi, pos, tol, samples_at,
                   out_samples, out_counts, merge_log):
    """Evolve sorted lifted tracers in lockstep, merging below ``tol``.

    ``pos`` is updated in place for the surviving leaders.  Returns
    ``(n_merges, leader, offset)``; tracer ``i`` sits at
    ``pos[leader[i]] + offset[i]``.
    """
    m = pos.size
    leader = np.arange(m)
    offset = np.zeros(m)
    active = np.arange(m)
    n_act = m
    n_merge = 0
    js = 0
    n_samples = samples_at.size
    k = lo
    while True:
        # merge pass: neighbours in circular order
        i = 0
        while i < n_act - 1 and n_act > 1:
            a = active[i]
            b = active[i + 1]
            if pos[b] - pos[a] < tol:
                shift = pos[b] - pos[a]
                for t in range(m):
                    if leader[t] == b:
                        leader[t] = a
                        offset[t] += shift
                merge_log[n_merge, 0] = b
                merge_log[n_merge, 1] = a
                merge_log[n_merge, 2] = k
                n_merge += 1
                for r in range(i + 1, n_act - 1):
                    active[r] = active[r + 1]
                n_act -= 1
            else:
                i += 1
        if n_act > 1:
            a = active[0]
            b = active[n_act - 1]
            if pos[a] + TWO_PI - pos[b] < tol:
                shift = pos[b] - pos[a]
                for t in range(m):
                    if leader[t] == b:
                        leader[t] = a
                        offset[t] += shift
                merge_log[n_merge, 0] = b
                merge_log[n_merge, 1] = a
                merge_log[n_merge, 2] = k
                n_merge += 1
                n_act -= 1
        while js < n_samples and samples_at[js] == k:
            for t in range(m):
                out_samples[js, t] = pos[leader[t]] + offset[t]
            out_counts[js] = n_act
            js += 1
        if k == hi:
            break
        th = thetas[k]
        b_ = bs[k]
        e_ = ecs[k]
        for i in range(n_act):
            a = active[i]
            y = pos[a]
            pos[a] = y + _gamma_tilde_scalar(b_, e_, _wrap_scalar(y - th))
        k += 1
    return n_merge, leader, offset


def _sample_indices(m, n, n_samples):
    if n_samples < 2 or n == m:
        return np.array(sorted({m, n}), dtype=np.int64)
    return np.unique(np.linspace(m, n, n_samples).round().astype(np.int64))


def evolve_tracers(state: ClusterState, m: int, n: int, xs: Sequence[float],
                   coalescence_tol: Optional[float] = None, n_samples: int = 101,
                   sample_indices: Optional[np.ndarray] = None):
    """Evolve tracers from index ``m`` to ``n`` with permanent coalescence.

    Returns ``(paths, partition)`` where ``paths`` has shape
    ``(len(sample_indices), len(xs))``.
    """
    _check_range(state, m, n)
    xs = np.array(xs, dtype=float)
    if xs.ndim != 1:
        raise DomainError("xs must be one-dimensional")
    if xs.size and (np.any(np.diff(xs) < 0) or xs[0] < 0 or xs[-1] >= TWO_PI):
        raise DomainError("xs must be sorted in [0, 2 pi)")
    tol = default_coalescence_tol(state.params.base_capacity) if coalescence_tol is None \
        else float(coalescence_tol)
    if not tol > 0:
        raise DomainError("coalescence tolerance must be positive")
    if sample_indices is None:
        sample_indices = _sample_indices(m, n, n_samples)
    else:
        sample_indices = np.unique(np.asarray(sample_indices, dtype=np.int64))
        if sample_indices.size and (sample_indices[0] < m or sample_indices[-1] > n):
            raise DomainError("sample indices outside [m, n]")
    M = xs.size
    samples = np.empty((sample_indices.size, M))
    counts = np.zeros(sample_indices.size, dtype=np.int64)
    if M == 0:
        part = CoalescencePartition(xs, np.empty((0, 3), np.int64), [], sample_indices,
                                    counts, tol, xs.copy())
        return samples, part
    log = np.empty((M, 3), dtype=np.int64)
    pos = xs.copy()
    th, bs, ecs = _state_arrays(state)
    n_merge, leader, offset = _evolve_kernel(th, bs, ecs, m, n, pos, tol, sample_indices,
                                             samples, counts, log)
    final = pos[leader] + offset
    blocks = {}
    for t in range(M):
        blocks.setdefault(int(leader[t]), []).append(t)
    order = sorted(blocks, key=lambda ld: pos[ld])
    part = CoalescencePartition(xs, log[:n_merge].copy(), [blocks[ld] for ld in order],
                                sample_indices, counts, tol, final)
    return samples, part


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------


def diffusivity_estimate(displacements: Sequence[float]) -> float:
    """Unbiased sample variance of endpoint displacements."""
    d = np.asarray(displacements, dtype=float)
    if d.size < 2:
        raise DomainError("need at least two runs")
    return float(np.var(d, ddof=1))


def circular_gaps(positions: np.ndarray) -> np.ndarray:
    """Consecutive lifted separations in circular order, including the wrap gap."""
    p = np.sort(np.asarray(positions, dtype=float))
    if p.size == 0:
        return p
    return np.append(np.diff(p), p[0] + TWO_PI - p[-1])


def count_blocks(positions: np.ndarray, gap_threshold: float) -> int:
    """Maximal circular runs of points linked by separations ``< gap_threshold``."""
    if not gap_threshold > 0:
        raise DomainError("gap threshold must be positive")
    g = circular_gaps(positions)
    if g.size == 0:
        return 0
    return max(1, int(np.sum(g >= gap_threshold)))


def gap_locations(positions: np.ndarray, gap_threshold: float) -> np.ndarray:
    """Angles in ``[0, 2 pi)`` at the start of each surviving macroscopic gap."""
    p = np.sort(np.asarray(positions, dtype=float))
    g = circular_gaps(p)
    return np.mod(p[g >= gap_threshold], TWO_PI)


def uniform_grid(M: int) -> np.ndarray:
    return TWO_PI * np.arange(M) / M


def branch_count(state: ClusterState, grid_size: int, t: float,
                 gap_threshold: Optional[float] = None,
                 coalescence_tol: Optional[float] = None) -> int:
    """Estimate of the number of surviving branches at diffusive time ``t``."""
    if grid_size < 8:
        raise DomainError("grid size must be >= 8")
    if t < 0:
        raise DomainError("t must be non-negative")
    gth = 8.0 * TWO_PI / grid_size if gap_threshold is None else float(gap_threshold)
    if not gth > 0:
        raise DomainError("gap threshold must be positive")
    n = TimeScale(state.params.base_capacity).steps(t)
    if n > len(state):
        raise DomainError(f"state has {len(state)} particles, need N_t = {n}")
    _, part = evolve_tracers(state, 0, n, uniform_grid(grid_size), coalescence_tol, n_samples=2)
    return count_blocks(part.final_positions, gth)
