"""SVG 1.1 rendering of clusters and flow fans.

Particle ``k`` is drawn as the image under ``Phi_{k-1}`` of sampled points on
its slit ``r e^{i theta_k}``, ``1 < r <= 1 + d_k``.  Output depends only on the
inputs: coordinates are written at fixed precision and subsampling uses a
recorded seed.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional
from xml.sax.saxutils import escape

import numpy as np

from .errors import DomainError
from .flow import circular_gaps, evolve_tracers, uniform_grid
from .growth import ClusterState

DEFAULT_PALETTE = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d")
SECTORS = 64
BASE_OFFSET = 1e-6


@dataclass(frozen=True)
class RenderStyle:
    size: int = 800
    epoch_size: int = 1000
    palette: tuple = DEFAULT_PALETTE
    samples_per_slit: int = 8
    stroke_width: float = 0.8
    particle_budget: int = 25000

    def __post_init__(self):
        if self.epoch_size < 1:
            raise DomainError("epoch size must be >= 1")
        if self.samples_per_slit < 2:
            raise DomainError("need at least 2 samples per slit")
        if self.size < 16 or self.particle_budget < 1 or not self.palette:
            raise DomainError("invalid render style")


def _svg(size, body, meta) -> str:
    head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{size}" height="{size}" viewBox="0 0 {size} {size}">\n'
            f'<metadata>{escape(json.dumps(meta, sort_keys=True))}</metadata>\n'
            f'<rect width="{size}" height="{size}" fill="white"/>\n')
    return head + "".join(body) + "</svg>\n"


def _points(xy) -> str:
    return " ".join(f"{x:.2f},{y:.2f}" for x, y in xy)


def select_particles(n: int, budget: int, seed: int) -> np.ndarray:
    """1-based particle indices to draw: all, or a sorted uniform subsample."""
    if n <= budget:
        return np.arange(1, n + 1)
    rng = np.random.Generator(np.random.PCG64(seed))
    return np.sort(rng.choice(n, size=budget, replace=False)) + 1


def outer_radius(points: np.ndarray, sectors: int = SECTORS) -> float:
    """Mean over angular sectors of the largest modulus in each sector."""
    if points.size == 0:
        return 1.0
    sec = np.floor((np.angle(points) + math.pi) / (2 * math.pi) * sectors).astype(int) % sectors
    best = np.zeros(sectors)
    np.maximum.at(best, sec, np.abs(points))
    hit = np.bincount(sec, minlength=sectors) > 0
    return float(best[hit].mean())


def cluster_polylines(state: ClusterState, ks: np.ndarray, samples: int):
    """Images of slit samples; returns ``(points[len(ks), samples], ok mask)``."""
    frac = np.linspace(0.0, 1.0, samples)
    # the open end r = 1 sits on the boundary, where rounding can leave the domain
    frac[0] = BASE_OFFSET
    r = 1.0 + frac[None, :] * state.slit_lengths[ks - 1, None]
    z = r * state.rotations[ks - 1, None]
    his = np.repeat(ks - 1, samples).reshape(z.shape)
    vals, _, status = state.evaluate_many(z, his)
    ok = (status == 0) | (status == 1)  # value is fine even where the derivative is not
    ok &= np.isfinite(vals)
    return vals, ok


def render_cluster(state: ClusterState, style: RenderStyle = RenderStyle(),
                   subsample_seed: int = 0):
    """Return ``(svg_text, metadata)``."""
    n = len(state)
    ks = select_particles(n, style.particle_budget, subsample_seed)
    pts, ok = (cluster_polylines(state, ks, style.samples_per_slit) if ks.size
               else (np.empty((0, style.samples_per_slit), complex), np.empty((0, 0), bool)))
    good = pts[ok] if ks.size else np.empty(0, complex)
    R = outer_radius(good)
    extent = 1.05 * max(1.0, float(np.abs(good).max()) if good.size else 1.0)
    s = style.size
    scale = 0.5 * s / extent

    def xy(w):
        return np.column_stack([0.5 * s + scale * w.real, 0.5 * s - scale * w.imag])

    body = [f'<circle cx="{0.5 * s:.2f}" cy="{0.5 * s:.2f}" r="{scale:.2f}" fill="#dddddd" '
            f'stroke="#888888" stroke-width="{style.stroke_width:.2f}"/>\n']
    skipped = 0
    for i, k in enumerate(ks):
        row = pts[i][ok[i]]
        skipped += int(np.sum(~ok[i]))
        if row.size < 2:
            continue
        colour = style.palette[((k - 1) // style.epoch_size) % len(style.palette)]
        body.append(f'<polyline fill="none" stroke="{colour}" stroke-width="{style.stroke_width:.2f}" '
                    f'points="{_points(xy(row))}"/>\n')
    meta = {
        "kind": "cluster",
        "n_particles": n,
        "drawn_particles": int(ks.size),
        "subsampled": bool(ks.size < n),
        "subsample_seed": subsample_seed,
        "skipped_samples": skipped,
        "outer_radius": R,
        "params": state.params.to_dict(),
        "seed": state.seed,
        "epoch_size": style.epoch_size,
    }
    return _svg(s, body, meta), meta


def render_flow(state: ClusterState, tracers: int, stride: int,
                style: RenderStyle = RenderStyle(), coalescence_tol: Optional[float] = None):
    """Tracer trajectories (lifted angle against particle index)."""
    if tracers < 0 or stride < 1:
        raise DomainError("need tracers >= 0 and stride >= 1")
    n = len(state)
    s = style.size
    meta = {"kind": "flow", "tracers": tracers, "stride": stride, "n_particles": n,
            "params": state.params.to_dict(), "seed": state.seed}
    if tracers == 0:
        meta.update({"gap_histogram": [], "gap_bins": []})
        return _svg(s, [], meta), meta
    idx = np.arange(0, n + 1, stride, dtype=np.int64)
    if idx[-1] != n:
        idx = np.append(idx, n)
    paths, part = evolve_tracers(state, 0, n, uniform_grid(tracers), coalescence_tol,
                                 sample_indices=idx)
    lo, hi = float(paths.min()), float(paths.max())
    span = max(hi - lo, 1e-12)
    pad = 0.05 * s
    xs = pad + (s - 2 * pad) * (idx / max(n, 1))
    body = []
    for t in range(tracers):
        ys = s - pad - (s - 2 * pad) * (paths[:, t] - lo) / span
        colour = style.palette[t % len(style.palette)]
        body.append(f'<polyline fill="none" stroke="{colour}" stroke-width="{style.stroke_width:.2f}" '
                    f'points="{_points(np.column_stack([xs, ys]))}"/>\n')
    gaps = circular_gaps(part.final_positions)
    hist, bins = np.histogram(gaps, bins=16, range=(0.0, 2 * math.pi))
    meta.update({"gap_histogram": hist.tolist(), "gap_bins": bins.tolist(),
                 "final_blocks": part.n_blocks, "coalescence_tol": part.tolerance})
    return _svg(s, body, meta), meta


def write_svg(text: str, path) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    tmp = p.with_name(f".{p.name}.tmp")
    tmp.write_text(text)
    os.replace(tmp, p)
