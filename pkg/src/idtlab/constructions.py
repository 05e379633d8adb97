"""Constructions that turn base processes into new time-divisible ones.

Four recipes: deterministic stable rays, integration of a base path against a
radial measure, functionals of recorded jumps, and Gaussian moving averages
driven by a square-integrable kernel (sampled either as a discretized
stochastic integral or exactly from the covariance matrix).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import backend, kernels
from .errors import (
    BadStableIndex,
    GridCoverage,
    NotPositiveSemidefinite,
    TruncationTooSmall,
    UnsupportedMeasureSupport,
)
from .paths import PathEnsemble, TimeGrid
from .rng import SeedInfo, as_seed_info
from .sampling import (
    Sampler,
    one_sided_stable_from_uniforms,
    run_sharded,
    symmetric_stable_from_uniforms,
)


# --------------------------------------------------------------------------
# radial measures on [0, inf)
# --------------------------------------------------------------------------


class PointMasses:
    """Finite sum of point masses sum_i w_i delta_{u_i}, u_i >= 0."""

    def __init__(self, atoms):
        locs = np.asarray([a[0] for a in atoms], dtype=np.float64)
        ws = np.asarray([a[1] for a in atoms], dtype=np.float64)
        if locs.size == 0:
            raise ValueError("need at least one atom")
        if np.any(locs < 0) or not np.all(np.isfinite(locs)):
            raise ValueError("atom locations must be finite and >= 0")
        if np.any(ws <= 0) or not np.all(np.isfinite(ws)):
            raise ValueError("atom weights must be finite and > 0")
        order = np.argsort(locs, kind="stable")
        self.locations = locs[order]
        self.weights = ws[order]

    @property
    def support_end(self) -> float:
        return float(self.locations[-1])

    def tail(self, h):
        """mu([h, inf)), right-continuous step function."""
        h = np.asarray(h, dtype=np.float64)
        idx = np.searchsorted(self.locations, h, side="left")
        rev = np.concatenate([np.cumsum(self.weights[::-1])[::-1], [0.0]])
        out = rev[idx]
        return out if out.ndim else float(out)


class LogUniform:
    """The measure (du/u) restricted to [a, b]; a = 0 encodes (0, b]."""

    def __init__(self, a: float, b: float):
        if not (0.0 <= a < b and math.isfinite(b)):
            raise ValueError("need 0 <= a < b < inf")
        self.a = float(a)
        self.b = float(b)

    @property
    def support_end(self) -> float:
        return self.b

    def tail(self, h):
        h = np.asarray(h, dtype=np.float64)
        if self.a == 0.0 and np.any(h <= 0.0):
            raise ValueError("tail of the log measure needs h > 0 when a = 0")
        hh = np.clip(h, self.a if self.a > 0 else None, self.b)
        out = np.where(h >= self.b, 0.0, np.log(self.b / np.maximum(hh, 1e-300)))
        return out if out.ndim else float(out)


class RadialDensity:
    """Density w.r.t. du on a finite grid in (0, inf)."""

    def __init__(self, grid, values):
        g = np.asarray(grid, dtype=np.float64)
        v = np.asarray(values, dtype=np.float64)
        if g.ndim != 1 or g.size < 2 or g.size != v.size:
            raise ValueError("density needs matching 1-d grid and values")
        if g[0] < 0 or np.any(np.diff(g) <= 0) or not np.all(np.isfinite(g)):
            raise ValueError("density grid must increase within [0, inf)")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("density values must be finite and >= 0")
        self.grid = g
        self.values = v
        seg = 0.5 * (v[1:] + v[:-1]) * np.diff(g)
        self._tail_knots = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
        total = float(np.trapezoid(v, g))
        if not math.isclose(total, float(self._tail_knots[0]), rel_tol=1e-9):
            raise ValueError("tail evaluator inconsistent with direct integration")

    @property
    def support_end(self) -> float:
        return float(self.grid[-1])

    def tail(self, h):
        h = np.asarray(h, dtype=np.float64)
        out = np.interp(h, self.grid, self._tail_knots,
                        left=self._tail_knots[0], right=0.0)
        return out if out.ndim else float(out)


def radial_measure_to_json(mu) -> dict:
    if isinstance(mu, PointMasses):
        return {
            "kind": "point-masses",
            "atoms": [[float(l), float(w)] for l, w in zip(mu.locations, mu.weights)],
        }
    if isinstance(mu, LogUniform):
        return {"kind": "log-uniform", "a": mu.a, "b": mu.b}
    if isinstance(mu, RadialDensity):
        return {"kind": "density", "grid": mu.grid.tolist(), "values": mu.values.tolist()}
    raise TypeError(type(mu))


def radial_measure_from_json(obj: dict):
    kind = obj.get("kind")
    if kind == "point-masses":
        return PointMasses([(float(l), float(w)) for l, w in obj["atoms"]])
    if kind == "log-uniform":
        return LogUniform(float(obj["a"]), float(obj["b"]))
    if kind == "density":
        return RadialDensity(obj["grid"], obj["values"])
    raise ValueError(f"unknown radial measure kind {kind!r}")


# --------------------------------------------------------------------------
# jump functionals
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class JumpFunctional:
    """f(v, x) with f(., 0) identically zero; must accept array arguments."""

    evaluator: Callable

    def __post_init__(self):
        probes = np.array([0.25, 0.5, 1.0, 2.0, 7.5])
        vals = np.asarray(self.evaluator(probes, np.zeros_like(probes)), dtype=float)
        if vals.shape != probes.shape or np.any(vals != 0.0):
            raise ValueError("jump functional must vanish at jump size 0")

    def __call__(self, v, x):
        return np.asarray(self.evaluator(np.asarray(v), np.asarray(x)), dtype=float)


# --------------------------------------------------------------------------
# stable rays
# --------------------------------------------------------------------------


def stable_ray(alpha: float, one_sided: bool, grid: TimeGrid, m: int, seed,
               workers: int = 1) -> PathEnsemble:
    """Paths t -> t^(1/alpha) * S with one standardized stable draw per path."""
    if not (0.0 < alpha <= 2.0):
        raise BadStableIndex(f"alpha={alpha} outside (0, 2]")
    if one_sided and not alpha < 1.0:
        raise BadStableIndex("one-sided rays need alpha < 1")
    if m < 1:
        raise ValueError("m must be >= 1")
    seed = as_seed_info(seed)

    def block(lo, hi):
        u = backend.uniforms(
            seed.master_seed, seed.stream_offset + lo, hi - lo, 2, backend.P_STABLE
        )
        if one_sided:
            s = one_sided_stable_from_uniforms(alpha, u[:, 0], u[:, 1])
        else:
            s = symmetric_stable_from_uniforms(alpha, u[:, 0], u[:, 1])
        return s[:, None] * grid.times[None, :] ** (1.0 / alpha)

    return PathEnsemble(grid, run_sharded(block, m, workers), seed)


def stable_ray_sampler(alpha: float, one_sided: bool = False) -> Sampler:
    spec = {"kind": "stable-ray", "alpha": alpha, "one_sided": one_sided}
    return Sampler(
        "stable-ray", spec,
        lambda grid, m, seed, workers: stable_ray(alpha, one_sided, grid, m, seed, workers),
    )


# --------------------------------------------------------------------------
# integration of a base ensemble against a radial measure
# --------------------------------------------------------------------------


def integral_transform(base: PathEnsemble, mu, out_grid: TimeGrid,
                       quad_nodes: int = 2048) -> PathEnsemble:
    """Per path, t -> integral mu(du) X(u t), previous-value evaluation.

    Point masses are evaluated exactly; the continuous forms use midpoint
    quadrature (log-spaced for the du/u measure) with `quad_nodes` nodes.
    """
    u_max = mu.support_end
    if not math.isfinite(u_max):
        raise UnsupportedMeasureSupport("measure support must be bounded")
    t_max = out_grid.horizon
    needed = u_max * t_max
    if needed > base.grid.horizon * (1.0 + 1e-12):
        raise GridCoverage(
            f"base grid ends at {base.grid.horizon}, need {needed}"
        )

    out_t = out_grid.times
    if isinstance(mu, PointMasses):
        q = np.multiply.outer(mu.locations, out_t)  # (k, n_out)
        flat = base.cadlag_at(q.ravel())
        vals = flat.reshape(base.m, *q.shape)
        out_vals = np.einsum("i,mij->mj", mu.weights, vals)
        return PathEnsemble(out_grid, out_vals, base.seed_info)

    if isinstance(mu, LogUniform):
        if mu.a <= 0.0:
            raise UnsupportedMeasureSupport(
                "path transform needs a > 0 for the du/u measure"
            )
        s = np.log(mu.a) + (np.arange(quad_nodes) + 0.5) * (
            np.log(mu.b / mu.a) / quad_nodes
        )
        nodes = np.exp(s)
        weights = np.full(quad_nodes, np.log(mu.b / mu.a) / quad_nodes)
    elif isinstance(mu, RadialDensity):
        sub = max(1, -(-quad_nodes // (mu.grid.size - 1)))
        edges = np.concatenate(
            [np.linspace(mu.grid[i], mu.grid[i + 1], sub + 1)[:-1]
             for i in range(mu.grid.size - 1)] + [[mu.grid[-1]]]
        )
        nodes = 0.5 * (edges[1:] + edges[:-1])
        dens = np.interp(nodes, mu.grid, mu.values)
        weights = dens * np.diff(edges)
    else:
        raise TypeError(type(mu))

    out_vals = np.zeros((base.m, out_t.size))
    for j, t in enumerate(out_t):
        if t == 0.0:
            continue
        sampled = base.cadlag_at(nodes * t)
        out_vals[:, j] = sampled @ weights
    return PathEnsemble(out_grid, out_vals, base.seed_info)


def integral_transform_sampler(base: Sampler, mu, quad_nodes: int = 2048,
                               base_cells: int = 1024) -> Sampler:
    """Sampler producing the transformed process on any requested grid."""

    def fn(grid: TimeGrid, m: int, seed: SeedInfo, workers: int):
        if isinstance(mu, PointMasses):
            # exact pointwise evaluation: only the hit times are ever read
            hits = np.multiply.outer(mu.locations, grid.times).ravel()
            base_grid = TimeGrid.from_times(hits)
        else:
            cover = mu.support_end * grid.horizon
            base_grid = TimeGrid.from_times(
                np.linspace(0.0, max(cover, grid.horizon), base_cells + 1)
            )
        ens = base.sample(base_grid, m, seed, workers)
        return integral_transform(ens, mu, grid, quad_nodes)

    spec = {
        "kind": "integral-transform",
        "base": base.spec,
        "mu": radial_measure_to_json(mu),
        "quad_nodes": quad_nodes,
        "base_cells": base_cells,
    }
    return Sampler("integral-transform", spec, fn)


# --------------------------------------------------------------------------
# jump transforms
# --------------------------------------------------------------------------


def jump_transform(base: PathEnsemble, f: JumpFunctional,
                   out_grid: TimeGrid) -> PathEnsemble:
    """Per path, t -> sum over recorded jumps (s, x) of f(s/t, x); 0 at t = 0."""
    from .errors import JumpsUnavailable

    if not base.has_jumps:
        raise JumpsUnavailable("base ensemble carries no jump records")
    offsets = base.jump_offsets
    times = base.jump_times
    sizes = base.jump_sizes
    out_vals = np.zeros((base.m, len(out_grid)))
    cum_idx = offsets
    for j, t in enumerate(out_grid.times):
        if t == 0.0 or times.size == 0:
            continue
        contrib = f(times / t, sizes)
        csum = np.concatenate([[0.0], np.cumsum(contrib)])
        out_vals[:, j] = csum[cum_idx[1:]] - csum[cum_idx[:-1]]
    return PathEnsemble(out_grid, out_vals, base.seed_info)


# --------------------------------------------------------------------------
# Gaussian moving averages: discretized stochastic integral
# --------------------------------------------------------------------------


def _mesh_edges(kernel, grid: TimeGrid):
    """Integration mesh for sum_k phi(u_k / t) dB(u_k) covering all grid times.

    Bounded-support kernels get a uniform mesh on [0, support_end * t_max]
    with grid multiples snapped to cell edges.  The heavy-tailed kernel gets
    a uniform head plus geometric tail cells out to the truncation point
    implied by quad.trunc_tol (relative tail mass).
    """
    q = kernel.quad
    t_max = grid.horizon
    s_end = kernels.support_end(kernel)
    pos_times = grid.times[grid.times > 0]
    if math.isfinite(s_end):
        snap = np.multiply.outer(pos_times, [s_end]).ravel()
        edges = np.union1d(np.linspace(0.0, s_end * t_max, q.cells + 1), snap)
        return edges
    alpha = kernel.alpha
    # relative tail mass beyond T is (T / t_max)^(1 - 2 alpha)
    ln_r = math.log(q.trunc_tol) / (1.0 - 2.0 * alpha)
    if ln_r > 600.0:
        raise TruncationTooSmall(
            f"tail tolerance {q.trunc_tol} unreachable for alpha={alpha}"
        )
    head_cells = (3 * q.cells) // 4
    tail_cells = q.cells - head_cells
    head_end = 4.0 * t_max
    head = np.union1d(np.linspace(0.0, head_end, head_cells + 1), pos_times)
    tail_end = max(math.exp(ln_r) * t_max, 2.0 * head_end)
    tail = np.geomspace(head_end, tail_end, tail_cells + 1)[1:]
    return np.concatenate([head, tail])


def gaussian_phi_path(kernel, grid: TimeGrid, m: int, seed,
                      workers: int = 1) -> PathEnsemble:
    """Sample the kernel moving average by a discretized Wiener integral.

    One shared increment stream per path drives every output time, so the
    cross-time dependence structure is honored; the value at t = 0 is 0.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    seed = as_seed_info(seed)
    edges = _mesh_edges(kernel, grid)
    widths = np.diff(edges)
    lo_e = edges[:-1]
    hi_e = edges[1:]
    geometric = (lo_e > 0) & (hi_e > 1.01 * lo_e)
    mids = np.where(geometric, np.sqrt(np.maximum(lo_e, 1e-300) * hi_e),
                    0.5 * (lo_e + hi_e))
    n_cells = widths.size

    weight = np.zeros((len(grid), n_cells))
    sqw = np.sqrt(widths)
    for j, t in enumerate(grid.times):
        if t > 0.0:
            weight[j] = kernel.phi(mids / t) * sqw

    chunk = max(16, (1 << 22) // max(n_cells, 1))

    def block(lo, hi):
        parts = []
        for c0 in range(lo, hi, chunk):
            c1 = min(c0 + chunk, hi)
            z = backend.normals(
                seed.master_seed, seed.stream_offset + c0, c1 - c0, n_cells,
                backend.P_PHI_MESH,
            )
            parts.append(z @ weight.T)
        return np.concatenate(parts, axis=0)

    return PathEnsemble(grid, run_sharded(block, m, workers), seed)


# --------------------------------------------------------------------------
# Gaussian moving averages: exact draws from the covariance matrix
# --------------------------------------------------------------------------


def gaussian_exact(kernel, grid: TimeGrid, m: int, seed, workers: int = 1,
                   jitter_scale: float = 1e-10) -> PathEnsemble:
    """Exact multivariate Gaussian draws from the kernel covariance matrix.

    Cross-validation oracle for gaussian_phi_path: same law, independent
    discretization route.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    seed = as_seed_info(seed)
    cov = covariance_matrix(kernel, grid.times)
    w, v = np.linalg.eigh(cov)
    jitter = jitter_scale * max(float(np.trace(cov)), 1e-300)
    if w[0] < -jitter:
        raise NotPositiveSemidefinite(
            f"covariance eigenvalue {w[0]:.3e} below -{jitter:.3e}"
        )
    factor = v * np.sqrt(np.clip(w, 0.0, None))

    def block(lo, hi):
        z = backend.normals(
            seed.master_seed, seed.stream_offset + lo, hi - lo, len(grid),
            backend.P_EXACT_GAUSS,
        )
        return z @ factor.T

    return PathEnsemble(grid, run_sharded(block, m, workers), seed)


def covariance_matrix(kernel, times) -> np.ndarray:
    t = np.asarray(times, dtype=np.float64)
    return kernels.covariance(kernel, t[:, None], t[None, :])


def gaussian_phi_sampler(kernel, mode: str = "integral") -> Sampler:
    if mode not in ("integral", "exact"):
        raise ValueError("mode must be 'integral' or 'exact'")
    fn = gaussian_phi_path if mode == "integral" else gaussian_exact
    spec = {"kind": "gaussian-phi", "phi": kernels.kernel_to_json(kernel), "mode": mode}
    return Sampler(
        "gaussian-phi", spec,
        lambda grid, m, seed, workers: fn(kernel, grid, m, seed, workers),
    )


def sampler_from_json(obj: dict) -> Sampler:
    """Build any construction from its tagged JSON description."""
    from .sampling import besq1_sampler, brownian_sampler, levy_sampler
    from .triplets import triplet_from_json

    kind = obj.get("kind")
    if kind == "brownian":
        return brownian_sampler()
    if kind == "besq1":
        return besq1_sampler()
    if kind == "levy":
        return levy_sampler(triplet_from_json(obj["triplet"]))
    if kind == "stable-ray":
        return stable_ray_sampler(float(obj["alpha"]), bool(obj.get("one_sided", False)))
    if kind == "integral-transform":
        return integral_transform_sampler(
            sampler_from_json(obj["base"]),
            radial_measure_from_json(obj["mu"]),
            quad_nodes=int(obj.get("quad_nodes", 2048)),
            base_cells=int(obj.get("base_cells", 1024)),
        )
    if kind == "gaussian-phi":
        return gaussian_phi_sampler(
            kernels.kernel_from_json(obj["phi"]), obj.get("mode", "integral")
        )
    raise ValueError(f"unknown construction kind {kind!r}")
