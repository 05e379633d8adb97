"""Seeded path samplers for the parametric triplet families.

All samplers draw from per-path counter streams, so an ensemble is a pure
function of (parameters, grid, m, seed) and is bit-identical at any worker
count.  Stable variates use the Chambers-Mallows-Stuck transform (symmetric
case) and Kanter's representation (one-sided case), driven by the same
uniform streams.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import backend
from .errors import NotSamplable
from .paths import PathEnsemble, TimeGrid
from .rng import SeedInfo, as_seed_info
from .triplets import (
    BROWNIAN,
    CompoundPoisson,
    GammaProcess,
    LevyTriplet,
    StableSubordinator,
    SymmetricStable,
    TabulatedDensity,
    triplet_to_json,
)


# --------------------------------------------------------------------------
# uniform -> stable variate transforms (shared by both backends)
# --------------------------------------------------------------------------


def symmetric_stable_from_uniforms(alpha: float, u_phi, u_w):
    """Standard symmetric stable draws, cf exp(-|z|^alpha)."""
    phi = np.pi * (np.asarray(u_phi) - 0.5)
    if alpha == 1.0:
        return np.tan(phi)
    w = -np.log(np.asarray(u_w))
    if alpha == 2.0:
        return 2.0 * np.sin(phi) * np.sqrt(w)
    return (
        np.sin(alpha * phi)
        / np.cos(phi) ** (1.0 / alpha)
        * (np.cos((1.0 - alpha) * phi) / w) ** ((1.0 - alpha) / alpha)
    )


def one_sided_stable_from_uniforms(alpha: float, u_xi, u_w):
    """Positive stable draws with E[exp(-lam S)] = exp(-lam^alpha) (Kanter)."""
    xi = np.pi * np.asarray(u_xi)
    w = -np.log(np.asarray(u_w))
    return (
        np.sin(alpha * xi)
        / np.sin(xi) ** (1.0 / alpha)
        * (np.sin((1.0 - alpha) * xi) / w) ** ((1.0 - alpha) / alpha)
    )


# --------------------------------------------------------------------------
# worker sharding: identical output for any worker count
# --------------------------------------------------------------------------


def _shard_ranges(m: int, workers: int):
    step = -(-m // workers)
    return [(lo, min(lo + step, m)) for lo in range(0, m, step)]


def run_sharded(fn: Callable[[int, int], np.ndarray], m: int, workers: int):
    """Assemble fn(lo, hi) blocks over path slices; order-independent."""
    if workers <= 1 or m < 2 * workers:
        return fn(0, m)
    parts = {}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = {
            pool.submit(fn, lo, hi): (lo, hi) for lo, hi in _shard_ranges(m, workers)
        }
        for fut, rng in futs.items():
            parts[rng] = fut.result()
    return np.concatenate([parts[rng] for rng in sorted(parts)], axis=0)


# --------------------------------------------------------------------------
# increment builders (each generates paths [lo, hi) of an m-path ensemble)
# --------------------------------------------------------------------------


def _gaussian_drift_values(triplet, grid, seed: SeedInfo, lo, hi):
    dt = np.diff(grid.times)
    n = dt.size
    mm = hi - lo
    vals = np.zeros((mm, n + 1))
    if triplet.gaussian_var > 0.0:
        z = backend.normals(
            seed.master_seed, seed.stream_offset + lo, mm, n, backend.P_GAUSS
        )
        incr = z * np.sqrt(triplet.gaussian_var * dt)
    else:
        incr = np.zeros((mm, n))
    if triplet.drift != 0.0:
        incr = incr + triplet.drift * dt
    np.cumsum(incr, axis=1, out=vals[:, 1:])
    return vals


def _stable_increment_values(jp, grid, seed: SeedInfo, lo, hi):
    dt = np.diff(grid.times)
    n = dt.size
    mm = hi - lo
    u = backend.uniforms(
        seed.master_seed, seed.stream_offset + lo, mm, 2 * n, backend.P_STABLE
    )
    u1, u2 = u[:, 0::2], u[:, 1::2]
    if isinstance(jp, SymmetricStable):
        s = symmetric_stable_from_uniforms(jp.alpha, u1, u2)
    else:
        s = one_sided_stable_from_uniforms(jp.alpha, u1, u2)
    incr = (jp.scale * dt) ** (1.0 / jp.alpha) * s
    vals = np.zeros((mm, n + 1))
    np.cumsum(incr, axis=1, out=vals[:, 1:])
    return vals


def _gamma_increment_values(jp: GammaProcess, grid, seed: SeedInfo, lo, hi):
    dt = np.diff(grid.times)
    n = dt.size
    mm = hi - lo
    incr = np.empty((mm, n))
    for k in range(n):
        incr[:, k] = jp.scale * backend.gamma_block(
            seed.master_seed,
            seed.stream_offset + lo,
            mm,
            1,
            jp.shape_rate * dt[k],
            backend.P_GAMMA,
            base=k,
        )[:, 0]
    vals = np.zeros((mm, n + 1))
    np.cumsum(incr, axis=1, out=vals[:, 1:])
    return vals


def _compound_poisson_jumps(jp: CompoundPoisson, horizon, m, seed: SeedInfo):
    """Time-sorted jump records for all m paths, flattened with offsets."""
    counts = backend.poisson_counts(
        seed.master_seed, seed.stream_offset, m, jp.rate * horizon
    )
    offsets = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    total = int(offsets[-1])
    if total == 0:
        return offsets, np.empty(0), np.empty(0)
    nmax = int(counts.max())
    ut = backend.uniforms(
        seed.master_seed, seed.stream_offset, m, nmax, backend.P_JUMP_TIMES
    )
    us = backend.uniforms(
        seed.master_seed, seed.stream_offset, m, nmax, backend.P_JUMP_SIZES
    )
    in_row = np.arange(nmax)[None, :] < counts[:, None]
    order = np.argsort(np.where(in_row, ut, np.inf), axis=1, kind="stable")
    ut_sorted = np.take_along_axis(ut, order, axis=1)
    us_sorted = np.take_along_axis(us, order, axis=1)
    times = horizon * ut_sorted[in_row]
    sizes = np.asarray(jp.jump_dist.quantile(us_sorted[in_row]), dtype=np.float64)
    return offsets, times, sizes


# --------------------------------------------------------------------------
# public samplers
# --------------------------------------------------------------------------


def sample_levy(triplet: LevyTriplet, grid: TimeGrid, m: int, seed, workers: int = 1):
    """m independent paths of the triplet's process on the grid."""
    if m < 1:
        raise ValueError("m must be >= 1")
    seed = as_seed_info(seed)
    jp = triplet.jump_part
    if isinstance(jp, TabulatedDensity):
        raise NotSamplable("tabulated jump densities are analytic-only")

    offsets = times = sizes = None
    if isinstance(jp, CompoundPoisson):
        offsets, times, sizes = _compound_poisson_jumps(jp, grid.horizon, m, seed)

    def block(lo, hi):
        vals = _gaussian_drift_values(triplet, grid, seed, lo, hi)
        if isinstance(jp, (SymmetricStable, StableSubordinator)):
            vals += _stable_increment_values(jp, grid, seed, lo, hi)
        elif isinstance(jp, GammaProcess):
            vals += _gamma_increment_values(jp, grid, seed, lo, hi)
        elif isinstance(jp, CompoundPoisson):
            o0 = offsets[lo]
            vals += backend.jump_prefix(
                times[o0:offsets[hi]],
                sizes[o0:offsets[hi]],
                offsets[lo:hi + 1] - o0,
                grid.times,
            )
        return vals

    values = run_sharded(block, m, workers)
    return PathEnsemble(
        grid, values, seed,
        jump_offsets=offsets, jump_times=times, jump_sizes=sizes,
    )


def sample_besq1(grid: TimeGrid, m: int, seed, workers: int = 1):
    """Squared one-dimensional Brownian paths (the non-divisible-in-time control)."""
    ens = sample_levy(BROWNIAN, grid, m, as_seed_info(seed), workers)
    return PathEnsemble(grid, ens.values**2, ens.seed_info)


# --------------------------------------------------------------------------
# sampler handles: named, serializable construction recipes
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Sampler:
    """A construction that can produce ensembles on any requested grid."""

    name: str
    spec: dict
    fn: Callable[[TimeGrid, int, SeedInfo, int], PathEnsemble]

    def sample(self, grid: TimeGrid, m: int, seed, workers: int = 1) -> PathEnsemble:
        return self.fn(grid, m, as_seed_info(seed), workers)


def levy_sampler(triplet: LevyTriplet) -> Sampler:
    spec = {"kind": "levy", "triplet": triplet_to_json(triplet)}
    return Sampler(
        "levy", spec,
        lambda grid, m, seed, workers: sample_levy(triplet, grid, m, seed, workers),
    )


def brownian_sampler() -> Sampler:
    return Sampler(
        "brownian", {"kind": "brownian"},
        lambda grid, m, seed, workers: sample_levy(BROWNIAN, grid, m, seed, workers),
    )


def besq1_sampler() -> Sampler:
    return Sampler(
        "besq1", {"kind": "besq1"},
        lambda grid, m, seed, workers: sample_besq1(grid, m, seed, workers),
    )
