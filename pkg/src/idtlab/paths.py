"""Time grids, sample paths and path ensembles."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import GridMismatch, HorizonExceeded
from .rng import SeedInfo


class TimeGrid:
    """Strictly increasing finite grid starting at 0."""

    def __init__(self, times):
        t = np.asarray(times, dtype=np.float64)
        if t.ndim != 1 or t.size < 1:
            raise ValueError("grid must be a 1-d sequence")
        if not np.all(np.isfinite(t)):
            raise ValueError("grid times must be finite")
        if t[0] != 0.0:
            raise ValueError("grid must start at 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("grid times must be strictly increasing")
        self.times = t
        self.times.setflags(write=False)

    def __len__(self):
        return self.times.size

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def indices_of(self, query) -> np.ndarray:
        """Exact-membership indices; GridMismatch if any time is absent."""
        q = np.atleast_1d(np.asarray(query, dtype=np.float64))
        idx = np.searchsorted(self.times, q)
        ok = (idx < self.times.size) & np.isclose(
            self.times[np.minimum(idx, self.times.size - 1)], q, rtol=1e-12, atol=1e-12
        )
        if not ok.all():
            bad = q[~ok]
            raise GridMismatch(f"times not on grid: {bad.tolist()}")
        return idx

    @classmethod
    def from_times(cls, times, include_zero=True) -> "TimeGrid":
        t = np.unique(np.asarray(times, dtype=np.float64))
        if include_zero and (t.size == 0 or t[0] != 0.0):
            t = np.concatenate([[0.0], t])
        return cls(t)


def cadlag_indices(grid_times: np.ndarray, query: np.ndarray, extend: bool):
    """Previous-value indices of `query` in `grid_times`; -1 marks t < grid start."""
    idx = np.searchsorted(grid_times, query, side="right") - 1
    beyond = query > grid_times[-1]
    if beyond.any() and not extend:
        raise HorizonExceeded(
            f"evaluation at t={float(query[beyond][0])} beyond horizon "
            f"{float(grid_times[-1])}"
        )
    return idx


@dataclass
class SamplePath:
    """One path: values on a grid, optional explicit jumps, step evaluation."""

    times: np.ndarray
    values: np.ndarray
    jumps: Optional[list] = None  # list of (time, size)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.times.size != self.values.size:
            raise ValueError("values length must match grid length")

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def eval(self, query, extend=False):
        """Cadlag (previous-value) evaluation at `query` times."""
        q = np.atleast_1d(np.asarray(query, dtype=np.float64))
        idx = cadlag_indices(self.times, q, extend)
        out = np.where(idx >= 0, self.values[np.maximum(idx, 0)], 0.0)
        return out if np.ndim(query) else float(out[0])

    def rescaled(self, factor: float) -> "SamplePath":
        """The path t -> y(t / factor): breakpoints move to factor * times."""
        jumps = None
        if self.jumps is not None:
            jumps = [(t * factor, x) for (t, x) in self.jumps]
        return SamplePath(self.times * factor, self.values.copy(), jumps)


class PathEnsemble:
    """m paths on one shared grid, reproducible from seed_info alone."""

    def __init__(self, grid: TimeGrid, values: np.ndarray, seed_info: SeedInfo,
                 jump_offsets=None, jump_times=None, jump_sizes=None):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != len(grid):
            raise ValueError("values must be (m, len(grid))")
        self.grid = grid
        self.values = values
        self.seed_info = seed_info
        self.jump_offsets = jump_offsets
        self.jump_times = jump_times
        self.jump_sizes = jump_sizes

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def has_jumps(self) -> bool:
        return self.jump_offsets is not None

    def values_at(self, times) -> np.ndarray:
        """(m, k) values at exact grid members."""
        idx = self.grid.indices_of(times)
        return self.values[:, idx]

    def cadlag_at(self, query, extend=False) -> np.ndarray:
        """(m, q) previous-value evaluation at arbitrary times >= 0."""
        q = np.atleast_1d(np.asarray(query, dtype=np.float64))
        idx = cadlag_indices(self.grid.times, q, extend)
        out = self.values[:, np.maximum(idx, 0)]
        if (idx < 0).any():
            out = np.where(idx[None, :] >= 0, out, 0.0)
        return out

    def path(self, i: int) -> SamplePath:
        jumps = None
        if self.has_jumps:
            lo, hi = self.jump_offsets[i], self.jump_offsets[i + 1]
            jumps = list(zip(self.jump_times[lo:hi], self.jump_sizes[lo:hi]))
        return SamplePath(self.grid.times, self.values[i], jumps)

    def jump_count(self, i: int) -> int:
        if not self.has_jumps:
            return 0
        return int(self.jump_offsets[i + 1] - self.jump_offsets[i])

    def to_csv(self, fh) -> None:
        """`path_id,time,value` rows, 17-significant-digit floats."""
        fh.write("path_id,time,value\n")
        t = self.grid.times
        for i in range(self.m):
            row = self.values[i]
            for j in range(t.size):
                fh.write(f"{i},{t[j]:.17g},{row[j]:.17g}\n")
