"""Seed bookkeeping for reproducible, order-independent path ensembles.

Each sampled path owns one logical stream, keyed by
``(master_seed, stream_offset + path_index)``.  Draws within a stream are
addressed by purpose-namespaced counters (see :mod:`idtlab.backend`), so the
same path is bit-identical no matter how work is sharded over workers.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import backend


@dataclass(frozen=True)
class SeedInfo:
    """Master seed plus the first stream index used by an ensemble."""

    master_seed: int
    stream_offset: int = 0

    def shifted(self, extra_streams: int) -> "SeedInfo":
        return SeedInfo(self.master_seed, self.stream_offset + extra_streams)

    def uniforms(self, m, n, purpose, base=0):
        return backend.uniforms(
            self.master_seed, self.stream_offset, m, n, purpose, base
        )

    def normals(self, m, n, purpose, base=0):
        return backend.normals(
            self.master_seed, self.stream_offset, m, n, purpose, base
        )

    def poisson_counts(self, m, lam, purpose=backend.P_POISSON):
        return backend.poisson_counts(
            self.master_seed, self.stream_offset, m, lam, purpose
        )

    def gamma_block(self, m, n, shape, purpose=backend.P_GAMMA, base=0):
        return backend.gamma_block(
            self.master_seed, self.stream_offset, m, n, shape, purpose, base
        )


def as_seed_info(seed) -> SeedInfo:
    if isinstance(seed, SeedInfo):
        return seed
    return SeedInfo(int(seed), 0)
