"""Hot numeric kernels: numba-jitted versions with a pure-numpy fallback.

Backend selection (checked once at import):

* ``IDTLAB_BACKEND=numpy``  -- force the pure-numpy fallback
* ``IDTLAB_BACKEND=numba``  -- require numba (ImportError if missing)
* unset / ``auto``          -- numba when importable, numpy otherwise

Every kernel exists in both variants.  The integer stream generation is
bit-identical between backends (pure uint64 arithmetic); float outputs agree
to libm rounding.  ``benchmarks/backend_bench.py`` compares the two.

Randomness is counter-based: draw ``j`` of stream ``s`` under master seed
``M`` is ``mix64(key(M, s) + (j + 1) * GOLDEN)`` (a splitmix64-style output
function), so any slice of any stream can be generated independently, in any
order, on any number of workers, with identical results.
"""

from __future__ import annotations

import math
import os

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_KD1 = 0xA24BAED4963EE407
_KD2 = 0x9FB21C651E98DF25
_U64 = 0xFFFFFFFFFFFFFFFF

# counter namespaces: draw counter = (purpose << 56) + k
P_GAUSS = 0
P_POISSON = 1
P_JUMP_TIMES = 2
P_JUMP_SIZES = 3
P_STABLE = 4
P_GAMMA = 5
P_EXACT_GAUSS = 6
P_PHI_MESH = 7

_GAMMA_STRIDE = 192  # counters reserved per Gamma variate (63 attempts + boost)


def stream_key(master_seed: int, stream_index: int) -> int:
    """64-bit key of stream `stream_index` under `master_seed` (python ints)."""
    m = _mix64_py(master_seed & _U64)
    s = _mix64_py((stream_index * _KD1 + _KD2) & _U64)
    return _mix64_py((m ^ s) & _U64)


def _mix64_py(z: int) -> int:
    z &= _U64
    z = ((z ^ (z >> 30)) * _MIX_A) & _U64
    z = ((z ^ (z >> 27)) * _MIX_B) & _U64
    return z ^ (z >> 31)


# ---------------------------------------------------------------------------
# pure-numpy kernels
# ---------------------------------------------------------------------------


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_A)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_B)
    return z ^ (z >> np.uint64(31))


def _keys_np(master_seed: int, offset: int, m: int) -> np.ndarray:
    idx = np.arange(offset, offset + m, dtype=np.uint64)
    mk = np.uint64(_mix64_py(master_seed & _U64))
    s = _mix64_np(idx * np.uint64(_KD1) + np.uint64(_KD2))
    return _mix64_np(mk ^ s)


def raw_block_np(master_seed, offset, m, n, purpose, base=0):
    """(m, n) uint64 block: stream offset+i, counters purpose::base+j."""
    keys = _keys_np(master_seed, offset, m)
    ctr = (np.uint64(purpose) << np.uint64(56)) + np.arange(
        base, base + n, dtype=np.uint64
    )
    state = keys[:, None] + (ctr[None, :] + np.uint64(1)) * np.uint64(GOLDEN)
    return _mix64_np(state)


def _to_unit(bits: np.ndarray) -> np.ndarray:
    # (0, 1) strictly: exact float arithmetic, identical in both backends
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def uniforms_np(master_seed, offset, m, n, purpose, base=0):
    return _to_unit(raw_block_np(master_seed, offset, m, n, purpose, base))


def normals_np(master_seed, offset, m, n, purpose, base=0):
    # Box-Muller pairs: normals (2p, 2p+1) come from uniforms (2p, 2p+1)
    pairs = (n + 1) // 2
    u = uniforms_np(master_seed, offset, m, 2 * pairs, purpose, base)
    r = np.sqrt(-2.0 * np.log(u[:, 0::2]))
    theta = 2.0 * np.pi * u[:, 1::2]
    out = np.empty((m, 2 * pairs))
    out[:, 0::2] = r * np.cos(theta)
    out[:, 1::2] = r * np.sin(theta)
    return out[:, :n]


def poisson_counts_np(master_seed, offset, m, lam, purpose=P_POISSON):
    if lam < 0:
        raise ValueError("poisson rate must be >= 0")
    if lam == 0.0:
        return np.zeros(m, dtype=np.int64)
    if lam > 500.0:
        raise ValueError("poisson inversion limited to rate*horizon <= 500")
    kmax = int(lam + 12.0 * math.sqrt(lam) + 20.0)
    pmf = np.empty(kmax + 1)
    pmf[0] = math.exp(-lam)
    for k in range(1, kmax + 1):
        pmf[k] = pmf[k - 1] * (lam / k)
    cdf = np.cumsum(pmf)
    u = uniforms_np(master_seed, offset, m, 1, purpose)[:, 0]
    return np.searchsorted(cdf, u, side="left").astype(np.int64)


def jump_prefix_np(times, sizes, offsets, queries):
    """Per path, sum of jump sizes with jump time <= query time.

    times/sizes are flattened over paths, offsets has length m+1.
    Returns (m, len(queries)).
    """
    m = len(offsets) - 1
    q = len(queries)
    out = np.zeros((m, q))
    for i in range(m):
        lo, hi = offsets[i], offsets[i + 1]
        if hi == lo:
            continue
        cum = np.cumsum(sizes[lo:hi])
        idx = np.searchsorted(times[lo:hi], queries, side="right")
        out[i] = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
    return out


def gamma_block_np(master_seed, offset, m, n, shape, purpose=P_GAMMA, base=0):
    """(m, n) Gamma(shape, 1) variates, Marsaglia-Tsang with boost for shape<1."""
    if shape <= 0:
        raise ValueError("gamma shape must be > 0")
    boosted = shape < 1.0
    a = shape + 1.0 if boosted else shape
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty((m, n))
    done = np.zeros((m, n), dtype=bool)
    ent = np.arange(base, base + n, dtype=np.int64) * _GAMMA_STRIDE
    for attempt in range(63):
        k0 = ent + 3 * attempt
        u1 = np.concatenate(
            [uniforms_np(master_seed, offset, m, 1, purpose, int(k)) for k in k0],
            axis=1,
        )
        u2 = np.concatenate(
            [uniforms_np(master_seed, offset, m, 1, purpose, int(k) + 1) for k in k0],
            axis=1,
        )
        u3 = np.concatenate(
            [uniforms_np(master_seed, offset, m, 1, purpose, int(k) + 2) for k in k0],
            axis=1,
        )
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
        v = (1.0 + c * z) ** 3
        ok = (v > 0.0) & (
            np.log(u3) < 0.5 * z * z + d - d * v + d * np.where(v > 0, np.log(np.where(v > 0, v, 1.0)), 0.0)
        )
        take = ok & ~done
        out[take] = d * v[take]
        done |= ok
        if done.all():
            break
    if not done.all():  # pragma: no cover - probability ~ 0
        out[~done] = d
    if boosted:
        ub = np.concatenate(
            [
                uniforms_np(master_seed, offset, m, 1, purpose, int(e) + 190)
                for e in ent
            ],
            axis=1,
        )
        out *= ub ** (1.0 / shape)
    return out


_NUMPY_IMPL = {
    "raw_block": raw_block_np,
    "uniforms": uniforms_np,
    "normals": normals_np,
    "poisson_counts": poisson_counts_np,
    "jump_prefix": jump_prefix_np,
    "gamma_block": gamma_block_np,
}


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

_ENV = os.environ.get("IDTLAB_BACKEND", "auto").lower()
_HAVE_NUMBA = False
if _ENV in ("auto", "numba"):
    try:
        import numba
        from numba import njit, prange

        _HAVE_NUMBA = True
    except ImportError:
        if _ENV == "numba":
            raise


if _HAVE_NUMBA:

    @njit(cache=True, inline="always")
    def _mix64(z):
        z = np.uint64(z)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_A)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_B)
        return z ^ (z >> np.uint64(31))

    @njit(cache=True, inline="always")
    def _key(master, stream):
        mk = _mix64(np.uint64(master))
        s = _mix64(np.uint64(stream) * np.uint64(_KD1) + np.uint64(_KD2))
        return _mix64(mk ^ s)

    @njit(cache=True, inline="always")
    def _draw(key, ctr):
        return _mix64(key + (np.uint64(ctr) + np.uint64(1)) * np.uint64(GOLDEN))

    @njit(cache=True, inline="always")
    def _unit(bits):
        return (np.float64(bits >> np.uint64(11)) + 0.5) * 2.0**-53

    @njit(cache=True, parallel=True)
    def _raw_block_nb(master, offset, m, n, purpose, base):
        out = np.empty((m, n), dtype=np.uint64)
        hi = np.uint64(purpose) << np.uint64(56)
        for i in prange(m):
            key = _key(master, offset + i)
            for j in range(n):
                out[i, j] = _draw(key, hi + np.uint64(base + j))
        return out

    @njit(cache=True, parallel=True)
    def _uniforms_nb(master, offset, m, n, purpose, base):
        out = np.empty((m, n))
        hi = np.uint64(purpose) << np.uint64(56)
        for i in prange(m):
            key = _key(master, offset + i)
            for j in range(n):
                out[i, j] = _unit(_draw(key, hi + np.uint64(base + j)))
        return out

    @njit(cache=True, parallel=True)
    def _normals_nb(master, offset, m, n, purpose, base):
        out = np.empty((m, n))
        hi = np.uint64(purpose) << np.uint64(56)
        pairs = (n + 1) // 2
        for i in prange(m):
            key = _key(master, offset + i)
            for p in range(pairs):
                u1 = _unit(_draw(key, hi + np.uint64(base + 2 * p)))
                u2 = _unit(_draw(key, hi + np.uint64(base + 2 * p + 1)))
                r = math.sqrt(-2.0 * math.log(u1))
                theta = 2.0 * math.pi * u2
                out[i, 2 * p] = r * math.cos(theta)
                if 2 * p + 1 < n:
                    out[i, 2 * p + 1] = r * math.sin(theta)
        return out

    @njit(cache=True, parallel=True)
    def _poisson_counts_nb(master, offset, m, cdf, purpose):
        out = np.empty(m, dtype=np.int64)
        hi = np.uint64(purpose) << np.uint64(56)
        kmax = len(cdf) - 1
        for i in prange(m):
            key = _key(master, offset + i)
            u = _unit(_draw(key, hi))
            k = 0
            while k < kmax and cdf[k] < u:
                k += 1
            out[i] = k
        return out

    @njit(cache=True, parallel=True)
    def _jump_prefix_nb(times, sizes, offsets, queries):
        m = len(offsets) - 1
        q = len(queries)
        out = np.zeros((m, q))
        for i in prange(m):
            lo, hi = offsets[i], offsets[i + 1]
            for jq in range(q):
                t = queries[jq]
                acc = 0.0
                for k in range(lo, hi):
                    if times[k] <= t:
                        acc += sizes[k]
                    else:
                        break
                out[i, jq] = acc
        return out

    @njit(cache=True, parallel=True)
    def _gamma_block_nb(master, offset, m, n, shape, purpose, base):
        boosted = shape < 1.0
        a = shape + 1.0 if boosted else shape
        d = a - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        out = np.empty((m, n))
        hi = np.uint64(purpose) << np.uint64(56)
        for i in prange(m):
            key = _key(master, offset + i)
            for e in range(n):
                ctr0 = np.uint64((base + e) * _GAMMA_STRIDE)
                val = d
                for attempt in range(63):
                    ca = ctr0 + np.uint64(3 * attempt)
                    u1 = _unit(_draw(key, hi + ca))
                    u2 = _unit(_draw(key, hi + ca + np.uint64(1)))
                    u3 = _unit(_draw(key, hi + ca + np.uint64(2)))
                    z = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
                    v = (1.0 + c * z) ** 3
                    if v <= 0.0:
                        continue
                    if math.log(u3) < 0.5 * z * z + d - d * v + d * math.log(v):
                        val = d * v
                        break
                if boosted:
                    ub = _unit(_draw(key, hi + ctr0 + np.uint64(190)))
                    val *= ub ** (1.0 / shape)
                out[i, e] = val
        return out

    def raw_block_nb(master_seed, offset, m, n, purpose, base=0):
        return _raw_block_nb(
            np.uint64(master_seed & _U64), np.uint64(offset), m, n, purpose, base
        )

    def uniforms_nb(master_seed, offset, m, n, purpose, base=0):
        return _uniforms_nb(
            np.uint64(master_seed & _U64), np.uint64(offset), m, n, purpose, base
        )

    def normals_nb(master_seed, offset, m, n, purpose, base=0):
        return _normals_nb(
            np.uint64(master_seed & _U64), np.uint64(offset), m, n, purpose, base
        )

    def poisson_counts_nb(master_seed, offset, m, lam, purpose=P_POISSON):
        if lam < 0:
            raise ValueError("poisson rate must be >= 0")
        if lam == 0.0:
            return np.zeros(m, dtype=np.int64)
        if lam > 500.0:
            raise ValueError("poisson inversion limited to rate*horizon <= 500")
        kmax = int(lam + 12.0 * math.sqrt(lam) + 20.0)
        pmf = np.empty(kmax + 1)
        pmf[0] = math.exp(-lam)
        for k in range(1, kmax + 1):
            pmf[k] = pmf[k - 1] * (lam / k)
        cdf = np.cumsum(pmf)
        return _poisson_counts_nb(
            np.uint64(master_seed & _U64), np.uint64(offset), m, cdf, purpose
        )

    def jump_prefix_nb(times, sizes, offsets, queries):
        return _jump_prefix_nb(
            np.ascontiguousarray(times, dtype=np.float64),
            np.ascontiguousarray(sizes, dtype=np.float64),
            np.ascontiguousarray(offsets, dtype=np.int64),
            np.ascontiguousarray(queries, dtype=np.float64),
        )

    def gamma_block_nb(master_seed, offset, m, n, shape, purpose=P_GAMMA, base=0):
        if shape <= 0:
            raise ValueError("gamma shape must be > 0")
        return _gamma_block_nb(
            np.uint64(master_seed & _U64),
            np.uint64(offset),
            m,
            n,
            float(shape),
            purpose,
            base,
        )

    _NUMBA_IMPL = {
        "raw_block": raw_block_nb,
        "uniforms": uniforms_nb,
        "normals": normals_nb,
        "poisson_counts": poisson_counts_nb,
        "jump_prefix": jump_prefix_nb,
        "gamma_block": gamma_block_nb,
    }
else:
    _NUMBA_IMPL = None


USING_NUMBA = _HAVE_NUMBA and _ENV != "numpy"
_ACTIVE = _NUMBA_IMPL if USING_NUMBA else _NUMPY_IMPL

raw_block = _ACTIVE["raw_block"]
uniforms = _ACTIVE["uniforms"]
normals = _ACTIVE["normals"]
poisson_counts = _ACTIVE["poisson_counts"]
jump_prefix = _ACTIVE["jump_prefix"]
gamma_block = _ACTIVE["gamma_block"]


def backend_name() -> str:
    return "numba" if USING_NUMBA else "numpy"


def implementations():
    """Both kernel tables, for benchmarks and equivalence tests."""
    out = {"numpy": _NUMPY_IMPL}
    if _NUMBA_IMPL is not None:
        out["numba"] = _NUMBA_IMPL
    return out
