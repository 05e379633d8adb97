"""Parametric descriptions of processes with stationary independent increments.

A triplet is (drift, gaussian variance per unit time, jump part); the jump
part is one of a small set of parametric families plus an analytic-only
tabulated density.  ``char_exponent`` evaluates psi with
E[exp(i z X_t)] = exp(t psi(z)); the parametric families use closed forms,
the tabulated density is integrated numerically with compensation of small
jumps at |x| <= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import NonIntegrableJumpDensity


# --------------------------------------------------------------------------
# jump size distributions for the compound Poisson family
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PointMass:
    x0: float

    def __post_init__(self):
        if not math.isfinite(self.x0) or self.x0 == 0.0:
            raise ValueError("point mass location must be finite and nonzero")

    def cf(self, z):
        return np.exp(1j * np.asarray(z) * self.x0)

    def quantile(self, u):
        return np.full_like(np.asarray(u, dtype=np.float64), self.x0)


@dataclass(frozen=True)
class Exponential:
    mean: float

    def __post_init__(self):
        if not (self.mean > 0 and math.isfinite(self.mean)):
            raise ValueError("exponential mean must be positive and finite")

    def cf(self, z):
        return 1.0 / (1.0 - 1j * np.asarray(z) * self.mean)

    def quantile(self, u):
        return -self.mean * np.log1p(-np.asarray(u))


@dataclass(frozen=True)
class Uniform:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise ValueError("uniform bounds must be finite with a < b")

    def cf(self, z):
        z = np.asarray(z, dtype=np.float64)
        out = np.ones(np.shape(z), dtype=np.complex128)
        nz = z != 0
        zz = z[nz] if z.ndim else z
        val = (np.exp(1j * zz * self.b) - np.exp(1j * zz * self.a)) / (
            1j * zz * (self.b - self.a)
        )
        if z.ndim:
            out[nz] = val
            return out
        return val if z != 0 else 1.0 + 0j

    def quantile(self, u):
        return self.a + (self.b - self.a) * np.asarray(u)


@dataclass(frozen=True)
class TabulatedQuantile:
    grid: tuple  # probabilities in [0, 1]
    values: tuple

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if g.ndim != 1 or g.size < 2 or g.size != v.size:
            raise ValueError("quantile table needs matching 1-d grid and values")
        if np.any(np.diff(g) <= 0) or g[0] < 0 or g[-1] > 1:
            raise ValueError("quantile grid must increase within [0, 1]")
        if not np.all(np.isfinite(v)):
            raise ValueError("quantile values must be finite")
        if np.any((v[:-1] == 0.0) & (v[1:] == 0.0)):
            raise ValueError("jump distribution must not put mass at 0")

    def cf(self, z):
        u = np.linspace(0.0, 1.0, 2049)
        q = np.interp(u, self.grid, self.values)
        z = np.asarray(z, dtype=np.float64)
        vals = np.trapezoid(np.exp(1j * np.multiply.outer(z, q)), u, axis=-1)
        return vals if z.ndim else complex(vals)

    def quantile(self, u):
        return np.interp(np.asarray(u), self.grid, self.values)


JumpDist = Union[PointMass, Exponential, Uniform, TabulatedQuantile]


# --------------------------------------------------------------------------
# jump parts
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CompoundPoisson:
    rate: float
    jump_dist: JumpDist

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError("compound Poisson rate must be positive")


@dataclass(frozen=True)
class StableSubordinator:
    """One-sided stable jumps: E[exp(-lam X_t)] = exp(-t scale lam^alpha)."""

    alpha: float
    scale: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("subordinator index must lie in (0, 1)")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("scale must be positive")


@dataclass(frozen=True)
class SymmetricStable:
    """Symmetric stable jumps: E[exp(i z X_t)] = exp(-t scale |z|^alpha)."""

    alpha: float
    scale: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise ValueError("symmetric stable index must lie in (0, 2)")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("scale must be positive")


@dataclass(frozen=True)
class GammaProcess:
    """Gamma subordinator: increments over dt are Gamma(shape_rate*dt, scale)."""

    shape_rate: float
    scale: float

    def __post_init__(self):
        if not (self.shape_rate > 0 and self.scale > 0):
            raise ValueError("gamma parameters must be positive")


class TabulatedDensity:
    """Jump intensity given as a nonnegative density on a finite grid.

    Analytic-only: usable by char_exponent, not by the samplers.  The
    min(1, x^2) integrability check is run at construction, including a
    log-log slope estimate toward 0 to catch non-integrable blowup.
    """

    def __init__(self, grid, values):
        g = np.asarray(grid, dtype=np.float64)
        v = np.asarray(values, dtype=np.float64)
        if g.ndim != 1 or g.size < 3 or g.size != v.size:
            raise ValueError("density table needs matching 1-d grid and values")
        if np.any(np.diff(g) <= 0):
            raise ValueError("density grid must be strictly increasing")
        if np.any(g == 0.0):
            raise ValueError("density grid must exclude 0")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise NonIntegrableJumpDensity("density values must be finite and >= 0")
        check = np.trapezoid(np.minimum(1.0, g**2) * v, g)
        if not np.isfinite(check):
            raise NonIntegrableJumpDensity("min(1, x^2) integral is not finite")
        self._slope_check(g, v)
        self.grid = g
        self.values = v

    @staticmethod
    def _slope_check(g, v):
        # blowup toward 0 faster than |x|^-3 makes x^2 * density non-integrable
        near = np.abs(g) < 0.5
        for sign in (g > 0, g < 0):
            sel = near & sign & (v > 0)
            if sel.sum() >= 3:
                x = np.log(np.abs(g[sel][:3]))
                y = np.log(v[sel][:3])
                slope = np.polyfit(x, y, 1)[0]
                if (g[sel][0] > 0 and slope <= -3.0) or (
                    g[sel][0] < 0 and slope >= 3.0
                ):
                    raise NonIntegrableJumpDensity(
                        "density grows like |x|^-3 or worse toward 0"
                    )


JumpPart = Union[
    CompoundPoisson, StableSubordinator, SymmetricStable, GammaProcess,
    TabulatedDensity,
]


@dataclass(frozen=True)
class LevyTriplet:
    drift: float = 0.0
    gaussian_var: float = 0.0
    jump_part: Optional[JumpPart] = None

    def __post_init__(self):
        if not math.isfinite(self.drift):
            raise ValueError("drift must be finite")
        if not (self.gaussian_var >= 0 and math.isfinite(self.gaussian_var)):
            raise ValueError("gaussian variance must be finite and >= 0")


BROWNIAN = LevyTriplet(drift=0.0, gaussian_var=1.0, jump_part=None)


# --------------------------------------------------------------------------
# characteristic exponent
# --------------------------------------------------------------------------


def char_exponent(triplet: LevyTriplet, z):
    """psi(z) with E[exp(i z X_t)] = exp(t psi(z)); vectorized over z."""
    z = np.asarray(z, dtype=np.float64)
    psi = 1j * triplet.drift * z - 0.5 * triplet.gaussian_var * z**2
    jp = triplet.jump_part
    if jp is None:
        pass
    elif isinstance(jp, CompoundPoisson):
        psi = psi + jp.rate * (jp.jump_dist.cf(z) - 1.0)
    elif isinstance(jp, StableSubordinator):
        a = jp.alpha
        mag = jp.scale * np.abs(z) ** a
        psi = psi - mag * math.cos(math.pi * a / 2.0) + 1j * np.sign(z) * mag * math.sin(
            math.pi * a / 2.0
        )
    elif isinstance(jp, SymmetricStable):
        psi = psi - jp.scale * np.abs(z) ** jp.alpha
    elif isinstance(jp, GammaProcess):
        psi = psi - jp.shape_rate * np.log(1.0 - 1j * z * jp.scale)
    elif isinstance(jp, TabulatedDensity):
        x = jp.grid
        comp = np.where(np.abs(x) <= 1.0, 1j * np.multiply.outer(z, x), 0.0)
        integrand = (np.exp(1j * np.multiply.outer(z, x)) - 1.0 - comp) * jp.values
        val = np.trapezoid(integrand, x, axis=-1)
        if not np.all(np.isfinite(val)):
            raise NonIntegrableJumpDensity("tabulated jump integral diverged")
        psi = psi + val
    else:  # pragma: no cover
        raise TypeError(f"unknown jump part {type(jp)!r}")
    return psi if z.ndim else complex(psi)


def joint_char_value(triplet: LevyTriplet, times, probe):
    """E[exp(i sum_j probe_j X_{t_j})] for ordered times, one probe vector."""
    t = np.asarray(times, dtype=np.float64)
    zv = np.asarray(probe, dtype=np.float64)
    if t.size != zv.size:
        raise ValueError("probe dimension must match number of times")
    order = np.argsort(t)
    t, zv = t[order], zv[order]
    tails = np.cumsum(zv[::-1])[::-1]  # sum of probe components at times >= t_j
    dt = np.diff(np.concatenate([[0.0], t]))
    return complex(np.exp(np.sum(dt * char_exponent(triplet, tails))))


# --------------------------------------------------------------------------
# JSON serialization (shared with the CLI config schema)
# --------------------------------------------------------------------------

_JUMP_DIST_KINDS = {
    "point-mass": PointMass,
    "exponential": Exponential,
    "uniform": Uniform,
    "tabulated-quantile": TabulatedQuantile,
}


def jump_dist_to_json(d: JumpDist) -> dict:
    if isinstance(d, PointMass):
        return {"kind": "point-mass", "x0": d.x0}
    if isinstance(d, Exponential):
        return {"kind": "exponential", "mean": d.mean}
    if isinstance(d, Uniform):
        return {"kind": "uniform", "a": d.a, "b": d.b}
    if isinstance(d, TabulatedQuantile):
        return {
            "kind": "tabulated-quantile",
            "grid": list(d.grid),
            "values": list(d.values),
        }
    raise TypeError(type(d))


def jump_dist_from_json(obj: dict) -> JumpDist:
    kind = obj.get("kind")
    if kind == "point-mass":
        return PointMass(float(obj["x0"]))
    if kind == "exponential":
        return Exponential(float(obj["mean"]))
    if kind == "uniform":
        return Uniform(float(obj["a"]), float(obj["b"]))
    if kind == "tabulated-quantile":
        return TabulatedQuantile(tuple(obj["grid"]), tuple(obj["values"]))
    raise ValueError(f"unknown jump distribution kind {kind!r}")


def triplet_to_json(t: LevyTriplet) -> dict:
    jp = t.jump_part
    if jp is None:
        jpart = None
    elif isinstance(jp, CompoundPoisson):
        jpart = {
            "kind": "compound-poisson",
            "rate": jp.rate,
            "jump_dist": jump_dist_to_json(jp.jump_dist),
        }
    elif isinstance(jp, StableSubordinator):
        jpart = {"kind": "stable-subordinator", "alpha": jp.alpha, "scale": jp.scale}
    elif isinstance(jp, SymmetricStable):
        jpart = {"kind": "symmetric-stable", "alpha": jp.alpha, "scale": jp.scale}
    elif isinstance(jp, GammaProcess):
        jpart = {"kind": "gamma", "shape_rate": jp.shape_rate, "scale": jp.scale}
    elif isinstance(jp, TabulatedDensity):
        jpart = {
            "kind": "tabulated-density",
            "grid": jp.grid.tolist(),
            "values": jp.values.tolist(),
        }
    else:  # pragma: no cover
        raise TypeError(type(jp))
    return {"drift": t.drift, "gaussian_var": t.gaussian_var, "jump_part": jpart}


def triplet_from_json(obj: dict) -> LevyTriplet:
    jp = obj.get("jump_part")
    if jp is None:
        jpart = None
    else:
        kind = jp.get("kind")
        if kind == "compound-poisson":
            jpart = CompoundPoisson(
                float(jp["rate"]), jump_dist_from_json(jp["jump_dist"])
            )
        elif kind == "stable-subordinator":
            jpart = StableSubordinator(float(jp["alpha"]), float(jp["scale"]))
        elif kind == "symmetric-stable":
            jpart = SymmetricStable(float(jp["alpha"]), float(jp["scale"]))
        elif kind == "gamma":
            jpart = GammaProcess(float(jp["shape_rate"]), float(jp["scale"]))
        elif kind == "tabulated-density":
            jpart = TabulatedDensity(jp["grid"], jp["values"])
        else:
            raise ValueError(f"unknown jump part kind {kind!r}")
    return LevyTriplet(
        drift=float(obj.get("drift", 0.0)),
        gaussian_var=float(obj.get("gaussian_var", 0.0)),
        jump_part=jpart,
    )
