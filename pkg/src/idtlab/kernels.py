"""Square-integrable kernels driving the Gaussian moving-average construction.

Three parametric families with closed-form analytics plus a tabulated
fallback.  Everything downstream (samplers, covariance evaluation, spectral
densities, tail integrals) dispatches on these types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import hyp2f1

from .errors import NoClosedForm


@dataclass(frozen=True)
class QuadSpec:
    """Discretization metadata carried by a kernel."""

    cells: int = 4096  # mesh cells for the stochastic-integral sampler
    trunc_tol: float = 1e-4  # admissible relative tail mass beyond truncation
    series_terms: int = 200  # spectral series truncation

    def __post_init__(self):
        if self.cells < 16 or self.trunc_tol <= 0 or self.series_terms < 1:
            raise ValueError("bad quadrature spec")


@dataclass(frozen=True)
class PowerTailUpper:
    """phi(x) = x^-alpha on x >= 1, alpha > 1/2."""

    alpha: float
    quad: QuadSpec = field(default_factory=QuadSpec)

    def __post_init__(self):
        if not (self.alpha > 0.5 and math.isfinite(self.alpha)):
            raise ValueError("upper power tail requires alpha > 1/2")

    def phi(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x >= 1.0, np.where(x >= 1.0, x, 1.0) ** -self.alpha, 0.0)


@dataclass(frozen=True)
class PowerTailLower:
    """phi(x) = x^-alpha on 0 < x <= 1, alpha < 1/2."""

    alpha: float
    quad: QuadSpec = field(default_factory=QuadSpec)

    def __post_init__(self):
        if not (self.alpha < 0.5 and math.isfinite(self.alpha)):
            raise ValueError("lower power tail requires alpha < 1/2")

    def phi(self, x):
        x = np.asarray(x, dtype=np.float64)
        safe = np.where(x > 0.0, x, 1.0)
        return np.where((x > 0.0) & (x <= 1.0), safe**-self.alpha, 0.0)


@dataclass(frozen=True)
class BetaEdge:
    """phi(x) = (1-x)^-alpha on 0 <= x <= 1, alpha < 1/2."""

    alpha: float
    quad: QuadSpec = field(default_factory=QuadSpec)

    def __post_init__(self):
        if not (self.alpha < 0.5 and math.isfinite(self.alpha)):
            raise ValueError("edge singularity requires alpha < 1/2")

    def phi(self, x):
        x = np.asarray(x, dtype=np.float64)
        inside = (x >= 0.0) & (x < 1.0)
        safe = np.where(inside, 1.0 - x, 1.0)
        return np.where(inside, safe**-self.alpha, 0.0)


class TabulatedKernel:
    """Kernel given by linear interpolation on a finite grid in (0, inf)."""

    def __init__(self, grid, values, quad: QuadSpec = None):
        g = np.asarray(grid, dtype=np.float64)
        v = np.asarray(values, dtype=np.float64)
        if g.ndim != 1 or g.size < 2 or g.size != v.size:
            raise ValueError("kernel table needs matching 1-d grid and values")
        if np.any(np.diff(g) <= 0) or g[0] < 0:
            raise ValueError("kernel grid must increase within [0, inf)")
        if not np.all(np.isfinite(v)):
            raise ValueError("kernel values must be finite")
        l2 = float(np.trapezoid(v**2, g))
        if not (0.0 < l2 < math.inf):
            raise ValueError("kernel must be square-integrable with positive norm")
        self.grid = g
        self.values = v
        self.quad = quad or QuadSpec()
        self._l2 = l2

    def phi(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.interp(x, self.grid, self.values, left=0.0, right=0.0)

    def __repr__(self):
        return f"TabulatedKernel(n={self.grid.size})"


PARAMETRIC_KINDS = (PowerTailUpper, PowerTailLower, BetaEdge)


def support_end(kernel) -> float:
    """Right end of {phi != 0} (inf for the upper power tail)."""
    if isinstance(kernel, PowerTailUpper):
        return math.inf
    if isinstance(kernel, (PowerTailLower, BetaEdge)):
        return 1.0
    return float(kernel.grid[-1])


def l2_norm_sq(kernel) -> float:
    """integral of phi^2 over (0, inf)."""
    if isinstance(kernel, PowerTailUpper):
        return 1.0 / (2.0 * kernel.alpha - 1.0)
    if isinstance(kernel, (PowerTailLower, BetaEdge)):
        return 1.0 / (1.0 - 2.0 * kernel.alpha)
    return kernel._l2


def covariance(kernel, s, t):
    """c(s, t) = s * integral phi(s v / t) phi(v) dv, vectorized, 0 on the axes."""
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    lo = np.minimum(s, t)
    hi = np.maximum(s, t)
    pos = lo > 0.0
    lo_s = np.where(pos, lo, 1.0)
    hi_s = np.where(pos, hi, 1.0)
    if isinstance(kernel, PowerTailUpper):
        a = kernel.alpha
        out = lo_s**a * hi_s ** (1.0 - a) / (2.0 * a - 1.0)
    elif isinstance(kernel, PowerTailLower):
        a = kernel.alpha
        out = lo_s ** (1.0 - a) * hi_s**a / (1.0 - 2.0 * a)
    elif isinstance(kernel, BetaEdge):
        a = kernel.alpha
        out = lo_s * hyp2f1(a, 1.0, 2.0 - a, lo_s / hi_s) / (1.0 - a)
    else:
        out = _covariance_tabulated(kernel, lo_s, hi_s)
    out = np.where(pos, out, 0.0)
    return out if out.ndim else float(out)

def _covariance_tabulated(kernel, lo, hi, n=4097):
    lo = np.atleast_1d(lo)
    hi = np.atleast_1d(hi)
    g0, g1 = kernel.grid[0], kernel.grid[-1]
    out = np.empty(lo.shape)
    it = np.nditer([lo, hi], flags=["multi_index"])
    for a, b in it:
        # phi(v) lives on [g0, g1]; phi(a v / b) lives on [g0 b/a, g1 b/a]
        vlo = max(g0, g0 * float(b) / float(a))
        vhi = min(g1, g1 * float(b) / float(a))
        if vlo >= vhi:
            out[it.multi_index] = 0.0
            continue
        v = np.linspace(vlo, vhi, n)
        out[it.multi_index] = float(a) * np.trapezoid(
            kernel.phi(float(a) / float(b) * v) * kernel.phi(v), v
        )
    return out.reshape(np.broadcast(lo, hi).shape)


def spectral_hat(kernel, x):
    """Fourier transform of the stationary spectral measure at x.

    Equals exp(-|x|/2) * integral phi(exp(-|x|) v) phi(v) dv.
    """
    x = np.asarray(x, dtype=np.float64)
    ax = np.abs(x)
    if isinstance(kernel, PowerTailUpper):
        a = kernel.alpha
        out = np.exp(-(a - 0.5) * ax) / (2.0 * a - 1.0)
    elif isinstance(kernel, PowerTailLower):
        a = kernel.alpha
        out = np.exp(-(0.5 - a) * ax) / (1.0 - 2.0 * a)
    elif isinstance(kernel, BetaEdge):
        a = kernel.alpha
        out = np.exp(-ax / 2.0) * hyp2f1(a, 1.0, 2.0 - a, np.exp(-ax)) / (1.0 - a)
    else:
        q = np.exp(-ax)
        out = np.exp(-ax / 2.0) * _covariance_tabulated(kernel, q, np.ones_like(q))
        out = out / q  # _covariance_tabulated carries a leading factor lo == q
    return out if out.ndim else float(out)


def tail_integral(kernel, u):
    """Tail of the kernel's integral: Phi(u) = integral_u^inf phi(v) dv."""
    u = np.asarray(u, dtype=np.float64)
    if isinstance(kernel, PowerTailUpper):
        a = kernel.alpha
        if a <= 1.0:
            raise ValueError("tail integral diverges for alpha <= 1")
        out = np.maximum(u, 1.0) ** (1.0 - a) / (a - 1.0)
    elif isinstance(kernel, PowerTailLower):
        a = kernel.alpha
        uu = np.clip(u, 0.0, 1.0)
        out = (1.0 - uu ** (1.0 - a)) / (1.0 - a)
    elif isinstance(kernel, BetaEdge):
        a = kernel.alpha
        uu = np.clip(u, 0.0, 1.0)
        out = (1.0 - uu) ** (1.0 - a) / (1.0 - a)
    else:
        g, v = kernel.grid, kernel.values
        seg = 0.5 * (v[1:] + v[:-1]) * np.diff(g)
        rev = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
        out = np.interp(u, g, rev, left=rev[0], right=0.0)
    return out if out.ndim else float(out)


def kernel_to_json(kernel) -> dict:
    quad = {
        "cells": kernel.quad.cells,
        "trunc_tol": kernel.quad.trunc_tol,
        "series_terms": kernel.quad.series_terms,
    }
    if isinstance(kernel, PowerTailUpper):
        return {"kind": "power-tail-upper", "alpha": kernel.alpha, "quad": quad}
    if isinstance(kernel, PowerTailLower):
        return {"kind": "power-tail-lower", "alpha": kernel.alpha, "quad": quad}
    if isinstance(kernel, BetaEdge):
        return {"kind": "beta-edge", "alpha": kernel.alpha, "quad": quad}
    if isinstance(kernel, TabulatedKernel):
        return {
            "kind": "tabulated",
            "grid": kernel.grid.tolist(),
            "values": kernel.values.tolist(),
            "quad": quad,
        }
    raise TypeError(type(kernel))


def kernel_from_json(obj: dict):
    quad = obj.get("quad")
    qs = (
        QuadSpec(
            int(quad.get("cells", 16384)),
            float(quad.get("trunc_tol", 1e-4)),
            int(quad.get("series_terms", 200)),
        )
        if quad
        else QuadSpec()
    )
    kind = obj.get("kind")
    if kind == "power-tail-upper":
        return PowerTailUpper(float(obj["alpha"]), qs)
    if kind == "power-tail-lower":
        return PowerTailLower(float(obj["alpha"]), qs)
    if kind == "beta-edge":
        return BetaEdge(float(obj["alpha"]), qs)
    if kind == "tabulated":
        return TabulatedKernel(obj["grid"], obj["values"], qs)
    raise ValueError(f"unknown kernel kind {kind!r}")


def require_parametric(kernel, what: str):
    if not isinstance(kernel, PARAMETRIC_KINDS):
        raise NoClosedForm(f"{what} requires a parametric kernel")
