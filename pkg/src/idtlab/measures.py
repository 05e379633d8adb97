"""Measure-level calculus: scalar jump-measure transforms and path-space
measures.

The scalar transform maps a jump measure nu through a radial measure mu via
the tail rewrite  value = int_0^inf dh int nu(dx) f(tail_mu(h) x); the
exponential-mixture specialization covers the log-measure case.  Path-space
measures are finitely supported (weight, path) atom lists; the lift spreads
each atom over a fiber of time rescalings, which makes the scaling identity
int M(dy) F(y(n .)) = n int M(dy) F(y) hold up to the fiber resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from . import kernels
from .errors import DivergentTransform, UnsupportedMeasureSupport
from .paths import SamplePath
from .spectral import CheckReport

_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)


def _gl_nodes(segments):
    """Gauss-Legendre nodes/weights on a list of (a, b) segments."""
    a = np.array([s[0] for s in segments])
    b = np.array([s[1] for s in segments])
    nodes = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * _GL_X[None, :]
    weights = 0.5 * (b - a)[:, None] * _GL_W[None, :]
    return nodes.ravel(), weights.ravel()


def _graded_segments(a: float, b: float, shells: int = 36):
    """Subdivide [a, b] with geometric grading toward both endpoints.

    Integrable endpoint singularities (tails vanishing or blowing up at a
    breakpoint) then contribute machine-level quadrature error.
    """
    mid = 0.5 * (a + b)
    width = b - a
    left = a + width * 0.5 * np.concatenate([[0.0], np.geomspace(1e-12, 1.0, shells)])
    right = b - width * 0.5 * np.concatenate([[0.0], np.geomspace(1e-12, 1.0, shells)])
    cuts = np.unique(np.concatenate([left, right[::-1], [mid]]))
    return list(zip(cuts[:-1], cuts[1:]))


# --------------------------------------------------------------------------
# scalar jump measures
# --------------------------------------------------------------------------


class LevyPointMasses:
    """Finite jump measure sum_j w_j delta_{x_j}, x_j > 0."""

    def __init__(self, atoms):
        xs = np.asarray([a[0] for a in atoms], dtype=float)
        ws = np.asarray([a[1] for a in atoms], dtype=float)
        if xs.size == 0 or np.any(xs <= 0) or np.any(ws <= 0):
            raise ValueError("atoms need x > 0 and weight > 0")
        self.xs = xs
        self.ws = ws
        self.formal = False


class LevyDensity:
    """Jump measure with density `fn` on (lo, hi).

    `formal=True` admits densities that violate the min(1, x^2)
    integrability requirement; they are used for pointwise density
    identities only and skip the tail check.
    """

    def __init__(self, fn: Callable, support, formal: bool = False, name: str = "density"):
        lo, hi = float(support[0]), float(support[1])
        if not (0.0 <= lo < hi):
            raise ValueError("support must satisfy 0 <= lo < hi")
        self.fn = fn
        self.lo = lo
        self.hi = hi
        self.formal = formal
        self.name = name
        if not formal:
            val, _ = quad(
                lambda x: min(1.0, x * x) * float(fn(x)), lo, min(hi, np.inf),
                limit=200,
            )
            if not math.isfinite(val):
                raise DivergentTransform("min(1, x^2) integral diverges")

    @classmethod
    def inverse_sqrt(cls) -> "LevyDensity":
        """The formal density 1 / sqrt(2 pi x) on (0, inf)."""
        return cls(
            lambda x: 1.0 / np.sqrt(2.0 * np.pi * np.asarray(x, dtype=float)),
            (0.0, np.inf),
            formal=True,
            name="inverse-sqrt",
        )


def scalar_measure_from_json(obj: dict):
    kind = obj.get("kind")
    if kind == "point-masses":
        return LevyPointMasses([(float(x), float(w)) for x, w in obj["atoms"]])
    if kind == "inverse-sqrt":
        return LevyDensity.inverse_sqrt()
    raise ValueError(f"unknown scalar measure kind {kind!r}")


def scalar_measure_to_json(nu) -> dict:
    if isinstance(nu, LevyPointMasses):
        return {
            "kind": "point-masses",
            "atoms": [[float(x), float(w)] for x, w in zip(nu.xs, nu.ws)],
        }
    if isinstance(nu, LevyDensity) and nu.name == "inverse-sqrt":
        return {"kind": "inverse-sqrt"}
    raise TypeError("only point masses and the named formal density serialize")


# --------------------------------------------------------------------------
# the tail-rewrite transform
# --------------------------------------------------------------------------


def _mu_breakpoints(mu):
    from .constructions import LogUniform, PointMasses, RadialDensity

    end = mu.support_end
    if not math.isfinite(end):
        raise UnsupportedMeasureSupport("radial measure support must be bounded")
    if isinstance(mu, PointMasses):
        pts = np.unique(np.concatenate([[0.0], mu.locations]))
    elif isinstance(mu, LogUniform):
        pts = np.unique(np.array([0.0, mu.a, mu.b]))
    elif isinstance(mu, RadialDensity):
        pts = np.unique(np.concatenate([[0.0], mu.grid]))
    else:
        raise TypeError(type(mu))
    return pts[pts <= end]


def _inner_integral(nu, f, tails, f_support=None):
    """int nu(dx) f(T x) for a vector of tail values T; complex-capable."""
    tails = np.asarray(tails, dtype=float)
    if isinstance(nu, LevyPointMasses):
        vals = f(np.multiply.outer(tails, nu.xs))
        return np.asarray(vals) @ nu.ws
    # density measure: restrict to where f can be nonzero
    out = np.zeros(tails.shape, dtype=np.complex128)
    for i, t in enumerate(tails):
        if t <= 0.0:
            continue
        lo, hi = nu.lo, nu.hi
        if f_support is not None:
            lo = max(lo, f_support[0] / t)
            hi = min(hi, f_support[1] / t)
        if not (lo < hi):
            continue
        if not math.isfinite(hi):
            raise UnsupportedMeasureSupport(
                "density measure with unbounded support needs f_support"
            )
        nodes, weights = _gl_nodes([(lo, hi)])
        out[i] = np.sum(weights * np.asarray(nu.fn(nodes)) * np.asarray(f(t * nodes)))
    return out.real if np.all(out.imag == 0.0) else out


def transform_levy_measure(nu, mu, f, h_segments: int = 8, f_support=None,
                           method: str = "auto"):
    """int nu_transformed(dy) f(y) = int_0^inf dh int nu(dx) f(tail_mu(h) x).

    `f` must be vectorized with f(0) = 0 (real or complex values are
    integrated by linearity).  Point-mass mu makes the h-integral an exact
    finite sum over tail constancy segments; otherwise composite quadrature
    between mu breakpoints is used.
    """
    from .constructions import PointMasses

    probe = np.asarray(f(np.array([0.0])))
    if probe.shape != (1,) or probe[0] != 0.0:
        raise ValueError("f must be vectorized with f(0) = 0")

    breaks = _mu_breakpoints(mu)
    if breaks.size < 2:
        return 0.0

    if method == "auto":
        method = "segments" if isinstance(mu, PointMasses) else "quadrature"

    if method == "segments":
        if not isinstance(mu, PointMasses):
            raise ValueError("segment enumeration needs a point-mass measure")
        mids = 0.5 * (breaks[1:] + breaks[:-1])
        lens = np.diff(breaks)
        inner = _inner_integral(nu, f, mu.tail(mids), f_support)
        val = np.sum(lens * inner)
    elif method == "quadrature":
        segs = []
        for a, b in zip(breaks[:-1], breaks[1:]):
            for aa, bb in _graded_segments(a, b):
                sub = np.linspace(aa, bb, max(1, h_segments // 8) + 1)
                segs.extend(zip(sub[:-1], sub[1:]))
        nodes, weights = _gl_nodes(segs)
        inner = _inner_integral(nu, f, mu.tail(nodes), f_support)
        val = np.sum(weights * inner)
    else:
        raise ValueError(f"unknown method {method!r}")

    if not np.all(np.isfinite(np.atleast_1d(val))):
        raise DivergentTransform("transform integral is not finite")
    if np.iscomplexobj(val) and abs(np.imag(val)) < 1e-300:
        val = np.real(val)
    return complex(val) if np.iscomplexobj(val) else float(val)


def exp_mixture_density(nu, v: float) -> float:
    """Density of the log-measure transform: int nu(dx) x^-1 exp(-v / x)."""
    if not v > 0:
        raise ValueError("v must be > 0")
    if isinstance(nu, LevyPointMasses):
        return float(np.sum(nu.ws / nu.xs * np.exp(-v / nu.xs)))
    g = lambda x: float(nu.fn(x)) / x * math.exp(-v / x)
    pts = [v] if nu.lo < v < nu.hi else None
    val, err = quad(g, nu.lo, nu.hi, points=pts if math.isfinite(nu.hi) else None,
                    limit=200)
    if not math.isfinite(val):
        raise DivergentTransform("exponential mixture integral diverged")
    return val


# --------------------------------------------------------------------------
# path functionals and discrete path measures
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PathFunctional:
    """F(y) = g(y(t_1), ..., y(t_k)), k <= 8, g nonnegative on its domain."""

    probe_times: tuple
    g: Callable
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.probe_times) == 0 or len(self.probe_times) > 8:
            raise ValueError("need 1..8 probe times")
        if any(t <= 0 for t in self.probe_times):
            raise ValueError("probe times must be positive")

    def apply_values(self, values) -> float:
        out = float(self.g(np.asarray(values, dtype=float)))
        if out < 0.0:
            raise ValueError("path functional must be nonnegative")
        return out

    def evaluate(self, path: SamplePath, time_scale: float = 1.0) -> float:
        q = np.asarray(self.probe_times, dtype=float) * time_scale
        return self.apply_values(path.eval(q, extend=True))


def indicator_above(time: float, threshold: float = 0.0) -> PathFunctional:
    return PathFunctional(
        (time,), lambda v: 1.0 if v[0] > threshold else 0.0,
        {"kind": "indicator-above", "time": time, "threshold": threshold},
    )


def positive_part(time: float) -> PathFunctional:
    return PathFunctional(
        (time,), lambda v: max(v[0], 0.0),
        {"kind": "positive-part", "time": time},
    )


def capped_positive(time: float, cap: float) -> PathFunctional:
    return PathFunctional(
        (time,), lambda v: min(max(v[0], 0.0), cap),
        {"kind": "capped-positive", "time": time, "cap": cap},
    )


def functional_from_json(obj: dict) -> PathFunctional:
    kind = obj.get("kind")
    if kind == "indicator-above":
        return indicator_above(float(obj["time"]), float(obj.get("threshold", 0.0)))
    if kind == "positive-part":
        return positive_part(float(obj["time"]))
    if kind == "capped-positive":
        return capped_positive(float(obj["time"]), float(obj["cap"]))
    raise ValueError(f"unknown functional kind {kind!r}")


class DiscretePathMeasure:
    """Finitely supported measure on paths: (weight, path) atoms."""

    def __init__(self, weights, paths: Sequence[SamplePath], u_cells=None):
        w = np.asarray(weights, dtype=float)
        if w.size != len(paths) or np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("need one finite positive weight per path")
        self.weights = w
        self.paths = list(paths)
        self.u_cells = u_cells  # optional (midpoints, widths) fiber metadata

    @property
    def resolution(self) -> Optional[float]:
        if self.u_cells is None:
            return None
        return float(np.max(self.u_cells[1]))

    def integral(self, functional: PathFunctional, time_scale: float = 1.0) -> float:
        vals = [functional.evaluate(p, time_scale) for p in self.paths]
        return float(np.dot(self.weights, vals))

    def to_json(self) -> dict:
        return {
            "atoms": [
                {
                    "weight": float(w),
                    "times": p.times.tolist(),
                    "values": p.values.tolist(),
                }
                for w, p in zip(self.weights, self.paths)
            ]
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DiscretePathMeasure":
        ws, paths = [], []
        for atom in obj["atoms"]:
            ws.append(float(atom["weight"]))
            paths.append(SamplePath(atom["times"], atom["values"]))
        return cls(ws, paths)


def lift_path_measure(measure: DiscretePathMeasure, u_edges) -> DiscretePathMeasure:
    """Spread each atom over time rescalings y(. / u), u over midpoint cells.

    With fiber cells (u_j, du_j) each atom (w, y) becomes atoms
    (w du_j, y(. / u_j)); the breakpoints of y(. / u) sit at u * times(y).
    """
    e = np.asarray(u_edges, dtype=float)
    if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0) or e[0] < 0:
        raise ValueError("u_edges must increase within [0, inf)")
    if not np.all(np.isfinite(e)):
        raise ValueError("u_edges must be finite")
    mids = 0.5 * (e[1:] + e[:-1])
    widths = np.diff(e)
    ws, paths = [], []
    for w, p in zip(measure.weights, measure.paths):
        for u, du in zip(mids, widths):
            ws.append(w * du)
            paths.append(p.rescaled(u))
    return DiscretePathMeasure(ws, paths, u_cells=(mids, widths))


def idt_scaling_check(measure: DiscretePathMeasure, n: int,
                      functionals: Sequence[PathFunctional],
                      tol: Optional[float] = None) -> CheckReport:
    """Residuals of int M(dy) F(y(n .)) = n int M(dy) F(y) per functional."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if tol is None:
        if measure.resolution is None:
            raise ValueError("tolerance required for measures without fiber cells")
        tol = 2.0 * measure.resolution
    rows = []
    worst = 0.0
    for fl in functionals:
        lhs = measure.integral(fl, time_scale=n)
        rhs = n * measure.integral(fl, time_scale=1.0)
        res = abs(lhs - rhs) / (1.0 + abs(rhs))
        rows.append({"functional": fl.spec or repr(fl), "lhs": lhs, "rhs": rhs,
                     "residual": res})
        worst = max(worst, res)
    return CheckReport(
        name="path-measure-scaling",
        statistic=worst,
        threshold=tol,
        passed=worst <= tol,
        details={
            "n": n,
            "functionals": rows,
            "u_resolution": measure.resolution,
            "gaussian_counterpart": "covariance scaling_check handles the "
                                    "Gaussian factor of the decomposition",
        },
    )


# --------------------------------------------------------------------------
# path measure of a transformed subordinator
# --------------------------------------------------------------------------


def subordinator_path_measure(nu, phi_or_tail, functional: PathFunctional,
                              u_segments: int = 16) -> float:
    """int M(dy) F(y) = int_0^inf du int nu(dx) F(x PhiTail(u / .)).

    PhiTail(u) = int_u^inf phi(v) dv; the integrand path t -> x PhiTail(u/t)
    is deterministic, so the double integral is evaluated by quadrature
    (exact finite sum over nu atoms).
    """
    if callable(phi_or_tail):
        tail = phi_or_tail
        s_end = math.inf
    else:
        tail = lambda u: kernels.tail_integral(phi_or_tail, u)
        s_end = kernels.support_end(phi_or_tail)

    probes = np.asarray(functional.probe_times, dtype=float)
    t_max = probes.max()

    if math.isfinite(s_end):
        u_break = np.unique(np.concatenate([[0.0], np.sort(probes) * s_end]))
        segs = []
        for a, b in zip(u_break[:-1], u_break[1:]):
            sub = np.linspace(a, b, u_segments + 1)
            segs.extend(zip(sub[:-1], sub[1:]))
        nodes, weights = _gl_nodes(segs)
        return _u_quadrature(nu, tail, functional, probes, nodes, weights)

    # heavy tail: geometric extension until the marginal contribution dies
    acc = 0.0
    a, b = 0.0, 4.0 * t_max
    for _ in range(60):
        sub = np.linspace(a, b, 8 * u_segments + 1)
        nodes, weights = _gl_nodes(list(zip(sub[:-1], sub[1:])))
        part = _u_quadrature(nu, tail, functional, probes, nodes, weights)
        acc += part
        if abs(part) < 1e-12 * (1.0 + abs(acc)):
            return acc
        a, b = b, 2.0 * b
    raise DivergentTransform("u-integral did not settle under extension")


def _u_quadrature(nu, tail, functional, probes, nodes, weights):
    if not isinstance(nu, LevyPointMasses):
        raise UnsupportedMeasureSupport(
            "path measure quadrature needs a point-mass jump measure"
        )
    tails = tail(nodes[:, None] / probes[None, :])  # (n_u, k)
    out = 0.0
    for x, w in zip(nu.xs, nu.ws):
        vals = np.array([functional.apply_values(x * row) for row in tails])
        out += w * float(np.dot(weights, vals))
    return out
