"""Analytic side of the Gaussian constructions.

Covariance evaluation for kernel moving averages, the 1-homogeneity check
equivalent to time divisibility of a centered Gaussian process, the
log-clock (Lamperti) covariance and its shift invariance, spectral densities
(closed forms for the parametric kernel rows, a Cauchy-series form for the
edge-singular row), oscillatory-quadrature round trips, and the positivity
of the associated quadratic form on [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.special import gammaln

from . import kernels
from .errors import NoClosedForm, QuadratureFailure
from .kernels import BetaEdge, PowerTailLower, PowerTailUpper, TabulatedKernel

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


# --------------------------------------------------------------------------
# covariance functions
# --------------------------------------------------------------------------


class CovarianceFn:
    """Evaluable covariance c(s, t) with provenance and cumulative helper."""

    def __init__(self, evaluator: Callable, provenance: str, name: str,
                 cumulative_c1: Optional[Callable] = None):
        self._eval = evaluator
        self.provenance = provenance
        self.name = name
        self._cum_c1 = cumulative_c1
        self._check_basic()

    def _check_basic(self):
        probes = np.array([0.3, 1.0, 2.5])
        a = self(probes[:, None], probes[None, :])
        if np.max(np.abs(a - a.T)) > 1e-12 * (1.0 + np.max(np.abs(a))):
            raise ValueError("covariance evaluator is not symmetric")

    def __call__(self, s, t):
        out = np.asarray(self._eval(np.asarray(s, dtype=float),
                                    np.asarray(t, dtype=float)), dtype=float)
        return out if out.ndim else float(out)

    def c1(self, s):
        return self(1.0, s)

    def cum_c1(self, s):
        """C(s) = integral_0^s c(1, x) dx on [0, 1], for the quadratic form."""
        if self._cum_c1 is None:
            self._cum_c1 = _numeric_cumulative(self.c1)
        out = np.asarray(self._cum_c1(np.asarray(s, dtype=float)), dtype=float)
        return out if out.ndim else float(out)

    # constructors ---------------------------------------------------------

    @classmethod
    def from_phi(cls, kernel) -> "CovarianceFn":
        cum = None
        if isinstance(kernel, PowerTailUpper):
            a = kernel.alpha

            def cum(s, a=a):
                s = np.clip(np.asarray(s, dtype=float), 0.0, None)
                low = s ** (a + 1.0) / ((a + 1.0) * (2.0 * a - 1.0))
                c1v = 1.0 / ((a + 1.0) * (2.0 * a - 1.0))
                high = c1v + (np.maximum(s, 1.0) ** (2.0 - a) - 1.0) / (
                    (2.0 - a) * (2.0 * a - 1.0)
                )
                return np.where(s <= 1.0, low, high)

        elif isinstance(kernel, PowerTailLower):
            a = kernel.alpha

            def cum(s, a=a):
                s = np.clip(np.asarray(s, dtype=float), 0.0, None)
                low = s ** (2.0 - a) / ((2.0 - a) * (1.0 - 2.0 * a))
                c1v = 1.0 / ((2.0 - a) * (1.0 - 2.0 * a))
                high = c1v + (np.maximum(s, 1.0) ** (1.0 + a) - 1.0) / (
                    (1.0 + a) * (1.0 - 2.0 * a)
                )
                return np.where(s <= 1.0, low, high)

        return cls(
            lambda s, t: kernels.covariance(kernel, s, t),
            "from-phi",
            f"phi:{kernels.kernel_to_json(kernel)['kind']}",
            cumulative_c1=cum,
        )

    @classmethod
    def minimum(cls) -> "CovarianceFn":
        def cum(s):
            s = np.clip(np.asarray(s, dtype=float), 0.0, None)
            return np.where(s <= 1.0, 0.5 * s**2, 0.5 + (s - 1.0))

        return cls(np.minimum, "closed", "min", cumulative_c1=cum)

    @classmethod
    def from_callable(cls, fn: Callable, name: str = "custom") -> "CovarianceFn":
        return cls(fn, "closed", name)

    @classmethod
    def empirical(cls, times, gram) -> "CovarianceFn":
        t = np.asarray(times, dtype=float)
        g = np.asarray(gram, dtype=float)
        if g.shape != (t.size, t.size):
            raise ValueError("gram matrix shape must match times")
        if t[-1] < 1.0:
            raise ValueError("empirical grid must reach t = 1")
        g = 0.5 * (g + g.T)

        def ev(s, u, t=t, g=g):
            s = np.asarray(s, dtype=float)
            u = np.asarray(u, dtype=float)
            return _bilinear(t, g, s, u)

        return cls(ev, "empirical", "empirical-gram")


def _bilinear(knots, table, s, u):
    s, u = np.broadcast_arrays(s, u)
    i = np.clip(np.searchsorted(knots, s, side="right") - 1, 0, knots.size - 2)
    j = np.clip(np.searchsorted(knots, u, side="right") - 1, 0, knots.size - 2)
    fs = (s - knots[i]) / (knots[i + 1] - knots[i])
    fu = (u - knots[j]) / (knots[j + 1] - knots[j])
    fs = np.clip(fs, 0.0, 1.0)
    fu = np.clip(fu, 0.0, 1.0)
    return (
        table[i, j] * (1 - fs) * (1 - fu)
        + table[i + 1, j] * fs * (1 - fu)
        + table[i, j + 1] * (1 - fs) * fu
        + table[i + 1, j + 1] * fs * fu
    )


def _numeric_cumulative(c1_vec):
    """Cumulative of c(1, .) on [0, 1] by graded composite Gauss-Legendre."""
    base = 0.5 * (1.0 - np.cos(np.linspace(0.0, np.pi, 2049)))
    near0 = np.geomspace(1e-14, 0.4, 80)
    near1 = 1.0 - np.geomspace(1e-14, 0.4, 80)
    knots = np.unique(np.concatenate([[0.0, 1.0], base, near0, near1]))
    a, b = knots[:-1], knots[1:]
    nodes = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * _GL_X[None, :]
    vals = np.asarray(c1_vec(nodes.ravel()), dtype=float).reshape(nodes.shape)
    seg = 0.5 * (b - a) * (vals @ _GL_W)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    spline = CubicSpline(knots, cum)
    return lambda s: spline(np.clip(s, 0.0, 1.0))


def covariance_phi(phi, s, t):
    """c(s, t) of the kernel moving average; closed form when parametric."""
    return kernels.covariance(phi, s, t)


# --------------------------------------------------------------------------
# homogeneity and log-clock stationarity
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckReport:
    """Deterministic (non Monte Carlo) check outcome."""

    name: str
    statistic: float  # max residual over probes
    threshold: float
    passed: bool
    details: dict = field(default_factory=dict)

    @property
    def decision(self) -> str:
        return "pass" if self.passed else "reject"


def scaling_check(c: CovarianceFn, alphas, pairs, tol: float) -> CheckReport:
    """Residuals of c(a s, a t) = a c(s, t) over scale factors and pairs."""
    worst = 0.0
    rows = []
    for a in alphas:
        for (s, t) in pairs:
            lhs = c(a * s, a * t)
            rhs = a * c(s, t)
            res = abs(lhs - rhs) / (1.0 + abs(rhs))
            rows.append({"alpha": a, "s": s, "t": t, "residual": res})
            worst = max(worst, res)
    return CheckReport(
        name="covariance-scaling",
        statistic=worst,
        threshold=tol,
        passed=worst <= tol,
        details={"probes": rows},
    )


def lamperti_covariance(c: CovarianceFn, y, z):
    """Covariance of the log-clock normalization e^{-y/2} X(e^y)."""
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    out = np.exp(-(y + z) / 2.0) * c(np.exp(y), np.exp(z))
    return out if out.ndim else float(out)


def lamperti_shift_residual(c: CovarianceFn, shifts, points) -> float:
    """max |c~(y+h, z+h) - c~(y, z)| over probe points and shifts."""
    worst = 0.0
    for h in shifts:
        for (y, z) in points:
            worst = max(
                worst,
                abs(lamperti_covariance(c, y + h, z + h) - lamperti_covariance(c, y, z)),
            )
    return worst


# --------------------------------------------------------------------------
# spectral densities
# --------------------------------------------------------------------------


def spectral_hat(phi, x):
    """Fourier transform of the spectral measure of the phi moving average."""
    return kernels.spectral_hat(phi, x)


@dataclass(frozen=True)
class CauchyDensity:
    """g(y) = mass * c / (pi (y^2 + c^2)); total integral = mass."""

    c: float
    mass: float

    def __post_init__(self):
        if not (self.c > 0 and self.mass >= 0):
            raise ValueError("need c > 0 and mass >= 0")

    def density(self, y):
        y = np.asarray(y, dtype=float)
        out = self.mass * self.c / (np.pi * (y**2 + self.c**2))
        return out if out.ndim else float(out)

    @property
    def total_mass(self) -> float:
        return self.mass

    @property
    def finite_support(self) -> Optional[float]:
        return None


@dataclass(frozen=True)
class CauchySeries:
    """Sum of Cauchy terms (mass_k, c_k); weights must be nonnegative."""

    terms: tuple  # ((mass, c), ...)
    truncation: int = 0  # number of dropped terms reported upstream

    def __post_init__(self):
        if any(m < 0 or c <= 0 for m, c in self.terms):
            raise ValueError("series terms need mass >= 0 and c > 0")

    def density(self, y):
        y = np.asarray(y, dtype=float)[..., None]
        ms = np.array([m for m, _ in self.terms])
        cs = np.array([c for _, c in self.terms])
        out = np.sum(ms * cs / (np.pi * (y**2 + cs**2)), axis=-1)
        return out if out.ndim else float(out)

    @property
    def total_mass(self) -> float:
        return float(sum(m for m, _ in self.terms))

    @property
    def finite_support(self) -> Optional[float]:
        return None


class TabulatedSpectralDensity:
    def __init__(self, grid, values):
        g = np.asarray(grid, dtype=float)
        v = np.asarray(values, dtype=float)
        if np.any(v < 0):
            raise ValueError("density values must be >= 0")
        sym = np.interp(-g, g, v, left=0.0, right=0.0)
        if np.max(np.abs(sym - v)) > 1e-9 * (1.0 + v.max()):
            raise ValueError("spectral density must be symmetric")
        self.grid = g
        self.values = v

    def density(self, y):
        y = np.asarray(y, dtype=float)
        out = np.interp(y, self.grid, self.values, left=0.0, right=0.0)
        return out if out.ndim else float(out)

    @property
    def total_mass(self) -> float:
        return float(np.trapezoid(self.values, self.grid))

    @property
    def finite_support(self) -> Optional[float]:
        return float(np.abs(self.grid).max())


def _beta_series_weights(alpha: float, n_terms: int):
    n = np.arange(n_terms, dtype=float)
    kappa = math.exp(gammaln(1.0 - alpha) - gammaln(alpha))
    masses = kappa * np.exp(gammaln(n + alpha) - gammaln(n + 2.0 - alpha))
    return masses, n + 0.5


def table_density(phi):
    """The spectral measure of a parametric kernel as a density object."""
    kernels.require_parametric(phi, "table density")
    if isinstance(phi, (PowerTailUpper, PowerTailLower)):
        cc = abs(0.5 - phi.alpha)
        return CauchyDensity(c=cc, mass=1.0 / (2.0 * cc))
    masses, centers = _beta_series_weights(phi.alpha, phi.quad.series_terms)
    return CauchySeries(tuple(zip(masses.tolist(), centers.tolist())))


def table_spectral_density(phi, y):
    """Closed-form spectral density value at y for the parametric rows."""
    return table_density(phi).density(y)


def beta_series_tail_bound(phi: BetaEdge, y: float = 0.0) -> float:
    """Numeric bound on the density mass dropped by the series truncation."""
    n0 = phi.quad.series_terms
    extra, centers = _beta_series_weights(phi.alpha, 8 * n0)
    dropped = extra[n0:] * centers[n0:] / (np.pi * (y**2 + centers[n0:] ** 2))
    # terms decay like n^(2 alpha - 3); integral comparison for the rest
    rest = extra[-1] / (np.pi * centers[-1]) * centers[-1] / (2.0 - 2.0 * phi.alpha)
    return float(dropped.sum() + rest)


def fourier_of_density(density, x: float) -> float:
    """2 * integral_0^inf g(y) cos(x y) dy by (oscillatory) quadrature."""
    g = density.density
    sup = density.finite_support
    upper = np.inf if sup is None else sup
    if x == 0.0:
        val, err = quad(g, 0.0, upper, limit=400)
        val *= 2.0
        err *= 2.0
    else:
        # QAWF on [0, inf) accelerates the Fourier cycles; QAWO on a
        # compact support
        if sup is None:
            val, err = quad(g, 0.0, np.inf, weight="cos", wvar=abs(x))
        else:
            val, err = quad(g, 0.0, sup, weight="cos", wvar=abs(x), limit=400)
        val *= 2.0
        err *= 2.0
    if err > max(1e-7, 1e-5 * abs(val)):
        raise QuadratureFailure(f"fourier quadrature error estimate {err:.2e}")
    return val


def closed_covariance(density, s: float, t: float) -> float:
    """sqrt(s t) times the density's Fourier transform at |ln(s / t)|."""
    if s <= 0 or t <= 0:
        return 0.0
    ratio = max(s, t) / min(s, t)
    x = math.log(ratio)
    return math.sqrt(s * t) * fourier_of_density(density, x)


# --------------------------------------------------------------------------
# positivity of the quadratic form on [0, 1]
# --------------------------------------------------------------------------


def _graded_nodes(a: float, b: float, grade_left: bool):
    if not grade_left:
        return (np.array([a]), np.array([b]))
    cuts = a + (b - a) * np.concatenate([[0.0], np.geomspace(1e-13, 1.0, 41)])
    return (cuts[:-1], cuts[1:])


def hirsch_matrix(c: CovarianceFn, n: int) -> np.ndarray:
    """Symmetrized Gram matrix of Q(f) on piecewise-constant elements.

    Q(f) = int_0^1 du f(u) int_0^1 ds f(s u) c(1, s).  Entries are computed
    from the exact cell geometry: A_ij = int_{cell_i} du [C(min(1, e_{j+1}/u))
    - C(min(1, e_j/u))] with C the cumulative of c(1, .), so the assembled
    form is the restriction of Q to the element space (PSD whenever Q is).
    """
    if n < 2:
        raise ValueError("need n >= 2")
    edges = np.linspace(0.0, 1.0, n + 1)
    A = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            lo, hi = _graded_nodes(edges[i], edges[i + 1], grade_left=j >= i - 1)
            u = 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * _GL_X[None, :]
            upper = np.minimum(1.0, edges[j + 1] / u)
            lower = np.minimum(1.0, edges[j] / u)
            f = c.cum_c1(upper) - c.cum_c1(lower)
            A[i, j] = float(np.sum(0.5 * (hi - lo) * (f @ _GL_W)))
    return 0.5 * (A + A.T)


def hirsch_min_eig(c: CovarianceFn, n: int) -> float:
    """Smallest eigenvalue of the discretized quadratic form."""
    return float(np.linalg.eigvalsh(hirsch_matrix(c, n))[0])
