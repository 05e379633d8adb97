"""The four construction recipes and their exactness/accuracy contracts."""

import math

import numpy as np
import pytest
from scipy.stats import cauchy, kstest

from idtlab import (
    BROWNIAN,
    BetaEdge,
    CompoundPoisson,
    JumpFunctional,
    LevyTriplet,
    LogUniform,
    PointMass,
    PointMasses,
    PowerTailLower,
    PowerTailUpper,
    brownian_sampler,
    covariance_phi,
    gaussian_exact,
    gaussian_phi_path,
    gaussian_phi_sampler,
    integral_transform,
    integral_transform_sampler,
    jump_transform,
    sample_levy,
    stable_ray,
)
from idtlab.constructions import covariance_matrix, sampler_from_json, _mesh_edges
from idtlab.errors import (
    BadStableIndex,
    GridCoverage,
    JumpsUnavailable,
    NotPositiveSemidefinite,
    TruncationTooSmall,
    UnsupportedMeasureSupport,
)
from idtlab.kernels import QuadSpec
from idtlab.paths import TimeGrid
from idtlab.verify import _ecf_from_values, normalize_probes


class TestStableRay:
    def test_deterministic_ray_ratio(self):
        ens = stable_ray(1.0, False, TimeGrid([0.0, 1.0, 2.0]), 500, 7)
        x = ens.values
        nz = x[:, 1] != 0
        assert np.allclose(x[nz, 2] / x[nz, 1], 2.0, rtol=0, atol=0)

    def test_cauchy_marginal(self):
        ens = stable_ray(1.0, False, TimeGrid([0.0, 3.0]), 100000, 42)
        p = kstest(ens.values[:, 1], cauchy(scale=3.0).cdf).pvalue
        assert p > 0.01

    def test_gaussian_case_scaling(self):
        # S_2 has variance 2; X_4 = 2 S_2 has variance 8
        ens = stable_ray(2.0, False, TimeGrid([0.0, 4.0]), 100000, 43)
        assert abs(ens.values[:, 1].var() - 8.0) < 0.4

    def test_one_sided_monotone(self):
        ens = stable_ray(0.5, True, TimeGrid([0.0, 1.0, 2.0, 3.0]), 2000, 44)
        assert np.all(ens.values >= 0)
        assert np.all(np.diff(ens.values, axis=1) >= 0)

    def test_bad_indices(self):
        g = TimeGrid([0.0, 1.0])
        with pytest.raises(BadStableIndex):
            stable_ray(2.5, False, g, 10, 1)
        with pytest.raises(BadStableIndex):
            stable_ray(1.5, True, g, 10, 1)


class TestIntegralTransform:
    def test_delta_one_identity(self):
        base = sample_levy(BROWNIAN, TimeGrid([0.0, 0.5, 1.0, 2.0]), 64, 5)
        out = integral_transform(base, PointMasses([(1.0, 1.0)]), base.grid)
        assert np.array_equal(out.values, base.values)

    def test_delta_a_is_time_change(self):
        grid = TimeGrid([0.0, 0.5, 1.0, 1.5, 2.0, 3.0])
        base = sample_levy(BROWNIAN, grid, 32, 6)
        out = integral_transform(base, PointMasses([(1.5, 1.0)]), TimeGrid([0.0, 1.0, 2.0]))
        assert np.array_equal(out.values[:, 1], base.values_at([1.5])[:, 0])
        assert np.array_equal(out.values[:, 2], base.values_at([3.0])[:, 0])

    def test_two_atom_covariances(self):
        mu = PointMasses([(1.0, 1.0), (2.0, 1.0)])
        sam = integral_transform_sampler(brownian_sampler(), mu)
        ens = sam.sample(TimeGrid([0.0, 1.0, 2.0]), 40000, 3)
        y1, y2 = ens.values[:, 1], ens.values[:, 2]
        # var(Y_1) = 5, cov(Y_1, Y_2) = 6; MC standard errors ~ 0.04
        assert abs(y1.var() - 5.0) < 0.25
        assert abs(np.cov(y1, y2)[0, 1] - 6.0) < 0.35

    def test_linearity_in_mu(self):
        grid = TimeGrid(np.linspace(0.0, 4.0, 65))
        base = sample_levy(BROWNIAN, grid, 16, 9)
        out = TimeGrid([0.0, 1.0, 2.0])
        mu1 = PointMasses([(0.5, 0.7)])
        mu2 = PointMasses([(2.0, 1.3)])
        both = PointMasses([(0.5, 0.7), (2.0, 1.3)])
        lhs = integral_transform(base, both, out).values
        rhs = (integral_transform(base, mu1, out).values
               + integral_transform(base, mu2, out).values)
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_log_uniform_quadrature_stability(self):
        grid = TimeGrid(np.linspace(0.0, 4.0, 4097))
        base = sample_levy(BROWNIAN, grid, 128, 11)
        out = TimeGrid([0.0, 1.0, 2.0])
        mu = LogUniform(0.5, 2.0)
        a = integral_transform(base, mu, out, quad_nodes=2048).values
        b = integral_transform(base, mu, out, quad_nodes=4096).values
        # step-function quadrature: doubling nodes only shuffles sub-cell
        # alignment; declared tolerance covers the path scale
        assert np.max(np.abs(a - b)) < 0.05

    def test_log_uniform_split_additivity(self):
        grid = TimeGrid(np.linspace(0.0, 4.0, 2049))
        base = sample_levy(BROWNIAN, grid, 64, 12)
        out = TimeGrid([0.0, 2.0])
        whole = integral_transform(base, LogUniform(0.5, 2.0), out, 4096).values
        parts = (integral_transform(base, LogUniform(0.5, 1.0), out, 2048).values
                 + integral_transform(base, LogUniform(1.0, 2.0), out, 2048).values)
        assert np.max(np.abs(whole - parts)) < 0.05

    def test_coverage_error(self):
        base = sample_levy(BROWNIAN, TimeGrid([0.0, 1.0]), 8, 1)
        with pytest.raises(GridCoverage):
            integral_transform(base, PointMasses([(2.0, 1.0)]), TimeGrid([0.0, 1.0]))

    def test_zero_lower_end_rejected_for_paths(self):
        base = sample_levy(BROWNIAN, TimeGrid([0.0, 1.0]), 8, 1)
        with pytest.raises(UnsupportedMeasureSupport):
            integral_transform(base, LogUniform(0.0, 1.0), TimeGrid([0.0, 1.0]))


class TestJumpTransform:
    @pytest.fixture()
    def cp_base(self):
        trip = LevyTriplet(jump_part=CompoundPoisson(1.0, PointMass(1.0)))
        return sample_levy(trip, TimeGrid([0.0, 10.0]), 20000, 9)

    def test_identity_functional(self, cp_base):
        f = JumpFunctional(lambda v, x: np.asarray(x) * 1.0)
        out = jump_transform(cp_base, f, TimeGrid([0.0, 1.0]))
        assert np.allclose(out.values[:, 1], cp_base.values[:, 1], atol=0)
        assert np.all(out.values[:, 0] == 0.0)

    def test_zero_functional(self, cp_base):
        f = JumpFunctional(lambda v, x: np.zeros_like(np.asarray(x)))
        out = jump_transform(cp_base, f, TimeGrid([0.0, 2.0]))
        assert np.all(out.values == 0.0)

    def test_window_thinning(self, cp_base):
        # f(v, x) = x 1_{v <= 1} at t = 2 counts jumps before time 2
        f = JumpFunctional(lambda v, x: np.asarray(x) * (np.asarray(v) <= 1.0))
        out = jump_transform(cp_base, f, TimeGrid([0.0, 2.0]))
        mean = out.values[:, 1].mean()
        assert abs(mean - 2.0) < 3 * math.sqrt(2.0 / cp_base.m)

    def test_requires_jump_records(self):
        base = sample_levy(BROWNIAN, TimeGrid([0.0, 1.0]), 10, 1)
        f = JumpFunctional(lambda v, x: np.asarray(x) * 1.0)
        with pytest.raises(JumpsUnavailable):
            jump_transform(base, f, TimeGrid([0.0, 1.0]))

    def test_functional_must_vanish_at_zero(self):
        with pytest.raises(ValueError):
            JumpFunctional(lambda v, x: np.asarray(x) + 1.0)


class TestGaussianSamplers:
    def test_phi_path_zero_at_origin(self):
        ens = gaussian_phi_path(PowerTailUpper(1.0), TimeGrid([0.0, 1.0]), 200, 3)
        assert np.all(ens.values[:, 0] == 0.0)

    def test_phi_path_brownian_covariance(self):
        ens = gaussian_phi_path(PowerTailUpper(1.0), TimeGrid([0.0, 1.0, 2.0]), 20000, 21)
        v = ens.values
        assert abs(v[:, 1].var() - 1.0) < 0.05
        assert abs(v[:, 2].var() - 2.0) < 0.10
        assert abs(np.cov(v[:, 1], v[:, 2])[0, 1] - 1.0) < 0.07

    def test_phi_path_heavy_tail_covariance(self):
        ens = gaussian_phi_path(PowerTailUpper(0.75), TimeGrid([0.0, 1.0, 4.0]), 20000, 22)
        cov = np.cov(ens.values[:, 1], ens.values[:, 2])[0, 1]
        assert abs(cov - 2.0 * math.sqrt(2.0)) < 4 * math.sqrt(24.0 / 20000)

    def test_exact_gram_is_min(self):
        times = np.array([0.0, 1.0, 2.0, 3.0])
        gram = covariance_matrix(PowerTailUpper(1.0), times)
        assert np.max(np.abs(gram - np.minimum.outer(times, times))) < 1e-6

    def test_exact_deterministic(self):
        g = TimeGrid([0.0, 1.0, 2.0])
        a = gaussian_exact(PowerTailUpper(1.0), g, 1, 5)
        b = gaussian_exact(PowerTailUpper(1.0), g, 1, 5)
        assert np.array_equal(a.values, b.values)

    def test_lower_kernel_long_range_covariance(self):
        assert covariance_phi(PowerTailLower(0.0), 1.0, 4.0) == pytest.approx(1.0, abs=1e-4)
        ens = gaussian_exact(PowerTailLower(0.0), TimeGrid([0.0, 1.0, 4.0]), 30000, 6)
        assert abs(np.cov(ens.values[:, 1], ens.values[:, 2])[0, 1] - 1.0) < 0.06

    def test_psd_guard(self, monkeypatch):
        import idtlab.constructions as cons

        bad = np.array([[1.0, 0.0], [0.0, -1.0]])
        monkeypatch.setattr(cons, "covariance_matrix", lambda k, t: bad)
        with pytest.raises(NotPositiveSemidefinite):
            gaussian_exact(PowerTailUpper(1.0), TimeGrid([0.0, 1.0]), 10, 1)

    def test_truncation_guard(self):
        k = PowerTailUpper(0.5001, QuadSpec(trunc_tol=1e-4))
        with pytest.raises(TruncationTooSmall):
            gaussian_phi_path(k, TimeGrid([0.0, 1.0]), 10, 1)

    def test_mesh_snaps_grid_times(self):
        grid = TimeGrid([0.0, 0.7, 2.0])
        for k in (PowerTailUpper(0.8), PowerTailLower(0.1), BetaEdge(0.2)):
            edges = _mesh_edges(k, grid)
            for t in (0.7, 2.0):
                assert np.min(np.abs(edges - t)) < 1e-12

    @pytest.mark.parametrize(
        "kernel",
        [PowerTailUpper(0.75), PowerTailLower(0.25), BetaEdge(0.25)],
        ids=["upper", "lower", "beta"],
    )
    def test_sampler_agreement(self, kernel):
        # discretized stochastic integral vs exact covariance draws: ECFs at
        # 8 probe vectors within 4 combined standard errors
        grid = TimeGrid([0.0, 1.0, 2.0])
        a = gaussian_phi_path(kernel, grid, 20000, 31).values_at([1.0, 2.0])
        b = gaussian_exact(kernel, grid, 20000, 32).values_at([1.0, 2.0])
        probes = normalize_probes(
            [[0.3, 0.0], [0.0, 0.3], [0.3, 0.3], [0.3, -0.3],
             [0.6, 0.0], [0.0, 0.6], [0.6, 0.6], [0.15, 0.45]], 2,
        )
        va, sa = _ecf_from_values(a, probes)
        vb, sb = _ecf_from_values(b, probes)
        stat = np.max(np.abs(va - vb) / np.hypot(sa, sb))
        assert stat < 4.0


class TestSamplerJson:
    @pytest.mark.parametrize(
        "spec",
        [
            {"kind": "brownian"},
            {"kind": "besq1"},
            {"kind": "stable-ray", "alpha": 1.0, "one_sided": False},
            {"kind": "levy",
             "triplet": {"drift": 0.0, "gaussian_var": 1.0, "jump_part": None}},
            {"kind": "integral-transform", "base": {"kind": "brownian"},
             "mu": {"kind": "point-masses", "atoms": [[1.0, 1.0], [2.0, 1.0]]}},
            {"kind": "gaussian-phi", "phi": {"kind": "power-tail-upper", "alpha": 1.0},
             "mode": "exact"},
        ],
    )
    def test_round_trip_and_sampling(self, spec):
        sam = sampler_from_json(spec)
        ens = sam.sample(TimeGrid([0.0, 1.0]), 50, 17)
        assert ens.m == 50
        assert np.all(np.isfinite(ens.values))
        assert np.all(ens.values[:, 0] == 0.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            sampler_from_json({"kind": "nope"})
