"""idtlab: construction, analytics and Monte Carlo verification of
processes divisible with respect to time."""

from .backend import backend_name
from .constructions import (
    JumpFunctional,
    LogUniform,
    PointMasses,
    RadialDensity,
    gaussian_exact,
    gaussian_phi_path,
    gaussian_phi_sampler,
    integral_transform,
    integral_transform_sampler,
    jump_transform,
    sampler_from_json,
    stable_ray,
    stable_ray_sampler,
)
from .kernels import BetaEdge, PowerTailLower, PowerTailUpper, QuadSpec, TabulatedKernel
from .measures import (
    DiscretePathMeasure,
    LevyDensity,
    LevyPointMasses,
    PathFunctional,
    exp_mixture_density,
    idt_scaling_check,
    lift_path_measure,
    subordinator_path_measure,
    transform_levy_measure,
)
from .paths import PathEnsemble, SamplePath, TimeGrid
from .rng import SeedInfo
from .sampling import (
    Sampler,
    besq1_sampler,
    brownian_sampler,
    levy_sampler,
    sample_besq1,
    sample_levy,
)
from .spectral import (
    CovarianceFn,
    covariance_phi,
    closed_covariance,
    hirsch_min_eig,
    lamperti_covariance,
    scaling_check,
    spectral_hat,
    table_spectral_density,
)
from .triplets import (
    BROWNIAN,
    CompoundPoisson,
    Exponential,
    GammaProcess,
    LevyTriplet,
    PointMass,
    StableSubordinator,
    SymmetricStable,
    TabulatedDensity,
    Uniform,
    char_exponent,
    triplet_from_json,
    triplet_to_json,
)
from .verify import (
    EcfEstimate,
    TestReport,
    ecf_estimate,
    idt_property_test,
    idt_ratio_test,
    increment_dependence_stat,
    marginal_mimic_test,
    tsd_factorization_test,
)

__version__ = "0.1.0"
