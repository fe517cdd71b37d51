"""Mass functionals, quasi-spherical and static extensions, and round IMCF checks
for asymptotically flat 3-metrics with non-negative scalar curvature."""

__version__ = "0.1.0"

from .catalog import (
    MetricSpec,
    make_flat,
    make_isotropic_schwarzschild,
    make_perturbed_isotropic,
    make_schwarzschild,
    sample_nonneg_scalar_metric,
    sample_perturbed_horizon,
    sourced_metric,
)
from .errors import *  # noqa: F401,F403
from .geometry import (
    ConformalMetric,
    QSGridMetric,
    RadialMetric,
    foliation_frame,
    linearized_scalar_curvature,
    mean_curvature_sphere,
    scalar_curvature,
    second_variation_residual,
)
from .grids import RadialGrid, SphereGrid
from .imcf import FlowTrace, find_minimal_spheres, geroch_monotonicity_check, imcf_flow, penrose_check
from .masses import MassReport, adm_mass, hawking_mass, horizon_mass, mass_report, misner_sharp_mass
from .qsflow import BoundaryData, ExtensionResult, bartnik_upper_bound, qs_solve_pde, qs_solve_radial, theorem5_bound
from .staticext import StaticSolution, schwarzschild_match, shoot_static_extension, static_residual
