"""Coarse Ricci curvature on finite metric measure spaces.

The curvature of a pair ``(x, y)`` is the iterated carre du champ of the
test function ``f(z) = (d(x,y)^2 - d(y,z)^2 + d(z,x)^2) / 2`` evaluated at
``x``. The package builds generators (graphs, grids, kernel Laplacians),
computes the curvature and related bounds, and checks the results against
closed-form smooth geometries and exact optimal transport.
"""

from .exceptions import InputError, NumericalError
from .gamma import (
    CDEstimate,
    CoarseRicciReport,
    Generator,
    LSIAudit,
    PairCurvature,
    admissible_pairs,
    bochner_residual,
    carre_du_champ,
    cd_estimate,
    coarse_ricci,
    coarse_ricci_matrix,
    cut_locus_contains,
    distcarre_check,
    gamma2,
    log_sobolev_audit,
    make_generator,
)
from .geometry import (
    Euclidean,
    FlatTorus,
    GaussianOU,
    Sphere,
    analytic_coarse_ricci,
    discretize,
    integral_cric,
    parse_geometry,
    ricci_flow_derivative_check,
    ricci_recovery,
    synge_remainder_order,
)
from .operators import (
    KernelConfig,
    grid_generator,
    graph_generator,
    invariant_measure,
    pointcloud_generator,
    semigroup_matrix,
    weighted_grid_generator,
)
from .space import MetricMeasureSpace, build_space, euclidean_space, test_function
from .transport import (
    TransportPlan,
    contraction_rate,
    entropy,
    lazy_kernel,
    ollivier_kappa,
    simple_walk_kernel,
    wasserstein,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
