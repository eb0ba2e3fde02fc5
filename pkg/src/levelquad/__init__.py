"""Surface and curve integrals from level-set data on uniform grids."""

__version__ = "0.1.0"

from .errors import (DegenerateArc, EmptyBand, EmptyBandWarning, EpsilonResolutionWarning,  # noqa: E402
                     FitFailed, IllConditionedFit, LevelQuadError, NoInterface, NotConverged,
                     ResourceCap, SingularMomentSystem, SingularOnBand, UndefinedGradient)
from .kernels import (Kernel, WeightFamily, build_kernel, kernel_eval, kernel_moment,  # noqa: E402
                      moment_table, named_kernel)
from .geometry import (ImplicitField, Integrand, ShapeDescriptor, ShapeKind, closest_point,  # noqa: E402
                       make_circle_quadratic, make_circle_sdf, make_cusp_star_sdf, make_integrand,
                       make_l1_ball, make_power_of_distance, make_shape, make_sphere_sdf,
                       make_squared_variant)
from .grid import GridSpec, Side, compensated_sum, iterate_band  # noqa: E402
from .quadrature import (EpsilonPolicy, QuadratureJob, family_integral, fit_family,  # noqa: E402
                         integrate, integrate_3d_surface, integrate_singular, run_job,
                         sample_family)
from .redistance import DistanceGrid, fast_sweep, initialize_interface, redistance  # noqa: E402
from .studies import (ConvergenceReport, calibrate_a0, exponential_fit, observed_orders,  # noqa: E402
                      run_study)

__all__ = [name for name in dir() if not name.startswith("_")]
