"""Flow-kick systems: periodic, discrete disturbances of ODEs.

Fixed points, stability, branch continuation and saddle-node, transcritical
and Neimark-Sacker bifurcation curves in the disturbance plane (tau, lambda),
compared with the continuous-disturbance analog ``x' = f(x) + r(x; lambda)``.
"""

__version__ = "0.1.0"

from .continuation import (BifurcationPoint, Branch, StabilityGrid, StepControl,
                           continue_branch, continue_ns_curve, continue_sn_curve,
                           detect_bifurcations, find_fixed_points, stability_grid,
                           tc_curve_at_invariant)
from .dynamics import (DisturbanceParams, Orbit, SystemDef, desingularized_residual, flow,
                       flow_kick, iterate_orbit)
from .equilibria import (FixedPointRecord, classify_stability, eigenvalue_relation_check,
                         eigenvalues, newton_fixed_point)
from .errors import (DivergenceError, FlowKickError, NearBifurcationError, NoFixedPointError,
                     StencilError, StiffnessError, UnsupportedDimensionError)
from .exprsys import parse_expr, parse_system
from .models import (CATALOG, ModelCatalogEntry, get_model, make_klausmeier, make_logistic,
                     make_predator_prey)
from .numdiff import StencilConfig, deriv_lambda, hessian_x, jacobian_x, second_deriv_xx

__all__ = [
    "BifurcationPoint", "Branch", "CATALOG", "DisturbanceParams", "DivergenceError",
    "FixedPointRecord", "FlowKickError", "ModelCatalogEntry", "NearBifurcationError",
    "NoFixedPointError", "Orbit", "StabilityGrid", "StencilConfig", "StencilError", "StepControl",
    "StiffnessError", "SystemDef", "UnsupportedDimensionError", "classify_stability",
    "continue_branch", "continue_ns_curve", "continue_sn_curve", "deriv_lambda",
    "desingularized_residual", "detect_bifurcations", "eigenvalue_relation_check", "eigenvalues",
    "find_fixed_points", "flow", "flow_kick", "get_model", "hessian_x", "iterate_orbit",
    "jacobian_x", "make_klausmeier", "make_logistic", "make_predator_prey", "newton_fixed_point",
    "parse_expr", "parse_system", "second_deriv_xx", "stability_grid", "tc_curve_at_invariant",
]
