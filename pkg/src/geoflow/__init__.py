"""Time changes of the geodesic flow on a compact hyperbolic surface."""
from .boundary_geom import busemann, cross_ratio, dynamical_cross_ratio, gromov_product
from .contact_forms import (ALPHA, ALPHA_MINUS, ALPHA_PLUS, alpha_psi, cb_value, line_integral,
                            quadrilateral_path, reeb_defect, stokes_residual)
from .experiments import ExperimentReport
from .fuchsian import Bump, InvariantObservable, constant_observable, liouville_sample, octagon_group
from .lie_core import CONVENTION, GroupElement, endpoints, flow, quadrilateral_close
from .reparam import (QuadratureSpec, busemann_psi, cross_ratio_psi, h_delta, parry_cocycle,
                      reparam_flow, tau_delta)

__all__ = [
    "ALPHA", "ALPHA_MINUS", "ALPHA_PLUS", "Bump", "CONVENTION", "ExperimentReport", "GroupElement",
    "InvariantObservable", "QuadratureSpec", "alpha_psi", "busemann", "busemann_psi", "cb_value",
    "constant_observable", "cross_ratio", "cross_ratio_psi", "dynamical_cross_ratio", "endpoints",
    "flow", "gromov_product", "h_delta", "line_integral", "liouville_sample", "octagon_group",
    "parry_cocycle", "quadrilateral_close", "quadrilateral_path", "reeb_defect", "reparam_flow",
    "stokes_residual", "tau_delta",
]
