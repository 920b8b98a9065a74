"""Schatten classes of operator fields over a discretized compact space.

Operators on Hilbert C(X)-modules are modeled as matrix fields over a
finite grid; the package computes C(X)-valued Schatten norms, traces,
Fredholm determinants and zeta functions, and checks the identities and
inequalities relating them.
"""

from .base import ConvergenceReport, Grid, ScalarField, dini_monitor, sup_norm
from .opfield import (
    OperatorField,
    VectorField,
    abs_power,
    adjoint,
    compose,
    continuity_modulus,
    functional_calculus,
    inner,
    localize,
    pos_power,
)
from .schatten import check_hoelder, check_trace_cyclic, hs_inner, schatten_norm, schatten_norm_field, trace_field
from .frames import (
    Frame,
    ModuleSpec,
    conjugate_by_transform,
    frame_residual,
    frame_trace_series,
    frame_transform,
    pou_frame,
    projected_frame,
    trace_via_frame,
)
from .approx import compactness_certificate, truncate, truncated_corner_bound, truncation_bound
from .fredholm import (
    check_det_invertibility,
    check_det_multiplicative,
    det_exterior_series,
    det_field,
    det_lipschitz_check,
    det_log_series,
)
from .zeta import (
    eigenvalue_fields,
    jensen_cahen_tail,
    residue_estimate,
    zeta_uniform_continuity_probe,
)
from .cycles import (
    KKCycle,
    circle_crossed_product_cycle,
    external_product_check,
    index_cycle,
    sphere_embedding_cycle,
    summability_report,
    trivial_fibration_cycle,
)

__version__ = "0.1.0"
