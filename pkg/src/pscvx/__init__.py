"""Sampled numerical checks of pseudoconvexity conditions for domains in C^N
whose boundaries are piecewise-smooth graphs with real and complex edges."""

from .barrier import Barrier, build_barrier, compute_lambda, lemma_decomposition, shrink_for_bound
from .discs import (
    AnalyticDisc,
    DiscFamily,
    cauchy_extend,
    find_concavity_direction,
    fit_disc_parameters,
    witness_non_domain,
)
from .domain import (
    GraphDomainSpec,
    classify_boundary_point,
    inside_margin,
    membership,
    validate_spec,
)
from .edges import (
    Cone,
    cone_convexity,
    derivative_jump,
    edge_type,
    is_generic,
    power_straighten,
    tangent_cone,
)
from .errors import PscvxError
from .expr import eval_jet, evaluate, parse
from .hermitian import HermitianForm, levi_form, psd_check, restrict_to_kernel, wirtinger_gradient
from .jets import Jet2
from .kernels import BACKEND
from .psh import (
    Bump,
    coordinate_inequality_test,
    distributional_levi_test,
    jump_identity_residual,
    submean_test,
    verify_psh,
)
from .report import run_check
from .specio import dump_spec, load_spec

__version__ = "0.1.0"

__all__ = [
    "AnalyticDisc", "BACKEND", "Barrier", "Bump", "Cone", "DiscFamily", "GraphDomainSpec",
    "HermitianForm", "Jet2", "PscvxError", "build_barrier", "cauchy_extend",
    "classify_boundary_point", "compute_lambda", "cone_convexity", "coordinate_inequality_test",
    "derivative_jump", "distributional_levi_test", "dump_spec", "edge_type", "eval_jet", "evaluate",
    "find_concavity_direction", "fit_disc_parameters", "inside_margin", "is_generic",
    "jump_identity_residual", "lemma_decomposition", "levi_form", "load_spec", "membership", "parse",
    "power_straighten", "psd_check", "restrict_to_kernel", "run_check", "shrink_for_bound",
    "submean_test", "tangent_cone", "validate_spec", "verify_psh", "wirtinger_gradient",
    "witness_non_domain",
]
