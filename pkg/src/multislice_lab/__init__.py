"""Functional-inequality constants of the multislice and colored exclusion."""

from .bounds import bound_main, bounds_report, recursive_upper
from .constants import (
    Budget,
    ConstantEstimate,
    build_generator,
    comparison_constant,
    lsc_estimate,
    mlsc_estimate,
    poincare_constant,
)
from .core import ColorProfile, StateSpace, WeightedGraph, graph_by_name
from .errors import (
    CapExceededError,
    DegenerateSpaceError,
    DomainError,
    GraphError,
    HorizonError,
    MalformedStateError,
    MultisliceError,
    OptimizationError,
    ProfileError,
    ReducibleOperatorError,
)
from .functionals import Observable, dirichlet_form, entropy, variance
from .isoperimetry import brute_force_iota, candidate_bound

__version__ = "0.1.0"
