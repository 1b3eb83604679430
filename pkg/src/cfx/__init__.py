"""Componental operators on product spaces: property checks and iterative solvers."""

from . import operators, problems, product_space, property_checks, solvers
from .errors import (
    CfxError,
    DegenerateColumnError,
    DegenerateConstraintError,
    DivergenceError,
    GenerationError,
    InputError,
    ParameterError,
    PreconditionError,
    SamplingError,
    ShapeError,
    WeightError,
)
from .operators import OperatorSpec, WeightMatrix, apply, apply_component
from .problems import CfpInstance, LinearSystem, plant_consistent_system
from .product_space import BlockStructure, ProductVector
from .property_checks import FixedPointCertificate, PropertyReport, Sampler
from .solvers import IterationHistory, StopRule, solve

__version__ = "0.1.0"
