"""Rotation numbers of random circle maps near a parabolic point, and Lifshitz tails.

Importing the package registers the built-in lift families (``model``,
``rigid-translation``, ``rigid-rotation``, ``anderson``).
"""
from .errors import (
    AssumptionViolation,
    BudgetExhausted,
    ChartSingularity,
    ConfigError,
    InconclusiveOrderError,
    InsufficientData,
    LifshitzError,
    NumericOverflowError,
    ParameterDomainError,
)
from .kernels import BACKEND
from .dynamics import LiftFamily, eval_lift, get_family, iterate_orbit, verify_assumptions
from .disorder import DisorderMeasure, parse_measure, sample_word
from .rotation import estimate_rotation_number, rotation_bracket
from .bottleneck import BottleneckMap, bound_N1, bound_N2, measure_passage, scaling_sweep
from .anderson import AndersonModel, ids_rotation, ids_sturm
from .fitting import fit_lifshitz_exponent
from .experiment import ExperimentConfig, run_experiment

__version__ = "0.1.0"
