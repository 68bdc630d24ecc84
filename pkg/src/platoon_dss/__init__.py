"""Integral-action platoon control with disturbance string stability certificates."""

from .bounds import BoundInputs, DssBound, eval_bound, bound_curve
from .conditions import ConditionReport, build_transform, check_conditions, jacobian_blocks
from .controller import GainSet, REFERENCE_GAINS
from .model import PlatoonConfig, sample_scenario
from .simulator import run_scenario, string_sweep, verify_bound
from .synthesis import SearchSpec, synthesize

__version__ = "0.1.0"
