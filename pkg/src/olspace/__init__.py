"""Step-function calculus, Luxemburg norms and certified witness constructions for Orlicz-Lorentz spaces."""
from . import kernels
from .measure import (DecreasingStep, Interval, IntervalSet, MeasureError, StepFunction, dilate, distribution,
                      equimeasurable_check, rearrange)
from .orlicz import (ConditionVerdict, ConvexSpline, ExpMinusOne, IneqSequence, OrliczFn, Parsed, Power, PowerLog,
                     SearchExhausted, ValidationError, delta2_check, delta2_lK_check, delta_phi_check, order_check)
from .space import NormResult, SpaceSpec, ZeroFunction, luxemburg_norm, modular, norm
from .weights import Constant, ParsedWeight, PiecewiseDecreasing, PowerWeight, WeightFn, partition_by_mass, ratio_limit
from .compare import dominating_weight, dss_check, inclusion_orlicz_check, inclusion_weight_check
from .witness import (WitnessBundle, non_inclusion_witness, non_order_continuous_witness, spaceable_witness_infty,
                      spaceable_witness_mixed, spaceable_witness_zero, strict_lorentz_witness, verify_bundle)

__version__ = "0.1.0"
