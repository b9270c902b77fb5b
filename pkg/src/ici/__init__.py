"""Exact inference in Bayesian networks with causal independence.

Noisy-OR/MAX style CPDs are kept factorised into per-parent contributions
and eliminated with a heterogeneous combination operator, after giving each
convergent variable a deputy and constraining the elimination ordering.
"""

from .engine import InferenceResult, ici_query, infer, posterior, ve_query
from .errors import (ConfigurationError, IciError, ImpossibleEvidenceError, ParseError,
                     ResourceBoundError, StructureError, UsageError, ValidationError)
from .factor import (ConvergentContext, Factor, combine_general, multiply, restrict, sum_out)
from .model import (CausalCPD, Network, NetworkBuilder, Query, TableCPD, Variable,
                    expand_causal_cpd, topological_order, validate)
from .ops import AND, MAX, OR, SUM, BaseOp
from .oracle import joint_enumeration, oracle_query
from .ordering import (CostReport, InteractionGraph, elimination_ordering, estimate_cost,
                       order_max_cardinality, order_min_deficiency)
from .transform import PreparedQuery, build_factor_lists, depute, prepare_query, prune_irrelevant

__version__ = "0.1.0"
