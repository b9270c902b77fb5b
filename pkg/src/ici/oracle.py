"""Ground truth by full joint enumeration.

Deliberately naive: every CPD is expanded to a table and multiplied into one
joint factor, then evidence is sliced and the rest summed away. No pruning,
deputation or ordering logic is shared with the engines.
"""

from __future__ import annotations

import math

from .errors import ResourceBoundError
from .factor import Factor, multiply, restrict, sum_out
from .model import DEPUTY, Network, Query, check_query, table_cpd

DEFAULT_BOUND = 2 ** 24


def joint_enumeration(network: Network, bound: int = DEFAULT_BOUND) -> Factor:
    """The joint distribution over every variable of ``network``.

    Deputies, if present, are included like any other variable.
    """
    cells = math.prod(v.cardinality for v in network.variables)
    if cells > bound:
        raise ResourceBoundError(f"joint table needs {cells} cells, bound is {bound}")
    joint = Factor.scalar()
    for v in network.variables:
        joint = multiply(joint, table_cpd(network, v.id).to_factor())
    return joint


def oracle_query(network: Network, query: Query, bound: int = DEFAULT_BOUND) -> Factor:
    """``P(X, Y=Y0)`` by slicing and summing the joint table."""
    check_query(network, query)
    f = joint_enumeration(network, bound)
    for v, x in query.evidence:
        f = restrict(f, v, x)
    keep = set(query.targets)
    for v in list(f.scope):
        if v not in keep:
            f = sum_out(f, v)
    return f


def marginalize_deputies(network: Network, joint: Factor) -> Factor:
    """Sum every deputy variable out of a joint over a deputed network."""
    for v in network.variables:
        if v.kind == DEPUTY and v.id in joint.scope:
            joint = sum_out(joint, v.id)
    return joint
