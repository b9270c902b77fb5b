"""Query-time rewrites: irrelevance pruning, deputation and evidence handling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .factor import ConvergentContext, Factor, restrict
from .model import (CONVERGENT, DEPUTY, REGULAR, CausalCPD, Network, Query, TableCPD, Variable,
                    check_query, expand_causal_cpd)


def _subnetwork(network: Network, keep) -> Network:
    """Induced subnetwork on ``keep`` with ids renumbered densely (order preserved)."""
    keep = sorted(keep)
    new_id = {old: i for i, old in enumerate(keep)}
    variables = []
    for old in keep:
        v = network.variables[old]
        dep = new_id.get(v.deputy_of) if v.deputy_of is not None else None
        variables.append(Variable(new_id[old], v.name, v.cardinality, v.kind, dep, v.states))
    return Network(tuple(variables), {new_id[c]: _reparent(cpd, new_id)
                                      for c, cpd in network.cpds.items() if c in new_id})


def _reparent(cpd, mapping, child=None):
    child = mapping.get(cpd.child, cpd.child) if child is None else child
    if isinstance(cpd, TableCPD):
        return TableCPD(child, tuple(mapping.get(p, p) for p in cpd.parents), cpd.probs)
    return CausalCPD(child, cpd.op,
                     tuple((mapping.get(p, p), t) for p, t in cpd.contributions), cpd.leak)


def prune_irrelevant(network: Network, query: Query) -> Network:
    """Subnetwork relevant to ``P(targets, evidence)``.

    Barren leaves outside the query are removed until none is left, then only
    ancestors of the query variables are kept. Variable ids are renumbered;
    names are preserved, so use :meth:`Query.remap` to carry the query over.
    """
    check_query(network, query)
    anchors = set(query.targets) | {v for v, _ in query.evidence}
    alive = set(range(len(network)))
    kids = {v: set(network.children(v)) for v in alive}
    changed = True
    while changed:
        changed = False
        for v in sorted(alive):
            if v not in anchors and not (kids[v] & alive):
                alive.discard(v)
                changed = True
    keep = set()
    stack = list(anchors)
    while stack:
        v = stack.pop()
        if v in keep:
            continue
        keep.add(v)
        stack.extend(network.parents(v))
    return _subnetwork(network, keep & alive)


def _deputy_name(name: str, taken: set) -> str:
    cand = name + "'"
    while cand in taken:
        cand += "'"
    return cand


def depute(network: Network) -> Network:
    """Give every convergent variable ``e`` a regular copy ``e'``.

    Children of ``e`` become children of ``e'``, and ``e'`` gets the identity
    CPD ``P(e'|e) = [e == e']``. Deputies take the ids after the existing ones.
    """
    conv = [v for v in network.variables if v.kind == CONVERGENT and network.deputy_of(v.id) is None]
    if not conv:
        return network
    n = len(network)
    taken = set(network.names)
    variables = list(network.variables)
    deputy = {}
    for i, e in enumerate(conv):
        name = _deputy_name(e.name, taken)
        taken.add(name)
        deputy[e.id] = n + i
        variables.append(Variable(n + i, name, e.cardinality, DEPUTY, e.id, e.states))
    cpds = {c: _reparent(cpd, deputy, child=c) for c, cpd in network.cpds.items()}
    for e, d in deputy.items():
        card = network.card(e)
        cpds[d] = TableCPD(d, (e,), np.eye(card))
    return Network(tuple(variables), cpds)


def build_factor_lists(network: Network) -> tuple[list[Factor], list[Factor]]:
    """Heterogeneous contribution factors and homogeneous table factors, by child id."""
    het, hom = [], []
    for v in network.variables:
        cpd = network.cpds[v.id]
        if isinstance(cpd, CausalCPD):
            het.extend(cpd.contribution_factors())
        else:
            hom.append(cpd.to_factor())
    return het, hom


@dataclass
class PreparedQuery:
    """A query ready for elimination.

    ``network`` is the working (pruned, possibly deputed) network and all ids
    below refer to it. ``evidence`` holds regular observations, already
    restricted out of every factor; ``deferred`` holds observations of
    convergent variables, applied when the variable is eliminated.
    ``to_source`` maps working ids of answer variables back to ``source`` ids.
    """

    source: Network
    network: Network
    targets: tuple[int, ...]
    evidence: dict[int, int]
    deferred: dict[int, int]
    heterogeneous: list[Factor]
    homogeneous: list[Factor]
    context: ConvergentContext
    deputed: bool
    to_source: dict[int, int] = field(default_factory=dict)

    def variables(self) -> set[int]:
        return {v for f in self.heterogeneous + self.homogeneous for v in f.scope}

    def to_eliminate(self) -> set[int]:
        return self.variables() - set(self.targets)

    def deputies(self) -> dict[int, int]:
        """Convergent variable -> deputy, over the working network."""
        return {v.deputy_of: v.id for v in self.network.variables if v.kind == DEPUTY}

    def name(self, v: int) -> str:
        return self.network.variables[v].name


def prepare_query(network: Network, query: Query, exploit_causal: bool = True) -> PreparedQuery:
    """Prune, depute and split evidence for ``query``.

    With ``exploit_causal=False`` every causal CPD is expanded to a table and
    no deputation happens, giving the input of plain variable elimination.
    """
    check_query(network, query)
    for v, _ in query.evidence:
        if network.variables[v].kind == DEPUTY:
            raise UsageError(f"cannot observe deputy variable {network.variables[v].name!r}")
    for v in query.targets:
        if network.variables[v].kind == DEPUTY:
            raise UsageError(f"cannot query deputy variable {network.variables[v].name!r}")
    pruned = prune_irrelevant(network, query)
    q = query.remap(network, pruned)
    if exploit_causal:
        work = depute(pruned)
        het, hom = build_factor_lists(work)
        dep = {v.deputy_of: v.id for v in work.variables if v.kind == DEPUTY}
        targets = tuple(dep.get(t, t) for t in q.targets)
        ctx = work.context()
    else:
        work = Network(tuple(Variable(v.id, v.name, v.cardinality, REGULAR, None, v.states)
                             for v in pruned.variables),
                       {c: expand_causal_cpd(cpd) if isinstance(cpd, CausalCPD) else cpd
                        for c, cpd in pruned.cpds.items()})
        het, hom = [], [work.cpds[v.id].to_factor() for v in work.variables]
        targets = q.targets
        ctx = ConvergentContext()
    regular, deferred = {}, {}
    for v, x in q.evidence:
        if exploit_causal and work.variables[v].kind == CONVERGENT:
            deferred[v] = x
        else:
            regular[v] = x
    for v, x in regular.items():
        het = [restrict(f, v, x) if v in f.scope else f for f in het]
        hom = [restrict(f, v, x) if v in f.scope else f for f in hom]
    to_source = {}
    for t in targets:
        var = work.variables[t]
        name = work.variables[var.deputy_of].name if var.kind == DEPUTY else var.name
        to_source[t] = network.id_of(name)
    return PreparedQuery(network, work, targets, regular, deferred, het, hom, ctx,
                         exploit_causal, to_source)
