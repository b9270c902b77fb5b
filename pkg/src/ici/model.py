"""Discrete Bayesian networks with table and causal-independence CPDs."""

from __future__ import annotations

from dataclasses import dataclass, field
import heapq
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import StructureError, UsageError
from .factor import ConvergentContext, Factor, combine_all
from .ops import BaseOp

REGULAR, CONVERGENT, DEPUTY = "regular", "convergent", "deputy"
NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    cardinality: int
    kind: str = REGULAR
    deputy_of: int | None = None
    states: tuple[str, ...] | None = None

    def value_index(self, token: str | int) -> int:
        """Resolve a state name or a decimal index to a value index."""
        if self.states and str(token) in self.states:
            return self.states.index(str(token))
        try:
            idx = int(token)
        except (TypeError, ValueError):
            raise UsageError(f"{self.name} has no value {token!r}") from None
        if not 0 <= idx < self.cardinality:
            raise UsageError(f"value {idx} out of range for {self.name} "
                             f"(cardinality {self.cardinality})")
        return idx

    def state_name(self, idx: int) -> str:
        return self.states[idx] if self.states else str(idx)


@dataclass(frozen=True, eq=False)
class TableCPD:
    """``P(child | parents)`` stored with shape ``(*parent_cards, child_card)``."""

    child: int
    parents: tuple[int, ...]
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(int(p) for p in self.parents))
        probs = np.array(self.probs, dtype=np.float64)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def to_factor(self) -> Factor:
        return Factor.from_axes(self.parents + (self.child,), self.probs.shape, self.probs)


@dataclass(frozen=True, eq=False)
class CausalCPD:
    """``P(child | parents)`` given as per-parent contribution distributions.

    Each contribution table has shape ``(parent_card, child_card)``: row
    ``b`` is the distribution of the contribution when the parent takes
    value ``b``. ``leak`` is an optional parentless contribution.
    """

    child: int
    op: BaseOp
    contributions: tuple[tuple[int, np.ndarray], ...]
    leak: np.ndarray | None = None

    def __post_init__(self):
        contribs = []
        for parent, table in self.contributions:
            arr = np.array(table, dtype=np.float64)
            arr.setflags(write=False)
            contribs.append((int(parent), arr))
        object.__setattr__(self, "contributions", tuple(contribs))
        if self.leak is not None:
            leak = np.array(self.leak, dtype=np.float64)
            leak.setflags(write=False)
            object.__setattr__(self, "leak", leak)

    @property
    def parents(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.contributions)

    def context(self) -> ConvergentContext:
        return ConvergentContext({self.child: self.op})

    def contribution_factors(self) -> list[Factor]:
        """Heterogeneous factors ``f_i(child, parent_i)``, leak last."""
        out = [Factor.from_axes((p, self.child), t.shape, t, heterogeneous=True)
               for p, t in self.contributions]
        if self.leak is not None:
            out.append(Factor((self.child,), self.leak.shape, self.leak, heterogeneous=True))
        return out


CPD = Union[TableCPD, CausalCPD]


@dataclass(frozen=True, eq=False)
class Network:
    """Variables indexed by ``id`` (``variables[i].id == i``) and one CPD per variable."""

    variables: tuple[Variable, ...]
    cpds: Mapping[int, CPD] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "cpds", dict(self.cpds))
        object.__setattr__(self, "_by_name", {v.name: v.id for v in self.variables})

    def __len__(self):
        return len(self.variables)

    def var(self, key: int | str) -> Variable:
        if isinstance(key, str):
            if key not in self._by_name:
                raise UsageError(f"unknown variable {key!r}")
            key = self._by_name[key]
        if not 0 <= key < len(self.variables):
            raise UsageError(f"unknown variable id {key}")
        return self.variables[key]

    def id_of(self, name: str) -> int:
        return self.var(name).id

    def has(self, name: str) -> bool:
        return name in self._by_name

    def card(self, v: int) -> int:
        return self.variables[v].cardinality

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def parents(self, v: int) -> tuple[int, ...]:
        cpd = self.cpds.get(v)
        return () if cpd is None else cpd.parents

    def children(self, v: int) -> list[int]:
        return [c for c, cpd in sorted(self.cpds.items()) if v in cpd.parents]

    def convergent(self) -> list[int]:
        return [v.id for v in self.variables if v.kind == CONVERGENT]

    def deputy_of(self, e: int) -> int | None:
        for v in self.variables:
            if v.deputy_of == e:
                return v.id
        return None

    def context(self) -> ConvergentContext:
        ops = {c: cpd.op for c, cpd in self.cpds.items() if isinstance(cpd, CausalCPD)}
        return ConvergentContext(ops, frozenset(self.convergent()))


@dataclass(frozen=True)
class Query:
    """``P(targets, evidence)`` with evidence given as ``(variable id, value index)`` pairs."""

    targets: tuple[int, ...] = ()
    evidence: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        ev = self.evidence.items() if isinstance(self.evidence, Mapping) else self.evidence
        object.__setattr__(self, "evidence", tuple((int(v), int(x)) for v, x in ev))

    @classmethod
    def from_names(cls, network: Network, targets: Sequence[str] = (),
                   evidence: Mapping[str, str | int] | Sequence[tuple[str, str | int]] = ()) -> "Query":
        items = evidence.items() if isinstance(evidence, Mapping) else evidence
        ev = []
        for name, val in items:
            var = network.var(name)
            ev.append((var.id, var.value_index(val)))
        q = cls(tuple(network.id_of(t) for t in targets), tuple(ev))
        check_query(network, q)
        return q

    @property
    def evidence_dict(self) -> dict[int, int]:
        return dict(self.evidence)

    def to_names(self, network: Network) -> tuple[list[str], list[tuple[str, int]]]:
        return ([network.var(t).name for t in self.targets],
                [(network.var(v).name, x) for v, x in self.evidence])

    def remap(self, src: Network, dst: Network) -> "Query":
        """The same query expressed in the ids of ``dst`` (matched by name)."""
        targets, ev = self.to_names(src)
        return Query(tuple(dst.id_of(t) for t in targets),
                     tuple((dst.id_of(n), x) for n, x in ev))


def check_query(network: Network, query: Query) -> None:
    seen = set()
    for t in query.targets:
        network.var(t)
        if t in seen:
            raise UsageError(f"variable {network.var(t).name!r} listed twice in the query")
        seen.add(t)
    for v, x in query.evidence:
        var = network.var(v)
        if v in seen:
            raise UsageError(f"variable {var.name!r} is both a target and observed, or observed twice")
        seen.add(v)
        if not 0 <= x < var.cardinality:
            raise UsageError(f"value {x} out of range for {var.name!r}")


class NetworkBuilder:
    """Incremental construction by variable name; kinds are derived from the CPDs."""

    def __init__(self):
        self._vars: list[tuple[str, int, tuple[str, ...] | None]] = []
        self._ids: dict[str, int] = {}
        self._cpds: dict[int, CPD] = {}

    def variable(self, name: str, cardinality: int = 2, states: Sequence[str] | None = None) -> int:
        if name in self._ids:
            raise UsageError(f"duplicate variable name {name!r}")
        self._ids[name] = len(self._vars)
        self._vars.append((name, int(cardinality), tuple(states) if states else None))
        return self._ids[name]

    def _id(self, v: int | str) -> int:
        if isinstance(v, str):
            if v not in self._ids:
                raise UsageError(f"unknown variable {v!r}")
            return self._ids[v]
        return int(v)

    def table(self, child, parents=(), probs=None) -> "NetworkBuilder":
        """Add ``P(child | parents)``; ``probs`` has shape ``(*parent_cards, child_card)``."""
        self._cpds[self._id(child)] = TableCPD(self._id(child), tuple(self._id(p) for p in parents),
                                               np.asarray(probs, dtype=np.float64))
        return self

    def prior(self, child, probs) -> "NetworkBuilder":
        return self.table(child, (), probs)

    def causal(self, child, op: BaseOp | str, contributions, leak=None) -> "NetworkBuilder":
        """Add a causal CPD; ``contributions`` is a sequence of ``(parent, table)`` pairs."""
        if isinstance(op, str):
            op = BaseOp(op)
        contribs = tuple((self._id(p), t) for p, t in contributions)
        self._cpds[self._id(child)] = CausalCPD(self._id(child), op, contribs, leak)
        return self

    def build(self) -> Network:
        variables = []
        for i, (name, card, states) in enumerate(self._vars):
            kind = CONVERGENT if isinstance(self._cpds.get(i), CausalCPD) else REGULAR
            variables.append(Variable(i, name, card, kind, None, states))
        return Network(tuple(variables), self._cpds)


def _has_cycle(network: Network) -> bool:
    try:
        topological_order(network)
    except StructureError:
        return True
    return False


def topological_order(network: Network) -> list[int]:
    """Parents before children; among ready variables the smallest id goes first."""
    n = len(network)
    indeg = [0] * n
    kids: list[list[int]] = [[] for _ in range(n)]
    for child, cpd in network.cpds.items():
        for p in set(cpd.parents):
            if 0 <= p < n:
                indeg[child] += 1
                kids[p].append(child)
    ready = [v for v in range(n) if indeg[v] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for c in kids[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(ready, c)
    if len(order) != n:
        raise StructureError("network is not a DAG")
    return order


def _check_distribution(arr: np.ndarray, what: str) -> list[str]:
    if not np.all(np.isfinite(arr)):
        return [f"{what} has non-finite entries"]
    if np.any(arr < 0):
        return [f"{what} has negative entries"]
    sums = arr.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > NORMALIZATION_TOL):
        return [f"{what} not a distribution (sums {np.round(sums, 12).tolist()})"]
    return []


def validate(network: Network) -> list[str]:
    """All invariant violations of ``network`` as messages; empty means valid."""
    out = []
    vs = network.variables
    n = len(vs)
    names = set()
    for i, v in enumerate(vs):
        if v.id != i:
            out.append(f"variable {v.name!r} has id {v.id}, expected {i}")
        if v.cardinality < 1:
            out.append(f"variable {v.name!r} has cardinality {v.cardinality}")
        if v.name in names:
            out.append(f"duplicate variable name {v.name!r}")
        names.add(v.name)
        if v.kind not in (REGULAR, CONVERGENT, DEPUTY):
            out.append(f"variable {v.name!r} has unknown kind {v.kind!r}")
        if (v.kind == DEPUTY) != (v.deputy_of is not None):
            out.append(f"variable {v.name!r}: deputy_of must be set exactly for deputies")
        elif v.kind == DEPUTY:
            if not 0 <= v.deputy_of < n or vs[v.deputy_of].kind != CONVERGENT:
                out.append(f"deputy {v.name!r} does not stand for a convergent variable")
            elif vs[v.deputy_of].cardinality != v.cardinality:
                out.append(f"deputy {v.name!r} differs in cardinality from its convergent variable")
        if v.states is not None and len(v.states) != v.cardinality:
            out.append(f"variable {v.name!r} lists {len(v.states)} states for cardinality {v.cardinality}")
    if out:
        return out

    for v in vs:
        cpd = network.cpds.get(v.id)
        if cpd is None:
            out.append(f"variable {v.name!r} has no CPD")
            continue
        if cpd.child != v.id:
            out.append(f"CPD stored under {v.name!r} is for variable {cpd.child}")
            continue
        bad_parents = [p for p in cpd.parents if not 0 <= p < n]
        if bad_parents:
            out.append(f"CPD of {v.name!r} references unknown parents {bad_parents}")
            continue
        if len(set(cpd.parents)) != len(cpd.parents):
            out.append(f"CPD of {v.name!r} lists a parent twice")
            continue
        if isinstance(cpd, TableCPD):
            if v.kind == CONVERGENT:
                out.append(f"convergent variable {v.name!r} has a table CPD")
            shape = tuple(vs[p].cardinality for p in cpd.parents) + (v.cardinality,)
            if cpd.probs.shape != shape:
                out.append(f"table of {v.name!r} has shape {cpd.probs.shape}, expected {shape}")
            else:
                out += _check_distribution(cpd.probs, f"table of {v.name!r}")
        else:
            if v.kind != CONVERGENT:
                out.append(f"{v.kind} variable {v.name!r} has a causal CPD")
            if not cpd.contributions:
                out.append(f"causal CPD of {v.name!r} has no contributions")
            for p, t in cpd.contributions:
                shape = (vs[p].cardinality, v.cardinality)
                what = f"contribution of {vs[p].name!r} to {v.name!r}"
                if t.shape != shape:
                    out.append(f"{what} has shape {t.shape}, expected {shape}")
                else:
                    out += _check_distribution(t, what)
            if cpd.leak is not None:
                if cpd.leak.shape != (v.cardinality,):
                    out.append(f"leak of {v.name!r} has shape {cpd.leak.shape}")
                else:
                    out += _check_distribution(cpd.leak, f"leak of {v.name!r}")
            out += [f"{v.name!r}: {msg}" for msg in cpd.op.problems(v.cardinality)]
    extra = sorted(set(network.cpds) - set(range(n)))
    if extra:
        out.append(f"CPDs for unknown variables {extra}")
    if not out and _has_cycle(network):
        out.append("network is not a DAG")
    return out


def expand_causal_cpd(cpd: CausalCPD) -> TableCPD:
    """The full table ``P(child | parents)`` obtained by combining the contributions."""
    f = combine_all(cpd.contribution_factors(), cpd.context())
    axes = cpd.parents + (cpd.child,)
    perm = [f.scope.index(v) for v in axes]
    return TableCPD(cpd.child, cpd.parents, np.transpose(f.values, perm))


def table_cpd(network: Network, v: int) -> TableCPD:
    """CPD of ``v`` as a table, expanding causal CPDs."""
    cpd = network.cpds[v]
    return expand_causal_cpd(cpd) if isinstance(cpd, CausalCPD) else cpd
