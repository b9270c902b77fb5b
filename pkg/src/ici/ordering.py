"""Legitimate elimination orderings and symbolic cost estimation.

An ordering is legitimate when every convergent variable is eliminated
before its deputy. Both greedy heuristics enforce this by eligibility: a
vertex that would break the constraint is simply not a candidate yet.
All ties are broken by ascending variable id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import heapq
import logging
import math
from typing import Iterable, Sequence

from .errors import UsageError
from .transform import PreparedQuery

log = logging.getLogger(__name__)

HEURISTICS = ("mcs", "mindef")


class InteractionGraph:
    """Undirected graph: ``u -- v`` iff both appear in some live factor."""

    def __init__(self, nodes: Iterable[int] = ()):
        self.adj: dict[int, set[int]] = {int(v): set() for v in nodes}

    @classmethod
    def from_scopes(cls, scopes: Iterable[Sequence[int]]) -> "InteractionGraph":
        g = cls()
        for scope in scopes:
            g.add_clique(scope)
        return g

    @classmethod
    def from_prepared(cls, prepared: PreparedQuery) -> "InteractionGraph":
        return cls.from_scopes(f.scope for f in prepared.heterogeneous + prepared.homogeneous)

    def add_clique(self, vs: Sequence[int]) -> None:
        vs = list(vs)
        for v in vs:
            self.adj.setdefault(v, set())
        for i, u in enumerate(vs):
            for v in vs[i + 1:]:
                if u != v:
                    self.adj[u].add(v)
                    self.adj[v].add(u)

    def add_edge(self, u: int, v: int) -> None:
        self.add_clique((u, v))

    @property
    def nodes(self) -> list[int]:
        return sorted(self.adj)

    def edges(self) -> set[tuple[int, int]]:
        return {(u, v) for u, ns in self.adj.items() for v in ns if u < v}

    def copy(self) -> "InteractionGraph":
        g = InteractionGraph()
        g.adj = {v: set(ns) for v, ns in self.adj.items()}
        return g


@dataclass(frozen=True)
class Constraints:
    """``keep``: variables never eliminated; ``deputy_of``: deputy -> convergent variable."""

    keep: frozenset = frozenset()
    deputy_of: dict = field(default_factory=dict)

    @classmethod
    def from_prepared(cls, prepared: PreparedQuery) -> "Constraints":
        live = prepared.variables()
        return cls(frozenset(prepared.targets),
                   {d: e for e, d in prepared.deputies().items() if d in live})


def order_max_cardinality(graph: InteractionGraph, constraints: Constraints = Constraints()) -> list[int]:
    """Maximum cardinality search, eliminating in reverse numbering order.

    Kept variables are numbered first (they are never eliminated). Because
    numbering runs from the end of the elimination ordering, a convergent
    variable only becomes eligible once its deputy has been numbered.
    """
    adj = graph.adj
    deputy = {e: d for d, e in constraints.deputy_of.items() if d in adj}
    count = {v: 0 for v in adj}
    numbered: set[int] = set()
    numbering: list[int] = []

    def number(v):
        numbered.add(v)
        numbering.append(v)
        for u in adj[v]:
            if u not in numbered:
                count[u] += 1
                if eligible(u):
                    heapq.heappush(heap, (-count[u], u))
        e = constraints.deputy_of.get(v)
        if e is not None and e in adj and e not in numbered:
            heapq.heappush(heap, (-count[e], e))

    def eligible(v):
        d = deputy.get(v)
        return d is None or d in numbered

    heap: list[tuple[int, int]] = []
    for v in sorted(constraints.keep & adj.keys()):
        number(v)
    for v in adj:
        if v not in numbered and eligible(v):
            heap.append((-count[v], v))
    heapq.heapify(heap)
    while heap:
        c, v = heapq.heappop(heap)
        if v in numbered or -c != count[v]:
            continue
        number(v)
    if len(numbered) != len(adj):
        raise UsageError("constraints leave some variable permanently ineligible")
    return [v for v in reversed(numbering) if v not in constraints.keep]


def _deficiency(adj: dict[int, set[int]], v: int) -> int:
    ns = adj[v]
    missing = 0
    for u in ns:
        missing += len(ns) - 1 - len(ns & adj[u])
    return missing // 2


def order_min_deficiency(graph: InteractionGraph, constraints: Constraints = Constraints()) -> list[int]:
    """Greedy minimum deficiency (fewest fill-in edges) elimination.

    A deputy becomes eligible only after its convergent variable has been
    eliminated; kept variables stay in the graph but are never chosen.
    """
    adj = {v: set(ns) for v, ns in graph.adj.items()}
    deputy = {e: d for d, e in constraints.deputy_of.items() if d in adj}
    keep = constraints.keep
    gone: set[int] = set()
    score = {}

    def eligible(v):
        if v in keep or v in gone:
            return False
        e = constraints.deputy_of.get(v)
        return e is None or e not in adj or e in gone

    heap = []
    for v in adj:
        score[v] = _deficiency(adj, v)
        if eligible(v):
            heap.append((score[v], v))
    heapq.heapify(heap)
    order = []
    todo = len([v for v in adj if v not in keep])
    while len(order) < todo:
        if not heap:
            raise UsageError("constraints leave some variable permanently ineligible")
        s, v = heapq.heappop(heap)
        if v in gone or s != score[v] or not eligible(v):
            continue
        order.append(v)
        gone.add(v)
        ns = adj.pop(v)
        touched = set(ns)
        for u in ns:
            adj[u].discard(v)
        for u in ns:
            new = ns - adj[u] - {u}
            if new:
                adj[u] |= new
                for w in new:
                    touched |= adj[w]
                touched |= adj[u]
        touched -= gone
        for u in touched:
            score[u] = _deficiency(adj, u)
            if eligible(u):
                heapq.heappush(heap, (score[u], u))
        d = deputy.get(v)
        if d is not None and eligible(d):
            heapq.heappush(heap, (score[d], d))
    return order


def legitimacy_problems(prepared: PreparedQuery, ordering: Sequence[int]) -> list[str]:
    """Why ``ordering`` cannot drive elimination for ``prepared`` (empty if legitimate)."""
    out = []
    pos = {}
    for i, v in enumerate(ordering):
        if v in pos:
            out.append(f"variable {v} appears twice")
        pos[v] = i
    need = prepared.to_eliminate()
    missing, extra = need - pos.keys(), pos.keys() - need
    if missing:
        out.append(f"ordering misses {sorted(missing)}")
    if extra:
        out.append(f"ordering has variables outside the elimination set {sorted(extra)}")
    for e, d in prepared.deputies().items():
        if d in pos and (e not in pos or pos[e] > pos[d]):
            out.append(f"deputy {prepared.name(d)} precedes its convergent variable {prepared.name(e)}")
    return out


def is_legitimate(prepared: PreparedQuery, ordering: Sequence[int]) -> bool:
    return not legitimacy_problems(prepared, ordering)


def check_ordering(prepared: PreparedQuery, ordering: Sequence[int]) -> None:
    problems = legitimacy_problems(prepared, ordering)
    if problems:
        raise UsageError("illegitimate elimination ordering: " + "; ".join(problems))


def elimination_ordering(prepared: PreparedQuery, heuristic: str = "mindef") -> list[int]:
    graph = InteractionGraph.from_prepared(prepared)
    cons = Constraints.from_prepared(prepared)
    if heuristic == "mcs":
        return order_max_cardinality(graph, cons)
    if heuristic == "mindef":
        return order_min_deficiency(graph, cons)
    raise UsageError(f"unknown heuristic {heuristic!r}; expected one of {HEURISTICS}")


@dataclass
class CostStep:
    variable: int | None
    name: str
    created_size: int
    width: int


@dataclass
class CostReport:
    """Sizes of the factors created while answering a query.

    One step per eliminated variable plus a final step (``variable`` None)
    for combining what is left. ``max_size`` is the cost of the query.
    """

    max_size: int = 1
    steps: list[CostStep] = field(default_factory=list)

    def add(self, variable, name, sizes, width) -> None:
        created = max(sizes, default=0)
        self.steps.append(CostStep(variable, name, created, width))
        self.max_size = max(self.max_size, created)

    def to_dict(self) -> dict:
        return {"max_size": self.max_size,
                "steps": [{"variable": s.name, "created_size": s.created_size, "width": s.width}
                          for s in self.steps]}


FINAL = "(final)"


def estimate_cost(prepared: PreparedQuery, ordering: Sequence[int]) -> CostReport:
    """Replay elimination on scopes only and report every created factor size.

    Creation points match the numeric engines: each intermediate of folding
    the pulled factors in list order, the product of the heterogeneous and
    homogeneous parts, the factor left after summing out or restricting, and
    the final answer.
    """
    check_ordering(prepared, ordering)
    cards = {v.id: v.cardinality for v in prepared.network.variables}
    for v in prepared.evidence:
        cards[v] = 1

    def size(scope):
        return math.prod(cards[v] for v in scope)

    het = {i: frozenset(f.scope) for i, f in enumerate(prepared.heterogeneous)}
    hom = {len(het) + i: frozenset(f.scope) for i, f in enumerate(prepared.homogeneous)}
    next_id = len(het) + len(hom)
    report = CostReport()

    def fold(scopes, sizes):
        acc = None
        for s in scopes:
            if acc is None:
                acc = s
            else:
                acc = acc | s
                sizes.append(size(acc))
        return acc

    for z in ordering:
        fs = [het.pop(i) for i in sorted(i for i, s in het.items() if z in s)]
        gs = [hom.pop(i) for i in sorted(i for i, s in hom.items() if z in s)]
        if not fs and not gs:
            log.warning("variable %s occurs in no factor; skipped", prepared.name(z))
            continue
        sizes: list[int] = []
        f, g = fold(fs, sizes), fold(gs, sizes)
        if f is not None and g is not None:
            both = f | g
            sizes.append(size(both))
        else:
            both = f if f is not None else g
        h = both - {z}
        sizes.append(size(h))
        (hom if f is None else het)[next_id] = h
        next_id += 1
        report.add(z, prepared.name(z), sizes, len(both))

    sizes = []
    f = fold([het[i] for i in sorted(het)], sizes)
    g = fold([hom[i] for i in sorted(hom)], sizes)
    if f is not None and g is not None:
        answer = f | g
        sizes.append(size(answer))
    else:
        answer = f if f is not None else (g if g is not None else frozenset())
    sizes.append(size(answer))
    report.add(None, FINAL, sizes, len(answer))
    return report
