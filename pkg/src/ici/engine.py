"""Query answering: the causal-independence eliminator and plain variable elimination."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
import logging
from typing import Sequence

from .errors import ImpossibleEvidenceError, UsageError
from .factor import Factor, combine_general, multiply, restrict, sum_out
from .model import Network, Query
from .ordering import FINAL, CostReport, check_ordering, elimination_ordering
from .transform import PreparedQuery, prepare_query

log = logging.getLogger(__name__)

ENGINES = ("ici", "ve", "oracle")


@dataclass
class InferenceResult:
    """``answer`` is ``P(X, Y=Y0)`` over ids of the original network."""

    answer: Factor
    cost: CostReport | None = None
    ordering: list[int] | None = None

    @property
    def evidence_probability(self) -> float:
        """``P(Y=Y0)``, the total mass of the answer."""
        return float(self.answer.values.sum())


class _FactorPool:
    """Live factors indexed by variable, returned in creation order."""

    def __init__(self, factors: Sequence[Factor] = ()):
        self.factors: dict[int, Factor] = {}
        self.by_var: dict[int, set[int]] = defaultdict(set)
        self._next = 0
        for f in factors:
            self.add(f)

    def add(self, f: Factor) -> None:
        self.factors[self._next] = f
        for v in f.scope:
            self.by_var[v].add(self._next)
        self._next += 1

    def take(self, v: int) -> list[Factor]:
        ids = sorted(self.by_var.pop(v, ()))
        out = []
        for i in ids:
            f = self.factors.pop(i)
            for u in f.scope:
                if u != v:
                    self.by_var[u].discard(i)
            out.append(f)
        return out

    def rest(self) -> list[Factor]:
        return [self.factors[i] for i in sorted(self.factors)]


class _Recorder:
    def __init__(self):
        self.sizes: list[int] = []

    def fold(self, factors, op):
        acc = None
        for f in factors:
            if acc is None:
                acc = f
            else:
                acc = op(acc, f)
                self.sizes.append(acc.size)
        return acc

    def note(self, f: Factor) -> Factor:
        self.sizes.append(f.size)
        return f


def _finish(prepared: PreparedQuery, answer: Factor) -> Factor:
    # the evidence axes are gone already; rename deputies of targets back
    return answer.relabel(prepared.to_source).retag(False)


def ici_query(prepared: PreparedQuery, ordering: Sequence[int]) -> InferenceResult:
    """Answer a prepared (deputed) query by eliminating ``ordering`` in turn.

    For each variable the heterogeneous factors mentioning it are combined
    with the general operator and the homogeneous ones multiplied. The
    variable is then summed out, or restricted to its observed value when it
    is a convergent evidence variable. The result goes back to the
    homogeneous list only when no heterogeneous factor took part.
    """
    check_ordering(prepared, ordering)
    ctx = prepared.context
    het = _FactorPool(prepared.heterogeneous)
    hom = _FactorPool(prepared.homogeneous)

    def combine(a, b):
        return combine_general(a, b, ctx)

    report = CostReport()
    for z in ordering:
        fs, gs = het.take(z), hom.take(z)
        if not fs and not gs:
            log.warning("variable %s occurs in no factor; skipped", prepared.name(z))
            continue
        rec = _Recorder()
        f = rec.fold(fs, combine)
        g = rec.fold(gs, multiply)
        both = rec.note(multiply(f, g)) if f is not None and g is not None else (f if f is not None else g)
        if z in prepared.deferred:
            h = restrict(both, z, prepared.deferred[z])
        else:
            h = sum_out(both, z)
        rec.note(h)
        (hom if f is None else het).add(h.retag(f is not None))
        report.add(z, prepared.name(z), rec.sizes, len(both.scope))

    rec = _Recorder()
    f = rec.fold(het.rest(), combine)
    g = rec.fold(hom.rest(), multiply)
    if f is not None and g is not None:
        answer = rec.note(multiply(f, g))
    else:
        answer = f if f is not None else (g if g is not None else Factor.scalar())
    rec.note(answer)
    report.add(None, FINAL, rec.sizes, len(answer.scope))
    return InferenceResult(_finish(prepared, answer), report, list(ordering))


def ve_query(prepared: PreparedQuery, ordering: Sequence[int]) -> InferenceResult:
    """Classical variable elimination over a prepared query without deputation."""
    if prepared.heterogeneous:
        raise UsageError("ve_query needs a query prepared with exploit_causal=False")
    check_ordering(prepared, ordering)
    pool = _FactorPool(prepared.homogeneous)
    report = CostReport()
    for z in ordering:
        gs = pool.take(z)
        if not gs:
            log.warning("variable %s occurs in no factor; skipped", prepared.name(z))
            continue
        rec = _Recorder()
        g = rec.fold(gs, multiply)
        h = rec.note(sum_out(g, z))
        pool.add(h)
        report.add(z, prepared.name(z), rec.sizes, len(g.scope))
    rec = _Recorder()
    answer = rec.fold(pool.rest(), multiply)
    answer = Factor.scalar() if answer is None else answer
    rec.note(answer)
    report.add(None, FINAL, rec.sizes, len(answer.scope))
    return InferenceResult(_finish(prepared, answer), report, list(ordering))


def posterior(result: InferenceResult | Factor) -> Factor:
    """Normalise ``P(X, Y=Y0)`` to ``P(X | Y=Y0)``."""
    f = result.answer if isinstance(result, InferenceResult) else result
    total = float(f.values.sum())
    if not total > 0.0:
        raise ImpossibleEvidenceError("the evidence has probability zero")
    return Factor(f.scope, f.cards, f.values / total, f.heterogeneous)


def infer(network: Network, query: Query, engine: str = "ici", heuristic: str = "mindef",
          bound: int | None = None) -> InferenceResult:
    """Prepare, order and run ``query`` with the chosen engine."""
    if engine == "oracle":
        from .oracle import DEFAULT_BOUND, oracle_query
        return InferenceResult(oracle_query(network, query, bound or DEFAULT_BOUND))
    if engine not in ENGINES:
        raise UsageError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    prepared = prepare_query(network, query, exploit_causal=engine == "ici")
    ordering = elimination_ordering(prepared, heuristic)
    run = ici_query if engine == "ici" else ve_query
    return run(prepared, ordering)
