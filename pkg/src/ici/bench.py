"""Random networks, random queries and cost-distribution sweeps.

Costs here are always computed symbolically (see
:func:`ici.ordering.estimate_cost`), so queries far too large to execute can
still be measured.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import csv
import io
from pathlib import Path
import statistics
from typing import Sequence

import numpy as np

from .errors import UsageError
from .model import Network, NetworkBuilder, Query
from .ops import BaseOp
from .ordering import HEURISTICS, elimination_ordering, estimate_cost
from .transform import prepare_query

# largest query cost treated as answerable in the summaries
ANSWERABLE_COST = 3145728


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of a random network.

    Nodes are laid out along a random topological order; each picks its
    parents among the ``parent_window`` nodes preceding it (all earlier
    nodes when ``None``). A node with at least one parent becomes convergent
    with probability ``convergent_fraction``; its base operator is drawn from
    ``ops`` among those valid for its cardinality. ``leak_probability`` is
    the chance that a convergent node gets a leak distribution.
    """

    nodes: int = 14
    max_parents: int = 3
    cardinality: tuple[int, int] = (2, 3)
    convergent_fraction: float = 0.4
    ops: tuple[str, ...] = ("or", "max")
    seed: int = 0
    leak_probability: float = 0.0
    parent_window: int | None = None
    mean_parents: float | None = None

    def problems(self) -> list[str]:
        out = []
        if self.nodes < 1:
            out.append("nodes must be at least 1")
        if not 0 <= self.max_parents < max(self.nodes, 1):
            out.append(f"max_parents must be in 0..{self.nodes - 1}")
        lo, hi = self.cardinality
        if not 1 <= lo <= hi:
            out.append("cardinality range must satisfy 1 <= min <= max")
        if not 0.0 <= self.convergent_fraction <= 1.0:
            out.append("convergent_fraction must lie in [0, 1]")
        if not 0.0 <= self.leak_probability <= 1.0:
            out.append("leak_probability must lie in [0, 1]")
        if self.convergent_fraction > 0 and not self.ops:
            out.append("an operator palette is needed for convergent nodes")
        for op in self.ops:
            BaseOp(op)
        if self.mean_parents is not None and self.mean_parents < 1:
            out.append("mean_parents must be at least 1")
        if self.parent_window is not None and self.parent_window < 1:
            out.append("parent_window must be positive")
        return out


PRESETS = {
    "small": GeneratorSpec(nodes=14, max_parents=3, cardinality=(2, 3), convergent_fraction=0.4,
                           ops=("or", "max"), leak_probability=0.5),
    "cpsc-like": GeneratorSpec(nodes=200, max_parents=8, cardinality=(2, 4), convergent_fraction=0.6,
                               ops=("max",), leak_probability=0.5, parent_window=40,
                               mean_parents=1.5),
}


def _dirichlet(rng, d: int) -> np.ndarray:
    p = rng.dirichlet(np.ones(d))
    return p / p.sum()


def _valid_ops(ops, card):
    return [op for op in ops if not BaseOp(op).problems(card)]


def generate_network(spec: GeneratorSpec) -> Network:
    """A random valid network, identical for identical specs."""
    bad = spec.problems()
    if bad:
        raise UsageError("infeasible generator spec: " + "; ".join(bad))
    rng = np.random.default_rng(spec.seed)
    n = spec.nodes
    position = rng.permutation(n)          # position[k] = id of the k-th node in topological order
    lo, hi = spec.cardinality
    cards = rng.integers(lo, hi + 1, size=n)
    b = NetworkBuilder()
    for i in range(n):
        b.variable(f"v{i}", int(cards[i]))
    for k in range(n):
        v = int(position[k])
        start = 0 if spec.parent_window is None else max(0, k - spec.parent_window)
        pool = [int(p) for p in position[start:k]]
        cap = min(spec.max_parents, len(pool))
        convergent = cap > 0 and rng.random() < spec.convergent_fraction
        if not cap:
            n_par = 0
        elif spec.mean_parents is None:
            n_par = int(rng.integers(1 if convergent else 0, cap + 1))
        else:
            n_par = min(cap, int(rng.geometric(1.0 / spec.mean_parents)))
        parents = sorted(int(p) for p in rng.choice(pool, size=n_par, replace=False)) if n_par else []
        card = int(cards[v])
        if convergent:
            ops = _valid_ops(spec.ops, card)
            if not ops:
                convergent = False
        if convergent:
            op = ops[int(rng.integers(len(ops)))]
            contribs = []
            for p in parents:
                rows = []
                for beta in range(int(cards[p])):
                    if beta == 0 and rng.random() < 0.5:
                        row = np.zeros(card)
                        row[0] = 1.0
                    else:
                        row = _dirichlet(rng, card)
                    rows.append(row)
                contribs.append((p, np.array(rows)))
            leak = _dirichlet(rng, card) if rng.random() < spec.leak_probability else None
            b.causal(v, op, contribs, leak)
        else:
            shape = tuple(int(cards[p]) for p in parents) + (card,)
            probs = rng.dirichlet(np.ones(card), size=shape[:-1]) if parents else _dirichlet(rng, card)
            b.table(v, parents, np.asarray(probs).reshape(shape))
    return b.build()


def noisy_or_star(m: int, prior: float = 0.5, strength: float = 0.8) -> Network:
    """Binary noisy-OR node ``e`` with ``m`` independent causes ``c1..cm``."""
    b = NetworkBuilder()
    causes = [b.variable(f"c{i + 1}") for i in range(m)]
    e = b.variable("e")
    for c in causes:
        b.prior(c, [1.0 - prior, prior])
    b.causal(e, "or", [(c, [[1.0, 0.0], [1.0 - strength, strength]]) for c in causes])
    return b.build()


@dataclass
class CostDistribution:
    """Costs of a population (variables or queries) in generation order."""

    costs: list[int] = field(default_factory=list)
    label: str = ""

    @property
    def points(self) -> list[tuple[int, int]]:
        """``(cost, cnv)``: how many members cost at most ``cost``, ascending."""
        out = []
        running = 0
        for cost, n in sorted(Counter(self.costs).items()):
            running += n
            out.append((cost, running))
        return out

    def mean(self) -> float:
        return float(statistics.fmean(self.costs)) if self.costs else 0.0

    def fraction_at_most(self, threshold: int) -> float:
        return sum(c <= threshold for c in self.costs) / len(self.costs) if self.costs else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cost", "cnv"])
        w.writerows(self.points)
        return buf.getvalue()

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv(), encoding="utf-8")
        return path

    def summary(self, threshold: int = ANSWERABLE_COST) -> str:
        if not self.costs:
            return f"{self.label}: empty"
        return (f"{self.label}: n={len(self.costs)} max={max(self.costs)} "
                f"median={statistics.median(self.costs):g} mean={self.mean():.6g} "
                f"answerable(<= {threshold})={self.fraction_at_most(threshold):.2%}")


def query_cost(network: Network, query: Query, heuristic: str = "mindef", engine: str = "ici") -> int:
    """Estimated cost (largest created factor) of ``query``."""
    if heuristic not in HEURISTICS:
        raise UsageError(f"unknown heuristic {heuristic!r}")
    prepared = prepare_query(network, query, exploit_causal=engine == "ici")
    return estimate_cost(prepared, elimination_ordering(prepared, heuristic)).max_size


def run_variable_cost_sweep(network: Network, heuristic: str = "mcs",
                            jobs: int = 1) -> tuple[CostDistribution, CostDistribution]:
    """Zero-observation marginal cost of every variable, with and without causal independence."""
    queries = [Query((v.id,)) for v in network.variables]
    ici = _costs(network, queries, heuristic, "ici", jobs)
    ve = _costs(network, queries, heuristic, "ve", jobs)
    return (CostDistribution(ici, f"variables ici {heuristic}"),
            CostDistribution(ve, f"variables ve {heuristic}"))


def random_queries(network: Network, k: int, n_queries: int, seed: int) -> list[Query]:
    """``n_queries`` queries with one uniform target and ``k`` uniform observations.

    Each query draws from its own generator seeded by ``(seed, k, index)``.
    """
    if not 0 <= k < len(network):
        raise UsageError(f"k must be in 0..{len(network) - 1}")
    out = []
    for i in range(n_queries):
        rng = np.random.default_rng([seed, k, i])
        picked = rng.choice(len(network), size=k + 1, replace=False)
        target, observed = int(picked[0]), sorted(int(v) for v in picked[1:])
        ev = tuple((v, int(rng.integers(network.card(v)))) for v in observed)
        out.append(Query((target,), ev))
    return out


def _cost_job(args):
    network, query, heuristic, engine = args
    return query_cost(network, query, heuristic, engine)


def _costs(network, queries, heuristic, engine, jobs):
    args = [(network, q, heuristic, engine) for q in queries]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_cost_job, args, chunksize=max(1, len(args) // (4 * jobs))))
    return [_cost_job(a) for a in args]


def run_query_cost_sweep(network: Network, k: int, n_queries: int, heuristic: str = "mindef",
                         seed: int = 0, jobs: int = 1,
                         queries: Sequence[Query] | None = None) -> CostDistribution:
    """ICI costs of random ``k``-observation queries (or of the given ``queries``)."""
    if queries is None:
        queries = random_queries(network, k, n_queries, seed)
    return CostDistribution(_costs(network, list(queries), heuristic, "ici", jobs),
                            f"k={k} ici {heuristic}")


def preset(name: str, seed: int | None = None) -> GeneratorSpec:
    if name not in PRESETS:
        raise UsageError(f"unknown generator preset {name!r}; expected one of {sorted(PRESETS)}")
    spec = PRESETS[name]
    return spec if seed is None else replace(spec, seed=seed)
