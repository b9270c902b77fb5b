"""Independent reference implementations and random-instance builders for the tests."""

from __future__ import annotations

from functools import lru_cache
import itertools
from pathlib import Path

import numpy as np

from ici import netfile
from ici.bench import GeneratorSpec, generate_network
from ici.factor import ConvergentContext, Factor
from ici.model import CONVERGENT, Network, Query
from ici.ops import BaseOp

ROOT = Path(__file__).resolve().parents[1]
FIG1 = ROOT / "fixtures" / "fig1.json"


def fig1() -> Network:
    return netfile.load(FIG1)


def brute_combine(f: Factor, g: Factor, ctx: ConvergentContext) -> Factor:
    """Combination by walking every cell of both operands.

    Shared convergent variables are convolved through their operator, all
    other variables must agree (shared) or are free (private).
    """
    cards = dict(zip(f.scope, f.cards))
    cards.update(zip(g.scope, g.cards))
    scope = sorted(cards)
    shared_conv = {v for v in f.scope if v in g.scope and v in ctx}
    out = np.zeros([cards[v] for v in scope])
    for fi in itertools.product(*map(range, f.cards)):
        fa = dict(zip(f.scope, fi))
        for gi in itertools.product(*map(range, g.cards)):
            ga = dict(zip(g.scope, gi))
            clash = any(fa[v] != ga[v] for v in fa if v in ga and v not in shared_conv)
            if clash:
                continue
            res = {**fa, **ga}
            for v in shared_conv:
                res[v] = ctx.op(v).apply(fa[v], ga[v], cards[v])
            out[tuple(res[v] for v in scope)] += f.values[fi] * g.values[gi]
    return Factor(tuple(scope), tuple(cards[v] for v in scope), out, True)


def functional_combine(f: np.ndarray, g: np.ndarray, op: BaseOp) -> np.ndarray:
    """Combination of two arrays whose axis 0 is the same convergent variable.

    Remaining axes of ``f`` and ``g`` are kept side by side (``f``'s first),
    the usual lifting of a value operator to functions of that variable.
    """
    d = f.shape[0]
    out = np.zeros((d,) + f.shape[1:] + g.shape[1:])
    for a1 in range(d):
        for a2 in range(d):
            out[op.apply(a1, a2, d)] += np.multiply.outer(f[a1], g[a2])
    return out


def direct_noisy_table(contributions, op: BaseOp, d: int, leak=None) -> np.ndarray:
    """``P(e | parents)`` by summing over every tuple of contribution values.

    Result shape is ``(*parent_cards, d)``.
    """
    tables = [np.asarray(t) for t in contributions]
    if leak is not None:
        tables.append(np.asarray(leak).reshape(1, d))
    pcards = [t.shape[0] for t in tables]
    out = np.zeros(pcards + [d])
    for conf in itertools.product(*map(range, pcards)):
        for alphas in itertools.product(range(d), repeat=len(tables)):
            p = 1.0
            for t, b, a in zip(tables, conf, alphas):
                p *= t[b, a]
            acc = alphas[0]
            for a in alphas[1:]:
                acc = op.apply(acc, a, d)
            out[conf + (acc,)] += p
    if leak is not None:
        out = out[..., 0, :]
    return out


def random_factor(rng, scope, cards, heterogeneous=True) -> Factor:
    return Factor.from_axes(scope, [cards[v] for v in scope],
                            rng.random([cards[v] for v in scope]), heterogeneous)


SUITE_SPEC = GeneratorSpec(nodes=14, max_parents=3, cardinality=(2, 3), convergent_fraction=0.4,
                           ops=("or", "max"), leak_probability=0.5)


def suite_network(i: int) -> Network:
    """The ``i``-th network of the equivalence suite (4..14 variables)."""
    rng = np.random.default_rng([2024, i])
    nodes = int(rng.integers(4, 15))
    spec = GeneratorSpec(nodes=nodes, max_parents=min(3, nodes - 1), cardinality=(2, 3),
                         convergent_fraction=0.4, ops=("or", "max"),
                         leak_probability=0.5 if i % 2 else 0.0, seed=1000 + i)
    return generate_network(spec)


def suite_queries(net: Network, i: int, n: int = 3) -> list[Query]:
    """Random queries with 1-2 targets and 0-4 observations."""
    rng = np.random.default_rng([7, i])
    out = []
    for _ in range(n):
        k = int(rng.integers(0, min(4, len(net) - 1) + 1))
        t = int(rng.integers(1, min(2, len(net) - k) + 1))
        picked = [int(v) for v in rng.choice(len(net), size=k + t, replace=False)]
        ev = tuple((v, int(rng.integers(net.card(v)))) for v in picked[t:])
        out.append(Query(tuple(picked[:t]), ev))
    return out


@lru_cache(maxsize=1)
def equivalence_suite(n_networks: int = 200):
    """``(network, query)`` pairs shared by the equivalence tests."""
    cases = []
    for i in range(n_networks):
        net = suite_network(i)
        cases += [(i, net, q) for q in suite_queries(net, i)]
    return tuple(cases)


def kinds(net: Network) -> dict[str, str]:
    return {v.name: v.kind for v in net.variables}


def has_convergent(net: Network) -> bool:
    return any(v.kind == CONVERGENT for v in net.variables)
