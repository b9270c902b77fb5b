"""Dense factors and the factor algebra used by every engine.

A :class:`Factor` stores a numpy array whose axes follow ``scope``, which is
kept sorted by variable id. Two factors over the same variables therefore
have identical layouts and can be compared cell by cell.

Heterogeneous combination generalises ordinary multiplication: for every
convergent variable shared by both operands the values are convolved through
that variable's base operator, every other variable is aligned pointwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, ResourceBoundError, UsageError
from .ops import BaseOp

# numpy.einsum accepts at most 52 distinct sublist labels
_MAX_LABELS = 52


@dataclass(frozen=True, eq=False)
class Factor:
    scope: tuple[int, ...]
    cards: tuple[int, ...]
    values: np.ndarray
    heterogeneous: bool = False

    def __post_init__(self):
        scope = tuple(int(v) for v in self.scope)
        cards = tuple(int(c) for c in self.cards)
        values = np.asarray(self.values, dtype=np.float64)
        if len(scope) != len(cards):
            raise ValueError("scope and cards differ in length")
        if any(b <= a for a, b in zip(scope, scope[1:])):
            raise ValueError(f"scope must be strictly ascending, got {scope}")
        if values.size != math.prod(cards):
            raise ValueError(f"{values.size} values for cardinalities {cards}")
        values = values.reshape(cards)
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "cards", cards)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_axes(cls, variables: Sequence[int], cards: Sequence[int], values,
                  heterogeneous: bool = False) -> "Factor":
        """Build a factor whose array axes follow ``variables`` in any order."""
        variables = [int(v) for v in variables]
        if len(set(variables)) != len(variables):
            raise ValueError(f"duplicate variables in {variables}")
        arr = np.asarray(values, dtype=np.float64).reshape(tuple(cards))
        perm = sorted(range(len(variables)), key=variables.__getitem__)
        return cls(tuple(variables[i] for i in perm), tuple(cards[i] for i in perm),
                   np.transpose(arr, perm), heterogeneous)

    @classmethod
    def scalar(cls, value: float = 1.0, heterogeneous: bool = False) -> "Factor":
        return cls((), (), np.asarray(float(value)), heterogeneous)

    @property
    def size(self) -> int:
        """Number of cells: the product of the scope cardinalities."""
        return math.prod(self.cards)

    @property
    def flat(self) -> np.ndarray:
        """Row-major values, last scope variable varying fastest."""
        return self.values.reshape(-1)

    def card_of(self, v: int) -> int:
        return self.cards[self.scope.index(v)]

    def retag(self, heterogeneous: bool) -> "Factor":
        return Factor(self.scope, self.cards, self.values, heterogeneous)

    def relabel(self, mapping: Mapping[int, int]) -> "Factor":
        """Rename scope variables; unmapped ids are kept."""
        return Factor.from_axes([mapping.get(v, v) for v in self.scope], self.cards,
                                self.values, self.heterogeneous)

    def allclose(self, other: "Factor", atol: float = 1e-12) -> bool:
        return (self.scope == other.scope and self.cards == other.cards
                and bool(np.allclose(self.values, other.values, rtol=0.0, atol=atol)))

    def __repr__(self):
        kind = "het" if self.heterogeneous else "hom"
        return f"Factor({kind}, scope={self.scope}, cards={self.cards})"


@dataclass(frozen=True)
class ConvergentContext:
    """Base operators of the convergent variables of the network under inference.

    ``convergent`` defaults to the keys of ``ops``; listing a variable there
    without an operator is a configuration error detected at combination time.
    """

    ops: Mapping[int, BaseOp] = field(default_factory=dict)
    convergent: frozenset = None

    def __post_init__(self):
        object.__setattr__(self, "ops", dict(self.ops))
        conv = frozenset(self.ops) if self.convergent is None else frozenset(self.convergent)
        object.__setattr__(self, "convergent", conv | frozenset(self.ops))

    def __contains__(self, v):
        return v in self.convergent

    def op(self, v: int) -> BaseOp:
        try:
            return self.ops[v]
        except KeyError:
            raise ConfigurationError(f"convergent variable {v} has no base operator") from None


def union_scope(f: Factor, g: Factor) -> tuple[tuple[int, ...], tuple[int, ...]]:
    cards = dict(zip(f.scope, f.cards))
    for v, c in zip(g.scope, g.cards):
        if cards.setdefault(v, c) != c:
            raise UsageError(f"variable {v} has cardinality {cards[v]} and {c}")
    scope = tuple(sorted(cards))
    return scope, tuple(cards[v] for v in scope)


def _aligned(f: Factor, scope: Sequence[int]) -> np.ndarray:
    present = set(f.scope)
    shape = [f.card_of(v) if v in present else 1 for v in scope]
    return f.values.reshape(shape)


def multiply(f: Factor, g: Factor) -> Factor:
    """Pointwise product over the union of the scopes."""
    scope, cards = union_scope(f, g)
    values = _aligned(f, scope) * _aligned(g, scope)
    return Factor(scope, cards, np.broadcast_to(values, cards).copy(),
                  f.heterogeneous or g.heterogeneous)


def combine_general(f: Factor, g: Factor, ctx: ConvergentContext) -> Factor:
    """Heterogeneous combination of ``f`` and ``g``.

    For each convergent variable ``e`` in both scopes the result at ``e=a``
    sums ``f(e=a1) g(e=a2)`` over all pairs with ``op_e(a1, a2) == a``,
    jointly over all such variables. With no shared convergent variable this
    is exactly :func:`multiply`.
    """
    scope, cards = union_scope(f, g)
    shared = [v for v in f.scope if v in ctx and v in g.scope]
    if not shared:
        return multiply(f, g).retag(True)
    n = len(scope)
    if n + 2 * len(shared) > _MAX_LABELS:
        raise ResourceBoundError(f"combination over {n} variables exceeds the kernel's axis limit")
    label = {v: i for i, v in enumerate(scope)}
    f_lab = {v: label[v] for v in f.scope}
    g_lab = {v: label[v] for v in g.scope}
    operands = []
    for i, v in enumerate(shared):
        f_lab[v], g_lab[v] = n + 2 * i, n + 2 * i + 1
        operands += [ctx.op(v).indicator(f.card_of(v)), [f_lab[v], g_lab[v], label[v]]]
    values = np.einsum(f.values, [f_lab[v] for v in f.scope],
                       g.values, [g_lab[v] for v in g.scope],
                       *operands, list(range(n)), optimize=len(shared) > 1)
    return Factor(scope, cards, values, True)


def multiply_all(factors: Iterable[Factor]) -> Factor:
    out = None
    for f in factors:
        out = f if out is None else multiply(out, f)
    return Factor.scalar() if out is None else out


def combine_all(factors: Iterable[Factor], ctx: ConvergentContext) -> Factor:
    out = None
    for f in factors:
        out = f if out is None else combine_general(out, f, ctx)
    return Factor.scalar(heterogeneous=True) if out is None else out


def sum_out(f: Factor, v: int) -> Factor:
    if v not in f.scope:
        raise UsageError(f"variable {v} not in scope {f.scope}")
    i = f.scope.index(v)
    return Factor(f.scope[:i] + f.scope[i + 1:], f.cards[:i] + f.cards[i + 1:],
                  f.values.sum(axis=i), f.heterogeneous)


def restrict(f: Factor, v: int, val: int, drop: bool = True) -> Factor:
    """Condition ``f`` on ``v = val``.

    With ``drop`` the axis of ``v`` is sliced away; otherwise it is kept and
    every cell with ``v != val`` is zeroed.
    """
    if v not in f.scope:
        raise UsageError(f"variable {v} not in scope {f.scope}")
    i = f.scope.index(v)
    if not 0 <= val < f.cards[i]:
        raise UsageError(f"value {val} out of range for variable {v} (cardinality {f.cards[i]})")
    if drop:
        return Factor(f.scope[:i] + f.scope[i + 1:], f.cards[:i] + f.cards[i + 1:],
                      np.take(f.values, val, axis=i), f.heterogeneous)
    mask = np.zeros(f.cards[i])
    mask[val] = 1.0
    shape = [1] * len(f.scope)
    shape[i] = f.cards[i]
    return Factor(f.scope, f.cards, f.values * mask.reshape(shape), f.heterogeneous)


def dump(f: Factor, names: Mapping[int, str] | Sequence[str] | None = None) -> str:
    """Text dump: one header line with the scope, then values at 17 significant digits."""
    def name(v):
        return str(v) if names is None else str(names[v])

    head = " ".join(f"{name(v)}:{c}" for v, c in zip(f.scope, f.cards))
    tag = "heterogeneous" if f.heterogeneous else "homogeneous"
    lines = [f"factor {tag} [{head}]"]
    lines += [format(float(x), ".17g") for x in f.flat]
    return "\n".join(lines) + "\n"
