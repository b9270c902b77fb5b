"""Base combination operators for convergent variables.

Values of a convergent variable are handled as indices ``0..d-1``; an
operator is materialised as a ``d x d`` integer table mapping a pair of
contribution values onto the combined value.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import itertools

import numpy as np

from .errors import ConfigurationError

OP_KINDS = ("or", "and", "max", "sum", "custom")


@dataclass(frozen=True, eq=False)
class BaseOp:
    """An associative, commutative operator on value indices.

    ``kind`` is one of ``or``, ``and``, ``max``, ``sum`` (saturating at
    ``d-1``) or ``custom``; ``custom_table`` is required for the last.
    """

    kind: str
    custom_table: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if self.kind not in OP_KINDS:
            raise ConfigurationError(f"unknown base operator {self.kind!r}")
        if self.kind == "custom":
            if self.custom_table is None:
                raise ConfigurationError("custom base operator needs a table")
            table = tuple(tuple(int(v) for v in row) for row in self.custom_table)
            object.__setattr__(self, "custom_table", table)
        elif self.custom_table is not None:
            raise ConfigurationError(f"{self.kind!r} operator takes no table")

    def __eq__(self, other):
        if not isinstance(other, BaseOp):
            return NotImplemented
        return self.kind == other.kind and self.custom_table == other.custom_table

    def __hash__(self):
        return hash((self.kind, self.custom_table))

    def __repr__(self):
        if self.kind == "custom":
            return f"BaseOp('custom', {self.custom_table!r})"
        return f"BaseOp({self.kind!r})"

    def problems(self, d: int) -> list[str]:
        """Reasons this operator is unusable on ``d`` values (empty if fine)."""
        if self.kind in ("or", "and") and d != 2:
            return [f"{self.kind} operator requires cardinality 2, got {d}"]
        if self.kind != "custom":
            return []
        t = self.custom_table
        if len(t) != d or any(len(row) != d for row in t):
            return [f"custom table must be {d}x{d}"]
        if any(not 0 <= v < d for row in t for v in row):
            return [f"custom table entries must lie in 0..{d - 1}"]
        out = []
        rng = range(d)
        if any(t[a][b] != t[b][a] for a in rng for b in rng):
            out.append("custom operator is not commutative")
        if any(t[t[a][b]][c] != t[a][t[b][c]] for a, b, c in itertools.product(rng, repeat=3)):
            out.append("custom operator is not associative")
        return out

    def table(self, d: int) -> np.ndarray:
        """The ``d x d`` result table; raises if the operator does not apply."""
        return _table(self, d)

    def indicator(self, d: int) -> np.ndarray:
        """0/1 tensor ``C[a1, a2, a] = [op(a1, a2) == a]`` of shape ``(d, d, d)``."""
        return _indicator(self, d)

    def apply(self, a: int, b: int, d: int) -> int:
        return int(self.table(d)[a, b])


@lru_cache(maxsize=None)
def _table(op: BaseOp, d: int) -> np.ndarray:
    bad = op.problems(d)
    if bad:
        raise ConfigurationError(bad[0])
    i, j = np.indices((d, d))
    if op.kind == "or":
        t = i | j
    elif op.kind == "and":
        t = i & j
    elif op.kind == "max":
        t = np.maximum(i, j)
    elif op.kind == "sum":
        t = np.minimum(i + j, d - 1)
    else:
        t = np.array(op.custom_table, dtype=np.int64)
    t = t.astype(np.int64)
    t.setflags(write=False)
    return t


@lru_cache(maxsize=None)
def _indicator(op: BaseOp, d: int) -> np.ndarray:
    t = _table(op, d)
    c = np.zeros((d, d, d))
    i, j = np.indices((d, d))
    c[i, j, t] = 1.0
    c.setflags(write=False)
    return c


OR = BaseOp("or")
AND = BaseOp("and")
MAX = BaseOp("max")
SUM = BaseOp("sum")
