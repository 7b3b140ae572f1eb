"""Well-foundedness and induction on finite relations.

A pair ``(y, x)`` in a relation means ``y < x``. Domain order is the
canonical order for every "least" answer.
"""

from __future__ import annotations

import graphlib
import itertools
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

__all__ = [
    "FiniteRelation",
    "DomainTooLarge",
    "EmptyY",
    "NAIVE_LIMIT",
    "wf_naive",
    "wf_fast",
    "check_induction_instance",
    "product_lift",
    "end_extension_order",
]

NAIVE_LIMIT = 15


class DomainTooLarge(ValueError):
    pass


class EmptyY(ValueError):
    pass


@dataclass(frozen=True)
class FiniteRelation:
    domain: tuple
    pairs: frozenset

    def __post_init__(self):
        dom = tuple(dict.fromkeys(self.domain))
        object.__setattr__(self, "domain", dom)
        pairs = frozenset(self.pairs)
        members = set(dom)
        for y, x in pairs:
            if y not in members or x not in members:
                raise ValueError(f"pair {(y, x)!r} leaves the domain")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def of(cls, domain: Iterable[Hashable], pairs: Iterable[tuple]) -> "FiniteRelation":
        return cls(tuple(domain), frozenset(pairs))

    def predecessors(self) -> dict:
        preds: dict = {x: [] for x in self.domain}
        pos = {x: i for i, x in enumerate(self.domain)}
        for y, x in sorted(self.pairs, key=lambda p: (pos[p[1]], pos[p[0]])):
            preds[x].append(y)
        return preds


def wf_naive(R: FiniteRelation) -> bool | frozenset:
    """Every non-empty subset has a minimal element, checked subset by subset.

    Returns True, or the least counterexample subset (by size, then
    lexicographically in domain order).
    """
    n = len(R.domain)
    if n > NAIVE_LIMIT:
        raise DomainTooLarge(f"{n} elements exceeds the limit {NAIVE_LIMIT} for subset enumeration")
    pos = {x: i for i, x in enumerate(R.domain)}
    below = [0] * n
    for y, x in R.pairs:
        below[pos[x]] |= 1 << pos[y]
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            w = 0
            for i in combo:
                w |= 1 << i
            if not any(below[i] & w == 0 for i in combo):
                return frozenset(R.domain[i] for i in combo)
    return True


def wf_fast(R: FiniteRelation) -> bool | list:
    """Acyclicity test; returns True or a cycle ``[a, ..., a]``."""
    sorter = graphlib.TopologicalSorter(R.predecessors())
    try:
        sorter.prepare()
    except graphlib.CycleError as err:
        return list(err.args[1])
    return True


def check_induction_instance(R: FiniteRelation, P: Mapping[Hashable, bool]) -> bool | Hashable:
    """One instance of induction along ``R`` for the predicate table ``P``.

    If ``P`` is progressive (``P`` holds at ``x`` whenever it holds below
    ``x``) then ``P`` must hold everywhere. Returns True when the instance
    holds, otherwise the least element where a progressive ``P`` fails.
    """
    preds = R.predecessors()
    progressive = all(P[x] or not all(P[y] for y in preds[x]) for x in R.domain)
    if not progressive:
        return True
    for x in R.domain:
        if not P[x]:
            return x
    return True


def product_lift(R: FiniteRelation, Y: Sequence[Hashable]) -> FiniteRelation:
    """Order ``domain x Y`` by the first coordinate: ``(x, y) < (x', y')`` iff ``x < x'``."""
    ys = tuple(dict.fromkeys(Y))
    if not ys:
        raise EmptyY("the second factor must be non-empty")
    domain = tuple((x, y) for x in R.domain for y in ys)
    pairs = frozenset(((a, y), (b, y2)) for a, b in R.pairs for y in ys for y2 in ys)
    return FiniteRelation(domain, pairs)


def end_extension_order(nodes: Iterable[Sequence]) -> FiniteRelation:
    """``s < t`` iff ``t`` is a proper prefix of ``s``."""
    domain = tuple(dict.fromkeys(tuple(s) for s in nodes))
    present = set(domain)
    pairs = set()
    for s in domain:
        for n in range(len(s)):
            if s[:n] in present:
                pairs.add((s, s[:n]))
    return FiniteRelation(domain, frozenset(pairs))
