"""Truth of closed formulas in finite structures, and the brute-force model oracle.

Quantifiers range over the carrier; a bounded quantifier over ``t`` ranges
over the carrier elements that are members of ``t``. Literals do not look at
the carrier at all.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

from .formula import (
    And, Eq, Formula, Mem, NotClosed, NotEq, NotMem, Or, Quantifier, Term,
    instantiate,
)
from .hfset import (
    HFSet, Structure, extensional_witness, is_transitive, make, nat, render_set,
)

__all__ = [
    "SeedConfig",
    "SeedNotContained",
    "OracleTooLarge",
    "Evaluator",
    "eval_formula",
    "find_submodel",
    "truth_in_sequent",
    "ORACLE_CEILING",
]

ORACLE_CEILING = 22


class SeedNotContained(ValueError):
    pass


class OracleTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class SeedConfig:
    """The finite stand-in for ``omega`` plus the real parameter.

    ``k`` naturals ``0..k-1`` and the set ``r`` of some of them.
    """

    k: int
    r: HFSet

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be at least 2 so the tags 0 and 1 exist")
        naturals = {nat(j) for j in range(self.k)}
        for e in self.r.elements:
            if e not in naturals:
                raise ValueError(f"r may only contain naturals below k={self.k}, got {render_set(e)}")

    @classmethod
    def from_naturals(cls, k: int, r: Sequence[int] = ()) -> "SeedConfig":
        return cls(k, make(nat(j) for j in r))

    @cached_property
    def seed_set(self) -> tuple[HFSet, ...]:
        """``{0, ..., k-1} | {r}`` in canonical order."""
        return Structure.of([nat(j) for j in range(self.k)] + [self.r]).carrier

    @property
    def r_naturals(self) -> list[int]:
        return sorted(j for j in range(self.k) if nat(j) in self.r.members)

    def check_transitive(self) -> bool:
        return is_transitive(self.seed_set)

    def describe(self) -> dict:
        return {"k": self.k, "r": self.r_naturals}


class Evaluator:
    """Memoized satisfaction for one structure.

    The memo key is the formula together with the values of its free
    variables in the current environment.
    """

    def __init__(self, M: Structure | Sequence[HFSet]):
        self.carrier = tuple(M.carrier if isinstance(M, Structure) else Structure.of(M).carrier)
        self._memo: dict = {}
        self._free_order: dict[Formula, tuple[str, ...]] = {}

    def __call__(self, phi: Formula) -> bool:
        if phi.free:
            raise NotClosed(f"cannot evaluate a formula with free variables {sorted(phi.free)}")
        return self._eval(phi, {})

    def _key(self, phi: Formula, env: dict) -> tuple:
        order = self._free_order.get(phi)
        if order is None:
            order = tuple(sorted(phi.free))
            self._free_order[phi] = order
        return (phi, *[env[v] for v in order])

    def _domain(self, q: Quantifier, env: dict) -> tuple[HFSet, ...]:
        if not q.bounded:
            return self.carrier
        bound = _denote(q.bound, env)
        return tuple(a for a in self.carrier if a in bound.members)

    def _eval(self, phi: Formula, env: dict) -> bool:
        cls = type(phi)
        test = _LITERAL_TESTS.get(cls)
        if test is not None:
            a, b = phi.args
            if a.__class__ is str:
                a = _denote(a, env)
            if b.__class__ is str:
                b = _denote(b, env)
            return test(a, b)
        if cls is And or cls is Or:
            left, right = phi.args
            # cheap literal operand first; the connectives are commutative
            if type(right) in _LITERAL_TESTS and type(left) not in _LITERAL_TESTS:
                left, right = right, left
            if cls is And:
                return self._eval(left, env) and self._eval(right, env)
            return self._eval(left, env) or self._eval(right, env)
        key = self._key(phi, env)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        var, body = phi.var, phi.body
        inner = dict(env)
        value = phi.universal
        for a in self._domain(phi, env):
            inner[var] = a
            if self._eval(body, inner) is not value:
                value = not value
                break
        self._memo[key] = value
        return value


_LITERAL_TESTS = {
    Mem: lambda a, b: a in b.members,
    NotMem: lambda a, b: a not in b.members,
    Eq: lambda a, b: a is b,
    NotEq: lambda a, b: a is not b,
}


def _denote(t: Term, env: dict) -> HFSet:
    if isinstance(t, HFSet):
        return t
    try:
        return env[t]
    except KeyError:
        raise NotClosed(f"unbound variable {t!r}") from None


def eval_formula(M: Structure | Sequence[HFSet], phi: Formula) -> bool:
    """Truth of the closed formula ``phi`` in ``(M, in)``."""
    return Evaluator(M)(phi)


def truth_in_sequent(M: Structure | Evaluator, gamma: Sequence[Formula]) -> int | None:
    """Index of the first formula of ``gamma`` true in ``M``, or None."""
    ev = M if isinstance(M, Evaluator) else Evaluator(M)
    for i, phi in enumerate(gamma):
        if ev(phi):
            return i
    return None


def find_submodel(
    M: Structure,
    seeds: SeedConfig,
    psi: Formula,
    allow_large: bool = False,
) -> Structure | None:
    """Least extensional ``S <= N <= M`` with ``(N, in) |= psi(r)``.

    Candidates are enumerated by size and then in canonical lexicographic
    order of their carriers, so the answer is a smallest model.
    """
    seed_set = seeds.seed_set
    pool = M.members
    missing = [s for s in seed_set if s not in pool]
    if missing:
        raise SeedNotContained(f"seed {render_set(missing[0])} is not in the universe")
    if len(M) > ORACLE_CEILING and not allow_large:
        raise OracleTooLarge(f"|M| = {len(M)} exceeds the oracle ceiling {ORACLE_CEILING}")
    target = instantiate(psi, seeds.r)
    seed_members = frozenset(seed_set)
    extra = [a for a in M.carrier if a not in seed_members]
    for size in range(len(extra) + 1):
        for combo in itertools.combinations(extra, size):
            candidate = Structure(seed_set + combo)
            if extensional_witness(candidate) is not None:
                continue
            if Evaluator(candidate)(target):
                return candidate
    return None

