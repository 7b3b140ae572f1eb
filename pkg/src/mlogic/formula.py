"""First-order set-theory formulas in negation normal form.

Terms are plain values: a ``str`` is a variable, an :class:`HFSet` is a
constant. Formula nodes are interned like HF sets, so structural equality is
object identity and formulas are cheap dictionary keys.

Negation only exists on literals. The parser compiles ``!``, ``->`` and
``<->`` away through :func:`negate`.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Union

from .hfset import HFSet

__all__ = [
    "Term",
    "Formula",
    "Literal",
    "Mem",
    "NotMem",
    "Eq",
    "NotEq",
    "And",
    "Or",
    "Quantifier",
    "Forall",
    "Exists",
    "ForallIn",
    "ExistsIn",
    "NotLiteral",
    "NotClosed",
    "NotNNF",
    "Complexity",
    "negate",
    "substitute",
    "instantiate",
    "WrongArity",
    "subformulas",
    "is_instance_of_subformula",
    "SubformulaIndex",
    "classify",
    "height",
    "eval_literal",
    "denote",
    "extensionality",
]

Term = Union[str, HFSet]


class NotLiteral(TypeError):
    pass


class NotClosed(ValueError):
    pass


class NotNNF(TypeError):
    pass


class WrongArity(ValueError):
    pass


_table: dict[tuple, "Formula"] = {}
_table_lock = threading.Lock()


def _term_ok(t) -> bool:
    return isinstance(t, HFSet) or (isinstance(t, str) and t.isidentifier())


class Formula:
    """Base class of all formula nodes. Instances are interned and immutable."""

    __slots__ = ("args", "free", "__weakref__")
    kind: str = ""

    args: tuple
    free: frozenset

    def __new__(cls, *args):
        args = cls._normalize(args)
        key = (cls, *args)
        found = _table.get(key)
        if found is not None:
            return found
        self = object.__new__(cls)
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "free", cls._free(args))
        with _table_lock:
            return _table.setdefault(key, self)

    @classmethod
    def _normalize(cls, args: tuple) -> tuple:
        return args

    @classmethod
    def _free(cls, args: tuple) -> frozenset:
        raise NotImplementedError

    def __setattr__(self, name, value):
        raise AttributeError("formulas are immutable")

    # interning makes identity the equality; the default identity hash and
    # eq are also much faster than Python-level methods on this hot path

    def __reduce__(self):
        return (type(self), self.args)

    @property
    def closed(self) -> bool:
        return not self.free

    def __repr__(self) -> str:
        from .parser import render

        return f"{type(self).__name__}<{render(self)}>"

    def __str__(self) -> str:
        from .parser import render

        return render(self)


class Literal(Formula):
    __slots__ = ()
    positive: bool = True

    @classmethod
    def _normalize(cls, args):
        if len(args) != 2 or not all(_term_ok(t) for t in args):
            raise TypeError(f"{cls.__name__} takes two terms (str variable or HFSet constant)")
        return args

    @classmethod
    def _free(cls, args):
        return frozenset(t for t in args if isinstance(t, str))

    @property
    def left(self) -> Term:
        return self.args[0]

    @property
    def right(self) -> Term:
        return self.args[1]


class Mem(Literal):
    __slots__ = ()
    kind = "mem"


class NotMem(Literal):
    __slots__ = ()
    kind = "not_mem"
    positive = False


class Eq(Literal):
    __slots__ = ()
    kind = "eq"


class NotEq(Literal):
    __slots__ = ()
    kind = "not_eq"
    positive = False


class _Binary(Formula):
    __slots__ = ()

    @classmethod
    def _normalize(cls, args):
        if len(args) != 2 or not all(isinstance(p, Formula) for p in args):
            raise TypeError(f"{cls.__name__} takes two formulas")
        return args

    @classmethod
    def _free(cls, args):
        return args[0].free | args[1].free

    @property
    def left(self) -> Formula:
        return self.args[0]

    @property
    def right(self) -> Formula:
        return self.args[1]


class And(_Binary):
    __slots__ = ()
    kind = "and"


class Or(_Binary):
    __slots__ = ()
    kind = "or"


def _binders(phi: Formula) -> set[str]:
    out: set[str] = set()
    stack = [phi]
    while stack:
        f = stack.pop()
        if isinstance(f, Quantifier):
            out.add(f.var)
            stack.append(f.body)
        elif isinstance(f, _Binary):
            stack.extend(f.args)
    return out


def _all_names(phi: Formula) -> set[str]:
    names = _binders(phi)
    for f in subformulas(phi):
        if isinstance(f, Literal):
            names.update(t for t in f.args if isinstance(t, str))
        elif isinstance(f, (ForallIn, ExistsIn)) and isinstance(f.bound, str):
            names.add(f.bound)
    return names


def _fresh(base: str, taken: set[str]) -> str:
    stem = base.rstrip("0123456789") or base
    i = 1
    while f"{stem}{i}" in taken:
        i += 1
    return f"{stem}{i}"


def _rename_free(phi: Formula, old: str, new: str) -> Formula:
    """Rename free occurrences of ``old`` to the variable ``new``."""
    if old not in phi.free:
        return phi
    if isinstance(phi, Literal):
        return type(phi)(*(new if t == old else t for t in phi.args))
    if isinstance(phi, _Binary):
        return type(phi)(_rename_free(phi.left, old, new), _rename_free(phi.right, old, new))
    if isinstance(phi, (ForallIn, ExistsIn)):
        bound = new if phi.bound == old else phi.bound
        return type(phi)(phi.var, bound, _rename_free(phi.body, old, new))
    return type(phi)(phi.var, _rename_free(phi.body, old, new))


def _rename_apart(var: str, body: Formula) -> Formula:
    """Rename every inner binder of ``var`` inside ``body`` to a fresh name."""
    if var not in _binders(body):
        return body
    taken = _all_names(body) | {var}

    def walk(f: Formula) -> Formula:
        if isinstance(f, Literal):
            return f
        if isinstance(f, _Binary):
            return type(f)(walk(f.left), walk(f.right))
        inner = walk(f.body)
        if f.var != var:
            return f.rebuild(inner)
        new = _fresh(var, taken)
        taken.add(new)
        renamed = _rename_free(inner, var, new)
        if isinstance(f, (ForallIn, ExistsIn)):
            return type(f)(new, f.bound, renamed)
        return type(f)(new, renamed)

    return walk(body)


class Quantifier(Formula):
    __slots__ = ()
    universal: bool = True
    bounded: bool = False

    @classmethod
    def _normalize(cls, args):
        if len(args) != 2 or not isinstance(args[0], str) or not isinstance(args[1], Formula):
            raise TypeError(f"{cls.__name__} takes a variable name and a formula")
        var, body = args
        if not var.isidentifier():
            raise ValueError(f"bad variable name {var!r}")
        return (var, _rename_apart(var, body))

    @classmethod
    def _free(cls, args):
        return args[1].free - {args[0]}

    @property
    def var(self) -> str:
        return self.args[0]

    @property
    def body(self) -> Formula:
        return self.args[-1]

    def rebuild(self, body: Formula) -> "Quantifier":
        return type(self)(self.var, body)

    def instance(self, a: HFSet) -> Formula:
        """The body with the bound variable replaced by the constant ``a``."""
        return substitute(self.body, self.var, a)


class Forall(Quantifier):
    __slots__ = ()
    kind = "forall"


class Exists(Quantifier):
    __slots__ = ()
    kind = "exists"
    universal = False


class _BoundedQuantifier(Quantifier):
    __slots__ = ()
    bounded = True

    @classmethod
    def _normalize(cls, args):
        if len(args) != 3 or not isinstance(args[0], str) or not _term_ok(args[1]) or not isinstance(args[2], Formula):
            raise TypeError(f"{cls.__name__} takes a variable, a bounding term and a formula")
        var, bound, body = args
        if bound == var:
            raise ValueError(f"variable {var!r} cannot bound itself")
        return (var, bound, _rename_apart(var, body))

    @classmethod
    def _free(cls, args):
        var, bound, body = args
        extra = {bound} if isinstance(bound, str) else set()
        return (body.free - {var}) | extra

    @property
    def bound(self) -> Term:
        return self.args[1]

    def rebuild(self, body: Formula) -> "Quantifier":
        return type(self)(self.var, self.bound, body)


class ForallIn(_BoundedQuantifier):
    __slots__ = ()
    kind = "forall_in"


class ExistsIn(_BoundedQuantifier):
    __slots__ = ()
    kind = "exists_in"
    universal = False


_DUAL = {Mem: NotMem, NotMem: Mem, Eq: NotEq, NotEq: Eq, And: Or, Or: And,
         Forall: Exists, Exists: Forall, ForallIn: ExistsIn, ExistsIn: ForallIn}


@lru_cache(maxsize=1 << 16)
def negate(phi: Formula) -> Formula:
    """NNF negation: de Morgan through connectives and quantifiers."""
    cls = type(phi)
    dual = _DUAL.get(cls)
    if dual is None:
        raise NotNNF(f"not an NNF formula: {phi!r}")
    if isinstance(phi, Literal):
        return dual(*phi.args)
    if isinstance(phi, _Binary):
        return dual(negate(phi.left), negate(phi.right))
    if isinstance(phi, _BoundedQuantifier):
        return dual(phi.var, phi.bound, negate(phi.body))
    return dual(phi.var, negate(phi.body))


@lru_cache(maxsize=1 << 18)
def substitute(phi: Formula, v: str, a: HFSet) -> Formula:
    """Replace the free occurrences of variable ``v`` by the constant ``a``."""
    if v not in phi.free:
        return phi
    if isinstance(phi, Literal):
        return type(phi)(*(a if t == v else t for t in phi.args))
    if isinstance(phi, _Binary):
        return type(phi)(substitute(phi.left, v, a), substitute(phi.right, v, a))
    if isinstance(phi, _BoundedQuantifier):
        bound = a if phi.bound == v else phi.bound
        return type(phi)(phi.var, bound, substitute(phi.body, v, a))
    return type(phi)(phi.var, substitute(phi.body, v, a))


def instantiate(psi: Formula, r: HFSet) -> Formula:
    """``psi(r)``: the one free variable of ``psi`` (if any) replaced by ``r``."""
    if len(psi.free) > 1:
        raise WrongArity(f"psi may have at most one free variable, found {sorted(psi.free)}")
    if not psi.free:
        return psi
    (v,) = psi.free
    return substitute(psi, v, r)


def subformulas(phi: Formula) -> Iterator[Formula]:
    """Pre-order walk over all subformulas, ``phi`` first."""
    stack = [phi]
    while stack:
        f = stack.pop()
        yield f
        if isinstance(f, _Binary):
            stack.append(f.right)
            stack.append(f.left)
        elif isinstance(f, Quantifier):
            stack.append(f.body)


def _match(pattern: Formula, target: Formula, binding: dict, bound: frozenset) -> bool:
    """Structural match where free pattern variables bind consistently to constants."""
    if pattern is target and not (pattern.free - bound):
        return True
    if type(pattern) is not type(target):
        return False

    def term(p, t) -> bool:
        if isinstance(p, str) and p not in bound:
            if not isinstance(t, HFSet):
                return False
            seen = binding.get(p)
            if seen is None:
                binding[p] = t
                return True
            return seen is t
        return p == t

    if isinstance(pattern, Literal):
        return term(pattern.left, target.left) and term(pattern.right, target.right)
    if isinstance(pattern, _Binary):
        return (_match(pattern.left, target.left, binding, bound)
                and _match(pattern.right, target.right, binding, bound))
    if pattern.var != target.var:
        return False
    if isinstance(pattern, _BoundedQuantifier) and not term(pattern.bound, target.bound):
        return False
    return _match(pattern.body, target.body, binding, bound | {pattern.var})


class SubformulaIndex:
    """Subformulas of a fixed list of roots, bucketed by node type for matching."""

    def __init__(self, roots: Iterable[Formula]):
        self.roots = tuple(roots)
        self._buckets: dict[type, list[Formula]] = {}
        seen: set[Formula] = set()
        for root in self.roots:
            for f in subformulas(root):
                if f not in seen:
                    seen.add(f)
                    self._buckets.setdefault(type(f), []).append(f)
        self._cache: dict[Formula, bool] = {}

    def __contains__(self, phi: Formula) -> bool:
        hit = self._cache.get(phi)
        if hit is None:
            hit = any(_match(p, phi, {}, frozenset()) for p in self._buckets.get(type(phi), ()))
            self._cache[phi] = hit
        return hit


def is_instance_of_subformula(phi: Formula, roots: Iterable[Formula] | SubformulaIndex) -> bool:
    """True iff closed ``phi`` is a subformula of a root with its free variables made constant."""
    if phi.free:
        raise NotClosed(f"expected a closed formula: {phi}")
    index = roots if isinstance(roots, SubformulaIndex) else SubformulaIndex(roots)
    return phi in index


@dataclass(frozen=True)
class Complexity:
    """Formula complexity.

    ``sigma_level``/``pi_level`` are the least n with the formula in Sigma_n
    (resp. Pi_n), counting blocks of unbounded quantifiers; bounded
    quantifiers are transparent. ``liberal_sigma`` holds when every universal
    quantifier is bounded, ``liberal_pi`` when every existential one is.
    """

    sigma_level: int
    pi_level: int
    liberal_sigma: bool
    liberal_pi: bool

    @property
    def delta0(self) -> bool:
        return self.sigma_level == 0

    @property
    def kind(self) -> str:
        """One of ``Δ0``, ``Σ``, ``Π``; ``Δ`` when the least levels coincide."""
        if self.delta0:
            return "Δ0"
        if self.sigma_level < self.pi_level:
            return "Σ"
        if self.pi_level < self.sigma_level:
            return "Π"
        return "Δ"

    @property
    def n(self) -> int:
        return min(self.sigma_level, self.pi_level)

    def __str__(self) -> str:
        return self.kind if self.delta0 else f"{self.kind}{self.n}"


def _levels(phi: Formula) -> tuple[int, int, bool, bool]:
    if isinstance(phi, Literal):
        return 0, 0, True, True
    if isinstance(phi, _Binary):
        s0, p0, ls0, lp0 = _levels(phi.left)
        s1, p1, ls1, lp1 = _levels(phi.right)
        return max(s0, s1), max(p0, p1), ls0 and ls1, lp0 and lp1
    if isinstance(phi, Quantifier):
        s, p, ls, lp = _levels(phi.body)
        if phi.bounded:
            return s, p, ls, lp
        if phi.universal:
            p = max(1, p)
            return p + 1, p, False, lp
        s = max(1, s)
        return s, s + 1, ls, False
    raise NotNNF(f"not an NNF formula: {phi!r}")


def classify(phi: Formula) -> Complexity:
    sigma, pi, liberal_sigma, liberal_pi = _levels(phi)
    return Complexity(sigma, pi, liberal_sigma, liberal_pi)


def height(phi: Formula) -> int:
    if isinstance(phi, Literal):
        return 0
    if isinstance(phi, _Binary):
        return 1 + max(height(phi.left), height(phi.right))
    if isinstance(phi, Quantifier):
        return 1 + height(phi.body)
    raise NotNNF(f"not an NNF formula: {phi!r}")


def denote(t: Term, env: dict | None = None) -> HFSet:
    if isinstance(t, HFSet):
        return t
    if env is not None and t in env:
        return env[t]
    raise NotClosed(f"unbound variable {t!r}")


def eval_literal(phi: Formula) -> bool:
    """Truth of a closed literal; membership and equality are absolute."""
    if not isinstance(phi, Literal):
        raise NotLiteral(f"not a literal: {phi}")
    if phi.free:
        raise NotClosed(f"literal has free variables {sorted(phi.free)}: {phi}")
    a, b = phi.args
    if isinstance(phi, Mem):
        return a in b.members
    if isinstance(phi, NotMem):
        return a not in b.members
    if isinstance(phi, Eq):
        return a is b
    return a is not b


def extensionality() -> Formula:
    """``A x. A y. (A z. (z in x <-> z in y)) -> x = y`` in NNF."""
    same = And(Or(NotMem("z", "x"), Mem("z", "y")), Or(NotMem("z", "y"), Mem("z", "x")))
    return Forall("x", Forall("y", Or(negate(Forall("z", same)), Eq("x", "y"))))
